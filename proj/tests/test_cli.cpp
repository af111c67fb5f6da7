#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(MECORCH_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("mecorch_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }

  fs::path dir;
};

const std::string kPresets = MECORCH_PRESETS_DIR;

std::string constant_trace(std::size_t n, double u) {
  std::string s = "host_id,timestamp,cpu,mem,storage\n";
  for (std::size_t k = 0; k < n; ++k) s += "c1," + std::to_string(k) + "," + std::to_string(u) + "," +
                                           std::to_string(u) + "," + std::to_string(u) + "\n";
  return s;
}

}  // namespace

TEST_F(Cli, HelpExitsZero) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("simulate --help").code, 0);
}

TEST_F(Cli, UnknownFlagExitsTwo) { EXPECT_EQ(cli("simulate --bogus").code, 2); }

TEST_F(Cli, MissingConfigExitsTwo) { EXPECT_EQ(cli("simulate -c " + path("nope.json") + " -o " + path("o")).code, 2); }

TEST_F(Cli, InvalidConfigExitsTwo) {
  spit(dir / "bad.json", R"({"duration_s": -5, "hosts": []})");
  EXPECT_EQ(cli("simulate -c " + path("bad.json") + " -o " + path("o")).code, 2);
}

TEST_F(Cli, MalformedTraceExitsTwo) {
  spit(dir / "bad.csv", "host_id,timestamp,cpu,mem,storage\nh1,0,abc,0.1,0.1\n");
  EXPECT_EQ(cli("predict -t " + path("bad.csv") + " -o " + path("o")).code, 2);
}

TEST_F(Cli, ShortTraceExitsTwo) {
  spit(dir / "short.csv", constant_trace(20, 0.4));
  EXPECT_EQ(cli("predict -t " + path("short.csv") + " -o " + path("o")).code, 2);
}

TEST_F(Cli, ReplayWithUnknownHostExitsTwo) {
  spit(dir / "m.csv", constant_trace(100, 0.4));
  EXPECT_EQ(cli("replay -m " + path("m.csv") + " -c " + kPresets + "/scenario2.json").code, 2);
}

TEST_F(Cli, TopsisMatchesReference) {
  spit(dir / "m.csv",
       "id,availability,latency,bandwidth,distance\n"
       "a,0.9,40,80,1200\nb,0.6,25,100,300\nc,0.75,30,50,800\nd,0.3,60,120,100\n");
  auto r = cli("topsis -m " + path("m.csv"));
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  const double expected[] = {0.54337349041746037066, 0.66733732048083376412, 0.58603406484502633238,
                             0.43514417271426653088};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(j["closeness"][i].get<double>(), expected[i], 1e-9);
  EXPECT_EQ(j["selected"], "b");
  EXPECT_EQ(j["order"], json({"b", "c", "a", "d"}));
  EXPECT_EQ(j["weights_source"], "default");
}

TEST_F(Cli, TopsisCustomWeights) {
  spit(dir / "m.csv", "id,x,y\np,1,5\nq,2,5\n");
  spit(dir / "w.json", R"({"weights": {"x": 1, "y": 0}, "directions": {"x": "benefit", "y": "cost"}})");
  auto r = cli("topsis -m " + path("m.csv") + " -w " + path("w.json"));
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["selected"], "q");
  EXPECT_EQ(j["weights_source"], path("w.json"));
  EXPECT_EQ(cli("topsis -m " + path("m.csv")).code, 2);  // no default weight for x
}

TEST_F(Cli, SimulateSeedOverrideIsRecorded) {
  auto r = cli("simulate -c " + kPresets + "/scenario2.json --seed 7 --no-timestamp -o " + path("o"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("seed=7"), std::string::npos);
  auto summary = json::parse(slurp(dir / "o" / "summary.json"));
  EXPECT_EQ(summary["seed"], 7);
  EXPECT_FALSE(summary.contains("generated_at"));
  for (const char* f : {"trace.csv", "decisions.jsonl", "messages.jsonl", "metrics.csv"})
    EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
}

TEST_F(Cli, SimulateIsByteIdentical) {
  const std::string cfg = " -c " + kPresets + "/scenario2.json --no-timestamp";
  ASSERT_EQ(cli("simulate" + cfg + " -o " + path("a")).code, 0);
  ASSERT_EQ(cli("simulate" + cfg + " -o " + path("b")).code, 0);
  for (const char* f : {"summary.json", "trace.csv", "decisions.jsonl", "messages.jsonl", "metrics.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST_F(Cli, ReplayFindsCrossing) {
  ASSERT_EQ(cli("simulate -c " + kPresets + "/scenario2.json --no-timestamp -o " + path("o")).code, 0);
  auto r = cli("replay -m " + path("o/metrics.csv") + " -c " + kPresets + "/scenario2.json");
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string line;
  bool found = false;
  while (std::getline(lines, line)) {
    auto d = json::parse(line);
    if (!d["plan"].is_null() && d["plan"]["source"] == "h2" && d["plan"]["target"] == "h3") {
      const double t = d["time"];
      found |= t >= 200 && t <= 260;
    }
  }
  EXPECT_TRUE(found);
}

TEST_F(Cli, PredictConstantSeriesIsLearned) {
  spit(dir / "c.csv", constant_trace(120, 0.4));
  spit(dir / "cfg.json", R"({"epochs": 60, "seed": 3})");
  auto r = cli("predict -t " + path("c.csv") + " -c " + path("cfg.json") + " --no-timestamp -o " + path("o"));
  ASSERT_EQ(r.code, 0);
  auto report = json::parse(slurp(dir / "o" / "report.json"));
  EXPECT_LT(report["validation_mse"].get<double>(), 1e-3);
  EXPECT_TRUE(fs::exists(dir / "o" / "model.json"));
  EXPECT_TRUE(fs::exists(dir / "o" / "forecast.csv"));

  auto again = cli("predict -t " + path("c.csv") + " -c " + path("cfg.json") + " --no-timestamp -o " + path("p"));
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(slurp(dir / "o" / "model.json"), slurp(dir / "p" / "model.json"));
  EXPECT_EQ(slurp(dir / "o" / "report.json"), slurp(dir / "p" / "report.json"));
}

// The shipped scenario model is exactly what the training command produces.
TEST_F(Cli, ShippedModelReproduces) {
  auto r = cli("predict -t " + kPresets + "/stress_trace.csv -c " + kPresets + "/train_config.json --no-timestamp -o " +
               path("o"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(dir / "o" / "model.json"), slurp(kPresets + "/lstm_model.json"));
}
