#include <gtest/gtest.h>

#include <random>

#include "mecorch/protocol/trace_checker.hpp"
#include "mecorch/sim/config.hpp"
#include "mecorch/sim/model.hpp"
#include "mecorch/sim/output.hpp"
#include "mecorch/sim/replay.hpp"
#include "mecorch/sim/runner.hpp"

using namespace mecorch;
using namespace mecorch::sim;
using nlohmann::json;

namespace {

SimConfig preset(const char* name, std::uint64_t seed = 1) {
  auto c = load_sim_config(std::string(MECORCH_PRESETS_DIR) + "/" + name);
  c.seed = seed;
  return c;
}

json idle_config() {
  return json::parse(R"({
    "duration_s": 60, "tick_s": 1, "seed": 4,
    "vehicle": {"start_m": 0, "speed_mps": 10},
    "orchestrator": {"predictor": "baseline"},
    "hosts": [
      {"id": "a", "position_m": 0, "service_area": [0, 5000], "load": {"type": "constant", "level": 0},
       "link": {"base_rtt_ms": 30, "bandwidth_mbps": 100}},
      {"id": "b", "position_m": 0, "service_area": [0, 5000], "load": {"type": "constant", "level": 0},
       "link": {"base_rtt_ms": 30, "bandwidth_mbps": 100}}
    ]
  })");
}

std::vector<std::string> issues_of(const json& j) {
  try {
    sim_config_from_json(j);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<std::string>& issues, const std::string& prefix) {
  for (const auto& i : issues)
    if (i.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace

TEST(Rtt, Examples) {
  std::mt19937_64 rng(1);
  LinkParams flat{30, 0, 100, 0};
  EXPECT_EQ(rtt(flat, 12345, rng), 30.0);
  LinkParams per_km{30, 0, 100, 1};
  EXPECT_DOUBLE_EQ(rtt(per_km, 10000, rng), 40.0);
  LinkParams jitter{30, 5, 100, 0};
  std::mt19937_64 a(9), b(9);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(rtt(jitter, 0, a), rtt(jitter, 0, b));
}

TEST(Rtt, TruncatedAtZero) {
  std::mt19937_64 rng(2);
  LinkParams wild{1, 50, 100, 0};
  for (int k = 0; k < 1000; ++k) EXPECT_GE(rtt(wild, 0, rng), 0.0);
}

TEST(ComputeDelay, Examples) {
  EXPECT_DOUBLE_EQ(compute_delay(0.0, 20), 20.0);
  EXPECT_DOUBLE_EQ(compute_delay(0.5, 20), 40.0);
  EXPECT_GT(compute_delay(0.9, 20), compute_delay(0.3, 20));
  EXPECT_NEAR(compute_delay(1.0, 20), 2000.0, 1e-9);
  EXPECT_THROW(compute_delay(1.2, 20), ParameterError);
  EXPECT_THROW(compute_delay(-0.1, 20), ParameterError);
}

TEST(ComputeDelay, StrictlyIncreasingUpToCap) {
  double prev = 0.0;
  for (int k = 0; k <= 99; ++k) {
    const double d = compute_delay(k / 100.0, 10);
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(Summarize, Examples) {
  const std::vector<double> flat{100, 100, 100};
  auto s = summarize(flat);
  EXPECT_EQ(s.mean, 100.0);
  EXPECT_EQ(s.stddev, 0.0);
  const std::vector<double> pair{90, 110};
  s = summarize(pair);
  EXPECT_DOUBLE_EQ(s.mean, 100.0);
  EXPECT_DOUBLE_EQ(s.stddev, 10.0);
  EXPECT_THROW(summarize(std::vector<double>{}), InputError);
}

TEST(Config, PresetsLoad) {
  for (const char* name : {"scenario1.json", "scenario2.json", "stress_test.json"}) EXPECT_NO_THROW(preset(name)) << name;
  auto s1 = preset("scenario1.json");
  EXPECT_FALSE(s1.relocation_enabled);
  EXPECT_EQ(s1.hosts.size(), 3u);
  EXPECT_TRUE(s1.model_path && std::filesystem::exists(*s1.model_path));
}

TEST(Config, ErrorsCarryFieldPaths) {
  auto j = idle_config();
  j["duration_s"] = 0;
  j["hosts"][1]["link"]["base_rtt_ms"] = -3;
  j["hosts"][0]["load"] = {{"type", "sawtooth"}};
  j["vehicle"]["speed_mps"] = -1;
  j["colour"] = "red";
  auto issues = issues_of(j);
  EXPECT_TRUE(has_issue(issues, "duration_s:"));
  EXPECT_TRUE(has_issue(issues, "hosts[1].link.base_rtt_ms:"));
  EXPECT_TRUE(has_issue(issues, "hosts[0].load.type:"));
  EXPECT_TRUE(has_issue(issues, "vehicle.speed_mps:"));
  EXPECT_TRUE(has_issue(issues, "colour: unknown field"));
}

TEST(Config, MoreValidation) {
  auto j = idle_config();
  j["hosts"][1]["id"] = "a";
  j["hosts"][0]["service_area"] = {10, 0};
  j["orchestrator"] = {{"predictor", "lstm"}};
  j["upf_events"] = {{{"time", 5}, {"preferred", {"zz"}}}};
  auto issues = issues_of(j);
  EXPECT_TRUE(has_issue(issues, "hosts[1].id: duplicate"));
  EXPECT_TRUE(has_issue(issues, "hosts[0].service_area:"));
  EXPECT_TRUE(has_issue(issues, "orchestrator.model_path:"));
  EXPECT_TRUE(has_issue(issues, "upf_events[0].preferred: unknown host"));
  EXPECT_TRUE(issues_of(idle_config()).empty());
}

TEST(Config, ProfileJsonRoundTrip) {
  auto p = LoadProfile::noisy(LoadProfile::ramp(0.1, 0.9, 5, 50), 0.03);
  auto j = idle_config();
  j["hosts"][0]["load"] = profile_to_json(p);
  auto c = sim_config_from_json(j);
  EXPECT_EQ(profile_to_json(c.hosts[0].load), profile_to_json(p));
}

TEST(RunScenario, IdleZeroJitterIsConstant) {
  auto cfg = sim_config_from_json(idle_config());
  auto r = run_scenario(cfg);
  ASSERT_EQ(r.records.size(), 61u);
  for (const auto& rec : r.records) EXPECT_EQ(rec.total_ms, r.records.front().total_ms);
  EXPECT_EQ(r.summary.stddev_ms, 0.0);
}

TEST(RunScenario, RecordsAreConsistent) {
  auto r = run_scenario(preset("scenario2.json", 3));
  std::vector<double> totals;
  for (const auto& rec : r.records) {
    EXPECT_DOUBLE_EQ(rec.total_ms, rec.rtt_ms + rec.compute_ms);
    totals.push_back(rec.total_ms);
  }
  auto s = summarize(totals);
  EXPECT_DOUBLE_EQ(s.mean, r.summary.mean_ms);
  EXPECT_DOUBLE_EQ(s.stddev, r.summary.stddev_ms);
  // Every tick is either answered or inside a declared outage.
  EXPECT_EQ(r.records.size() + r.summary.outage_ticks, 401u);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_TRUE(protocol::check_trace(r.messages).ok());
}

TEST(RunScenario, IsReproducible) {
  auto cfg = preset("scenario2.json", 5);
  auto a = run_scenario(cfg);
  auto b = run_scenario(cfg);
  EXPECT_EQ(tick_trace_csv(a.records), tick_trace_csv(b.records));
  EXPECT_EQ(summary_json(a, false).dump(), summary_json(b, false).dump());
  EXPECT_EQ(decision_log_jsonl(a.decisions), decision_log_jsonl(b.decisions));
  cfg.seed = 6;
  EXPECT_NE(tick_trace_csv(run_scenario(cfg).records), tick_trace_csv(a.records));
}

TEST(RunScenario, PinnedScenarioDegradesAfterStep) {
  auto r = run_scenario(preset("scenario1.json"));
  std::vector<double> before, after, all;
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.host, HostId{"h2"});
    (rec.t <= 200 ? before : after).push_back(rec.total_ms);
    all.push_back(rec.total_ms);
  }
  EXPECT_GT(summarize(after).mean, summarize(before).mean);
  EXPECT_GT(summarize(all).stddev, 2 * summarize(before).stddev);
  for (const auto& d : r.decisions) EXPECT_FALSE(d.plan);
  EXPECT_TRUE(r.relocations.empty());
}

TEST(RunScenario, OrchestratedScenarioMovesToHostThree) {
  auto r1 = run_scenario(preset("scenario1.json"));
  auto r2 = run_scenario(preset("scenario2.json"));
  bool moved = false;
  for (const auto& e : r2.relocations)
    moved |= e.outcome == protocol::RelocationOutcome::Completed && e.source == HostId{"h2"} &&
             e.target == HostId{"h3"} && e.time >= 200 && e.time <= 260;
  EXPECT_TRUE(moved);
  EXPECT_LT(r2.summary.mean_ms, r1.summary.mean_ms);
  EXPECT_LT(r2.summary.stddev_ms, r1.summary.stddev_ms);
  EXPECT_EQ(r2.summary.selection_counts.at(HostId{"h1"}), 0u);
}

TEST(RunScenario, LeavingEveryAreaIsAnOutage) {
  auto j = idle_config();
  j["hosts"][0]["service_area"] = {0, 300};
  j["hosts"][1]["service_area"] = {0, 300};
  auto r = run_scenario(sim_config_from_json(j));
  ASSERT_EQ(r.outages.size(), 1u);
  EXPECT_EQ(r.outages[0].start, 31.0);
  EXPECT_EQ(r.outages[0].end, 60.0);
  EXPECT_EQ(r.records.size(), 61u);  // the stale endpoint keeps answering
}

TEST(RunScenario, FaultyControlPlaneStaysSafe) {
  auto cfg = preset("scenario2.json", 2);
  cfg.orchestrator.predictor = PredictorKind::Baseline;
  cfg.network.max_delay_ticks = 3;
  cfg.network.drop_probability = 0.2;
  cfg.network.duplicate_probability = 0.2;
  auto r = run_scenario(cfg);
  EXPECT_TRUE(protocol::check_trace(r.messages).ok());
  EXPECT_EQ(r.records.size() + r.summary.outage_ticks, 401u);
}

TEST(RunScenario, UpfEventTriggersReattach) {
  auto j = idle_config();
  j["upf_events"] = {{{"time", 40}, {"preferred", {"b"}}}};
  auto r = run_scenario(sim_config_from_json(j));
  bool reattached = false;
  for (const auto& e : r.relocations)
    reattached |= e.outcome == protocol::RelocationOutcome::Completed && e.trigger == Trigger::UpfReattach;
  // Initial attach picks "a" (tie broken by id), the anchor then prefers "b".
  EXPECT_TRUE(reattached);
  EXPECT_EQ(r.records.back().host, HostId{"b"});
}

TEST(Replay, FindsTheCrossing) {
  auto cfg = preset("scenario2.json");
  auto store = scenario_metrics(cfg);
  auto decisions = replay(store, cfg, make_predictor(cfg));
  bool found = false;
  for (const auto& d : decisions)
    if (d.plan && d.time >= 200 && d.time <= 260 && d.plan->source == HostId{"h2"} && d.plan->target == HostId{"h3"})
      found = true;
  EXPECT_TRUE(found);
}

TEST(Replay, DisabledRelocationHasNoPlans) {
  auto cfg = preset("scenario1.json");
  auto decisions = replay(scenario_metrics(cfg), cfg, make_predictor(cfg));
  EXPECT_FALSE(decisions.empty());
  for (const auto& d : decisions) EXPECT_FALSE(d.plan);
}

TEST(Replay, UnknownHostIsConfigError) {
  auto cfg = preset("scenario2.json");
  auto store = scenario_metrics(cfg);
  auto j = json::parse(std::ifstream(std::string(MECORCH_PRESETS_DIR) + "/scenario2.json"));
  j["hosts"][0]["id"] = "h9";
  auto bad = sim_config_from_json(j, MECORCH_PRESETS_DIR);
  EXPECT_THROW(replay(store, bad, make_predictor(bad)), ConfigError);
}
