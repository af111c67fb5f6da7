// mecorch: scenario runner, TOPSIS ranking, predictor training and decision
// replay. Exit codes: 0 success, 1 runtime failure, 2 input/validation failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecorch/csv.hpp"
#include "mecorch/forecaster.hpp"
#include "mecorch/lstm.hpp"
#include "mecorch/metrics.hpp"
#include "mecorch/sim/output.hpp"
#include "mecorch/sim/replay.hpp"
#include "mecorch/sim/runner.hpp"
#include "mecorch/topsis.hpp"

namespace fs = std::filesystem;
using namespace mecorch;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kInputFailure = 2;

bool verbose = false;

void log(const std::string& msg) {
  if (verbose) std::cerr << msg << '\n';
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

MetricsStore read_metrics(const fs::path& path) {
  const auto rows = parse_trace_csv(read_file(path));
  return ingest_trace(rows);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool no_timestamp = false;
};

int cmd_simulate(const SimulateArgs& a) {
  auto cfg = sim::load_sim_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  log("simulating " + csv::format_number(cfg.duration_s) + " s with seed " + std::to_string(cfg.seed));
  const auto result = sim::run_scenario(cfg);
  sim::write_outputs(a.out, result, !a.no_timestamp);
  std::cout << "mean_ms=" << csv::format_number(result.summary.mean_ms)
            << " stddev_ms=" << csv::format_number(result.summary.stddev_ms)
            << " relocations=" << result.summary.relocations_completed << " seed=" << cfg.seed << '\n';
  log("wrote outputs to " + a.out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct TopsisArgs {
  std::string matrix;
  std::string weights;
};

int cmd_topsis(const TopsisArgs& a) {
  const std::string text = read_file(a.matrix);
  const auto rows = csv::lines(text);
  if (rows.empty()) throw InputError(a.matrix + ": empty matrix file");
  const auto header = csv::split_line(rows[0]);
  if (header.size() < 2) throw InputError(a.matrix + ": header needs an id column and at least one criterion");

  std::vector<Criterion> criteria;
  std::string source;
  if (a.weights.empty()) {
    source = "default";
    const auto defaults = default_criteria();
    for (std::size_t j = 1; j < header.size(); ++j) {
      auto it = std::find_if(defaults.begin(), defaults.end(), [&](const Criterion& c) { return c.name == header[j]; });
      if (it == defaults.end())
        throw InputError("no default weight for criterion '" + header[j] + "'; pass --weights");
      criteria.push_back(*it);
    }
  } else {
    source = a.weights;
    const auto j = read_json(a.weights);
    if (!j.is_object() || !j.contains("weights") || !j.at("weights").is_object())
      throw InputError(a.weights + ": expected {\"weights\": {...}, \"directions\": {...}}");
    const auto& dirs = j.value("directions", nlohmann::json::object());
    for (std::size_t k = 1; k < header.size(); ++k) {
      const auto& name = header[k];
      if (!j.at("weights").contains(name) || !j.at("weights").at(name).is_number())
        throw InputError(a.weights + ": missing numeric weight for '" + name + "'");
      if (!dirs.contains(name) || !dirs.at(name).is_string())
        throw InputError(a.weights + ": missing direction for '" + name + "'");
      const auto d = dirs.at(name).get<std::string>();
      if (d != "benefit" && d != "cost") throw InputError(a.weights + ": direction of '" + name + "' must be benefit or cost");
      criteria.push_back({name, d == "benefit" ? Direction::Benefit : Direction::Cost, j.at("weights").at(name).get<double>()});
    }
  }
  normalize_weights(criteria);

  DecisionMatrix m;
  m.criteria = criteria;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto fields = csv::split_line(rows[i]);
    if (fields.size() != header.size())
      throw InputError(a.matrix + ": line " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(header.size()));
    if (fields[0].empty()) throw InputError(a.matrix + ": line " + std::to_string(i + 1) + " has an empty id");
    m.alternatives.emplace_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      auto v = csv::parse_number(fields[k]);
      if (!v) throw InputError(a.matrix + ": line " + std::to_string(i + 1) + ": '" + fields[k] + "' is not a number");
      m.values.push_back(*v);
    }
  }
  const auto r = topsis_rank(m);

  nlohmann::json out;
  nlohmann::json alts = nlohmann::json::array(), order = nlohmann::json::array(), crit = nlohmann::json::array();
  for (const auto& h : r.alternatives) alts.push_back(h.str());
  for (const auto& h : r.order) order.push_back(h.str());
  for (const auto& c : m.criteria)
    crit.push_back({{"name", c.name}, {"direction", c.direction == Direction::Benefit ? "benefit" : "cost"}, {"weight", c.weight}});
  out["alternatives"] = alts;
  out["closeness"] = r.closeness;
  out["order"] = order;
  out["selected"] = r.selected.str();
  out["criteria"] = crit;
  out["weights_source"] = source;
  std::cout << out.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string trace;
  std::string config;
  std::vector<std::string> hosts;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool no_timestamp = false;
};

int cmd_predict(const PredictArgs& a) {
  TrainingConfig cfg;
  if (!a.config.empty()) cfg = training_config_from_json(read_json(a.config));
  if (a.seed) cfg.seed = *a.seed;
  const auto store = read_metrics(a.trace);
  std::vector<HostId> hosts;
  if (a.hosts.empty()) {
    hosts = store.hosts();
  } else {
    for (const auto& h : a.hosts) {
      if (!store.contains(HostId{h})) throw InputError("host '" + h + "' does not appear in the trace");
      hosts.emplace_back(h);
    }
  }
  if (hosts.empty()) throw InputError(a.trace + ": trace has no samples");

  log("training on " + std::to_string(hosts.size()) + " host(s), " + std::to_string(cfg.epochs) + " epochs");
  const auto result = train(init_lstm(cfg.input_dim, cfg.hidden_dim, cfg.seed), store, hosts, cfg);

  fs::create_directories(a.out);
  sim::write_text(fs::path(a.out) / "model.json", to_json(result.model).dump(2) + "\n");

  // One-step forecasts over each host's validation windows.
  const auto data = make_training_data(store, hosts, cfg);
  std::string forecast = "host,t,actual,predicted\n";
  for (const auto& host : hosts) {
    const auto s = store.samples(host);
    const std::size_t count = s.size() - cfg.window;
    auto n_train = static_cast<std::size_t>(std::floor(cfg.split * static_cast<double>(count)));
    n_train = std::clamp<std::size_t>(n_train, 1, count - 1);
    for (std::size_t start = n_train; start < count; ++start) {
      std::vector<double> seq;
      for (std::size_t k = 0; k < cfg.window; ++k) append_features(seq, s[start + k], cfg.input_dim);
      const auto& target = s[start + cfg.window];
      forecast += host.str() + ',' + csv::format_number(target.timestamp) + ',' + csv::format_number(target.cpu) + ',' +
                  csv::format_number(lstm_predict<double>(result.model, seq)) + '\n';
    }
  }
  sim::write_text(fs::path(a.out) / "forecast.csv", forecast);

  nlohmann::json hosts_json = nlohmann::json::array();
  for (const auto& h : hosts) hosts_json.push_back(h.str());
  nlohmann::json report = {{"config", to_json(cfg)},
                           {"hosts", hosts_json},
                           {"train_windows", data.train.size()},
                           {"validation_windows", data.validation.size()},
                           {"initial_loss", result.initial_loss},
                           {"final_loss", result.final_loss},
                           {"best_epoch", result.best_epoch},
                           {"validation_mse", result.validation_mse},
                           {"loss_trace", result.loss_trace}};
  if (!a.no_timestamp) report["generated_at"] = sim::utc_timestamp();
  sim::write_text(fs::path(a.out) / "report.json", report.dump(2) + "\n");
  std::cout << "validation_mse=" << csv::format_number(result.validation_mse) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReplayArgs {
  std::string metrics;
  std::string config;
  std::string out;
};

int cmd_replay(const ReplayArgs& a) {
  const auto cfg = sim::load_sim_config(a.config);
  const auto store = read_metrics(a.metrics);
  const auto decisions = sim::replay(store, cfg, sim::make_predictor(cfg));
  const auto log_text = decision_log_jsonl(decisions);
  if (a.out.empty()) {
    std::cout << log_text;
  } else {
    fs::create_directories(a.out);
    sim::write_text(fs::path(a.out) / "decisions.jsonl", log_text);
  }
  std::size_t plans = 0;
  for (const auto& d : decisions) plans += d.plan.has_value();
  log(std::to_string(decisions.size()) + " decisions, " + std::to_string(plans) + " plans");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MEC application-context relocation toolkit"};
  app.require_subcommand(1);
  app.add_flag("-v,--verbose", verbose, "Progress messages on standard error");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write summary, traces and decision log");
  simulate->add_option("-c,--config", sim_args.config, "Scenario JSON")->required();
  simulate->add_option("-s,--seed", sim_args.seed, "Override the scenario seed");
  simulate->add_option("-o,--out", sim_args.out, "Output directory")->capture_default_str();
  simulate->add_flag("--no-timestamp", sim_args.no_timestamp, "Omit generated_at from summary.json");

  TopsisArgs topsis_args;
  auto* topsis = app.add_subcommand("topsis", "Rank the rows of a decision matrix; prints JSON");
  topsis->add_option("-m,--matrix", topsis_args.matrix, "CSV: id column, then one column per criterion")->required();
  topsis->add_option("-w,--weights", topsis_args.weights,
                     "JSON {\"weights\": {name: w}, \"directions\": {name: \"benefit\"|\"cost\"}}; "
                     "default: host-selection weights");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Train the LSTM forecaster on a metrics trace");
  predict->add_option("-t,--trace", predict_args.trace, "Metrics CSV (host_id,timestamp,cpu,mem,storage)")->required();
  predict->add_option("-c,--config", predict_args.config, "Training config JSON (defaults apply when omitted)");
  predict->add_option("--hosts", predict_args.hosts, "Hosts to train on (default: all)")->delimiter(',');
  predict->add_option("-s,--seed", predict_args.seed, "Override the training seed");
  predict->add_option("-o,--out", predict_args.out, "Output directory")->capture_default_str();
  predict->add_flag("--no-timestamp", predict_args.no_timestamp, "Omit generated_at from report.json");

  ReplayArgs replay_args;
  auto* replay = app.add_subcommand("replay", "Orchestrator decisions over a recorded metrics trace");
  replay->add_option("-m,--metrics", replay_args.metrics, "Metrics CSV")->required();
  replay->add_option("-c,--config", replay_args.config, "Scenario JSON (hosts, vehicle, orchestrator)")->required();
  replay->add_option("-o,--out", replay_args.out, "Write decisions.jsonl here instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputFailure;
  }

  try {
    if (*simulate) return cmd_simulate(sim_args);
    if (*topsis) return cmd_topsis(topsis_args);
    if (*predict) return cmd_predict(predict_args);
    if (*replay) return cmd_replay(replay_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFailure;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFailure;
  } catch (const NotEnoughData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFailure;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFailure;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}
