#pragma once

// Scenario configuration (JSON). Every validation problem is reported with
// the path of the offending field, e.g. "hosts[1].link.base_rtt_ms: must be > 0".

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecorch/error.hpp"
#include "mecorch/metrics.hpp"
#include "mecorch/orchestrator.hpp"
#include "mecorch/protocol/runtime.hpp"

namespace mecorch::sim {

struct LinkParams {
  double base_rtt_ms = 30.0;
  double rtt_jitter_stddev_ms = 0.0;
  double bandwidth_mbps = 100.0;
  double per_km_rtt_ms = 0.0;
};

struct HostConfig {
  MecHost host;
  LoadProfile load = LoadProfile::constant(0.0);
  LinkParams link;
};

struct VehicleConfig {
  VehicleId id{"v1"};
  double start_m = 0.0;
  double speed_mps = 25.0;

  double position_at(double t) const { return start_m + speed_mps * t; }
};

struct SimConfig {
  double duration_s = 400.0;
  double tick_s = 1.0;
  std::uint64_t seed = 1;
  std::string service_id = "its-service";
  std::size_t context_bytes = 256;
  VehicleConfig vehicle;
  std::vector<HostConfig> hosts;
  double d0_ms = 50.0;
  bool relocation_enabled = true;
  OrchestratorConfig orchestrator;
  /// Trained model for the lstm predictor; relative paths are resolved
  /// against the directory of the configuration file.
  std::optional<std::filesystem::path> model_path;
  protocol::NetworkConfig network;
  std::vector<UpfEvent> upf_events;

  std::vector<MecHost> mec_hosts() const {
    std::vector<MecHost> out;
    for (const auto& h : hosts) out.push_back(h.host);
    return out;
  }
  const HostConfig* find_host(const HostId& id) const {
    for (const auto& h : hosts)
      if (h.host.id == id) return &h;
    return nullptr;
  }
};

namespace detail {

// Accumulates issues while reading a JSON object.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  void issue(const std::string& path, const std::string& what) { issues_.push_back(path + ": " + what); }

  bool object(const nlohmann::json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      issue(path, "must be an object");
      return false;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
      if (!ok.count(key)) issue(join(path, key), "unknown field");
    return true;
  }

  void number(const nlohmann::json& j, const std::string& path, const char* key, double& out,
              const std::function<bool(double)>& valid = {}, const char* rule = "") {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number()) return issue(join(path, key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) return issue(join(path, key), "must be finite");
    if (valid && !valid(x)) return issue(join(path, key), rule);
    out = x;
  }

  void required_number(const nlohmann::json& j, const std::string& path, const char* key, double& out,
                       const std::function<bool(double)>& valid = {}, const char* rule = "") {
    if (!j.contains(key)) return issue(join(path, key), "is required");
    number(j, path, key, out, valid, rule);
  }

  void count(const nlohmann::json& j, const std::string& path, const char* key, std::size_t& out, bool positive) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < (positive ? 1 : 0))
      return issue(join(path, key), positive ? "must be a positive integer" : "must be a non-negative integer");
    out = v.get<std::size_t>();
  }

  void boolean(const nlohmann::json& j, const std::string& path, const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_boolean()) return issue(join(path, key), "must be true or false");
    out = j.at(key).get<bool>();
  }

  void string(const nlohmann::json& j, const std::string& path, const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_string() || j.at(key).get<std::string>().empty())
      return issue(join(path, key), "must be a non-empty string");
    out = j.at(key).get<std::string>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<std::string>& issues_;
};

inline const auto positive = [](double x) { return x > 0.0; };
inline const auto non_negative = [](double x) { return x >= 0.0; };
inline const auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };

inline std::optional<LoadProfile> read_profile(Reader& r, const nlohmann::json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    r.issue(path + ".type", "must be one of constant, step, ramp, noisy");
    return std::nullopt;
  }
  const auto type = j.at("type").get<std::string>();
  if (type == "constant") {
    if (!r.object(j, path, {"type", "level"})) return std::nullopt;
    double level = 0.0;
    r.required_number(j, path, "level", level, unit, "must lie in [0,1]");
    return LoadProfile::constant(level);
  }
  if (type == "step") {
    if (!r.object(j, path, {"type", "before", "after", "t_step"})) return std::nullopt;
    double before = 0.0, after = 0.0, t = 0.0;
    r.required_number(j, path, "before", before, unit, "must lie in [0,1]");
    r.required_number(j, path, "after", after, unit, "must lie in [0,1]");
    r.required_number(j, path, "t_step", t, non_negative, "must be >= 0");
    return LoadProfile::step(before, after, t);
  }
  if (type == "ramp") {
    if (!r.object(j, path, {"type", "start", "end", "t_start", "t_end"})) return std::nullopt;
    double a = 0.0, b = 0.0, t0 = 0.0, t1 = 1.0;
    r.required_number(j, path, "start", a, unit, "must lie in [0,1]");
    r.required_number(j, path, "end", b, unit, "must lie in [0,1]");
    r.required_number(j, path, "t_start", t0, non_negative, "must be >= 0");
    r.required_number(j, path, "t_end", t1, [&](double x) { return x > t0; }, "must exceed t_start");
    return LoadProfile::ramp(a, b, t0, t1);
  }
  if (type == "noisy") {
    if (!r.object(j, path, {"type", "base", "stddev"})) return std::nullopt;
    double sd = 0.0;
    r.required_number(j, path, "stddev", sd, non_negative, "must be >= 0");
    if (!j.contains("base")) {
      r.issue(path + ".base", "is required");
      return std::nullopt;
    }
    auto base = read_profile(r, j.at("base"), path + ".base");
    if (!base) return std::nullopt;
    return LoadProfile::noisy(std::move(*base), sd);
  }
  r.issue(path + ".type", "must be one of constant, step, ramp, noisy");
  return std::nullopt;
}

}  // namespace detail

inline nlohmann::json profile_to_json(const LoadProfile& p) {
  return std::visit(
      [](const auto& k) -> nlohmann::json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, profile::Constant>) {
          return {{"type", "constant"}, {"level", k.level}};
        } else if constexpr (std::is_same_v<K, profile::Step>) {
          return {{"type", "step"}, {"before", k.level_before}, {"after", k.level_after}, {"t_step", k.t_step}};
        } else if constexpr (std::is_same_v<K, profile::Ramp>) {
          return {{"type", "ramp"}, {"start", k.start_level}, {"end", k.end_level}, {"t_start", k.t_start}, {"t_end", k.t_end}};
        } else {
          return {{"type", "noisy"}, {"base", profile_to_json(*k.base)}, {"stddev", k.noise_stddev}};
        }
      },
      p.kind);
}

/// Parses and validates; throws ConfigError listing every problem found.
/// `base_dir` anchors a relative model path.
inline SimConfig sim_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  std::vector<std::string> issues;
  Reader r(issues);
  SimConfig c;
  if (!r.object(j, "", {"duration_s", "tick_s", "seed", "service_id", "context_bytes", "vehicle", "hosts", "server",
                        "relocation_enabled", "orchestrator", "control_plane", "upf_events", "description"}))
    throw ConfigError(issues);

  r.number(j, "", "duration_s", c.duration_s, positive, "must be > 0");
  r.number(j, "", "tick_s", c.tick_s, positive, "must be > 0");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) r.issue("seed", "must be a non-negative integer");
    else c.seed = j.at("seed").get<std::uint64_t>();
  }
  r.string(j, "", "service_id", c.service_id);
  r.count(j, "", "context_bytes", c.context_bytes, true);
  r.boolean(j, "", "relocation_enabled", c.relocation_enabled);

  if (j.contains("vehicle") && r.object(j.at("vehicle"), "vehicle", {"id", "start_m", "speed_mps"})) {
    const auto& v = j.at("vehicle");
    std::string id = c.vehicle.id.str();
    r.string(v, "vehicle", "id", id);
    c.vehicle.id = VehicleId{id};
    r.number(v, "vehicle", "start_m", c.vehicle.start_m);
    r.number(v, "vehicle", "speed_mps", c.vehicle.speed_mps, non_negative, "must be >= 0");
  }

  if (j.contains("server") && r.object(j.at("server"), "server", {"d0_ms"}))
    r.number(j.at("server"), "server", "d0_ms", c.d0_ms, positive, "must be > 0");

  if (!j.contains("hosts") || !j.at("hosts").is_array() || j.at("hosts").empty()) {
    r.issue("hosts", "must be a non-empty array");
  } else {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < j.at("hosts").size(); ++i) {
      const auto& h = j.at("hosts")[i];
      const std::string path = "hosts[" + std::to_string(i) + "]";
      if (!r.object(h, path, {"id", "position_m", "service_area", "load", "link", "services"})) continue;
      HostConfig hc;
      std::string id;
      if (!h.contains("id")) r.issue(path + ".id", "is required");
      r.string(h, path, "id", id);
      if (!id.empty() && !seen.insert(id).second) r.issue(path + ".id", "duplicate host id '" + id + "'");
      hc.host.id = HostId{id};
      r.required_number(h, path, "position_m", hc.host.position_m);
      if (!h.contains("service_area")) {
        r.issue(path + ".service_area", "is required");
      } else {
        const auto& a = h.at("service_area");
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
          r.issue(path + ".service_area", "must be [begin_m, end_m]");
        } else {
          hc.host.area = {a[0].get<double>(), a[1].get<double>()};
          if (!(hc.host.area.begin_m <= hc.host.area.end_m)) r.issue(path + ".service_area", "begin must be <= end");
        }
      }
      if (h.contains("services")) {
        if (!h.at("services").is_array()) r.issue(path + ".services", "must be an array of strings");
        else
          for (const auto& s : h.at("services"))
            if (s.is_string()) hc.host.services.push_back(s.get<std::string>());
            else r.issue(path + ".services", "must be an array of strings");
      }
      if (!h.contains("load")) {
        r.issue(path + ".load", "is required");
      } else if (auto p = read_profile(r, h.at("load"), path + ".load")) {
        hc.load = std::move(*p);
      }
      if (!h.contains("link")) {
        r.issue(path + ".link", "is required");
      } else if (r.object(h.at("link"), path + ".link",
                          {"base_rtt_ms", "rtt_jitter_stddev_ms", "bandwidth_mbps", "per_km_rtt_ms"})) {
        const auto& l = h.at("link");
        const std::string lp = path + ".link";
        r.required_number(l, lp, "base_rtt_ms", hc.link.base_rtt_ms, positive, "must be > 0");
        r.number(l, lp, "rtt_jitter_stddev_ms", hc.link.rtt_jitter_stddev_ms, non_negative, "must be >= 0");
        r.required_number(l, lp, "bandwidth_mbps", hc.link.bandwidth_mbps, positive, "must be > 0");
        r.number(l, lp, "per_km_rtt_ms", hc.link.per_km_rtt_ms, non_negative, "must be >= 0");
      }
      c.hosts.push_back(std::move(hc));
    }
  }

  if (j.contains("orchestrator") &&
      r.object(j.at("orchestrator"), "orchestrator",
               {"decision_period_s", "hysteresis_delta", "min_dwell_s", "predictor", "model_path", "window", "horizon",
                "weights"})) {
    const auto& o = j.at("orchestrator");
    auto& oc = c.orchestrator;
    r.number(o, "orchestrator", "decision_period_s", oc.decision_period_s, positive, "must be > 0");
    r.number(o, "orchestrator", "hysteresis_delta", oc.hysteresis_delta, [](double x) { return x >= 0 && x < 1; },
             "must lie in [0,1)");
    r.number(o, "orchestrator", "min_dwell_s", oc.min_dwell_s, non_negative, "must be >= 0");
    r.count(o, "orchestrator", "window", oc.window, true);
    r.count(o, "orchestrator", "horizon", oc.horizon, true);
    if (o.contains("predictor")) {
      try {
        oc.predictor = predictor_kind_from_string(o.at("predictor").is_string() ? o.at("predictor").get<std::string>() : "");
      } catch (const InputError&) {
        r.issue("orchestrator.predictor", "must be \"lstm\" or \"baseline\"");
      }
    }
    if (o.contains("model_path")) {
      std::string p;
      r.string(o, "orchestrator", "model_path", p);
      if (!p.empty()) {
        std::filesystem::path mp(p);
        c.model_path = mp.is_absolute() ? mp : base_dir / mp;
      }
    }
    if (o.contains("weights")) {
      const auto& w = o.at("weights");
      std::map<std::string, double> raw;
      if (!w.is_object()) {
        r.issue("orchestrator.weights", "must be an object of criterion weights");
      } else {
        for (const auto& [k, v] : w.items()) {
          if (!v.is_number() || !(v.get<double>() >= 0.0)) r.issue("orchestrator.weights." + k, "must be a number >= 0");
          else raw[k] = v.get<double>();
        }
        try {
          oc.criteria = weights_from_config(raw);
        } catch (const InputError& e) {
          r.issue("orchestrator.weights", e.what());
        }
      }
    }
  }
  c.orchestrator.relocation_enabled = c.relocation_enabled;
  if (c.orchestrator.predictor == PredictorKind::Lstm && !c.model_path)
    r.issue("orchestrator.model_path", "is required for the lstm predictor");

  if (j.contains("control_plane") &&
      r.object(j.at("control_plane"), "control_plane",
               {"min_delay_ticks", "max_delay_ticks", "drop_probability", "duplicate_probability",
                "corrupt_probability"})) {
    const auto& n = j.at("control_plane");
    std::size_t lo = static_cast<std::size_t>(c.network.min_delay_ticks);
    std::size_t hi = static_cast<std::size_t>(c.network.max_delay_ticks);
    r.count(n, "control_plane", "min_delay_ticks", lo, false);
    r.count(n, "control_plane", "max_delay_ticks", hi, false);
    if (!n.contains("max_delay_ticks")) hi = std::max(hi, lo);
    if (hi < lo) r.issue("control_plane.max_delay_ticks", "must be >= min_delay_ticks");
    c.network.min_delay_ticks = static_cast<int>(lo);
    c.network.max_delay_ticks = static_cast<int>(hi);
    r.number(n, "control_plane", "drop_probability", c.network.drop_probability, unit, "must lie in [0,1]");
    r.number(n, "control_plane", "duplicate_probability", c.network.duplicate_probability, unit, "must lie in [0,1]");
    r.number(n, "control_plane", "corrupt_probability", c.network.corrupt_probability, unit, "must lie in [0,1]");
  }

  if (j.contains("upf_events")) {
    if (!j.at("upf_events").is_array()) {
      r.issue("upf_events", "must be an array");
    } else {
      for (std::size_t i = 0; i < j.at("upf_events").size(); ++i) {
        const auto& e = j.at("upf_events")[i];
        const std::string path = "upf_events[" + std::to_string(i) + "]";
        if (!r.object(e, path, {"time", "preferred"})) continue;
        UpfEvent ev;
        r.required_number(e, path, "time", ev.time, non_negative, "must be >= 0");
        if (!e.contains("preferred") || !e.at("preferred").is_array()) {
          r.issue(path + ".preferred", "must be an array of host ids");
        } else {
          for (const auto& h : e.at("preferred")) {
            if (!h.is_string()) {
              r.issue(path + ".preferred", "must be an array of host ids");
              continue;
            }
            ev.preferred.emplace_back(h.get<std::string>());
            if (!c.find_host(ev.preferred.back())) r.issue(path + ".preferred", "unknown host '" + h.get<std::string>() + "'");
          }
        }
        c.upf_events.push_back(std::move(ev));
      }
    }
  }

  if (!(c.tick_s <= c.duration_s)) issues.push_back("tick_s: must not exceed duration_s");
  if (!issues.empty()) throw ConfigError(issues);
  return c;
}

inline SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return sim_config_from_json(j, path.parent_path());
}

}  // namespace mecorch::sim
