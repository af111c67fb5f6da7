#pragma once

// Host selection for one vehicle: service-area filter, availability forecast
// per candidate, TOPSIS ranking, and the hysteresis/dwell rule that decides
// whether a better-ranked host is worth a relocation.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecorch/error.hpp"
#include "mecorch/forecaster.hpp"
#include "mecorch/lstm.hpp"
#include "mecorch/metrics.hpp"
#include "mecorch/protocol/messages.hpp"
#include "mecorch/protocol/plan.hpp"
#include "mecorch/topsis.hpp"

namespace mecorch {

struct MecHost {
  HostId id;
  double position_m = 0.0;
  protocol::ServiceArea area;
  std::vector<std::string> services;
};

enum class PredictorKind { Lstm, Baseline };

inline const char* to_string(PredictorKind k) { return k == PredictorKind::Lstm ? "lstm" : "baseline"; }

inline PredictorKind predictor_kind_from_string(const std::string& s) {
  if (s == "lstm") return PredictorKind::Lstm;
  if (s == "baseline") return PredictorKind::Baseline;
  throw InputError("unknown predictor '" + s + "' (expected lstm or baseline)");
}

struct OrchestratorConfig {
  double decision_period_s = 10.0;
  double hysteresis_delta = 0.05;
  double min_dwell_s = 30.0;
  PredictorKind predictor = PredictorKind::Lstm;
  std::size_t window = 30;
  std::size_t horizon = 10;
  std::vector<Criterion> criteria = default_criteria();
  bool relocation_enabled = true;

  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    if (!(std::isfinite(decision_period_s) && decision_period_s > 0)) issues.push_back("decision_period_s must be > 0");
    if (!(hysteresis_delta >= 0.0 && hysteresis_delta < 1.0)) issues.push_back("hysteresis_delta must be in [0, 1)");
    if (!(std::isfinite(min_dwell_s) && min_dwell_s >= 0)) issues.push_back("min_dwell_s must be >= 0");
    if (window == 0) issues.push_back("window must be positive");
    if (horizon == 0) issues.push_back("horizon must be positive");
    return issues;
  }
};

/// Availability forecaster used by the orchestrator.
class Predictor {
 public:
  static Predictor baseline(std::size_t window, std::size_t horizon) {
    if (window == 0 || horizon == 0) throw ParameterError("window and horizon must be positive");
    return Predictor(PredictorKind::Baseline, std::nullopt, window, horizon);
  }
  static Predictor lstm(LstmModel model, std::size_t horizon) {
    if (model.window == 0) throw ParameterError("model does not declare its window length");
    if (horizon == 0) throw ParameterError("horizon must be positive");
    const std::size_t w = model.window;
    return Predictor(PredictorKind::Lstm, std::move(model), w, horizon);
  }

  PredictorKind kind() const noexcept { return kind_; }
  std::size_t window() const noexcept { return window_; }
  std::size_t horizon() const noexcept { return horizon_; }

  bool ready(const MetricsStore& store, const HostId& host, double now) const {
    return store.count_until(host, now) >= window_;
  }

  Forecast forecast(const MetricsStore& store, const HostId& host, double now) const {
    auto w = store.window(host, now, window_);
    if (kind_ == PredictorKind::Lstm) return predict_availability(*model_, w, horizon_);
    return baseline_predict(w, horizon_);
  }

 private:
  Predictor(PredictorKind k, std::optional<LstmModel> m, std::size_t w, std::size_t h)
      : kind_(k), model_(std::move(m)), window_(w), horizon_(h) {}

  PredictorKind kind_;
  std::optional<LstmModel> model_;
  std::size_t window_;
  std::size_t horizon_;
};

struct VehicleState {
  VehicleId id;
  double position_m = 0.0;
  HostId serving;
  std::optional<double> last_relocation_time;
};

/// Anchor change in the core network; the new anchor prefers `preferred`.
struct UpfEvent {
  double time = 0.0;
  std::vector<HostId> preferred;
};

struct Decision {
  double time = 0.0;
  VehicleId vehicle;
  HostId serving;
  double position_m = 0.0;
  std::map<HostId, double> closeness;
  std::map<HostId, double> availability;
  std::optional<Trigger> trigger;
  std::optional<RelocationPlan> plan;
  std::string note;
};

inline nlohmann::json to_json(const Decision& d) {
  nlohmann::json closeness = nlohmann::json::object();
  for (const auto& [h, c] : d.closeness) closeness[h.str()] = c;
  nlohmann::json availability = nlohmann::json::object();
  for (const auto& [h, a] : d.availability) availability[h.str()] = a;
  nlohmann::json plan = nullptr;
  if (d.plan)
    plan = {{"source", d.plan->source.str()}, {"target", d.plan->target.str()}, {"trigger", to_string(d.plan->trigger)}};
  return {{"time", d.time},
          {"vehicle", d.vehicle.str()},
          {"serving", d.serving.str()},
          {"position_m", d.position_m},
          {"closeness", closeness},
          {"availability", availability},
          {"trigger", d.trigger ? nlohmann::json(to_string(*d.trigger)) : nlohmann::json(nullptr)},
          {"plan", plan},
          {"note", d.note}};
}

inline std::string decision_log_jsonl(const std::vector<Decision>& decisions) {
  std::string out;
  for (const auto& d : decisions) {
    out += to_json(d).dump();
    out += '\n';
  }
  return out;
}

/// Hysteresis rule: a better-ranked host must beat the serving one by more
/// than `delta` in closeness.
inline bool exceeds_hysteresis(double c_target, double c_current, double delta) {
  return c_target - c_current > delta;
}

/// Hosts whose service area contains `position_m`, in host order. With a UPF
/// preference the set is narrowed to preferred hosts unless that leaves none.
inline std::vector<const MecHost*> candidate_hosts(const std::vector<MecHost>& hosts, double position_m,
                                                   const UpfEvent* upf = nullptr) {
  std::vector<const MecHost*> in_area;
  for (const auto& h : hosts)
    if (h.area.contains(position_m)) in_area.push_back(&h);
  if (upf) {
    std::vector<const MecHost*> preferred;
    for (const auto* h : in_area)
      if (std::find(upf->preferred.begin(), upf->preferred.end(), h->id) != upf->preferred.end()) preferred.push_back(h);
    if (!preferred.empty()) return preferred;
  }
  return in_area;
}

/// TOPSIS over `candidates` with the given forecasts and link metrics.
inline TopsisRanking rank_hosts(const std::vector<const MecHost*>& candidates, double position_m,
                                const std::map<HostId, Forecast>& forecasts,
                                const std::map<HostId, LinkMetrics>& links, const std::vector<Criterion>& criteria) {
  std::map<HostId, Forecast> fc;
  std::map<HostId, LinkMetrics> ln;
  std::map<HostId, double> dist;
  for (const auto* h : candidates) {
    auto f = forecasts.find(h->id);
    auto l = links.find(h->id);
    if (f == forecasts.end()) throw InputError("no forecast for host " + h->id.str());
    if (l == links.end()) throw InputError("no link metrics for host " + h->id.str());
    fc.emplace(h->id, f->second);
    ln.emplace(h->id, l->second);
    dist.emplace(h->id, std::abs(position_m - h->position_m));
  }
  return topsis_rank(build_decision_matrix(fc, ln, dist, criteria));
}

/// One decision epoch for one vehicle. Throws NoCandidate when no host covers
/// the vehicle, NotEnoughData when a candidate lacks a full window.
inline Decision evaluate(double now, const VehicleState& vehicle, const std::vector<MecHost>& hosts,
                         const MetricsStore& store, const Predictor& predictor,
                         const std::map<HostId, LinkMetrics>& links, const OrchestratorConfig& cfg,
                         const UpfEvent* upf = nullptr) {
  const auto candidates = candidate_hosts(hosts, vehicle.position_m, upf);
  if (candidates.empty())
    throw NoCandidate("no MEC host covers position " + csv::format_number(vehicle.position_m) + " m");

  Decision d;
  d.time = now;
  d.vehicle = vehicle.id;
  d.serving = vehicle.serving;
  d.position_m = vehicle.position_m;

  std::map<HostId, Forecast> forecasts;
  for (const auto* h : candidates) {
    auto f = predictor.forecast(store, h->id, now);
    d.availability[h->id] = f.availability;
    forecasts.emplace(h->id, std::move(f));
  }
  const auto ranking = rank_hosts(candidates, vehicle.position_m, forecasts, links, cfg.criteria);
  for (std::size_t i = 0; i < ranking.alternatives.size(); ++i) d.closeness[ranking.alternatives[i]] = ranking.closeness[i];

  const HostId best = ranking.selected;
  const bool serving_ok =
      std::any_of(candidates.begin(), candidates.end(), [&](const MecHost* h) { return h->id == vehicle.serving; });

  std::optional<Trigger> trigger;
  if (!serving_ok) {
    trigger = upf ? Trigger::UpfReattach : Trigger::OutOfArea;
  } else if (best != vehicle.serving) {
    const double gap = d.closeness.at(best) - d.closeness.at(vehicle.serving);
    const bool dwell_ok = upf || !vehicle.last_relocation_time || now - *vehicle.last_relocation_time >= cfg.min_dwell_s;
    if (!exceeds_hysteresis(d.closeness.at(best), d.closeness.at(vehicle.serving), cfg.hysteresis_delta)) {
      d.note = "gap " + csv::format_number(gap) + " within hysteresis";
    } else if (!dwell_ok) {
      d.note = "dwell time not elapsed";
    } else {
      trigger = upf ? Trigger::UpfReattach : Trigger::QosDegradation;
    }
  }
  if (!trigger) return d;

  d.trigger = trigger;
  if (!cfg.relocation_enabled) {
    d.note = "relocation disabled; would move to " + best.str();
    return d;
  }
  RelocationPlan plan;
  plan.time = now;
  plan.vehicle = vehicle.id;
  plan.source = vehicle.serving;
  plan.target = best;
  plan.trigger = *trigger;
  plan.closeness = d.closeness;
  d.plan = std::move(plan);
  return d;
}

/// Ranking for the initial discovery response. No full window exists yet at
/// attach time, so availability is the mean of whatever history each in-area
/// host has (at least one sample).
inline TopsisRanking rank_for_discovery(double now, double position_m, const std::vector<MecHost>& hosts,
                                        const MetricsStore& store, const std::map<HostId, LinkMetrics>& links,
                                        const OrchestratorConfig& cfg) {
  const auto candidates = candidate_hosts(hosts, position_m);
  if (candidates.empty()) throw NoCandidate("no MEC host covers position " + csv::format_number(position_m) + " m");
  std::map<HostId, Forecast> forecasts;
  for (const auto* h : candidates) {
    const std::size_t have = std::min(store.count_until(h->id, now), cfg.window);
    if (have == 0) throw NotEnoughData(0, 1, "history of host " + h->id.str());
    forecasts.emplace(h->id, baseline_predict(store.window(h->id, now, have), cfg.horizon));
  }
  return rank_hosts(candidates, position_m, forecasts, links, cfg.criteria);
}

}  // namespace mecorch
