#pragma once

// Offline decision replay: runs the orchestrator's evaluation over a recorded
// metrics trace, assuming every plan takes effect immediately (no protocol).

#include <algorithm>
#include <cmath>
#include <vector>

#include "mecorch/orchestrator.hpp"
#include "mecorch/sim/config.hpp"
#include "mecorch/sim/runner.hpp"

namespace mecorch::sim {

inline std::vector<Decision> replay(const MetricsStore& store, const SimConfig& cfg, const Predictor& predictor) {
  std::vector<std::string> missing;
  for (const auto& h : cfg.hosts)
    if (!store.contains(h.host.id)) missing.push_back("hosts: host '" + h.host.id.str() + "' has no samples in the trace");
  if (!missing.empty()) throw ConfigError(missing);

  double t0 = INFINITY, t_end = -INFINITY;
  for (const auto& h : cfg.hosts) {
    auto s = store.samples(h.host.id);
    t0 = std::min(t0, s.front().timestamp);
    t_end = std::max(t_end, s.back().timestamp);
  }
  const auto hosts = cfg.mec_hosts();
  const double period = cfg.orchestrator.decision_period_s;

  auto first = rank_for_discovery(t0, cfg.vehicle.position_at(t0), hosts, store, nominal_links(cfg, cfg.vehicle.position_at(t0)),
                                  cfg.orchestrator);
  VehicleState vs{cfg.vehicle.id, cfg.vehicle.position_at(t0), first.selected, std::nullopt};

  std::vector<double> times;
  for (double t = t0 + period; t <= t_end + 1e-9; t += period) times.push_back(t);
  for (const auto& e : cfg.upf_events)
    if (e.time >= t0 && e.time <= t_end) times.push_back(e.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              times.end());

  std::vector<Decision> out;
  for (double t : times) {
    const UpfEvent* upf = nullptr;
    for (const auto& e : cfg.upf_events)
      if (std::abs(e.time - t) < 1e-9) upf = &e;
    vs.position_m = cfg.vehicle.position_at(t);
    const auto candidates = candidate_hosts(hosts, vs.position_m, upf);
    if (candidates.empty()) continue;
    if (!std::all_of(candidates.begin(), candidates.end(),
                     [&](const MecHost* h) { return predictor.ready(store, h->id, t); }))
      continue;
    auto d = evaluate(t, vs, hosts, store, predictor, nominal_links(cfg, vs.position_m), cfg.orchestrator, upf);
    if (d.plan) {
      vs.serving = d.plan->target;
      vs.last_relocation_time = t;
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace mecorch::sim
