#pragma once

// Tick-driven scenario runner. Within one tick t:
//   1. every host's metrics sample for t is appended to the store;
//   2. at t = 0 the instance is deployed on the best-ranked host and the
//      client discovers it;
//   3. the client sends its request, answered by the endpoint it is bound to
//      (response = RTT + compute delay at that host's utilization);
//   4. on a decision epoch or a UPF event the orchestrator evaluates and may
//      submit a relocation plan;
//   5. due control-plane messages are delivered and retry timers advance.
//
// Randomness: a master mt19937_64(seed) yields, in order, one seed per host
// (config order) for its load profile, the RTT jitter seed, the control-plane
// fault seed and the context payload seed.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mecorch/lstm.hpp"
#include "mecorch/orchestrator.hpp"
#include "mecorch/protocol/runtime.hpp"
#include "mecorch/sim/config.hpp"
#include "mecorch/sim/model.hpp"

namespace mecorch::sim {

struct TickRecord {
  double t = 0.0;
  HostId host;
  double rtt_ms = 0.0;
  double compute_ms = 0.0;
  double total_ms = 0.0;
};

struct Outage {
  double start = 0.0;
  double end = 0.0;
  std::string reason;
};

struct SimSummary {
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
  std::map<HostId, std::size_t> selection_counts;
  std::size_t records = 0;
  std::size_t relocations_completed = 0;
  std::size_t relocations_aborted = 0;
  std::size_t outage_ticks = 0;
  std::uint64_t seed = 0;
};

struct SimResult {
  std::vector<TickRecord> records;
  std::vector<protocol::RelocationEvent> relocations;
  std::vector<Outage> outages;
  std::vector<Decision> decisions;
  std::vector<protocol::TraceRecord> messages;
  std::vector<protocol::Violation> violations;
  MetricsStore metrics;
  SimSummary summary;
};

inline LstmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path.string());
  try {
    return lstm_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("model file " + path.string() + ": " + e.what());
  }
}

inline Predictor make_predictor(const SimConfig& cfg) {
  if (cfg.orchestrator.predictor == PredictorKind::Baseline)
    return Predictor::baseline(cfg.orchestrator.window, cfg.orchestrator.horizon);
  if (!cfg.model_path) throw ConfigError({"orchestrator.model_path: is required for the lstm predictor"});
  return Predictor::lstm(load_model(*cfg.model_path), cfg.orchestrator.horizon);
}

inline std::map<HostId, LinkMetrics> nominal_links(const SimConfig& cfg, double position_m) {
  std::map<HostId, LinkMetrics> out;
  for (const auto& h : cfg.hosts)
    out[h.host.id] = {nominal_rtt(h.link, position_m - h.host.position_m), h.link.bandwidth_mbps};
  return out;
}

/// Per-host samples at every tick of the run, from the per-host seeds.
inline std::map<HostId, std::vector<HostMetricsSample>> generate_metrics(const SimConfig& cfg,
                                                                        const std::vector<std::uint64_t>& seeds) {
  std::map<HostId, std::vector<HostMetricsSample>> out;
  for (std::size_t i = 0; i < cfg.hosts.size(); ++i)
    out[cfg.hosts[i].host.id] = generate_profile(cfg.hosts[i].host.id, cfg.hosts[i].load, cfg.tick_s, cfg.duration_s, seeds[i]);
  return out;
}

struct Seeds {
  std::vector<std::uint64_t> hosts;
  std::uint64_t jitter = 0;
  std::uint64_t network = 0;
  std::uint64_t payload = 0;
};

inline Seeds derive_seeds(const SimConfig& cfg) {
  std::mt19937_64 master(cfg.seed);
  Seeds s;
  for (std::size_t i = 0; i < cfg.hosts.size(); ++i) s.hosts.push_back(master());
  s.jitter = master();
  s.network = master();
  s.payload = master();
  return s;
}

/// The full metrics trace a run of `cfg` observes.
inline MetricsStore scenario_metrics(const SimConfig& cfg) {
  MetricsStore store;
  for (const auto& [id, samples] : generate_metrics(cfg, derive_seeds(cfg).hosts))
    for (const auto& s : samples) store.append(s);
  return store;
}

inline SimResult run_scenario(const SimConfig& cfg, const Predictor& predictor) {
  const Seeds seeds = derive_seeds(cfg);
  std::mt19937_64 jitter(seeds.jitter);
  const std::uint64_t network_seed = seeds.network;
  std::mt19937_64 payload_rng(seeds.payload);

  const auto series = generate_metrics(cfg, seeds.hosts);
  const auto hosts = cfg.mec_hosts();
  std::vector<HostId> host_ids;
  for (const auto& h : hosts) host_ids.push_back(h.id);

  std::vector<std::uint8_t> payload(cfg.context_bytes);
  for (auto& b : payload) b = static_cast<std::uint8_t>(payload_rng() & 0xFF);

  protocol::ControlPlane cp(host_ids, cfg.vehicle.id, cfg.service_id, cfg.network, network_seed, cfg.tick_s,
                            protocol::RetryPolicy{3, 3, cfg.orchestrator.decision_period_s});

  SimResult res;
  for (const auto& h : cfg.hosts) res.summary.selection_counts[h.host.id] = 0;
  res.summary.seed = cfg.seed;

  std::optional<double> last_relocation;
  std::optional<Outage> open_outage;
  std::optional<double> last_outage_tick;
  auto mark_outage = [&](double t, const std::string& reason) {
    if (last_outage_tick != t) ++res.summary.outage_ticks;
    last_outage_tick = t;
    if (open_outage && open_outage->reason == reason && t - open_outage->end <= cfg.tick_s * 1.000001) {
      open_outage->end = t;
    } else {
      if (open_outage) res.outages.push_back(*open_outage);
      open_outage = Outage{t, t, reason};
    }
  };

  const std::size_t ticks = series.begin()->second.size();
  const auto epoch_every = static_cast<std::size_t>(std::llround(cfg.orchestrator.decision_period_s / cfg.tick_s));
  for (std::size_t k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * cfg.tick_s;
    const double pos = cfg.vehicle.position_at(t);
    for (const auto& [id, samples] : series) res.metrics.append(samples[k]);
    const auto links = nominal_links(cfg, pos);

    if (k == 0) {
      auto ranking = rank_for_discovery(t, pos, hosts, res.metrics, links, cfg.orchestrator);
      std::vector<protocol::ServiceInfo> ranked;
      for (const auto& id : ranking.order) {
        const auto* h = cfg.find_host(id);
        ranked.push_back({cfg.service_id, protocol::endpoint_for(id, cfg.service_id), h->host.area});
      }
      cp.bootstrap(t, std::move(ranked), payload);
      ++res.summary.selection_counts[ranking.selected];
    }

    // Data plane.
    const auto served = cp.client_tick(t);
    if (served.endpoint && served.instance_present) {
      const auto& hc = *cfg.find_host(served.endpoint->host);
      TickRecord r;
      r.t = t;
      r.host = hc.host.id;
      r.rtt_ms = rtt(hc.link, pos - hc.host.position_m, jitter);
      r.compute_ms = compute_delay(series.at(hc.host.id)[k].cpu, cfg.d0_ms);
      r.total_ms = r.rtt_ms + r.compute_ms;
      res.records.push_back(r);
    } else {
      mark_outage(t, "no instance behind the active endpoint");
    }

    // Decision.
    const UpfEvent* upf = nullptr;
    for (const auto& e : cfg.upf_events)
      if (std::abs(e.time - t) < cfg.tick_s / 2) upf = &e;
    const bool epoch = k > 0 && epoch_every > 0 && k % epoch_every == 0;
    const auto candidates = candidate_hosts(hosts, pos, upf);
    if (candidates.empty()) {
      mark_outage(t, "no MEC host covers the vehicle");
    } else if (epoch || upf) {
      const bool ready = std::all_of(candidates.begin(), candidates.end(),
                                     [&](const MecHost* h) { return predictor.ready(res.metrics, h->id, t); });
      const auto* session = cp.session();
      if (ready && session) {
        VehicleState vs{cfg.vehicle.id, pos, session->serving.host, last_relocation};
        auto d = evaluate(t, vs, hosts, res.metrics, predictor, links, cfg.orchestrator, upf);
        if (d.plan) {
          if (session->phase != protocol::Phase::Idle) d.note = "relocation in progress; plan deferred";
          cp.submit_plan(t, *d.plan);
        }
        res.decisions.push_back(std::move(d));
      }
    }

    cp.advance(t);
    for (auto& e : cp.take_events()) {
      if (e.outcome == protocol::RelocationOutcome::Completed) {
        last_relocation = t;
        ++res.summary.selection_counts[e.target];
        ++res.summary.relocations_completed;
      } else if (e.outcome == protocol::RelocationOutcome::Aborted) {
        ++res.summary.relocations_aborted;
      }
      res.relocations.push_back(std::move(e));
    }
  }
  if (open_outage) res.outages.push_back(*open_outage);

  res.messages = cp.trace();
  res.violations = cp.violations();
  std::vector<double> totals;
  totals.reserve(res.records.size());
  for (const auto& r : res.records) totals.push_back(r.total_ms);
  const auto stats = summarize(totals);
  res.summary.mean_ms = stats.mean;
  res.summary.stddev_ms = stats.stddev;
  res.summary.records = stats.count;
  return res;
}

inline SimResult run_scenario(const SimConfig& cfg) { return run_scenario(cfg, make_predictor(cfg)); }

}  // namespace mecorch::sim
