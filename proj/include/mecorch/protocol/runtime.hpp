#pragma once

// Executes the relocation protocol over a simulated control plane: the
// orchestrator and client state machines, one agent per MEC host, the
// traffic-rule agent, and a network that delays (and optionally drops,
// duplicates or corrupts) messages. Every delivered message and every
// instance lifecycle change is appended to a JSON-lines trace:
//
//   {"time":12,"from":"orchestrator","to":"h3","kind":"InstantiateRequest",
//    "fields":{"seq":7,"relocation":1,...}}

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mecorch/protocol/client_fsm.hpp"
#include "mecorch/protocol/messages.hpp"
#include "mecorch/protocol/orchestrator_fsm.hpp"

namespace mecorch::protocol {

struct NetworkConfig {
  /// Per-message delay in ticks, drawn uniformly from [min, max]. Messages
  /// between one sender-receiver pair are never reordered.
  int min_delay_ticks = 1;
  int max_delay_ticks = 1;
  double drop_probability = 0.0;
  double duplicate_probability = 0.0;
  /// Chance that a ContextTransferData payload byte is flipped in transit.
  double corrupt_probability = 0.0;

  bool faulty() const { return drop_probability > 0 || duplicate_probability > 0 || corrupt_probability > 0; }
};

struct TraceRecord {
  double time = 0.0;
  std::string from;
  std::string to;
  std::string kind;
  nlohmann::json fields;

  nlohmann::json to_json() const {
    return {{"time", time}, {"from", from}, {"to", to}, {"kind", kind}, {"fields", fields}};
  }
};

inline nlohmann::json message_record_fields(const Envelope& env) {
  auto f = fields_of(env.body);
  f["seq"] = env.seq;
  f["relocation"] = env.relocation;
  return f;
}

/// Application instances of one MEC host, keyed by vehicle.
class HostAgent {
 public:
  struct Instance {
    EndpointRef endpoint;
    std::optional<ApplicationContext> context;
  };

  HostAgent(HostId id, std::string service_id) : id_(std::move(id)), service_id_(std::move(service_id)) {}

  const HostId& id() const noexcept { return id_; }
  bool has_instance(const VehicleId& v) const { return instances_.count(v) != 0; }
  const Instance* instance(const VehicleId& v) const {
    auto it = instances_.find(v);
    return it == instances_.end() ? nullptr : &it->second;
  }

  struct Output {
    std::vector<Envelope> out;
    std::vector<TraceRecord> lifecycle;
    std::vector<Violation> violations;
  };

  /// Initial deployment of a vehicle's instance with its context.
  Output deploy(double now, const ApplicationContext& ctx) {
    Output o;
    start(now, ctx.vehicle, o);
    store(now, ctx, o);
    return o;
  }

  Output handle(double now, const Envelope& env) {
    Output o;
    auto reply = [&](const std::string& to, Message body) {
      o.out.push_back({id_.str(), to, next_seq_++, env.relocation, std::move(body)});
    };
    auto violate = [&](std::string reason) {
      o.violations.push_back({now, id_.str(), "-", kind_name(env.body), std::move(reason)});
    };
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, InstantiateRequest>) {
            if (!has_instance(m.vehicle)) start(now, m.vehicle, o);
            reply(env.from, InstantiateAck{m.vehicle, id_, instances_.at(m.vehicle).endpoint});
          } else if constexpr (std::is_same_v<M, ContextTransferRequest>) {
            const Instance* inst = instance(m.vehicle);
            if (!inst || !inst->context) return violate("no context to transfer");
            try {
              reply(m.target_host.str(), ContextTransferData{m.target_host, transfer_context(*inst->context, m.target_host)});
            } catch (const IntegrityError& e) {
              reply(env.from, ContextTransferFailed{m.vehicle, m.target_host, e.what()});
            }
          } else if constexpr (std::is_same_v<M, ContextTransferData>) {
            const auto& ctx = m.context;
            if (!has_instance(ctx.vehicle)) {
              reply(kOrchestrator, ContextTransferFailed{ctx.vehicle, id_, "no instance"});
            } else if (!ctx.intact()) {
              reply(kOrchestrator, ContextTransferFailed{ctx.vehicle, id_, "checksum mismatch"});
            } else {
              const auto& held = instances_.at(ctx.vehicle).context;
              if (!held || held->version < ctx.version) store(now, ctx, o);
              reply(kOrchestrator, ContextTransferAck{ctx.vehicle, id_, ctx.version});
            }
          } else if constexpr (std::is_same_v<M, TerminateRequest>) {
            if (instances_.erase(m.vehicle)) {
              o.lifecycle.push_back({now, id_.str(), id_.str(), "InstanceStopped", {{"vehicle", m.vehicle.str()}}});
            }
          } else if constexpr (std::is_same_v<M, ServiceRequest>) {
            // Data plane; served iff an instance exists. The runtime records it.
          } else {
            violate("not addressed to a host");
          }
        },
        env.body);
    return o;
  }

 private:
  void start(double now, const VehicleId& v, Output& o) {
    instances_[v] = Instance{endpoint_for(id_, service_id_), std::nullopt};
    o.lifecycle.push_back({now, id_.str(), id_.str(), "InstanceStarted", {{"vehicle", v.str()}}});
  }
  void store(double now, const ApplicationContext& ctx, Output& o) {
    instances_.at(ctx.vehicle).context = ctx;
    o.lifecycle.push_back({now, id_.str(), id_.str(), "ContextStored",
                           {{"vehicle", ctx.vehicle.str()},
                            {"version", ctx.version},
                            {"payload", to_hex(ctx.payload)}}});
  }

  HostId id_;
  std::string service_id_;
  std::map<VehicleId, Instance> instances_;
  std::uint64_t next_seq_ = 1;
};

/// Applies traffic-steering rules; acknowledges every ReconfigureRules.
class RuleAgent {
 public:
  std::vector<Envelope> handle(const Envelope& env) {
    std::vector<Envelope> out;
    if (const auto* r = std::get_if<ReconfigureRules>(&env.body)) {
      routes_[r->vehicle] = r->endpoint;
      out.push_back({kRuleAgent, env.from, next_seq_++, env.relocation, ReconfigureAck{r->vehicle}});
    }
    return out;
  }
  std::optional<EndpointRef> route(const VehicleId& v) const {
    auto it = routes_.find(v);
    if (it == routes_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<VehicleId, EndpointRef> routes_;
  std::uint64_t next_seq_ = 1;
};

/// Result of one client request.
struct ServedRequest {
  std::optional<EndpointRef> endpoint;
  bool instance_present = false;
};

class ControlPlane {
 public:
  ControlPlane(std::vector<HostId> hosts, VehicleId vehicle, std::string service_id, NetworkConfig net,
               std::uint64_t seed, double tick_s = 1.0, RetryPolicy policy = {})
      : client_(std::move(vehicle)), service_id_(std::move(service_id)), net_(net), rng_(seed), tick_s_(tick_s) {
    orch_.policy = policy;
    for (auto& h : hosts) hosts_.emplace(h, HostAgent(h, service_id_));
  }

  const OrchestratorFsm& orchestrator() const noexcept { return orch_; }
  const ClientFsm& client() const noexcept { return client_; }
  const HostAgent& host(const HostId& h) const { return hosts_.at(h); }
  const RuleAgent& rules() const noexcept { return rules_; }
  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }
  const std::vector<Violation>& violations() const noexcept { return violations_; }
  std::size_t in_flight() const noexcept { return queue_.size(); }

  /// Drains relocation outcomes recorded since the last call.
  std::vector<RelocationEvent> take_events() { return std::exchange(events_, {}); }

  const Session* session() const {
    auto it = orch_.sessions.find(client_.vehicle);
    return it == orch_.sessions.end() ? nullptr : &it->second;
  }

  /// Deploys the vehicle's instance on the first ranked service and runs
  /// discovery synchronously, so the client is connected before its first tick.
  void bootstrap(double now, std::vector<ServiceInfo> ranked, std::vector<std::uint8_t> payload) {
    if (ranked.empty()) throw NoCandidate("no MEC host offers the service");
    const HostId first = ranked.front().endpoint.host;
    absorb(now, hosts_.at(first).deploy(now, make_context(client_.vehicle, first, std::move(payload))));
    Envelope req = discovery_request(client_, {service_id_});
    record(now, req);
    auto step = orchestrator_step(orch_, DiscoveryEvent{req, std::move(ranked)});
    orch_ = std::move(step.fsm);
    collect(step.violations, step.events);
    for (auto& env : step.out) {
      record(now, env);
      auto cs = client_step(client_, env, now);
      client_ = std::move(cs.fsm);
      violations_.insert(violations_.end(), cs.violations.begin(), cs.violations.end());
    }
  }

  /// Client issues this tick's request to its active endpoint.
  ServedRequest client_tick(double now) {
    auto cs = client_step(client_, ClientTick{now});
    client_ = std::move(cs.fsm);
    violations_.insert(violations_.end(), cs.violations.begin(), cs.violations.end());
    ServedRequest served;
    for (auto& env : cs.out) {
      if (std::holds_alternative<ServiceRequest>(env.body) && cs.active) {
        served.endpoint = cs.active;
        auto it = hosts_.find(cs.active->host);
        served.instance_present = it != hosts_.end() && it->second.has_instance(client_.vehicle);
        TraceRecord rec{now, env.from, env.to, "ServiceRequest", message_record_fields(env)};
        rec.fields["served"] = served.instance_present;
        trace_.push_back(std::move(rec));
      } else {
        post(now, std::move(env));
      }
    }
    return served;
  }

  void submit_plan(double now, const RelocationPlan& plan) {
    orch_.now = now;
    run_orchestrator(now, plan);
  }

  /// Delivers every message due by `now`, then advances orchestrator timers.
  /// A reply arriving on the tick its timeout expires still counts.
  void advance(double now) {
    deliver_due(now);
    run_orchestrator(now, Tick{now});
  }

  std::string trace_jsonl() const {
    std::string out;
    for (const auto& r : trace_) {
      out += r.to_json().dump();
      out += '\n';
    }
    return out;
  }

 private:
  struct Pending {
    double due;
    std::uint64_t order;
    Envelope env;
  };

  void run_orchestrator(double now, const OrchestratorEvent& ev) {
    auto step = orchestrator_step(orch_, ev);
    orch_ = std::move(step.fsm);
    collect(step.violations, step.events);
    for (auto& env : step.out) post(now, std::move(env));
  }

  void collect(const std::vector<Violation>& v, const std::vector<RelocationEvent>& e) {
    violations_.insert(violations_.end(), v.begin(), v.end());
    events_.insert(events_.end(), e.begin(), e.end());
  }

  void absorb(double, HostAgent::Output o) {
    trace_.insert(trace_.end(), o.lifecycle.begin(), o.lifecycle.end());
    violations_.insert(violations_.end(), o.violations.begin(), o.violations.end());
  }

  void record(double now, const Envelope& env, bool dropped = false) {
    TraceRecord rec{now, env.from, env.to, kind_name(env.body), message_record_fields(env)};
    if (dropped) rec.fields["dropped"] = true;
    trace_.push_back(std::move(rec));
  }

  double draw_delay() {
    if (net_.max_delay_ticks <= net_.min_delay_ticks) return net_.min_delay_ticks * tick_s_;
    std::uniform_int_distribution<int> d(net_.min_delay_ticks, net_.max_delay_ticks);
    return d(rng_) * tick_s_;
  }

  bool chance(double p) {
    if (p <= 0.0) return false;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
  }

  void schedule(double now, Envelope env, double extra = 0.0) {
    auto& last = last_due_[{env.from, env.to}];
    const double due = std::max(now + draw_delay() + extra, last);
    last = due;
    queue_.push_back({due, next_order_++, std::move(env)});
  }

  // Fault draws happen in a fixed order per message: drop, corrupt, duplicate.
  void post(double now, Envelope env) {
    if (net_.faulty()) {
      if (chance(net_.drop_probability)) {
        record(now, env, true);
        return;
      }
      if (auto* data = std::get_if<ContextTransferData>(&env.body);
          data && !data->context.payload.empty() && chance(net_.corrupt_probability)) {
        data->context.payload[0] ^= 0x5A;
      }
      if (chance(net_.duplicate_probability)) {
        Envelope copy = env;
        schedule(now, std::move(env));
        schedule(now, std::move(copy), tick_s_);
        return;
      }
    }
    schedule(now, std::move(env));
  }

  void deliver_due(double now) {
    while (true) {
      auto it = std::min_element(queue_.begin(), queue_.end(), [](const Pending& a, const Pending& b) {
        return std::tie(a.due, a.order) < std::tie(b.due, b.order);
      });
      if (it == queue_.end() || it->due > now + 1e-9) return;
      Envelope env = std::move(it->env);
      queue_.erase(it);
      deliver(now, env);
    }
  }

  void deliver(double now, const Envelope& env) {
    record(now, env);
    if (env.to == kOrchestrator) {
      orch_.now = now;
      run_orchestrator(now, env);
    } else if (env.to == kRuleAgent) {
      for (auto& out : rules_.handle(env)) post(now, std::move(out));
    } else if (env.to == client_.vehicle.str()) {
      auto cs = client_step(client_, env, now);
      client_ = std::move(cs.fsm);
      violations_.insert(violations_.end(), cs.violations.begin(), cs.violations.end());
      for (auto& out : cs.out) post(now, std::move(out));
    } else if (auto h = hosts_.find(HostId{env.to}); h != hosts_.end()) {
      auto o = h->second.handle(now, env);
      auto out = std::move(o.out);
      absorb(now, std::move(o));
      for (auto& e : out) post(now, std::move(e));
    } else {
      violations_.push_back({now, env.to, "-", kind_name(env.body), "no such party"});
    }
  }

  OrchestratorFsm orch_;
  ClientFsm client_;
  std::map<HostId, HostAgent> hosts_;
  RuleAgent rules_;
  std::string service_id_;
  NetworkConfig net_;
  std::mt19937_64 rng_;
  double tick_s_;
  std::vector<Pending> queue_;
  std::map<std::pair<std::string, std::string>, double> last_due_;
  std::uint64_t next_order_ = 0;
  std::vector<TraceRecord> trace_;
  std::vector<Violation> violations_;
  std::vector<RelocationEvent> events_;
};

}  // namespace mecorch::protocol
