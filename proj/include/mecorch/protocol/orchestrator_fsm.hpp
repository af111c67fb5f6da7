#pragma once

// Orchestrator side of the relocation procedure. One session per vehicle:
//
//   Idle --plan--> Instantiating --InstantiateAck--> Transferring
//        --ContextTransferAck--> Reconfiguring --ReconfigureAck--> Notifying
//        --NotificationAck--> Idle (serving endpoint switched)
//
// Each phase waits for one reply. Without it the request is resent every
// `timeout_ticks` ticks; after `max_attempts` sends the relocation aborts to
// Idle and the half-built target instance is terminated. Notifying never
// aborts: the context already lives on the target and the client may have
// switched, so the notification is resent until acknowledged.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mecorch/protocol/messages.hpp"
#include "mecorch/protocol/plan.hpp"

namespace mecorch::protocol {

enum class Phase { Idle, Instantiating, Transferring, Reconfiguring, Notifying };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::Instantiating: return "Instantiating";
    case Phase::Transferring: return "Transferring";
    case Phase::Reconfiguring: return "Reconfiguring";
    case Phase::Notifying: return "Notifying";
  }
  return "?";
}

struct RetryPolicy {
  int timeout_ticks = 3;
  int max_attempts = 3;
  /// Seconds between NotificationAck and termination of the old instance.
  double teardown_delay_s = 10.0;
};

struct Session {
  Phase phase = Phase::Idle;
  EndpointRef serving;
  std::uint64_t relocation = 0;
  HostId source;
  HostId target;
  Trigger trigger = Trigger::QosDegradation;
  std::optional<EndpointRef> target_endpoint;
  std::uint64_t version = 0;
  int waiting_ticks = 0;
  int attempts = 0;
  /// Time the outstanding request was (re)sent; that tick does not count.
  double sent_at = 0.0;
  std::optional<Envelope> outstanding;
};

struct PendingTeardown {
  VehicleId vehicle;
  HostId host;
  double due = 0.0;
};

struct OrchestratorFsm {
  std::map<VehicleId, Session> sessions;
  std::vector<PendingTeardown> teardowns;
  std::uint64_t next_seq = 1;
  std::uint64_t next_relocation = 1;
  double now = 0.0;
  RetryPolicy policy;
};

/// Discovery request paired with the services the orchestrator offers,
/// already in preference order. The first entry becomes the serving endpoint.
struct DiscoveryEvent {
  Envelope request;
  std::vector<ServiceInfo> ranked;
};

struct Tick {
  double now = 0.0;
};

using OrchestratorEvent = std::variant<Envelope, RelocationPlan, DiscoveryEvent, Tick>;

/// Event that did not fit the receiving state machine's current state.
struct Violation {
  double time = 0.0;
  std::string party;
  std::string state;
  std::string event;
  std::string reason;
};

enum class RelocationOutcome { Accepted, Rejected, Completed, Aborted };

inline const char* to_string(RelocationOutcome o) {
  switch (o) {
    case RelocationOutcome::Accepted: return "accepted";
    case RelocationOutcome::Rejected: return "rejected";
    case RelocationOutcome::Completed: return "completed";
    case RelocationOutcome::Aborted: return "aborted";
  }
  return "?";
}

struct RelocationEvent {
  double time = 0.0;
  RelocationOutcome outcome = RelocationOutcome::Accepted;
  std::uint64_t relocation = 0;
  VehicleId vehicle;
  HostId source;
  HostId target;
  Trigger trigger = Trigger::QosDegradation;
  std::uint64_t version = 0;
  std::string reason;
};

struct OrchestratorStep {
  OrchestratorFsm fsm;
  std::vector<Envelope> out;
  std::vector<Violation> violations;
  std::vector<RelocationEvent> events;
};

namespace detail {

class OrchestratorStepper {
 public:
  explicit OrchestratorStepper(OrchestratorFsm fsm) { r_.fsm = std::move(fsm); }

  OrchestratorStep finish() && { return std::move(r_); }

  void on(const RelocationPlan& plan) {
    auto it = r_.fsm.sessions.find(plan.vehicle);
    if (it == r_.fsm.sessions.end()) return reject(plan, "unknown vehicle");
    Session& s = it->second;
    if (s.phase != Phase::Idle) return reject(plan, "busy");
    if (plan.source != s.serving.host) return reject(plan, "stale plan: vehicle is served by " + s.serving.host.str());
    if (plan.target == plan.source) return reject(plan, "source equals target");

    s.relocation = r_.fsm.next_relocation++;
    s.source = plan.source;
    s.target = plan.target;
    s.trigger = plan.trigger;
    s.target_endpoint.reset();
    s.version = 0;
    s.phase = Phase::Instantiating;
    push_event(RelocationOutcome::Accepted, plan.vehicle, s, {});
    request(s, plan.target.str(), InstantiateRequest{plan.vehicle, plan.target, s.serving.service_id});
  }

  void on(const DiscoveryEvent& d) {
    const auto* req = std::get_if<DiscoveryRequest>(&d.request.body);
    if (!req) return violate("?", kind_name(d.request.body), "discovery event without DiscoveryRequest");
    auto [it, inserted] = r_.fsm.sessions.try_emplace(req->vehicle);
    if (!inserted && it->second.phase != Phase::Idle)
      return violate(to_string(it->second.phase), "DiscoveryRequest", "vehicle is relocating");
    if (!d.ranked.empty()) it->second.serving = d.ranked.front().endpoint;
    send(d.request.from, 0, DiscoveryResponse{req->vehicle, d.ranked});
  }

  void on(const Tick& t) {
    r_.fsm.now = t.now;
    for (auto& [vehicle, s] : r_.fsm.sessions) {
      if (s.phase == Phase::Idle || !s.outstanding || s.sent_at >= t.now) continue;
      if (++s.waiting_ticks < r_.fsm.policy.timeout_ticks) continue;
      if (s.phase == Phase::Notifying || s.attempts < r_.fsm.policy.max_attempts) {
        Envelope again = *s.outstanding;
        again.seq = r_.fsm.next_seq++;
        s.outstanding = again;
        s.waiting_ticks = 0;
        s.sent_at = t.now;
        ++s.attempts;
        r_.out.push_back(std::move(again));
      } else {
        abort(vehicle, s, std::string("timeout in ") + to_string(s.phase));
      }
    }
    std::vector<PendingTeardown> keep;
    for (auto& td : r_.fsm.teardowns) {
      if (td.due > t.now) {
        keep.push_back(td);
        continue;
      }
      auto it = r_.fsm.sessions.find(td.vehicle);
      const bool in_use = it != r_.fsm.sessions.end() &&
                          (it->second.serving.host == td.host ||
                           (it->second.phase != Phase::Idle && it->second.target == td.host));
      if (!in_use) send(td.host.str(), 0, TerminateRequest{td.vehicle, td.host});
    }
    r_.fsm.teardowns = std::move(keep);
  }

  void on(const Envelope& env) {
    std::visit([&](const auto& m) { handle(env, m); }, env.body);
  }

 private:
  Session* session_for(const VehicleId& v, const Envelope& env, Phase expected) {
    auto it = r_.fsm.sessions.find(v);
    if (it == r_.fsm.sessions.end()) {
      violate("-", kind_name(env.body), "unknown vehicle " + v.str());
      return nullptr;
    }
    Session& s = it->second;
    if (s.phase != expected) {
      violate(to_string(s.phase), kind_name(env.body), std::string("expected in ") + to_string(expected));
      return nullptr;
    }
    if (env.relocation != s.relocation) {
      violate(to_string(s.phase), kind_name(env.body),
              "belongs to relocation " + std::to_string(env.relocation) + ", current is " +
                  std::to_string(s.relocation));
      return nullptr;
    }
    return &s;
  }

  void handle(const Envelope& env, const InstantiateAck& m) {
    Session* s = session_for(m.vehicle, env, Phase::Instantiating);
    if (!s) return;
    if (m.target_host != s->target) return violate("Instantiating", "InstantiateAck", "ack from unexpected host");
    s->target_endpoint = m.endpoint;
    s->phase = Phase::Transferring;
    request(*s, s->source.str(), ContextTransferRequest{m.vehicle, s->source, s->target});
  }

  void handle(const Envelope& env, const ContextTransferAck& m) {
    Session* s = session_for(m.vehicle, env, Phase::Transferring);
    if (!s) return;
    if (m.target_host != s->target) return violate("Transferring", "ContextTransferAck", "ack from unexpected host");
    s->version = m.version;
    s->phase = Phase::Reconfiguring;
    request(*s, kRuleAgent, ReconfigureRules{m.vehicle, *s->target_endpoint});
  }

  void handle(const Envelope& env, const ContextTransferFailed& m) {
    Session* s = session_for(m.vehicle, env, Phase::Transferring);
    if (!s) return;
    abort(m.vehicle, *s, "context transfer failed: " + m.reason);
  }

  void handle(const Envelope& env, const ReconfigureAck& m) {
    Session* s = session_for(m.vehicle, env, Phase::Reconfiguring);
    if (!s) return;
    s->phase = Phase::Notifying;
    request(*s, m.vehicle.str(), RelocationCompleteNotification{m.vehicle, *s->target_endpoint, s->version});
  }

  void handle(const Envelope& env, const NotificationAck& m) {
    Session* s = session_for(m.vehicle, env, Phase::Notifying);
    if (!s) return;
    if (m.version != s->version) return violate("Notifying", "NotificationAck", "version mismatch");
    const HostId old = s->serving.host;
    s->serving = *s->target_endpoint;
    s->phase = Phase::Idle;
    s->outstanding.reset();
    r_.fsm.teardowns.push_back({m.vehicle, old, r_.fsm.now + r_.fsm.policy.teardown_delay_s});
    push_event(RelocationOutcome::Completed, m.vehicle, *s, {});
  }

  template <class M>
  void handle(const Envelope& env, const M&) {
    violate("-", kind_name(env.body), "not addressed to the orchestrator");
  }

  void abort(const VehicleId& vehicle, Session& s, const std::string& reason) {
    push_event(RelocationOutcome::Aborted, vehicle, s, reason);
    send(s.target.str(), s.relocation, TerminateRequest{vehicle, s.target});
    s.phase = Phase::Idle;
    s.outstanding.reset();
    s.target_endpoint.reset();
  }

  void reject(const RelocationPlan& plan, const std::string& reason) {
    RelocationEvent e;
    e.time = r_.fsm.now;
    e.outcome = RelocationOutcome::Rejected;
    e.vehicle = plan.vehicle;
    e.source = plan.source;
    e.target = plan.target;
    e.trigger = plan.trigger;
    e.reason = reason;
    r_.events.push_back(std::move(e));
  }

  void push_event(RelocationOutcome o, const VehicleId& v, const Session& s, std::string reason) {
    r_.events.push_back({r_.fsm.now, o, s.relocation, v, s.source, s.target, s.trigger, s.version, std::move(reason)});
  }

  void send(const std::string& to, std::uint64_t relocation, Message body) {
    r_.out.push_back({kOrchestrator, to, r_.fsm.next_seq++, relocation, std::move(body)});
  }

  // Sends a request that expects a reply and arms the retry timer.
  void request(Session& s, const std::string& to, Message body) {
    Envelope env{kOrchestrator, to, r_.fsm.next_seq++, s.relocation, std::move(body)};
    s.outstanding = env;
    s.waiting_ticks = 0;
    s.sent_at = r_.fsm.now;
    s.attempts = 1;
    r_.out.push_back(std::move(env));
  }

  void violate(std::string state, std::string event, std::string reason) {
    r_.violations.push_back({r_.fsm.now, kOrchestrator, std::move(state), std::move(event), std::move(reason)});
  }

  OrchestratorStep r_;
};

}  // namespace detail

/// Pure transition: the input state is not modified.
inline OrchestratorStep orchestrator_step(OrchestratorFsm fsm, const OrchestratorEvent& event) {
  detail::OrchestratorStepper stepper(std::move(fsm));
  std::visit([&](const auto& e) { stepper.on(e); }, event);
  return std::move(stepper).finish();
}

}  // namespace mecorch::protocol
