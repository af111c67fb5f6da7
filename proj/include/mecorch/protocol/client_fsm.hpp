#pragma once

// In-vehicle edge-aware client. It connects to the first service of the
// discovery response and switches endpoint one tick after a relocation
// notification, so the request of the current tick still goes to the old
// instance.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "mecorch/protocol/messages.hpp"
#include "mecorch/protocol/orchestrator_fsm.hpp"

namespace mecorch::protocol {

namespace client {
struct Discovering {};
struct Connected {
  EndpointRef endpoint;
};
struct Switching {
  EndpointRef old_endpoint;
  EndpointRef new_endpoint;
};
}  // namespace client

struct ClientFsm {
  VehicleId vehicle;
  std::variant<client::Discovering, client::Connected, client::Switching> state;
  /// Hosts offered by the last discovery response.
  std::vector<HostId> known_hosts;
  /// Context version of the last applied notification.
  std::uint64_t applied_version = 1;
  std::uint64_t next_seq = 1;

  explicit ClientFsm(VehicleId v = VehicleId{}) : vehicle(std::move(v)) {}

  std::optional<EndpointRef> endpoint() const {
    if (const auto* c = std::get_if<client::Connected>(&state)) return c->endpoint;
    if (const auto* s = std::get_if<client::Switching>(&state)) return s->old_endpoint;
    return std::nullopt;
  }
};

struct ClientTick {
  double now = 0.0;
};

using ClientEvent = std::variant<Envelope, ClientTick>;

struct ClientStep {
  ClientFsm fsm;
  std::vector<Envelope> out;
  std::vector<Violation> violations;
  /// Endpoint serving this tick's request (set on ClientTick only).
  std::optional<EndpointRef> active;
};

inline Envelope discovery_request(ClientFsm& fsm, std::vector<std::string> filters = {}) {
  return {fsm.vehicle.str(), kOrchestrator, fsm.next_seq++, 0, DiscoveryRequest{fsm.vehicle, std::move(filters)}};
}

/// Pure transition. `now` stamps violation records of message events.
inline ClientStep client_step(ClientFsm fsm, const ClientEvent& event, double now = 0.0) {
  if (const auto* tick = std::get_if<ClientTick>(&event)) now = tick->now;
  ClientStep r{std::move(fsm), {}, {}, std::nullopt};
  auto& f = r.fsm;
  auto state_name = [&]() -> const char* {
    if (std::holds_alternative<client::Discovering>(f.state)) return "Discovering";
    if (std::holds_alternative<client::Connected>(f.state)) return "Connected";
    return "Switching";
  };
  auto violate = [&](const char* ev, std::string reason) {
    r.violations.push_back({now, f.vehicle.str(), state_name(), ev, std::move(reason)});
  };
  auto send = [&](std::string to, std::uint64_t relocation, Message body) {
    r.out.push_back({f.vehicle.str(), std::move(to), f.next_seq++, relocation, std::move(body)});
  };

  if (std::holds_alternative<ClientTick>(event)) {
    if (std::holds_alternative<client::Discovering>(f.state)) {
      r.out.push_back(discovery_request(f));
      return r;
    }
    if (const auto* s = std::get_if<client::Switching>(&f.state)) f.state = client::Connected{s->new_endpoint};
    const auto& ep = std::get<client::Connected>(f.state).endpoint;
    r.active = ep;
    send(ep.host.str(), 0, ServiceRequest{f.vehicle, ep.host});
    return r;
  }

  const auto& env = std::get<Envelope>(event);
  if (const auto* resp = std::get_if<DiscoveryResponse>(&env.body)) {
    if (!std::holds_alternative<client::Discovering>(f.state)) {
      violate("DiscoveryResponse", "already connected");
      return r;
    }
    if (resp->services.empty()) {
      violate("DiscoveryResponse", "no services offered");
      return r;
    }
    f.known_hosts.clear();
    for (const auto& s : resp->services) f.known_hosts.push_back(s.endpoint.host);
    f.state = client::Connected{resp->services.front().endpoint};
    return r;
  }
  if (const auto* n = std::get_if<RelocationCompleteNotification>(&env.body)) {
    if (std::holds_alternative<client::Discovering>(f.state)) {
      violate("RelocationCompleteNotification", "not connected");
      return r;
    }
    if (std::find(f.known_hosts.begin(), f.known_hosts.end(), n->endpoint.host) == f.known_hosts.end()) {
      violate("RelocationCompleteNotification", "unknown endpoint host " + n->endpoint.host.str());
      return r;
    }
    if (n->version <= f.applied_version) {
      // Repeated notification: confirm again, keep the endpoint.
      send(kOrchestrator, env.relocation, NotificationAck{f.vehicle, n->endpoint, n->version});
      return r;
    }
    EndpointRef current = *f.endpoint();
    if (const auto* s = std::get_if<client::Switching>(&f.state)) current = s->new_endpoint;
    f.applied_version = n->version;
    f.state = client::Switching{current, n->endpoint};
    send(kOrchestrator, env.relocation, NotificationAck{f.vehicle, n->endpoint, n->version});
    return r;
  }
  violate(kind_name(env.body), "not addressed to the client");
  return r;
}

}  // namespace mecorch::protocol
