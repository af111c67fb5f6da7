#pragma once

// Control-plane vocabulary of the application-context relocation procedure.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mecorch/error.hpp"
#include "mecorch/ids.hpp"

namespace mecorch::protocol {

inline const std::string kOrchestrator = "orchestrator";
/// Traffic-rule agent (user-plane anchor) reconfigured during relocation.
inline const std::string kRuleAgent = "upf";

struct EndpointRef {
  HostId host;
  std::string address;
  std::string service_id;

  friend bool operator==(const EndpointRef&, const EndpointRef&) = default;
};

inline EndpointRef endpoint_for(const HostId& host, const std::string& service_id) {
  return {host, "http://" + host.str() + ".mec.local:8080/" + service_id, service_id};
}

struct ServiceArea {
  double begin_m = 0.0;
  double end_m = 0.0;
  bool contains(double x) const noexcept { return x >= begin_m && x <= end_m; }
};

// ---------------------------------------------------------------------------
// Application context

/// 64-bit FNV-1a.
inline std::uint64_t checksum(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct ApplicationContext {
  VehicleId vehicle;
  std::uint64_t version = 1;
  std::vector<std::uint8_t> payload;
  HostId source_host;
  std::uint64_t payload_checksum = 0;

  bool intact() const { return payload_checksum == checksum(payload); }
  friend bool operator==(const ApplicationContext&, const ApplicationContext&) = default;
};

inline ApplicationContext make_context(VehicleId vehicle, HostId host, std::vector<std::uint8_t> payload) {
  ApplicationContext ctx{std::move(vehicle), 1, std::move(payload), std::move(host), 0};
  ctx.payload_checksum = checksum(ctx.payload);
  return ctx;
}

/// Copy of `ctx` owned by `target`, one version later. Throws IntegrityError
/// when the checksum does not match the payload.
inline ApplicationContext transfer_context(const ApplicationContext& ctx, const HostId& target) {
  if (!ctx.intact()) throw IntegrityError("context of vehicle " + ctx.vehicle.str() + " failed its checksum");
  ApplicationContext next = ctx;
  next.version = ctx.version + 1;
  next.source_host = target;
  next.payload_checksum = checksum(next.payload);
  return next;
}

// ---------------------------------------------------------------------------
// Messages

struct ServiceInfo {
  std::string service_id;
  EndpointRef endpoint;
  ServiceArea area;
};

struct DiscoveryRequest {
  VehicleId vehicle;
  std::vector<std::string> filters;
};
/// Services in the orchestrator's preference order (highest closeness first).
struct DiscoveryResponse {
  VehicleId vehicle;
  std::vector<ServiceInfo> services;
};
struct InstantiateRequest {
  VehicleId vehicle;
  HostId target_host;
  std::string service_id;
};
struct InstantiateAck {
  VehicleId vehicle;
  HostId target_host;
  EndpointRef endpoint;
};
struct ContextTransferRequest {
  VehicleId vehicle;
  HostId source_host;
  HostId target_host;
};
struct ContextTransferData {
  HostId target_host;
  ApplicationContext context;
};
struct ContextTransferAck {
  VehicleId vehicle;
  HostId target_host;
  std::uint64_t version = 0;
};
/// Target rejected the transferred context (checksum mismatch).
struct ContextTransferFailed {
  VehicleId vehicle;
  HostId target_host;
  std::string reason;
};
struct ReconfigureRules {
  VehicleId vehicle;
  EndpointRef endpoint;
};
struct ReconfigureAck {
  VehicleId vehicle;
};
struct RelocationCompleteNotification {
  VehicleId vehicle;
  EndpointRef endpoint;
  std::uint64_t version = 0;
};
/// Client confirmation of a RelocationCompleteNotification.
struct NotificationAck {
  VehicleId vehicle;
  EndpointRef endpoint;
  std::uint64_t version = 0;
};
/// Removes the vehicle's application instance from `host`.
struct TerminateRequest {
  VehicleId vehicle;
  HostId host;
};
/// One application request on the data plane.
struct ServiceRequest {
  VehicleId vehicle;
  HostId host;
};

using Message = std::variant<DiscoveryRequest, DiscoveryResponse, InstantiateRequest, InstantiateAck,
                             ContextTransferRequest, ContextTransferData, ContextTransferAck, ContextTransferFailed,
                             ReconfigureRules, ReconfigureAck, RelocationCompleteNotification, NotificationAck,
                             TerminateRequest, ServiceRequest>;

inline const char* kind_name(const Message& m) {
  static constexpr const char* names[] = {
      "DiscoveryRequest",  "DiscoveryResponse",    "InstantiateRequest",
      "InstantiateAck",    "ContextTransferRequest", "ContextTransferData",
      "ContextTransferAck", "ContextTransferFailed", "ReconfigureRules",
      "ReconfigureAck",    "RelocationCompleteNotification", "NotificationAck",
      "TerminateRequest",  "ServiceRequest"};
  return names[m.index()];
}

/// Addressed message. `seq` increases strictly per sender; `relocation`
/// names the relocation attempt the message belongs to (0 = none).
struct Envelope {
  std::string from;
  std::string to;
  std::uint64_t seq = 0;
  std::uint64_t relocation = 0;
  Message body;
};

// ---------------------------------------------------------------------------
// JSON

inline std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out += digits[b >> 4];
    out += digits[b & 0xF];
  }
  return out;
}

inline std::vector<std::uint8_t> from_hex(const std::string& text) {
  if (text.size() % 2 != 0) throw InputError("odd-length hex string");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw InputError("invalid hex digit");
  };
  std::vector<std::uint8_t> out;
  for (std::size_t k = 0; k < text.size(); k += 2)
    out.push_back(static_cast<std::uint8_t>(nibble(text[k]) << 4 | nibble(text[k + 1])));
  return out;
}

inline nlohmann::json to_json(const EndpointRef& e) {
  return {{"host", e.host.str()}, {"address", e.address}, {"service_id", e.service_id}};
}

inline nlohmann::json to_json(const ApplicationContext& c) {
  return {{"vehicle", c.vehicle.str()},
          {"version", c.version},
          {"payload", to_hex(c.payload)},
          {"source_host", c.source_host.str()},
          {"checksum", c.payload_checksum}};
}

inline nlohmann::json fields_of(const Message& msg) {
  using nlohmann::json;
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, DiscoveryRequest>) {
          return {{"vehicle", m.vehicle.str()}, {"filters", m.filters}};
        } else if constexpr (std::is_same_v<M, DiscoveryResponse>) {
          json services = json::array();
          for (const auto& s : m.services)
            services.push_back({{"service_id", s.service_id},
                                {"endpoint", to_json(s.endpoint)},
                                {"service_area", {s.area.begin_m, s.area.end_m}}});
          return {{"vehicle", m.vehicle.str()}, {"services", services}};
        } else if constexpr (std::is_same_v<M, InstantiateRequest>) {
          return {{"vehicle", m.vehicle.str()}, {"target_host", m.target_host.str()}, {"service_id", m.service_id}};
        } else if constexpr (std::is_same_v<M, InstantiateAck>) {
          return {{"vehicle", m.vehicle.str()}, {"target_host", m.target_host.str()}, {"endpoint", to_json(m.endpoint)}};
        } else if constexpr (std::is_same_v<M, ContextTransferRequest>) {
          return {{"vehicle", m.vehicle.str()}, {"source_host", m.source_host.str()}, {"target_host", m.target_host.str()}};
        } else if constexpr (std::is_same_v<M, ContextTransferData>) {
          return {{"target_host", m.target_host.str()}, {"context", to_json(m.context)}};
        } else if constexpr (std::is_same_v<M, ContextTransferAck>) {
          return {{"vehicle", m.vehicle.str()}, {"target_host", m.target_host.str()}, {"version", m.version}};
        } else if constexpr (std::is_same_v<M, ContextTransferFailed>) {
          return {{"vehicle", m.vehicle.str()}, {"target_host", m.target_host.str()}, {"reason", m.reason}};
        } else if constexpr (std::is_same_v<M, ReconfigureRules>) {
          return {{"vehicle", m.vehicle.str()}, {"endpoint", to_json(m.endpoint)}};
        } else if constexpr (std::is_same_v<M, ReconfigureAck>) {
          return {{"vehicle", m.vehicle.str()}};
        } else if constexpr (std::is_same_v<M, RelocationCompleteNotification> ||
                             std::is_same_v<M, NotificationAck>) {
          return {{"vehicle", m.vehicle.str()}, {"endpoint", to_json(m.endpoint)}, {"version", m.version}};
        } else if constexpr (std::is_same_v<M, TerminateRequest> || std::is_same_v<M, ServiceRequest>) {
          return {{"vehicle", m.vehicle.str()}, {"host", m.host.str()}};
        }
      },
      msg);
}

}  // namespace mecorch::protocol
