#pragma once

// Offline checker for the JSON-lines trace written by the control plane.
//
// Ordering: per relocation, the first delivery of each step kind appears in
// procedure order, and no step appears without all of its predecessors.
// Instance safety: every ServiceRequest targets a host holding a live instance
// for the vehicle. Context: every stored payload equals the originally deployed
// one; a notification names a version stored on its endpoint host; committed
// versions (notifications of distinct relocations) strictly increase.
// Sequence numbers: a (sender, seq) pair is never reused by a different
// message and deliveries per sender-receiver pair never go backwards.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mecorch/error.hpp"
#include "mecorch/protocol/runtime.hpp"

namespace mecorch::protocol {

inline constexpr std::array<const char*, 8> kRelocationOrder = {
    "InstantiateRequest", "InstantiateAck",   "ContextTransferRequest", "ContextTransferData",
    "ContextTransferAck", "ReconfigureRules", "ReconfigureAck",         "RelocationCompleteNotification"};

struct TraceCheckReport {
  std::size_t records = 0;
  std::size_t deliveries = 0;
  std::size_t relocations = 0;
  std::size_t service_requests = 0;
  std::size_t ordering_violations = 0;
  std::size_t serve_without_instance = 0;
  std::size_t context_loss = 0;
  std::size_t version_violations = 0;
  std::size_t sequence_violations = 0;
  std::vector<std::string> details;

  bool ok() const {
    return ordering_violations == 0 && serve_without_instance == 0 && context_loss == 0 && version_violations == 0 &&
           sequence_violations == 0;
  }
};

inline std::vector<nlohmann::json> parse_trace_jsonl(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("trace line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

inline TraceCheckReport check_trace(const std::vector<nlohmann::json>& records) {
  TraceCheckReport rep;
  rep.records = records.size();

  auto note = [&](std::size_t& counter, const nlohmann::json& rec, const std::string& what) {
    ++counter;
    if (rep.details.size() < 50) rep.details.push_back("t=" + rec.value("time", nlohmann::json()).dump() + ": " + what);
  };
  auto position_of = [](const std::string& kind) -> int {
    for (std::size_t k = 0; k < kRelocationOrder.size(); ++k)
      if (kind == kRelocationOrder[k]) return static_cast<int>(k);
    return -1;
  };

  // relocation -> first position index reached so far
  std::map<std::uint64_t, std::set<int>> seen_steps;
  // (host, vehicle) -> stored version, present while an instance is alive
  std::map<std::pair<std::string, std::string>, std::optional<std::uint64_t>> instances;
  std::map<std::string, std::string> original_payload;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> last_commit;  // vehicle -> (relocation, version)
  std::map<std::pair<std::string, std::uint64_t>, std::string> seq_body;
  std::map<std::pair<std::string, std::string>, std::uint64_t> pair_seq;

  for (const auto& rec : records) {
    const std::string kind = rec.at("kind").get<std::string>();
    const std::string from = rec.at("from").get<std::string>();
    const std::string to = rec.at("to").get<std::string>();
    const auto& f = rec.at("fields");

    if (kind == "InstanceStarted") {
      instances[{from, f.at("vehicle").get<std::string>()}] = std::nullopt;
      continue;
    }
    if (kind == "InstanceStopped") {
      instances.erase({from, f.at("vehicle").get<std::string>()});
      continue;
    }
    if (kind == "ContextStored") {
      const auto vehicle = f.at("vehicle").get<std::string>();
      const auto payload = f.at("payload").get<std::string>();
      auto [it, first] = original_payload.try_emplace(vehicle, payload);
      if (!first && it->second != payload) note(rep.context_loss, rec, "payload of " + vehicle + " differs on " + from);
      auto inst = instances.find({from, vehicle});
      if (inst == instances.end()) {
        note(rep.context_loss, rec, "context stored on " + from + " without an instance");
      } else {
        const auto version = f.at("version").get<std::uint64_t>();
        if (inst->second && *inst->second >= version)
          note(rep.version_violations, rec, "stored version did not increase on " + from);
        inst->second = version;
      }
      continue;
    }
    if (f.value("dropped", false)) continue;

    // Sequence numbers.
    const auto seq = f.at("seq").get<std::uint64_t>();
    nlohmann::json body = f;
    body.erase("served");
    const std::string fingerprint = to + "|" + kind + "|" + body.dump();
    auto [sit, fresh] = seq_body.try_emplace({from, seq}, fingerprint);
    if (!fresh && sit->second != fingerprint)
      note(rep.sequence_violations, rec, from + " reused seq " + std::to_string(seq));
    auto& last = pair_seq[{from, to}];
    if (seq < last) note(rep.sequence_violations, rec, from + "->" + to + " delivered out of order");
    last = std::max(last, seq);

    if (kind == "ServiceRequest") {
      ++rep.service_requests;
      const auto vehicle = f.at("vehicle").get<std::string>();
      if (!instances.count({to, vehicle})) note(rep.serve_without_instance, rec, "request to " + to + " without instance");
      continue;
    }
    ++rep.deliveries;

    const auto relocation = f.value("relocation", std::uint64_t{0});
    const int pos = position_of(kind);
    if (relocation != 0 && pos >= 0) {
      auto& steps = seen_steps[relocation];
      if (steps.empty()) ++rep.relocations;
      if (!steps.count(pos)) {
        for (int k = 0; k < pos; ++k) {
          if (!steps.count(k)) {
            note(rep.ordering_violations, rec,
                 std::string(kind) + " of relocation " + std::to_string(relocation) + " before " + kRelocationOrder[k]);
            break;
          }
        }
        steps.insert(pos);
      }
    }

    if (kind == "RelocationCompleteNotification") {
      const auto vehicle = f.at("vehicle").get<std::string>();
      const auto host = f.at("endpoint").at("host").get<std::string>();
      const auto version = f.at("version").get<std::uint64_t>();
      auto inst = instances.find({host, vehicle});
      if (inst == instances.end() || inst->second != version)
        note(rep.context_loss, rec, "notified version " + std::to_string(version) + " not held by " + host);
      auto lc = last_commit.find(vehicle);
      if (lc == last_commit.end()) {
        last_commit[vehicle] = {relocation, version};
      } else if (lc->second.first != relocation) {
        if (version <= lc->second.second) note(rep.version_violations, rec, "committed version did not increase");
        lc->second = {relocation, version};
      } else if (version != lc->second.second) {
        note(rep.version_violations, rec, "relocation notified two versions");
      }
    }
  }
  return rep;
}

inline TraceCheckReport check_trace(const std::vector<TraceRecord>& records) {
  std::vector<nlohmann::json> js;
  js.reserve(records.size());
  for (const auto& r : records) js.push_back(r.to_json());
  return check_trace(js);
}

}  // namespace mecorch::protocol
