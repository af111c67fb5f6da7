#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mecorch/csv.hpp"
#include "mecorch/sim/runner.hpp"

namespace mecorch::sim {

inline constexpr std::string_view kTickTraceHeader = "t,host,rtt_ms,compute_ms,total_ms";

inline std::string tick_trace_csv(const std::vector<TickRecord>& records) {
  std::string out(kTickTraceHeader);
  out += '\n';
  for (const auto& r : records) {
    out += csv::format_number(r.t) + ',' + r.host.str() + ',' + csv::format_number(r.rtt_ms) + ',' +
           csv::format_number(r.compute_ms) + ',' + csv::format_number(r.total_ms) + '\n';
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json summary_json(const SimResult& r, bool with_timestamp) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [h, n] : r.summary.selection_counts) counts[h.str()] = n;
  nlohmann::json relocations = nlohmann::json::array();
  for (const auto& e : r.relocations) {
    nlohmann::json j = {{"time", e.time},
                        {"outcome", protocol::to_string(e.outcome)},
                        {"relocation", e.relocation},
                        {"source", e.source.str()},
                        {"target", e.target.str()},
                        {"trigger", to_string(e.trigger)}};
    if (!e.reason.empty()) j["reason"] = e.reason;
    relocations.push_back(std::move(j));
  }
  nlohmann::json outages = nlohmann::json::array();
  for (const auto& o : r.outages) outages.push_back({{"start", o.start}, {"end", o.end}, {"reason", o.reason}});
  nlohmann::json j = {{"seed", r.summary.seed},
                      {"mean_ms", r.summary.mean_ms},
                      {"stddev_ms", r.summary.stddev_ms},
                      {"records", r.summary.records},
                      {"selection_counts", counts},
                      {"relocations_completed", r.summary.relocations_completed},
                      {"relocations_aborted", r.summary.relocations_aborted},
                      {"relocations", relocations},
                      {"outages", outages},
                      {"protocol_violations", r.violations.size()}};
  if (with_timestamp) j["generated_at"] = utc_timestamp();
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

/// summary.json, trace.csv, decisions.jsonl, messages.jsonl, metrics.csv.
inline void write_outputs(const std::filesystem::path& dir, const SimResult& r, bool with_timestamp) {
  std::filesystem::create_directories(dir);
  write_text(dir / "summary.json", summary_json(r, with_timestamp).dump(2) + "\n");
  write_text(dir / "trace.csv", tick_trace_csv(r.records));
  write_text(dir / "decisions.jsonl", decision_log_jsonl(r.decisions));
  std::string messages;
  for (const auto& m : r.messages) messages += m.to_json().dump() + "\n";
  write_text(dir / "messages.jsonl", messages);
  write_text(dir / "metrics.csv", write_trace_csv(r.metrics));
}

}  // namespace mecorch::sim
