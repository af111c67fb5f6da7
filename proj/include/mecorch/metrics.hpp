#pragma once

// Per-host resource utilization time series: storage, trace I/O, sliding
// windows and synthetic load profiles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mecorch/csv.hpp"
#include "mecorch/error.hpp"
#include "mecorch/ids.hpp"

namespace mecorch {

/// Utilizations are fractions in [0,1], never percentages.
struct HostMetricsSample {
  HostId host;
  double timestamp = 0.0;
  double cpu = 0.0;
  double mem = 0.0;
  double storage = 0.0;

  friend bool operator==(const HostMetricsSample&, const HostMetricsSample&) = default;
};

inline bool is_unit_fraction(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

inline bool is_valid(const HostMetricsSample& s) {
  return std::isfinite(s.timestamp) && s.timestamp >= 0.0 && is_unit_fraction(s.cpu) &&
         is_unit_fraction(s.mem) && is_unit_fraction(s.storage);
}

/// Exactly `samples.size()` consecutive samples of one host, strictly
/// increasing in time.
struct MetricsWindow {
  HostId host;
  std::vector<HostMetricsSample> samples;

  std::size_t size() const noexcept { return samples.size(); }

  std::vector<double> cpu() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.cpu);
    return out;
  }
};

class MetricsStore {
 public:
  /// Appends a sample; the timestamp must be later than every stored sample
  /// of that host. Duplicates are rejected, never overwritten.
  void append(const HostMetricsSample& sample) {
    if (!is_valid(sample)) throw InputError("invalid sample for host " + sample.host.str());
    auto& series = series_[sample.host];
    if (!series.empty() && sample.timestamp <= series.back().timestamp) {
      throw InputError("sample for host " + sample.host.str() + " at t=" +
                       csv::format_number(sample.timestamp) + " is not after the latest sample");
    }
    series.push_back(sample);
  }

  bool empty() const noexcept { return series_.empty(); }
  bool contains(const HostId& host) const { return series_.count(host) != 0; }

  std::vector<HostId> hosts() const {
    std::vector<HostId> out;
    for (const auto& [host, _] : series_) out.push_back(host);
    return out;
  }

  std::span<const HostMetricsSample> samples(const HostId& host) const {
    auto it = series_.find(host);
    if (it == series_.end()) return {};
    return it->second;
  }

  std::optional<HostMetricsSample> at(const HostId& host, double timestamp) const {
    auto s = samples(host);
    auto it = std::lower_bound(s.begin(), s.end(), timestamp,
                               [](const HostMetricsSample& a, double t) { return a.timestamp < t; });
    if (it == s.end() || it->timestamp != timestamp) return std::nullopt;
    return *it;
  }

  /// Number of samples of `host` with timestamp <= end_time.
  std::size_t count_until(const HostId& host, double end_time) const {
    auto s = samples(host);
    auto it = std::upper_bound(s.begin(), s.end(), end_time,
                               [](double t, const HostMetricsSample& a) { return t < a.timestamp; });
    return static_cast<std::size_t>(std::distance(s.begin(), it));
  }

  /// The `length` most recent samples at or before `end_time`, oldest first.
  MetricsWindow window(const HostId& host, double end_time, std::size_t length) const {
    if (length == 0) throw ParameterError("window length must be positive");
    auto s = samples(host);
    const std::size_t available = count_until(host, end_time);
    if (available < length) throw NotEnoughData(available, length, "window of host " + host.str());
    MetricsWindow w{host, {}};
    w.samples.assign(s.begin() + static_cast<std::ptrdiff_t>(available - length),
                     s.begin() + static_cast<std::ptrdiff_t>(available));
    return w;
  }

 private:
  std::map<HostId, std::vector<HostMetricsSample>> series_;
};

// ---------------------------------------------------------------------------
// Trace ingestion

/// One raw trace record; absent fields are nullopt.
struct TraceRow {
  std::optional<std::string> host;
  std::optional<double> timestamp;
  std::optional<double> cpu;
  std::optional<double> mem;
  std::optional<double> storage;
};

inline MetricsStore ingest_trace(std::span<const TraceRow> rows) {
  struct Indexed {
    HostMetricsSample sample;
    std::size_t index;
  };
  std::vector<Indexed> parsed;
  parsed.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto need = [&](const std::optional<double>& v, const char* name) {
      if (!v) throw IngestError(i, std::string("missing field '") + name + "'");
      if (!std::isfinite(*v)) throw IngestError(i, std::string("non-finite ") + name);
      return *v;
    };
    if (!r.host || r.host->empty()) throw IngestError(i, "missing field 'host_id'");
    HostMetricsSample s{HostId{*r.host}, need(r.timestamp, "timestamp"), need(r.cpu, "cpu"),
                        need(r.mem, "mem"), need(r.storage, "storage")};
    if (s.timestamp < 0.0) throw IngestError(i, "negative timestamp");
    for (auto [v, name] : {std::pair{s.cpu, "cpu"}, {s.mem, "mem"}, {s.storage, "storage"}}) {
      if (!is_unit_fraction(v)) throw IngestError(i, std::string(name) + " outside [0,1]");
    }
    parsed.push_back({std::move(s), i});
  }
  std::stable_sort(parsed.begin(), parsed.end(), [](const Indexed& a, const Indexed& b) {
    if (a.sample.host != b.sample.host) return a.sample.host < b.sample.host;
    return a.sample.timestamp < b.sample.timestamp;
  });
  MetricsStore store;
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    if (k > 0 && parsed[k - 1].sample.host == parsed[k].sample.host &&
        parsed[k - 1].sample.timestamp == parsed[k].sample.timestamp) {
      auto later = std::max(parsed[k - 1].index, parsed[k].index);
      throw IngestError(later, "duplicate timestamp " + csv::format_number(parsed[k].sample.timestamp) +
                                   " for host " + parsed[k].sample.host.str());
    }
    store.append(parsed[k].sample);
  }
  return store;
}

inline constexpr std::string_view kTraceHeader = "host_id,timestamp,cpu,mem,storage";

/// Parses the `host_id,timestamp,cpu,mem,storage` CSV format into raw rows.
/// Fields that are empty or not numbers come back as nullopt so that
/// ingestion reports them by record index.
inline std::vector<TraceRow> parse_trace_csv(std::string_view text) {
  auto all = csv::lines(text);
  if (all.empty()) throw InputError("trace is empty (expected header '" + std::string(kTraceHeader) + "')");
  auto header = csv::split_line(all.front());
  const std::vector<std::string> expected{"host_id", "timestamp", "cpu", "mem", "storage"};
  if (header != expected) throw InputError("trace header must be '" + std::string(kTraceHeader) + "'");
  std::vector<TraceRow> rows;
  rows.reserve(all.size() - 1);
  for (std::size_t i = 1; i < all.size(); ++i) {
    auto f = csv::split_line(all[i]);
    f.resize(5);
    TraceRow r;
    if (!f[0].empty()) r.host = f[0];
    r.timestamp = csv::parse_number(f[1]);
    r.cpu = csv::parse_number(f[2]);
    r.mem = csv::parse_number(f[3]);
    r.storage = csv::parse_number(f[4]);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Writes hosts in ascending id order, samples in time order.
inline std::string write_trace_csv(const MetricsStore& store) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& host : store.hosts()) {
    for (const auto& s : store.samples(host)) {
      out += s.host.str();
      for (double v : {s.timestamp, s.cpu, s.mem, s.storage}) {
        out += ',';
        out += csv::format_number(v);
      }
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic load profiles

struct LoadProfile;

namespace profile {
struct Constant {
  double level = 0.0;
};
struct Step {
  double level_before = 0.0;
  double level_after = 0.0;
  double t_step = 0.0;
};
struct Ramp {
  double start_level = 0.0;
  double end_level = 0.0;
  double t_start = 0.0;
  double t_end = 1.0;
};
struct Noisy {
  std::shared_ptr<const LoadProfile> base;
  double noise_stddev = 0.0;
};
}  // namespace profile

struct LoadProfile {
  std::variant<profile::Constant, profile::Step, profile::Ramp, profile::Noisy> kind;

  static LoadProfile constant(double level) { return {profile::Constant{level}}; }
  static LoadProfile step(double before, double after, double t_step) {
    return {profile::Step{before, after, t_step}};
  }
  static LoadProfile ramp(double start, double end, double t_start, double t_end) {
    return {profile::Ramp{start, end, t_start, t_end}};
  }
  static LoadProfile noisy(LoadProfile base, double stddev) {
    return {profile::Noisy{std::make_shared<const LoadProfile>(std::move(base)), stddev}};
  }
};

/// Empty when the profile is well formed; otherwise one message per problem.
inline std::vector<std::string> validate(const LoadProfile& p) {
  std::vector<std::string> issues;
  auto level = [&](double v, const char* name) {
    if (!is_unit_fraction(v)) issues.push_back(std::string(name) + " must lie in [0,1]");
  };
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, profile::Constant>) {
          level(k.level, "level");
        } else if constexpr (std::is_same_v<K, profile::Step>) {
          level(k.level_before, "level_before");
          level(k.level_after, "level_after");
          if (!(std::isfinite(k.t_step) && k.t_step >= 0.0)) issues.push_back("t_step must be >= 0");
        } else if constexpr (std::is_same_v<K, profile::Ramp>) {
          level(k.start_level, "start_level");
          level(k.end_level, "end_level");
          if (!(std::isfinite(k.t_start) && k.t_start >= 0.0)) issues.push_back("t_start must be >= 0");
          if (!(std::isfinite(k.t_end) && k.t_end > k.t_start)) issues.push_back("t_end must exceed t_start");
        } else {
          if (!k.base) {
            issues.push_back("noisy profile needs a base");
          } else {
            for (auto& i : validate(*k.base)) issues.push_back("base." + i);
          }
          if (!(std::isfinite(k.noise_stddev) && k.noise_stddev >= 0.0))
            issues.push_back("noise_stddev must be >= 0");
        }
      },
      p.kind);
  return issues;
}

namespace detail {

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

// Noise-free level at time t, before clamping.
inline double profile_level(const LoadProfile& p, double t) {
  return std::visit(
      [t](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, profile::Constant>) {
          return k.level;
        } else if constexpr (std::is_same_v<K, profile::Step>) {
          return t < k.t_step ? k.level_before : k.level_after;
        } else if constexpr (std::is_same_v<K, profile::Ramp>) {
          if (t <= k.t_start) return k.start_level;
          if (t >= k.t_end) return k.end_level;
          return k.start_level + (k.end_level - k.start_level) * (t - k.t_start) / (k.t_end - k.t_start);
        } else {
          return profile_level(*k.base, t);
        }
      },
      p.kind);
}

// One value per call; noise layers draw outermost-first.
template <class Rng>
double profile_sample(const LoadProfile& p, double t, Rng& rng) {
  if (const auto* n = std::get_if<profile::Noisy>(&p.kind)) {
    double noise = 0.0;
    if (n->noise_stddev > 0.0) noise = std::normal_distribution<double>(0.0, n->noise_stddev)(rng);
    return profile_sample(*n->base, t, rng) + noise;
  }
  return profile_level(p, t);
}

}  // namespace detail

/// Samples `profile` at t = 0, tick, 2*tick, ... up to `duration`
/// (floor(duration/tick)+1 samples). The same profile drives cpu, mem and
/// storage; each resource draws its own noise, in that order, per sample.
inline std::vector<HostMetricsSample> generate_profile(const HostId& host, const LoadProfile& profile,
                                                       double tick, double duration, std::uint64_t seed) {
  if (!(std::isfinite(tick) && tick > 0.0)) throw ParameterError("tick must be positive");
  if (!(std::isfinite(duration) && duration >= tick)) throw ParameterError("duration must be >= tick");
  if (auto issues = validate(profile); !issues.empty()) throw ParameterError("load profile: " + issues.front());
  const auto count = static_cast<std::size_t>(std::floor(duration / tick + 1e-9)) + 1;
  std::mt19937_64 rng(seed);
  std::vector<HostMetricsSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * tick;
    HostMetricsSample s{host, t, 0.0, 0.0, 0.0};
    s.cpu = detail::clamp_unit(detail::profile_sample(profile, t, rng));
    s.mem = detail::clamp_unit(detail::profile_sample(profile, t, rng));
    s.storage = detail::clamp_unit(detail::profile_sample(profile, t, rng));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mecorch
