#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>

#include "mecorch/error.hpp"
#include "mecorch/sim/config.hpp"

namespace mecorch::sim {

/// RTT without jitter: base + per_km * distance.
inline double nominal_rtt(const LinkParams& link, double distance_m) {
  return link.base_rtt_ms + link.per_km_rtt_ms * std::abs(distance_m) / 1000.0;
}

/// Nominal RTT plus Gaussian jitter, truncated at 0. Draws one normal
/// variate from `rng` when the jitter is non-zero.
template <class Rng>
double rtt(const LinkParams& link, double distance_m, Rng& rng) {
  double v = nominal_rtt(link, distance_m);
  if (link.rtt_jitter_stddev_ms > 0.0) v += std::normal_distribution<double>(0.0, link.rtt_jitter_stddev_ms)(rng);
  if (!std::isfinite(v)) throw ParameterError("rtt is not finite");
  return std::max(0.0, v);
}

/// d0 / (1 - min(u, 0.99)); at most 100 * d0.
inline double compute_delay(double utilization, double d0_ms) {
  if (!(utilization >= 0.0 && utilization <= 1.0)) throw ParameterError("utilization must lie in [0,1]");
  if (!(std::isfinite(d0_ms) && d0_ms > 0.0)) throw ParameterError("d0 must be > 0");
  return d0_ms / (1.0 - std::min(utilization, 0.99));
}

struct Statistics {
  double mean = 0.0;
  /// Population standard deviation.
  double stddev = 0.0;
  std::size_t count = 0;
};

inline Statistics summarize(std::span<const double> values) {
  if (values.empty()) throw InputError("cannot summarize an empty trace");
  Statistics s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

}  // namespace mecorch::sim
