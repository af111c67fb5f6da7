#pragma once

// TOPSIS ranking of MEC hosts.
//
//   r_ij = x_ij / sqrt(sum_i x_ij^2)        vector normalization
//   v_ij = w_j * r_ij
//   ideal_j = best v_ij per column (max for benefit, min for cost),
//   anti_j  = worst v_ij per column
//   C_i = S-_i / (S+_i + S-_i), S+/S- Euclidean distances to ideal/anti
//
// A column of zeros normalizes to zeros. When S+_i + S-_i == 0 the
// alternative sits on both reference points and gets C_i = 0.5.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mecorch/error.hpp"
#include "mecorch/forecaster.hpp"
#include "mecorch/ids.hpp"

namespace mecorch {

enum class Direction { Benefit, Cost };

struct Criterion {
  std::string name;
  Direction direction = Direction::Benefit;
  double weight = 0.0;
};

struct DecisionMatrix {
  std::vector<HostId> alternatives;
  std::vector<Criterion> criteria;
  /// Row-major, alternatives.size() x criteria.size().
  std::vector<double> values;

  std::size_t rows() const noexcept { return alternatives.size(); }
  std::size_t cols() const noexcept { return criteria.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }

  void validate() const {
    if (alternatives.empty()) throw InputError("decision matrix needs at least one alternative");
    if (criteria.empty()) throw InputError("decision matrix needs at least one criterion");
    if (values.size() != rows() * cols())
      throw InputError("decision matrix has " + std::to_string(values.size()) + " values, expected " +
                       std::to_string(rows() * cols()));
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j)
        if (!std::isfinite(at(i, j)) || at(i, j) < 0.0)
          throw InputError("value for " + alternatives[i].str() + "/" + criteria[j].name +
                           " must be finite and non-negative");
    double sum = 0.0;
    for (const auto& c : criteria) {
      if (!std::isfinite(c.weight) || c.weight < 0.0) throw InputError("weight of " + c.name + " must be >= 0");
      sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InputError("criterion weights must sum to 1");
  }
};

struct TopsisRanking {
  std::vector<HostId> alternatives;  // matrix row order
  std::vector<double> closeness;     // aligned with `alternatives`
  std::vector<HostId> order;         // descending closeness, ties by ascending id
  HostId selected;

  double closeness_of(const HostId& host) const {
    for (std::size_t i = 0; i < alternatives.size(); ++i)
      if (alternatives[i] == host) return closeness[i];
    throw InputError("host " + host.str() + " is not ranked");
  }
};

inline TopsisRanking topsis_rank(const DecisionMatrix& m) {
  m.validate();
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();

  std::vector<double> weighted(rows * cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < rows; ++i) sq += m.at(i, j) * m.at(i, j);
    const double norm = std::sqrt(sq);
    if (norm == 0.0) continue;
    for (std::size_t i = 0; i < rows; ++i) weighted[i * cols + j] = m.criteria[j].weight * (m.at(i, j) / norm);
  }

  std::vector<double> ideal(cols), anti(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double hi = weighted[j];
    double lo = weighted[j];
    for (std::size_t i = 1; i < rows; ++i) {
      hi = std::max(hi, weighted[i * cols + j]);
      lo = std::min(lo, weighted[i * cols + j]);
    }
    const bool benefit = m.criteria[j].direction == Direction::Benefit;
    ideal[j] = benefit ? hi : lo;
    anti[j] = benefit ? lo : hi;
  }

  TopsisRanking r;
  r.alternatives = m.alternatives;
  r.closeness.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double s_plus = 0.0;
    double s_minus = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = weighted[i * cols + j];
      s_plus += (v - ideal[j]) * (v - ideal[j]);
      s_minus += (v - anti[j]) * (v - anti[j]);
    }
    s_plus = std::sqrt(s_plus);
    s_minus = std::sqrt(s_minus);
    const double denom = s_plus + s_minus;
    r.closeness[i] = denom == 0.0 ? 0.5 : std::clamp(s_minus / denom, 0.0, 1.0);
  }

  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (r.closeness[a] != r.closeness[b]) return r.closeness[a] > r.closeness[b];
    return m.alternatives[a] < m.alternatives[b];
  });
  for (auto i : idx) r.order.push_back(m.alternatives[i]);
  r.selected = r.order.front();
  return r;
}

// ---------------------------------------------------------------------------
// Host-selection criteria

namespace criteria {
inline constexpr const char* kAvailability = "availability";
inline constexpr const char* kLatency = "latency";
inline constexpr const char* kBandwidth = "bandwidth";
inline constexpr const char* kDistance = "distance";
}  // namespace criteria

/// availability (benefit) 0.40, latency (cost) 0.25, bandwidth (benefit)
/// 0.15, distance (cost) 0.20, in this column order.
inline std::vector<Criterion> default_criteria() {
  return {{criteria::kAvailability, Direction::Benefit, 0.40},
          {criteria::kLatency, Direction::Cost, 0.25},
          {criteria::kBandwidth, Direction::Benefit, 0.15},
          {criteria::kDistance, Direction::Cost, 0.20}};
}

/// Fixed three-host matrix under the default criteria, used as the
/// hand-checkable reference case.
inline DecisionMatrix reference_matrix() {
  DecisionMatrix m;
  m.alternatives = {HostId{"h1"}, HostId{"h2"}, HostId{"h3"}};
  m.criteria = default_criteria();
  m.values = {0.8, 20, 100, 1000,  //
              0.5, 10, 80, 500,    //
              0.6, 15, 90, 700};
  return m;
}

/// Rescales weights to sum to 1. Rejects negative, non-finite, or all-zero.
inline void normalize_weights(std::vector<Criterion>& list) {
  double sum = 0.0;
  for (const auto& c : list) {
    if (!std::isfinite(c.weight) || c.weight < 0.0) throw InputError("weight of '" + c.name + "' must be >= 0");
    sum += c.weight;
  }
  if (sum <= 0.0) throw InputError("criterion weights are all zero");
  for (auto& c : list) c.weight /= sum;
}

/// Host-selection criteria with weights taken from `raw` (all four names
/// required, renormalized to sum to 1).
inline std::vector<Criterion> weights_from_config(const std::map<std::string, double>& raw) {
  auto list = default_criteria();
  for (const auto& [name, _] : raw) {
    if (std::none_of(list.begin(), list.end(), [&](const Criterion& c) { return c.name == name; }))
      throw InputError("unknown criterion '" + name + "'");
  }
  for (auto& c : list) {
    auto it = raw.find(c.name);
    if (it == raw.end()) throw InputError("missing weight for criterion '" + c.name + "'");
    c.weight = it->second;
  }
  normalize_weights(list);
  return list;
}

struct LinkMetrics {
  double latency_ms = 0.0;
  double bandwidth_mbps = 0.0;
};

/// Rows in ascending host id; columns availability, latency, bandwidth,
/// distance. The three maps must cover exactly the same hosts.
inline DecisionMatrix build_decision_matrix(const std::map<HostId, Forecast>& forecasts,
                                            const std::map<HostId, LinkMetrics>& links,
                                            const std::map<HostId, double>& distance_m,
                                            std::vector<Criterion> crit = default_criteria()) {
  auto check_cover = [](const auto& from, const auto& in, const char* from_name, const char* in_name) {
    for (const auto& [host, _] : from)
      if (!in.count(host))
        throw InputError("host " + host.str() + " present in " + from_name + " but missing from " + in_name);
  };
  check_cover(forecasts, links, "forecasts", "links");
  check_cover(forecasts, distance_m, "forecasts", "geography");
  check_cover(links, forecasts, "links", "forecasts");
  check_cover(distance_m, forecasts, "geography", "forecasts");
  if (crit.size() != 4) throw InputError("host selection uses exactly four criteria");

  DecisionMatrix m;
  m.criteria = std::move(crit);
  for (const auto& [host, fc] : forecasts) {
    const auto& link = links.at(host);
    const double dist = distance_m.at(host);
    if (!std::isfinite(fc.availability)) throw InputError("availability of " + host.str() + " is not finite");
    if (!(std::isfinite(link.latency_ms) && link.latency_ms > 0.0))
      throw InputError("latency of " + host.str() + " must be > 0");
    if (!(std::isfinite(link.bandwidth_mbps) && link.bandwidth_mbps > 0.0))
      throw InputError("bandwidth of " + host.str() + " must be > 0");
    if (!(std::isfinite(dist) && dist >= 0.0)) throw InputError("distance of " + host.str() + " must be >= 0");
    m.alternatives.push_back(host);
    m.values.insert(m.values.end(), {std::clamp(fc.availability, 0.0, 1.0), link.latency_ms, link.bandwidth_mbps, dist});
  }
  if (m.alternatives.empty()) throw InputError("no hosts to rank");
  return m;
}

}  // namespace mecorch
