#pragma once

// Independent cross-check for the junction flow model.  Supply allocation is
// characterized as a water level: alloc_i = min(need_i, level * weight_i)
// with the level found by bisection, zero-weight claimants served only from
// what is left after every weighted claimant is full.  Slow and numeric, but
// derived from the allocation's defining property rather than its algorithm.

#include <algorithm>
#include <cmath>
#include <vector>

#include "../core_types.hpp"

namespace splitflow::testing {

inline std::vector<double> brute_force_allocation(const std::vector<double>& need,
                                                  const std::vector<double>& weight,
                                                  double capacity) {
  const std::size_t n = need.size();
  std::vector<double> alloc(n, 0.0);
  double weighted_total = 0.0, zero_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weight[i] > 0.0) weighted_total += need[i];
    else zero_total += need[i];
  }

  double left = std::max(0.0, capacity);
  if (left >= weighted_total) {
    for (std::size_t i = 0; i < n; ++i)
      if (weight[i] > 0.0) alloc[i] = need[i];
    left -= weighted_total;
  } else {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (weight[i] > 0.0 && need[i] > 0.0) hi = std::max(hi, need[i] / weight[i]);
    auto poured = [&](double level) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (weight[i] > 0.0) s += std::min(need[i], level * weight[i]);
      return s;
    };
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (poured(mid) < left ? lo : hi) = mid;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (weight[i] > 0.0) alloc[i] = std::min(need[i], hi * weight[i]);
    left = 0.0;
  }

  if (left > 0.0 && zero_total > 0.0) {
    const double frac = std::min(1.0, left / zero_total);
    for (std::size_t i = 0; i < n; ++i)
      if (weight[i] == 0.0) alloc[i] = frac * need[i];
  }
  return alloc;
}

inline NodeFlows brute_force_node_flows(const NodeProblem& p, const SplitMatrix& splits) {
  const int M = p.num_inputs, N = p.num_outputs, C = p.num_classes;
  NodeFlows f = NodeFlows::sized(M, N, C);
  std::vector<std::vector<double>> want(M, std::vector<double>(N, 0.0));
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j)
      for (int c = 0; c < C; ++c) want[i][j] += splits.at(i, j, c) * p.demand_at(i, c);

  std::vector<std::vector<double>> granted(M, std::vector<double>(N, 0.0));
  for (int j = 0; j < N; ++j) {
    std::vector<double> need(M);
    for (int i = 0; i < M; ++i) need[i] = want[i][j];
    const auto alloc = brute_force_allocation(need, p.priority, p.supply[j]);
    for (int i = 0; i < M; ++i) granted[i][j] = alloc[i];
  }

  for (int i = 0; i < M; ++i) {
    double pace = 1.0;
    for (int j = 0; j < N; ++j)
      if (want[i][j] > 0.0) pace = std::min(pace, granted[i][j] / want[i][j]);
    for (int j = 0; j < N; ++j)
      for (int c = 0; c < C; ++c)
        f.at(i, j, c) = pace * splits.at(i, j, c) * p.demand_at(i, c);
  }
  return f;
}

}  // namespace splitflow::testing
