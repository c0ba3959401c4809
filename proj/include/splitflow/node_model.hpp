#pragma once

// Junction flow model: given per-class demands, per-output supplies, input
// priorities and a complete split matrix, decide how many vehicles actually
// cross.  Supply is handed out per output in proportion to input priorities
// (unused shares are re-offered), then each input is throttled by its most
// constrained output so classes and destinations leave in proportion.

#include <algorithm>
#include <vector>

#include "core_types.hpp"

namespace splitflow {

namespace detail {

// Fill `need` from `capacity` proportionally to `weight`; whoever would get
// more than they need is capped and the rest is shared out again.  When the
// remaining claimants have no weight at all, their needs act as weights.
inline std::vector<double> allocate_supply(const std::vector<double>& need,
                                           const std::vector<double>& weight,
                                           double capacity) {
  const std::size_t n = need.size();
  std::vector<double> alloc(n, 0.0);
  std::vector<char> open(n, 0);
  for (std::size_t i = 0; i < n; ++i) open[i] = need[i] > 0.0;
  double remaining = capacity;

  for (std::size_t round = 0; round <= n; ++round) {
    if (remaining <= 0.0) break;
    double wsum = 0.0;
    bool any_open = false;
    for (std::size_t i = 0; i < n; ++i)
      if (open[i]) {
        any_open = true;
        wsum += weight[i];
      }
    if (!any_open) break;
    const bool fallback = wsum <= 0.0;
    if (fallback) {
      wsum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (open[i]) wsum += need[i];
      if (wsum <= 0.0) break;
    }
    auto weight_of = [&](std::size_t i) { return fallback ? need[i] : weight[i]; };

    bool capped = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) continue;
      const double share = remaining * weight_of(i) / wsum;
      if (share >= need[i] - alloc[i]) {
        remaining -= need[i] - alloc[i];
        alloc[i] = need[i];
        open[i] = 0;
        capped = true;
      }
    }
    if (!capped) {
      for (std::size_t i = 0; i < n; ++i)
        if (open[i]) alloc[i] += remaining * weight_of(i) / wsum;
      break;
    }
  }
  return alloc;
}

}  // namespace detail

// splits must be complete (rows with demand sum to 1); use solve_splits first
// when the problem has free movements.
inline NodeFlows compute_node_flows(const NodeProblem& p, const SplitMatrix& splits) {
  const int M = p.num_inputs, N = p.num_outputs, C = p.num_classes;
  NodeFlows f = NodeFlows::sized(M, N, C);

  // per (input, output) vehicles wanting to cross
  std::vector<double> want(static_cast<std::size_t>(M) * N, 0.0);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j) {
      double s = 0.0;
      for (int c = 0; c < C; ++c) s += splits.at(i, j, c) * p.demand_at(i, c);
      want[static_cast<std::size_t>(i) * N + j] = s;
    }

  // per output: who gets how much of its supply
  std::vector<double> granted(want.size(), 0.0);
  std::vector<double> need(M), weight(M);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < M; ++i) {
      need[i] = want[static_cast<std::size_t>(i) * N + j];
      weight[i] = p.priority[i];
    }
    const std::vector<double> alloc = detail::allocate_supply(need, weight, p.supply[j]);
    for (int i = 0; i < M; ++i) granted[static_cast<std::size_t>(i) * N + j] = alloc[i];
  }

  // first-in-first-out: an input moves as one stream, so its tightest output
  // sets the pace for all its classes and destinations
  for (int i = 0; i < M; ++i) {
    double pace = 1.0;
    for (int j = 0; j < N; ++j) {
      const std::size_t ij = static_cast<std::size_t>(i) * N + j;
      if (want[ij] > 0.0) pace = std::min(pace, granted[ij] / want[ij]);
    }
    for (int j = 0; j < N; ++j)
      for (int c = 0; c < C; ++c)
        f.at(i, j, c) = pace * splits.at(i, j, c) * p.demand_at(i, c);
  }
  return f;
}

}  // namespace splitflow
