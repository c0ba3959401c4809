#pragma once

// Random but always-valid junction problems with a deliberately messy mix of
// row patterns: fully free rows, partially fixed rows, fully fixed rows and
// unreachable outputs.  Shared by the equivalence suite and the acceptance
// gate so both exercise the same input space.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "../core_types.hpp"
#include "../split_solver.hpp"

namespace splitflow::testing {

inline NodeProblem random_problem(std::mt19937& rng) {
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int M = dim(rng), N = dim(rng), C = dim(rng);
  NodeProblem p = NodeProblem::sized(M, N, C);

  for (auto& v : p.demand) v = unit(rng) < 0.2 ? 0.0 : unit(rng) * 100.0;
  for (auto& v : p.supply) v = unit(rng) < 0.15 ? 0.0 : unit(rng) * 100.0;
  bool any_priority = false;
  for (auto& v : p.priority) {
    v = unit(rng) < 0.25 ? 0.0 : unit(rng);
    any_priority |= v > 0.0;
  }
  if (!any_priority) p.priority[0] = 0.5 + unit(rng);

  auto simplex = [&](int n) {
    std::vector<double> w(n);
    double s = 0.0;
    for (double& x : w) s += x = -std::log(1.0 - unit(rng) * 0.999);
    for (double& x : w) x /= s;
    return w;
  };

  for (int i = 0; i < M; ++i)
    for (int c = 0; c < C; ++c) {
      std::vector<int> outs(N);
      std::iota(outs.begin(), outs.end(), 0);
      std::shuffle(outs.begin(), outs.end(), rng);
      const double roll = unit(rng);
      if (roll < 0.35) {
        for (int j : outs) p.set_unknown(i, j, c);
      } else if (roll < 0.60 && N >= 2) {
        const int nk = std::uniform_int_distribution<int>(1, N - 1)(rng);
        const double mass = unit(rng) * 0.95;
        const auto w = simplex(nk);
        for (int t = 0; t < nk; ++t) p.set_known(i, outs[t], c, w[t] * mass);
        for (int t = nk; t < N; ++t) p.set_unknown(i, outs[t], c);
      } else if (roll < 0.80) {
        const int nk = std::uniform_int_distribution<int>(1, N)(rng);
        const auto w = simplex(nk);
        for (int t = 0; t < nk; ++t) p.set_known(i, outs[t], c, w[t]);
        // remaining outputs stay implicit zero
      } else if (roll < 0.90) {
        const int nu = std::uniform_int_distribution<int>(1, N)(rng);
        for (int t = 0; t < nu; ++t) p.set_unknown(i, outs[t], c);
      } else {
        p.demand_at(i, c) = 0.0; // fully unreachable row is only legal inert
      }
    }
  return p;
}

inline SolverOptions random_options(std::mt19937& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SolverOptions opt;
  opt.balance_rule = unit(rng) < 0.5 ? BalanceRule::PlainSupply : BalanceRule::OrientedSupply;
  if (unit(rng) < 0.2) opt.mu_equal_tol = std::pow(10.0, -1.0 - 5.0 * unit(rng));
  return opt;
}

} // namespace splitflow::testing
