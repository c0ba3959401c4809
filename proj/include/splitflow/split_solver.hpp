#pragma once

// Iterative split-ratio assignment.  Free (unknown) split ratios are grown
// step by step, always feeding the movement that is currently furthest below
// the most loaded one, until every row's remainder is assigned or the load is
// balanced enough to distribute what is left in one shot.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "core_types.hpp"

namespace splitflow {

// Weights used when a balanced remainder is spread over an input's free
// outputs: plain downstream supply, or supply scaled by oriented priority.
enum class BalanceRule { PlainSupply, OrientedSupply };

struct SolverOptions {
  BalanceRule balance_rule = BalanceRule::PlainSupply;
  // the one-shot distribution fires when the lowest and highest fill ratios
  // agree within mu_equal_tol * max(1, highest)
  double mu_equal_tol = 1e-9;
  // fill ratios within tie_tol * max(1, best) of the best count as tied in
  // target selection; the lowest index wins among tied candidates
  double tie_tol = 1e-12;
  // supplies are floored to this wherever they appear in a denominator
  double supply_floor = 1e-9;
  // hard iteration cap; 0 means 64 * inputs * outputs * classes
  int max_iterations = 0;
  // increments below stall_tol for inputs*outputs*classes consecutive
  // iterations count as a stall
  double stall_tol = 1e-12;
};

enum class Termination {
  AllAssigned,   // every remainder reached zero through regular increments
  Balanced,      // fill ratios converged; rest distributed in one shot
  IterationCap,  // cap hit; rest force-distributed so the result is complete
  Stalled,       // increments vanished; rest force-distributed likewise
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::AllAssigned: return "all_assigned";
    case Termination::Balanced: return "balanced";
    case Termination::IterationCap: return "iteration_cap";
    case Termination::Stalled: return "stalled";
  }
  return "?";
}

// Priorities massaged so every input ends up strictly positive while the
// total stays 1: each zero entry contributes 1/m^2, nonzero entries are
// scaled down to make room.
struct RegularizedPriorities {
  std::vector<double> value;
  std::vector<int> zero_inputs;
};

inline RegularizedPriorities regularize_priorities(const std::vector<double>& priority) {
  const int m = static_cast<int>(priority.size());
  RegularizedPriorities out;
  for (int i = 0; i < m; ++i)
    if (priority[i] == 0.0) out.zero_inputs.push_back(i);
  const int nz = static_cast<int>(out.zero_inputs.size());
  out.value.resize(m);
  for (int i = 0; i < m; ++i)
    out.value[i] =
        priority[i] * static_cast<double>(m - nz) / m + static_cast<double>(nz) / (static_cast<double>(m) * m);
  return out;
}

// Snapshot of one solver iteration: the state it started from, everything
// derived from that state, and the action taken.
struct IterationRecord {
  int k = 0;

  // state entering the iteration
  std::vector<double> assigned;   // per movement: ratio mass placed so far
  std::vector<double> remaining;  // per row (i,c): mass still to place
  std::vector<std::vector<int>> open_inputs;  // per output: inputs still feeding it
  std::vector<int> open_outputs;              // outputs with any open input

  // derived from that state
  std::vector<double> free_demand;       // per row: remaining * demand
  std::vector<double> oriented_demand;   // per movement: assigned * demand
  std::vector<double> orientation;       // per movement: fixed ratio, or
                                         // assigned + equal share of remaining
  std::vector<double> oriented_priority; // per (i,j): input priority weighted
                                         // by the demand share oriented to j
  std::vector<double> fill_ratio;        // per (i,j): oriented demand relative
                                         // to this movement's slice of supply
  double max_fill_ratio = 0.0;
  double target_fill_ratio = 0.0;  // lowest fill ratio among open movements

  // selection
  std::vector<int> tied_outputs;  // open outputs holding the lowest ratio
  int target_output = -1;
  std::vector<int> tied_inputs;   // open inputs into target_output at that ratio
  int target_input = -1;
  int target_class = -1;

  // action
  bool balanced = false;   // one-shot distribution fired; solve ends
  double increment = 0.0;  // ratio mass moved onto the target movement
};

struct SolverTrace {
  std::vector<IterationRecord> records;
  Termination termination = Termination::AllAssigned;
  int iterations = 0;
};

struct SolveResult {
  SplitMatrix splits;
  SolverTrace trace;
};

namespace detail {

class BalancingEngine {
 public:
  BalancingEngine(const NodeProblem& p, const SolverOptions& opt)
      : p_(p), opt_(opt), d_(derive_sets(p)),
        M_(p.num_inputs), N_(p.num_outputs), C_(p.num_classes) {
    cap_ = opt.max_iterations > 0
               ? opt.max_iterations
               : 64LL * M_ * N_ * C_;
    ptil_ = regularize_priorities(p.priority).value;
    rf_.resize(N_);
    for (int j = 0; j < N_; ++j) rf_[j] = std::max(p.supply[j], opt.supply_floor);

    assigned_.assign(p.split_kind.size(), 0.0);
    remaining_.assign(p.demand.size(), 0.0);
    for (int i = 0; i < M_; ++i)
      for (int j = 0; j < N_; ++j)
        for (int c = 0; c < C_; ++c) {
          const std::size_t m = p.movement(i, j, c);
          if (p.split_kind[m] == SplitKind::Known) assigned_[m] = p.known_value[m];
        }
    for (int i = 0; i < M_; ++i)
      for (int c = 0; c < C_; ++c)
        if (!free_outputs(i, c).empty())
          remaining_[p.row(i, c)] = d_.unassigned_share[p.row(i, c)];

    // rows with free mass but no demand cannot steer the iteration; spread
    // them evenly up front
    for (int i = 0; i < M_; ++i)
      for (int c = 0; c < C_; ++c) {
        const std::size_t r = p.row(i, c);
        if (!free_outputs(i, c).empty() && p.demand[r] == 0.0 && remaining_[r] > 0.0) {
          const auto& vic = free_outputs(i, c);
          const double share = remaining_[r] / static_cast<double>(vic.size());
          for (int j : vic) assigned_[p.movement(i, j, c)] += share;
          remaining_[r] = 0.0;
        }
      }

    const std::size_t mn = static_cast<std::size_t>(M_) * N_;
    free_demand_.assign(p.demand.size(), 0.0);
    oriented_demand_.assign(assigned_.size(), 0.0);
    orientation_.assign(assigned_.size(), 0.0);
    oriented_priority_.assign(mn, 0.0);
    fill_ratio_.assign(mn, 0.0);
    refresh_open_sets();
  }

  SolveResult run() {
    SolveResult out;
    out.trace.termination = Termination::AllAssigned;
    std::int64_t k = 0;
    int no_progress = 0;
    const int stall_window = M_ * N_ * C_;
    bool done = false;

    while (!done) {
      if (open_outputs_.empty()) {
        out.trace.termination = Termination::AllAssigned;
        break;
      }
      if (k >= cap_) {
        compute_derived();
        force_balance();
        out.trace.termination = Termination::IterationCap;
        break;
      }
      compute_derived();

      IterationRecord rec;
      rec.k = static_cast<int>(k);
      rec.assigned = assigned_;
      rec.remaining = remaining_;
      rec.open_inputs = open_inputs_;
      rec.open_outputs = open_outputs_;
      rec.free_demand = free_demand_;
      rec.oriented_demand = oriented_demand_;
      rec.orientation = orientation_;
      rec.oriented_priority = oriented_priority_;
      rec.fill_ratio = fill_ratio_;

      // highest fill ratio anywhere (static sets: assigned known flows count)
      double mu_plus = -std::numeric_limits<double>::infinity();
      for (std::size_t ij = 0; ij < fill_ratio_.size(); ++ij)
        mu_plus = std::max(mu_plus, fill_ratio_[ij]);
      rec.max_fill_ratio = mu_plus;

      // lowest fill ratio among open movements
      double best = 0.0;
      bool have_best = false;
      for (int j : open_outputs_)
        for (int i : open_inputs_[j]) {
          const double r = fill_ratio_[pair(i, j)];
          if (!have_best || r < best) { best = r; have_best = true; }
        }
      assert(have_best);

      // ties are grouped within a relative band: the increment step drives
      // ratios exactly onto the running maximum in real arithmetic, so
      // bit-level comparison would resolve those ties by rounding noise
      const auto tied = [&](double x, double ref) {
        return std::abs(x - ref) <= opt_.tie_tol * std::max(1.0, ref);
      };
      for (int j : open_outputs_) {
        bool hit = false;
        for (int i : open_inputs_[j])
          if (tied(fill_ratio_[pair(i, j)], best)) { hit = true; break; }
        if (hit) rec.tied_outputs.push_back(j);
      }
      // among tied outputs, take the one with the least total oriented
      // demand relative to supply (lowest index on near-ties)
      std::vector<double> ojs;
      ojs.reserve(rec.tied_outputs.size());
      for (int j : rec.tied_outputs) {
        double tot = 0.0;
        for (int i = 0; i < M_; ++i)
          for (int c = 0; c < C_; ++c) tot += oriented_demand_[p_.movement(i, j, c)];
        ojs.push_back(tot / rf_[j]);
      }
      const double best_oj = *std::min_element(ojs.begin(), ojs.end());
      int jm = -1;
      for (std::size_t t = 0; t < ojs.size(); ++t)
        if (tied(ojs[t], best_oj)) { jm = rec.tied_outputs[t]; break; }
      rec.target_output = jm;
      for (int i : open_inputs_[jm])
        if (tied(fill_ratio_[pair(i, jm)], best)) rec.tied_inputs.push_back(i);
      // among tied inputs, the class row with the least free demand
      int im = -1, cm = -1;
      double best_s = 0.0;
      for (int i : rec.tied_inputs)
        for (int c = 0; c < C_; ++c) {
          const std::size_t r = p_.row(i, c);
          if (remaining_[r] > 0.0 && is_free(i, jm, c)) {
            if (im < 0 || free_demand_[r] < best_s) {
              best_s = free_demand_[r];
              im = i;
              cm = c;
            }
          }
        }
      assert(im >= 0);
      rec.target_input = im;
      rec.target_class = cm;
      const double mu_minus = fill_ratio_[pair(im, jm)];
      rec.target_fill_ratio = mu_minus;

      if (std::abs(mu_minus - mu_plus) <= opt_.mu_equal_tol * std::max(1.0, mu_plus)) {
        rec.balanced = true;
        out.trace.records.push_back(std::move(rec));
        force_balance();
        for (auto& u : open_inputs_) u.clear();
        open_outputs_.clear();
        out.trace.termination = Termination::Balanced;
        ++k;
        break;
      }

      // grow the target movement until it would reach the highest ratio
      double sump = 0.0;
      for (int i : d_.inputs_with_free_toward[jm]) sump += oriented_priority_[pair(i, jm)];
      double stil_sum = 0.0;
      for (int c = 0; c < C_; ++c) stil_sum += oriented_demand_[p_.movement(im, jm, c)];
      const std::size_t rrow = p_.row(im, cm);
      const double term = mu_plus * oriented_priority_[pair(im, jm)] * rf_[jm] /
                              (free_demand_[rrow] * sump) -
                          stil_sum / free_demand_[rrow];
#ifndef NDEBUG
      if (mu_minus > 0.0) {
        const double ident = (mu_plus / mu_minus - 1.0) * stil_sum / free_demand_[rrow];
        assert(std::abs(term - ident) <= 1e-9 * std::max(1.0, std::abs(term)));
      }
#endif
      const double delta = std::min(remaining_[rrow], std::max(0.0, term));
      assigned_[p_.movement(im, jm, cm)] += delta;
      remaining_[rrow] -= delta;
      rec.increment = delta;
      out.trace.records.push_back(std::move(rec));

      refresh_open_sets();
      no_progress = delta < opt_.stall_tol ? no_progress + 1 : 0;
      if (no_progress >= stall_window && !open_outputs_.empty()) {
        compute_derived();
        force_balance();
        out.trace.termination = Termination::Stalled;
        done = true;
      }
      ++k;
    }

    out.trace.iterations = static_cast<int>(k);
    out.splits = SplitMatrix::sized(M_, N_, C_);
    out.splits.value = assigned_;
#ifndef NDEBUG
    for (int i = 0; i < M_; ++i)
      for (int c = 0; c < C_; ++c) {
        if (p_.demand_at(i, c) <= 0.0 && free_outputs(i, c).empty()) continue;
        if (free_outputs(i, c).empty() &&
            d_.unassigned_share[p_.row(i, c)] > 0.0)
          continue;  // inert under-specified zero-demand row
        double s = 0.0;
        for (int j = 0; j < N_; ++j) s += out.splits.at(i, j, c);
        assert(std::abs(s - 1.0) <= 1e-9);
      }
#endif
    return out;
  }

 private:
  std::size_t pair(int i, int j) const { return static_cast<std::size_t>(i) * N_ + j; }
  const std::vector<int>& free_outputs(int i, int c) const {
    return d_.row_unknown_outputs[p_.row(i, c)];
  }
  bool is_free(int i, int j, int c) const {
    return p_.split_kind[p_.movement(i, j, c)] == SplitKind::Unknown;
  }

  // an input stays open toward an output while some of its classes could
  // still send unassigned mass there
  void refresh_open_sets() {
    open_inputs_.assign(N_, {});
    open_outputs_.clear();
    for (int j : d_.outputs_with_unknowns) {
      for (int i : d_.inputs_with_free_toward[j]) {
        bool live = false;
        for (int c = 0; c < C_; ++c)
          if (remaining_[p_.row(i, c)] > 0.0 && is_free(i, j, c)) { live = true; break; }
        if (live) open_inputs_[j].push_back(i);
      }
      if (!open_inputs_[j].empty()) open_outputs_.push_back(j);
    }
  }

  void compute_derived() {
    for (int i = 0; i < M_; ++i)
      for (int c = 0; c < C_; ++c) {
        const std::size_t r = p_.row(i, c);
        free_demand_[r] = remaining_[r] * p_.demand[r];
      }
    for (int i = 0; i < M_; ++i)
      for (int j = 0; j < N_; ++j)
        for (int c = 0; c < C_; ++c) {
          const std::size_t m = p_.movement(i, j, c);
          oriented_demand_[m] = assigned_[m] * p_.demand[p_.row(i, c)];
          switch (p_.split_kind[m]) {
            case SplitKind::Known:
              orientation_[m] = p_.known_value[m];
              break;
            case SplitKind::Unknown:
              orientation_[m] =
                  assigned_[m] +
                  remaining_[p_.row(i, c)] / static_cast<double>(free_outputs(i, c).size());
              break;
            case SplitKind::ImplicitZero:
              orientation_[m] = 0.0;
              break;
          }
        }
    for (int i = 0; i < M_; ++i) {
      double stot = 0.0;
      for (int c = 0; c < C_; ++c) stot += p_.demand[p_.row(i, c)];
      for (int j = 0; j < N_; ++j) {
        double num = 0.0;
        for (int c = 0; c < C_; ++c)
          num += orientation_[p_.movement(i, j, c)] * p_.demand[p_.row(i, c)];
        oriented_priority_[pair(i, j)] = stot > 0.0 ? ptil_[i] * num / stot : 0.0;
      }
    }
    for (int j = 0; j < N_; ++j) {
      double sump = 0.0;
      for (int i : d_.inputs_with_free_toward[j]) sump += oriented_priority_[pair(i, j)];
      for (int i = 0; i < M_; ++i) {
        double s = 0.0;
        for (int c = 0; c < C_; ++c) s += oriented_demand_[p_.movement(i, j, c)];
        fill_ratio_[pair(i, j)] =
            s > 0.0 ? s / (oriented_priority_[pair(i, j)] * rf_[j]) * sump : 0.0;
      }
    }
  }

  // spread every remaining row over its still-open free outputs, weighted by
  // (floored) supply, or by oriented priority times supply
  void force_balance() {
    for (int i = 0; i < M_; ++i)
      for (int c = 0; c < C_; ++c) {
        const std::size_t r = p_.row(i, c);
        if (remaining_[r] <= 0.0) continue;
        const auto& vic = free_outputs(i, c);
        assert(!vic.empty());
        double denom = 0.0;
        for (int j : vic)
          denom += opt_.balance_rule == BalanceRule::PlainSupply
                       ? rf_[j]
                       : oriented_priority_[pair(i, j)] * rf_[j];
        assert(denom > 0.0);
        for (int j : vic) {
          const double w = opt_.balance_rule == BalanceRule::PlainSupply
                               ? rf_[j]
                               : oriented_priority_[pair(i, j)] * rf_[j];
          assigned_[p_.movement(i, j, c)] += w / denom * remaining_[r];
        }
        remaining_[r] = 0.0;
      }
  }

  const NodeProblem& p_;
  SolverOptions opt_;
  DerivedSets d_;
  int M_, N_, C_;
  std::int64_t cap_ = 0;
  std::vector<double> ptil_, rf_;
  std::vector<double> assigned_;   // per movement
  std::vector<double> remaining_;  // per row
  std::vector<std::vector<int>> open_inputs_;
  std::vector<int> open_outputs_;
  std::vector<double> free_demand_, oriented_demand_, orientation_;
  std::vector<double> oriented_priority_, fill_ratio_;
};

}  // namespace detail

// Completes the split matrix of a validated problem.  The result always has
// full rows; check trace.termination to see how it got there.
inline SolveResult solve_splits(const NodeProblem& problem, const SolverOptions& options = {}) {
  return detail::BalancingEngine(problem, options).run();
}

}  // namespace splitflow
