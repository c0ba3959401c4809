// Acceptance gate: exercises the headline behaviors end to end and prints
// one PASS/FAIL line per criterion.  Exits nonzero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <splitflow/node_model.hpp>
#include <splitflow/reporting/balance_variants.hpp>
#include <splitflow/simulator.hpp>
#include <splitflow/split_solver.hpp>
#include <splitflow/testing/instances.hpp>
#include <splitflow/testing/random_problems.hpp>
#include <splitflow/testing/reference_solver.hpp>

using namespace splitflow;

namespace {

bool worked_example_prefix() {
  const SolveResult res = solve_splits(testing::hov_interface_example());
  if (res.trace.records.size() < 2) return false;
  const IterationRecord& r0 = res.trace.records[0];
  const IterationRecord& r1 = res.trace.records[1];
  const bool first = !r0.balanced && r0.target_input == 1 && r0.target_output == 1 &&
                     r0.target_class == 1 && r0.increment == 1.0;
  const bool second = !r1.balanced && r1.target_input == 0 && r1.target_output == 1 &&
                      r1.target_class == 1 &&
                      std::abs(r1.increment - 1.0 / 3.0) <= 1e-9;
  return first && second;
}

bool eligibility_preserved() {
  const SolveResult res = solve_splits(testing::hov_interface_example());
  return res.splits.at(0, 0, 0) == 1.0 && res.splits.at(0, 1, 0) == 0.0;
}

bool report_artifact() {
  // both rule variants produce complete traces
  for (BalanceRule rule : {BalanceRule::PlainSupply, BalanceRule::OrientedSupply}) {
    SolverOptions opt;
    opt.balance_rule = rule;
    const SolveResult res = solve_splits(testing::hov_interface_example(), opt);
    if (res.trace.records.empty()) return false;
    if (res.trace.records.size() != static_cast<std::size_t>(res.trace.iterations))
      return false;
    for (const IterationRecord& rec : res.trace.records)
      if (rec.target_input < 0 || rec.target_output < 0 || rec.target_class < 0)
        return false;
  }
  // the committed report exists and regenerates byte-identically
  std::ifstream f(std::string(SPLITFLOW_REPO_DIR) + "/reports/balance_variants_report.md");
  if (!f.good()) return false;
  std::ostringstream stored;
  stored << f.rdbuf();
  std::ostringstream fresh;
  reporting::write_balance_variants_report(fresh);
  if (fresh.str() != stored.str()) return false;
  // it documents both variants' finals against the expected split
  const std::string& text = stored.str();
  return text.find("(0.64, 0.36)") != std::string::npos &&
         text.find("plain") != std::string::npos &&
         text.find("oriented") != std::string::npos &&
         (text.find("matches the expected split") != std::string::npos ||
          text.find("does not match") != std::string::npos);
}

bool property_suite() {
  std::mt19937 rng(8861);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int clean_exits = 0;
  for (int n = 0; n < 1000; ++n) {
    NodeProblem p = testing::random_problem(rng);
    if (!validate(p).ok()) return false;
    const SolverOptions opt = testing::random_options(rng);
    const SolveResult res = solve_splits(p, opt);

    const long cap = opt.max_iterations > 0
                         ? opt.max_iterations
                         : 64L * p.num_inputs * p.num_outputs * p.num_classes;
    if (res.trace.iterations > cap) return false;
    if (res.trace.termination == Termination::AllAssigned ||
        res.trace.termination == Termination::Balanced)
      ++clean_exits;

    for (int i = 0; i < p.num_inputs; ++i)
      for (int c = 0; c < p.num_classes; ++c) {
        double row_sum = 0.0;
        bool any_route = false;
        for (int j = 0; j < p.num_outputs; ++j) {
          const double v = res.splits.at(i, j, c);
          if (v < -1e-12 || v > 1.0 + 1e-12) return false;
          const std::size_t m = p.movement(i, j, c);
          if (p.split_kind[m] == SplitKind::Known && v != p.known_value[m]) return false;
          any_route = any_route || p.split_kind[m] != SplitKind::ImplicitZero;
          row_sum += v;
        }
        if (p.demand_at(i, c) > 0.0 && any_route && std::abs(row_sum - 1.0) > 1e-9)
          return false;
      }

    // bit-identical on a re-run
    const SolveResult again = solve_splits(p, opt);
    if (again.splits.value != res.splits.value) return false;
    if (again.trace.termination != res.trace.termination ||
        again.trace.iterations != res.trace.iterations)
      return false;

    // jointly scaling demand and supply leaves the ratios unchanged
    NodeProblem base = p;
    for (double& s : base.supply)
      if (s == 0.0) s = 0.1 + 99.9 * unit(rng); // keep clear of the supply floor
    const SolveResult base_res = solve_splits(base);
    for (double lambda : {0.01, 1000.0}) {
      NodeProblem scaled = base;
      for (double& v : scaled.demand) v *= lambda;
      for (double& v : scaled.supply) v *= lambda;
      const SolveResult scaled_res = solve_splits(scaled);
      for (std::size_t m = 0; m < base_res.splits.value.size(); ++m)
        if (std::abs(scaled_res.splits.value[m] - base_res.splits.value[m]) > 1e-9)
          return false;
    }
  }
  return clean_exits >= 990;
}

bool oracle_equivalence() {
  std::mt19937 rng(20260822);
  for (int n = 0; n < 500; ++n) {
    NodeProblem p = testing::random_problem(rng);
    if (!validate(p).ok()) return false;
    const SolverOptions opt = testing::random_options(rng);
    const SolveResult prod = solve_splits(p, opt);
    const SolveResult ref = testing::reference_solve_splits(p, opt);
    if (!testing::compare_traces(prod.trace, ref.trace).empty()) return false;
    for (std::size_t m = 0; m < prod.splits.value.size(); ++m)
      if (std::abs(prod.splits.value[m] - ref.splits.value[m]) > 1e-12) return false;
  }
  return true;
}

bool node_flow_contracts() {
  // ample supply: flows equal ratio times demand exactly
  {
    NodeProblem p = NodeProblem::sized(2, 2, 1);
    p.demand = {40.0, 10.0};
    p.supply = {1e6, 1e6};
    p.priority = {0.5, 0.5};
    SplitMatrix m = SplitMatrix::sized(2, 2, 1);
    m.at(0, 0, 0) = 0.3;
    m.at(0, 1, 0) = 0.7;
    m.at(1, 0, 0) = 0.6;
    m.at(1, 1, 0) = 0.4;
    const NodeFlows f = compute_node_flows(p, m);
    if (f.at(0, 0, 0) != 0.3 * 40.0 || f.at(0, 1, 0) != 0.7 * 40.0 ||
        f.at(1, 0, 0) != 0.6 * 10.0 || f.at(1, 1, 0) != 0.4 * 10.0)
      return false;
  }
  // one input, one output: throughput is min(demand, supply)
  {
    NodeProblem p = NodeProblem::sized(1, 1, 1);
    p.priority = {1.0};
    SplitMatrix m = SplitMatrix::sized(1, 1, 1);
    m.at(0, 0, 0) = 1.0;
    p.demand = {800.0};
    p.supply = {300.0};
    if (compute_node_flows(p, m).at(0, 0, 0) != 300.0) return false;
    p.supply = {900.0};
    if (compute_node_flows(p, m).at(0, 0, 0) != 800.0) return false;
  }
  // merge: the short input's unused priority share is redistributed
  {
    NodeProblem p = NodeProblem::sized(2, 1, 1);
    p.demand = {1000.0, 500.0};
    p.supply = {1200.0};
    p.priority = {0.5, 0.5};
    SplitMatrix m = SplitMatrix::sized(2, 1, 1);
    m.at(0, 0, 0) = 1.0;
    m.at(1, 0, 0) = 1.0;
    const NodeFlows f = compute_node_flows(p, m);
    if (f.at(0, 0, 0) != 700.0 || f.at(1, 0, 0) != 500.0) return false;
  }
  // random instances never draw more than an output offers
  std::mt19937 rng(3141);
  for (int n = 0; n < 1000; ++n) {
    NodeProblem p = testing::random_problem(rng);
    if (!validate(p).ok()) return false;
    const SolveResult res = solve_splits(p);
    const NodeFlows f = compute_node_flows(p, res.splits);
    for (int j = 0; j < p.num_outputs; ++j) {
      double inflow = 0.0;
      for (int i = 0; i < p.num_inputs; ++i)
        for (int c = 0; c < p.num_classes; ++c) inflow += f.at(i, j, c);
      if (inflow > p.supply[j] + 1e-9) return false;
    }
    for (int i = 0; i < p.num_inputs; ++i)
      for (int c = 0; c < p.num_classes; ++c) {
        double outflow = 0.0;
        for (int j = 0; j < p.num_outputs; ++j) outflow += f.at(i, j, c);
        if (outflow > p.demand_at(i, c) + 1e-9) return false;
      }
  }
  return true;
}

bool corridor_conservation() {
  Scenario sc = testing::hov_corridor_scenario();
  for (LinkSpec& link : sc.links) link.cell_count = 10; // two 20-cell chains
  sc.duration = 2.5;                                    // 1000 steps
  Simulator sim(sc);
  const int C = 2;
  for (int s = 0; s < 1000; ++s) {
    sim.step();
    for (std::size_t l = 0; l < sim.scenario().links.size(); ++l) {
      const double jam = sim.scenario().links[l].fd.jam_density;
      for (int g = sim.link_first_cell(static_cast<int>(l));
           g <= sim.link_last_cell(static_cast<int>(l)); ++g) {
        double total = 0.0;
        for (int c = 0; c < C; ++c) total += sim.state().density[g * C + c];
        if (total > jam + 1e-9) return false;
      }
    }
  }
  for (int c = 0; c < C; ++c) {
    const double in = sim.state().injected[c];
    const double out = sim.state().drained[c];
    const double stored = sim.stored_vehicles(c);
    if (std::abs(in - out - stored) / std::max(1.0, std::abs(in)) > 1e-9) return false;
  }
  return true;
}

bool share_sweep_regression() {
  const SolveResult low = solve_splits(testing::hov_share_example(0.1));
  const SolveResult high = solve_splits(testing::hov_share_example(0.9));
  const double low_ml = low.splits.at(0, 1, 1);
  const double high_ml = high.splits.at(0, 1, 1);
  if (!(low_ml > high_ml)) return false; // scarcer eligible demand gets the bigger share
  return std::abs(low_ml - 0.69025375921952947) <= 1e-12 &&
         std::abs(high_ml - 0.29104680858816001) <= 1e-12;
}

} // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*check)();
  };
  const Criterion criteria[] = {
      {"worked example: first two iterations assign the expected movements",
       worked_example_prefix},
      {"worked example: ineligible-class ratios preserved bit-exact", eligibility_preserved},
      {"balance-rule comparison report: complete traces, committed and regenerable",
       report_artifact},
      {"property suite: 1000 random problems (sums, bounds, fixed ratios, termination, "
       "scaling, determinism)",
       property_suite},
      {"oracle equivalence: 500 random problems with identical traces and ratios",
       oracle_equivalence},
      {"junction flows: pass-through, single-pipe min, merge redistribution, supply caps",
       node_flow_contracts},
      {"corridor run: per-class conservation and jam bounds over 1000 steps",
       corridor_conservation},
      {"demand sweep: managed-lane share shrinks as eligible demand grows (frozen values)",
       share_sweep_regression},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const bool ok = c.check();
    std::printf("%s: %s\n", ok ? "PASS" : "FAIL", c.name);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
