#pragma once

// Markdown report comparing the two tie-balancing rules on the managed-lane
// interface example, at the strict default tolerance and at a relaxed one.
// Lives in a header so the command-line wrapper and the test suite produce
// byte-identical output from the same code.

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "../io/scenario_io.hpp"
#include "../split_solver.hpp"
#include "../testing/instances.hpp"

namespace splitflow::reporting {

struct BalanceVariant {
  std::string rule_name;
  BalanceRule rule;
  double tol;
  SolveResult result;
};

inline std::vector<BalanceVariant> solve_balance_variants() {
  std::vector<BalanceVariant> rows;
  const SolverOptions defaults;
  const std::pair<std::string, BalanceRule> rules[] = {
      {"plain", BalanceRule::PlainSupply},
      {"oriented", BalanceRule::OrientedSupply},
  };
  for (double tol : {defaults.mu_equal_tol, 0.2}) {
    for (const auto& [name, rule] : rules) {
      NodeProblem p = testing::hov_interface_example();
      validate(p);
      SolverOptions opt;
      opt.balance_rule = rule;
      opt.mu_equal_tol = tol;
      rows.push_back({name, rule, tol, solve_splits(p, opt)});
    }
  }
  return rows;
}

inline void write_balance_variants_report(std::ostream& out) {
  using io::format_number;
  const std::vector<BalanceVariant> rows = solve_balance_variants();
  const SolverOptions defaults;

  // the target split for the relaxed oriented run, and how close counts
  const double target_ml = 0.64, target_gp = 0.36, target_tol = 5e-3;

  out << "# Tie-balancing rule comparison\n"
         "\n"
         "Worked example: the managed-lane interface junction from\n"
         "`scenarios/hov_interface_node.json`.  Two approaches feed a managed lane\n"
         "(output 0) and a general-purpose roadway (output 1).  The `lov` class is\n"
         "pinned to the general-purpose side; the `hov` class is free everywhere,\n"
         "so the solver assigns four split ratios.  The table reports the `hov`\n"
         "ratios as (to&nbsp;managed, to&nbsp;general-purpose) per approach.\n"
         "\n"
         "When several movements tie for the lowest fill ratio within the\n"
         "equality tolerance, the remaining share of the tied row is spread in one\n"
         "step.  The `plain` rule spreads it proportionally to raw output supply;\n"
         "the `oriented` rule weights supply by the movement's oriented priority.\n"
         "\n";

  auto emit_table = [&](double tol) {
    out << "| rule | termination | iterations | approach 0 hov | approach 1 hov |\n"
           "|------|-------------|------------|----------------|----------------|\n";
    for (const BalanceVariant& v : rows) {
      if (v.tol != tol) continue;
      const SplitMatrix& m = v.result.splits;
      out << "| " << v.rule_name << " | " << to_string(v.result.trace.termination)
          << " | " << v.result.trace.iterations << " | ("
          << format_number(m.at(0, 0, 1)) << ", " << format_number(m.at(0, 1, 1))
          << ") | (" << format_number(m.at(1, 0, 1)) << ", "
          << format_number(m.at(1, 1, 1)) << ") |\n";
    }
  };

  out << "## Strict tolerance (" << format_number(defaults.mu_equal_tol) << ")\n\n";
  emit_table(defaults.mu_equal_tol);
  out << "\nAt the strict default the balance branch only fires on exact ties, so\n"
         "both rules walk the same iteration sequence and land on the same\n"
         "ratios: the assignment is determined by the fill-ratio ordering alone.\n"
         "\n"
         "## Relaxed tolerance (0.2)\n\n";
  emit_table(0.2);
  out << "\nWith the tolerance widened the run finishes early in the balance\n"
         "branch, and the two rules now disagree: `plain` splits the remaining\n"
         "share evenly across the tied outputs, while `oriented` leans it toward\n"
         "the better-supplied, higher-priority movement.\n"
         "\n"
         "## Verdict\n"
         "\n";

  const BalanceVariant* relaxed_oriented = nullptr;
  const BalanceVariant* relaxed_plain = nullptr;
  for (const BalanceVariant& v : rows) {
    if (v.tol != 0.2) continue;
    (v.rule == BalanceRule::OrientedSupply ? relaxed_oriented : relaxed_plain) = &v;
  }
  const double got_ml = relaxed_oriented->result.splits.at(0, 0, 1);
  const double got_gp = relaxed_oriented->result.splits.at(0, 1, 1);
  const bool match = std::abs(got_ml - target_ml) <= target_tol &&
                     std::abs(got_gp - target_gp) <= target_tol;
  out << "Expected approach-0 `hov` split for the relaxed run: ("
      << format_number(target_ml) << ", " << format_number(target_gp)
      << "), within " << format_number(target_tol) << ".\n\n"
      << "- oriented rule: (" << format_number(got_ml) << ", " << format_number(got_gp)
      << ") — " << (match ? "**matches the expected split**" : "**does not match**")
      << "\n"
      << "- plain rule: (" << format_number(relaxed_plain->result.splits.at(0, 0, 1))
      << ", " << format_number(relaxed_plain->result.splits.at(0, 1, 1))
      << ") — even split, kept for comparison\n";
}

} // namespace splitflow::reporting
