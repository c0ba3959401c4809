// Command-line front end: solve a single junction problem, walk through the
// solver's iterations, or run a whole scenario and dump states + summary.
//
// Exit codes: 0 on success, 1 on bad input (parse or validation failure),
// 2 when the solver had to force-finish (iteration cap or stall) — results
// are still written in that case.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <splitflow/io/scenario_io.hpp>
#include <splitflow/simulator.hpp>
#include <splitflow/split_solver.hpp>

namespace {

using splitflow::io::json;

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::runtime_error("cannot open " + path);
  return json::parse(f);
}

struct SolverFlags {
  std::string rule;
  double tol = -1.0;
  long max_iterations = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--balance-rule", rule, "Tie-balancing rule: plain or oriented")
        ->check(CLI::IsMember({"plain", "oriented"}));
    cmd->add_option("--tol", tol, "Ratio-equality tolerance for the balance branch");
    cmd->add_option("--max-iterations", max_iterations,
                    "Iteration cap (0: scale with problem size)");
  }
  void apply(splitflow::SolverOptions& opt) const {
    if (rule == "plain") opt.balance_rule = splitflow::BalanceRule::PlainSupply;
    if (rule == "oriented") opt.balance_rule = splitflow::BalanceRule::OrientedSupply;
    if (tol >= 0.0) opt.mu_equal_tol = tol;
    if (max_iterations >= 0) opt.max_iterations = static_cast<int>(max_iterations);
  }
};

int report_validation(const splitflow::ValidationReport& rep) {
  for (const std::string& e : rep.errors) std::cerr << "error: " << e << "\n";
  for (const std::string& n : rep.notes) std::cerr << "note: " << n << "\n";
  return rep.ok() ? 0 : 1;
}

bool forced_finish(splitflow::Termination t) {
  return t == splitflow::Termination::IterationCap || t == splitflow::Termination::Stalled;
}

int run_solve_node(const std::string& input, const SolverFlags& flags,
                   const std::string& trace_path) {
  splitflow::io::NodeProblemFile file = splitflow::io::parse_node_problem(load_json(input));
  if (report_validation(splitflow::validate(file.problem)) != 0) return 1;
  splitflow::SolverOptions opt;
  flags.apply(opt);
  const splitflow::SolveResult result = splitflow::solve_splits(file.problem, opt);
  std::cout << splitflow::io::solve_result_to_json(file.problem, result, file.class_names)
                   .dump(2)
            << "\n";
  if (!trace_path.empty()) {
    std::ofstream f(trace_path);
    if (!f.good()) throw std::runtime_error("cannot write " + trace_path);
    splitflow::io::write_trace_csv(f, result.trace);
  }
  return forced_finish(result.trace.termination) ? 2 : 0;
}

int run_trace(const std::string& input, const SolverFlags& flags, const std::string& format) {
  splitflow::io::NodeProblemFile file = splitflow::io::parse_node_problem(load_json(input));
  if (report_validation(splitflow::validate(file.problem)) != 0) return 1;
  splitflow::SolverOptions opt;
  flags.apply(opt);
  const splitflow::SolveResult result = splitflow::solve_splits(file.problem, opt);

  if (format == "csv") {
    splitflow::io::write_trace_csv(std::cout, result.trace);
  } else {
    const splitflow::NodeProblem& p = file.problem;
    std::printf("%4s  %14s  %14s  %8s  %20s  %12s\n", "iter", "max ratio",
                "target ratio", "action", "movement", "delta");
    for (const splitflow::IterationRecord& rec : result.trace.records) {
      const std::string movement = "(" + std::to_string(rec.target_input) + " -> " +
                                   std::to_string(rec.target_output) + ", " +
                                   file.class_names[rec.target_class] + ")";
      std::printf("%4ld  %14s  %14s  %8s  %20s  %12s\n", rec.k,
                  splitflow::io::format_number(rec.max_fill_ratio).c_str(),
                  splitflow::io::format_number(rec.target_fill_ratio).c_str(),
                  rec.balanced ? "balance" : "assign", movement.c_str(),
                  rec.balanced ? "-" : splitflow::io::format_number(rec.increment).c_str());
    }
    std::printf("terminated: %s after %ld iterations\n",
                splitflow::to_string(result.trace.termination), result.trace.iterations);
    std::printf("final split ratios:\n");
    for (int i = 0; i < p.num_inputs; ++i)
      for (int j = 0; j < p.num_outputs; ++j)
        for (int c = 0; c < p.num_classes; ++c) {
          if (p.split_kind[p.movement(i, j, c)] == splitflow::SplitKind::ImplicitZero)
            continue;
          std::printf("  (%d -> %d, %s) = %s\n", i, j, file.class_names[c].c_str(),
                      splitflow::io::format_number(result.splits.at(i, j, c)).c_str());
        }
  }
  return forced_finish(result.trace.termination) ? 2 : 0;
}

int run_simulate(const std::string& scenario_path, const std::string& out_dir, long stride) {
  splitflow::Scenario sc = splitflow::io::parse_scenario(load_json(scenario_path));
  if (report_validation(splitflow::validate(sc)) != 0) return 1;

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path states_path = fs::path(out_dir) / "states.csv";
  const fs::path summary_path = fs::path(out_dir) / "summary.json";

  try {
    splitflow::Simulator sim(sc);
    splitflow::RunOptions opt;
    opt.snapshot_stride = stride;
    const splitflow::RunSummary sum = sim.run(opt);

    {
      std::ofstream f(states_path);
      if (!f.good()) throw std::runtime_error("cannot write " + states_path.string());
      splitflow::io::write_states_csv(f, sim.scenario(), sum.snapshots);
    }
    {
      std::ofstream f(summary_path);
      if (!f.good()) throw std::runtime_error("cannot write " + summary_path.string());
      f << splitflow::io::summary_to_json(sim.scenario(), sum).dump(2) << "\n";
    }

    bool forced = false;
    double worst = 0.0;
    for (std::size_t n = 0; n < sum.node_terminations.size(); ++n) {
      const auto& t = sum.node_terminations[n];
      if (t[2] > 0 || t[3] > 0) forced = true;
    }
    for (double r : sum.conservation_residual) worst = std::max(worst, r);
    std::cout << "steps: " << sum.steps << "\n";
    std::cout << "conservation residual: " << splitflow::io::format_number(worst) << "\n";
    std::cout << "wrote " << states_path.string() << " and " << summary_path.string() << "\n";
    return forced ? 2 : 0;
  } catch (...) {
    // never leave half-written outputs behind
    std::error_code ec;
    fs::remove(states_path, ec);
    fs::remove(summary_path, ec);
    throw;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-volume traffic simulator with iterative split-ratio balancing"};
  app.require_subcommand(1);

  std::string node_input, node_trace;
  SolverFlags node_flags;
  CLI::App* solve_node = app.add_subcommand("solve-node", "Solve one junction problem");
  solve_node->add_option("--input", node_input, "Junction problem JSON")->required();
  node_flags.attach(solve_node);
  solve_node->add_option("--trace", node_trace, "Write the iteration trace CSV here");

  std::string trace_input, trace_format = "table";
  SolverFlags trace_flags;
  CLI::App* trace = app.add_subcommand("trace", "Show the solver's iterations");
  trace->add_option("--input", trace_input, "Junction problem JSON")->required();
  trace_flags.attach(trace);
  trace->add_option("--format", trace_format, "Output format")
      ->check(CLI::IsMember({"table", "csv"}));

  std::string sim_scenario, sim_out;
  long sim_stride = 1;
  CLI::App* simulate = app.add_subcommand("simulate", "Run a scenario");
  simulate->add_option("--scenario", sim_scenario, "Scenario JSON")->required();
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--stride", sim_stride,
                       "Keep every Nth state snapshot (0: first and last only)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_node->parsed()) return run_solve_node(node_input, node_flags, node_trace);
    if (trace->parsed()) return run_trace(trace_input, trace_flags, trace_format);
    return run_simulate(sim_scenario, sim_out, sim_stride);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
