#pragma once

// Core value types shared by the solver, node model and simulator:
// node-local routing problems, split-ratio matrices and per-movement flows.
// Everything is dense and index-based; names live in the io layer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace splitflow {

// A movement is one (input link, output link, vehicle class) triple.
struct Movement {
  int input = 0;
  int output = 0;
  int cls = 0;
  friend bool operator==(const Movement&, const Movement&) = default;
};

// How the split ratio of a movement is specified.
//   ImplicitZero: movement absent from the problem, ratio fixed at 0.
//   Known:        ratio fixed at a given value.
//   Unknown:      ratio left free, to be assigned by the solver.
enum class SplitKind : std::uint8_t { ImplicitZero, Known, Unknown };

// One junction's worth of data: per-input per-class demand, per-output
// supply, input priorities, and the split specification per movement.
// Demands/supplies are in vehicles per step; priorities are dimensionless
// weights (normalized to unit sum by validate()).
struct NodeProblem {
  int num_inputs = 0;
  int num_outputs = 0;
  int num_classes = 0;

  std::vector<double> demand;        // [row(i,c)]
  std::vector<double> supply;        // [j]
  std::vector<double> priority;      // [i]
  std::vector<SplitKind> split_kind; // [movement(i,j,c)]
  std::vector<double> known_value;   // [movement(i,j,c)], meaningful iff Known

  static NodeProblem sized(int inputs, int outputs, int classes) {
    NodeProblem p;
    p.num_inputs = inputs;
    p.num_outputs = outputs;
    p.num_classes = classes;
    p.demand.assign(static_cast<std::size_t>(inputs) * classes, 0.0);
    p.supply.assign(static_cast<std::size_t>(outputs), 0.0);
    p.priority.assign(static_cast<std::size_t>(inputs), 0.0);
    p.split_kind.assign(static_cast<std::size_t>(inputs) * outputs * classes,
                        SplitKind::ImplicitZero);
    p.known_value.assign(p.split_kind.size(), 0.0);
    return p;
  }

  std::size_t movement(int i, int j, int c) const {
    return (static_cast<std::size_t>(i) * num_outputs + j) * num_classes + c;
  }
  std::size_t row(int i, int c) const {
    return static_cast<std::size_t>(i) * num_classes + c;
  }

  double demand_at(int i, int c) const { return demand[row(i, c)]; }
  double& demand_at(int i, int c) { return demand[row(i, c)]; }

  void set_known(int i, int j, int c, double value) {
    split_kind[movement(i, j, c)] = SplitKind::Known;
    known_value[movement(i, j, c)] = value;
  }
  void set_unknown(int i, int j, int c) {
    split_kind[movement(i, j, c)] = SplitKind::Unknown;
    known_value[movement(i, j, c)] = 0.0;
  }
};

// Complete split-ratio matrix: value(i,j,c) with rows (i,c) summing to 1
// wherever the row carries demand.
struct SplitMatrix {
  int num_inputs = 0;
  int num_outputs = 0;
  int num_classes = 0;
  std::vector<double> value; // [movement(i,j,c)]

  static SplitMatrix sized(int inputs, int outputs, int classes) {
    SplitMatrix m;
    m.num_inputs = inputs;
    m.num_outputs = outputs;
    m.num_classes = classes;
    m.value.assign(static_cast<std::size_t>(inputs) * outputs * classes, 0.0);
    return m;
  }

  std::size_t movement(int i, int j, int c) const {
    return (static_cast<std::size_t>(i) * num_outputs + j) * num_classes + c;
  }
  double at(int i, int j, int c) const { return value[movement(i, j, c)]; }
  double& at(int i, int j, int c) { return value[movement(i, j, c)]; }
};

// Per-movement flows through a junction, in vehicles per step.
struct NodeFlows {
  int num_inputs = 0;
  int num_outputs = 0;
  int num_classes = 0;
  std::vector<double> flow; // [movement(i,j,c)]

  static NodeFlows sized(int inputs, int outputs, int classes) {
    NodeFlows f;
    f.num_inputs = inputs;
    f.num_outputs = outputs;
    f.num_classes = classes;
    f.flow.assign(static_cast<std::size_t>(inputs) * outputs * classes, 0.0);
    return f;
  }

  std::size_t movement(int i, int j, int c) const {
    return (static_cast<std::size_t>(i) * num_outputs + j) * num_classes + c;
  }
  double at(int i, int j, int c) const { return flow[movement(i, j, c)]; }
  double& at(int i, int j, int c) { return flow[movement(i, j, c)]; }

  double input_total(int i, int c) const {
    double s = 0.0;
    for (int j = 0; j < num_outputs; ++j) s += at(i, j, c);
    return s;
  }
  double output_total(int j) const {
    double s = 0.0;
    for (int i = 0; i < num_inputs; ++i)
      for (int c = 0; c < num_classes; ++c) s += at(i, j, c);
    return s;
  }
};

// Outcome of validate(): hard errors plus informational notes about
// adjustments made (priority normalization, degenerate rows).
struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> notes;
  bool ok() const { return errors.empty(); }
};

namespace detail {
inline std::string movement_label(int i, int j, int c) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + "," +
         std::to_string(c) + ")";
}
}  // namespace detail

// Checks a NodeProblem and normalizes priorities to unit sum in place.
// Rejected outright: wrong array sizes, non-finite or negative data,
// known ratios outside [0,1], rows whose known ratios exceed 1, rows with
// positive demand whose fixed ratios sum below 1 with nothing left free
// (such demand could never be routed anywhere), and all-zero priorities.
// Idempotent: a second call leaves the problem untouched.
inline ValidationReport validate(NodeProblem& p) {
  constexpr double kTol = 1e-9;
  ValidationReport rep;
  auto err = [&rep](std::string m) { rep.errors.push_back(std::move(m)); };

  if (p.num_inputs < 1 || p.num_outputs < 1 || p.num_classes < 1) {
    err("dimensions must all be at least 1");
    return rep;
  }
  const std::size_t rows = static_cast<std::size_t>(p.num_inputs) * p.num_classes;
  const std::size_t moves = rows * p.num_outputs;
  if (p.demand.size() != rows || p.supply.size() != static_cast<std::size_t>(p.num_outputs) ||
      p.priority.size() != static_cast<std::size_t>(p.num_inputs) ||
      p.split_kind.size() != moves || p.known_value.size() != moves) {
    err("array sizes do not match the declared dimensions");
    return rep;
  }

  for (std::size_t r = 0; r < p.demand.size(); ++r)
    if (!std::isfinite(p.demand[r]) || p.demand[r] < 0.0)
      err("demand[" + std::to_string(r) + "] must be finite and >= 0");
  for (int j = 0; j < p.num_outputs; ++j)
    if (!std::isfinite(p.supply[j]) || p.supply[j] < 0.0)
      err("supply[" + std::to_string(j) + "] must be finite and >= 0");
  for (int i = 0; i < p.num_inputs; ++i)
    if (!std::isfinite(p.priority[i]) || p.priority[i] < 0.0)
      err("priority[" + std::to_string(i) + "] must be finite and >= 0");
  if (!rep.ok()) return rep;

  for (int i = 0; i < p.num_inputs; ++i)
    for (int j = 0; j < p.num_outputs; ++j)
      for (int c = 0; c < p.num_classes; ++c) {
        const std::size_t m = p.movement(i, j, c);
        if (p.split_kind[m] != SplitKind::Known) continue;
        const double v = p.known_value[m];
        if (!std::isfinite(v) || v < -kTol || v > 1.0 + kTol)
          err("fixed ratio " + detail::movement_label(i, j, c) +
              " must lie in [0,1]");
      }
  if (!rep.ok()) return rep;

  for (int i = 0; i < p.num_inputs; ++i)
    for (int c = 0; c < p.num_classes; ++c) {
      double known_sum = 0.0;
      bool has_unknown = false;
      for (int j = 0; j < p.num_outputs; ++j) {
        const std::size_t m = p.movement(i, j, c);
        if (p.split_kind[m] == SplitKind::Known) known_sum += p.known_value[m];
        else if (p.split_kind[m] == SplitKind::Unknown) has_unknown = true;
      }
      const std::string label =
          "row (input " + std::to_string(i) + ", class " + std::to_string(c) + ")";
      if (known_sum > 1.0 + kTol)
        err(label + ": fixed ratios sum to more than 1");
      else if (!has_unknown && p.demand_at(i, c) > 0.0 && known_sum < 1.0 - kTol)
        err(label + ": fixed ratios sum below 1 and no movement is left free, "
                    "so its demand cannot be fully routed");
      if (has_unknown && p.demand_at(i, c) == 0.0)
        rep.notes.push_back(label + " has free movements but zero demand; its "
                                    "ratios will be spread uniformly");
    }
  if (!rep.ok()) return rep;

  double psum = 0.0;
  for (double v : p.priority) psum += v;
  if (psum <= 0.0) {
    err("priorities must not all be zero");
    return rep;
  }
  if (std::abs(psum - 1.0) > kTol) {
    for (double& v : p.priority) v /= psum;
    rep.notes.push_back("priorities normalized to unit sum (was " +
                        std::to_string(psum) + ")");
  }
  return rep;
}

// Index sets derived from the split specification, used throughout the
// solver.  All lists are ascending.
struct DerivedSets {
  // outputs receiving at least one unknown movement
  std::vector<int> outputs_with_unknowns;
  // per output j: inputs with any movement (known or unknown) toward j
  std::vector<std::vector<int>> inputs_toward_output;
  // per output j: inputs with at least one unknown movement toward j
  std::vector<std::vector<int>> inputs_with_free_toward;
  // per row (i,c): outputs j with (i,j,c) unknown
  std::vector<std::vector<int>> row_unknown_outputs;
  // per row (i,c): 1 - sum of fixed ratios, clamped to [0,1]
  std::vector<double> unassigned_share;
  // rows whose free mass has exactly one place to go
  std::vector<Movement> single_choice_rows; // output stored in .output

  bool row_has_unknowns(const NodeProblem& p, int i, int c) const {
    return !row_unknown_outputs[p.row(i, c)].empty();
  }
};

inline DerivedSets derive_sets(const NodeProblem& p) {
  DerivedSets d;
  const std::size_t rows = static_cast<std::size_t>(p.num_inputs) * p.num_classes;
  d.inputs_toward_output.resize(p.num_outputs);
  d.row_unknown_outputs.resize(rows);
  d.unassigned_share.assign(rows, 0.0);

  d.inputs_with_free_toward.resize(p.num_outputs);
  for (int j = 0; j < p.num_outputs; ++j) {
    for (int i = 0; i < p.num_inputs; ++i) {
      bool any = false, free = false;
      for (int c = 0; c < p.num_classes; ++c) {
        const SplitKind kind = p.split_kind[p.movement(i, j, c)];
        if (kind != SplitKind::ImplicitZero) any = true;
        if (kind == SplitKind::Unknown) free = true;
      }
      if (any) d.inputs_toward_output[j].push_back(i);
      if (free) d.inputs_with_free_toward[j].push_back(i);
    }
    if (!d.inputs_with_free_toward[j].empty())
      d.outputs_with_unknowns.push_back(j);
  }

  for (int i = 0; i < p.num_inputs; ++i)
    for (int c = 0; c < p.num_classes; ++c) {
      const std::size_t r = p.row(i, c);
      double known_sum = 0.0;
      for (int j = 0; j < p.num_outputs; ++j) {
        const std::size_t m = p.movement(i, j, c);
        if (p.split_kind[m] == SplitKind::Known) known_sum += p.known_value[m];
        else if (p.split_kind[m] == SplitKind::Unknown)
          d.row_unknown_outputs[r].push_back(j);
      }
      d.unassigned_share[r] = std::clamp(1.0 - known_sum, 0.0, 1.0);
      if (d.row_unknown_outputs[r].size() == 1)
        d.single_choice_rows.push_back({i, d.row_unknown_outputs[r][0], c});
    }
  return d;
}

}  // namespace splitflow
