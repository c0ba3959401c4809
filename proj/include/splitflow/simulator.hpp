#pragma once

// Corridor simulation: links discretized into cells, junctions connecting
// them, demand entering through source queues and leaving through sinks.
// Every step is two-phase: all boundary flows are computed from the frozen
// cell state, then applied at once.  Vehicle counts are conserved exactly
// per class.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "core_types.hpp"
#include "link_model.hpp"
#include "node_model.hpp"
#include "split_solver.hpp"

namespace splitflow {

// Piecewise-constant inflow rate: `rate` (veh/h) applies from `start_time`
// (h) until the next piece takes over.
struct DemandPiece {
  double start_time = 0.0;
  double rate = 0.0;
};

struct SourceSpec {
  int link = -1;
  std::vector<std::vector<DemandPiece>> rate_profile; // [class][pieces]
};

struct SinkSpec {
  int link = -1;
  double supply = std::numeric_limits<double>::infinity(); // veh/h
};

struct LinkSpec {
  std::string name;
  int cell_count = 0;
  double cell_length = 0.0; // km
  FundamentalDiagram fd;
  std::vector<double> initial_density; // [cell*classes + c], veh/km; empty = 0
};

// Junction template: which links feed it and leave it, plus the same
// movement table a NodeProblem carries (indexed by position in inputs /
// outputs, not by link id).
struct NodeSpec {
  std::string name;
  std::vector<int> inputs;   // link ids
  std::vector<int> outputs;  // link ids
  std::vector<double> priority;
  std::vector<SplitKind> split_kind; // [(in_pos*outputs + out_pos)*classes + c]
  std::vector<double> known_value;

  std::size_t movement(int i, int j, int c, int classes) const {
    return (static_cast<std::size_t>(i) * outputs.size() + j) * classes + c;
  }
};

struct Scenario {
  std::vector<std::string> class_names;
  std::vector<LinkSpec> links;
  std::vector<NodeSpec> nodes;
  std::vector<SourceSpec> sources;
  std::vector<SinkSpec> sinks;
  double timestep = 0.0; // h
  double duration = 0.0; // h
  SolverOptions solver;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Structural checks; normalizes node priorities in place (with a note).
inline ValidationReport validate(Scenario& sc) {
  ValidationReport rep;
  auto err = [&rep](std::string m) { rep.errors.push_back(std::move(m)); };
  const int C = sc.num_classes();

  if (C < 1) err("at least one vehicle class is required");
  if (sc.links.empty()) err("at least one link is required");
  if (!(sc.timestep > 0.0)) err("timestep must be positive");
  if (!(sc.duration >= sc.timestep)) err("duration must cover at least one step");
  else {
    const double steps = sc.duration / sc.timestep;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
      err("duration must be a whole number of timesteps");
  }
  if (!rep.ok()) return rep;

  const int L = static_cast<int>(sc.links.size());
  for (int l = 0; l < L; ++l) {
    const LinkSpec& link = sc.links[l];
    const std::string where = "link '" + link.name + "'";
    if (link.name.empty()) err("link " + std::to_string(l) + " has no name");
    if (link.cell_count < 1) err(where + ": cell_count must be at least 1");
    if (!(link.cell_length > 0.0)) err(where + ": cell_length must be positive");
    if (const std::string bad = check(link.fd); !bad.empty()) err(where + ": " + bad);
    if (link.fd.free_flow_speed * sc.timestep > link.cell_length + 1e-12)
      err(where + ": free_flow_speed * timestep exceeds cell_length");
    if (link.fd.congestion_wave_speed * sc.timestep > link.cell_length + 1e-12)
      err(where + ": congestion_wave_speed * timestep exceeds cell_length");
    if (!link.initial_density.empty()) {
      if (link.initial_density.size() !=
          static_cast<std::size_t>(link.cell_count) * C)
        err(where + ": initial_density must hold cell_count * classes values");
      else
        for (int k = 0; k < link.cell_count; ++k) {
          double tot = 0.0;
          for (int c = 0; c < C; ++c) {
            const double v = link.initial_density[static_cast<std::size_t>(k) * C + c];
            if (!std::isfinite(v) || v < 0.0) {
              err(where + ": initial densities must be finite and >= 0");
              break;
            }
            tot += v;
          }
          if (tot > link.fd.jam_density + 1e-9) {
            err(where + ": initial density exceeds jam density");
            break;
          }
        }
    }
    for (int l2 = 0; l2 < l; ++l2)
      if (sc.links[l2].name == link.name) err("duplicate link name '" + link.name + "'");
  }

  std::vector<int> feeders(L, 0), consumers(L, 0);
  auto check_link_id = [&](int l, const std::string& where) {
    if (l < 0 || l >= L) {
      err(where + ": link id out of range");
      return false;
    }
    return true;
  };
  for (std::size_t s = 0; s < sc.sources.size(); ++s) {
    const std::string where = "source " + std::to_string(s);
    if (!check_link_id(sc.sources[s].link, where)) continue;
    ++feeders[sc.sources[s].link];
    if (sc.sources[s].rate_profile.size() != static_cast<std::size_t>(C))
      err(where + ": rate_profile must have one list per class");
    else
      for (const auto& pieces : sc.sources[s].rate_profile) {
        double prev = -std::numeric_limits<double>::infinity();
        for (const DemandPiece& piece : pieces) {
          if (!(piece.start_time >= 0.0) || !std::isfinite(piece.rate) || piece.rate < 0.0)
            err(where + ": pieces need start_time >= 0 and rate >= 0");
          if (piece.start_time <= prev) err(where + ": piece start times must increase");
          prev = piece.start_time;
        }
      }
  }
  for (std::size_t s = 0; s < sc.sinks.size(); ++s) {
    const std::string where = "sink " + std::to_string(s);
    if (!check_link_id(sc.sinks[s].link, where)) continue;
    ++consumers[sc.sinks[s].link];
    if (std::isnan(sc.sinks[s].supply) || sc.sinks[s].supply < 0.0)
      err(where + ": supply must be >= 0");
  }

  for (std::size_t n = 0; n < sc.nodes.size(); ++n) {
    NodeSpec& node = sc.nodes[n];
    const std::string where = "node '" + node.name + "'";
    if (node.name.empty()) err("node " + std::to_string(n) + " has no name");
    for (std::size_t n2 = 0; n2 < n; ++n2)
      if (sc.nodes[n2].name == node.name) err("duplicate node name '" + node.name + "'");
    if (node.inputs.empty() || node.outputs.empty()) {
      err(where + ": needs at least one input and one output link");
      continue;
    }
    bool ids_ok = true;
    for (int l : node.inputs) ids_ok &= check_link_id(l, where);
    for (int l : node.outputs) ids_ok &= check_link_id(l, where);
    if (!ids_ok) continue;
    for (int l : node.inputs) ++consumers[l];
    for (int l : node.outputs) ++feeders[l];

    const int M = static_cast<int>(node.inputs.size());
    const int N = static_cast<int>(node.outputs.size());
    if (node.priority.size() != static_cast<std::size_t>(M)) {
      err(where + ": one priority per input link is required");
      continue;
    }
    double psum = 0.0;
    for (double v : node.priority) {
      if (!std::isfinite(v) || v < 0.0) err(where + ": priorities must be finite and >= 0");
      psum += v;
    }
    if (psum <= 0.0) err(where + ": priorities must not all be zero");
    else if (std::abs(psum - 1.0) > 1e-9) {
      for (double& v : node.priority) v /= psum;
      rep.notes.push_back(where + ": priorities normalized to unit sum");
    }
    const std::size_t moves = static_cast<std::size_t>(M) * N * C;
    if (node.split_kind.size() != moves || node.known_value.size() != moves) {
      err(where + ": split tables must hold inputs * outputs * classes entries");
      continue;
    }
    for (int i = 0; i < M; ++i)
      for (int c = 0; c < C; ++c) {
        double known = 0.0;
        bool has_unknown = false;
        for (int j = 0; j < N; ++j) {
          const std::size_t m = node.movement(i, j, c, C);
          if (node.split_kind[m] == SplitKind::Known) {
            const double v = node.known_value[m];
            if (!std::isfinite(v) || v < -1e-9 || v > 1.0 + 1e-9)
              err(where + ": fixed ratios must lie in [0,1]");
            known += v;
          } else if (node.split_kind[m] == SplitKind::Unknown) {
            has_unknown = true;
          }
        }
        if (known > 1.0 + 1e-9)
          err(where + ": fixed ratios for input " + std::to_string(i) + " class " +
              std::to_string(c) + " sum to more than 1");
        else if (!has_unknown && std::abs(known - 1.0) > 1e-9)
          err(where + ": input " + std::to_string(i) + " class " + std::to_string(c) +
              " has no route: fixed ratios must sum to 1 or leave a movement free");
      }
  }

  for (int l = 0; l < L; ++l) {
    if (feeders[l] > 1)
      err("link '" + sc.links[l].name + "' is fed by more than one source or node");
    if (consumers[l] > 1)
      err("link '" + sc.links[l].name + "' is drained by more than one sink or node");
    if (consumers[l] == 0)
      err("link '" + sc.links[l].name + "' has no sink or downstream node; vehicles would be trapped");
  }
  return rep;
}

struct SimState {
  double time = 0.0;
  long step_index = 0;
  std::vector<double> density;      // [global_cell*classes + c], veh/km
  std::vector<double> source_queue; // [source*classes + c], vehicles
  std::vector<double> injected;     // cumulative vehicles per class
  std::vector<double> drained;      // cumulative vehicles per class
  // last step's boundary movements per cell (vehicles)
  std::vector<double> cell_inflow, cell_outflow;
  // per node: solver outcome bookkeeping (nodes without free movements stay at 0)
  std::vector<std::array<long, 4>> node_terminations;
  std::vector<SolverTrace> last_node_trace;
};

struct Snapshot {
  long step_index = 0;
  double time = 0.0;
  std::vector<double> density;
  std::vector<double> cell_inflow, cell_outflow;
};

struct RunOptions {
  int snapshot_stride = 1; // keep every n-th step; 0 = none but first/last
};

struct RunSummary {
  long steps = 0;
  std::vector<Snapshot> snapshots;
  std::vector<double> injected, drained;          // per class, vehicles
  std::vector<double> stored_initial, stored_final;
  std::vector<double> conservation_residual;      // per class, relative
  std::vector<double> vehicle_hours;              // per class
  std::vector<std::vector<double>> link_outflow;  // [link][class], vehicles
  std::vector<std::array<long, 4>> node_terminations;
};

class Simulator {
 public:
  explicit Simulator(Scenario scenario) : sc_(std::move(scenario)) {
    ValidationReport rep = validate(sc_);
    if (!rep.ok()) throw std::invalid_argument("invalid scenario: " + rep.errors.front());
    const int C = sc_.num_classes();

    first_cell_.resize(sc_.links.size());
    int cells = 0;
    for (std::size_t l = 0; l < sc_.links.size(); ++l) {
      first_cell_[l] = cells;
      cells += sc_.links[l].cell_count;
    }
    total_cells_ = cells;
    link_of_cell_.resize(cells);
    for (std::size_t l = 0; l < sc_.links.size(); ++l)
      for (int k = 0; k < sc_.links[l].cell_count; ++k)
        link_of_cell_[first_cell_[l] + k] = static_cast<int>(l);

    feeder_source_.assign(sc_.links.size(), -1);
    consumer_sink_.assign(sc_.links.size(), -1);
    for (std::size_t s = 0; s < sc_.sources.size(); ++s)
      feeder_source_[sc_.sources[s].link] = static_cast<int>(s);
    for (std::size_t s = 0; s < sc_.sinks.size(); ++s)
      consumer_sink_[sc_.sinks[s].link] = static_cast<int>(s);

    state_.density.assign(static_cast<std::size_t>(cells) * C, 0.0);
    for (std::size_t l = 0; l < sc_.links.size(); ++l)
      if (!sc_.links[l].initial_density.empty())
        std::copy(sc_.links[l].initial_density.begin(), sc_.links[l].initial_density.end(),
                  state_.density.begin() + static_cast<std::size_t>(first_cell_[l]) * C);
    state_.source_queue.assign(sc_.sources.size() * C, 0.0);
    state_.injected.assign(C, 0.0);
    state_.drained.assign(C, 0.0);
    state_.cell_inflow.assign(state_.density.size(), 0.0);
    state_.cell_outflow.assign(state_.density.size(), 0.0);
    state_.node_terminations.assign(sc_.nodes.size(), {});
    state_.last_node_trace.resize(sc_.nodes.size());

    send_.resize(state_.density.size());
    recv_.resize(cells);
  }

  const Scenario& scenario() const { return sc_; }
  const SimState& state() const { return state_; }
  int total_cells() const { return total_cells_; }
  int link_first_cell(int link) const { return first_cell_[link]; }
  int link_last_cell(int link) const {
    return first_cell_[link] + sc_.links[link].cell_count - 1;
  }

  double stored_vehicles(int cls) const {
    double s = 0.0;
    const int C = sc_.num_classes();
    for (int g = 0; g < total_cells_; ++g)
      s += state_.density[static_cast<std::size_t>(g) * C + cls] *
           sc_.links[link_of_cell_[g]].cell_length;
    return s;
  }

  // one timestep; flows are derived from the state as frozen at entry
  void step() {
    const int C = sc_.num_classes();
    const double dt = sc_.timestep;

    for (int g = 0; g < total_cells_; ++g) {
      const FundamentalDiagram& fd = sc_.links[link_of_cell_[g]].fd;
      const std::span<const double> rho(state_.density.data() + static_cast<std::size_t>(g) * C,
                                        static_cast<std::size_t>(C));
      sending(rho, fd, dt,
              std::span<double>(send_.data() + static_cast<std::size_t>(g) * C,
                                static_cast<std::size_t>(C)));
      recv_[g] = receiving(rho, fd, dt);
    }

    std::fill(state_.cell_inflow.begin(), state_.cell_inflow.end(), 0.0);
    std::fill(state_.cell_outflow.begin(), state_.cell_outflow.end(), 0.0);

    // demand accrues on the source queues, then the queues push into the
    // first cells
    for (std::size_t s = 0; s < sc_.sources.size(); ++s) {
      const SourceSpec& src = sc_.sources[s];
      for (int c = 0; c < C; ++c)
        state_.source_queue[s * C + c] += rate_at(src, c, state_.time) * dt;
      const int head = first_cell_[src.link];
      double offered = 0.0;
      for (int c = 0; c < C; ++c) offered += state_.source_queue[s * C + c];
      if (offered <= 0.0) continue;
      const double accepted = std::min(offered, recv_[head]);
      for (int c = 0; c < C; ++c) {
        const double f = state_.source_queue[s * C + c] * accepted / offered;
        state_.source_queue[s * C + c] -= f;
        state_.cell_inflow[static_cast<std::size_t>(head) * C + c] += f;
        state_.injected[c] += f;
      }
    }

    // boundaries inside each link
    for (std::size_t l = 0; l < sc_.links.size(); ++l)
      for (int k = 0; k + 1 < sc_.links[l].cell_count; ++k) {
        const int up = first_cell_[l] + k, down = up + 1;
        transfer(up, down, C);
      }

    // junctions
    for (std::size_t n = 0; n < sc_.nodes.size(); ++n) step_node(static_cast<int>(n), C);

    // sinks
    for (std::size_t s = 0; s < sc_.sinks.size(); ++s) {
      const SinkSpec& sink = sc_.sinks[s];
      const int tail = link_last_cell(sink.link);
      double offered = 0.0;
      for (int c = 0; c < C; ++c) offered += send_[static_cast<std::size_t>(tail) * C + c];
      if (offered <= 0.0) continue;
      const double cap = std::isinf(sink.supply) ? offered : sink.supply * dt;
      const double accepted = std::min(offered, cap);
      for (int c = 0; c < C; ++c) {
        const double f = send_[static_cast<std::size_t>(tail) * C + c] * accepted / offered;
        state_.cell_outflow[static_cast<std::size_t>(tail) * C + c] += f;
        state_.drained[c] += f;
      }
    }

    // apply all movements at once
    for (int g = 0; g < total_cells_; ++g) {
      const double dx = sc_.links[link_of_cell_[g]].cell_length;
      const double jam = sc_.links[link_of_cell_[g]].fd.jam_density;
      double total = 0.0;
      for (int c = 0; c < C; ++c) {
        const std::size_t ix = static_cast<std::size_t>(g) * C + c;
        double rho = state_.density[ix] +
                     (state_.cell_inflow[ix] - state_.cell_outflow[ix]) / dx;
        if (rho < 0.0) {
          if (rho < -1e-9) throw std::logic_error("negative density: simulation step is inconsistent");
          rho = 0.0;
        }
        state_.density[ix] = rho;
        total += rho;
      }
      if (total > jam + 1e-6)
        throw std::logic_error("density above jam: simulation step is inconsistent");
    }

    state_.time += dt;
    ++state_.step_index;
  }

  RunSummary run(const RunOptions& opt = {}) {
    const int C = sc_.num_classes();
    const long steps = std::lround(sc_.duration / sc_.timestep);
    RunSummary sum;
    sum.steps = steps;
    sum.stored_initial.resize(C);
    for (int c = 0; c < C; ++c) sum.stored_initial[c] = stored_vehicles(c);
    sum.vehicle_hours.assign(C, 0.0);
    sum.link_outflow.assign(sc_.links.size(), std::vector<double>(C, 0.0));

    auto snap = [&] {
      Snapshot s;
      s.step_index = state_.step_index;
      s.time = state_.time;
      s.density = state_.density;
      s.cell_inflow = state_.cell_inflow;
      s.cell_outflow = state_.cell_outflow;
      sum.snapshots.push_back(std::move(s));
    };
    snap(); // initial state, zero flows

    while (state_.step_index < steps) {
      step();
      for (int c = 0; c < C; ++c) sum.vehicle_hours[c] += stored_vehicles(c) * sc_.timestep;
      for (std::size_t l = 0; l < sc_.links.size(); ++l) {
        const int tail = link_last_cell(static_cast<int>(l));
        for (int c = 0; c < C; ++c)
          sum.link_outflow[l][c] += state_.cell_outflow[static_cast<std::size_t>(tail) * C + c];
      }
      const bool last = state_.step_index == steps;
      if (last || (opt.snapshot_stride > 0 && state_.step_index % opt.snapshot_stride == 0))
        snap();
    }

    sum.injected = state_.injected;
    sum.drained = state_.drained;
    sum.stored_final.resize(C);
    sum.conservation_residual.resize(C);
    for (int c = 0; c < C; ++c) {
      sum.stored_final[c] = stored_vehicles(c);
      const double in = sum.injected[c] + sum.stored_initial[c];
      const double out = sum.drained[c] + sum.stored_final[c];
      sum.conservation_residual[c] = std::abs(in - out) / std::max(1.0, std::abs(in));
    }
    sum.node_terminations = state_.node_terminations;
    return sum;
  }

 private:
  static double rate_at(const SourceSpec& src, int cls, double t) {
    double rate = 0.0;
    for (const DemandPiece& piece : src.rate_profile[cls]) {
      if (piece.start_time <= t + 1e-12) rate = piece.rate;
      else break;
    }
    return rate;
  }

  // plain cell-to-cell boundary: everyone moves or is throttled together
  void transfer(int up, int down, int C) {
    double offered = 0.0;
    for (int c = 0; c < C; ++c) offered += send_[static_cast<std::size_t>(up) * C + c];
    if (offered <= 0.0) return;
    const double accepted = std::min(offered, recv_[down]);
    for (int c = 0; c < C; ++c) {
      const double f = send_[static_cast<std::size_t>(up) * C + c] * accepted / offered;
      state_.cell_outflow[static_cast<std::size_t>(up) * C + c] += f;
      state_.cell_inflow[static_cast<std::size_t>(down) * C + c] += f;
    }
  }

  void step_node(int n, int C) {
    const NodeSpec& node = sc_.nodes[n];
    const int M = static_cast<int>(node.inputs.size());
    const int N = static_cast<int>(node.outputs.size());

    NodeProblem p = NodeProblem::sized(M, N, C);
    for (int i = 0; i < M; ++i) {
      const int tail = link_last_cell(node.inputs[i]);
      for (int c = 0; c < C; ++c)
        p.demand_at(i, c) = send_[static_cast<std::size_t>(tail) * C + c];
    }
    for (int j = 0; j < N; ++j) p.supply[j] = recv_[first_cell_[node.outputs[j]]];
    p.priority = node.priority;
    p.split_kind = node.split_kind;
    p.known_value = node.known_value;

    bool any_unknown = false;
    for (SplitKind k : p.split_kind) any_unknown |= k == SplitKind::Unknown;

    SplitMatrix splits;
    if (any_unknown) {
      SolveResult res = solve_splits(p, sc_.solver);
      ++state_.node_terminations[n][static_cast<int>(res.trace.termination)];
      state_.last_node_trace[n] = std::move(res.trace);
      splits = std::move(res.splits);
    } else {
      splits = SplitMatrix::sized(M, N, C);
      for (std::size_t m = 0; m < p.split_kind.size(); ++m)
        if (p.split_kind[m] == SplitKind::Known) splits.value[m] = p.known_value[m];
    }

    const NodeFlows flows = compute_node_flows(p, splits);
    for (int i = 0; i < M; ++i) {
      const int tail = link_last_cell(node.inputs[i]);
      for (int c = 0; c < C; ++c) {
        double out = 0.0;
        for (int j = 0; j < N; ++j) out += flows.at(i, j, c);
        state_.cell_outflow[static_cast<std::size_t>(tail) * C + c] += out;
      }
    }
    for (int j = 0; j < N; ++j) {
      const int head = first_cell_[node.outputs[j]];
      for (int c = 0; c < C; ++c) {
        double in = 0.0;
        for (int i = 0; i < M; ++i) in += flows.at(i, j, c);
        state_.cell_inflow[static_cast<std::size_t>(head) * C + c] += in;
      }
    }
  }

  Scenario sc_;
  SimState state_;
  int total_cells_ = 0;
  std::vector<int> first_cell_, link_of_cell_;
  std::vector<int> feeder_source_, consumer_sink_;
  std::vector<double> send_; // per cell per class, vehicles
  std::vector<double> recv_; // per cell, vehicles
};

}  // namespace splitflow
