#pragma once

// JSON readers/writers for junction problems and whole scenarios, plus the
// CSV emitters used by the command-line tools.  Readers are strict: unknown
// keys, missing fields and dangling name references are errors, so a typo in
// an input file fails loudly instead of silently changing the run.

#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "../core_types.hpp"
#include "../simulator.hpp"
#include "../split_solver.hpp"

namespace splitflow::io {

using json = nlohmann::ordered_json;

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw std::runtime_error(where + ": " + what);
}

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) { ok = true; break; }
    if (!ok) fail(where, "unknown key \"" + key + "\"");
  }
}

inline const json& require(const json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing key \"") + key + "\"");
  return *it;
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

inline int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

inline std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

inline void check_schema_version(const json& root, const std::string& where) {
  const json& v = require(root, where, "schema_version");
  if (!v.is_number_integer() || v.get<int>() != 1)
    fail(where, "unsupported schema_version (expected 1)");
}

inline std::vector<std::string> class_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of class names");
  std::vector<std::string> names;
  for (const json& e : v) names.push_back(text(e, where));
  for (std::size_t a = 0; a < names.size(); ++a)
    for (std::size_t b = a + 1; b < names.size(); ++b)
      if (names[a] == names[b]) fail(where, "duplicate class name \"" + names[a] + "\"");
  return names;
}

inline int lookup(const std::map<std::string, int>& table, const std::string& name,
                  const std::string& where, const char* kind) {
  auto it = table.find(name);
  if (it == table.end())
    fail(where, std::string("unknown ") + kind + " \"" + name + "\"");
  return it->second;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Stand-alone junction problems

struct NodeProblemFile {
  NodeProblem problem;
  std::vector<std::string> class_names;
};

inline NodeProblemFile parse_node_problem(const json& root) {
  using namespace detail;
  const std::string where = "node problem";
  check_keys(root, where, {"schema_version", "units", "classes", "inputs", "outputs",
                           "demand", "supply", "priority", "splits"});
  check_schema_version(root, where);
  if (auto it = root.find("units"); it != root.end())
    check_keys(*it, where + ".units", {"demand", "supply"});

  NodeProblemFile file;
  file.class_names = class_list(require(root, where, "classes"), where + ".classes");
  const int C = static_cast<int>(file.class_names.size());
  const int M = integer(require(root, where, "inputs"), where + ".inputs");
  const int N = integer(require(root, where, "outputs"), where + ".outputs");
  if (M <= 0 || N <= 0) fail(where, "inputs and outputs must be positive");

  NodeProblem& p = file.problem;
  p = NodeProblem::sized(M, N, C);

  const json& demand = require(root, where, "demand");
  if (!demand.is_array() || static_cast<int>(demand.size()) != M)
    fail(where + ".demand", "expected one row per input");
  for (int i = 0; i < M; ++i) {
    const json& row = demand[i];
    if (!row.is_array() || static_cast<int>(row.size()) != C)
      fail(where + ".demand", "expected one entry per class");
    for (int c = 0; c < C; ++c)
      p.demand[p.row(i, c)] = number(row[c], where + ".demand");
  }

  const json& supply = require(root, where, "supply");
  if (!supply.is_array() || static_cast<int>(supply.size()) != N)
    fail(where + ".supply", "expected one entry per output");
  for (int j = 0; j < N; ++j) p.supply[j] = number(supply[j], where + ".supply");

  const json& priority = require(root, where, "priority");
  if (!priority.is_array() || static_cast<int>(priority.size()) != M)
    fail(where + ".priority", "expected one entry per input");
  for (int i = 0; i < M; ++i) p.priority[i] = number(priority[i], where + ".priority");

  std::map<std::string, int> class_of;
  for (int c = 0; c < C; ++c) class_of[file.class_names[c]] = c;

  const json& splits = require(root, where, "splits");
  if (!splits.is_array()) fail(where + ".splits", "expected an array");
  for (const json& e : splits) {
    const std::string ewhere = where + ".splits";
    check_keys(e, ewhere, {"input", "output", "class", "value"});
    const int i = integer(require(e, ewhere, "input"), ewhere + ".input");
    const int j = integer(require(e, ewhere, "output"), ewhere + ".output");
    const int c = lookup(class_of, text(require(e, ewhere, "class"), ewhere), ewhere, "class");
    if (i < 0 || i >= M || j < 0 || j >= N) fail(ewhere, "input or output index out of range");
    if (p.split_kind[p.movement(i, j, c)] != SplitKind::ImplicitZero)
      fail(ewhere, "duplicate split entry");
    if (auto it = e.find("value"); it != e.end())
      p.set_known(i, j, c, number(*it, ewhere + ".value"));
    else
      p.set_unknown(i, j, c);
  }
  return file;
}

inline json node_problem_to_json(const NodeProblem& p,
                                 const std::vector<std::string>& class_names) {
  json root;
  root["schema_version"] = 1;
  root["units"] = {{"demand", "veh"}, {"supply", "veh"}};
  root["classes"] = class_names;
  root["inputs"] = p.num_inputs;
  root["outputs"] = p.num_outputs;
  json demand = json::array();
  for (int i = 0; i < p.num_inputs; ++i) {
    json row = json::array();
    for (int c = 0; c < p.num_classes; ++c) row.push_back(p.demand[p.row(i, c)]);
    demand.push_back(std::move(row));
  }
  root["demand"] = std::move(demand);
  root["supply"] = p.supply;
  root["priority"] = p.priority;
  json splits = json::array();
  for (int i = 0; i < p.num_inputs; ++i)
    for (int j = 0; j < p.num_outputs; ++j)
      for (int c = 0; c < p.num_classes; ++c) {
        const std::size_t m = p.movement(i, j, c);
        if (p.split_kind[m] == SplitKind::ImplicitZero) continue;
        json e;
        e["input"] = i;
        e["output"] = j;
        e["class"] = class_names[c];
        if (p.split_kind[m] == SplitKind::Known) e["value"] = p.known_value[m];
        splits.push_back(std::move(e));
      }
  root["splits"] = std::move(splits);
  return root;
}

inline json solve_result_to_json(const NodeProblem& p, const SolveResult& result,
                                 const std::vector<std::string>& class_names) {
  json root;
  root["termination"] = to_string(result.trace.termination);
  root["iterations"] = result.trace.iterations;
  json splits = json::array();
  for (int i = 0; i < p.num_inputs; ++i)
    for (int j = 0; j < p.num_outputs; ++j)
      for (int c = 0; c < p.num_classes; ++c) {
        if (p.split_kind[p.movement(i, j, c)] == SplitKind::ImplicitZero) continue;
        json e;
        e["input"] = i;
        e["output"] = j;
        e["class"] = class_names[c];
        e["value"] = result.splits.value[result.splits.movement(i, j, c)];
        splits.push_back(std::move(e));
      }
  root["splits"] = std::move(splits);
  return root;
}

// ---------------------------------------------------------------------------
// Scenarios

inline FundamentalDiagram parse_fd(const json& v, const std::string& where) {
  using namespace detail;
  check_keys(v, where, {"free_flow_speed", "congestion_wave_speed", "capacity", "jam_density"});
  FundamentalDiagram fd;
  fd.free_flow_speed = number(require(v, where, "free_flow_speed"), where);
  fd.congestion_wave_speed = number(require(v, where, "congestion_wave_speed"), where);
  fd.capacity = number(require(v, where, "capacity"), where);
  fd.jam_density = number(require(v, where, "jam_density"), where);
  return fd;
}

inline SolverOptions parse_solver_options(const json& v, const std::string& where) {
  using namespace detail;
  check_keys(v, where, {"balance_rule", "mu_equal_tol", "tie_tol", "max_iterations", "stall_tol"});
  SolverOptions opt;
  if (auto it = v.find("balance_rule"); it != v.end()) {
    const std::string rule = text(*it, where + ".balance_rule");
    if (rule == "plain") opt.balance_rule = BalanceRule::PlainSupply;
    else if (rule == "oriented") opt.balance_rule = BalanceRule::OrientedSupply;
    else fail(where + ".balance_rule", "expected \"plain\" or \"oriented\"");
  }
  if (auto it = v.find("mu_equal_tol"); it != v.end())
    opt.mu_equal_tol = number(*it, where + ".mu_equal_tol");
  if (auto it = v.find("tie_tol"); it != v.end())
    opt.tie_tol = number(*it, where + ".tie_tol");
  if (auto it = v.find("max_iterations"); it != v.end())
    opt.max_iterations = integer(*it, where + ".max_iterations");
  if (auto it = v.find("stall_tol"); it != v.end())
    opt.stall_tol = number(*it, where + ".stall_tol");
  return opt;
}

inline Scenario parse_scenario(const json& root) {
  using namespace detail;
  const std::string where = "scenario";
  check_keys(root, where, {"schema_version", "units", "classes", "timestep", "duration",
                           "links", "nodes", "sources", "sinks", "solver"});
  check_schema_version(root, where);
  if (auto it = root.find("units"); it != root.end())
    check_keys(*it, where + ".units",
               {"length", "speed", "flow", "density", "time"});

  Scenario sc;
  sc.class_names = class_list(require(root, where, "classes"), where + ".classes");
  const int C = static_cast<int>(sc.class_names.size());
  sc.timestep = number(require(root, where, "timestep"), where + ".timestep");
  sc.duration = number(require(root, where, "duration"), where + ".duration");

  std::map<std::string, int> class_of;
  for (int c = 0; c < C; ++c) class_of[sc.class_names[c]] = c;

  const json& links = require(root, where, "links");
  if (!links.is_array() || links.empty()) fail(where + ".links", "expected a non-empty array");
  std::map<std::string, int> link_of;
  for (const json& lv : links) {
    const std::string lwhere = where + ".links";
    check_keys(lv, lwhere, {"name", "cells", "cell_length", "fd", "initial_density"});
    LinkSpec link;
    link.name = text(require(lv, lwhere, "name"), lwhere + ".name");
    link.cell_count = integer(require(lv, lwhere, "cells"), lwhere + ".cells");
    link.cell_length = number(require(lv, lwhere, "cell_length"), lwhere + ".cell_length");
    link.fd = parse_fd(require(lv, lwhere, "fd"), lwhere + ".fd");
    if (auto it = lv.find("initial_density"); it != lv.end()) {
      const json& rows = *it;
      if (!rows.is_array() || static_cast<int>(rows.size()) != link.cell_count)
        fail(lwhere + ".initial_density", "expected one row per cell");
      for (const json& row : rows) {
        if (!row.is_array() || static_cast<int>(row.size()) != C)
          fail(lwhere + ".initial_density", "expected one entry per class");
        for (const json& d : row)
          link.initial_density.push_back(number(d, lwhere + ".initial_density"));
      }
    }
    if (link_of.count(link.name)) fail(lwhere, "duplicate link name \"" + link.name + "\"");
    link_of[link.name] = static_cast<int>(sc.links.size());
    sc.links.push_back(std::move(link));
  }

  if (auto it = root.find("nodes"); it != root.end()) {
    if (!it->is_array()) fail(where + ".nodes", "expected an array");
    for (const json& nv : *it) {
      const std::string nwhere = where + ".nodes";
      check_keys(nv, nwhere, {"name", "inputs", "outputs", "priority", "splits"});
      NodeSpec node;
      node.name = text(require(nv, nwhere, "name"), nwhere + ".name");
      for (const json& e : require(nv, nwhere, "inputs"))
        node.inputs.push_back(lookup(link_of, text(e, nwhere), nwhere, "link"));
      for (const json& e : require(nv, nwhere, "outputs"))
        node.outputs.push_back(lookup(link_of, text(e, nwhere), nwhere, "link"));
      for (const json& e : require(nv, nwhere, "priority"))
        node.priority.push_back(number(e, nwhere + ".priority"));
      const std::size_t M = node.inputs.size(), N = node.outputs.size();
      node.split_kind.assign(M * N * C, SplitKind::ImplicitZero);
      node.known_value.assign(M * N * C, 0.0);
      for (const json& e : require(nv, nwhere, "splits")) {
        const std::string swhere = nwhere + ".splits";
        check_keys(e, swhere, {"input", "output", "class", "value"});
        int i = -1, j = -1;
        const int in = lookup(link_of, text(require(e, swhere, "input"), swhere), swhere, "link");
        const int out = lookup(link_of, text(require(e, swhere, "output"), swhere), swhere, "link");
        for (std::size_t a = 0; a < M; ++a) if (node.inputs[a] == in) i = static_cast<int>(a);
        for (std::size_t b = 0; b < N; ++b) if (node.outputs[b] == out) j = static_cast<int>(b);
        if (i < 0) fail(swhere, "input link is not an input of this junction");
        if (j < 0) fail(swhere, "output link is not an output of this junction");
        const int c = lookup(class_of, text(require(e, swhere, "class"), swhere), swhere, "class");
        const std::size_t m = node.movement(i, j, c, C);
        if (node.split_kind[m] != SplitKind::ImplicitZero) fail(swhere, "duplicate split entry");
        if (auto vit = e.find("value"); vit != e.end()) {
          node.split_kind[m] = SplitKind::Known;
          node.known_value[m] = number(*vit, swhere + ".value");
        } else {
          node.split_kind[m] = SplitKind::Unknown;
        }
      }
      sc.nodes.push_back(std::move(node));
    }
  }

  if (auto it = root.find("sources"); it != root.end()) {
    if (!it->is_array()) fail(where + ".sources", "expected an array");
    for (const json& sv : *it) {
      const std::string swhere = where + ".sources";
      check_keys(sv, swhere, {"link", "profile"});
      SourceSpec src;
      src.link = lookup(link_of, text(require(sv, swhere, "link"), swhere), swhere, "link");
      src.rate_profile.assign(C, {});
      const json& profile = require(sv, swhere, "profile");
      if (!profile.is_object()) fail(swhere + ".profile", "expected an object keyed by class");
      for (const auto& [cls, pieces] : profile.items()) {
        const int c = lookup(class_of, cls, swhere + ".profile", "class");
        if (!pieces.is_array()) fail(swhere + ".profile", "expected an array of pieces");
        for (const json& pv : pieces) {
          check_keys(pv, swhere + ".profile", {"start", "rate"});
          DemandPiece piece;
          piece.start_time = number(require(pv, swhere + ".profile", "start"), swhere);
          piece.rate = number(require(pv, swhere + ".profile", "rate"), swhere);
          src.rate_profile[c].push_back(piece);
        }
      }
      sc.sources.push_back(std::move(src));
    }
  }

  if (auto it = root.find("sinks"); it != root.end()) {
    if (!it->is_array()) fail(where + ".sinks", "expected an array");
    for (const json& sv : *it) {
      const std::string swhere = where + ".sinks";
      check_keys(sv, swhere, {"link", "supply"});
      SinkSpec sink;
      sink.link = lookup(link_of, text(require(sv, swhere, "link"), swhere), swhere, "link");
      if (auto vit = sv.find("supply"); vit != sv.end())
        sink.supply = number(*vit, swhere + ".supply");
      sc.sinks.push_back(sink);
    }
  }

  if (auto it = root.find("solver"); it != root.end())
    sc.solver = parse_solver_options(*it, where + ".solver");
  return sc;
}

inline json scenario_to_json(const Scenario& sc) {
  json root;
  root["schema_version"] = 1;
  root["units"] = {{"length", "km"}, {"speed", "km/h"}, {"flow", "veh/h"},
                   {"density", "veh/km"}, {"time", "h"}};
  root["classes"] = sc.class_names;
  root["timestep"] = sc.timestep;
  root["duration"] = sc.duration;
  const int C = sc.num_classes();

  json links = json::array();
  for (const LinkSpec& link : sc.links) {
    json lv;
    lv["name"] = link.name;
    lv["cells"] = link.cell_count;
    lv["cell_length"] = link.cell_length;
    lv["fd"] = {{"free_flow_speed", link.fd.free_flow_speed},
                {"congestion_wave_speed", link.fd.congestion_wave_speed},
                {"capacity", link.fd.capacity},
                {"jam_density", link.fd.jam_density}};
    bool any = false;
    for (double d : link.initial_density) any = any || d != 0.0;
    if (any) {
      json rows = json::array();
      for (int g = 0; g < link.cell_count; ++g) {
        json row = json::array();
        for (int c = 0; c < C; ++c) row.push_back(link.initial_density[g * C + c]);
        rows.push_back(std::move(row));
      }
      lv["initial_density"] = std::move(rows);
    }
    links.push_back(std::move(lv));
  }
  root["links"] = std::move(links);

  json nodes = json::array();
  for (const NodeSpec& node : sc.nodes) {
    json nv;
    nv["name"] = node.name;
    json ins = json::array(), outs = json::array();
    for (int l : node.inputs) ins.push_back(sc.links[l].name);
    for (int l : node.outputs) outs.push_back(sc.links[l].name);
    nv["inputs"] = std::move(ins);
    nv["outputs"] = std::move(outs);
    nv["priority"] = node.priority;
    json splits = json::array();
    for (std::size_t i = 0; i < node.inputs.size(); ++i)
      for (std::size_t j = 0; j < node.outputs.size(); ++j)
        for (int c = 0; c < C; ++c) {
          const std::size_t m = node.movement(static_cast<int>(i), static_cast<int>(j), c, C);
          if (node.split_kind[m] == SplitKind::ImplicitZero) continue;
          json e;
          e["input"] = sc.links[node.inputs[i]].name;
          e["output"] = sc.links[node.outputs[j]].name;
          e["class"] = sc.class_names[c];
          if (node.split_kind[m] == SplitKind::Known) e["value"] = node.known_value[m];
          splits.push_back(std::move(e));
        }
    nv["splits"] = std::move(splits);
    nodes.push_back(std::move(nv));
  }
  root["nodes"] = std::move(nodes);

  json sources = json::array();
  for (const SourceSpec& src : sc.sources) {
    json sv;
    sv["link"] = sc.links[src.link].name;
    json profile = json::object();
    for (int c = 0; c < C; ++c) {
      if (src.rate_profile[c].empty()) continue;
      json pieces = json::array();
      for (const DemandPiece& piece : src.rate_profile[c])
        pieces.push_back({{"start", piece.start_time}, {"rate", piece.rate}});
      profile[sc.class_names[c]] = std::move(pieces);
    }
    sv["profile"] = std::move(profile);
    sources.push_back(std::move(sv));
  }
  root["sources"] = std::move(sources);

  json sinks = json::array();
  for (const SinkSpec& sink : sc.sinks) {
    json sv;
    sv["link"] = sc.links[sink.link].name;
    if (std::isfinite(sink.supply)) sv["supply"] = sink.supply;
    sinks.push_back(std::move(sv));
  }
  root["sinks"] = std::move(sinks);
  return root;
}

// ---------------------------------------------------------------------------
// CSV emitters

inline void write_states_csv(std::ostream& out, const Scenario& sc,
                             const std::vector<Snapshot>& snapshots) {
  const int C = sc.num_classes();
  out << "step,time,link,cell,class,density\n";
  for (const Snapshot& snap : snapshots) {
    int cell0 = 0;
    for (const LinkSpec& link : sc.links) {
      for (int g = 0; g < link.cell_count; ++g)
        for (int c = 0; c < C; ++c)
          out << snap.step_index << ',' << format_number(snap.time) << ','
              << link.name << ',' << g << ',' << sc.class_names[c] << ','
              << format_number(snap.density[(cell0 + g) * C + c]) << '\n';
      cell0 += link.cell_count;
    }
  }
}

inline json summary_to_json(const Scenario& sc, const RunSummary& sum) {
  const int C = sc.num_classes();
  json root;
  root["steps"] = sum.steps;
  auto per_class = [&](const std::vector<double>& v) {
    json obj = json::object();
    for (int c = 0; c < C; ++c) obj[sc.class_names[c]] = v[c];
    return obj;
  };
  root["injected"] = per_class(sum.injected);
  root["drained"] = per_class(sum.drained);
  root["stored_initial"] = per_class(sum.stored_initial);
  root["stored_final"] = per_class(sum.stored_final);
  root["conservation_residual"] = per_class(sum.conservation_residual);
  root["vehicle_hours"] = per_class(sum.vehicle_hours);
  json outflow = json::object();
  for (std::size_t l = 0; l < sc.links.size(); ++l)
    outflow[sc.links[l].name] = per_class(sum.link_outflow[l]);
  root["link_outflow"] = std::move(outflow);
  json nodes = json::object();
  for (std::size_t n = 0; n < sc.nodes.size(); ++n) {
    const auto& t = sum.node_terminations[n];
    nodes[sc.nodes[n].name] = {{"all_assigned", t[0]}, {"balanced", t[1]},
                               {"iteration_cap", t[2]}, {"stalled", t[3]}};
  }
  root["node_terminations"] = std::move(nodes);
  return root;
}

inline void write_trace_csv(std::ostream& out, const SolverTrace& trace) {
  out << "iteration,max_fill_ratio,target_fill_ratio,target_output,target_input,"
         "target_class,balanced,increment\n";
  for (const IterationRecord& rec : trace.records)
    out << rec.k << ',' << format_number(rec.max_fill_ratio) << ','
        << format_number(rec.target_fill_ratio) << ',' << rec.target_output << ','
        << rec.target_input << ',' << rec.target_class << ','
        << (rec.balanced ? 1 : 0) << ',' << format_number(rec.increment) << '\n';
}

} // namespace splitflow::io
