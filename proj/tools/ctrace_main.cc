// Copyright 2026 The ctrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ctrace command line tool.
//
//   ctrace gen            generate (and save) a contact network
//   ctrace simulate       one MDP run under a policy
//   ctrace sweep          run an experiment config
//   ctrace bench          approximation benchmark on harvested instances
//   ctrace reduce-clique  clique instance -> MinExposed instance
//   ctrace solve          apply a policy to one serialized instance
//
// Exit status: 0 on success, 1 when a contract check fails, 2 on bad input.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctrace/harness.h"

namespace {

using namespace ctrace;
using OJson = nlohmann::ordered_json;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

// Network flags shared by gen and simulate.
struct NetworkFlags {
  NetworkSource src;
  std::string kind = "configuration";

  void add(CLI::App* app, bool allow_load) {
    if (allow_load) {
      app->add_option("--network", src.saved_prefix, "Saved network prefix");
      app->add_option("--edges", src.edge_file, "Edge CSV (u,v,duration)");
      app->add_option("--attributes", src.attr_file, "Node attribute CSV");
    }
    app->add_option("--nodes", src.gen.nodes, "Generated network size")
        ->capture_default_str();
    app->add_option("--mean-degree", src.gen.mean_degree)->capture_default_str();
    app->add_option("--kind", kind, "configuration, geometric or small_world")
        ->capture_default_str();
    app->add_option("--mean-q", src.gen.target_mean_q, "Mean transmission probability")
        ->capture_default_str();
    app->add_option("--net-seed", src.gen.seed)->capture_default_str();
    app->add_option("--demographics", src.demographics, "montgomery, albemarle or none")
        ->capture_default_str();
    app->add_option("--compliance-noise", src.compliance_noise)->capture_default_str();
    app->add_option("--demographics-seed", src.demographics_seed)->capture_default_str();
    app->add_option("--augment", src.augment, "Degree increase fraction")
        ->capture_default_str();
    app->add_option("--augment-seed", src.augment_seed)->capture_default_str();
  }

  ContactNetwork build() {
    src.gen.kind = parse_generator_kind(kind);
    return build_network(src);
  }
};

OJson network_stats(const ContactNetwork& net) {
  double q = 0;
  for (const Edge& e : net.edges()) q += e.q;
  OJson j;
  j["nodes"] = net.num_nodes();
  j["edges"] = net.num_edges();
  j["mean_degree"] = net.num_nodes() ? 2.0 * net.num_edges() / net.num_nodes() : 0.0;
  j["mean_q"] = net.num_edges() ? q / net.num_edges() : 0.0;
  return j;
}

int cmd_gen(NetworkFlags& flags, const std::string& out) {
  ContactNetwork net = flags.build();
  if (!out.empty()) save_network(net, out);
  OJson j = network_stats(net);
  if (!out.empty()) j["prefix"] = out;
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct SimulateFlags {
  NetworkFlags net;
  std::string mode = "manual";
  std::string policy = "deg_greedy";
  std::string fairness;
  SimulationConfig sim;
  std::string out, summary;
};

int cmd_simulate(SimulateFlags& f) {
  const TracingMode mode = parse_tracing_mode(f.mode);
  f.sim.policy.kind = parse_policy_kind(f.policy);
  if (!policy_allowed(mode, f.sim.policy.kind)) {
    throw InvalidArgument("policy " + f.policy + " is not available in " + f.mode + " mode");
  }
  if (!f.fairness.empty()) f.sim.fairness = parse_fairness_policy(f.fairness);
  f.sim.validate();
  const ContactNetwork net = apply_mode(f.net.build(), mode);
  const Trajectory traj = run_mdp(net, f.sim);
  if (f.out.empty()) {
    std::cout << trajectory_csv(traj);
    if (!f.summary.empty()) write_or_print(f.summary, trajectory_summary_json(traj));
  } else {
    write_or_print(f.out, trajectory_csv(traj));
    write_or_print(f.summary.empty() ? "-" : f.summary, trajectory_summary_json(traj));
  }
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& output, int threads) {
  ExperimentSpec spec = load_experiment_spec(config);
  if (!output.empty()) spec.output_dir = output;
  if (threads > 0) spec.threads = threads;
  const ExperimentResult result = run_experiment(spec);
  if (spec.output_dir.empty()) {
    std::cout << experiment_summary_json(result);
  } else {
    std::cout << "wrote " << result.runs.size() << " runs to " << spec.output_dir << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& config, const std::string& output) {
  BenchSpec spec = config.empty() ? BenchSpec{} : bench_spec_from_json(read_text(config));
  if (!output.empty()) spec.output_dir = output;
  const BenchReport report = bench_approx(spec);
  if (!spec.output_dir.empty()) write_bench(report, spec.output_dir);
  std::cout << bench_summary_json(report);
  if (!report.ok()) {
    std::cerr << "bench: " << report.sandwich_violations << " sandwich and "
              << report.bound_violations << " bound violations\n";
    return 1;
  }
  return 0;
}

// Graph file: one edge "u v" or "u,v" per line, '#' comments. Node count is
// max id + 1 unless given.
SimpleGraph read_graph(const std::string& path, int nodes) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  SimpleGraph g;
  std::string line;
  int line_no = 0, max_id = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u)) continue;  // blank
    std::string rest;
    if (!(ls >> v) || (ls >> rest) || u < 0 || v < 0) {
      throw ParseError(path, line_no, "expected two non-negative node ids");
    }
    g.edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
    max_id = std::max<int>(max_id, static_cast<int>(std::max(u, v)));
  }
  g.n = nodes >= 0 ? nodes : max_id + 1;
  if (max_id >= g.n) throw InvalidArgument("edge endpoint exceeds --nodes");
  return g;
}

int cmd_reduce_clique(const std::string& graph_path, int nodes, int k,
                      const std::string& out, bool decide) {
  const SimpleGraph g = read_graph(graph_path, nodes);
  const CliqueReduction red = clique_to_minexposed(g, k);
  if (!out.empty()) write_or_print(out, instance_to_json(red.instance));
  OJson j;
  j["nodes"] = g.n;
  j["edges"] = g.edges.size();
  j["k"] = k;
  j["threshold"] = red.threshold;
  if (decide) {
    const BruteForceResult opt = brute_force_opt(red.instance);
    j["optimum"] = opt.value;
    j["clique"] = clique_decision(g, k);
    OJson members = OJson::array();
    for (int pos : opt.q) members.push_back(red.instance.v1[pos]);
    j["best_set"] = members;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct SolveFlags {
  std::string instance;
  std::string policy = "deg_greedy";
  std::uint64_t seed = 1;
  double epsilon = 1.0;
  std::string fairness;
  std::string network;
  std::string lp_dump;
  std::string out;
  long long node_limit = 100000;
  double time_limit = 60.0;
};

int cmd_solve(const SolveFlags& f) {
  MinExposedInstance inst = instance_from_json(read_text(f.instance));
  if (!f.fairness.empty()) {
    PerLabel<int> counts{};
    for (Label l : inst.v1_labels) ++counts[label_index(l)];
    const BudgetAllocation alloc =
        allocate_budgets(parse_fairness_policy(f.fairness), counts, inst.budget);
    if (alloc.pooled) {
      inst.label_budgets.reset();
    } else {
      inst.label_budgets = alloc.budgets;
    }
    inst.finalize();
  }
  if (!f.lp_dump.empty()) {
    std::ofstream lp(f.lp_dump);
    if (!lp) throw InvalidArgument("cannot write " + f.lp_dump);
    build_milp(inst).lp.write_lp_format(lp);
  }

  OJson j;
  j["policy"] = f.policy;
  QuarantineSet q;
  if (f.policy == "milp") {
    BranchAndBoundOptions opts;
    opts.node_limit = f.node_limit;
    opts.time_limit_seconds = f.time_limit;
    const MinExposedProgram program = build_milp(inst);
    const MilpResult r = solve_milp_bb(program, inst, opts);
    if (r.infeasible) throw ContractViolation("instance is infeasible");
    q = r.q;
    j["proven_optimal"] = r.proven_optimal;
    j["bound"] = r.bound;
    j["nodes_explored"] = r.nodes;
  } else if (f.policy == "lp") {
    const MinExposedProgram program = build_milp(inst);
    const FractionalSolution lp = solve_lp(program, inst);
    j["status"] = lp_status_name(lp.status);
    j["lp_value"] = lp.objective;
    j["x"] = lp.x;
    std::cout << j.dump(2) << "\n";
    return lp.status == LpStatus::kOptimal ? 0 : 1;
  } else if (f.policy == "brute_force") {
    q = brute_force_opt(inst).q;
  } else {
    PolicyConfig cfg;
    cfg.kind = parse_policy_kind(f.policy);
    cfg.privacy.epsilon = f.epsilon;
    ContactNetwork net;
    if (!f.network.empty()) net = load_saved_network(f.network);
    q = make_policy(cfg, f.network.empty() ? nullptr : &net)(inst, f.seed);
  }
  check_feasible(inst, q);

  j["budget"] = inst.budget;
  j["size"] = q.size();
  j["positions"] = q;
  j["nodes"] = to_node_ids(inst, q);
  j["objective_exact"] = objective_exact(inst, q);
  j["union_bound"] = union_bound_value(inst, q);
  j["milp_objective"] = milp_objective_value(inst, q);
  j["max_v2_degree"] = inst.max_v2_degree;
  write_or_print(f.out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact tracing quarantine selection toolkit"};
  app.require_subcommand(1);

  NetworkFlags gen_flags;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a contact network");
  gen_flags.add(gen, false);
  gen->add_option("-o,--out", gen_out, "Output prefix (<prefix>.edges.csv, ...)");

  SimulateFlags sim_flags;
  auto* sim = app.add_subcommand("simulate", "Run the epidemic MDP once");
  sim_flags.net.add(sim, true);
  sim->add_option("--mode", sim_flags.mode)->capture_default_str();
  sim->add_option("--policy", sim_flags.policy)->capture_default_str();
  sim->add_option("--budget", sim_flags.sim.budget)->capture_default_str();
  sim->add_option("--fairness", sim_flags.fairness, "A, B, C or D");
  sim->add_option("--seed", sim_flags.sim.seed)->capture_default_str();
  sim->add_option("--initial", sim_flags.sim.initial_infections)->capture_default_str();
  sim->add_option("--start", sim_flags.sim.intervention_start)->capture_default_str();
  sim->add_option("--quarantine-length", sim_flags.sim.quarantine_length)
      ->capture_default_str();
  sim->add_option("--horizon", sim_flags.sim.horizon)->capture_default_str();
  sim->add_option("--epsilon", sim_flags.sim.policy.privacy.epsilon)->capture_default_str();
  sim->add_flag("--latent-compliance", sim_flags.sim.latent_compliance);
  sim->add_option("-o,--out", sim_flags.out, "Trajectory CSV (default stdout)");
  sim->add_option("--summary", sim_flags.summary, "Summary JSON path");

  std::string sweep_config, sweep_out;
  int sweep_threads = 0;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment config");
  sweep->add_option("config", sweep_config, "Experiment JSON")->required();
  sweep->add_option("-o,--out", sweep_out, "Output directory (overrides config)");
  sweep->add_option("--threads", sweep_threads);

  std::string bench_config, bench_out;
  auto* bench = app.add_subcommand("bench", "Approximation benchmark");
  bench->add_option("config", bench_config, "Config JSON (optional)");
  bench->add_option("-o,--out", bench_out, "Output directory");

  std::string graph_path, reduce_out;
  int graph_nodes = -1, clique_k = 0;
  bool decide = false;
  auto* reduce = app.add_subcommand("reduce-clique", "Clique to MinExposed reduction");
  reduce->add_option("graph", graph_path, "Edge list")->required();
  reduce->add_option("-k", clique_k, "Clique size")->required();
  reduce->add_option("--nodes", graph_nodes, "Node count (default max id + 1)");
  reduce->add_option("-o,--out", reduce_out, "Instance JSON path");
  reduce->add_flag("--decide", decide, "Also decide the clique question");

  SolveFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "Apply a policy to one instance");
  solve->add_option("instance", solve_flags.instance, "Instance JSON")->required();
  solve->add_option("--policy", solve_flags.policy,
                    "Any policy name, or milp, lp, brute_force")
      ->capture_default_str();
  solve->add_option("--seed", solve_flags.seed)->capture_default_str();
  solve->add_option("--epsilon", solve_flags.epsilon)->capture_default_str();
  solve->add_option("--fairness", solve_flags.fairness, "Derive label budgets (A-D)");
  solve->add_option("--network", solve_flags.network, "Saved network (for ec)");
  solve->add_option("--lp-dump", solve_flags.lp_dump, "Write the program in LP format");
  solve->add_option("--node-limit", solve_flags.node_limit)->capture_default_str();
  solve->add_option("--time-limit", solve_flags.time_limit)->capture_default_str();
  solve->add_option("-o,--out", solve_flags.out, "Result JSON (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(gen_flags, gen_out);
    if (*sim) return cmd_simulate(sim_flags);
    if (*sweep) return cmd_sweep(sweep_config, sweep_out, sweep_threads);
    if (*bench) return cmd_bench(bench_config, bench_out);
    if (*reduce) return cmd_reduce_clique(graph_path, graph_nodes, clique_k, reduce_out, decide);
    if (*solve) return cmd_solve(solve_flags);
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
