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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctrace/harness.h"

namespace py = pybind11;
using namespace ctrace;

namespace {

PerLabel<int> counts_from_dict(const std::map<std::string, int>& counts) {
  PerLabel<int> out{};
  for (const auto& [code, n] : counts) out[label_index(parse_label(code))] = n;
  return out;
}

std::map<std::string, int> counts_to_dict(const PerLabel<int>& v) {
  std::map<std::string, int> out;
  for (Label l : kAllLabels) out[std::string(1, label_code(l))] = v[label_index(l)];
  return out;
}

}  // namespace

PYBIND11_MODULE(_ctrace, m) {
  m.doc() = "Quarantine selection on contact networks";

  static py::exception<ContractViolation> contract(m, "ContractViolation", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ContractViolation& e) {
      contract(e.what());
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ParseError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    }
  });

  py::class_<ContactNetwork>(m, "ContactNetwork")
      .def_property_readonly("num_nodes", &ContactNetwork::num_nodes)
      .def_property_readonly("num_edges", &ContactNetwork::num_edges)
      .def_property_readonly("mean_degree", &ContactNetwork::mean_degree)
      .def_property_readonly("mean_q", &ContactNetwork::mean_q)
      .def("degree", &ContactNetwork::degree)
      .def("edges",
           [](const ContactNetwork& n) {
             std::vector<std::tuple<int, int, double, double>> out;
             for (const Edge& e : n.edges()) out.emplace_back(e.u, e.v, e.duration, e.q);
             return out;
           })
      .def("labels",
           [](const ContactNetwork& n) {
             std::string out;
             for (Label l : n.labels()) out.push_back(label_code(l));
             return out;
           })
      .def("compliances", [](const ContactNetwork& n) {
        return std::vector<double>(n.compliances().begin(), n.compliances().end());
      });

  m.def(
      "generate_network",
      [](int nodes, double mean_degree, const std::string& kind, std::uint64_t seed,
         double mean_q, const std::string& demographics) {
        NetworkSource src;
        src.gen.nodes = nodes;
        src.gen.mean_degree = mean_degree;
        src.gen.kind = parse_generator_kind(kind);
        src.gen.seed = seed;
        src.gen.target_mean_q = mean_q;
        src.demographics = demographics;
        return build_network(src);
      },
      py::arg("nodes") = 1000, py::arg("mean_degree") = 17.0,
      py::arg("kind") = "configuration", py::arg("seed") = 1, py::arg("mean_q") = 0.05,
      py::arg("demographics") = "montgomery");
  m.def("load_network", &load_saved_network, py::arg("prefix"));
  m.def("save_network", &save_network, py::arg("network"), py::arg("prefix"));

  py::class_<MinExposedInstance>(m, "Instance")
      .def_readonly("infected", &MinExposedInstance::infected)
      .def_readonly("v1", &MinExposedInstance::v1)
      .def_readonly("v2", &MinExposedInstance::v2)
      .def_readonly("p", &MinExposedInstance::p)
      .def_readonly("c", &MinExposedInstance::c)
      .def_readonly("budget", &MinExposedInstance::budget)
      .def_readonly("max_v2_degree", &MinExposedInstance::max_v2_degree)
      .def("to_json", &instance_to_json)
      .def_static("from_json", &instance_from_json);

  m.def(
      "build_instance",
      [](const ContactNetwork& net, const std::vector<NodeId>& infected, int budget) {
        return build_instance(net, infected, budget);
      },
      py::arg("network"), py::arg("infected"), py::arg("budget"));
  m.def("objective_exact", &objective_exact);
  m.def("union_bound_value", &union_bound_value);
  m.def("milp_objective_value", &milp_objective_value);

  m.def("deg_greedy", &deg_greedy);
  m.def("dep_round_policy", &policy_dep_round, py::arg("instance"), py::arg("seed"));
  m.def("seg_degree",
        [](const MinExposedInstance& inst, std::uint64_t seed) { return seg_degree(inst, seed); });
  m.def("random_policy", &random_policy);
  m.def(
      "private_deg_greedy",
      [](const MinExposedInstance& inst, double epsilon, double p, std::uint64_t seed) {
        return private_deg_greedy(inst, PrivacyParams{epsilon, p}, seed);
      },
      py::arg("instance"), py::arg("epsilon"), py::arg("p") = 0.05, py::arg("seed") = 1);
  m.def(
      "fair_deg_greedy",
      [](const MinExposedInstance& inst, const std::map<std::string, int>& budgets) {
        return fair_deg_greedy(inst, counts_from_dict(budgets));
      });

  m.def(
      "solve_lp",
      [](const MinExposedInstance& inst) {
        const FractionalSolution s = solve_lp(build_milp(inst), inst);
        py::dict d;
        d["status"] = lp_status_name(s.status);
        d["objective"] = s.objective;
        d["x"] = s.x;
        d["z"] = s.z;
        return d;
      });
  m.def(
      "solve_milp",
      [](const MinExposedInstance& inst, long long node_limit, double time_limit) {
        BranchAndBoundOptions opts;
        opts.node_limit = node_limit;
        opts.time_limit_seconds = time_limit;
        const MilpResult r = solve_milp_bb(build_milp(inst), inst, opts);
        py::dict d;
        d["q"] = r.q;
        d["objective"] = r.objective;
        d["bound"] = r.bound;
        d["proven_optimal"] = r.proven_optimal;
        return d;
      },
      py::arg("instance"), py::arg("node_limit") = 100000, py::arg("time_limit") = 60.0);
  m.def("brute_force", [](const MinExposedInstance& inst) {
    const BruteForceResult r = brute_force_opt(inst);
    return py::make_tuple(r.q, r.value);
  });
  m.def(
      "dep_round",
      [](const std::vector<double>& x, int budget, std::uint64_t seed) {
        return dep_round(x, budget, seed).selected;
      },
      py::arg("x"), py::arg("budget"), py::arg("seed"));
  m.def(
      "discrete_gaussian",
      [](double sigma2, int n, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<std::int64_t> out(n);
        for (auto& x : out) x = discrete_gaussian(sigma2, rng);
        return out;
      },
      py::arg("sigma2"), py::arg("n"), py::arg("seed") = 1);

  m.def(
      "allocate_budgets",
      [](const std::string& policy, const std::map<std::string, int>& counts, int budget) {
        const BudgetAllocation a =
            allocate_budgets(parse_fairness_policy(policy), counts_from_dict(counts), budget);
        return counts_to_dict(a.budgets);
      },
      py::arg("policy"), py::arg("counts"), py::arg("budget"));
  m.def("estimate_budget", [](double population) {
    const BudgetEstimate e = estimate_budget(population);
    py::dict d;
    d["tracers"] = e.tracers;
    d["tracers_low"] = e.tracers_low;
    d["tracers_high"] = e.tracers_high;
    d["budget_low"] = e.budget_low;
    d["budget_high"] = e.budget_high;
    return d;
  });
  m.def("clique_decision", [](int n, const std::vector<std::pair<int, int>>& edges, int k) {
    return clique_decision(SimpleGraph{n, edges}, k);
  });

  m.def(
      "simulate",
      [](const ContactNetwork& net, const std::string& policy, int budget, std::uint64_t seed,
         int horizon, int initial_infections) {
        SimulationConfig cfg;
        cfg.policy.kind = parse_policy_kind(policy);
        cfg.budget = budget;
        cfg.seed = seed;
        cfg.horizon = horizon;
        cfg.initial_infections = initial_infections;
        const Trajectory t = run_mdp(net, cfg);
        const TrajectoryMetrics mt = trajectory_metrics(t);
        py::dict d;
        d["total_infected"] = t.total_infected();
        d["total_infection_pct"] = mt.total_infection_pct;
        d["peak_known_infections"] = mt.peak_known_infections;
        d["peak_timestep"] = mt.peak_timestep;
        d["csv"] = trajectory_csv(t);
        return d;
      },
      py::arg("network"), py::arg("policy") = "deg_greedy", py::arg("budget") = 10,
      py::arg("seed") = 1, py::arg("horizon") = 100, py::arg("initial_infections") = 10);
  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        return experiment_summary_json(run_experiment(experiment_spec_from_json(config_json)));
      },
      py::arg("config_json"));
}
