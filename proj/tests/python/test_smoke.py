# Copyright 2026 The ctrace Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import itertools
import json
import math

import pytest

import ctrace




def small_instance(budget=2):
    net = ctrace.generate_network(nodes=200, mean_degree=6, seed=3)
    return ctrace.build_instance(net, [0, 1, 2], budget)


def test_generate_network():
    net = ctrace.generate_network(nodes=500, seed=2)
    assert net.num_nodes == 500
    assert abs(net.mean_q - 0.05) < 1e-6
    assert len(net.edges()) == net.num_edges
    assert set(net.labels()) <= set("psaog")


def test_instance_round_trip_and_objectives():
    inst = small_instance(3)
    again = ctrace.Instance.from_json(inst.to_json())
    assert again.v1 == inst.v1
    q = ctrace.deg_greedy(inst)
    assert len(q) <= inst.budget
    exact = ctrace.objective_exact(inst, q)
    assert exact <= ctrace.union_bound_value(inst, q) + 1e-12


def test_sandwich():
    inst = small_instance(2)
    lp = ctrace.solve_lp(inst)
    milp = ctrace.solve_milp(inst)
    assert lp["status"] == "optimal"
    assert milp["proven_optimal"]
    assert lp["objective"] <= milp["objective"] + 1e-6
    for q in (milp["q"], ctrace.deg_greedy(inst), ctrace.dep_round_policy(inst, 4)):
        assert milp["objective"] <= ctrace.objective_exact(inst, q) + 1e-6


def test_dep_round_budget():
    x = [0.5, 0.3, 0.9, 0.25, 0.7]
    for seed in range(200):
        assert len(ctrace.dep_round(x, 3, seed)) <= 3
    with pytest.raises(ValueError):
        ctrace.dep_round([1.5], 1, 1)


def test_allocate_and_estimate():
    b = ctrace.allocate_budgets("D", {"p": 10, "s": 10, "a": 40, "o": 30, "g": 10}, 100)
    assert sum(b.values()) == 100
    e = ctrace.estimate_budget(75457)
    assert (e["tracers_low"], e["tracers_high"]) == (18, 19)


def test_discrete_gaussian_mass():
    draws = ctrace.discrete_gaussian(1.0, 200000, seed=5)
    z = sum(math.exp(-k * k / 2) for k in range(-50, 51))
    p0 = 1 / z
    freq = draws.count(0) / len(draws)
    assert abs(freq - p0) < 3 * math.sqrt(p0 * (1 - p0) / len(draws))


def test_clique_decision():
    k4 = list(itertools.combinations(range(4), 2))
    assert ctrace.clique_decision(4, k4, 4)
    c5 = [(i, (i + 1) % 5) for i in range(5)]
    assert not ctrace.clique_decision(5, c5, 3)


def test_simulate_deterministic():
    net = ctrace.generate_network(nodes=400, seed=1)
    a = ctrace.simulate(net, "deg_greedy", budget=5, seed=2, horizon=30)
    b = ctrace.simulate(net, "deg_greedy", budget=5, seed=2, horizon=30)
    assert a == b
    assert a["csv"].startswith("timestep,S,I1,I2,R")


def test_run_experiment_and_errors():
    cfg = {"network": {"generate": {"nodes": 300}}, "policies": ["deg_greedy", "none"],
           "budgets": [5], "trials": 2, "simulation": {"horizon": 20}}
    summary = json.loads(ctrace.run_experiment(json.dumps(cfg)))
    assert len(summary["aggregates"]) == 2
    with pytest.raises(ValueError):
        ctrace.run_experiment(json.dumps({"polices": []}))
