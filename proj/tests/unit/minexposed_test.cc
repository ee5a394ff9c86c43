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

#include "ctrace/minexposed.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ctrace/optim.h"
#include "support/fixtures.h"

namespace ctrace {
namespace {

using testing::figure1_instance;
using testing::random_instance;

// u1 -- u -- v with the given q on both edges.
MinExposedInstance one_edge(double p, double q, double c) {
  MinExposedInstance inst;
  inst.infected = {0};
  inst.v1 = {1};
  inst.v2 = {2};
  inst.p = {p};
  inst.c = {c};
  inst.edges = {{0, 0, q}};
  inst.budget = 1;
  inst.finalize();
  return inst;
}

// Every other V1 position, up to the budget.
QuarantineSet alternate_positions(const MinExposedInstance& inst) {
  QuarantineSet q;
  for (int u = 0; u < inst.num_v1() && static_cast<int>(q.size()) < inst.budget; u += 2) {
    q.push_back(u);
  }
  return q;
}

TEST(InfectionProbTest, ProductFormula) {
  std::vector<Edge> edges = {{0, 2, 1.0, 0.3}, {1, 3, 1.0, 0.5}, {4, 3, 1.0, 0.5},
                             {5, 6, 1.0, 0.2}, {7, 6, 1.0, 1.0}};
  const ContactNetwork net = ContactNetwork::from_edges(8, edges);
  const std::vector<NodeId> infected = {0, 1, 4, 5, 7};
  EXPECT_DOUBLE_EQ(infection_prob(net, infected, 2), 0.3);
  EXPECT_DOUBLE_EQ(infection_prob(net, infected, 3), 0.75);
  EXPECT_DOUBLE_EQ(infection_prob(net, infected, 6), 1.0);
}

TEST(InfectionProbTest, RejectsNodeAwayFromInfected) {
  const ContactNetwork net = ContactNetwork::from_edges(3, {{0, 1, 1.0, 0.5}});
  const std::vector<NodeId> infected = {0};
  EXPECT_THROW(infection_prob(net, infected, 2), InvalidArgument);
}

TEST(BuildInstanceTest, FigureOneShape) {
  const MinExposedInstance inst = figure1_instance();
  EXPECT_EQ(inst.v1, (std::vector<NodeId>{2, 3, 4}));
  EXPECT_EQ(inst.v2, (std::vector<NodeId>{5, 6, 7, 8}));
  EXPECT_EQ(inst.edges.size(), 7u);
  EXPECT_EQ(inst.max_v2_degree, 3);
  EXPECT_EQ(inst.v2_degree, (std::vector<int>{3, 1, 2, 1}));
  for (double p : inst.p) EXPECT_EQ(p, 1.0);
}

TEST(BuildInstanceTest, NoSecondRing) {
  const ContactNetwork net = ContactNetwork::from_edges(3, {{0, 1, 1.0, 0.5}, {0, 2, 1.0, 0.5}});
  const std::vector<NodeId> infected = {0};
  const MinExposedInstance inst = build_instance(net, infected, 1);
  EXPECT_EQ(inst.num_v2(), 0);
  EXPECT_EQ(objective_exact(inst, {}), 0.0);
  EXPECT_EQ(objective_exact(inst, {1}), 0.0);
}

TEST(BuildInstanceTest, ZeroBudgetAllowsOnlyEmptySet) {
  const MinExposedInstance inst = figure1_instance(0);
  EXPECT_NO_THROW(check_feasible(inst, {}));
  EXPECT_THROW(check_feasible(inst, {0}), ContractViolation);
}

TEST(BuildInstanceTest, EmptyInfectedRejected) {
  EXPECT_THROW(build_instance(testing::figure1_network(), {}, 1), InvalidArgument);
}

TEST(BuildInstanceTest, LabelBudgetsMustSumToBudget) {
  PerLabel<int> budgets{0, 0, 1, 0, 0};
  EXPECT_THROW(build_instance(testing::figure1_network(), testing::figure1_infected(), 2,
                              budgets),
               InvalidArgument);
}

TEST(ObjectiveTest, FigureOneValues) {
  const MinExposedInstance inst = figure1_instance();
  // Positions: u3 = 0, u4 = 1, u5 = 2.
  EXPECT_EQ(objective_exact(inst, {1, 2}), 1.0);
  EXPECT_EQ(objective_exact(inst, {}), 4.0);
  EXPECT_EQ(objective_exact(inst, {0, 1}), 3.0);
  EXPECT_EQ(objective_exact(inst, {0, 2}), 3.0);
  EXPECT_EQ(union_bound_value(inst, {1, 2}), 1.0);
  EXPECT_EQ(union_bound_value(inst, {}), 7.0);
  EXPECT_EQ(milp_objective_value(inst, {1, 2}), 1.0);
}

TEST(ObjectiveTest, CompliantQuarantineBlocks) {
  const MinExposedInstance inst = one_edge(0.5, 0.4, 1.0);
  EXPECT_EQ(objective_exact(inst, {0}), 0.0);
  EXPECT_DOUBLE_EQ(objective_exact(inst, {}), 0.2);
  EXPECT_DOUBLE_EQ(union_bound_value(inst, {}), objective_exact(inst, {}));
}

TEST(ObjectiveTest, InfeasibleSetRejected) {
  const MinExposedInstance inst = figure1_instance();
  EXPECT_THROW(objective_exact(inst, {0, 1, 2}), ContractViolation);
  EXPECT_THROW(objective_exact(inst, {5}), ContractViolation);
  EXPECT_THROW(objective_exact(inst, {1, 1}), ContractViolation);
}

// Independent evaluation by enumerating every joint outcome of the V1
// states (spreading or not) and summing exposure probabilities.
double enumerate_exposure(const MinExposedInstance& inst, const QuarantineSet& q) {
  const int n1 = inst.num_v1();
  std::vector<char> asked(n1, 0);
  for (int u : q) asked[u] = 1;
  double total = 0.0;
  for (int mask = 0; mask < (1 << n1); ++mask) {
    double prob = 1.0;
    for (int u = 0; u < n1; ++u) {
      const double spread = inst.p[u] * (asked[u] ? 1.0 - inst.c[u] : 1.0);
      prob *= (mask >> u & 1) ? spread : 1.0 - spread;
    }
    if (prob == 0.0) continue;
    for (int v = 0; v < inst.num_v2(); ++v) {
      double miss = 1.0;
      for (const ExposureEdge& e : inst.edges) {
        if (e.v == v && (mask >> e.u & 1)) miss *= 1.0 - e.q;
      }
      total += prob * (1.0 - miss);
    }
  }
  return total;
}

TEST(ObjectiveTest, ClosedFormMatchesOutcomeEnumeration) {
  Rng rng(11);
  testing::RandomInstanceOptions opts;
  opts.max_v1 = 8;
  opts.max_v2 = 8;
  for (int t = 0; t < 30; ++t) {
    const MinExposedInstance inst = random_instance(rng, opts);
    const QuarantineSet q = alternate_positions(inst);
    EXPECT_NEAR(objective_exact(inst, q), enumerate_exposure(inst, q), 1e-12);
  }
}

TEST(ObjectiveTest, UnionBoundAndMonotonicity) {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    MinExposedInstance inst = random_instance(rng);
    inst.budget = inst.num_v1();
    QuarantineSet q;
    double prev = objective_exact(inst, q);
    EXPECT_LE(prev, union_bound_value(inst, q) + 1e-12);
    EXPECT_LE(milp_objective_value(inst, q), prev + 1e-12);
    for (int u = 0; u < inst.num_v1(); ++u) {
      if (rng.bernoulli(0.5)) continue;
      q.push_back(u);
      const double cur = objective_exact(inst, q);
      EXPECT_LE(cur, prev + 1e-12);
      EXPECT_LE(cur, union_bound_value(inst, q) + 1e-12);
      EXPECT_LE(milp_objective_value(inst, q), cur + 1e-12);
      prev = cur;
    }
  }
}

TEST(ObjectiveTest, ZeroComplianceMakesQuarantineIrrelevant) {
  Rng rng(13);
  MinExposedInstance inst = random_instance(rng);
  std::fill(inst.c.begin(), inst.c.end(), 0.0);
  inst.budget = inst.num_v1();
  const double base = objective_exact(inst, {});
  QuarantineSet all(inst.num_v1());
  for (int u = 0; u < inst.num_v1(); ++u) all[u] = u;
  EXPECT_DOUBLE_EQ(objective_exact(inst, all), base);
}

TEST(ObjectiveMcTest, DeterministicRatesGiveExactValue) {
  const MinExposedInstance inst = figure1_instance();
  const McEstimate est = objective_mc(inst, {1, 2}, 100000, 5);
  EXPECT_EQ(est.mean, 1.0);
  EXPECT_EQ(est.std_error, 0.0);
}

TEST(ObjectiveMcTest, SingleEdgeWithoutCompliance) {
  const MinExposedInstance inst = one_edge(0.5, 0.4, 0.0);
  const McEstimate est = objective_mc(inst, {0}, 200000, 6);
  EXPECT_NEAR(est.mean, 0.2, 3 * est.std_error);
}

TEST(ObjectiveMcTest, AgreesWithClosedFormOnRandomInstances) {
  Rng rng(14);
  int outside = 0;
  for (int t = 0; t < 50; ++t) {
    const MinExposedInstance inst = random_instance(rng);
    const QuarantineSet q = alternate_positions(inst);
    const McEstimate est = objective_mc(inst, q, 20000, 100 + t);
    if (std::fabs(est.mean - objective_exact(inst, q)) > 3 * est.std_error) ++outside;
  }
  // About 0.3% of honest comparisons land outside 3 SE.
  EXPECT_LE(outside, 2);
}

TEST(ObjectiveMcTest, RejectsZeroTrials) {
  EXPECT_THROW(objective_mc(figure1_instance(), {}, 0, 1), InvalidArgument);
}

TEST(ObjectiveMcTest, PluggableSampler) {
  // Fully correlated transmissions: one coin decides every edge.
  const ExposureSampler all_or_nothing = [](const MinExposedInstance& inst,
                                            const std::vector<char>&, Rng& rng) {
    return rng.bernoulli(0.5) ? inst.num_v2() : 0;
  };
  const McEstimate est = objective_mc(figure1_instance(), {}, 10000, 7, all_or_nothing);
  EXPECT_NEAR(est.mean, 2.0, 3 * est.std_error + 1e-12);
}

// Direct search for a k-clique.
bool has_clique(const SimpleGraph& g, int k) {
  std::vector<std::vector<char>> adj(g.n, std::vector<char>(g.n, 0));
  for (auto [a, b] : g.edges) adj[a][b] = adj[b][a] = 1;
  for (int mask = 0; mask < (1 << g.n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    bool ok = true;
    for (int a = 0; a < g.n && ok; ++a) {
      for (int b = a + 1; b < g.n && ok; ++b) {
        if ((mask >> a & 1) && (mask >> b & 1) && !adj[a][b]) ok = false;
      }
    }
    if (ok) return true;
  }
  return false;
}

SimpleGraph complete(int n) {
  SimpleGraph g{n, {}};
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) g.edges.push_back({a, b});
  }
  return g;
}

SimpleGraph cycle(int n) {
  SimpleGraph g{n, {}};
  for (int a = 0; a < n; ++a) g.edges.push_back({a, (a + 1) % n});
  return g;
}

TEST(CliqueTest, ReductionShape) {
  const CliqueReduction red = clique_to_minexposed(complete(3), 3);
  EXPECT_EQ(red.instance.num_v1(), 3);
  EXPECT_EQ(red.instance.num_v2(), 3);
  EXPECT_EQ(red.threshold, 0.0);
  EXPECT_EQ(brute_force_opt(red.instance).value, 0.0);
}

TEST(CliqueTest, PathHasNoTriangle) {
  const SimpleGraph path{3, {{0, 1}, {1, 2}}};
  const CliqueReduction red = clique_to_minexposed(path, 3);
  EXPECT_EQ(red.threshold, -1.0);
  EXPECT_EQ(brute_force_opt(red.instance).value, 0.0);
  EXPECT_FALSE(clique_decision(path, 3));
}

TEST(CliqueTest, PathPairQuarantine) {
  // With k = 2 the best pair covers one edge and leaves the other exposed.
  const SimpleGraph path{3, {{0, 1}, {1, 2}}};
  EXPECT_EQ(brute_force_opt(clique_to_minexposed(path, 2).instance).value, 1.0);
}

TEST(CliqueTest, SmallCases) {
  EXPECT_TRUE(clique_decision(SimpleGraph{2, {{0, 1}}}, 2));
  EXPECT_TRUE(clique_decision(complete(4), 4));
  EXPECT_FALSE(clique_decision(cycle(5), 3));
  EXPECT_THROW(clique_to_minexposed(complete(3), 1), InvalidArgument);
  EXPECT_THROW(clique_to_minexposed(complete(3), 4), InvalidArgument);
  EXPECT_THROW(clique_decision(complete(15), 3), InvalidArgument);
}

TEST(CliqueTest, AgreesWithDirectSearch) {
  Rng rng(15);
  for (int t = 0; t < 60; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(7));
    const double density = rng.uniform();
    SimpleGraph g{n, {}};
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (rng.bernoulli(density)) g.edges.push_back({a, b});
      }
    }
    for (int k = 2; k <= n; ++k) {
      EXPECT_EQ(clique_decision(g, k), has_clique(g, k)) << "n=" << n << " k=" << k;
    }
  }
}

TEST(InstanceJsonTest, RoundTrip) {
  Rng rng(16);
  testing::RandomInstanceOptions opts;
  opts.labels = true;
  MinExposedInstance inst = random_instance(rng, opts);
  inst.exposure_caps = PerLabel<double>{1.5, kInfinity, 2.0, kInfinity, kInfinity};
  const MinExposedInstance back = instance_from_json(instance_to_json(inst));
  EXPECT_EQ(back.v1, inst.v1);
  EXPECT_EQ(back.edges, inst.edges);
  EXPECT_EQ(back.p, inst.p);
  EXPECT_EQ(back.c, inst.c);
  EXPECT_EQ(back.v1_labels, inst.v1_labels);
  EXPECT_EQ(back.exposure_caps, inst.exposure_caps);
  EXPECT_EQ(instance_to_json(back), instance_to_json(inst));
}

TEST(InstanceJsonTest, RejectsUnknownNode) {
  EXPECT_THROW(instance_from_json(R"({"I":[0],"V1":[1],"V2":[2],"edges":[[5,2,0.5]],)"
                                  R"("p":[0.5],"c":[1],"B":1})"),
               InvalidArgument);
}

}  // namespace
}  // namespace ctrace
