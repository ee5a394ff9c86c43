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

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ctrace/episim.h"
#include "ctrace/netmodel.h"
#include "ctrace/policies.h"
#include "support/fixtures.h"

namespace ctrace {
namespace {

ContactNetwork with_all_q(const ContactNetwork& net, double q, double compliance) {
  ContactNetwork out = net.with_transmissions(std::vector<double>(net.num_edges(), q));
  return out.with_attributes(std::vector<Label>(net.labels().begin(), net.labels().end()),
                             std::vector<double>(net.num_nodes(), compliance));
}

EpidemicState blank_state(int n) {
  EpidemicState s;
  s.status.assign(n, Compartment::kS);
  s.quarantine_timer.assign(n, 0);
  return s;
}

ContactNetwork small_generated(int n, std::uint64_t seed) {
  GenSpec spec;
  spec.nodes = n;
  spec.mean_degree = 17;
  spec.seed = seed;
  return assign_demographics(generate_network(spec), kMontgomeryFractions, kBaseCompliance,
                             0.05, seed + 1);
}

TEST(SeedOutbreakTest, Examples) {
  ContactNetwork net = ContactNetwork::from_edges(10, {{0, 1, 5, 0.1}});
  EpidemicState one = seed_outbreak(net, 1, 3);
  EXPECT_EQ(one.count(Compartment::kI1), 1);
  EXPECT_EQ(one.count(Compartment::kS), 9);
  EXPECT_EQ(one.timestep, 0);
  EpidemicState all = seed_outbreak(net, 10, 3);
  EXPECT_EQ(all.count(Compartment::kS), 0);
  EXPECT_EQ(seed_outbreak(net, 4, 77).members(Compartment::kI1),
            seed_outbreak(net, 4, 77).members(Compartment::kI1));
  EXPECT_THROW(seed_outbreak(net, 0, 1), InvalidArgument);
  EXPECT_THROW(seed_outbreak(net, 11, 1), InvalidArgument);
}

TEST(StepTest, DeterministicFrontOnPath) {
  ContactNetwork net = ContactNetwork::from_edges(3, {{0, 1, 5, 1.0}, {1, 2, 5, 1.0}});
  EpidemicState s = blank_state(3);
  s.status[0] = Compartment::kI1;
  StepResult r = step(net, s, {}, 1);
  EXPECT_EQ(r.state.status[0], Compartment::kI2);
  EXPECT_EQ(r.state.status[1], Compartment::kI1);
  EXPECT_EQ(r.state.status[2], Compartment::kS);
  EXPECT_EQ(r.newly_infected, (std::vector<NodeId>{1}));
  EXPECT_EQ(r.state.timestep, 1);
  // I2 does not transmit.
  StepResult r2 = step(net, r.state, {}, 1);
  EXPECT_EQ(r2.state.status[0], Compartment::kR);
  EXPECT_EQ(r2.state.status[1], Compartment::kI2);
  EXPECT_EQ(r2.state.status[2], Compartment::kI1);
}

TEST(StepTest, FullBlocking) {
  // Known case x; a is an undetected case next to x and next to b, c.
  ContactNetwork net = with_all_q(
      ContactNetwork::from_edges(
          5, {{0, 1, 5, 1}, {0, 2, 5, 1}, {1, 2, 5, 1}, {1, 3, 5, 1}, {2, 4, 5, 1}}),
      1.0, 1.0);
  EpidemicState s = blank_state(5);
  s.status[0] = Compartment::kI2;
  s.status[1] = Compartment::kI1;
  const Rings rings = compute_rings(net, std::vector<NodeId>{0});
  StepResult r = step(net, s, rings.v1, 9);
  EXPECT_TRUE(r.newly_infected.empty());
  EXPECT_EQ(r.state.quarantined(), 2);

  // I1 empty: nothing can happen regardless.
  EpidemicState only_known = blank_state(5);
  only_known.status[0] = Compartment::kI2;
  EXPECT_TRUE(step(net, only_known, rings.v1, 9).newly_infected.empty());
}

TEST(StepTest, RequestOutsideFirstRingRejected) {
  ContactNetwork net = ContactNetwork::from_edges(3, {{0, 1, 5, 1.0}, {1, 2, 5, 1.0}});
  EpidemicState s = blank_state(3);
  s.status[0] = Compartment::kI2;
  EXPECT_THROW(step(net, s, std::vector<NodeId>{2}, 1), InvalidArgument);
  EXPECT_NO_THROW(step(net, s, std::vector<NodeId>{1}, 1));
  StepOptions bad;
  bad.quarantine_length = 0;
  EXPECT_THROW(step(net, s, {}, 1, bad), InvalidArgument);
  EXPECT_THROW(step(ContactNetwork::from_edges(4, {}), s, {}, 1), InvalidArgument);
}

// x(0) known; u(1) asked; chain a(2) -> b(3) -> c(4), each touching u.
struct QuarantineChain {
  ContactNetwork net = with_all_q(
      ContactNetwork::from_edges(5, {{0, 1, 5, 1}, {1, 2, 5, 1}, {1, 3, 5, 1}, {1, 4, 5, 1},
                                     {2, 3, 5, 1}, {3, 4, 5, 1}}),
      1.0, 1.0);

  // Timestep at which u gets infected.
  int infection_time(int length) const {
    EpidemicState s = blank_state(5);
    s.status[0] = Compartment::kI2;
    s.status[2] = Compartment::kI1;
    StepOptions opts;
    opts.quarantine_length = length;
    std::vector<NodeId> request = {1};
    for (int t = 1; t <= 6; ++t) {
      StepResult r = step(net, s, request, 5, opts);
      request.clear();
      s = r.state;
      for (NodeId v : r.newly_infected) {
        if (v == 1) return t;
      }
    }
    return -1;
  }
};

TEST(StepTest, QuarantineLastsExactlyLSteps) {
  QuarantineChain chain;
  EXPECT_EQ(chain.infection_time(1), 2);
  EXPECT_EQ(chain.infection_time(2), 3);
  EXPECT_EQ(chain.infection_time(3), -1);  // chain has run out by then
}

TEST(StepTest, QuarantinedUndetectedCaseDoesNotTransmit) {
  ContactNetwork net =
      with_all_q(ContactNetwork::from_edges(3, {{0, 1, 5, 1}, {1, 2, 5, 1}}), 1.0, 1.0);
  EpidemicState s = blank_state(3);
  s.status[0] = Compartment::kI2;
  s.status[1] = Compartment::kI1;
  StepResult r = step(net, s, std::vector<NodeId>{1}, 2);
  EXPECT_EQ(r.state.status[2], Compartment::kS);
  EXPECT_EQ(r.state.status[1], Compartment::kI2);
}

TEST(StepTest, LatentComplianceIsStableAcrossTimesteps) {
  std::vector<Edge> edges;
  for (int v = 1; v < 200; ++v) edges.push_back({0, v, 5, 0.0});
  ContactNetwork net = with_all_q(ContactNetwork::from_edges(200, edges), 0.0, 0.5);
  EpidemicState s = blank_state(200);
  s.status[0] = Compartment::kI2;
  std::vector<NodeId> all;
  for (int v = 1; v < 200; ++v) all.push_back(v);
  StepOptions latent;
  latent.latent_compliance = true;
  EpidemicState s2 = s;
  s2.timestep = 7;
  StepResult a = step(net, s, all, 3, latent);
  StepResult b = step(net, s2, all, 3, latent);
  EXPECT_EQ(a.state.quarantine_timer, b.state.quarantine_timer);
  // Fresh draws differ between timesteps.
  StepResult c = step(net, s, all, 3);
  StepResult d = step(net, s2, all, 3);
  EXPECT_NE(c.state.quarantine_timer, d.state.quarantine_timer);
  const int asked = 199;
  EXPECT_NEAR(c.state.quarantined(), asked * 0.5, 3 * std::sqrt(asked * 0.25));
}

TEST(RunMdpTest, CertainPercolation) {
  ContactNetwork net = with_all_q(testing::figure1_network(), 1.0, 1.0);
  SimulationConfig cfg;
  cfg.initial_infections = 1;
  cfg.policy.kind = PolicyKind::kNone;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    Trajectory t = run_mdp(net, cfg);
    EXPECT_DOUBLE_EQ(trajectory_metrics(t).total_infection_pct, 100.0);
    EXPECT_EQ(t.records.back().r, 9);
  }
}

TEST(RunMdpTest, HorizonZero) {
  SimulationConfig cfg;
  cfg.horizon = 0;
  cfg.initial_infections = 2;
  Trajectory t = run_mdp(testing::figure1_network(), cfg);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.records[0].i1, 2);
  EXPECT_EQ(t.records[0].new_infections, 2);
}

TEST(RunMdpTest, ConfigValidation) {
  ContactNetwork net = testing::figure1_network();
  SimulationConfig cfg;
  cfg.budget = -1;
  EXPECT_THROW(run_mdp(net, cfg), InvalidArgument);
  cfg = {};
  cfg.quarantine_length = 0;
  EXPECT_THROW(run_mdp(net, cfg), InvalidArgument);
  cfg = {};
  cfg.horizon = -2;
  EXPECT_THROW(run_mdp(net, cfg), InvalidArgument);
  cfg = {};
  cfg.initial_infections = 20;
  EXPECT_THROW(run_mdp(net, cfg), InvalidArgument);
}

TEST(RunMdpTest, InvariantsAndDeterminism) {
  ContactNetwork net = small_generated(600, 4);
  for (PolicyKind kind : {PolicyKind::kNone, PolicyKind::kDegGreedy, PolicyKind::kRandom}) {
    SimulationConfig cfg;
    cfg.policy.kind = kind;
    cfg.budget = 10;
    cfg.seed = 12;
    Trajectory a = run_mdp(net, cfg);
    Trajectory b = run_mdp(net, cfg);
    EXPECT_EQ(trajectory_csv(a), trajectory_csv(b));
    EXPECT_EQ(trajectory_summary_json(a), trajectory_summary_json(b));
    int prev_r = 0, sum_new = 0;
    for (const TrajectoryRecord& r : a.records) {
      EXPECT_EQ(r.s + r.i1 + r.i2 + r.r, net.num_nodes());
      EXPECT_GE(r.r, prev_r);
      prev_r = r.r;
      sum_new += r.new_infections;
      EXPECT_LE(r.requested, cfg.budget);
      if (r.timestep <= cfg.intervention_start) EXPECT_EQ(r.requested, 0);
    }
    const TrajectoryRecord& last = a.records.back();
    EXPECT_EQ(sum_new, last.r + last.i1 + last.i2);
    EXPECT_EQ(a.total_infected(), sum_new);
    int by_label = 0;
    for (int c : a.infected_by_label()) by_label += c;
    EXPECT_EQ(by_label, sum_new);
    EXPECT_TRUE(last.i1 + last.i2 == 0 || last.timestep == cfg.horizon);
  }
}

TEST(RunMdpTest, ZeroComplianceMatchesNoIntervention) {
  ContactNetwork net = small_generated(500, 6);
  ContactNetwork deaf = net.with_attributes(
      std::vector<Label>(net.labels().begin(), net.labels().end()),
      std::vector<double>(net.num_nodes(), 0.0));
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SimulationConfig cfg;
    cfg.seed = seed;
    cfg.budget = 20;
    cfg.policy.kind = PolicyKind::kNone;
    Trajectory none = run_mdp(deaf, cfg);
    cfg.policy.kind = PolicyKind::kDegGreedy;
    Trajectory greedy = run_mdp(deaf, cfg);
    EXPECT_EQ(trajectory_csv(none), trajectory_csv(greedy)) << seed;
  }
}

TEST(RunMdpTest, OverBudgetPolicyIsFatal) {
  ContactNetwork net = small_generated(300, 8);
  SimulationConfig cfg;
  cfg.budget = 2;
  cfg.intervention_start = 0;
  Policy greedy_everything = [](const MinExposedInstance& inst, std::uint64_t) {
    QuarantineSet q(inst.num_v1());
    for (int u = 0; u < inst.num_v1(); ++u) q[u] = u;
    return q;
  };
  try {
    run_mdp(net, greedy_everything, cfg);
    FAIL() << "expected a contract violation";
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("timestep"), std::string::npos);
  }
}

TEST(RunMdpTest, FairnessBudgetsReachThePolicy) {
  ContactNetwork net = small_generated(800, 10);
  SimulationConfig cfg;
  cfg.budget = 12;
  cfg.fairness = FairnessPolicy::kC;
  cfg.policy.kind = PolicyKind::kFairDegGreedy;
  int calls = 0;
  Policy spy = [&](const MinExposedInstance& inst, std::uint64_t) {
    ++calls;
    EXPECT_TRUE(inst.label_budgets.has_value());
    int sum = 0;
    for (int b : *inst.label_budgets) sum += b;
    EXPECT_EQ(sum, cfg.budget);
    return fair_deg_greedy(inst, *inst.label_budgets);
  };
  run_mdp(net, spy, cfg);
  EXPECT_GT(calls, 0);
  cfg.fairness = FairnessPolicy::kA;
  Policy pooled = [&](const MinExposedInstance& inst, std::uint64_t) {
    EXPECT_FALSE(inst.label_budgets.has_value());
    return deg_greedy(inst);
  };
  run_mdp(net, pooled, cfg);
}

// One-sided paired t statistic for mean(a - b) > 0.
double paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  double mean = 0;
  for (int i = 0; i < n; ++i) mean += (a[i] - b[i]) / n;
  double var = 0;
  for (int i = 0; i < n; ++i) var += (a[i] - b[i] - mean) * (a[i] - b[i] - mean) / (n - 1);
  if (var == 0) return mean > 0 ? kInfinity : (mean < 0 ? -kInfinity : 0.0);
  return mean / std::sqrt(var / n);
}

TEST(RunMdpTest, MoreBudgetDoesNotHurt) {
  ContactNetwork net = small_generated(1000, 12);
  const std::vector<int> budgets = {0, 5, 15};
  std::vector<std::vector<double>> totals(budgets.size());
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      SimulationConfig cfg;
      cfg.seed = seed;
      cfg.budget = budgets[b];
      totals[b].push_back(trajectory_metrics(run_mdp(net, cfg)).total_infection_pct);
    }
  }
  // t critical value, one-sided 5%, 29 degrees of freedom.
  const double t_crit = 1.699;
  for (std::size_t b = 1; b < budgets.size(); ++b) {
    EXPECT_LT(paired_t(totals[b], totals[b - 1]), t_crit) << budgets[b];
  }
}

TEST(MetricsTest, Examples) {
  Trajectory t;
  t.num_nodes = 50;
  t.records = {{0, 47, 3, 0, 0, 3}, {1, 45, 2, 3, 0, 2}, {2, 44, 1, 5, 0, 1},
               {3, 44, 0, 1, 5, 0}};
  TrajectoryMetrics m = trajectory_metrics(t);
  EXPECT_EQ(m.peak_known_infections, 5);
  EXPECT_EQ(m.peak_timestep, 2);
  EXPECT_DOUBLE_EQ(m.total_infection_pct, 100.0 * 6 / 50);

  // No spread beyond the k seeds.
  ContactNetwork net = with_all_q(testing::figure1_network(), 0.0, 1.0);
  SimulationConfig cfg;
  cfg.initial_infections = 3;
  EXPECT_DOUBLE_EQ(trajectory_metrics(run_mdp(net, cfg)).total_infection_pct, 100.0 * 3 / 9);

  EXPECT_THROW(trajectory_metrics(Trajectory{}), InvalidArgument);
}

TEST(MetricsTest, FirstMaximumWins) {
  Trajectory t;
  t.num_nodes = 10;
  t.records = {{0, 8, 2, 0, 0, 2}, {1, 6, 2, 2, 0, 2}, {2, 6, 0, 2, 2, 0}};
  EXPECT_EQ(trajectory_metrics(t).peak_timestep, 1);
}

TEST(ExportTest, CsvAndJson) {
  ContactNetwork net = small_generated(300, 14);
  SimulationConfig cfg;
  cfg.budget = 5;
  Trajectory t = run_mdp(net, cfg);
  const std::string csv = trajectory_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "timestep,S,I1,I2,R,new_infections,quarantined");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')),
            t.records.size() + 1);
  nlohmann::json j = nlohmann::json::parse(trajectory_summary_json(t));
  EXPECT_EQ(j["n"], 300);
  EXPECT_EQ(j["total_infected"], t.total_infected());
  EXPECT_EQ(j["peak_timestep"], trajectory_metrics(t).peak_timestep);
  EXPECT_TRUE(j["infected_by_label"].contains("g"));
  EXPECT_EQ(j["total_requested"], t.total_requested());
}

}  // namespace
}  // namespace ctrace
