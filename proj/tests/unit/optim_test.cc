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

#include "ctrace/optim.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "ctrace/policies.h"
#include "support/fixtures.h"

namespace ctrace {
namespace {

using testing::figure1_instance;
using testing::lagrangian_bound;
using testing::random_instance;

TEST(LinearProgramTest, RejectsBadDeclarations) {
  LinearProgram lp;
  EXPECT_THROW(lp.add_variable("x", 1.0, 0.0, 0.0), InvalidArgument);
  const int x = lp.add_variable("x", 0.0, 1.0, 1.0);
  EXPECT_THROW(lp.add_row("r", {{x + 1, 1.0}}, RowSense::kLessEqual, 1.0), InvalidArgument);
}

TEST(LinearProgramTest, LpFormatDump) {
  LinearProgram lp;
  const int x = lp.add_variable("x", 0.0, 4.0, -3.0);
  const int y = lp.add_variable("y", 0.0, kInfinity, -5.0, true);
  lp.add_row("c1", {{x, 3.0}, {y, 2.0}}, RowSense::kLessEqual, 18.0);
  lp.add_row("c2", {{y, 1.0}}, RowSense::kGreaterEqual, 1.0);
  std::ostringstream out;
  lp.write_lp_format(out);
  EXPECT_EQ(out.str(),
            "\\ generated by ctrace\n"
            "Minimize\n obj: - 3 x - 5 y\n"
            "Subject To\n c1: 3 x + 2 y <= 18\n c2: y >= 1\n"
            "Bounds\n 0 <= x <= 4\n 0 <= y <= +inf\n"
            "Generals\n y\n"
            "End\n");
}

TEST(SimplexTest, TextbookProgram) {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18.
  LinearProgram lp;
  const int x = lp.add_variable("x", 0.0, kInfinity, -3.0);
  const int y = lp.add_variable("y", 0.0, kInfinity, -5.0);
  lp.add_row("a", {{x, 1.0}}, RowSense::kLessEqual, 4.0);
  lp.add_row("b", {{y, 2.0}}, RowSense::kLessEqual, 12.0);
  lp.add_row("c", {{x, 3.0}, {y, 2.0}}, RowSense::kLessEqual, 18.0);
  const LpSolution sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, -36.0, 1e-9);
  EXPECT_NEAR(sol.values[x], 2.0, 1e-9);
  EXPECT_NEAR(sol.values[y], 6.0, 1e-9);
  EXPECT_NEAR(lagrangian_bound(lp, sol.row_duals), -36.0, 1e-9);
}

TEST(SimplexTest, EqualityGreaterAndFreeVariables) {
  // min x + 2y + 0 f, x + y = 3, x - f >= 1, f free, y >= 0, x in [0, 2].
  LinearProgram lp;
  const int x = lp.add_variable("x", 0.0, 2.0, 1.0);
  const int y = lp.add_variable("y", 0.0, kInfinity, 2.0);
  const int f = lp.add_variable("f", -kInfinity, kInfinity, 0.0);
  lp.add_row("e", {{x, 1.0}, {y, 1.0}}, RowSense::kEqual, 3.0);
  lp.add_row("g", {{x, 1.0}, {f, -1.0}}, RowSense::kGreaterEqual, 1.0);
  const LpSolution sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 4.0, 1e-9);
  EXPECT_NEAR(sol.values[x], 2.0, 1e-9);
  EXPECT_LE(sol.max_residual, 1e-9);
}

TEST(SimplexTest, DetectsInfeasibility) {
  LinearProgram lp;
  const int x = lp.add_variable("x", 0.0, 1.0, 1.0);
  lp.add_row("r", {{x, 1.0}}, RowSense::kGreaterEqual, 2.0);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::kInfeasible);
}

TEST(SimplexTest, DetectsUnboundedness) {
  LinearProgram lp;
  const int x = lp.add_variable("x", 0.0, kInfinity, -1.0);
  const int y = lp.add_variable("y", 0.0, kInfinity, 0.0);
  lp.add_row("r", {{x, 1.0}, {y, -1.0}}, RowSense::kLessEqual, 1.0);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::kUnbounded);
}

TEST(SimplexTest, BoundOverridesAndEmptyProgram) {
  LinearProgram lp;
  const int x = lp.add_variable("x", 0.0, 1.0, -1.0);
  const std::vector<double> lo = {0.0}, hi = {0.25};
  const LpSolution sol = solve_lp(lp, {}, lo, hi);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_EQ(sol.values[x], 0.25);
  EXPECT_THROW(solve_lp(lp, {}, std::vector<double>{0.0, 0.0}, {}), InvalidArgument);
}

TEST(SimplexTest, HighlyDegenerateAssignment) {
  // Assignment polytope: every vertex is degenerate.
  const int n = 8;
  LinearProgram lp;
  Rng rng(3);
  std::vector<int> var(n * n);
  for (int i = 0; i < n * n; ++i) {
    var[i] = lp.add_variable("x" + std::to_string(i), 0.0, kInfinity,
                             static_cast<double>(rng.uniform_int(4)));
  }
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row, col;
    for (int j = 0; j < n; ++j) {
      row.emplace_back(var[i * n + j], 1.0);
      col.emplace_back(var[j * n + i], 1.0);
    }
    lp.add_row("r" + std::to_string(i), row, RowSense::kEqual, 1.0);
    lp.add_row("c" + std::to_string(i), col, RowSense::kEqual, 1.0);
  }
  const LpSolution sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(lagrangian_bound(lp, sol.row_duals), sol.objective, 1e-9);
}

// Random dense-ish programs with a known feasible point; optimality is
// certified by the Lagrangian bound at the returned duals.
TEST(SimplexTest, RandomProgramsCertifiedByDuals) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(20));
    const int m = 1 + static_cast<int>(rng.uniform_int(20));
    LinearProgram lp;
    std::vector<double> point(n);
    for (int j = 0; j < n; ++j) {
      const double lo = rng.bernoulli(0.2) ? -kInfinity : -rng.uniform(0, 3);
      const double hi = rng.uniform(0, 3);
      lp.add_variable("x" + std::to_string(j), lo, hi, rng.uniform(-1, 1));
      point[j] = rng.uniform(std::isfinite(lo) ? lo : -3.0, hi);
    }
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> terms;
      double act = 0.0;
      for (int j = 0; j < n; ++j) {
        if (!rng.bernoulli(0.5)) continue;
        const double a = rng.uniform(-2, 2);
        terms.emplace_back(j, a);
        act += a * point[j];
      }
      const int kind = static_cast<int>(rng.uniform_int(3));
      const RowSense sense = kind == 0   ? RowSense::kLessEqual
                             : kind == 1 ? RowSense::kGreaterEqual
                                         : RowSense::kEqual;
      const double rhs = kind == 0 ? act + rng.uniform() : kind == 1 ? act - rng.uniform() : act;
      lp.add_row("r" + std::to_string(i), terms, sense, rhs);
    }
    const LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::kUnbounded) continue;  // free columns can be
    ASSERT_EQ(sol.status, LpStatus::kOptimal) << "trial " << t;
    EXPECT_LE(sol.max_residual, 1e-9) << "trial " << t;
    EXPECT_NEAR(lagrangian_bound(lp, sol.row_duals), sol.objective,
                1e-8 * (1 + std::fabs(sol.objective)))
        << "trial " << t;
  }
}

TEST(BuildMilpTest, FigureOneCounts) {
  const MinExposedInstance inst = figure1_instance();
  const MinExposedProgram prog = build_milp(inst);
  EXPECT_EQ(prog.x_vars.size(), 3u);
  EXPECT_EQ(prog.z_vars.size(), 4u);
  EXPECT_EQ(prog.coverage_rows.size(), 7u);
  EXPECT_EQ(prog.lp.num_rows(), 8);
  EXPECT_TRUE(prog.label_budget_rows.empty());
}

TEST(BuildMilpTest, LabelBudgetRows) {
  MinExposedInstance inst = figure1_instance();
  inst.v1_labels = {Label::kSchool, Label::kAdult, Label::kAdult};
  inst.label_budgets = PerLabel<int>{0, 1, 1, 0, 0};
  inst.finalize();
  EXPECT_EQ(build_milp(inst).label_budget_rows.size(), 2u);
  inst.label_budgets = PerLabel<int>{0, 1, 0, 0, 0};
  EXPECT_THROW(build_milp(inst), InvalidArgument);
}

TEST(BuildMilpTest, EmptySecondRing) {
  const ContactNetwork net = ContactNetwork::from_edges(2, {{0, 1, 1.0, 0.5}});
  const MinExposedInstance inst = build_instance(net, std::vector<NodeId>{0}, 1);
  const MinExposedProgram prog = build_milp(inst);
  const FractionalSolution sol = solve_lp(prog, inst);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_EQ(sol.objective, 0.0);
}

TEST(SolveLpTest, FigureOneIsIntegral) {
  const MinExposedInstance inst = figure1_instance();
  const FractionalSolution sol = solve_lp(build_milp(inst), inst);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 1.0, 1e-9);
  EXPECT_NEAR(sol.x[0], 0.0, 1e-9);
  EXPECT_NEAR(sol.x[1], 1.0, 1e-9);
  EXPECT_NEAR(sol.x[2], 1.0, 1e-9);
  for (int u = 0; u < 3; ++u) EXPECT_DOUBLE_EQ(sol.x[u] + sol.y[u], 1.0);
}

TEST(SolveLpTest, FullBudgetReachesZero) {
  Rng rng(5);
  MinExposedInstance inst = random_instance(rng);
  std::fill(inst.c.begin(), inst.c.end(), 1.0);
  inst.budget = inst.num_v1();
  const FractionalSolution sol = solve_lp(build_milp(inst), inst);
  EXPECT_NEAR(sol.objective, 0.0, 1e-9);
}

TEST(SolveLpTest, ZeroBudgetIsSumOfMaxima) {
  Rng rng(6);
  MinExposedInstance inst = random_instance(rng);
  inst.budget = 0;
  double expected = 0.0;
  for (int v = 0; v < inst.num_v2(); ++v) {
    double best = 0.0;
    for (const ExposureEdge& e : inst.edges) {
      if (e.v == v) best = std::max(best, inst.p[e.u] * e.q);
    }
    expected += best;
  }
  const FractionalSolution sol = solve_lp(build_milp(inst), inst);
  EXPECT_NEAR(sol.objective, expected, 1e-9);
}

TEST(SolveLpTest, RandomInstancesFeasibleAndCertified) {
  Rng rng(7);
  testing::RandomInstanceOptions opts;
  opts.max_v1 = 40;
  opts.max_v2 = 80;
  opts.max_budget = 10;
  for (int t = 0; t < 100; ++t) {
    const MinExposedInstance inst = random_instance(rng, opts);
    const MinExposedProgram prog = build_milp(inst);
    const LpBasis start = crash_basis(prog, inst, {});
    const LpSolution raw = solve_lp(prog.lp, {}, {}, {}, &start);
    ASSERT_EQ(raw.status, LpStatus::kOptimal);
    EXPECT_LE(raw.max_residual, 1e-9);
    EXPECT_NEAR(lagrangian_bound(prog.lp, raw.row_duals), raw.objective, 1e-8);
    const FractionalSolution sol = solve_lp(prog, inst);
    double sum = 0.0;
    for (double x : sol.x) sum += x;
    EXPECT_LE(sum, inst.budget + 1e-9);
    for (const ExposureEdge& e : inst.edges) {
      EXPECT_GE(sol.z[e.v], inst.p[e.u] * e.q * (1 - inst.c[e.u] * sol.x[e.u]) - 1e-9);
    }
  }
}

TEST(BruteForceTest, FigureOne) {
  const BruteForceResult r = brute_force_opt(figure1_instance());
  EXPECT_EQ(r.q, (QuarantineSet{1, 2}));
  EXPECT_EQ(r.value, 1.0);
}

TEST(BruteForceTest, SingleNodeQuarantinedOnlyIfUseful) {
  MinExposedInstance inst;
  inst.infected = {0};
  inst.v1 = {1};
  inst.v2 = {2};
  inst.p = {0.5};
  inst.c = {1.0};
  inst.edges = {{0, 0, 0.5}};
  inst.budget = 1;
  inst.finalize();
  EXPECT_EQ(brute_force_opt(inst).q, (QuarantineSet{0}));
  inst.edges.clear();
  inst.v2.clear();
  inst.v2_labels.clear();
  inst.finalize();
  EXPECT_EQ(brute_force_opt(inst).q, QuarantineSet{});
}

TEST(BruteForceTest, CapEnforced) {
  MinExposedInstance inst;
  inst.infected = {0};
  for (int u = 0; u < 60; ++u) {
    inst.v1.push_back(1 + u);
    inst.p.push_back(0.5);
    inst.c.push_back(0.5);
  }
  inst.budget = 10;
  inst.finalize();
  EXPECT_THROW(brute_force_opt(inst), InvalidArgument);
}

TEST(BranchAndBoundTest, FigureOne) {
  const MinExposedInstance inst = figure1_instance();
  const MilpResult r = solve_milp_bb(build_milp(inst), inst);
  EXPECT_TRUE(r.proven_optimal);
  EXPECT_EQ(r.q, (QuarantineSet{1, 2}));
  EXPECT_NEAR(r.objective, 1.0, 1e-12);
}

TEST(BranchAndBoundTest, ZeroBudgetReturnsEmpty) {
  Rng rng(8);
  MinExposedInstance inst = random_instance(rng);
  inst.budget = 0;
  const MilpResult r = solve_milp_bb(build_milp(inst), inst);
  EXPECT_TRUE(r.q.empty());
  EXPECT_EQ(r.nodes, 0);
  EXPECT_NEAR(r.objective, milp_objective_value(inst, {}), 1e-12);
}

TEST(BranchAndBoundTest, MatchesEnumerationOfTheIntegerProgram) {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const MinExposedInstance inst = random_instance(rng);
    const MinExposedProgram prog = build_milp(inst);
    const MilpResult r = solve_milp_bb(prog, inst);
    ASSERT_TRUE(r.proven_optimal);
    const BruteForceResult b = brute_force_opt(inst, BruteForceObjective::kMilp);
    EXPECT_NEAR(r.objective, b.value, 1e-6) << "trial " << t;
    EXPECT_NEAR(milp_objective_value(inst, r.q), r.objective, 1e-9);
    // Sandwich.
    const FractionalSolution lp = solve_lp(prog, inst);
    EXPECT_LE(lp.objective, r.objective + 1e-9);
    EXPECT_LE(r.objective, objective_exact(inst, r.q) + 1e-9);
  }
}

TEST(BranchAndBoundTest, LabelBudgetsRespected) {
  Rng rng(10);
  testing::RandomInstanceOptions opts;
  opts.labels = true;
  for (int t = 0; t < 40; ++t) {
    MinExposedInstance inst = random_instance(rng, opts);
    PerLabel<int> b{};
    for (int k = 0; k < inst.budget; ++k) ++b[rng.uniform_int(3)];
    inst.label_budgets = b;
    inst.finalize();
    const MilpResult r = solve_milp_bb(build_milp(inst), inst);
    ASSERT_TRUE(r.proven_optimal);
    EXPECT_NO_THROW(check_feasible(inst, r.q));
    EXPECT_NEAR(r.objective, brute_force_opt(inst, BruteForceObjective::kMilp).value, 1e-6);
  }
}

TEST(BranchAndBoundTest, NodeLimitFlagged) {
  Rng rng(17);
  testing::RandomInstanceOptions opts;
  opts.max_v1 = 30;
  opts.max_v2 = 60;
  opts.max_budget = 8;
  for (int t = 0; t < 20; ++t) {
    const MinExposedInstance inst = random_instance(rng, opts);
    BranchAndBoundOptions bb;
    bb.node_limit = 1;
    const MilpResult r = solve_milp_bb(build_milp(inst), inst, bb);
    if (!r.proven_optimal) {
      EXPECT_TRUE(r.node_limit_hit);
      EXPECT_LE(r.bound, r.objective + 1e-12);
    }
  }
}

TEST(DepRoundTest, RejectsBadInput) {
  EXPECT_THROW(dep_round(std::vector<double>{1.2}, 2, 1), InvalidArgument);
  EXPECT_THROW(dep_round(std::vector<double>{0.8, 0.8}, 1, 1), InvalidArgument);
}

TEST(DepRoundTest, IntegralInputUnchanged) {
  const RoundedSolution r = dep_round(std::vector<double>{1, 0, 1}, 2, 3);
  EXPECT_EQ(r.values, (std::vector<int>{1, 0, 1}));
  EXPECT_EQ(r.selected, (QuarantineSet{0, 2}));
}

TEST(DepRoundTest, HalfHalfPicksExactlyOne) {
  Rng rng(1);
  int first = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const RoundedSolution r = dep_round(std::vector<double>{0.5, 0.5}, 1, rng);
    ASSERT_EQ(r.selected.size(), 1u);
    first += r.values[0];
  }
  EXPECT_NEAR(first / double(trials), 0.5, 3 * std::sqrt(0.25 / trials));
}

TEST(DepRoundTest, MarginalsAndExactCardinality) {
  const std::vector<double> x = {0.3, 0.3, 0.4};
  Rng rng(2);
  const int trials = 100000;
  std::vector<int> hits(3, 0);
  for (int t = 0; t < trials; ++t) {
    const RoundedSolution r = dep_round(x, 1, rng);
    ASSERT_EQ(r.selected.size(), 1u);
    for (int i = 0; i < 3; ++i) hits[i] += r.values[i];
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(hits[i] / double(trials), x[i], 3 * std::sqrt(x[i] * (1 - x[i]) / trials));
  }
}

TEST(DepRoundTest, FractionalTotalUsesSlack) {
  const std::vector<double> x = {0.25, 0.5, 0.6};
  Rng rng(3);
  const int trials = 50000;
  std::vector<int> hits(3, 0);
  for (int t = 0; t < trials; ++t) {
    const RoundedSolution r = dep_round(x, 2, rng);
    ASSERT_LE(r.selected.size(), 2u);
    for (int i = 0; i < 3; ++i) hits[i] += r.values[i];
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(hits[i] / double(trials), x[i], 3 * std::sqrt(x[i] * (1 - x[i]) / trials));
  }
}

TEST(DepRoundTest, SameSeedSameResult) {
  const std::vector<double> x = {0.2, 0.7, 0.4, 0.7};
  EXPECT_EQ(dep_round(x, 2, 42).values, dep_round(x, 2, 42).values);
}

TEST(DepRoundGroupedTest, OnePickPerGroup) {
  const std::vector<double> x = {0.5, 0.5, 0.5, 0.5};
  const std::vector<int> group = {0, 0, 1, 1};
  const std::vector<int> budgets = {1, 1};
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const RoundedSolution r = dep_round_grouped(x, group, budgets, rng);
    ASSERT_EQ(r.values[0] + r.values[1], 1);
    ASSERT_EQ(r.values[2] + r.values[3], 1);
  }
}

TEST(DepRoundGroupedTest, SingleGroupMatchesPlainRounding) {
  const std::vector<double> x = {0.3, 0.9, 0.2, 0.6};
  const std::vector<int> group(4, 0);
  const std::vector<int> budgets = {2};
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng a(s), b(s);
    EXPECT_EQ(dep_round_grouped(x, group, budgets, a).values, dep_round(x, 2, b).values);
  }
}

TEST(DepRoundGroupedTest, RejectsOverfullGroup) {
  const std::vector<double> x = {0.9, 0.9};
  const std::vector<int> group = {0, 0};
  const std::vector<int> budgets = {1};
  Rng rng(5);
  EXPECT_THROW(dep_round_grouped(x, group, budgets, rng), InvalidArgument);
}

TEST(DepRoundGroupedTest, GroupedMarginals) {
  const std::vector<double> x = {0.3, 0.45, 0.25, 0.8, 0.7};
  const std::vector<int> group = {0, 0, 0, 1, 1};
  const std::vector<int> budgets = {1, 2};
  Rng rng(6);
  const int trials = 100000;
  std::vector<int> hits(x.size(), 0);
  for (int t = 0; t < trials; ++t) {
    const RoundedSolution r = dep_round_grouped(x, group, budgets, rng);
    for (std::size_t i = 0; i < x.size(); ++i) hits[i] += r.values[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(hits[i] / double(trials), x[i], 3 * std::sqrt(x[i] * (1 - x[i]) / trials));
  }
}

}  // namespace
}  // namespace ctrace
