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

// The quarantine program, its LP relaxation, branch and bound and the
// enumeration oracle.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "ctrace/optim.h"
#include "ctrace/policies.h"

namespace ctrace {

MinExposedProgram build_milp(const MinExposedInstance& inst,
                             const MilpBuildOptions& options) {
  if (inst.label_budgets && options.label_budgets) {
    int sum = 0;
    for (int b : *inst.label_budgets) sum += b;
    if (sum != inst.budget) {
      throw InvalidArgument("label budgets sum to " + std::to_string(sum) +
                            ", not to the budget " + std::to_string(inst.budget));
    }
  }
  MinExposedProgram prog;
  LinearProgram& lp = prog.lp;
  for (int u = 0; u < inst.num_v1(); ++u) {
    prog.x_vars.push_back(lp.add_variable("x" + std::to_string(inst.v1[u]), 0.0, 1.0,
                                          0.0, /*integer=*/true));
  }
  for (int v = 0; v < inst.num_v2(); ++v) {
    prog.z_vars.push_back(
        lp.add_variable("z" + std::to_string(inst.v2[v]), 0.0, 1.0, 1.0));
  }
  std::vector<std::pair<int, double>> all_x;
  for (int x : prog.x_vars) all_x.emplace_back(x, 1.0);
  prog.budget_row = lp.add_row("budget", all_x, RowSense::kLessEqual, inst.budget);
  // z_v >= p q (1 - c x_u)  <=>  z_v + p q c x_u >= p q
  for (const ExposureEdge& e : inst.edges) {
    const double pq = inst.p[e.u] * e.q;
    std::vector<std::pair<int, double>> terms = {{prog.z_vars[e.v], 1.0}};
    if (pq * inst.c[e.u] != 0.0) terms.emplace_back(prog.x_vars[e.u], pq * inst.c[e.u]);
    prog.coverage_rows.push_back(
        lp.add_row("cov_" + std::to_string(inst.v1[e.u]) + "_" +
                       std::to_string(inst.v2[e.v]),
                   std::move(terms), RowSense::kGreaterEqual, pq));
  }
  if (inst.label_budgets && options.label_budgets) {
    for (Label l : kAllLabels) {
      std::vector<std::pair<int, double>> terms;
      for (int u = 0; u < inst.num_v1(); ++u) {
        if (inst.v1_labels[u] == l) terms.emplace_back(prog.x_vars[u], 1.0);
      }
      if (terms.empty()) continue;
      prog.label_budget_rows.push_back(
          lp.add_row(std::string("budget_") + label_code(l), std::move(terms),
                     RowSense::kLessEqual, (*inst.label_budgets)[label_index(l)]));
    }
  }
  if (inst.exposure_caps && options.exposure_caps) {
    for (Label l : kAllLabels) {
      const double cap = (*inst.exposure_caps)[label_index(l)];
      if (!std::isfinite(cap)) continue;
      std::vector<double> coef(inst.num_v1(), 0.0);
      double constant = 0.0;
      bool any = false;
      for (const ExposureEdge& e : inst.edges) {
        if (inst.v2_labels[e.v] != l) continue;
        any = true;
        const double pq = inst.p[e.u] * e.q;
        constant += pq;
        coef[e.u] -= pq * inst.c[e.u];
      }
      if (!any) continue;
      std::vector<std::pair<int, double>> terms;
      for (int u = 0; u < inst.num_v1(); ++u) {
        if (coef[u] != 0.0) terms.emplace_back(prog.x_vars[u], coef[u]);
      }
      prog.cap_rows.push_back(lp.add_row(std::string("cap_") + label_code(l),
                                         std::move(terms), RowSense::kLessEqual,
                                         cap - constant));
    }
  }
  return prog;
}

LpBasis crash_basis(const MinExposedProgram& program, const MinExposedInstance& inst,
                    std::span<const double> x_lower) {
  const LinearProgram& lp = program.lp;
  const int n = lp.num_variables();
  LpBasis basis;
  basis.status.assign(n + lp.num_rows(), BasisStatus::kBasic);
  for (int j = 0; j < n; ++j) basis.status[j] = BasisStatus::kAtLower;
  std::vector<int> best_row(inst.num_v2(), -1);
  std::vector<double> best_val(inst.num_v2(), -1.0);
  for (int k = 0; k < static_cast<int>(inst.edges.size()); ++k) {
    const ExposureEdge& e = inst.edges[k];
    const double xu = x_lower.empty() ? 0.0 : x_lower[e.u];
    const double val = inst.p[e.u] * e.q * (1.0 - inst.c[e.u] * xu);
    if (val > best_val[e.v]) {
      best_val[e.v] = val;
      best_row[e.v] = program.coverage_rows[k];
    }
  }
  for (int v = 0; v < inst.num_v2(); ++v) {
    if (best_row[v] < 0) continue;
    basis.status[program.z_vars[v]] = BasisStatus::kBasic;
    basis.status[n + best_row[v]] = BasisStatus::kAtUpper;
  }
  return basis;
}

namespace {

FractionalSolution to_fractional(const MinExposedProgram& program,
                                 const LpSolution& sol) {
  FractionalSolution out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.max_residual = sol.max_residual;
  out.objective = sol.objective;
  for (int j : program.x_vars) {
    const double x = std::clamp(sol.values[j], 0.0, 1.0);
    out.x.push_back(x);
    out.y.push_back(1.0 - x);
  }
  for (int j : program.z_vars) out.z.push_back(sol.values[j]);
  return out;
}

constexpr double kResidualLimit = 1e-7;

void check_residual(const LpSolution& sol) {
  if (sol.status == LpStatus::kOptimal && sol.max_residual > kResidualLimit) {
    throw NumericalError("LP solution violates its constraints by " +
                         std::to_string(sol.max_residual));
  }
}

}  // namespace

FractionalSolution solve_lp(const MinExposedProgram& program,
                            const MinExposedInstance& inst,
                            const SimplexOptions& options) {
  const LpBasis start = crash_basis(program, inst, {});
  const LpSolution sol = solve_lp(program.lp, options, {}, {}, &start);
  check_residual(sol);
  if (sol.status == LpStatus::kUnbounded) {
    throw NumericalError("LP reported unbounded on a bounded program");
  }
  return to_fractional(program, sol);
}

namespace {

// Value of the integer program at the 0/1 vector x, or infinity if x breaks a
// row of the program.
double integer_value(const MinExposedProgram& program, const MinExposedInstance& inst,
                     const std::vector<double>& x) {
  std::vector<double> values(program.lp.num_variables(), 0.0);
  for (int u = 0; u < inst.num_v1(); ++u) values[program.x_vars[u]] = x[u];
  double total = 0.0;
  for (int v = 0; v < inst.num_v2(); ++v) {
    double best = 0.0;
    for (int e : inst.edges_of_v2(v)) {
      const ExposureEdge& edge = inst.edges[e];
      best = std::max(best, inst.p[edge.u] * edge.q * (1.0 - inst.c[edge.u] * x[edge.u]));
    }
    values[program.z_vars[v]] = best;
    total += best;
  }
  for (const LpRow& row : program.lp.rows()) {
    double act = 0.0;
    for (const auto& [j, a] : row.terms) act += a * values[j];
    const double slack = 1e-9 * (1.0 + std::fabs(row.rhs));
    if (row.sense == RowSense::kLessEqual && act > row.rhs + slack) return kInfinity;
    if (row.sense == RowSense::kGreaterEqual && act < row.rhs - slack) return kInfinity;
    if (row.sense == RowSense::kEqual && std::fabs(act - row.rhs) > slack) return kInfinity;
  }
  return total;
}

QuarantineSet support(const std::vector<double>& x) {
  QuarantineSet q;
  for (int u = 0; u < static_cast<int>(x.size()); ++u) {
    if (x[u] > 0.5) q.push_back(u);
  }
  return q;
}

struct Node {
  std::vector<double> lower, upper;
  LpSolution lp;
};

}  // namespace

MilpResult solve_milp_bb(const MinExposedProgram& program, const MinExposedInstance& inst,
                         const BranchAndBoundOptions& options) {
  const auto start_time = std::chrono::steady_clock::now();
  const int n1 = inst.num_v1();
  MilpResult result;

  if (inst.budget == 0) {
    std::vector<double> zero(n1, 0.0);
    result.objective = integer_value(program, inst, zero);
    result.infeasible = !std::isfinite(result.objective);
    result.proven_optimal = true;
    result.bound = result.objective;
    return result;
  }

  std::vector<double> incumbent_x;
  auto offer = [&](const std::vector<double>& x) {
    const double value = integer_value(program, inst, x);
    if (value < result.objective) {
      result.objective = value;
      incumbent_x = x;
    }
  };
  {
    const bool fair = inst.label_budgets && !program.label_budget_rows.empty();
    const QuarantineSet seed_q =
        fair ? fair_deg_greedy(inst, *inst.label_budgets) : deg_greedy(inst);
    std::vector<double> x(n1, 0.0);
    for (int u : seed_q) x[u] = 1.0;
    offer(x);
  }

  const int nvars = program.lp.num_variables();
  auto solve_node = [&](Node& node, const LpBasis* warm) {
    node.lp = solve_lp(program.lp, options.simplex, node.lower, node.upper, warm);
    check_residual(node.lp);
    ++result.nodes;
  };

  std::vector<Node> stack;
  {
    Node root;
    root.lower.assign(nvars, 0.0);
    root.upper.assign(nvars, 1.0);
    const LpBasis basis = crash_basis(program, inst, {});
    solve_node(root, &basis);
    if (root.lp.status != LpStatus::kOptimal) {
      result.infeasible = root.lp.status == LpStatus::kInfeasible;
      if (!result.infeasible) throw NumericalError("root LP did not solve");
      return result;
    }
    stack.push_back(std::move(root));
  }

  double open_bound = kInfinity;  // smallest bound among abandoned nodes
  const double prune_tol = 1e-9;
  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    const double bound = node.lp.objective;
    if (bound >= result.objective - prune_tol) continue;

    const double elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start_time)
                               .count();
    if (result.nodes >= options.node_limit || elapsed > options.time_limit_seconds) {
      result.node_limit_hit = result.nodes >= options.node_limit;
      result.time_limit_hit = !result.node_limit_hit;
      open_bound = std::min(open_bound, bound);
      for (const Node& rest : stack) open_bound = std::min(open_bound, rest.lp.objective);
      stack.clear();
      break;
    }

    int branch = -1;
    double best_frac = options.integrality_tol;
    std::vector<double> x(n1);
    for (int u = 0; u < n1; ++u) {
      const double v = node.lp.values[program.x_vars[u]];
      const double frac = std::min(v, 1.0 - v);
      x[u] = v;
      if (frac > best_frac + 1e-15) {
        best_frac = frac;
        branch = u;
      }
    }
    if (branch < 0) {
      for (double& v : x) v = v > 0.5 ? 1.0 : 0.0;
      offer(x);
      continue;
    }

    const int j = program.x_vars[branch];
    Node down, up;
    down.lower = node.lower;
    down.upper = node.upper;
    down.upper[j] = 0.0;
    up.lower = node.lower;
    up.upper = node.upper;
    up.lower[j] = 1.0;
    solve_node(down, &node.lp.basis);
    solve_node(up, &node.lp.basis);
    Node* children[2] = {&down, &up};
    // Push the worse child first so the better one is explored next.
    auto key = [](const Node* c) {
      return c->lp.status == LpStatus::kOptimal ? c->lp.objective : kInfinity;
    };
    if (key(children[0]) < key(children[1])) std::swap(children[0], children[1]);
    for (Node* child : children) {
      if (child->lp.status == LpStatus::kOptimal) {
        stack.push_back(std::move(*child));
      } else if (child->lp.status != LpStatus::kInfeasible) {
        throw NumericalError("branch-and-bound node LP returned " +
                             lp_status_name(child->lp.status));
      }
    }
  }

  if (incumbent_x.empty()) {
    result.infeasible = !(result.node_limit_hit || result.time_limit_hit);
    result.bound = open_bound;
    return result;
  }
  result.q = support(incumbent_x);
  result.proven_optimal = !(result.node_limit_hit || result.time_limit_hit);
  result.bound = result.proven_optimal ? result.objective
                                       : std::min(open_bound, result.objective);
  return result;
}

namespace {

long long binomial_capped(int n, int k, long long cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > static_cast<long double>(cap) * 4) return cap + 1;
  }
  return static_cast<long long>(std::llround(r));
}

}  // namespace

BruteForceResult brute_force_opt(const MinExposedInstance& inst,
                                 BruteForceObjective objective, long long cap) {
  const int n1 = inst.num_v1();
  int k = std::min(inst.budget, n1);
  if (inst.label_budgets) {
    PerLabel<int> present{};
    for (Label l : inst.v1_labels) ++present[label_index(l)];
    int reach = 0;
    for (int i = 0; i < kNumLabels; ++i) reach += std::min((*inst.label_budgets)[i], present[i]);
    k = std::min(k, reach);
  }
  if (binomial_capped(n1, k, cap) > cap) {
    throw InvalidArgument("brute force over C(" + std::to_string(n1) + ", " +
                          std::to_string(k) + ") subsets exceeds the cap");
  }
  auto value_of = [&](const QuarantineSet& q) {
    return objective == BruteForceObjective::kExact ? objective_exact(inst, q)
                                                    : milp_objective_value(inst, q);
  };
  auto caps_ok = [&](const QuarantineSet& q) {
    if (!inst.exposure_caps) return true;
    const PerLabel<double> load = label_exposure_bound(inst, q);
    for (int i = 0; i < kNumLabels; ++i) {
      if (load[i] > (*inst.exposure_caps)[i] + 1e-9) return false;
    }
    return true;
  };

  BruteForceResult best;
  PerLabel<int> used{};
  QuarantineSet q;
  // Preorder walk over increasing sequences visits subsets in lexicographic
  // order, so keeping only strict improvements keeps the smallest tie.
  auto visit = [&](auto&& self, int next) -> void {
    if (caps_ok(q)) {
      ++best.evaluated;
      const double v = value_of(q);
      if (v < best.value - 1e-12) {
        best.value = v;
        best.q = q;
      }
    }
    if (static_cast<int>(q.size()) == k) return;
    for (int u = next; u < n1; ++u) {
      const int l = label_index(inst.v1_labels[u]);
      if (inst.label_budgets && used[l] >= (*inst.label_budgets)[l]) continue;
      ++used[l];
      q.push_back(u);
      self(self, u + 1);
      q.pop_back();
      --used[l];
    }
  };
  visit(visit, 0);
  return best;
}

}  // namespace ctrace
