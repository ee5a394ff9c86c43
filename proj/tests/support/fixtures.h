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

// Shared fixtures for the unit and acceptance tests.

#ifndef CTRACE_TESTS_SUPPORT_FIXTURES_H_
#define CTRACE_TESTS_SUPPORT_FIXTURES_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctrace/minexposed.h"
#include "ctrace/netmodel.h"
#include "ctrace/optim.h"
#include "ctrace/rng.h"

namespace ctrace::testing {

// The nine-node example: u1..u9 are ids 0..8, I = {u1, u2}. Every q and c
// is 1.
inline ContactNetwork figure1_network() {
  const std::vector<std::pair<int, int>> pairs = {
      {1, 3}, {1, 4}, {2, 4}, {2, 5}, {3, 6}, {4, 6},
      {5, 6}, {4, 7}, {4, 8}, {5, 8}, {5, 9}};
  std::vector<Edge> edges;
  for (auto [a, b] : pairs) edges.push_back({a - 1, b - 1, 10.0, 1.0});
  ContactNetwork net = ContactNetwork::from_edges(9, edges);
  return net.with_attributes(std::vector<Label>(9, Label::kAdult),
                             std::vector<double>(9, 1.0));
}

inline std::vector<NodeId> figure1_infected() { return {0, 1}; }

inline MinExposedInstance figure1_instance(int budget = 2) {
  return build_instance(figure1_network(), figure1_infected(), budget);
}

struct RandomInstanceOptions {
  int max_v1 = 15;
  int max_v2 = 25;
  int max_budget = 5;
  int max_v2_degree = 4;
  bool labels = false;  // random labels over p, s, a
};

// Hand-assembled instance with random p, c, q. Every V2 node has at least
// one E' edge.
inline MinExposedInstance random_instance(Rng& rng, const RandomInstanceOptions& o = {}) {
  MinExposedInstance inst;
  const int n1 = 1 + static_cast<int>(rng.uniform_int(o.max_v1));
  const int n2 = 1 + static_cast<int>(rng.uniform_int(o.max_v2));
  inst.infected = {0};
  for (int u = 0; u < n1; ++u) inst.v1.push_back(1 + u);
  for (int v = 0; v < n2; ++v) inst.v2.push_back(1 + n1 + v);
  for (int u = 0; u < n1; ++u) {
    inst.p.push_back(rng.uniform());
    inst.c.push_back(rng.uniform());
    inst.v1_degree.push_back(1);
    inst.v1_labels.push_back(o.labels ? static_cast<Label>(rng.uniform_int(3))
                                      : Label::kAdult);
  }
  for (int v = 0; v < n2; ++v) {
    const int d = 1 + static_cast<int>(rng.uniform_int(std::min(o.max_v2_degree, n1)));
    for (int u : rng.sample(n1, d)) {
      inst.edges.push_back({u, v, rng.uniform()});
      ++inst.v1_degree[u];
    }
    inst.v2_labels.push_back(o.labels ? static_cast<Label>(rng.uniform_int(3))
                                      : Label::kAdult);
  }
  inst.infected_degree = {n1};
  inst.budget = static_cast<int>(rng.uniform_int(o.max_budget + 1));
  inst.finalize();
  return inst;
}

// Lagrangian lower bound of a minimization program at multipliers y. Signs
// that would invalidate the bound are zeroed first, so the value is a valid
// bound for any input.
inline double lagrangian_bound(const LinearProgram& lp, const std::vector<double>& duals) {
  std::vector<double> y(lp.num_rows(), 0.0);
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double v = i < static_cast<int>(duals.size()) ? duals[i] : 0.0;
    switch (lp.row(i).sense) {
      case RowSense::kLessEqual: y[i] = std::min(v, 0.0); break;
      case RowSense::kGreaterEqual: y[i] = std::max(v, 0.0); break;
      case RowSense::kEqual: y[i] = v; break;
    }
  }
  std::vector<double> reduced(lp.num_variables());
  for (int j = 0; j < lp.num_variables(); ++j) reduced[j] = lp.variable(j).cost;
  double value = lp.objective_constant();
  for (int i = 0; i < lp.num_rows(); ++i) {
    value += y[i] * lp.row(i).rhs;
    for (const auto& [j, a] : lp.row(i).terms) reduced[j] -= y[i] * a;
  }
  for (int j = 0; j < lp.num_variables(); ++j) {
    const LpVariable& v = lp.variable(j);
    const double x = reduced[j] >= 0 ? v.lower : v.upper;
    if (std::isinf(x)) {
      // Round-off leaves tiny reduced costs on unbounded columns.
      if (std::fabs(reduced[j]) > 1e-9) return -kInfinity;
      continue;
    }
    value += reduced[j] * x;
  }
  return value;
}

}  // namespace ctrace::testing

#endif  // CTRACE_TESTS_SUPPORT_FIXTURES_H_
