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

#include <algorithm>
#include <cmath>
#include <string>

#include "ctrace/optim.h"

namespace ctrace {
namespace {

constexpr double kSnap = 1e-7;

double snap(double v) {
  if (v < kSnap) return 0.0;
  if (v > 1.0 - kSnap) return 1.0;
  return v;
}

bool fractional(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

RoundedSolution dep_round(std::span<const double> x, int budget, Rng& rng) {
  if (budget < 0) throw InvalidArgument("budget must be non-negative");
  double sum = 0.0;
  std::vector<double> w;
  w.reserve(x.size() + 1);
  for (double v : x) {
    if (!(v >= -kSnap && v <= 1.0 + kSnap)) {
      throw InvalidArgument("dep_round input outside [0, 1]: " + std::to_string(v));
    }
    w.push_back(snap(v));
    sum += v;
  }
  if (sum > budget + 1e-6) {
    throw InvalidArgument("dep_round input sums to " + std::to_string(sum) +
                          ", above the budget " + std::to_string(budget));
  }
  const std::size_t real = w.size();
  // A dummy coordinate tops the total up to an integer; it never maps to a
  // real node.
  const double gap = std::ceil(sum - kSnap) - sum;
  if (gap > kSnap) w.push_back(snap(gap));

  std::size_t i = 0;
  while (true) {
    while (i < w.size() && !fractional(w[i])) ++i;
    std::size_t j = i + 1;
    while (j < w.size() && !fractional(w[j])) ++j;
    if (i >= w.size()) break;
    if (j >= w.size()) {
      // Only float drift can leave a lone fractional coordinate.
      w[i] = rng.bernoulli(w[i]) ? 1.0 : 0.0;
      break;
    }
    const double alpha = std::min(1.0 - w[i], w[j]);
    const double beta = std::min(w[i], 1.0 - w[j]);
    if (rng.uniform() * (alpha + beta) < beta) {
      w[i] += alpha;
      w[j] -= alpha;
    } else {
      w[i] -= beta;
      w[j] += beta;
    }
    w[i] = snap(w[i]);
    w[j] = snap(w[j]);
  }

  RoundedSolution out;
  out.values.resize(real);
  for (std::size_t k = 0; k < real; ++k) {
    out.values[k] = w[k] > 0.5 ? 1 : 0;
    if (out.values[k]) out.selected.push_back(static_cast<int>(k));
  }
  if (static_cast<int>(out.selected.size()) > budget) {
    throw ContractViolation("dependent rounding selected " +
                            std::to_string(out.selected.size()) +
                            " coordinates with budget " + std::to_string(budget));
  }
  return out;
}

RoundedSolution dep_round(std::span<const double> x, int budget, std::uint64_t seed) {
  Rng rng(seed);
  return dep_round(x, budget, rng);
}

RoundedSolution dep_round_grouped(std::span<const double> x, std::span<const int> group,
                                  std::span<const int> group_budgets, Rng& rng) {
  if (x.size() != group.size()) throw InvalidArgument("one group per coordinate required");
  const int ngroups = static_cast<int>(group_budgets.size());
  std::vector<std::vector<int>> members(ngroups);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (group[k] < 0 || group[k] >= ngroups) throw InvalidArgument("group index out of range");
    members[group[k]].push_back(static_cast<int>(k));
  }
  RoundedSolution out;
  out.values.assign(x.size(), 0);
  for (int g = 0; g < ngroups; ++g) {
    std::vector<double> sub;
    double sum = 0.0;
    for (int k : members[g]) {
      sub.push_back(x[k]);
      sum += x[k];
    }
    if (sum > group_budgets[g] + 1e-6) {
      throw InvalidArgument("group " + std::to_string(g) + " sums to " +
                            std::to_string(sum) + ", above its budget " +
                            std::to_string(group_budgets[g]));
    }
    const RoundedSolution part = dep_round(sub, group_budgets[g], rng);
    for (int s : part.selected) out.values[members[g][s]] = 1;
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (out.values[k]) out.selected.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace ctrace
