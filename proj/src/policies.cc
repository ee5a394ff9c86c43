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

#include "ctrace/policies.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "ctrace/optim.h"

namespace ctrace {

QuarantineSet top_k(std::span<const double> score, int k) {
  const int n = static_cast<int>(score.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  k = std::clamp(k, 0, n);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  QuarantineSet q(order.begin(), order.begin() + k);
  std::sort(q.begin(), q.end());
  return q;
}

std::vector<double> deg_greedy_weights(const MinExposedInstance& inst) {
  std::vector<double> w(inst.num_v1(), 0.0);
  for (int u = 0; u < inst.num_v1(); ++u) {
    double sum = 0.0;
    for (int e : inst.edges_of_v1(u)) sum += inst.edges[e].q;
    w[u] = inst.c[u] * inst.p[u] * sum;
  }
  return w;
}

QuarantineSet deg_greedy(const MinExposedInstance& inst) {
  return top_k(deg_greedy_weights(inst), inst.budget);
}

QuarantineSet fair_deg_greedy(const MinExposedInstance& inst,
                              const PerLabel<int>& budgets) {
  const std::vector<double> w = deg_greedy_weights(inst);
  QuarantineSet q;
  for (Label l : kAllLabels) {
    std::vector<int> members;
    std::vector<double> score;
    for (int u = 0; u < inst.num_v1(); ++u) {
      if (inst.v1_labels[u] != l) continue;
      members.push_back(u);
      score.push_back(w[u]);
    }
    for (int k : top_k(score, budgets[label_index(l)])) q.push_back(members[k]);
  }
  std::sort(q.begin(), q.end());
  return q;
}

QuarantineSet policy_dep_round(const MinExposedInstance& inst, std::uint64_t seed) {
  if (inst.budget == 0 || inst.num_v1() == 0) return {};
  MilpBuildOptions opts;
  opts.label_budgets = false;
  opts.exposure_caps = false;
  const MinExposedProgram prog = build_milp(inst, opts);
  const FractionalSolution lp = solve_lp(prog, inst);
  if (lp.status != LpStatus::kOptimal) {
    throw NumericalError("LP relaxation returned " + lp_status_name(lp.status));
  }
  return dep_round(lp.x, inst.budget, seed).selected;
}

QuarantineSet fair_dep_round(const MinExposedInstance& inst, std::uint64_t seed) {
  if (!inst.label_budgets) throw InvalidArgument("fair_dep_round needs label budgets");
  if (inst.num_v1() == 0) return {};
  const MinExposedProgram prog = build_milp(inst);
  const FractionalSolution lp = solve_lp(prog, inst);
  if (lp.status == LpStatus::kInfeasible) {
    throw InvalidArgument("exposure caps make the LP infeasible; relax a_l");
  }
  if (lp.status != LpStatus::kOptimal) {
    throw NumericalError("LP relaxation returned " + lp_status_name(lp.status));
  }
  std::vector<int> group(inst.num_v1());
  for (int u = 0; u < inst.num_v1(); ++u) group[u] = label_index(inst.v1_labels[u]);
  const PerLabel<int>& b = *inst.label_budgets;
  Rng rng(seed);
  return dep_round_grouped(lp.x, group, std::span<const int>(b.data(), b.size()), rng)
      .selected;
}

FairnessPolicy parse_fairness_policy(std::string_view name) {
  if (name == "A" || name == "a") return FairnessPolicy::kA;
  if (name == "B" || name == "b") return FairnessPolicy::kB;
  if (name == "C" || name == "c") return FairnessPolicy::kC;
  if (name == "D" || name == "d") return FairnessPolicy::kD;
  throw InvalidArgument("unknown fairness policy '" + std::string(name) + "'");
}

std::string fairness_policy_name(FairnessPolicy policy) {
  switch (policy) {
    case FairnessPolicy::kA: return "A";
    case FairnessPolicy::kB: return "B";
    case FairnessPolicy::kC: return "C";
    case FairnessPolicy::kD: return "D";
  }
  return "?";
}

int BudgetAllocation::total() const {
  if (pooled) return pool;
  return std::accumulate(budgets.begin(), budgets.end(), 0);
}

PerLabel<int> largest_remainder(const PerLabel<double>& shares, int total) {
  PerLabel<int> out{};
  PerLabel<double> rem{};
  int assigned = 0;
  for (int i = 0; i < kNumLabels; ++i) {
    // Guard against shares like 5.9999999999 that should be whole.
    const double s = std::max(0.0, shares[i]);
    const double f = std::floor(s + 1e-9);
    out[i] = static_cast<int>(f);
    rem[i] = std::max(0.0, s - f);
    assigned += out[i];
  }
  while (assigned < total) {
    int best = 0;
    for (int i = 1; i < kNumLabels; ++i) {
      if (rem[i] > rem[best] + 1e-12) best = i;
    }
    ++out[best];
    rem[best] = -1.0;
    ++assigned;
  }
  // Float error can only overshoot by rounding every share up; take back from
  // the smallest remainders, last label first.
  while (assigned > total) {
    int worst = -1;
    for (int i = kNumLabels - 1; i >= 0; --i) {
      if (out[i] > 0 && (worst < 0 || rem[i] < rem[worst])) worst = i;
    }
    --out[worst];
    --assigned;
  }
  return out;
}

BudgetAllocation allocate_budgets(FairnessPolicy policy, const PerLabel<int>& counts,
                                  int budget) {
  if (budget < 0) throw InvalidArgument("budget must be non-negative");
  BudgetAllocation out;
  if (policy == FairnessPolicy::kA) {
    out.pooled = true;
    out.pool = budget;
    return out;
  }
  auto n = [&](Label l) { return static_cast<double>(counts[label_index(l)]); };
  double total = 0.0;
  for (int c : counts) {
    if (c < 0) throw InvalidArgument("label counts must be non-negative");
    total += c;
  }
  PerLabel<double> weight{};
  for (Label l : kAllLabels) weight[label_index(l)] = n(l);
  double denom = total;
  if (policy == FairnessPolicy::kC) {
    weight[label_index(Label::kGolden)] *= 2.0;
    denom = total + n(Label::kGolden);
  } else if (policy == FairnessPolicy::kD) {
    for (Label l : {Label::kPreschool, Label::kSchool, Label::kGolden}) {
      weight[label_index(l)] *= 2.0;
    }
    denom = total + n(Label::kGolden) + n(Label::kPreschool) + n(Label::kSchool);
  }
  if (denom <= 0.0) {
    // No V1 nodes at all: the split is immaterial.
    out.budgets[label_index(Label::kAdult)] = budget;
    return out;
  }
  PerLabel<double> shares{};
  for (int i = 0; i < kNumLabels; ++i) shares[i] = budget * weight[i] / denom;
  out.budgets = largest_remainder(shares, budget);
  return out;
}

bool bernoulli_exp_minus(double gamma, Rng& rng) {
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be non-negative");
  while (gamma > 1.0) {
    if (!bernoulli_exp_minus(1.0, rng)) return false;
    gamma -= 1.0;
  }
  // Series method: the first K with Bernoulli(gamma / K) = 0 is odd with
  // probability exp(-gamma).
  int k = 1;
  while (rng.bernoulli(gamma / k)) ++k;
  return k % 2 == 1;
}

namespace {

// Discrete Laplace with scale t (integer >= 1).
std::int64_t discrete_laplace(std::int64_t t, Rng& rng) {
  while (true) {
    const auto u = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(t)));
    if (!bernoulli_exp_minus(static_cast<double>(u) / t, rng)) continue;
    std::int64_t v = 0;
    while (bernoulli_exp_minus(1.0, rng)) ++v;
    const std::int64_t x = u + t * v;
    const bool negative = rng.bernoulli(0.5);
    if (negative && x == 0) continue;
    return negative ? -x : x;
  }
}

}  // namespace

std::int64_t discrete_gaussian(double sigma2, Rng& rng) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw InvalidArgument("discrete_gaussian needs a positive finite sigma2");
  }
  const double sigma = std::sqrt(sigma2);
  const auto t = static_cast<std::int64_t>(std::floor(sigma)) + 1;
  while (true) {
    const std::int64_t y = discrete_laplace(t, rng);
    const double d = std::fabs(static_cast<double>(y)) - sigma2 / t;
    if (bernoulli_exp_minus(d * d / (2.0 * sigma2), rng)) return y;
  }
}

std::vector<std::int64_t> private_statistic(const MinExposedInstance& inst) {
  std::vector<std::int64_t> s(inst.num_v1());
  for (int u = 0; u < inst.num_v1(); ++u) {
    s[u] = static_cast<std::int64_t>(inst.edges_of_v1(u).size()) * inst.infected_neighbors(u);
  }
  return s;
}

double private_weight(int v2_neighbors, int infected_neighbors, double p) {
  return v2_neighbors * (1.0 - std::pow(1.0 - p, infected_neighbors));
}

double private_weight_approx(int v2_neighbors, int infected_neighbors, double p) {
  return p * v2_neighbors * infected_neighbors;
}

double private_noise_variance(std::int64_t s, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  return static_cast<double>(std::max<std::int64_t>(s, 1)) / (2.0 * epsilon);
}

QuarantineSet private_deg_greedy(const MinExposedInstance& inst,
                                 const PrivacyParams& privacy, std::uint64_t seed) {
  if (!(privacy.p > 0.0 && privacy.p < 1.0)) {
    throw InvalidArgument("privacy p must lie in (0, 1)");
  }
  const std::vector<std::int64_t> s = private_statistic(inst);
  Rng rng(seed);
  std::vector<double> noisy(s.size());
  for (std::size_t u = 0; u < s.size(); ++u) {
    noisy[u] = static_cast<double>(
        s[u] + discrete_gaussian(private_noise_variance(s[u], privacy.epsilon), rng));
  }
  return top_k(noisy, inst.budget);
}

QuarantineSet seg_degree(const MinExposedInstance& inst, std::uint64_t seed,
                         const SegDegreeParams& params) {
  const int n1 = inst.num_v1();
  const int budget = std::min(inst.budget, n1);
  std::vector<double> degree(inst.v1_degree.begin(), inst.v1_degree.end());
  const int high_size =
      static_cast<int>(std::ceil(params.high_fraction * n1 - 1e-9));
  std::vector<int> order(n1);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return degree[a] > degree[b]; });
  const std::vector<int> high(order.begin(), order.begin() + high_size);
  const std::vector<int> low(order.begin() + high_size, order.end());
  const int want_high = static_cast<int>(std::ceil(params.high_share * budget - 1e-9));
  int k_high = std::min(want_high, high_size);
  const int k_low = std::min(budget - k_high, static_cast<int>(low.size()));
  k_high = std::min(high_size, budget - k_low);
  Rng rng(seed);
  QuarantineSet q;
  for (int k : rng.sample(high_size, k_high)) q.push_back(high[k]);
  for (int k : rng.sample(static_cast<int>(low.size()), k_low)) q.push_back(low[k]);
  std::sort(q.begin(), q.end());
  return q;
}

QuarantineSet random_policy(const MinExposedInstance& inst, std::uint64_t seed) {
  Rng rng(seed);
  QuarantineSet q = rng.sample(inst.num_v1(), std::min(inst.budget, inst.num_v1()));
  std::sort(q.begin(), q.end());
  return q;
}

QuarantineSet most_named(const MinExposedInstance& inst) {
  std::vector<double> score(inst.num_v1());
  for (int u = 0; u < inst.num_v1(); ++u) score[u] = inst.infected_neighbors(u);
  return top_k(score, inst.budget);
}

QuarantineSet list_length(const MinExposedInstance& inst) {
  std::vector<double> score(inst.num_v1(), 0.0);
  for (int u = 0; u < inst.num_v1(); ++u) {
    for (int e : inst.infection_edges_of_v1(u)) {
      const int d = inst.infected_degree[inst.infection_edges[e].i];
      if (d > 0) score[u] += 1.0 / d;
    }
  }
  return top_k(score, inst.budget);
}

std::vector<double> eigenvector_centrality(const ContactNetwork& net, double tol,
                                           int max_iterations) {
  const int n = net.num_nodes();
  if (n == 0) return {};
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), y(n);
  for (int it = 0; it < max_iterations; ++it) {
    for (int u = 0; u < n; ++u) {
      double s = x[u];
      for (const Neighbor& nb : net.neighbors(u)) s += x[nb.node];
      y[u] = s;
    }
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    double diff = 0.0;
    for (int u = 0; u < n; ++u) {
      y[u] /= norm;
      diff += (y[u] - x[u]) * (y[u] - x[u]);
    }
    x.swap(y);
    if (std::sqrt(diff) <= tol) return x;
  }
  throw NumericalError("eigenvector centrality did not converge in " +
                       std::to_string(max_iterations) + " iterations");
}

QuarantineSet ec_policy(const MinExposedInstance& inst,
                        std::span<const double> centrality) {
  std::vector<double> score(inst.num_v1());
  for (int u = 0; u < inst.num_v1(); ++u) {
    const NodeId id = inst.v1[u];
    if (id < 0 || id >= static_cast<NodeId>(centrality.size())) {
      throw InvalidArgument("centrality vector does not cover V1");
    }
    score[u] = centrality[id];
  }
  return top_k(score, inst.budget);
}

namespace {

struct KindName {
  PolicyKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {PolicyKind::kDegGreedy, "deg_greedy"},
    {PolicyKind::kDepRound, "dep_round"},
    {PolicyKind::kFairDegGreedy, "fair_deg_greedy"},
    {PolicyKind::kFairDepRound, "fair_dep_round"},
    {PolicyKind::kPrivateDegGreedy, "private_deg_greedy"},
    {PolicyKind::kSegDegree, "seg_degree"},
    {PolicyKind::kRandom, "random"},
    {PolicyKind::kMostNamed, "most_named"},
    {PolicyKind::kListLength, "list_length"},
    {PolicyKind::kEc, "ec"},
    {PolicyKind::kNone, "none"},
};

}  // namespace

PolicyKind parse_policy_kind(std::string_view name) {
  for (const KindName& k : kKindNames) {
    if (name == k.name) return k.kind;
  }
  throw InvalidArgument("unknown policy '" + std::string(name) + "'");
}

std::string policy_kind_name(PolicyKind kind) {
  for (const KindName& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

Policy make_policy(const PolicyConfig& config, const ContactNetwork* net) {
  switch (config.kind) {
    case PolicyKind::kDegGreedy:
      return [](const MinExposedInstance& inst, std::uint64_t) { return deg_greedy(inst); };
    case PolicyKind::kDepRound:
      return policy_dep_round;
    case PolicyKind::kFairDegGreedy:
      return [](const MinExposedInstance& inst, std::uint64_t) {
        return inst.label_budgets ? fair_deg_greedy(inst, *inst.label_budgets)
                                  : deg_greedy(inst);
      };
    case PolicyKind::kFairDepRound:
      return [](const MinExposedInstance& inst, std::uint64_t seed) {
        return inst.label_budgets ? fair_dep_round(inst, seed)
                                  : policy_dep_round(inst, seed);
      };
    case PolicyKind::kPrivateDegGreedy:
      return [privacy = config.privacy](const MinExposedInstance& inst, std::uint64_t seed) {
        return private_deg_greedy(inst, privacy, seed);
      };
    case PolicyKind::kSegDegree:
      return [seg = config.seg](const MinExposedInstance& inst, std::uint64_t seed) {
        return seg_degree(inst, seed, seg);
      };
    case PolicyKind::kRandom:
      return random_policy;
    case PolicyKind::kMostNamed:
      return [](const MinExposedInstance& inst, std::uint64_t) { return most_named(inst); };
    case PolicyKind::kListLength:
      return [](const MinExposedInstance& inst, std::uint64_t) { return list_length(inst); };
    case PolicyKind::kEc: {
      if (net == nullptr) throw InvalidArgument("the ec policy needs the contact network");
      auto centrality = std::make_shared<const std::vector<double>>(eigenvector_centrality(*net));
      return [centrality](const MinExposedInstance& inst, std::uint64_t) {
        return ec_policy(inst, *centrality);
      };
    }
    case PolicyKind::kNone:
      return [](const MinExposedInstance&, std::uint64_t) { return QuarantineSet{}; };
  }
  throw InvalidArgument("unhandled policy kind");
}

}  // namespace ctrace
