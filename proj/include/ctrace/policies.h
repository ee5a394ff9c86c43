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

// Quarantine selection policies. Every policy maps an instance to a sorted
// set of V1 positions of size at most the budget (and at most B_l per label
// when the instance carries label budgets).

#ifndef CTRACE_POLICIES_H_
#define CTRACE_POLICIES_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctrace/common.h"
#include "ctrace/minexposed.h"
#include "ctrace/netmodel.h"
#include "ctrace/rng.h"

namespace ctrace {

// w_u = c_u p_u sum_v q_uv over the E' edges of u.
std::vector<double> deg_greedy_weights(const MinExposedInstance& inst);

// Top-B positions by weight, ties by ascending node id.
QuarantineSet deg_greedy(const MinExposedInstance& inst);

// Top-B_l positions of each label.
QuarantineSet fair_deg_greedy(const MinExposedInstance& inst,
                              const PerLabel<int>& budgets);

// LP relaxation followed by dependent rounding. Label budgets and caps on the
// instance are ignored.
QuarantineSet policy_dep_round(const MinExposedInstance& inst, std::uint64_t seed);

// LP with the per-label budget rows (and cap rows when the instance carries
// caps), rounded per label. Throws InvalidArgument if the caps make the LP
// infeasible or the instance has no label budgets.
QuarantineSet fair_dep_round(const MinExposedInstance& inst, std::uint64_t seed);

enum class FairnessPolicy { kA, kB, kC, kD };

FairnessPolicy parse_fairness_policy(std::string_view name);
std::string fairness_policy_name(FairnessPolicy policy);

struct BudgetAllocation {
  bool pooled = false;  // policy A: one budget shared by all labels
  int pool = 0;
  PerLabel<int> budgets{};

  int total() const;
};

// Splits B across labels from the V1 label counts. Real-valued shares are
// rounded by largest remainder, ties in label order p, s, a, o, g.
BudgetAllocation allocate_budgets(FairnessPolicy policy, const PerLabel<int>& counts,
                                  int budget);

// Rounds non-negative shares summing to `total` to integers with the same sum.
PerLabel<int> largest_remainder(const PerLabel<double>& shares, int total);

// Exact sampler for the discrete Gaussian on the integers with scale sigma2
// (rejection from a discrete Laplace).
std::int64_t discrete_gaussian(double sigma2, Rng& rng);

// Bernoulli(exp(-gamma)) for gamma >= 0 without evaluating exp.
bool bernoulli_exp_minus(double gamma, Rng& rng);

struct PrivacyParams {
  double epsilon = 1.0;
  double p = 0.05;  // uniform transmission probability in the weight formula
};

// s_u = |N(u) & V2| * |N(u) & I| per V1 position.
std::vector<std::int64_t> private_statistic(const MinExposedInstance& inst);

// |N(u) & V2| * (1 - (1 - p)^|N(u) & I|) and its first-order expansion.
double private_weight(int v2_neighbors, int infected_neighbors, double p);
double private_weight_approx(int v2_neighbors, int infected_neighbors, double p);

double private_noise_variance(std::int64_t s, double epsilon);

QuarantineSet private_deg_greedy(const MinExposedInstance& inst,
                                 const PrivacyParams& privacy, std::uint64_t seed);

struct SegDegreeParams {
  double high_fraction = 0.25;  // share of V1 classified high degree
  double high_share = 0.75;     // share of the budget drawn from the high set
};

QuarantineSet seg_degree(const MinExposedInstance& inst, std::uint64_t seed,
                         const SegDegreeParams& params = {});

QuarantineSet random_policy(const MinExposedInstance& inst, std::uint64_t seed);

// Top-B by number of infected neighbors.
QuarantineSet most_named(const MinExposedInstance& inst);

// Top-B by sum over infected neighbors v of 1 / deg(v).
QuarantineSet list_length(const MinExposedInstance& inst);

// Power iteration on A + I, L2-normalized. Throws NumericalError when the
// iterate moves by more than `tol` after max_iterations.
std::vector<double> eigenvector_centrality(const ContactNetwork& net,
                                           double tol = 1e-10,
                                           int max_iterations = 10000);

// Top-B by centrality of the underlying node.
QuarantineSet ec_policy(const MinExposedInstance& inst,
                        std::span<const double> centrality);

// Positions sorted by descending score, ties by ascending position; the
// first min(k, n) are returned in ascending order.
QuarantineSet top_k(std::span<const double> score, int k);

enum class PolicyKind {
  kDegGreedy,
  kDepRound,
  kFairDegGreedy,
  kFairDepRound,
  kPrivateDegGreedy,
  kSegDegree,
  kRandom,
  kMostNamed,
  kListLength,
  kEc,
  kNone,
};

PolicyKind parse_policy_kind(std::string_view name);
std::string policy_kind_name(PolicyKind kind);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kDegGreedy;
  PrivacyParams privacy;
  SegDegreeParams seg;
};

// Uniform interface used by the simulator and the CLI.
using Policy =
    std::function<QuarantineSet(const MinExposedInstance& inst, std::uint64_t seed)>;

// `net` is required by the EC baseline (centrality is computed once here).
Policy make_policy(const PolicyConfig& config, const ContactNetwork* net = nullptr);

}  // namespace ctrace

#endif  // CTRACE_POLICIES_H_
