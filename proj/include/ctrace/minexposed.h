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

// The single-timestep quarantine problem: given the known infected set I,
// choose at most B nodes of the first ring V1 to quarantine so that the
// expected number of exposed second-ring (V2) nodes is minimal.

#ifndef CTRACE_MINEXPOSED_H_
#define CTRACE_MINEXPOSED_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctrace/common.h"
#include "ctrace/netmodel.h"
#include "ctrace/rng.h"

namespace ctrace {

// Edge of E' between V1 position u and V2 position v.
struct ExposureEdge {
  int u = 0;
  int v = 0;
  double q = 0.0;
  friend bool operator==(const ExposureEdge&, const ExposureEdge&) = default;
};

// Edge between V1 position u and I position i.
struct InfectionEdge {
  int u = 0;
  int i = 0;
  double q = 0.0;
  friend bool operator==(const InfectionEdge&, const InfectionEdge&) = default;
};

// Fields are public so instances can be assembled by hand or deserialized;
// call finalize() afterwards to validate and build the derived indexes.
// Nodes are referred to by their position in infected / v1 / v2.
struct MinExposedInstance {
  std::vector<NodeId> infected;
  std::vector<NodeId> v1;
  std::vector<NodeId> v2;
  std::vector<ExposureEdge> edges;
  std::vector<InfectionEdge> infection_edges;  // may be empty
  std::vector<double> p;                        // per V1
  std::vector<double> c;                        // per V1
  std::vector<Label> v1_labels;
  std::vector<Label> v2_labels;
  std::vector<int> v1_degree;        // degree in the full contact graph
  std::vector<int> infected_degree;  // degree in the full contact graph
  int budget = 0;
  std::optional<PerLabel<int>> label_budgets;
  std::optional<PerLabel<double>> exposure_caps;

  // Derived by finalize().
  std::vector<int> v2_degree;  // D_v
  int max_v2_degree = 0;       // D

  void finalize();

  int num_v1() const { return static_cast<int>(v1.size()); }
  int num_v2() const { return static_cast<int>(v2.size()); }

  // Indexes into `edges`.
  std::span<const int> edges_of_v1(int u) const {
    return {v1_edge_ids_.data() + v1_offsets_[u],
            v1_edge_ids_.data() + v1_offsets_[u + 1]};
  }
  std::span<const int> edges_of_v2(int v) const {
    return {v2_edge_ids_.data() + v2_offsets_[v],
            v2_edge_ids_.data() + v2_offsets_[v + 1]};
  }
  // Indexes into `infection_edges`.
  std::span<const int> infection_edges_of_v1(int u) const {
    return {inf_edge_ids_.data() + inf_offsets_[u],
            inf_edge_ids_.data() + inf_offsets_[u + 1]};
  }

  // Number of infected neighbors of V1 position u.
  int infected_neighbors(int u) const {
    return inf_offsets_[u + 1] - inf_offsets_[u];
  }

 private:
  std::vector<int> v1_offsets_, v1_edge_ids_;
  std::vector<int> v2_offsets_, v2_edge_ids_;
  std::vector<int> inf_offsets_, inf_edge_ids_;
};

// Sorted V1 positions.
using QuarantineSet = std::vector<int>;

std::vector<NodeId> to_node_ids(const MinExposedInstance& inst,
                                const QuarantineSet& q);

// p_u = 1 - prod over infected neighbors v of (1 - q_uv).
double infection_prob(const ContactNetwork& net, std::span<const NodeId> infected,
                      NodeId u);

MinExposedInstance build_instance(
    const ContactNetwork& net, std::span<const NodeId> infected, int budget,
    std::optional<PerLabel<int>> label_budgets = std::nullopt,
    std::optional<PerLabel<double>> exposure_caps = std::nullopt);

// Throws ContractViolation when Q exceeds B or any label budget, or names an
// invalid / repeated V1 position.
void check_feasible(const MinExposedInstance& inst, const QuarantineSet& q);

// Expected number of exposed V2 nodes, in closed form under independent
// transmissions and compliance.
double objective_exact(const MinExposedInstance& inst, const QuarantineSet& q);

// Union-bound surrogate: sum over E' of (1 - c_u x_u) p_u q_uv.
double union_bound_value(const MinExposedInstance& inst, const QuarantineSet& q);

// Objective of the integer program at the indicator vector of Q:
// sum over V2 of max over E' neighbors of (1 - c_u x_u) p_u q_uv.
double milp_objective_value(const MinExposedInstance& inst,
                            const QuarantineSet& q);

// Expected exposures in V2 nodes carrying label l (union-bound form, the
// quantity the exposure caps constrain).
PerLabel<double> label_exposure_bound(const MinExposedInstance& inst,
                                      const QuarantineSet& q);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

// Draws one scenario and returns the number of exposed V2 nodes. `asked`
// flags V1 positions in Q.
using ExposureSampler = std::function<int(const MinExposedInstance& inst,
                                          const std::vector<char>& asked,
                                          Rng& rng)>;

// Independent scenario: infection of V1 via its infection edges (or p_u when
// the instance carries none), compliance, then per-edge transmission.
int sample_independent_exposures(const MinExposedInstance& inst,
                                 const std::vector<char>& asked, Rng& rng);

McEstimate objective_mc(const MinExposedInstance& inst, const QuarantineSet& q,
                        int trials, std::uint64_t seed,
                        const ExposureSampler& sampler = sample_independent_exposures);

struct SimpleGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

struct CliqueReduction {
  MinExposedInstance instance;
  double threshold = 0.0;  // |E| - C(k, 2)
};

// One infected hub wired to every graph node (V1) and one V2 node per graph
// edge wired to its endpoints; all q = c = 1, budget k.
CliqueReduction clique_to_minexposed(const SimpleGraph& graph, int k);

// True iff the reduced instance reaches the threshold. Brute force; n <= 14.
bool clique_decision(const SimpleGraph& graph, int k);

std::string instance_to_json(const MinExposedInstance& inst);
MinExposedInstance instance_from_json(const std::string& json);

}  // namespace ctrace

#endif  // CTRACE_MINEXPOSED_H_
