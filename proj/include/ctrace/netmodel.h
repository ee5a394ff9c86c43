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

// Contact networks: representation, synthetic generation, CSV IO,
// demographic assignment and duration-to-transmission calibration.

#ifndef CTRACE_NETMODEL_H_
#define CTRACE_NETMODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctrace/common.h"

namespace ctrace {

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double duration = 0.0;  // minutes, > 0
  double q = 0.0;         // transmission probability
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId node;
  EdgeId edge;
};

// Undirected contact graph with dense node ids 0..n-1. Immutable once built;
// the with_* methods return modified copies.
class ContactNetwork {
 public:
  ContactNetwork() = default;

  // Validates every invariant (no self loops, no duplicates, probabilities in
  // [0, 1], one label per node). Throws InvalidArgument on violation.
  ContactNetwork(std::vector<std::string> ids, std::vector<Edge> edges,
                 std::vector<Label> labels, std::vector<double> compliance);

  // Nodes named "0".."n-1", all adults with base compliance.
  static ContactNetwork from_edges(int n, std::vector<Edge> edges);

  int num_nodes() const { return static_cast<int>(ids_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }

  // Sorted by neighbor id.
  std::span<const Neighbor> neighbors(NodeId u) const {
    return {adjacency_.data() + offsets_[u],
            adjacency_.data() + offsets_[u + 1]};
  }
  int degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
  int max_degree() const;
  double mean_degree() const;

  // EdgeId of (u, v) or -1.
  EdgeId find_edge(NodeId u, NodeId v) const;

  Label label(NodeId u) const { return labels_[u]; }
  double compliance(NodeId u) const { return compliance_[u]; }
  const std::string& external_id(NodeId u) const { return ids_[u]; }
  std::span<const std::string> external_ids() const { return ids_; }
  std::span<const Label> labels() const { return labels_; }
  std::span<const double> compliances() const { return compliance_; }

  double mean_q() const;

  // Provenance recorded in the JSON sidecar.
  std::optional<std::uint64_t> seed() const { return seed_; }
  // lambda such that q = 1 - exp(-lambda * duration) on every edge, when the
  // q values came from calibrate_transmissions.
  std::optional<double> transmission_rate() const { return rate_; }

  ContactNetwork with_transmissions(std::vector<double> q) const;
  ContactNetwork with_attributes(std::vector<Label> labels,
                                 std::vector<double> compliance) const;
  ContactNetwork with_seed(std::optional<std::uint64_t> seed) const;
  ContactNetwork with_transmission_rate(std::optional<double> rate) const;

  friend bool operator==(const ContactNetwork& a, const ContactNetwork& b);

 private:
  void build_adjacency();

  std::vector<std::string> ids_;
  std::vector<Edge> edges_;
  std::vector<Label> labels_;
  std::vector<double> compliance_;
  std::vector<int> offsets_{0};
  std::vector<Neighbor> adjacency_;
  std::optional<std::uint64_t> seed_;
  std::optional<double> rate_;
};

enum class GeneratorKind { kConfiguration, kGeometric, kSmallWorld };

GeneratorKind parse_generator_kind(std::string_view name);
std::string generator_kind_name(GeneratorKind kind);

struct GenSpec {
  int nodes = 1000;
  double mean_degree = 17.0;
  GeneratorKind kind = GeneratorKind::kConfiguration;
  // Log-normal spread of the configuration-model degree sequence.
  double degree_sigma = 0.8;
  // Watts-Strogatz rewiring probability.
  double rewire_probability = 0.1;
  // Log-normal contact durations.
  double duration_median = 15.0;
  double duration_sigma = 1.0;
  // Mean transmission probability after calibration.
  double target_mean_q = 0.05;
  std::uint64_t seed = 1;
};

// Deterministic given spec.seed. Transmissions are calibrated to
// spec.target_mean_q; labels are all adults until assign_demographics runs.
ContactNetwork generate_network(const GenSpec& spec);

// Adds uniformly random new edges until |E'| = round((1 + fraction) |E|),
// saturating at the complete graph. New edges copy (duration, q) from a
// uniformly chosen existing edge.
ContactNetwork augment_network(const ContactNetwork& net,
                               double degree_increase_fraction,
                               std::uint64_t seed);

struct Calibration {
  ContactNetwork network;
  double rate = 0.0;  // lambda in q = 1 - exp(-lambda * duration)
};

// Bisection for lambda on [1e-12, 10] so that mean q equals the target.
Calibration calibrate_transmissions(const ContactNetwork& net,
                                    double target_mean_q);

ContactNetwork assign_demographics(const ContactNetwork& net,
                                   const PerLabel<double>& fractions,
                                   const PerLabel<double>& base_compliance,
                                   double noise_halfwidth,
                                   std::uint64_t seed);

// Multiplies every compliance rate by factor (clamped to [0, 1]).
ContactNetwork scale_compliance(const ContactNetwork& net, double factor);

struct Rings {
  std::vector<NodeId> infected;  // sorted, deduplicated
  std::vector<NodeId> v1;        // N(I) - I, sorted
  std::vector<NodeId> v2;        // N(V1) - I - V1, sorted
};

Rings compute_rings(const ContactNetwork& net, std::span<const NodeId> infected);

// CSV IO. Edge file header: u,v,duration_minutes. Attribute file header:
// node,label,compliance (compliance column optional). Node ids are compacted
// in order of first appearance, attribute file first. Parse errors carry the
// 1-based data row (the header is row 0).
ContactNetwork load_network(const std::string& edge_path,
                            const std::string& attr_path);

// Writes <prefix>.edges.csv, <prefix>.nodes.csv and <prefix>.json.
void save_network(const ContactNetwork& net, const std::string& prefix);

// Reads the three files written by save_network. q values are restored from
// the sidecar rate when present, otherwise by calibrating to its mean_q.
ContactNetwork load_saved_network(const std::string& prefix);

}  // namespace ctrace

#endif  // CTRACE_NETMODEL_H_
