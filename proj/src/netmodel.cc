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

#include "ctrace/netmodel.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "ctrace/rng.h"
#include "json.hpp"
#include "text_util.h"

namespace ctrace {
namespace {

std::uint64_t pair_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

std::vector<std::string> default_ids(int n) {
  std::vector<std::string> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = std::to_string(i);
  return ids;
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument(std::string(what) + " " + text::format_double(p) +
                          " outside [0, 1]");
  }
}

double sample_duration(Rng& rng, double median, double sigma) {
  return median * std::exp(sigma * rng.normal());
}

// Canonical (u < v), lexicographically sorted.
void canonicalize(std::vector<Edge>& edges) {
  for (Edge& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.u, a.v) < std::pair(b.u, b.v);
  });
}

std::vector<std::pair<NodeId, NodeId>> configuration_pairs(const GenSpec& spec,
                                                           Rng& rng) {
  const int n = spec.nodes;
  const double mu =
      std::log(spec.mean_degree) - 0.5 * spec.degree_sigma * spec.degree_sigma;
  std::vector<int> degree(n);
  long long total = 0;
  for (int i = 0; i < n; ++i) {
    const double d = std::exp(mu + spec.degree_sigma * rng.normal());
    degree[i] = std::clamp(static_cast<int>(std::lround(d)), 1, n - 1);
    total += degree[i];
  }
  if (total % 2 != 0) {
    const int i = static_cast<int>(rng.uniform_int(n));
    degree[i] += degree[i] < n - 1 ? 1 : -1;
  }
  std::vector<NodeId> stubs;
  stubs.reserve(total + 1);
  for (int i = 0; i < n; ++i) {
    stubs.insert(stubs.end(), degree[i], i);
  }
  rng.shuffle(stubs);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  pairs.reserve(stubs.size() / 2);
  std::unordered_set<std::uint64_t> seen;
  // Erased configuration model: self loops and repeated pairs are dropped.
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    const NodeId a = stubs[i];
    const NodeId b = stubs[i + 1];
    if (a == b || !seen.insert(pair_key(a, b)).second) continue;
    pairs.emplace_back(a, b);
  }
  return pairs;
}

std::vector<std::pair<NodeId, NodeId>> geometric_pairs(const GenSpec& spec,
                                                       Rng& rng) {
  // Random geometric graph on the unit torus; expected degree is
  // (n - 1) * pi * r^2.
  const int n = spec.nodes;
  const double r = std::min(
      0.5, std::sqrt(spec.mean_degree / (std::numbers::pi * (n - 1))));
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = rng.uniform();
    ys[i] = rng.uniform();
  }
  const int cells = std::max(1, static_cast<int>(1.0 / r));
  std::vector<std::vector<NodeId>> grid(static_cast<std::size_t>(cells) * cells);
  auto cell_of = [&](double c) {
    return std::min(cells - 1, static_cast<int>(c * cells));
  };
  for (int i = 0; i < n; ++i) {
    grid[cell_of(xs[i]) * cells + cell_of(ys[i])].push_back(i);
  }
  auto torus = [](double d) {
    d = std::fabs(d);
    return std::min(d, 1.0 - d);
  };
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (int i = 0; i < n; ++i) {
    const int cx = cell_of(xs[i]);
    const int cy = cell_of(ys[i]);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        const int gx = ((cx + dx) % cells + cells) % cells;
        const int gy = ((cy + dy) % cells + cells) % cells;
        for (NodeId j : grid[gx * cells + gy]) {
          if (j <= i) continue;
          const double ddx = torus(xs[i] - xs[j]);
          const double ddy = torus(ys[i] - ys[j]);
          if (ddx * ddx + ddy * ddy <= r * r &&
              seen.insert(pair_key(i, j)).second) {
            pairs.emplace_back(i, j);
          }
        }
      }
    }
  }
  return pairs;
}

std::vector<std::pair<NodeId, NodeId>> small_world_pairs(const GenSpec& spec,
                                                         Rng& rng) {
  // Watts-Strogatz ring with k neighbors per side, then uniformly random
  // extra edges to cover an odd or fractional target degree.
  const int n = spec.nodes;
  const int k = std::min(static_cast<int>(spec.mean_degree / 2.0), (n - 1) / 2);
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (int j = 1; j <= k; ++j) {
    for (int i = 0; i < n; ++i) {
      NodeId a = i;
      NodeId b = (i + j) % n;
      if (rng.bernoulli(spec.rewire_probability)) {
        for (int attempt = 0; attempt < 32; ++attempt) {
          const NodeId c = static_cast<NodeId>(rng.uniform_int(n));
          if (c != a && !seen.count(pair_key(a, c))) {
            b = c;
            break;
          }
        }
      }
      if (a != b && seen.insert(pair_key(a, b)).second) pairs.emplace_back(a, b);
    }
  }
  const long long max_edges = static_cast<long long>(n) * (n - 1) / 2;
  const long long target = std::min<long long>(
      max_edges, std::llround(spec.mean_degree * n / 2.0));
  while (static_cast<long long>(pairs.size()) < target) {
    const NodeId a = static_cast<NodeId>(rng.uniform_int(n));
    const NodeId b = static_cast<NodeId>(rng.uniform_int(n));
    if (a != b && seen.insert(pair_key(a, b)).second) pairs.emplace_back(a, b);
  }
  return pairs;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << content;
  if (!out) throw InvalidArgument("write failed for " + path);
}

}  // namespace

ContactNetwork::ContactNetwork(std::vector<std::string> ids,
                               std::vector<Edge> edges,
                               std::vector<Label> labels,
                               std::vector<double> compliance)
    : ids_(std::move(ids)),
      edges_(std::move(edges)),
      labels_(std::move(labels)),
      compliance_(std::move(compliance)) {
  const int n = num_nodes();
  if (static_cast<int>(labels_.size()) != n ||
      static_cast<int>(compliance_.size()) != n) {
    throw InvalidArgument("attribute arrays do not match the node count");
  }
  for (double c : compliance_) check_probability(c, "compliance");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges_.size() * 2);
  for (const Edge& e : edges_) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
      throw InvalidArgument("edge endpoint out of range");
    }
    if (e.u == e.v) {
      throw InvalidArgument("self-loop on node " + ids_[e.u]);
    }
    if (!seen.insert(pair_key(e.u, e.v)).second) {
      throw InvalidArgument("duplicate edge " + ids_[e.u] + "," + ids_[e.v]);
    }
    if (!(e.duration > 0.0) || !std::isfinite(e.duration)) {
      throw InvalidArgument("non-positive contact duration");
    }
    check_probability(e.q, "transmission probability");
  }
  build_adjacency();
}

ContactNetwork ContactNetwork::from_edges(int n, std::vector<Edge> edges) {
  return ContactNetwork(default_ids(n), std::move(edges),
                        std::vector<Label>(n, Label::kAdult),
                        std::vector<double>(
                            n, kBaseCompliance[label_index(Label::kAdult)]));
}

void ContactNetwork::build_adjacency() {
  const int n = num_nodes();
  offsets_.assign(n + 1, 0);
  for (const Edge& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  for (int i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
  adjacency_.resize(offsets_[n]);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (EdgeId e = 0; e < num_edges(); ++e) {
    adjacency_[fill[edges_[e].u]++] = {edges_[e].v, e};
    adjacency_[fill[edges_[e].v]++] = {edges_[e].u, e};
  }
  for (int i = 0; i < n; ++i) {
    std::sort(adjacency_.begin() + offsets_[i], adjacency_.begin() + offsets_[i + 1],
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
}

int ContactNetwork::max_degree() const {
  int best = 0;
  for (int u = 0; u < num_nodes(); ++u) best = std::max(best, degree(u));
  return best;
}

double ContactNetwork::mean_degree() const {
  return num_nodes() == 0 ? 0.0 : 2.0 * num_edges() / num_nodes();
}

EdgeId ContactNetwork::find_edge(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  const auto it = std::lower_bound(
      nb.begin(), nb.end(), v,
      [](const Neighbor& a, NodeId target) { return a.node < target; });
  return it != nb.end() && it->node == v ? it->edge : -1;
}

double ContactNetwork::mean_q() const {
  if (edges_.empty()) return 0.0;
  double sum = 0.0;
  for (const Edge& e : edges_) sum += e.q;
  return sum / edges_.size();
}

ContactNetwork ContactNetwork::with_transmissions(std::vector<double> q) const {
  if (q.size() != edges_.size()) {
    throw InvalidArgument("one transmission probability per edge expected");
  }
  for (double p : q) check_probability(p, "transmission probability");
  ContactNetwork out = *this;
  for (std::size_t e = 0; e < q.size(); ++e) out.edges_[e].q = q[e];
  out.rate_.reset();
  return out;
}

ContactNetwork ContactNetwork::with_attributes(
    std::vector<Label> labels, std::vector<double> compliance) const {
  return ContactNetwork(ids_, edges_, std::move(labels), std::move(compliance))
      .with_seed(seed_)
      .with_transmission_rate(rate_);
}

ContactNetwork ContactNetwork::with_seed(std::optional<std::uint64_t> seed) const {
  ContactNetwork out = *this;
  out.seed_ = seed;
  return out;
}

ContactNetwork ContactNetwork::with_transmission_rate(
    std::optional<double> rate) const {
  ContactNetwork out = *this;
  out.rate_ = rate;
  return out;
}

bool operator==(const ContactNetwork& a, const ContactNetwork& b) {
  return a.ids_ == b.ids_ && a.edges_ == b.edges_ && a.labels_ == b.labels_ &&
         a.compliance_ == b.compliance_ && a.seed_ == b.seed_ &&
         a.rate_ == b.rate_;
}

GeneratorKind parse_generator_kind(std::string_view name) {
  if (name == "configuration") return GeneratorKind::kConfiguration;
  if (name == "geometric") return GeneratorKind::kGeometric;
  if (name == "small-world" || name == "small_world") {
    return GeneratorKind::kSmallWorld;
  }
  throw InvalidArgument("unknown generator '" + std::string(name) + "'");
}

std::string generator_kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kConfiguration: return "configuration";
    case GeneratorKind::kGeometric: return "geometric";
    case GeneratorKind::kSmallWorld: return "small-world";
  }
  return "configuration";
}

ContactNetwork generate_network(const GenSpec& spec) {
  if (spec.nodes < 2) throw InvalidArgument("node count must be at least 2");
  if (!(spec.mean_degree >= 1.0)) {
    throw InvalidArgument("mean degree must be at least 1");
  }
  if (spec.mean_degree > spec.nodes - 1) {
    throw InvalidArgument("infeasible degree sequence: mean degree exceeds n-1");
  }
  Rng rng(derive_seed(spec.seed, {0x6e6574}));
  std::vector<std::pair<NodeId, NodeId>> pairs;
  switch (spec.kind) {
    case GeneratorKind::kConfiguration:
      pairs = configuration_pairs(spec, rng);
      break;
    case GeneratorKind::kGeometric:
      pairs = geometric_pairs(spec, rng);
      break;
    case GeneratorKind::kSmallWorld:
      pairs = small_world_pairs(spec, rng);
      break;
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) edges.push_back({a, b, 0.0, 0.0});
  canonicalize(edges);
  // Durations are drawn after canonical ordering so they do not depend on
  // generator internals.
  Rng duration_rng(derive_seed(spec.seed, {0x647572}));
  for (Edge& e : edges) {
    e.duration = sample_duration(duration_rng, spec.duration_median,
                                 spec.duration_sigma);
  }
  ContactNetwork net = ContactNetwork::from_edges(spec.nodes, std::move(edges));
  if (net.num_edges() > 0) {
    net = calibrate_transmissions(net, spec.target_mean_q).network;
  }
  return net.with_seed(spec.seed);
}

ContactNetwork augment_network(const ContactNetwork& net,
                               double degree_increase_fraction,
                               std::uint64_t seed) {
  if (!(degree_increase_fraction >= 0.0 && degree_increase_fraction <= 1.0)) {
    throw InvalidArgument("degree increase fraction must lie in [0, 1]");
  }
  const long long n = net.num_nodes();
  const long long m = net.num_edges();
  const long long possible = n * (n - 1) / 2;
  if (degree_increase_fraction == 0.0) return net;
  if (m >= possible) throw InvalidArgument("graph already complete");
  if (m == 0) throw InvalidArgument("cannot augment a graph without edges");
  const long long target = std::min(
      possible, std::llround((1.0 + degree_increase_fraction) * m));
  Rng rng(derive_seed(seed, {0x617567}));
  std::vector<Edge> edges(net.edges().begin(), net.edges().end());
  std::unordered_set<std::uint64_t> present;
  present.reserve(static_cast<std::size_t>(target) * 2);
  for (const Edge& e : edges) present.insert(pair_key(e.u, e.v));
  auto add = [&](NodeId a, NodeId b) {
    if (a > b) std::swap(a, b);
    const Edge& donor = net.edge(static_cast<EdgeId>(rng.uniform_int(m)));
    edges.push_back({a, b, donor.duration, donor.q});
  };
  if (2 * target > possible) {
    // Dense regime: enumerate the complement and sample from it.
    std::vector<std::pair<NodeId, NodeId>> missing;
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = a + 1; b < n; ++b) {
        if (!present.count(pair_key(a, b))) missing.emplace_back(a, b);
      }
    }
    const auto pick = rng.sample(static_cast<int>(missing.size()),
                                 static_cast<int>(target - m));
    for (int i : pick) add(missing[i].first, missing[i].second);
  } else {
    while (static_cast<long long>(edges.size()) < target) {
      const NodeId a = static_cast<NodeId>(rng.uniform_int(n));
      const NodeId b = static_cast<NodeId>(rng.uniform_int(n));
      if (a == b || !present.insert(pair_key(a, b)).second) continue;
      add(a, b);
    }
  }
  std::vector<std::string> ids(net.external_ids().begin(), net.external_ids().end());
  std::vector<Label> labels(net.labels().begin(), net.labels().end());
  std::vector<double> comp(net.compliances().begin(), net.compliances().end());
  return ContactNetwork(std::move(ids), std::move(edges), std::move(labels),
                        std::move(comp))
      .with_seed(net.seed())
      .with_transmission_rate(net.transmission_rate());
}

Calibration calibrate_transmissions(const ContactNetwork& net,
                                    double target_mean_q) {
  if (!(target_mean_q > 0.0 && target_mean_q < 1.0)) {
    throw InvalidArgument("target mean transmission must lie in (0, 1)");
  }
  if (net.num_edges() == 0) {
    throw InvalidArgument("cannot calibrate a network without edges");
  }
  const auto edges = net.edges();
  auto mean_q = [&](double rate) {
    double sum = 0.0;
    for (const Edge& e : edges) sum += -std::expm1(-rate * e.duration);
    return sum / static_cast<double>(edges.size());
  };
  double lo = 1e-12;
  double hi = 10.0;
  if (mean_q(hi) < target_mean_q || mean_q(lo) > target_mean_q) {
    throw InvalidArgument("calibration failed to bracket the target rate");
  }
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 2000; ++iter) {
    mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval exhausted in doubles
    const double f = mean_q(mid);
    if (f < target_mean_q) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 && std::fabs(f - target_mean_q) <= 1e-12) break;
  }
  std::vector<double> q(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    q[e] = -std::expm1(-mid * edges[e].duration);
  }
  return {net.with_transmissions(std::move(q)).with_transmission_rate(mid), mid};
}

ContactNetwork assign_demographics(const ContactNetwork& net,
                                   const PerLabel<double>& fractions,
                                   const PerLabel<double>& base_compliance,
                                   double noise_halfwidth,
                                   std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw InvalidArgument("negative population fraction");
    total += f;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw InvalidArgument("population fractions must sum to 1");
  }
  if (noise_halfwidth < 0.0) {
    throw InvalidArgument("noise half-width must be non-negative");
  }
  Rng rng(derive_seed(seed, {0x64656d}));
  const int n = net.num_nodes();
  std::vector<Label> labels(n);
  std::vector<double> comp(n);
  for (int u = 0; u < n; ++u) {
    const double r = rng.uniform();
    double acc = 0.0;
    int chosen = kNumLabels - 1;
    while (chosen > 0 && fractions[chosen] == 0.0) --chosen;
    for (int l = 0; l < kNumLabels; ++l) {
      acc += fractions[l];
      if (r < acc && fractions[l] > 0.0) {
        chosen = l;
        break;
      }
    }
    labels[u] = kAllLabels[chosen];
    const double noise = rng.uniform(-noise_halfwidth, noise_halfwidth);
    comp[u] = std::clamp(base_compliance[chosen] + noise, 0.0, 1.0);
  }
  return net.with_attributes(std::move(labels), std::move(comp));
}

ContactNetwork scale_compliance(const ContactNetwork& net, double factor) {
  if (factor < 0.0) throw InvalidArgument("compliance factor must be >= 0");
  std::vector<Label> labels(net.labels().begin(), net.labels().end());
  std::vector<double> comp(net.compliances().begin(), net.compliances().end());
  for (double& c : comp) c = std::clamp(c * factor, 0.0, 1.0);
  return net.with_attributes(std::move(labels), std::move(comp));
}

Rings compute_rings(const ContactNetwork& net, std::span<const NodeId> infected) {
  const int n = net.num_nodes();
  // 1 = I, 2 = V1, 3 = V2.
  std::vector<std::uint8_t> ring(n, 0);
  Rings out;
  for (NodeId u : infected) {
    if (u < 0 || u >= n) throw InvalidArgument("infected node out of range");
    if (ring[u] == 0) {
      ring[u] = 1;
      out.infected.push_back(u);
    }
  }
  std::sort(out.infected.begin(), out.infected.end());
  for (NodeId u : out.infected) {
    for (const Neighbor& nb : net.neighbors(u)) {
      if (ring[nb.node] == 0) {
        ring[nb.node] = 2;
        out.v1.push_back(nb.node);
      }
    }
  }
  std::sort(out.v1.begin(), out.v1.end());
  for (NodeId u : out.v1) {
    for (const Neighbor& nb : net.neighbors(u)) {
      if (ring[nb.node] == 0) {
        ring[nb.node] = 3;
        out.v2.push_back(nb.node);
      }
    }
  }
  std::sort(out.v2.begin(), out.v2.end());
  return out;
}

ContactNetwork load_network(const std::string& edge_path,
                            const std::string& attr_path) {
  std::unordered_map<std::string, NodeId> index;
  std::vector<std::string> ids;
  auto intern = [&](std::string_view name) {
    auto [it, inserted] =
        index.emplace(std::string(name), static_cast<NodeId>(ids.size()));
    if (inserted) ids.emplace_back(name);
    return it->second;
  };

  std::vector<std::optional<Label>> labels;
  std::vector<std::optional<double>> comp;
  if (!attr_path.empty()) {
    const auto lines = read_lines(attr_path);
    if (lines.empty()) throw ParseError(attr_path, 0, "missing header");
    const auto header = text::split(lines[0], ',');
    const bool has_comp = header.size() == 3 && header[2] == "compliance";
    if (header.size() < 2 || header[0] != "node" || header[1] != "label" ||
        (header.size() == 3 && !has_comp) || header.size() > 3) {
      throw ParseError(attr_path, 0, "expected header node,label[,compliance]");
    }
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      if (text::trim(lines[ln]).empty()) continue;
      const auto f = text::split(lines[ln], ',');
      if (f.size() != header.size() || f[0].empty()) {
        throw ParseError(attr_path, ln, "malformed row");
      }
      if (index.count(std::string(f[0]))) {
        throw ParseError(attr_path, ln, "duplicate node " + std::string(f[0]));
      }
      intern(f[0]);
      try {
        labels.push_back(parse_label(f[1]));
      } catch (const InvalidArgument& e) {
        throw ParseError(attr_path, ln, e.what());
      }
      if (has_comp && !f[2].empty()) {
        const auto c = text::parse_double(f[2]);
        if (!c) throw ParseError(attr_path, ln, "malformed compliance");
        if (!(*c >= 0.0 && *c <= 1.0)) {
          throw ParseError(attr_path, ln, "compliance outside [0, 1]");
        }
        comp.push_back(*c);
      } else {
        comp.push_back(std::nullopt);
      }
    }
  }

  const auto lines = read_lines(edge_path);
  if (lines.empty() || text::split(lines[0], ',') !=
                           std::vector<std::string_view>{"u", "v", "duration_minutes"}) {
    throw ParseError(edge_path, 0, "expected header u,v,duration_minutes");
  }
  std::vector<Edge> edges;
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (text::trim(lines[ln]).empty()) continue;
    const auto f = text::split(lines[ln], ',');
    if (f.size() != 3 || f[0].empty() || f[1].empty()) {
      throw ParseError(edge_path, ln, "malformed row");
    }
    const auto duration = text::parse_double(f[2]);
    if (!duration) throw ParseError(edge_path, ln, "malformed duration");
    if (!(*duration > 0.0)) throw ParseError(edge_path, ln, "duration must be positive");
    if (f[0] == f[1]) {
      throw ParseError(edge_path, ln, "self-loop on node " + std::string(f[0]));
    }
    const NodeId a = intern(f[0]);
    const NodeId b = intern(f[1]);
    if (!seen.insert(pair_key(a, b)).second) {
      throw ParseError(edge_path, ln,
                       "duplicate edge " + std::string(f[0]) + "," + std::string(f[1]));
    }
    edges.push_back({a, b, *duration, 0.0});
  }

  const int n = static_cast<int>(ids.size());
  std::vector<Label> final_labels(n, Label::kAdult);
  std::vector<double> final_comp(n);
  for (int u = 0; u < n; ++u) {
    if (u < static_cast<int>(labels.size()) && labels[u]) final_labels[u] = *labels[u];
    const bool explicit_comp = u < static_cast<int>(comp.size()) && comp[u];
    final_comp[u] = explicit_comp ? *comp[u]
                                  : kBaseCompliance[label_index(final_labels[u])];
  }
  return ContactNetwork(std::move(ids), std::move(edges), std::move(final_labels),
                        std::move(final_comp));
}

void save_network(const ContactNetwork& net, const std::string& prefix) {
  std::string edges = "u,v,duration_minutes\n";
  for (const Edge& e : net.edges()) {
    edges += net.external_id(e.u);
    edges += ',';
    edges += net.external_id(e.v);
    edges += ',';
    edges += text::format_double(e.duration);
    edges += '\n';
  }
  std::string nodes = "node,label,compliance\n";
  for (NodeId u = 0; u < net.num_nodes(); ++u) {
    nodes += net.external_id(u);
    nodes += ',';
    nodes += label_code(net.label(u));
    nodes += ',';
    nodes += text::format_double(net.compliance(u));
    nodes += '\n';
  }
  nlohmann::ordered_json meta;
  meta["n"] = net.num_nodes();
  meta["m"] = net.num_edges();
  meta["seed"] = net.seed() ? nlohmann::ordered_json(*net.seed())
                            : nlohmann::ordered_json(nullptr);
  meta["mean_q"] = net.mean_q();
  if (net.transmission_rate()) meta["rate"] = *net.transmission_rate();
  write_file(prefix + ".edges.csv", edges);
  write_file(prefix + ".nodes.csv", nodes);
  write_file(prefix + ".json", meta.dump(2) + "\n");
}

ContactNetwork load_saved_network(const std::string& prefix) {
  ContactNetwork net = load_network(prefix + ".edges.csv", prefix + ".nodes.csv");
  std::ifstream in(prefix + ".json");
  if (!in) throw InvalidArgument("cannot open " + prefix + ".json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(prefix + ".json", 1, e.what());
  }
  if (meta.value("n", -1) != net.num_nodes() || meta.value("m", -1) != net.num_edges()) {
    throw InvalidArgument("sidecar counts do not match " + prefix + " CSV files");
  }
  if (net.num_edges() > 0) {
    if (meta.contains("rate") && meta["rate"].is_number()) {
      const double rate = meta["rate"].get<double>();
      std::vector<double> q;
      q.reserve(net.num_edges());
      for (const Edge& e : net.edges()) q.push_back(-std::expm1(-rate * e.duration));
      net = net.with_transmissions(std::move(q)).with_transmission_rate(rate);
    } else if (meta.contains("mean_q") && meta["mean_q"].is_number()) {
      net = calibrate_transmissions(net, meta["mean_q"].get<double>()).network;
    }
  }
  if (meta.contains("seed") && meta["seed"].is_number_unsigned()) {
    net = net.with_seed(meta["seed"].get<std::uint64_t>());
  }
  return net;
}

}  // namespace ctrace
