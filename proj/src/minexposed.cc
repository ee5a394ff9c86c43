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

#include "ctrace/minexposed.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "ctrace/optim.h"
#include "json.hpp"

namespace ctrace {
namespace {

bool is_probability(double x) { return x >= 0.0 && x <= 1.0; }

void build_csr(int count, const std::vector<int>& key,
               std::vector<int>& offsets, std::vector<int>& ids) {
  offsets.assign(count + 1, 0);
  for (int k : key) ++offsets[k + 1];
  for (int i = 0; i < count; ++i) offsets[i + 1] += offsets[i];
  ids.assign(key.size(), 0);
  std::vector<int> fill(offsets.begin(), offsets.end() - 1);
  for (int e = 0; e < static_cast<int>(key.size()); ++e) ids[fill[key[e]]++] = e;
}

}  // namespace

void MinExposedInstance::finalize() {
  const int n1 = num_v1();
  const int n2 = num_v2();
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("instance: ") + what);
  };
  need(static_cast<int>(p.size()) == n1, "p must have one entry per V1 node");
  need(static_cast<int>(c.size()) == n1, "c must have one entry per V1 node");
  if (v1_labels.empty()) v1_labels.assign(n1, Label::kAdult);
  if (v2_labels.empty()) v2_labels.assign(n2, Label::kAdult);
  if (v1_degree.empty()) v1_degree.assign(n1, 0);
  if (infected_degree.empty()) infected_degree.assign(infected.size(), 0);
  need(static_cast<int>(v1_labels.size()) == n1, "v1_labels size");
  need(static_cast<int>(v2_labels.size()) == n2, "v2_labels size");
  need(static_cast<int>(v1_degree.size()) == n1, "v1_degree size");
  need(infected_degree.size() == infected.size(), "infected_degree size");
  need(budget >= 0, "budget must be non-negative");
  for (int u = 0; u < n1; ++u) {
    need(is_probability(p[u]), "p outside [0, 1]");
    need(is_probability(c[u]), "c outside [0, 1]");
  }
  std::set<NodeId> seen;
  for (const auto* ring : {&infected, &v1, &v2}) {
    for (NodeId id : *ring) need(seen.insert(id).second, "I, V1, V2 must be disjoint");
  }
  std::set<std::pair<int, int>> pairs;
  std::vector<int> ukey, vkey;
  for (const ExposureEdge& e : edges) {
    need(e.u >= 0 && e.u < n1 && e.v >= 0 && e.v < n2, "edge endpoint out of range");
    need(is_probability(e.q), "edge q outside [0, 1]");
    need(pairs.insert({e.u, e.v}).second, "duplicate edge");
    ukey.push_back(e.u);
    vkey.push_back(e.v);
  }
  std::vector<int> ikey;
  pairs.clear();
  const int ni = static_cast<int>(infected.size());
  for (const InfectionEdge& e : infection_edges) {
    need(e.u >= 0 && e.u < n1 && e.i >= 0 && e.i < ni,
         "infection edge endpoint out of range");
    need(is_probability(e.q), "infection edge q outside [0, 1]");
    need(pairs.insert({e.u, e.i}).second, "duplicate infection edge");
    ikey.push_back(e.u);
  }
  if (label_budgets) {
    int sum = 0;
    for (int b : *label_budgets) {
      need(b >= 0, "label budget must be non-negative");
      sum += b;
    }
    need(sum == budget, "label budgets must sum to the budget");
  }
  if (exposure_caps) {
    for (double a : *exposure_caps) need(a >= 0.0, "exposure cap must be non-negative");
  }
  build_csr(n1, ukey, v1_offsets_, v1_edge_ids_);
  build_csr(n2, vkey, v2_offsets_, v2_edge_ids_);
  build_csr(n1, ikey, inf_offsets_, inf_edge_ids_);
  if (!infection_edges.empty()) {
    for (int u = 0; u < n1; ++u) {
      if (infected_neighbors(u) == 0) continue;
      double miss = 1.0;
      for (int e : infection_edges_of_v1(u)) miss *= 1.0 - infection_edges[e].q;
      need(std::fabs((1.0 - miss) - p[u]) <= 1e-9,
           "p inconsistent with the infection edges");
    }
  }
  v2_degree.assign(n2, 0);
  for (int v = 0; v < n2; ++v) v2_degree[v] = v2_offsets_[v + 1] - v2_offsets_[v];
  max_v2_degree = n2 > 0 ? *std::max_element(v2_degree.begin(), v2_degree.end()) : 0;
}

std::vector<NodeId> to_node_ids(const MinExposedInstance& inst,
                                const QuarantineSet& q) {
  std::vector<NodeId> out;
  out.reserve(q.size());
  for (int u : q) out.push_back(inst.v1.at(u));
  return out;
}

double infection_prob(const ContactNetwork& net, std::span<const NodeId> infected,
                      NodeId u) {
  if (u < 0 || u >= net.num_nodes()) throw InvalidArgument("node out of range");
  std::vector<char> in_i(net.num_nodes(), 0);
  for (NodeId v : infected) {
    if (v < 0 || v >= net.num_nodes()) throw InvalidArgument("infected node out of range");
    in_i[v] = 1;
  }
  if (in_i[u]) throw InvalidArgument("node is itself infected");
  double miss = 1.0;
  bool adjacent = false;
  for (const Neighbor& nb : net.neighbors(u)) {
    if (!in_i[nb.node]) continue;
    adjacent = true;
    miss *= 1.0 - net.edge(nb.edge).q;
  }
  if (!adjacent) throw InvalidArgument("node is not adjacent to the infected set");
  return 1.0 - miss;
}

MinExposedInstance build_instance(const ContactNetwork& net,
                                  std::span<const NodeId> infected, int budget,
                                  std::optional<PerLabel<int>> label_budgets,
                                  std::optional<PerLabel<double>> exposure_caps) {
  if (infected.empty()) throw InvalidArgument("infected set is empty");
  const Rings rings = compute_rings(net, infected);
  MinExposedInstance inst;
  inst.infected = rings.infected;
  inst.v1 = rings.v1;
  inst.v2 = rings.v2;
  inst.budget = budget;
  inst.label_budgets = label_budgets;
  inst.exposure_caps = exposure_caps;
  // Position of each node within its ring.
  std::vector<int> ring(net.num_nodes(), 0), pos(net.num_nodes(), -1);
  for (int i = 0; i < static_cast<int>(inst.infected.size()); ++i) {
    ring[inst.infected[i]] = 1;
    pos[inst.infected[i]] = i;
  }
  for (int i = 0; i < inst.num_v1(); ++i) {
    ring[inst.v1[i]] = 2;
    pos[inst.v1[i]] = i;
  }
  for (int i = 0; i < inst.num_v2(); ++i) {
    ring[inst.v2[i]] = 3;
    pos[inst.v2[i]] = i;
  }
  for (NodeId id : inst.infected) inst.infected_degree.push_back(net.degree(id));
  for (NodeId id : inst.v2) inst.v2_labels.push_back(net.label(id));
  for (int u = 0; u < inst.num_v1(); ++u) {
    const NodeId id = inst.v1[u];
    double miss = 1.0;
    for (const Neighbor& nb : net.neighbors(id)) {
      const double q = net.edge(nb.edge).q;
      if (ring[nb.node] == 1) {
        inst.infection_edges.push_back({u, pos[nb.node], q});
        miss *= 1.0 - q;
      } else if (ring[nb.node] == 3) {
        inst.edges.push_back({u, pos[nb.node], q});
      }
    }
    inst.p.push_back(1.0 - miss);
    inst.c.push_back(net.compliance(id));
    inst.v1_labels.push_back(net.label(id));
    inst.v1_degree.push_back(net.degree(id));
  }
  inst.finalize();
  return inst;
}

void check_feasible(const MinExposedInstance& inst, const QuarantineSet& q) {
  if (static_cast<int>(q.size()) > inst.budget) {
    throw ContractViolation("quarantine set of size " + std::to_string(q.size()) +
                            " exceeds budget " + std::to_string(inst.budget));
  }
  PerLabel<int> count{};
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] < 0 || q[k] >= inst.num_v1()) {
      throw ContractViolation("quarantine set names a node outside V1");
    }
    if (k > 0 && q[k] <= q[k - 1]) {
      throw ContractViolation("quarantine set must be sorted without repeats");
    }
    ++count[label_index(inst.v1_labels[q[k]])];
  }
  if (inst.label_budgets) {
    for (Label l : kAllLabels) {
      const int i = label_index(l);
      if (count[i] > (*inst.label_budgets)[i]) {
        throw ContractViolation(std::string("label ") + label_code(l) +
                                " exceeds its budget");
      }
    }
  }
}

namespace {

std::vector<char> indicator(const MinExposedInstance& inst, const QuarantineSet& q) {
  check_feasible(inst, q);
  std::vector<char> x(inst.num_v1(), 0);
  for (int u : q) x[u] = 1;
  return x;
}

// Probability that V1 node u transmits along edge e under the indicator x.
double edge_term(const MinExposedInstance& inst, const std::vector<char>& x,
                 const ExposureEdge& e) {
  return inst.p[e.u] * (x[e.u] ? 1.0 - inst.c[e.u] : 1.0) * e.q;
}

}  // namespace

double objective_exact(const MinExposedInstance& inst, const QuarantineSet& q) {
  const std::vector<char> x = indicator(inst, q);
  double total = 0.0;
  for (int v = 0; v < inst.num_v2(); ++v) {
    double miss = 1.0;
    for (int e : inst.edges_of_v2(v)) miss *= 1.0 - edge_term(inst, x, inst.edges[e]);
    total += 1.0 - miss;
  }
  return total;
}

double union_bound_value(const MinExposedInstance& inst, const QuarantineSet& q) {
  const std::vector<char> x = indicator(inst, q);
  double total = 0.0;
  for (const ExposureEdge& e : inst.edges) total += edge_term(inst, x, e);
  return total;
}

double milp_objective_value(const MinExposedInstance& inst, const QuarantineSet& q) {
  const std::vector<char> x = indicator(inst, q);
  double total = 0.0;
  for (int v = 0; v < inst.num_v2(); ++v) {
    double best = 0.0;
    for (int e : inst.edges_of_v2(v)) best = std::max(best, edge_term(inst, x, inst.edges[e]));
    total += best;
  }
  return total;
}

PerLabel<double> label_exposure_bound(const MinExposedInstance& inst,
                                      const QuarantineSet& q) {
  const std::vector<char> x = indicator(inst, q);
  PerLabel<double> out{};
  for (const ExposureEdge& e : inst.edges) {
    out[label_index(inst.v2_labels[e.v])] += edge_term(inst, x, e);
  }
  return out;
}

int sample_independent_exposures(const MinExposedInstance& inst,
                                 const std::vector<char>& asked, Rng& rng) {
  const int n1 = inst.num_v1();
  std::vector<char> spreading(n1, 0);
  for (int u = 0; u < n1; ++u) {
    bool infected = false;
    if (!inst.infection_edges.empty()) {
      for (int e : inst.infection_edges_of_v1(u)) {
        if (rng.bernoulli(inst.infection_edges[e].q)) infected = true;
      }
    } else {
      infected = rng.bernoulli(inst.p[u]);
    }
    const bool isolated = asked[u] && rng.bernoulli(inst.c[u]);
    spreading[u] = infected && !isolated;
  }
  int exposed = 0;
  for (int v = 0; v < inst.num_v2(); ++v) {
    bool hit = false;
    for (int e : inst.edges_of_v2(v)) {
      const ExposureEdge& edge = inst.edges[e];
      if (spreading[edge.u] && rng.bernoulli(edge.q)) hit = true;
    }
    exposed += hit;
  }
  return exposed;
}

McEstimate objective_mc(const MinExposedInstance& inst, const QuarantineSet& q,
                        int trials, std::uint64_t seed,
                        const ExposureSampler& sampler) {
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  const std::vector<char> asked = indicator(inst, q);
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double k = sampler(inst, asked, rng);
    sum += k;
    sum_sq += k * k;
  }
  McEstimate out;
  out.trials = trials;
  out.mean = sum / trials;
  if (trials > 1) {
    const double var = std::max(0.0, (sum_sq - trials * out.mean * out.mean) / (trials - 1));
    out.std_error = std::sqrt(var / trials);
  }
  return out;
}

CliqueReduction clique_to_minexposed(const SimpleGraph& graph, int k) {
  const int n = graph.n;
  if (k < 2 || k > n) throw InvalidArgument("k must lie in [2, n]");
  std::set<std::pair<int, int>> seen;
  std::vector<int> degree(n, 0);
  for (auto [a, b] : graph.edges) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) {
      throw InvalidArgument("graph edge is out of range or a self loop");
    }
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw InvalidArgument("graph has a duplicate edge");
    }
    ++degree[a];
    ++degree[b];
  }
  CliqueReduction out;
  MinExposedInstance& inst = out.instance;
  inst.infected = {0};
  inst.infected_degree = {n};
  for (int u = 0; u < n; ++u) {
    inst.v1.push_back(u + 1);
    inst.infection_edges.push_back({u, 0, 1.0});
    inst.p.push_back(1.0);
    inst.c.push_back(1.0);
    inst.v1_degree.push_back(degree[u] + 1);
  }
  const int m = static_cast<int>(graph.edges.size());
  for (int e = 0; e < m; ++e) {
    inst.v2.push_back(n + 1 + e);
    inst.edges.push_back({graph.edges[e].first, e, 1.0});
    inst.edges.push_back({graph.edges[e].second, e, 1.0});
  }
  inst.budget = k;
  inst.finalize();
  out.threshold = static_cast<double>(m) - 0.5 * k * (k - 1);
  return out;
}

bool clique_decision(const SimpleGraph& graph, int k) {
  if (graph.n > 14) throw InvalidArgument("clique_decision is limited to n <= 14");
  const CliqueReduction red = clique_to_minexposed(graph, k);
  const BruteForceResult best = brute_force_opt(red.instance);
  return std::fabs(best.value - red.threshold) <= 1e-9;
}

namespace {

using Json = nlohmann::ordered_json;

Json label_array(const std::vector<Label>& labels) {
  Json out = Json::array();
  for (Label l : labels) out.push_back(std::string(1, label_code(l)));
  return out;
}

std::vector<Label> parse_labels(const Json& j) {
  std::vector<Label> out;
  for (const auto& s : j) out.push_back(parse_label(s.get<std::string>()));
  return out;
}

}  // namespace

std::string instance_to_json(const MinExposedInstance& inst) {
  Json j;
  j["I"] = inst.infected;
  j["V1"] = inst.v1;
  j["V2"] = inst.v2;
  Json edges = Json::array();
  for (const ExposureEdge& e : inst.edges) {
    edges.push_back(Json::array({inst.v1[e.u], inst.v2[e.v], e.q}));
  }
  j["edges"] = edges;
  Json inf = Json::array();
  for (const InfectionEdge& e : inst.infection_edges) {
    inf.push_back(Json::array({inst.v1[e.u], inst.infected[e.i], e.q}));
  }
  j["infection_edges"] = inf;
  j["p"] = inst.p;
  j["c"] = inst.c;
  j["B"] = inst.budget;
  j["v1_labels"] = label_array(inst.v1_labels);
  j["v2_labels"] = label_array(inst.v2_labels);
  j["v1_degree"] = inst.v1_degree;
  j["infected_degree"] = inst.infected_degree;
  if (inst.label_budgets) {
    Json b = Json::object();
    for (Label l : kAllLabels) {
      b[std::string(1, label_code(l))] = (*inst.label_budgets)[label_index(l)];
    }
    j["budgets"] = b;
  }
  if (inst.exposure_caps) {
    Json a = Json::object();
    for (Label l : kAllLabels) {
      const double cap = (*inst.exposure_caps)[label_index(l)];
      // JSON has no infinity; an absent cap is written as null.
      a[std::string(1, label_code(l))] = std::isfinite(cap) ? Json(cap) : Json(nullptr);
    }
    j["caps"] = a;
  }
  return j.dump(2) + "\n";
}

MinExposedInstance instance_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("instance JSON: ") + e.what());
  }
  try {
    MinExposedInstance inst;
    inst.infected = j.at("I").get<std::vector<NodeId>>();
    inst.v1 = j.at("V1").get<std::vector<NodeId>>();
    inst.v2 = j.at("V2").get<std::vector<NodeId>>();
    std::map<NodeId, int> p1, p2, pi;
    for (int i = 0; i < inst.num_v1(); ++i) p1[inst.v1[i]] = i;
    for (int i = 0; i < inst.num_v2(); ++i) p2[inst.v2[i]] = i;
    for (int i = 0; i < static_cast<int>(inst.infected.size()); ++i) pi[inst.infected[i]] = i;
    auto lookup = [](const std::map<NodeId, int>& m, NodeId id, const char* ring) {
      auto it = m.find(id);
      if (it == m.end()) {
        throw InvalidArgument("instance JSON: node " + std::to_string(id) +
                              " is not in " + ring);
      }
      return it->second;
    };
    for (const auto& e : j.at("edges")) {
      inst.edges.push_back({lookup(p1, e.at(0).get<NodeId>(), "V1"),
                            lookup(p2, e.at(1).get<NodeId>(), "V2"),
                            e.at(2).get<double>()});
    }
    if (j.contains("infection_edges")) {
      for (const auto& e : j["infection_edges"]) {
        inst.infection_edges.push_back({lookup(p1, e.at(0).get<NodeId>(), "V1"),
                                        lookup(pi, e.at(1).get<NodeId>(), "I"),
                                        e.at(2).get<double>()});
      }
    }
    inst.p = j.at("p").get<std::vector<double>>();
    inst.c = j.at("c").get<std::vector<double>>();
    inst.budget = j.at("B").get<int>();
    if (j.contains("v1_labels")) inst.v1_labels = parse_labels(j["v1_labels"]);
    if (j.contains("v2_labels")) inst.v2_labels = parse_labels(j["v2_labels"]);
    if (j.contains("v1_degree")) inst.v1_degree = j["v1_degree"].get<std::vector<int>>();
    if (j.contains("infected_degree")) {
      inst.infected_degree = j["infected_degree"].get<std::vector<int>>();
    }
    if (j.contains("budgets") && !j["budgets"].is_null()) {
      PerLabel<int> b{};
      for (const auto& [key, value] : j["budgets"].items()) {
        b[label_index(parse_label(key))] = value.get<int>();
      }
      inst.label_budgets = b;
    }
    if (j.contains("caps") && !j["caps"].is_null()) {
      PerLabel<double> a;
      a.fill(std::numeric_limits<double>::infinity());
      for (const auto& [key, value] : j["caps"].items()) {
        if (!value.is_null()) a[label_index(parse_label(key))] = value.get<double>();
      }
      inst.exposure_caps = a;
    }
    inst.finalize();
    return inst;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("instance JSON: ") + e.what());
  }
}

}  // namespace ctrace
