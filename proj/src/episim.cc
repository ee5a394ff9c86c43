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

#include "ctrace/episim.h"

#include <algorithm>
#include <sstream>

#include "ctrace/minexposed.h"
#include "ctrace/rng.h"
#include "json.hpp"

namespace ctrace {
namespace {

// Tags for keyed draws.
constexpr std::uint64_t kComplianceDraw = 1;
constexpr std::uint64_t kTransmissionDraw = 2;
constexpr std::uint64_t kLatentDraw = 3;

// Child seeds of a run.
constexpr std::uint64_t kOutbreakStream = 1;
constexpr std::uint64_t kEpidemicStream = 2;
constexpr std::uint64_t kPolicyStream = 3;

}  // namespace

int EpidemicState::count(Compartment c) const {
  return static_cast<int>(std::count(status.begin(), status.end(), c));
}

std::vector<NodeId> EpidemicState::members(Compartment c) const {
  std::vector<NodeId> out;
  for (NodeId u = 0; u < static_cast<NodeId>(status.size()); ++u) {
    if (status[u] == c) out.push_back(u);
  }
  return out;
}

int EpidemicState::quarantined() const {
  return static_cast<int>(std::count_if(quarantine_timer.begin(), quarantine_timer.end(),
                                        [](int t) { return t > 0; }));
}

void SimulationConfig::validate() const {
  if (budget < 0) throw InvalidArgument("budget must be non-negative");
  if (quarantine_length < 1) throw InvalidArgument("quarantine length must be at least 1");
  if (horizon < 0) throw InvalidArgument("horizon must be non-negative");
  if (intervention_start < 0) throw InvalidArgument("intervention start must be non-negative");
}

int Trajectory::total_infected() const {
  int total = 0;
  for (const TrajectoryRecord& r : records) total += r.new_infections;
  return total;
}

PerLabel<int> Trajectory::infected_by_label() const {
  PerLabel<int> out{};
  for (const TrajectoryRecord& r : records) {
    for (int i = 0; i < kNumLabels; ++i) out[i] += r.infections_by_label[i];
  }
  return out;
}

int Trajectory::total_requested() const {
  int total = 0;
  for (const TrajectoryRecord& r : records) total += r.requested;
  return total;
}

EpidemicState seed_outbreak(const ContactNetwork& net, int k, std::uint64_t seed) {
  const int n = net.num_nodes();
  if (k < 1 || k > n) throw InvalidArgument("initial infections must lie in [1, n]");
  EpidemicState state;
  state.status.assign(n, Compartment::kS);
  state.quarantine_timer.assign(n, 0);
  Rng rng(seed);
  for (int u : rng.sample(n, k)) state.status[u] = Compartment::kI1;
  return state;
}

StepResult step(const ContactNetwork& net, const EpidemicState& state,
                std::span<const NodeId> quarantine_request, std::uint64_t seed,
                const StepOptions& options) {
  const int n = net.num_nodes();
  if (static_cast<int>(state.status.size()) != n) {
    throw InvalidArgument("state does not match the network");
  }
  if (options.quarantine_length < 1) {
    throw InvalidArgument("quarantine length must be at least 1");
  }
  const std::uint64_t t = static_cast<std::uint64_t>(state.timestep);
  StepResult out{state, {}};
  EpidemicState& next = out.state;

  if (!quarantine_request.empty()) {
    const Rings rings = compute_rings(net, state.members(Compartment::kI2));
    for (NodeId u : quarantine_request) {
      if (!std::binary_search(rings.v1.begin(), rings.v1.end(), u)) {
        throw InvalidArgument("quarantine request names node " + std::to_string(u) +
                              " outside the first ring of the known infected");
      }
      const double draw = options.latent_compliance
                              ? keyed_uniform(seed, 0, kLatentDraw, u)
                              : keyed_uniform(seed, t, kComplianceDraw, u);
      if (draw < net.compliance(u)) next.quarantine_timer[u] = options.quarantine_length;
    }
  }

  std::vector<char> infected_now(n, 0);
  for (NodeId u = 0; u < n; ++u) {
    if (state.status[u] != Compartment::kI1 || next.quarantine_timer[u] > 0) continue;
    for (const Neighbor& nb : net.neighbors(u)) {
      const NodeId v = nb.node;
      if (state.status[v] != Compartment::kS || next.quarantine_timer[v] > 0) continue;
      const std::uint64_t key = 2 * static_cast<std::uint64_t>(nb.edge) + (u < v ? 0 : 1);
      if (keyed_uniform(seed, t, kTransmissionDraw, key) < net.edge(nb.edge).q) {
        infected_now[v] = 1;
      }
    }
  }

  for (NodeId u = 0; u < n; ++u) {
    switch (state.status[u]) {
      case Compartment::kI2: next.status[u] = Compartment::kR; break;
      case Compartment::kI1: next.status[u] = Compartment::kI2; break;
      case Compartment::kS:
        if (infected_now[u]) {
          next.status[u] = Compartment::kI1;
          out.newly_infected.push_back(u);
        }
        break;
      case Compartment::kR: break;
    }
    if (next.quarantine_timer[u] > 0) --next.quarantine_timer[u];
  }
  next.timestep = state.timestep + 1;
  return out;
}

namespace {

TrajectoryRecord make_record(const ContactNetwork& net, const EpidemicState& state,
                             std::span<const NodeId> new_infections,
                             std::span<const NodeId> requested) {
  TrajectoryRecord rec;
  rec.timestep = state.timestep;
  for (Compartment c : state.status) {
    switch (c) {
      case Compartment::kS: ++rec.s; break;
      case Compartment::kI1: ++rec.i1; break;
      case Compartment::kI2: ++rec.i2; break;
      case Compartment::kR: ++rec.r; break;
    }
  }
  rec.new_infections = static_cast<int>(new_infections.size());
  for (NodeId u : new_infections) ++rec.infections_by_label[label_index(net.label(u))];
  rec.requested = static_cast<int>(requested.size());
  for (NodeId u : requested) ++rec.requested_by_label[label_index(net.label(u))];
  rec.quarantined = state.quarantined();
  return rec;
}

}  // namespace

Trajectory run_mdp(const ContactNetwork& net, const Policy& policy,
                   const SimulationConfig& config) {
  config.validate();
  Trajectory traj;
  traj.num_nodes = net.num_nodes();
  EpidemicState state = seed_outbreak(net, config.initial_infections,
                                      derive_seed(config.seed, {kOutbreakStream}));
  const std::vector<NodeId> seeds = state.members(Compartment::kI1);
  traj.records.push_back(make_record(net, state, seeds, {}));
  const std::uint64_t epidemic_seed = derive_seed(config.seed, {kEpidemicStream});
  StepOptions opts{config.quarantine_length, config.latent_compliance};

  for (int t = 0; t < config.horizon; ++t) {
    if (state.count(Compartment::kI1) + state.count(Compartment::kI2) == 0) break;
    std::vector<NodeId> request;
    const std::vector<NodeId> known = state.members(Compartment::kI2);
    if (t >= config.intervention_start && !known.empty()) {
      std::optional<PerLabel<int>> label_budgets;
      if (config.fairness) {
        const Rings rings = compute_rings(net, known);
        PerLabel<int> counts{};
        for (NodeId u : rings.v1) ++counts[label_index(net.label(u))];
        const BudgetAllocation alloc = allocate_budgets(*config.fairness, counts, config.budget);
        if (!alloc.pooled) label_budgets = alloc.budgets;
      }
      const MinExposedInstance inst =
          build_instance(net, known, config.budget, label_budgets, config.exposure_caps);
      const QuarantineSet q =
          policy(inst, derive_seed(config.seed, {kPolicyStream, static_cast<std::uint64_t>(t)}));
      try {
        check_feasible(inst, q);
      } catch (const ContractViolation& e) {
        throw ContractViolation("policy broke its contract at timestep " + std::to_string(t) +
                                " (seed " + std::to_string(config.seed) + "): " + e.what());
      }
      request = to_node_ids(inst, q);
    }
    StepResult res = step(net, state, request, epidemic_seed, opts);
    state = std::move(res.state);
    traj.records.push_back(make_record(net, state, res.newly_infected, request));
  }
  return traj;
}

Trajectory run_mdp(const ContactNetwork& net, const SimulationConfig& config) {
  return run_mdp(net, make_policy(config.policy, &net), config);
}

TrajectoryMetrics trajectory_metrics(const Trajectory& traj) {
  if (traj.records.empty()) throw InvalidArgument("trajectory is empty");
  TrajectoryMetrics m;
  const TrajectoryRecord& last = traj.records.back();
  m.total_infection_pct =
      100.0 * (last.r + last.i1 + last.i2) / static_cast<double>(traj.num_nodes);
  m.peak_known_infections = -1;
  for (const TrajectoryRecord& r : traj.records) {
    if (r.i2 > m.peak_known_infections) {
      m.peak_known_infections = r.i2;
      m.peak_timestep = r.timestep;
    }
  }
  return m;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "timestep,S,I1,I2,R,new_infections,quarantined\n";
  for (const TrajectoryRecord& r : traj.records) {
    out << r.timestep << ',' << r.s << ',' << r.i1 << ',' << r.i2 << ',' << r.r << ','
        << r.new_infections << ',' << r.quarantined << '\n';
  }
  return out.str();
}

std::string trajectory_summary_json(const Trajectory& traj) {
  using Json = nlohmann::ordered_json;
  const TrajectoryMetrics m = trajectory_metrics(traj);
  Json j;
  j["n"] = traj.num_nodes;
  j["timesteps"] = traj.records.back().timestep;
  j["total_infected"] = traj.total_infected();
  j["total_infection_pct"] = m.total_infection_pct;
  j["peak_known_infections"] = m.peak_known_infections;
  j["peak_timestep"] = m.peak_timestep;
  j["total_requested"] = traj.total_requested();
  Json inf = Json::object(), req = Json::object();
  const PerLabel<int> by_label = traj.infected_by_label();
  PerLabel<int> requested{};
  for (const TrajectoryRecord& r : traj.records) {
    for (int i = 0; i < kNumLabels; ++i) requested[i] += r.requested_by_label[i];
  }
  for (Label l : kAllLabels) {
    inf[std::string(1, label_code(l))] = by_label[label_index(l)];
    req[std::string(1, label_code(l))] = requested[label_index(l)];
  }
  j["infected_by_label"] = inf;
  j["requested_by_label"] = req;
  return j.dump(2) + "\n";
}

}  // namespace ctrace
