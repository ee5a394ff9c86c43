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

// Discrete-time SIR process with a one-step testing lag: newly infected
// nodes are hidden (I1) for one step, known (I2) for the next, then recover.
// Only I1 transmits. Quarantine requests are made from the rings of I2.

#ifndef CTRACE_EPISIM_H_
#define CTRACE_EPISIM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctrace/common.h"
#include "ctrace/netmodel.h"
#include "ctrace/policies.h"

namespace ctrace {

enum class Compartment : std::uint8_t { kS, kI1, kI2, kR };

struct EpidemicState {
  std::vector<Compartment> status;
  std::vector<int> quarantine_timer;  // 0 = not quarantined
  int timestep = 0;

  int count(Compartment c) const;
  std::vector<NodeId> members(Compartment c) const;
  int quarantined() const;
};

struct SimulationConfig {
  int initial_infections = 10;
  int intervention_start = 3;
  int budget = 0;
  int quarantine_length = 2;
  PolicyConfig policy;
  std::optional<FairnessPolicy> fairness;
  std::optional<PerLabel<double>> exposure_caps;
  int horizon = 100;
  std::uint64_t seed = 1;
  // Draw one compliance trait per node instead of a fresh draw per request.
  bool latent_compliance = false;

  void validate() const;
};

struct TrajectoryRecord {
  int timestep = 0;
  int s = 0, i1 = 0, i2 = 0, r = 0;
  int new_infections = 0;
  int quarantined = 0;  // nodes under an active quarantine after the step
  int requested = 0;    // size of the quarantine request made this step
  PerLabel<int> requested_by_label{};
  PerLabel<int> infections_by_label{};
};

struct Trajectory {
  int num_nodes = 0;
  std::vector<TrajectoryRecord> records;

  int total_infected() const;
  PerLabel<int> infected_by_label() const;
  int total_requested() const;
};

// k distinct uniformly random nodes in I1.
EpidemicState seed_outbreak(const ContactNetwork& net, int k, std::uint64_t seed);

struct StepOptions {
  int quarantine_length = 2;
  bool latent_compliance = false;
};

struct StepResult {
  EpidemicState state;
  std::vector<NodeId> newly_infected;
};

// One timestep: quarantine application, transmission from unquarantined I1,
// compartment advance, timer decrement. Random draws are keyed by (seed,
// timestep, node or edge), so they do not depend on the request.
// Throws InvalidArgument if the request leaves the first ring of I2.
StepResult step(const ContactNetwork& net, const EpidemicState& state,
                std::span<const NodeId> quarantine_request, std::uint64_t seed,
                const StepOptions& options = {});

// Throws ContractViolation if the policy breaks a budget.
Trajectory run_mdp(const ContactNetwork& net, const Policy& policy,
                   const SimulationConfig& config);

// Convenience overload building the policy from config.policy.
Trajectory run_mdp(const ContactNetwork& net, const SimulationConfig& config);

struct TrajectoryMetrics {
  double total_infection_pct = 0.0;
  int peak_known_infections = 0;
  int peak_timestep = 0;
};

TrajectoryMetrics trajectory_metrics(const Trajectory& traj);

// timestep,S,I1,I2,R,new_infections,quarantined
std::string trajectory_csv(const Trajectory& traj);
std::string trajectory_summary_json(const Trajectory& traj);

}  // namespace ctrace

#endif  // CTRACE_EPISIM_H_
