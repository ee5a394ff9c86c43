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

// Experiment orchestration: budget estimation, parameter sweeps over
// (policy, budget, seed), epicurve export and the approximation-ratio
// benchmark on harvested instances.

#ifndef CTRACE_HARNESS_H_
#define CTRACE_HARNESS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctrace/episim.h"
#include "ctrace/minexposed.h"
#include "ctrace/netmodel.h"
#include "ctrace/optim.h"
#include "ctrace/policies.h"

namespace ctrace {

struct BudgetEstimate {
  double tracers_exact = 0.0;
  int tracers = 0;       // rounded
  int tracers_low = 0;   // floor
  int tracers_high = 0;  // ceil
  int budget_low = 0;    // round(tracers_exact * contacts_low)
  int budget_high = 0;   // round(tracers_exact * contacts_high)
};

// Per-timestep quarantine budget implied by a tracing workforce scaled from
// a reference of 2000 tracers per 8 million people, each handling 28 to 56
// contacts per timestep.
BudgetEstimate estimate_budget(double population,
                               double tracers_per_capita = 2000.0 / 8e6,
                               double contacts_low = 28.0,
                               double contacts_high = 56.0);

enum class TracingMode { kManual, kDigital, kFullInformation };

TracingMode parse_tracing_mode(std::string_view name);
std::string tracing_mode_name(TracingMode mode);

// Policies usable in a mode. Digital tracing only sees noisy degree
// statistics, manual tracing has no private variant.
bool policy_allowed(TracingMode mode, PolicyKind kind);

struct NetworkSource {
  std::string saved_prefix;         // load_saved_network, when set
  std::string edge_file, attr_file;  // load_network, when set
  GenSpec gen;                       // otherwise generate
  // Demographics for generated networks: "montgomery", "albemarle" or "none".
  std::string demographics = "montgomery";
  double compliance_noise = 0.05;
  std::uint64_t demographics_seed = 2;
  double augment = 0.0;  // degree increase fraction
  std::uint64_t augment_seed = 3;
};

ContactNetwork build_network(const NetworkSource& source);

struct ExperimentSpec {
  NetworkSource network;
  TracingMode mode = TracingMode::kManual;
  std::vector<PolicyKind> policies = {PolicyKind::kDegGreedy, PolicyKind::kRandom};
  // Absolute counts, or percent of the population in digital mode. Empty:
  // the tracer-derived range (low, midpoint, high).
  std::vector<double> budgets;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  // Fair policies run once per listed allocation rule; empty means A.
  std::vector<FairnessPolicy> fairness;
  SimulationConfig sim;  // budget, policy, seed and fairness are overridden
  PrivacyParams privacy;
  SegDegreeParams seg;
  std::string output_dir;
  int threads = 1;

  void validate() const;
};

// JSON config. Unknown keys are rejected.
ExperimentSpec experiment_spec_from_json(const std::string& text);
ExperimentSpec load_experiment_spec(const std::string& path);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

// Digital mode: uniform compliance at half the network's mean.
ContactNetwork apply_mode(const ContactNetwork& net, TracingMode mode);

std::vector<int> resolve_budgets(const ExperimentSpec& spec, int population);

struct RunKey {
  PolicyKind policy = PolicyKind::kNone;
  std::optional<FairnessPolicy> fairness;
  int budget = 0;
  std::uint64_t seed = 0;

  // e.g. "fair_deg_greedy-C_b10_s3"
  std::string label() const;
  std::string policy_label() const;  // e.g. "fair_deg_greedy-C"
};

struct RunResult {
  RunKey key;
  TrajectoryMetrics metrics;
  int total_infected = 0;
  int total_requested = 0;
  Trajectory trajectory;
};

struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

struct Aggregate {
  PolicyKind policy = PolicyKind::kNone;
  std::optional<FairnessPolicy> fairness;
  int budget = 0;
  int runs = 0;
  SummaryStat total_infection_pct;
  SummaryStat peak_known_infections;
  SummaryStat peak_timestep;
};

struct FairnessCell {
  PolicyKind algorithm = PolicyKind::kNone;
  int budget = 0;
  FairnessPolicy fairness = FairnessPolicy::kA;
  SummaryStat total_infection_pct;
};

struct ExperimentResult {
  std::vector<RunResult> runs;  // ordered by policy, fairness, budget, seed
  std::vector<Aggregate> aggregates;
  std::vector<FairnessCell> fairness_table;
};

SummaryStat summarize(std::span<const double> values);

// Runs every (policy, fairness, budget, seed) combination on `net` (mode
// already applied). A failing run aborts with the key needed to replay it.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ContactNetwork& net);

// Builds the network, runs, and writes the outputs when output_dir is set:
//   trajectories/<label>.csv, runs.csv, summary.json, epicurve.csv,
//   epicurve_summary.json and fairness_table.csv (when fair policies ran).
ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_experiment(const ExperimentSpec& spec, const ExperimentResult& result,
                      const std::string& dir);

std::string runs_csv(const ExperimentResult& result);
std::string experiment_summary_json(const ExperimentResult& result);
std::string fairness_table_csv(const ExperimentResult& result);

struct EpicurveEntry {
  std::string policy;
  std::uint64_t seed = 0;
  const Trajectory* trajectory = nullptr;
};

struct EpicurvePeak {
  std::string policy;
  int runs = 0;
  // Peak of the mean |I2| curve over the policy's runs (first maximum).
  double mean_curve_peak = 0.0;
  int mean_curve_peak_timestep = 0;
  // Means of the per-run peaks.
  double mean_peak = 0.0;
  double mean_peak_timestep = 0.0;
};

// Long format `policy,seed,timestep,I2`. Each trajectory is padded with
// zeros after extinction up to pad_to (or the longest trajectory).
std::string epicurve_csv(std::span<const EpicurveEntry> entries, int pad_to = -1);
// Policies in order of first appearance.
std::vector<EpicurvePeak> epicurve_peaks(std::span<const EpicurveEntry> entries,
                                         int pad_to = -1);
std::string epicurve_summary_json(std::span<const EpicurvePeak> peaks);

// Writes the CSV to path and the peak summary next to it
// (<path without .csv>_summary.json).
std::vector<EpicurvePeak> emit_epicurve(std::span<const EpicurveEntry> entries,
                                        const std::string& path, int pad_to = -1);

enum class BenchAlgorithm { kDegGreedy, kDepRound, kSegDegree, kRandom };
inline constexpr std::array<BenchAlgorithm, 4> kBenchAlgorithms = {
    BenchAlgorithm::kDegGreedy, BenchAlgorithm::kDepRound, BenchAlgorithm::kSegDegree,
    BenchAlgorithm::kRandom};
std::string bench_algorithm_name(BenchAlgorithm a);

struct BenchSpec {
  NetworkSource network;
  TracingMode mode = TracingMode::kManual;
  int budget = 5;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  SimulationConfig sim;  // policy used while harvesting
  int max_instances = 100;
  int max_v1 = 40;         // larger instances are skipped
  int rounding_seeds = 100;  // DepRound, SegDegree, Random repetitions
  double tol = 1e-6;
  BranchAndBoundOptions bb;
  std::string output_dir;
};

struct AlgorithmScore {
  double objective = 0.0;  // objective_exact, mean over seeds if randomized
  double factor = 0.0;     // objective / MILP optimum
  double seconds = 0.0;
};

struct BenchRecord {
  std::uint64_t source_seed = 0;
  int query = 0;  // index of the policy call within the run
  int num_infected = 0, num_v1 = 0, num_v2 = 0, num_edges = 0, max_v2_degree = 0;
  int budget = 0;
  double lp_value = 0.0;
  double milp_value = 0.0;
  bool proven = false;
  double milp_seconds = 0.0;
  std::array<AlgorithmScore, 4> scores{};
  int bucket = 0;  // |V1| quartile, 0..3
  int sandwich_violations = 0;
  int bound_violations = 0;
};

struct BenchBucket {
  int bucket = 0;
  int min_v1 = 0, max_v1 = 0;
  int count = 0;
  std::array<SummaryStat, 4> factor{};
  std::array<double, 4> max_factor{};
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::vector<BenchBucket> buckets;
  std::array<SummaryStat, 4> factor{};  // over proven records
  int sandwich_violations = 0;
  int bound_violations = 0;
  int unproven = 0;

  bool ok() const { return sandwich_violations == 0 && bound_violations == 0; }
};

struct HarvestedInstance {
  std::uint64_t seed = 0;
  int query = 0;  // index of the policy call within the run
  MinExposedInstance instance;
};

// Instances seen by the harvesting policy during MDP runs, in run order.
std::vector<HarvestedInstance> harvest_instances(const ContactNetwork& net,
                                                 const BenchSpec& spec);

// Scores every instance. Sandwich: LP <= MILP <= F(Q) for every Q produced.
// Bound: 1 - tol <= factor <= D + tol for DegGreedy and DepRound (mean).
BenchReport bench_instances(std::span<const HarvestedInstance> instances,
                            const BenchSpec& spec);

BenchReport bench_approx(const BenchSpec& spec);

std::string bench_records_csv(const BenchReport& report);
std::string bench_summary_json(const BenchReport& report);
void write_bench(const BenchReport& report, const std::string& dir);

// Reads network, mode, simulation and the bench section of a config file.
BenchSpec bench_spec_from_json(const std::string& text);

}  // namespace ctrace

#endif  // CTRACE_HARNESS_H_
