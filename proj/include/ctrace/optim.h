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

// Linear programming engine for the quarantine program: a sparse
// bounded-variable revised primal simplex, a branch-and-bound driver for the
// binary x variables, an enumeration oracle and dependent rounding.
//
// The program solved for an instance is
//
//   min  sum_v z_v
//   s.t. sum_u x_u <= B
//        z_v >= p_u q_uv (1 - c_u x_u)            for (u, v) in E'
//        sum_{u in R_l} x_u <= B_l                 (optional, per label)
//        sum_{v in R_l} sum_u (1 - c_u x_u) p_u q_uv <= a_l   (optional)
//        x in [0, 1] (binary for the MILP), z in [0, 1]
//
// with y = 1 - x substituted out.

#ifndef CTRACE_OPTIM_H_
#define CTRACE_OPTIM_H_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctrace/common.h"
#include "ctrace/minexposed.h"
#include "ctrace/rng.h"

namespace ctrace {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { kLessEqual, kGreaterEqual, kEqual };

struct LpVariable {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  double cost = 0.0;
  bool integer = false;
};

struct LpRow {
  std::string name;
  std::vector<std::pair<int, double>> terms;  // (variable, coefficient)
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
};

// Minimization program with sparse rows.
class LinearProgram {
 public:
  int add_variable(std::string name, double lower, double upper, double cost,
                   bool integer = false);
  int add_row(std::string name, std::vector<std::pair<int, double>> terms,
              RowSense sense, double rhs);

  void set_objective_constant(double c) { objective_constant_ = c; }
  double objective_constant() const { return objective_constant_; }

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const LpVariable& variable(int j) const { return variables_[j]; }
  const LpRow& row(int i) const { return rows_[i]; }
  std::span<const LpVariable> variables() const { return variables_; }
  std::span<const LpRow> rows() const { return rows_; }

  // Fixed-format LP text (CPLEX LP dialect), one constraint per line.
  void write_lp_format(std::ostream& out) const;

 private:
  std::vector<LpVariable> variables_;
  std::vector<LpRow> rows_;
  double objective_constant_ = 0.0;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string lp_status_name(LpStatus status);

// Status of structural variables followed by one logical per row. A logical
// is the row slack r_i in  a_i x + r_i = b_i.
enum class BasisStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kFree };

struct LpBasis {
  std::vector<BasisStatus> status;
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 64;
  // Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_limit = 40;
  long long max_iterations = -1;  // -1: automatic
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> values;      // structural variables
  std::vector<double> row_duals;
  long long iterations = 0;
  double max_residual = 0.0;       // worst row or bound violation
  LpBasis basis;
};

// Optional overrides replace the variable bounds (used by branch and bound).
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {},
                    std::span<const double> lower = {},
                    std::span<const double> upper = {},
                    const LpBasis* start = nullptr);

struct MinExposedProgram {
  LinearProgram lp;
  std::vector<int> x_vars;  // per V1 position
  std::vector<int> z_vars;  // per V2 position
  int budget_row = -1;
  std::vector<int> coverage_rows;  // per E' edge
  std::vector<int> label_budget_rows;
  std::vector<int> cap_rows;
};

struct MilpBuildOptions {
  bool label_budgets = true;  // add the per-label budget rows when present
  bool exposure_caps = true;  // add the per-label cap rows when present
};

// Throws InvalidArgument if label budgets are present and do not sum to B.
MinExposedProgram build_milp(const MinExposedInstance& inst,
                             const MilpBuildOptions& options = {});

// Starting basis: every z basic on its largest coverage row, x at the given
// lower bounds. Feasible whenever there are no cap rows.
LpBasis crash_basis(const MinExposedProgram& program,
                    const MinExposedInstance& inst,
                    std::span<const double> x_lower);

struct FractionalSolution {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  double objective = 0.0;
  LpStatus status = LpStatus::kInfeasible;
  long long iterations = 0;
  double max_residual = 0.0;
};

// LP relaxation. Throws NumericalError if the simplex loses control of the
// basis; infeasibility (only possible with caps) is reported in status.
FractionalSolution solve_lp(const MinExposedProgram& program,
                            const MinExposedInstance& inst,
                            const SimplexOptions& options = {});

struct BranchAndBoundOptions {
  long long node_limit = 100000;
  double time_limit_seconds = 60.0;
  double integrality_tol = 1e-7;
  SimplexOptions simplex;
};

struct MilpResult {
  QuarantineSet q;
  double objective = kInfinity;  // incumbent value, infinity if none
  double bound = -kInfinity;     // proven lower bound
  bool proven_optimal = false;
  bool node_limit_hit = false;
  bool time_limit_hit = false;
  bool infeasible = false;
  long long nodes = 0;
};

// Depth-first branch and bound on the most fractional x, children explored
// best bound first. The incumbent is seeded with (fair) DegGreedy when that
// set is feasible.
MilpResult solve_milp_bb(const MinExposedProgram& program,
                         const MinExposedInstance& inst,
                         const BranchAndBoundOptions& options = {});

enum class BruteForceObjective {
  kExact,  // objective_exact
  kMilp,   // milp_objective_value
};

struct BruteForceResult {
  QuarantineSet q;
  double value = kInfinity;
  long long evaluated = 0;
};

inline constexpr long long kBruteForceCap = 2'000'000;

// Exhaustive minimizer over feasible sets, ties broken by the
// lexicographically smallest set. Throws InvalidArgument if C(|V1|, B)
// exceeds the cap.
BruteForceResult brute_force_opt(
    const MinExposedInstance& inst,
    BruteForceObjective objective = BruteForceObjective::kExact,
    long long cap = kBruteForceCap);

struct RoundedSolution {
  std::vector<int> values;  // 0/1 per coordinate
  QuarantineSet selected;   // coordinates equal to 1
};

// Dependent rounding: Pr[X_i = 1] = x_i, sum X <= budget always, negative
// correlation. Throws InvalidArgument if some x_i is outside [0, 1] or the
// sum exceeds the budget.
RoundedSolution dep_round(std::span<const double> x, int budget, Rng& rng);
RoundedSolution dep_round(std::span<const double> x, int budget,
                          std::uint64_t seed);

// Rounds each group independently under its own budget. group[i] indexes
// group_budgets.
RoundedSolution dep_round_grouped(std::span<const double> x,
                                  std::span<const int> group,
                                  std::span<const int> group_budgets, Rng& rng);

}  // namespace ctrace

#endif  // CTRACE_OPTIM_H_
