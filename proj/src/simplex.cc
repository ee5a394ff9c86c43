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

// Sparse bounded-variable revised primal simplex.
//
// Every row i gets a logical variable r_i with  a_i x + r_i = b_i, bounded
// by the row sense (<=: r >= 0, >=: r <= 0, =: r = 0). The basis inverse is
// kept as a sparse LU of the last refactorized basis followed by a product
// of eta matrices. Phase 1 minimizes the sum of bound violations of basic
// variables; phase 2 uses Dantzig pricing with a Harris ratio test, and
// falls back to Bland's rule after a run of degenerate pivots.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "ctrace/optim.h"
#include "text_util.h"

namespace ctrace {

int LinearProgram::add_variable(std::string name, double lower, double upper,
                                double cost, bool integer) {
  if (!(lower <= upper)) {
    throw InvalidArgument("variable " + name + " has lower bound above upper");
  }
  variables_.push_back({std::move(name), lower, upper, cost, integer});
  return num_variables() - 1;
}

int LinearProgram::add_row(std::string name,
                           std::vector<std::pair<int, double>> terms,
                           RowSense sense, double rhs) {
  for (const auto& [j, a] : terms) {
    if (j < 0 || j >= num_variables()) {
      throw InvalidArgument("row " + name + " references an undeclared variable");
    }
    if (!std::isfinite(a)) {
      throw InvalidArgument("row " + name + " has a non-finite coefficient");
    }
  }
  rows_.push_back({std::move(name), std::move(terms), sense, rhs});
  return num_rows() - 1;
}

namespace {

void write_term(std::ostream& out, double a, const std::string& name, bool first) {
  if (a < 0) {
    out << "- ";
  } else if (!first) {
    out << "+ ";
  }
  const double mag = std::fabs(a);
  if (mag != 1.0) out << text::format_double(mag) << ' ';
  out << name;
}

std::string bound_text(double v) {
  if (v == kInfinity) return "+inf";
  if (v == -kInfinity) return "-inf";
  return text::format_double(v);
}

}  // namespace

void LinearProgram::write_lp_format(std::ostream& out) const {
  out << "\\ generated by ctrace\nMinimize\n obj:";
  bool first = true;
  for (const LpVariable& v : variables_) {
    if (v.cost == 0.0) continue;
    out << ' ';
    write_term(out, v.cost, v.name, first);
    first = false;
  }
  if (objective_constant_ != 0.0 || first) {
    out << (first ? " " : " + ") << text::format_double(objective_constant_);
  }
  out << "\nSubject To\n";
  for (const LpRow& r : rows_) {
    out << ' ' << r.name << ':';
    bool f = true;
    for (const auto& [j, a] : r.terms) {
      out << ' ';
      write_term(out, a, variables_[j].name, f);
      f = false;
    }
    if (f) out << " 0 " << variables_.front().name;
    switch (r.sense) {
      case RowSense::kLessEqual: out << " <= "; break;
      case RowSense::kGreaterEqual: out << " >= "; break;
      case RowSense::kEqual: out << " = "; break;
    }
    out << text::format_double(r.rhs) << '\n';
  }
  out << "Bounds\n";
  for (const LpVariable& v : variables_) {
    out << ' ' << bound_text(v.lower) << " <= " << v.name << " <= "
        << bound_text(v.upper) << '\n';
  }
  bool any_int = false;
  for (const LpVariable& v : variables_) any_int |= v.integer;
  if (any_int) {
    out << "Generals\n";
    for (const LpVariable& v : variables_) {
      if (v.integer) out << ' ' << v.name << '\n';
    }
  }
  out << "End\n";
}

std::string lp_status_name(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using DenseVector = Eigen::VectorXd;

class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const SimplexOptions& options,
                 std::span<const double> lower, std::span<const double> upper)
      : lp_(lp), opt_(options), m_(lp.num_rows()), n_(lp.num_variables()) {
    const int total = n_ + m_;
    lo_.resize(total);
    hi_.resize(total);
    cost_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) {
      const LpVariable& v = lp.variable(j);
      lo_[j] = lower.empty() ? v.lower : lower[j];
      hi_[j] = upper.empty() ? v.upper : upper[j];
      if (!(lo_[j] <= hi_[j])) {
        throw InvalidArgument("bound override leaves " + v.name + " empty");
      }
      cost_[j] = v.cost;
    }
    // Column-major copy of the structural part of A.
    std::vector<int> count(n_ + 1, 0);
    for (const LpRow& r : lp.rows()) {
      for (const auto& [j, a] : r.terms) ++count[j + 1];
    }
    for (int j = 0; j < n_; ++j) count[j + 1] += count[j];
    col_start_ = count;
    col_row_.resize(count[n_]);
    col_val_.resize(count[n_]);
    std::vector<int> fill(count.begin(), count.end() - 1);
    b_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      const LpRow& r = lp.row(i);
      b_[i] = r.rhs;
      for (const auto& [j, a] : r.terms) {
        col_row_[fill[j]] = i;
        col_val_[fill[j]++] = a;
      }
      const int s = n_ + i;
      switch (r.sense) {
        case RowSense::kLessEqual: lo_[s] = 0.0; hi_[s] = kInfinity; break;
        case RowSense::kGreaterEqual: lo_[s] = -kInfinity; hi_[s] = 0.0; break;
        case RowSense::kEqual: lo_[s] = 0.0; hi_[s] = 0.0; break;
      }
    }
    max_iterations_ = opt_.max_iterations > 0
                          ? opt_.max_iterations
                          : 50LL * (m_ + n_) + 10000;
  }

  LpSolution run(const LpBasis* start) {
    if (!(start && install_basis(*start))) install_slack_basis();
    LpSolution out;
    out.status = iterate();
    out.iterations = iterations_;
    out.values.assign(x_.begin(), x_.begin() + n_);
    double obj = lp_.objective_constant();
    for (int j = 0; j < n_; ++j) obj += cost_[j] * x_[j];
    out.objective = obj;
    out.row_duals = duals_;
    out.max_residual = residual(out.values);
    out.basis.status = state_;
    return out;
  }

 private:
  struct Eta {
    int r;
    double pivot;
    std::vector<std::pair<int, double>> col;
  };

  // ---- basis bookkeeping -------------------------------------------------

  double initial_value(int j, BasisStatus s) const {
    switch (s) {
      case BasisStatus::kAtLower: return lo_[j];
      case BasisStatus::kAtUpper: return hi_[j];
      default: return 0.0;
    }
  }

  BasisStatus default_nonbasic(int j) const {
    if (std::isfinite(lo_[j])) return BasisStatus::kAtLower;
    if (std::isfinite(hi_[j])) return BasisStatus::kAtUpper;
    return BasisStatus::kFree;
  }

  void install_slack_basis() {
    const int total = n_ + m_;
    state_.assign(total, BasisStatus::kAtLower);
    x_.assign(total, 0.0);
    head_.resize(m_);
    for (int j = 0; j < n_; ++j) {
      state_[j] = default_nonbasic(j);
      x_[j] = initial_value(j, state_[j]);
    }
    for (int i = 0; i < m_; ++i) {
      state_[n_ + i] = BasisStatus::kBasic;
      head_[i] = n_ + i;
    }
    if (!refactor()) throw NumericalError("slack basis failed to factorize");
  }

  bool install_basis(const LpBasis& basis) {
    const int total = n_ + m_;
    if (static_cast<int>(basis.status.size()) != total) return false;
    state_ = basis.status;
    x_.assign(total, 0.0);
    head_.clear();
    for (int j = 0; j < total; ++j) {
      if (state_[j] == BasisStatus::kBasic) {
        head_.push_back(j);
        continue;
      }
      // Repair statuses that point at infinite bounds.
      if ((state_[j] == BasisStatus::kAtLower && !std::isfinite(lo_[j])) ||
          (state_[j] == BasisStatus::kAtUpper && !std::isfinite(hi_[j])) ||
          state_[j] == BasisStatus::kFree) {
        state_[j] = default_nonbasic(j);
      }
      x_[j] = initial_value(j, state_[j]);
    }
    if (static_cast<int>(head_.size()) != m_) return false;
    return refactor();
  }

  void column(int j, std::vector<std::pair<int, double>>& out) const {
    out.clear();
    if (j < n_) {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
        out.emplace_back(col_row_[k], col_val_[k]);
      }
    } else {
      out.emplace_back(j - n_, 1.0);
    }
  }

  // Rebuilds the LU of the current basis and recomputes basic values.
  bool refactor() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m_ * 2);
    std::vector<std::pair<int, double>> col;
    for (int i = 0; i < m_; ++i) {
      column(head_[i], col);
      for (const auto& [r, a] : col) trip.emplace_back(r, i, a);
    }
    SparseMatrix basis(m_, m_);
    basis.setFromTriplets(trip.begin(), trip.end());
    basis.makeCompressed();
    etas_.clear();
    if (m_ == 0) return true;
    lu_.analyzePattern(basis);
    lu_.factorize(basis);
    if (lu_.info() != Eigen::Success) return false;
    recompute_basics();
    return true;
  }

  void recompute_basics() {
    if (m_ == 0) return;
    DenseVector rhs(m_);
    for (int i = 0; i < m_; ++i) rhs[i] = b_[i];
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == BasisStatus::kBasic || x_[j] == 0.0) continue;
      if (j < n_) {
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
          rhs[col_row_[k]] -= col_val_[k] * x_[j];
        }
      } else {
        rhs[j - n_] -= x_[j];
      }
    }
    DenseVector xb = ftran(rhs);
    for (int i = 0; i < m_; ++i) x_[head_[i]] = xb[i];
  }

  DenseVector ftran(const DenseVector& a) const {
    DenseVector y = lu_.solve(a);
    for (const Eta& e : etas_) {
      const double t = y[e.r] / e.pivot;
      y[e.r] = t;
      if (t == 0.0) continue;
      for (const auto& [i, alpha] : e.col) y[i] -= alpha * t;
    }
    return y;
  }

  DenseVector btran(DenseVector c) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = c[it->r];
      for (const auto& [i, alpha] : it->col) s -= c[i] * alpha;
      c[it->r] = s / it->pivot;
    }
    return lu_.transpose().solve(c);
  }

  // ---- pricing -----------------------------------------------------------

  double reduced_cost(int j, const DenseVector& pi, bool phase1) const {
    const double c = phase1 ? 0.0 : cost_[j];
    if (j >= n_) return c - pi[j - n_];
    double d = c;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      d -= pi[col_row_[k]] * col_val_[k];
    }
    return d;
  }

  // Returns (entering variable, direction) or (-1, 0).
  std::pair<int, int> price(const DenseVector& pi, bool phase1) const {
    int best = -1;
    int best_dir = 0;
    double best_score = 0.0;
    const double tol = opt_.optimality_tol;
    for (int j = 0; j < n_ + m_; ++j) {
      const BasisStatus s = state_[j];
      if (s == BasisStatus::kBasic || lo_[j] == hi_[j]) continue;
      const double d = reduced_cost(j, pi, phase1);
      int dir = 0;
      if ((s == BasisStatus::kAtLower || s == BasisStatus::kFree) && d < -tol) {
        dir = 1;
      } else if ((s == BasisStatus::kAtUpper || s == BasisStatus::kFree) && d > tol) {
        dir = -1;
      }
      if (dir == 0) continue;
      if (bland_) return {j, dir};
      if (std::fabs(d) > best_score) {
        best_score = std::fabs(d);
        best = j;
        best_dir = dir;
      }
    }
    return {best, best_dir};
  }

  // ---- main loop ---------------------------------------------------------

  double infeasibility(int j) const {
    const double tol = opt_.feasibility_tol;
    if (x_[j] < lo_[j] - tol) return lo_[j] - x_[j];
    if (x_[j] > hi_[j] + tol) return x_[j] - hi_[j];
    return 0.0;
  }

  LpStatus iterate() {
    int verify_rounds = 0;
    while (true) {
      if (iterations_ >= max_iterations_) return LpStatus::kIterationLimit;
      // Phase 1 cost on basic variables.
      bool phase1 = false;
      DenseVector cb(m_);
      for (int i = 0; i < m_; ++i) {
        const int j = head_[i];
        const double tol = opt_.feasibility_tol;
        if (x_[j] < lo_[j] - tol) {
          cb[i] = -1.0;
          phase1 = true;
        } else if (x_[j] > hi_[j] + tol) {
          cb[i] = 1.0;
          phase1 = true;
        } else {
          cb[i] = 0.0;
        }
      }
      if (!phase1) {
        for (int i = 0; i < m_; ++i) cb[i] = cost_[head_[i]];
      }
      const DenseVector pi = m_ > 0 ? btran(cb) : DenseVector();
      const auto [q, dir] = price(pi, phase1);
      if (q < 0) {
        // Confirm on a fresh factorization before declaring a result.
        if (!etas_.empty() && verify_rounds < 3) {
          ++verify_rounds;
          if (!refactor()) throw NumericalError(singular_message());
          continue;
        }
        if (phase1) return LpStatus::kInfeasible;
        duals_.assign(pi.data(), pi.data() + m_);
        return LpStatus::kOptimal;
      }
      verify_rounds = 0;
      if (!pivot(q, dir, phase1)) return LpStatus::kUnbounded;
      ++iterations_;
    }
  }

  // One simplex step on entering variable q moving in direction dir.
  // Returns false if the step is unbounded.
  bool pivot(int q, int dir, bool phase1) {
    std::vector<std::pair<int, double>> col;
    column(q, col);
    DenseVector aq = DenseVector::Zero(m_);
    for (const auto& [r, a] : col) aq[r] = a;
    const DenseVector alpha = m_ > 0 ? ftran(aq) : DenseVector();

    const double tol = opt_.feasibility_tol;
    const double ptol = opt_.pivot_tol;
    // Pass 1: largest step allowed with bounds relaxed by tol.
    double t_max = kInfinity;
    for (int i = 0; i < m_; ++i) {
      const double a = alpha[i];
      if (std::fabs(a) <= ptol) continue;
      const double limit = step_limit(head_[i], -dir * a, tol, phase1);
      t_max = std::min(t_max, limit);
    }
    const double range = hi_[q] - lo_[q];
    // Pass 2: among rows blocking within t_max, take the largest pivot.
    int leave = -1;
    double leave_step = kInfinity;
    double best_pivot = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double a = alpha[i];
      if (std::fabs(a) <= ptol) continue;
      const double limit = step_limit(head_[i], -dir * a, 0.0, phase1);
      if (!std::isfinite(limit) || limit > t_max) continue;
      const bool better =
          bland_ ? (leave < 0 || head_[i] < head_[leave])
                 : std::fabs(a) > best_pivot;
      if (better) {
        leave = i;
        leave_step = std::max(0.0, limit);
        best_pivot = std::fabs(a);
      }
    }
    if (std::isfinite(range) && range <= t_max &&
        (leave < 0 || range <= leave_step)) {
      // Bound flip: the entering variable reaches its other bound first.
      apply_step(q, dir, range, alpha);
      state_[q] = dir > 0 ? BasisStatus::kAtUpper : BasisStatus::kAtLower;
      x_[q] = dir > 0 ? hi_[q] : lo_[q];
      track_degeneracy(range);
      return true;
    }
    if (leave < 0) return false;

    apply_step(q, dir, leave_step, alpha);
    const int out = head_[leave];
    const double rate = -dir * alpha[leave];
    // Which bound the leaving variable reached.
    bool to_lower = rate < 0;
    if (phase1) {
      if (x_[out] < lo_[out] - tol && rate > 0) to_lower = true;
      if (x_[out] > hi_[out] + tol && rate < 0) to_lower = false;
    }
    if (to_lower && std::isfinite(lo_[out])) {
      x_[out] = lo_[out];
      state_[out] = BasisStatus::kAtLower;
    } else if (std::isfinite(hi_[out])) {
      x_[out] = hi_[out];
      state_[out] = BasisStatus::kAtUpper;
    } else {
      x_[out] = lo_[out];
      state_[out] = BasisStatus::kAtLower;
    }
    state_[q] = BasisStatus::kBasic;
    head_[leave] = q;

    Eta eta{leave, alpha[leave], {}};
    for (int i = 0; i < m_; ++i) {
      if (i != leave && alpha[i] != 0.0) eta.col.emplace_back(i, alpha[i]);
    }
    etas_.push_back(std::move(eta));
    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
      if (!refactor()) throw NumericalError(singular_message());
    }
    track_degeneracy(leave_step);
    return true;
  }

  // Step length until basic variable j, changing at `rate` per unit step,
  // blocks. Bounds are relaxed by tol. In phase 1 an infeasible variable
  // blocks where it becomes feasible and never blocks moving away.
  double step_limit(int j, double rate, double tol, bool phase1) const {
    const double v = x_[j];
    if (phase1 && v < lo_[j] - opt_.feasibility_tol) {
      return rate > 0 ? (lo_[j] - v + tol) / rate : kInfinity;
    }
    if (phase1 && v > hi_[j] + opt_.feasibility_tol) {
      return rate < 0 ? (v - hi_[j] + tol) / -rate : kInfinity;
    }
    if (rate < 0) {
      return std::isfinite(lo_[j]) ? std::max(0.0, v - lo_[j] + tol) / -rate
                                   : kInfinity;
    }
    return std::isfinite(hi_[j]) ? std::max(0.0, hi_[j] - v + tol) / rate
                                 : kInfinity;
  }

  void apply_step(int q, int dir, double t, const DenseVector& alpha) {
    if (t == 0.0) return;
    x_[q] += dir * t;
    for (int i = 0; i < m_; ++i) {
      if (alpha[i] != 0.0) x_[head_[i]] -= dir * alpha[i] * t;
    }
  }

  void track_degeneracy(double step) {
    if (step > 1e-12) {
      degenerate_run_ = 0;
      bland_ = false;
      return;
    }
    if (++degenerate_run_ > opt_.degenerate_limit) bland_ = true;
  }

  std::string singular_message() const {
    std::ostringstream s;
    s << "basis became singular after " << iterations_ << " iterations (m=" << m_
      << ", n=" << n_ << ", etas=" << etas_.size() << ")";
    return s.str();
  }

  double residual(const std::vector<double>& values) const {
    double worst = 0.0;
    for (int j = 0; j < n_; ++j) {
      worst = std::max(worst, lo_[j] - values[j]);
      worst = std::max(worst, values[j] - hi_[j]);
    }
    for (int i = 0; i < m_; ++i) {
      const LpRow& r = lp_.row(i);
      double act = 0.0;
      for (const auto& [j, a] : r.terms) act += a * values[j];
      switch (r.sense) {
        case RowSense::kLessEqual: worst = std::max(worst, act - r.rhs); break;
        case RowSense::kGreaterEqual: worst = std::max(worst, r.rhs - act); break;
        case RowSense::kEqual: worst = std::max(worst, std::fabs(act - r.rhs)); break;
      }
    }
    return worst;
  }

  const LinearProgram& lp_;
  SimplexOptions opt_;
  int m_;
  int n_;
  long long max_iterations_;
  std::vector<double> lo_, hi_, cost_, b_;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<BasisStatus> state_;
  std::vector<double> x_;
  std::vector<int> head_;
  std::vector<Eta> etas_;
  std::vector<double> duals_;
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  long long iterations_ = 0;
  int degenerate_run_ = 0;
  bool bland_ = false;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options,
                    std::span<const double> lower, std::span<const double> upper,
                    const LpBasis* start) {
  if ((!lower.empty() && static_cast<int>(lower.size()) != lp.num_variables()) ||
      (!upper.empty() && static_cast<int>(upper.size()) != lp.num_variables())) {
    throw InvalidArgument("bound override size does not match the program");
  }
  RevisedSimplex simplex(lp, options, lower, upper);
  return simplex.run(start);
}

}  // namespace ctrace
