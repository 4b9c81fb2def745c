#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "mmbh/errors.hpp"
#include "mmbh/linear_model.hpp"

namespace mmbh {

// Variable status in a simplex basis; exposed so branch-and-bound can warm
// start child nodes from the parent basis.
enum class VarStatus : std::uint8_t {
  kBasic,
  kAtLower,
  kAtUpper,
  kFreeZero,
};

struct Basis {
  std::vector<int> basic;            // size m, variable index per row
  std::vector<VarStatus> status;     // size n + m
  bool valid() const { return !basic.empty(); }
};

struct SimplexOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-9;
  std::int64_t iter_limit = -1;      // -1: automatic
  int refactor_every = 64;
  int bland_after_degenerate = 500;  // degenerate pivots before Bland's rule
};

// Bounded-variable revised primal simplex. Constraint rows are augmented
// with logical variables, the basis inverse is kept as a sparse LU
// factorization plus a product-form eta file.
class SimplexSolver {
 public:
  SimplexSolver(const LinearModel& model, SimplexOptions opts = {})
      : model_(model), opts_(opts) {
    m_ = model.num_rows();
    n_ = model.num_vars();
    nt_ = n_ + m_;
    build_columns();
  }

  // Solves the LP relaxation (integrality marks ignored). `warm` may carry a
  // basis from a related model of identical shape.
  Solution solve(const Basis* warm = nullptr) {
    init_basis(warm);
    factorize();
    compute_basic_values();

    Solution sol;
    std::int64_t limit = opts_.iter_limit > 0
                             ? opts_.iter_limit
                             : 20000 + 200ll * (m_ + n_);
    degenerate_run_ = 0;
    std::int64_t iters = 0;

    while (true) {
      if (++iters > limit)
        throw NumericalFailure("simplex iteration limit exceeded (model hash " +
                               std::to_string(model_.hash()) + ")");
      bool feasible = infeasibility() <= opts_.feas_tol * (1.0 + bscale_);
      StepResult st = iterate(feasible);
      if (st == StepResult::kOptimal) {
        if (!feasible) {
          // phase-1 optimum with residual infeasibility
          sol.status = SolveStatus::kInfeasible;
          sol.iterations = iters;
          return sol;
        }
        break;
      }
      if (st == StepResult::kUnbounded) {
        if (feasible) {
          sol.status = SolveStatus::kUnbounded;
          sol.iterations = iters;
          return sol;
        }
        throw NumericalFailure("phase-1 unbounded (model hash " +
                               std::to_string(model_.hash()) + ")");
      }
    }

    sol.status = SolveStatus::kOptimal;
    sol.iterations = iters;
    sol.x.assign(n_, 0.0);
    std::vector<double> full = full_solution();
    for (int j = 0; j < n_; ++j) sol.x[j] = full[j];
    sol.objective = 0.0;
    for (auto [j, c] : model_.objective) sol.objective += c * sol.x[j];
    sol.best_bound = sol.objective;

    // duals and the dual objective for the duality self-check
    std::vector<double> y = duals();
    sol.duals = y;
    double dobj = 0.0;
    for (int i = 0; i < m_; ++i) dobj += y[i] * model_.rows[i].rhs;
    for (int j = 0; j < nt_; ++j) {
      if (status_[j] == VarStatus::kBasic || status_[j] == VarStatus::kFreeZero)
        continue;
      double dj = cost(j);
      for (int k = colptr_[j]; k < colptr_[j + 1]; ++k)
        dj -= y[rowind_[k]] * values_[k];
      double bound = status_[j] == VarStatus::kAtLower ? lo_[j] : hi_[j];
      dobj += dj * bound;
    }
    sol.dual_objective = dobj;
    return sol;
  }

  Basis basis() const {
    Basis b;
    b.basic = basic_;
    b.status = status_;
    return b;
  }

 private:
  enum class StepResult { kOptimal, kUnbounded, kPivoted };

  const LinearModel& model_;
  SimplexOptions opts_;
  int m_ = 0, n_ = 0, nt_ = 0;

  // columns of [A | I] in CSC form
  std::vector<int> colptr_, rowind_;
  std::vector<double> values_;
  std::vector<double> lo_, hi_, obj_;
  double bscale_ = 1.0;

  std::vector<int> basic_;
  std::vector<VarStatus> status_;
  std::vector<double> xb_;       // values of basic variables
  std::vector<int> row_of_;      // variable -> basis row (or -1)

  // mutable: SparseLU::adjoint() is a non-const accessor in Eigen 3.4
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  struct Eta {
    int row;
    std::vector<std::pair<int, double>> col;  // sparse alpha column
    double pivot;
  };
  std::vector<Eta> etas_;
  int degenerate_run_ = 0;

  double cost(int j) const { return j < n_ ? obj_[j] : 0.0; }

  void build_columns() {
    colptr_.assign(nt_ + 1, 0);
    std::vector<std::vector<std::pair<int, double>>> cols(nt_);
    for (int i = 0; i < m_; ++i)
      for (auto [j, c] : model_.rows[i].coeffs)
        if (c != 0.0) cols[j].emplace_back(i, c);
    for (int i = 0; i < m_; ++i) cols[n_ + i].emplace_back(i, 1.0);
    for (int j = 0; j < nt_; ++j) {
      std::sort(cols[j].begin(), cols[j].end());
      colptr_[j + 1] = colptr_[j] + static_cast<int>(cols[j].size());
      for (auto [i, c] : cols[j]) {
        rowind_.push_back(i);
        values_.push_back(c);
      }
    }
    lo_.assign(nt_, 0.0);
    hi_.assign(nt_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = model_.vars[j].lo;
      hi_[j] = model_.vars[j].hi;
    }
    for (int i = 0; i < m_; ++i) {
      switch (model_.rows[i].rel) {
        case Relation::kLe: lo_[n_ + i] = 0.0; hi_[n_ + i] = kInf; break;
        case Relation::kGe: lo_[n_ + i] = -kInf; hi_[n_ + i] = 0.0; break;
        case Relation::kEq: lo_[n_ + i] = 0.0; hi_[n_ + i] = 0.0; break;
      }
    }
    obj_.assign(n_, 0.0);
    for (auto [j, c] : model_.objective) obj_[j] += c;
    bscale_ = 0.0;
    for (const auto& r : model_.rows) bscale_ = std::max(bscale_, std::abs(r.rhs));
  }

  void init_basis(const Basis* warm) {
    bool ok = warm && warm->valid() &&
              static_cast<int>(warm->basic.size()) == m_ &&
              static_cast<int>(warm->status.size()) == nt_;
    if (ok) {
      basic_ = warm->basic;
      status_ = warm->status;
      // warm bases come from models with identical shape but possibly
      // different bounds; nonbasic vars snap to their current bounds
      for (int j = 0; j < nt_; ++j) {
        if (status_[j] == VarStatus::kBasic) continue;
        status_[j] = nonbasic_home(j);
      }
      for (int i = 0; i < m_; ++i) status_[basic_[i]] = VarStatus::kBasic;
    } else {
      basic_.resize(m_);
      status_.assign(nt_, VarStatus::kAtLower);
      for (int j = 0; j < n_; ++j) status_[j] = nonbasic_home(j);
      for (int i = 0; i < m_; ++i) {
        basic_[i] = n_ + i;
        status_[n_ + i] = VarStatus::kBasic;
      }
    }
    row_of_.assign(nt_, -1);
    for (int i = 0; i < m_; ++i) row_of_[basic_[i]] = i;
  }

  VarStatus nonbasic_home(int j) const {
    if (std::isfinite(lo_[j])) return VarStatus::kAtLower;
    if (std::isfinite(hi_[j])) return VarStatus::kAtUpper;
    return VarStatus::kFreeZero;
  }

  double nonbasic_value(int j) const {
    switch (status_[j]) {
      case VarStatus::kAtLower: return lo_[j];
      case VarStatus::kAtUpper: return hi_[j];
      default: return 0.0;
    }
  }

  void factorize() {
    Eigen::SparseMatrix<double> B(m_, m_);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < m_; ++i) {
      int j = basic_[i];
      for (int k = colptr_[j]; k < colptr_[j + 1]; ++k)
        trip.emplace_back(rowind_[k], i, values_[k]);
    }
    B.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(B);
    if (lu_.info() != Eigen::Success) {
      // singular basis: fall back to the all-logical basis
      basic_.resize(m_);
      for (int j = 0; j < nt_; ++j)
        if (status_[j] == VarStatus::kBasic) status_[j] = nonbasic_home(j);
      for (int i = 0; i < m_; ++i) {
        basic_[i] = n_ + i;
        status_[n_ + i] = VarStatus::kBasic;
      }
      row_of_.assign(nt_, -1);
      for (int i = 0; i < m_; ++i) row_of_[basic_[i]] = i;
      trip.clear();
      for (int i = 0; i < m_; ++i) trip.emplace_back(i, i, 1.0);
      B.setFromTriplets(trip.begin(), trip.end());
      lu_.compute(B);
      if (lu_.info() != Eigen::Success)
        throw NumericalFailure("basis factorization failed (model hash " +
                               std::to_string(model_.hash()) + ")");
    }
    etas_.clear();
  }

  // x = B^-1 a
  void ftran(Eigen::VectorXd& v) const {
    v = lu_.solve(v).eval();
    for (const auto& e : etas_) {
      double pr = v[e.row] / e.pivot;
      if (pr != 0.0) {
        for (auto [i, a] : e.col) v[i] -= a * pr;
      }
      v[e.row] = pr;
    }
  }

  // y^T = c^T B^-1
  void btran(Eigen::VectorXd& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->row];
      for (auto [i, a] : it->col) s -= a * v[i];
      v[it->row] = s / it->pivot;
    }
    v = lu_.adjoint().solve(v).eval();
  }

  void compute_basic_values() {
    Eigen::VectorXd rhs(m_);
    for (int i = 0; i < m_; ++i) rhs[i] = model_.rows[i].rhs;
    for (int j = 0; j < nt_; ++j) {
      if (status_[j] == VarStatus::kBasic) continue;
      double v = nonbasic_value(j);
      if (v == 0.0) continue;
      for (int k = colptr_[j]; k < colptr_[j + 1]; ++k)
        rhs[rowind_[k]] -= values_[k] * v;
    }
    ftran(rhs);
    xb_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) xb_[i] = rhs[i];
  }

  double infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) {
      int j = basic_[i];
      if (xb_[i] < lo_[j]) s += lo_[j] - xb_[i];
      if (xb_[i] > hi_[j]) s += xb_[i] - hi_[j];
    }
    return s;
  }

  std::vector<double> full_solution() const {
    std::vector<double> x(nt_);
    for (int j = 0; j < nt_; ++j)
      x[j] = status_[j] == VarStatus::kBasic ? xb_[row_of_[j]]
                                             : nonbasic_value(j);
    return x;
  }

  std::vector<double> duals() const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost(basic_[i]);
    btran(cb);
    std::vector<double> y(m_);
    for (int i = 0; i < m_; ++i) y[i] = cb[i];
    return y;
  }

  // One simplex iteration. In phase 1 (feasible == false) the objective is
  // the negated sum of bound violations of the basic variables.
  StepResult iterate(bool phase2) {
    double ftol = opts_.feas_tol * (1.0 + bscale_);
    Eigen::VectorXd y(m_);
    if (phase2) {
      for (int i = 0; i < m_; ++i) y[i] = cost(basic_[i]);
    } else {
      for (int i = 0; i < m_; ++i) {
        int j = basic_[i];
        if (xb_[i] > hi_[j] + ftol)
          y[i] = -1.0;  // want to decrease
        else if (xb_[i] < lo_[j] - ftol)
          y[i] = 1.0;   // want to increase
        else
          y[i] = 0.0;
      }
    }
    btran(y);

    // pricing: largest improvement, ties by lowest index; Bland's rule after
    // a long degenerate run
    bool bland = degenerate_run_ >= opts_.bland_after_degenerate;
    int enter = -1, dir = 0;
    double best = opts_.opt_tol;
    for (int j = 0; j < nt_; ++j) {
      if (status_[j] == VarStatus::kBasic) continue;
      double dj = phase2 ? cost(j) : 0.0;
      for (int k = colptr_[j]; k < colptr_[j + 1]; ++k)
        dj -= y[rowind_[k]] * values_[k];
      int d = 0;
      if (status_[j] == VarStatus::kAtLower && dj > opts_.opt_tol) d = 1;
      else if (status_[j] == VarStatus::kAtUpper && dj < -opts_.opt_tol) d = -1;
      else if (status_[j] == VarStatus::kFreeZero && std::abs(dj) > opts_.opt_tol)
        d = dj > 0 ? 1 : -1;
      if (!d) continue;
      if (bland) { enter = j; dir = d; break; }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        enter = j;
        dir = d;
      }
    }
    if (enter < 0) return StepResult::kOptimal;

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_);
    for (int k = colptr_[enter]; k < colptr_[enter + 1]; ++k)
      alpha[rowind_[k]] = values_[k];
    ftran(alpha);

    // ratio test: entering moves by t >= 0 in direction dir, basics move by
    // -dir*t*alpha. In phase 1 an infeasible basic blocks at the bound it is
    // approaching; a basic moving deeper into infeasibility does not block.
    double tmax = std::isfinite(hi_[enter]) && std::isfinite(lo_[enter])
                      ? hi_[enter] - lo_[enter]
                      : kInf;
    int leave = -1;          // basis row of leaving variable
    double t = tmax;
    int leave_to = 0;        // -1: leaves at lower, +1: leaves at upper
    const double piv_tol = 1e-9;
    for (int i = 0; i < m_; ++i) {
      double a = -dir * alpha[i];  // d(xb_i)/dt
      if (std::abs(a) < piv_tol) continue;
      int j = basic_[i];
      double cand = kInf;
      int to = 0;
      if (a > 0) {  // basic increases
        double target;
        if (xb_[i] < lo_[j] - ftol) target = lo_[j];        // infeasible below
        else if (xb_[i] > hi_[j] + ftol) continue;          // moving into range
        else target = hi_[j];
        if (!std::isfinite(target)) continue;
        cand = (target - xb_[i]) / a;
        to = target == lo_[j] ? -1 : 1;
      } else {      // basic decreases
        double target;
        if (xb_[i] > hi_[j] + ftol) target = hi_[j];        // infeasible above
        else if (xb_[i] < lo_[j] - ftol) continue;
        else target = lo_[j];
        if (!std::isfinite(target)) continue;
        cand = (target - xb_[i]) / a;
        to = target == lo_[j] ? -1 : 1;
      }
      if (cand < -ftol) cand = 0.0;
      cand = std::max(cand, 0.0);
      if (cand < t - 1e-12 ||
          (cand < t + 1e-12 && leave >= 0 &&
           (bland ? basic_[i] < basic_[leave]
                  : std::abs(alpha[i]) > std::abs(alpha[leave])))) {
        t = cand;
        leave = i;
        leave_to = to;
      }
    }

    if (!std::isfinite(t)) return StepResult::kUnbounded;

    if (t <= 1e-12) ++degenerate_run_; else degenerate_run_ = 0;

    if (leave < 0) {
      // entering hit its opposite bound first: bound flip, basis unchanged
      for (int i = 0; i < m_; ++i) xb_[i] -= dir * t * alpha[i];
      status_[enter] = status_[enter] == VarStatus::kAtLower
                           ? VarStatus::kAtUpper
                           : VarStatus::kAtLower;
      return StepResult::kPivoted;
    }

    if (std::abs(alpha[leave]) < 1e-10 && !etas_.empty()) {
      // unstable pivot: refactorize and retry from clean numbers
      factorize();
      compute_basic_values();
      return StepResult::kPivoted;
    }

    // apply step
    double enter_val = nonbasic_value(enter) + dir * t;
    for (int i = 0; i < m_; ++i) xb_[i] -= dir * t * alpha[i];

    int out_var = basic_[leave];
    status_[out_var] = leave_to < 0 ? VarStatus::kAtLower : VarStatus::kAtUpper;
    if (!std::isfinite(leave_to < 0 ? lo_[out_var] : hi_[out_var]))
      status_[out_var] = VarStatus::kFreeZero;
    row_of_[out_var] = -1;
    basic_[leave] = enter;
    row_of_[enter] = leave;
    status_[enter] = VarStatus::kBasic;
    xb_[leave] = enter_val;

    Eta e;
    e.row = leave;
    e.pivot = alpha[leave];
    for (int i = 0; i < m_; ++i)
      if (i != leave && alpha[i] != 0.0) e.col.emplace_back(i, alpha[i]);
    etas_.push_back(std::move(e));

    if (static_cast<int>(etas_.size()) >= opts_.refactor_every) {
      factorize();
      compute_basic_values();
    }
    return StepResult::kPivoted;
  }
};

// Solves the model as a pure LP (binary marks relaxed to their bounds).
inline Solution solve_lp(const LinearModel& model, SimplexOptions opts = {},
                         const Basis* warm = nullptr, Basis* out_basis = nullptr) {
  SimplexSolver s(model, opts);
  Solution sol = s.solve(warm);
  if (out_basis) *out_basis = s.basis();
  return sol;
}

}  // namespace mmbh
