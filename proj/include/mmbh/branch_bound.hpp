#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <queue>
#include <vector>

#include "mmbh/errors.hpp"
#include "mmbh/linear_model.hpp"
#include "mmbh/simplex.hpp"

namespace mmbh {

struct MilpOptions {
  double gap_tol = 1e-4;
  std::int64_t node_limit = 2'000'000;
  double time_limit_sec = kInf;
  double int_tol = 1e-6;
  int dive_every = 64;      // run the rounding dive on every k-th node
  int dive_lp_limit = 400;  // LP solves allowed per dive
  // Optional starting point: binary entries are rounded and pinned, the LP
  // over the continuous variables supplies the rest. Ignored if infeasible.
  std::vector<double> warm_start;
  SimplexOptions lp;
};

namespace detail {

struct FixChain {
  int var;
  double value;
  std::shared_ptr<const FixChain> parent;
};

struct BnbNode {
  double bound;
  std::int64_t id;
  std::shared_ptr<const FixChain> fixes;
  std::shared_ptr<const Basis> warm;
};

struct NodeOrder {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // max-heap on bound
    return a.id > b.id;                                // then FIFO
  }
};

inline void apply_fixes(LinearModel& work, const LinearModel& base,
                        const FixChain* f) {
  for (; f; f = f->parent.get()) {
    work.vars[f->var].lo = f->value;
    work.vars[f->var].hi = f->value;
  }
  (void)base;
}

inline void clear_fixes(LinearModel& work, const LinearModel& base,
                        const FixChain* f) {
  for (; f; f = f->parent.get()) {
    work.vars[f->var].lo = base.vars[f->var].lo;
    work.vars[f->var].hi = base.vars[f->var].hi;
  }
}

}  // namespace detail

// Branch-and-bound over the binary variables of `model`. Best-bound node
// selection, branching on the most fractional binary (ties by lowest
// index). Incumbents are polished by re-solving with all binaries fixed so
// they sit exactly on their bounds.
class BranchAndBound {
 public:
  BranchAndBound(const LinearModel& model, MilpOptions opts = {})
      : base_(model), work_(model), opts_(opts) {
    for (int j = 0; j < model.num_vars(); ++j)
      if (model.vars[j].is_binary && model.vars[j].lo < model.vars[j].hi)
        binaries_.push_back(j);
  }

  Solution run() {
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           t0)
          .count();
    };

    Solution result;
    std::priority_queue<detail::BnbNode, std::vector<detail::BnbNode>,
                        detail::NodeOrder>
        open;
    std::int64_t next_id = 0, explored = 0;

    Basis root_basis;
    Solution root = solve_lp(work_, opts_.lp, nullptr, &root_basis);
    if (root.status == SolveStatus::kInfeasible ||
        root.status == SolveStatus::kUnbounded) {
      result.status = root.status;
      return result;
    }
    result.iterations += root.iterations;

    open.push({root.objective, next_id++, nullptr,
               std::make_shared<Basis>(root_basis)});

    bool have_inc = false;
    Solution incumbent;
    double bound = root.objective;

    if (static_cast<int>(opts_.warm_start.size()) == base_.num_vars()) {
      Solution seed;
      seed.x = opts_.warm_start;
      Solution cand = polish(seed, nullptr, nullptr);
      if (cand.status == SolveStatus::kOptimal) {
        incumbent = cand;
        have_inc = true;
      }
    }

    auto gap = [&] {
      if (!have_inc) return kInf;
      return (bound - incumbent.objective) /
             std::max(1.0, std::abs(incumbent.objective));
    };

    while (!open.empty()) {
      bound = std::min(bound, open.top().bound);
      if (gap() <= opts_.gap_tol) break;
      if (explored >= opts_.node_limit || elapsed() > opts_.time_limit_sec) {
        if (!have_inc)
          throw NodeLimitNoIncumbent("node/time limit hit with no incumbent");
        result = incumbent;
        result.status = SolveStatus::kGapLimit;
        result.best_bound = bound;
        result.gap = gap();
        result.nodes = explored;
        return result;
      }

      detail::BnbNode node = open.top();
      open.pop();
      if (have_inc &&
          node.bound <= incumbent.objective +
                            opts_.gap_tol * std::max(1.0, std::abs(incumbent.objective)))
        continue;

      ++explored;
      detail::apply_fixes(work_, base_, node.fixes.get());
      Basis node_basis;
      Solution lp = solve_lp(work_, opts_.lp, node.warm.get(), &node_basis);
      result.iterations += lp.iterations;

      if (lp.status != SolveStatus::kOptimal) {
        detail::clear_fixes(work_, base_, node.fixes.get());
        continue;  // infeasible subproblem
      }
      if (have_inc && lp.objective <= incumbent.objective + 1e-12) {
        detail::clear_fixes(work_, base_, node.fixes.get());
        continue;
      }

      int branch_var = most_fractional(lp.x);
      if (branch_var < 0) {
        // integral: polish and accept
        Solution cand = polish(lp, node.fixes, &node_basis);
        if (cand.status == SolveStatus::kOptimal &&
            (!have_inc || cand.objective > incumbent.objective + 1e-12)) {
          incumbent = cand;
          have_inc = true;
        }
        detail::clear_fixes(work_, base_, node.fixes.get());
        continue;
      }

      if (!have_inc || explored % opts_.dive_every == 1) {
        Solution cand = dive(lp, node.fixes, node_basis);
        if (cand.status == SolveStatus::kOptimal &&
            (!have_inc || cand.objective > incumbent.objective + 1e-12)) {
          incumbent = cand;
          have_inc = true;
        }
      }

      detail::clear_fixes(work_, base_, node.fixes.get());

      auto basis = std::make_shared<Basis>(std::move(node_basis));
      for (double v : {1.0, 0.0}) {
        auto fix = std::make_shared<detail::FixChain>(
            detail::FixChain{branch_var, v, node.fixes});
        open.push({lp.objective, next_id++, fix, basis});
      }
    }

    if (!have_inc) {
      result.status = SolveStatus::kInfeasible;
      return result;
    }
    if (!open.empty()) bound = std::min(bound, std::max(open.top().bound, incumbent.objective));
    else bound = incumbent.objective;
    double g = (bound - incumbent.objective) /
               std::max(1.0, std::abs(incumbent.objective));
    auto iters = result.iterations;
    result = incumbent;
    result.iterations += iters;
    result.status = SolveStatus::kOptimal;
    result.best_bound = bound;
    result.gap = std::max(0.0, g);
    result.nodes = explored;
    return result;
  }

 private:
  LinearModel base_;
  LinearModel work_;
  MilpOptions opts_;
  std::vector<int> binaries_;

  int most_fractional(const std::vector<double>& x) const {
    int best = -1, bp = 0;
    double bf = opts_.int_tol;
    for (int j : binaries_) {
      double dist = std::min(std::abs(x[j]), std::abs(1.0 - x[j]));
      if (dist <= opts_.int_tol) continue;
      int p = base_.vars[j].branch_priority;
      if (best < 0 || p > bp || (p == bp && dist > bf + 1e-15)) {
        bp = p;
        bf = dist;
        best = j;
      }
    }
    return best;
  }

  // re-solve with every binary pinned to its rounded value so the incumbent
  // satisfies integrality exactly
  Solution polish(const Solution& lp,
                  const std::shared_ptr<const detail::FixChain>& fixes,
                  const Basis* warm) {
    for (int j : binaries_) {
      double v = lp.x[j] > 0.5 ? 1.0 : 0.0;
      work_.vars[j].lo = v;
      work_.vars[j].hi = v;
    }
    Solution s = solve_lp(work_, opts_.lp, warm);
    for (int j : binaries_) {
      work_.vars[j].lo = base_.vars[j].lo;
      work_.vars[j].hi = base_.vars[j].hi;
    }
    detail::apply_fixes(work_, base_, fixes.get());
    return s;
  }

  // LP-guided dive: repeatedly pin near-integral binaries and round the most
  // fractional one, re-solving warm, until integral or stuck.
  Solution dive(const Solution& start,
                const std::shared_ptr<const detail::FixChain>& fixes,
                const Basis& start_basis) {
    std::vector<double> x = start.x;
    Basis basis = start_basis;
    std::vector<int> pinned;
    Solution fail;
    fail.status = SolveStatus::kInfeasible;

    auto pin = [&](int j, double v) {
      work_.vars[j].lo = v;
      work_.vars[j].hi = v;
      pinned.push_back(j);
    };
    auto unpin_all = [&] {
      for (int j : pinned) {
        work_.vars[j].lo = base_.vars[j].lo;
        work_.vars[j].hi = base_.vars[j].hi;
      }
      detail::apply_fixes(work_, base_, fixes.get());
      pinned.clear();
    };

    Solution lp = start;
    for (int iter = 0; iter < opts_.dive_lp_limit; ++iter) {
      // pin everything already integral, then the single most fractional
      for (int j : binaries_)
        if (work_.vars[j].lo < work_.vars[j].hi) {
          double v = x[j];
          if (v < opts_.int_tol) pin(j, 0.0);
          else if (v > 1.0 - opts_.int_tol) pin(j, 1.0);
        }
      int frac = -1, fp = 0;
      double bestd = -1.0;
      for (int j : binaries_)
        if (work_.vars[j].lo < work_.vars[j].hi) {
          double dist = std::min(x[j], 1.0 - x[j]);
          int p = base_.vars[j].branch_priority;
          if (frac < 0 || p > fp || (p == fp && dist > bestd + 1e-15)) {
            fp = p;
            bestd = dist;
            frac = j;
          }
        }
      if (frac < 0) {
        // fully pinned: final LP gives the candidate
        Solution cand = solve_lp(work_, opts_.lp, &basis);
        unpin_all();
        return cand;
      }
      double v = x[frac] >= 0.5 ? 1.0 : 0.0;
      pin(frac, v);
      Solution trial = solve_lp(work_, opts_.lp, &basis, &basis);
      if (trial.status != SolveStatus::kOptimal) {
        // flip the failing decision; if both directions die the dive region
        // is empty
        work_.vars[frac].lo = 1.0 - v;
        work_.vars[frac].hi = 1.0 - v;
        trial = solve_lp(work_, opts_.lp, &basis, &basis);
        if (trial.status != SolveStatus::kOptimal) {
          unpin_all();
          return fail;
        }
      }
      lp = trial;
      x = lp.x;
    }
    unpin_all();
    return fail;
  }
};

inline Solution solve_milp(const LinearModel& model, MilpOptions opts = {}) {
  if (!model.has_binaries()) {
    Solution s = solve_lp(model, opts.lp);
    s.best_bound = s.objective;
    return s;
  }
  BranchAndBound bb(model, opts);
  return bb.run();
}

inline Solution solve_milp(const LinearModel& model, double gap_tol,
                           std::int64_t node_limit) {
  MilpOptions o;
  o.gap_tol = gap_tol;
  o.node_limit = node_limit;
  return solve_milp(model, o);
}

}  // namespace mmbh
