#pragma once

#include <chrono>
#include <string>

#include "mmbh/branch_bound.hpp"
#include "mmbh/errors.hpp"
#include "mmbh/formulations.hpp"
#include "mmbh/schedule.hpp"
#include "mmbh/simplex.hpp"

namespace mmbh {

enum class Formulation { kCombDl, kCombUldl, kScalDl, kScalUldl };

inline Formulation parse_formulation(const std::string& s) {
  if (s == "comb-dl") return Formulation::kCombDl;
  if (s == "comb-uldl") return Formulation::kCombUldl;
  if (s == "scal-dl") return Formulation::kScalDl;
  if (s == "scal-uldl") return Formulation::kScalUldl;
  throw InvalidParams("unknown formulation '" + s + "'");
}

inline std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::kCombDl: return "comb-dl";
    case Formulation::kCombUldl: return "comb-uldl";
    case Formulation::kScalDl: return "scal-dl";
    case Formulation::kScalUldl: return "scal-uldl";
  }
  return "?";
}

inline bool is_scalable(Formulation f) {
  return f == Formulation::kScalDl || f == Formulation::kScalUldl;
}

// One end-to-end run: model build, solve, schedule extraction, exact
// evaluation. `objective` is the max-min service level (d or c), without the
// delay-penalty term.
struct SolveOutcome {
  Solution sol;
  VarMap map;
  Schedule schedule;
  ThroughputReport report;
  double objective = 0.0;
  double gap = 0.0;
  double wall_sec = 0.0;
};

struct SolveSettings {
  Formulation formulation = Formulation::kScalDl;
  int slots = 4;           // scalable only
  double lambda = -1.0;    // delay penalty; <0 selects the default, dl only
  double beta_ratio = 0.0; // uplink weight relative to downlink
  double nb_threshold_db = 3.0;
  int nb_cap = 12;
  int pattern_cap = 16;    // combinatorial link budget
  MilpOptions milp;
};

inline SolveOutcome run_solve(const Network& net, const InterferenceMatrix& M,
                              const SolveSettings& s,
                              std::string* mps_out = nullptr) {
  ServiceWeights w = ServiceWeights::uniform(net, s.beta_ratio);
  auto t0 = std::chrono::steady_clock::now();

  SolveOutcome out;
  BuiltModel bm;
  NeighborhoodSet nb;
  switch (s.formulation) {
    case Formulation::kCombDl:
      bm = build_combinatorial_dl(net, M, w, s.lambda, s.pattern_cap);
      break;
    case Formulation::kCombUldl:
      bm = build_combinatorial_uldl(net, M, w, s.pattern_cap);
      break;
    case Formulation::kScalDl:
      nb = build_neighborhoods(M, s.nb_threshold_db, s.nb_cap);
      bm = build_scalable_dl(net, M, nb, s.slots, w, s.lambda);
      break;
    case Formulation::kScalUldl:
      nb = build_neighborhoods(M, s.nb_threshold_db, s.nb_cap);
      bm = build_scalable_uldl(net, M, nb, s.slots, w);
      break;
  }
  if (mps_out) *mps_out = export_model(bm.model);

  if (is_scalable(s.formulation)) {
    MilpOptions milp = s.milp;
    if (milp.warm_start.empty()) {
      Solution relax = solve_lp(bm.model, milp.lp);
      milp.warm_start = greedy_warm_start(bm, relax, net, M, nb, w);
    }
    out.sol = solve_milp(bm.model, milp);
    out.schedule =
        extract_schedule(out.sol, bm.map, net, M, nb, to_string(s.formulation));
  } else {
    out.sol = solve_lp(bm.model, s.milp.lp);
    if (out.sol.status == SolveStatus::kInfeasible)
      throw InfeasibleModel("combinatorial LP infeasible");
    if (out.sol.status != SolveStatus::kOptimal)
      throw NumericalFailure("LP solve failed: " + to_string(out.sol.status));
    Allocation alloc =
        sparsify_allocation(allocation_from_solution(out.sol, bm.map), net, M);
    out.schedule =
        schedule_from_allocation(alloc, net, M, to_string(s.formulation));
  }
  out.map = bm.map;
  out.gap = out.sol.gap;
  bool uldl = s.formulation == Formulation::kCombUldl ||
              s.formulation == Formulation::kScalUldl;
  out.objective = out.sol.x[uldl ? out.map.c : out.map.d];
  out.report = evaluate_schedule(out.schedule, M, net, w);
  out.wall_sec = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return out;
}

}  // namespace mmbh
