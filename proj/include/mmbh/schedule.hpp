#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmbh/branch_bound.hpp"
#include "mmbh/errors.hpp"
#include "mmbh/formulations.hpp"
#include "mmbh/interference_local.hpp"
#include "mmbh/net_model.hpp"
#include "mmbh/propagation.hpp"
#include "mmbh/simplex.hpp"

namespace mmbh {

// Ordered global activation patterns with their frame-time fractions.
struct Schedule {
  struct Slot {
    LinkSet pattern;
    double y = 0.0;
  };
  std::vector<Slot> slots;
  std::string provenance;

  double total_time() const {
    double s = 0.0;
    for (const auto& sl : slots) s += sl.y;
    return s;
  }
};

// Half-duplex / conflict / resource-sum invariants every schedule must obey.
inline void validate_schedule(const Schedule& sched, const Network& net,
                              const InterferenceMatrix& M) {
  double total = 0.0;
  for (const auto& sl : sched.slots) {
    if (!(sl.y >= 0.0)) throw InvalidParams("negative slot length");
    total += sl.y;
    for (int l : sl.pattern)
      if (l < 0 || l >= net.num_links())
        throw InvalidParams("pattern references unknown link");
    for (size_t i = 0; i < sl.pattern.size(); ++i)
      for (size_t j = i + 1; j < sl.pattern.size(); ++j) {
        int a = sl.pattern[i], b = sl.pattern[j];
        if (links_conflict(a, b, M) ||
            net.links[a].tx == net.links[b].rx ||
            net.links[a].rx == net.links[b].tx)
          throw InvalidParams("conflicting links " + std::to_string(a) +
                              " and " + std::to_string(b) + " share a slot");
      }
  }
  if (total > 1.0 + 1e-9) throw InvalidParams("slot lengths exceed the frame");
}

// Reads the slot structure out of a scalable-formulation solution: the m-th
// pattern is the union of the q = 1 local patterns, which must agree with
// each other on every neighborhood overlap.
inline Schedule extract_schedule(const Solution& sol, const VarMap& vm,
                                 const Network& net,
                                 const InterferenceMatrix& M,
                                 const NeighborhoodSet& nb,
                                 std::string provenance = "") {
  if (sol.status != SolveStatus::kOptimal &&
      sol.status != SolveStatus::kGapLimit)
    throw InvalidParams("cannot extract a schedule from status " +
                        to_string(sol.status));
  const int L = static_cast<int>(vm.local_patterns.size());
  Schedule sched;
  sched.provenance = std::move(provenance);
  for (int m = 0; m < vm.T; ++m) {
    double y = sol.x[vm.y[m]];
    if (y < 1e-9) continue;
    Schedule::Slot slot;
    slot.y = y;
    std::vector<std::pair<int, int>> chosen;  // (link, pattern index)
    for (int l = 0; l < L; ++l)
      for (size_t p = 0; p < vm.local_patterns[l].size(); ++p)
        if (sol.x[vm.q_var[l][m][p]] > 0.5 && sol.x[vm.z_var[l][m]] > 0.5)
          chosen.emplace_back(l, static_cast<int>(p));
    for (auto [l, p] : chosen)
      for (auto [k, pk] : chosen)
        if (l < k && !compatible(l, vm.local_patterns[l][p], k,
                                 vm.local_patterns[k][pk], nb))
          throw InconsistentSolution("slot " + std::to_string(m) +
                                     ": local patterns of links " +
                                     std::to_string(l) + " and " +
                                     std::to_string(k) + " disagree");
    LinkSet pat;
    for (auto [l, p] : chosen)
      for (int j : vm.local_patterns[l][p]) pat.push_back(j);
    std::sort(pat.begin(), pat.end());
    pat.erase(std::unique(pat.begin(), pat.end()), pat.end());
    if (pat.empty()) continue;
    slot.pattern = std::move(pat);
    sched.slots.push_back(std::move(slot));
  }
  validate_schedule(sched, net, M);
  return sched;
}

// Combinatorial solutions are schedules already: one slot per pattern.
inline Schedule schedule_from_allocation(const Allocation& alloc,
                                         const Network& net,
                                         const InterferenceMatrix& M,
                                         std::string provenance = "") {
  Schedule sched;
  sched.provenance = std::move(provenance);
  for (const auto& [pat, frac] : alloc.entries)
    if (frac > 1e-9) sched.slots.push_back({pat, frac});
  validate_schedule(sched, net, M);
  return sched;
}

struct ThroughputReport {
  std::vector<double> link_capacity;  // exact c_l under the full matrix
  std::vector<double> link_flow;      // dl + ul traffic routed through l
  std::vector<double> link_flow_dl, link_flow_ul;
  std::vector<double> d_node, u_node;
  double maxmin = 0.0;
  double total_rate = 0.0;  // sum of link flows, the delay proxy
};

// Exact (non-pessimistic) evaluation: per-link capacities from the full
// interference matrix, then a fixed-capacity max-min routing LP over the DL
// and UL commodities.
inline ThroughputReport evaluate_schedule(const Schedule& sched,
                                          const InterferenceMatrix& M,
                                          const Network& net,
                                          const ServiceWeights& w) {
  w.validate(net);
  validate_schedule(sched, net, M);
  const int L = net.num_links();

  ThroughputReport rep;
  rep.link_capacity.assign(L, 0.0);
  for (const auto& sl : sched.slots)
    for (int l : sl.pattern)
      rep.link_capacity[l] += sl.y * spectral_efficiency(l, sl.pattern, M);

  LinearModel m;
  std::vector<int> fd(L), fu(L);
  for (int l = 0; l < L; ++l) {
    fd[l] = m.add_var("fd" + std::to_string(l), 0.0, kInf);
    fu[l] = m.add_var("fu" + std::to_string(l), 0.0, kInf);
  }
  std::vector<int> dn(net.num_nodes(), -1), un(net.num_nodes(), -1);
  for (const auto& v : net.nodes)
    if (!v.is_gateway) {
      dn[v.id] = m.add_var("d" + std::to_string(v.id), 0.0, kInf);
      un[v.id] = m.add_var("u" + std::to_string(v.id), 0.0, kInf);
    }
  int vv = m.add_var("v", 0.0, kInf);
  for (int l = 0; l < L; ++l)
    m.add_row("cap_" + std::to_string(l), {{fd[l], 1.0}, {fu[l], 1.0}},
              Relation::kLe, rep.link_capacity[l]);
  detail::add_flow_rows(m, net, fd, dn, false, "dl");
  detail::add_flow_rows(m, net, fu, un, true, "ul");
  detail::add_service_rows(m, net, dn, w.alpha, vv, "dl");
  detail::add_service_rows(m, net, un, w.beta, vv, "ul");
  // a whiff of flow penalty keeps the routing from circulating
  std::vector<std::pair<int, double>> obj{{vv, 1.0}};
  double lambda = 1e-7 / std::max(1, L);
  for (int l = 0; l < L; ++l) {
    obj.emplace_back(fd[l], -lambda);
    obj.emplace_back(fu[l], -lambda);
  }
  m.set_objective(std::move(obj));

  Solution sol = solve_lp(m);
  if (sol.status != SolveStatus::kOptimal)
    throw NumericalFailure("routing LP failed: " + to_string(sol.status));

  rep.maxmin = sol.x[vv];
  rep.link_flow.assign(L, 0.0);
  rep.link_flow_dl.assign(L, 0.0);
  rep.link_flow_ul.assign(L, 0.0);
  for (int l = 0; l < L; ++l) {
    rep.link_flow_dl[l] = sol.x[fd[l]];
    rep.link_flow_ul[l] = sol.x[fu[l]];
    rep.link_flow[l] = rep.link_flow_dl[l] + rep.link_flow_ul[l];
    rep.total_rate += rep.link_flow[l];
  }
  rep.d_node.assign(net.num_nodes(), 0.0);
  rep.u_node.assign(net.num_nodes(), 0.0);
  for (const auto& v : net.nodes)
    if (!v.is_gateway) {
      rep.d_node[v.id] = sol.x[dn[v.id]];
      rep.u_node[v.id] = sol.x[un[v.id]];
    }
  return rep;
}

// Relative loss of candidate a against reference b, both evaluated exactly.
inline double degradation(const Schedule& a, const Schedule& b,
                          const InterferenceMatrix& M, const Network& net,
                          const ServiceWeights& w) {
  double ma = evaluate_schedule(a, M, net, w).maxmin;
  double mb = evaluate_schedule(b, M, net, w).maxmin;
  if (mb == 0.0) throw DivisionByZero("reference schedule delivers nothing");
  return (mb - ma) / mb;
}

// Interference matrix with every finite entry dropped; only the half-duplex
// conflicts remain. This is the "interference-agnostic" solver input.
inline InterferenceMatrix conflict_only_matrix(const InterferenceMatrix& M) {
  InterferenceMatrix out = M;
  for (auto& row : out.I)
    for (auto& v : row)
      if (!std::isinf(v)) v = 0.0;
  return out;
}

struct CapacityCheck {
  bool match = false;
  double opt_conflict_only = 0.0;
  double opt_full = 0.0;
};

// Compares the scalable DL optimum under the conflict-only matrix against
// the full matrix.
inline CapacityCheck interference_free_capacity_check(
    const Network& net, const InterferenceMatrix& M, int T,
    const ServiceWeights& w, const MilpOptions& opts = {},
    double tolerance = 0.02, double threshold_db = 3.0) {
  CapacityCheck out;
  InterferenceMatrix C = conflict_only_matrix(M);
  {
    NeighborhoodSet nb = build_neighborhoods(C, threshold_db);
    auto bm = build_scalable_dl(net, C, nb, T, w);
    out.opt_conflict_only = solve_milp(bm.model, opts).x[bm.map.d];
  }
  {
    NeighborhoodSet nb = build_neighborhoods(M, threshold_db);
    auto bm = build_scalable_dl(net, M, nb, T, w);
    out.opt_full = solve_milp(bm.model, opts).x[bm.map.d];
  }
  double ref = std::max(out.opt_conflict_only, out.opt_full);
  out.match = ref == 0.0 ||
              std::abs(out.opt_conflict_only - out.opt_full) / ref <= tolerance;
  return out;
}

// ---- serialization ----

inline nlohmann::json to_json(const Schedule& s) {
  nlohmann::json j;
  j["provenance"] = s.provenance;
  j["slots"] = nlohmann::json::array();
  for (const auto& sl : s.slots)
    j["slots"].push_back({{"pattern", sl.pattern}, {"y", sl.y}});
  return j;
}

inline Schedule schedule_from_json(const nlohmann::json& j) {
  Schedule s;
  s.provenance = j.at("provenance");
  for (const auto& sj : j.at("slots"))
    s.slots.push_back({sj.at("pattern").get<LinkSet>(), sj.at("y")});
  return s;
}

// CSV schema: one "node" row per node (id, dl service, ul service) followed
// by one "link" row per link (id, capacity, utilization).
inline std::string report_to_csv(const ThroughputReport& rep,
                                 const Network& net) {
  std::string out = "type,id,a,b\n";
  char buf[128];
  for (const auto& v : net.nodes) {
    if (v.is_gateway) continue;
    std::snprintf(buf, sizeof(buf), "node,%d,%.12g,%.12g\n", v.id,
                  rep.d_node[v.id], rep.u_node[v.id]);
    out += buf;
  }
  for (int l = 0; l < net.num_links(); ++l) {
    double util = rep.link_capacity[l] > 0.0
                      ? rep.link_flow[l] / rep.link_capacity[l]
                      : 0.0;
    std::snprintf(buf, sizeof(buf), "link,%d,%.12g,%.12g\n", l,
                  rep.link_capacity[l], util);
    out += buf;
  }
  return out;
}

}  // namespace mmbh
