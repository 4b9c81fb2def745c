#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mmbh/errors.hpp"
#include "mmbh/interference_local.hpp"
#include "mmbh/linear_model.hpp"
#include "mmbh/net_model.hpp"
#include "mmbh/propagation.hpp"

namespace mmbh {

// Per-node service weights, indexed by node id; gateway entries are ignored.
struct ServiceWeights {
  std::vector<double> alpha;
  std::vector<double> beta;

  static ServiceWeights uniform(const Network& net, double beta_ratio = 0.0) {
    ServiceWeights w;
    w.alpha.assign(net.num_nodes(), 0.0);
    w.beta.assign(net.num_nodes(), 0.0);
    for (const auto& v : net.nodes)
      if (!v.is_gateway) {
        w.alpha[v.id] = 1.0;
        w.beta[v.id] = beta_ratio;
      }
    return w;
  }

  double alpha_sum(const Network& net) const {
    double s = 0.0;
    for (const auto& v : net.nodes)
      if (!v.is_gateway) s += alpha[v.id];
    return s;
  }

  void validate(const Network& net) const {
    if (static_cast<int>(alpha.size()) != net.num_nodes() ||
        static_cast<int>(beta.size()) != net.num_nodes())
      throw InvalidParams("weight vectors must cover every node");
    double total = 0.0;
    for (const auto& v : net.nodes) {
      if (v.is_gateway) continue;
      if (alpha[v.id] < 0.0 || beta[v.id] < 0.0)
        throw InvalidParams("service weights must be nonnegative");
      total += alpha[v.id] + beta[v.id];
    }
    if (total <= 0.0) throw InvalidParams("service weights are all zero");
  }
};

// Time-share over global activation patterns.
struct Allocation {
  std::vector<std::pair<LinkSet, double>> entries;

  double total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.second;
    return s;
  }
};

// Variable bookkeeping for a built model, used to extract allocations and
// schedules from solutions and exported alongside MPS files.
struct VarMap {
  // combinatorial: pattern list parallel to x variable indices
  std::vector<LinkSet> patterns;
  std::vector<int> x_pattern;

  // shared: per-link rate vars (r = downlink or single direction)
  std::vector<int> r, r_up;
  std::vector<int> d_node, u_node;  // per node id, -1 for gateways
  int d = -1, c = -1;

  // scalable: T slots; per-link local patterns with per-slot q/x variables
  int T = 0;
  std::vector<int> y;
  std::vector<std::vector<LinkSet>> local_patterns;       // [l][p]
  std::vector<std::vector<double>> local_gamma;           // [l][p]
  std::vector<std::vector<std::vector<int>>> q_var;       // [l][m][p]
  std::vector<std::vector<std::vector<int>>> x_var;       // [l][m][p]
  std::vector<std::vector<int>> z_var;                    // [l][m]
};

struct BuiltModel {
  LinearModel model;
  VarMap map;
};

inline double priority_bound(const Network& net, const ServiceWeights& w) {
  double sa = w.alpha_sum(net);
  if (sa <= 0.0) throw InvalidParams("downlink weights are all zero");
  return 1.0 / (net.num_links() * sa);
}

// Default delay-penalty weight: half the bound that keeps service priority.
inline double default_lambda(const Network& net, const ServiceWeights& w) {
  return 0.5 * priority_bound(net, w);
}

inline void check_lambda(double lambda, const Network& net,
                         const ServiceWeights& w) {
  if (lambda < 0.0) throw InvalidParams("lambda must be nonnegative");
  if (lambda != 0.0 && lambda >= priority_bound(net, w))
    throw PriorityBoundViolation("lambda " + std::to_string(lambda) +
                                 " >= 1/(L*sum(alpha))");
}

// All nonempty conflict-free global activation patterns. Patterns with an
// infinite-interference pair are dominated (the conflicted links carry zero
// rate) and skipped.
inline std::vector<LinkSet> enumerate_global_patterns(
    const InterferenceMatrix& M, int pattern_cap = 16) {
  const int L = M.num_links();
  if (L > pattern_cap)
    throw TooManyLinks("combinatorial enumeration needs L <= " +
                       std::to_string(pattern_cap) + ", got " +
                       std::to_string(L));
  std::vector<LinkSet> out;
  LinkSet cur;
  auto rec = [&](auto&& self, int l) -> void {
    if (l == L) {
      if (!cur.empty()) out.push_back(cur);
      return;
    }
    self(self, l + 1);
    for (int m : cur)
      if (links_conflict(l, m, M)) return;
    cur.push_back(l);
    self(self, l + 1);
    cur.pop_back();
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Flow-conservation rows shared by every formulation. Downlink: the service
// d_i is the net inflow of the dl commodity at node i; uplink mirrors it with
// net outflow. Gateways are unconstrained sources/sinks.
inline void add_flow_rows(LinearModel& m, const Network& net,
                          const std::vector<int>& rate_var,
                          const std::vector<int>& service_var, bool uplink,
                          const std::string& tag) {
  for (const auto& v : net.nodes) {
    if (v.is_gateway) continue;
    std::vector<std::pair<int, double>> row{{service_var[v.id], 1.0}};
    for (const auto& l : net.links) {
      double in = uplink ? -1.0 : 1.0;
      if (l.rx == v.id) row.emplace_back(rate_var[l.id], -in);
      if (l.tx == v.id) row.emplace_back(rate_var[l.id], in);
    }
    m.add_row(tag + "_flow_" + std::to_string(v.id), std::move(row),
              Relation::kEq, 0.0);
  }
}

inline void add_service_rows(LinearModel& m, const Network& net,
                             const std::vector<int>& service_var,
                             const std::vector<double>& weight, int level_var,
                             const std::string& tag) {
  for (const auto& v : net.nodes) {
    if (v.is_gateway) continue;
    m.add_row(tag + "_svc_" + std::to_string(v.id),
              {{service_var[v.id], 1.0}, {level_var, -weight[v.id]}},
              Relation::kGe, 0.0);
  }
}

}  // namespace detail

// Max-min downlink LP over explicit global patterns with the delay-penalized
// objective d - lambda * sum(r_l). lambda < 0 selects the default.
inline BuiltModel build_combinatorial_dl(const Network& net,
                                         const InterferenceMatrix& M,
                                         const ServiceWeights& w,
                                         double lambda = -1.0,
                                         int pattern_cap = 16) {
  w.validate(net);
  if (lambda < 0.0) lambda = default_lambda(net, w);
  check_lambda(lambda, net, w);
  const int L = net.num_links();

  BuiltModel bm;
  LinearModel& m = bm.model;
  VarMap& vm = bm.map;
  vm.patterns = enumerate_global_patterns(M, pattern_cap);

  for (size_t a = 0; a < vm.patterns.size(); ++a)
    vm.x_pattern.push_back(m.add_var("x" + std::to_string(a), 0.0, 1.0));
  for (int l = 0; l < L; ++l)
    vm.r.push_back(m.add_var("r" + std::to_string(l), 0.0, kInf));
  vm.d_node.assign(net.num_nodes(), -1);
  for (const auto& v : net.nodes)
    if (!v.is_gateway)
      vm.d_node[v.id] = m.add_var("d" + std::to_string(v.id), 0.0, kInf);
  vm.d = m.add_var("d", 0.0, kInf);

  // link rate ties to the time share (equality as in the base formulation;
  // single-link subpatterns always exist, so this never forces waste)
  for (int l = 0; l < L; ++l) {
    std::vector<std::pair<int, double>> row{{vm.r[l], 1.0}};
    for (size_t a = 0; a < vm.patterns.size(); ++a)
      if (set_contains(vm.patterns[a], l))
        row.emplace_back(vm.x_pattern[a],
                         -spectral_efficiency(l, vm.patterns[a], M));
    m.add_row("rate_" + std::to_string(l), std::move(row), Relation::kEq, 0.0);
  }
  detail::add_flow_rows(m, net, vm.r, vm.d_node, false, "dl");
  detail::add_service_rows(m, net, vm.d_node, w.alpha, vm.d, "dl");
  {
    std::vector<std::pair<int, double>> row;
    for (int x : vm.x_pattern) row.emplace_back(x, 1.0);
    m.add_row("frame", std::move(row), Relation::kLe, 1.0);
  }
  std::vector<std::pair<int, double>> obj{{vm.d, 1.0}};
  if (lambda > 0.0)
    for (int l = 0; l < L; ++l) obj.emplace_back(vm.r[l], -lambda);
  m.set_objective(std::move(obj));
  return bm;
}

// Joint uplink/downlink LP: link time shares split into dl and ul rates,
// both commodities routed, objective is the common service level c with
// d_i >= alpha_i c and u_i >= beta_i c.
inline BuiltModel build_combinatorial_uldl(const Network& net,
                                           const InterferenceMatrix& M,
                                           const ServiceWeights& w,
                                           int pattern_cap = 16) {
  w.validate(net);
  const int L = net.num_links();

  BuiltModel bm;
  LinearModel& m = bm.model;
  VarMap& vm = bm.map;
  vm.patterns = enumerate_global_patterns(M, pattern_cap);

  for (size_t a = 0; a < vm.patterns.size(); ++a)
    vm.x_pattern.push_back(m.add_var("x" + std::to_string(a), 0.0, 1.0));
  for (int l = 0; l < L; ++l) {
    vm.r.push_back(m.add_var("rd" + std::to_string(l), 0.0, kInf));
    vm.r_up.push_back(m.add_var("ru" + std::to_string(l), 0.0, kInf));
  }
  vm.d_node.assign(net.num_nodes(), -1);
  vm.u_node.assign(net.num_nodes(), -1);
  for (const auto& v : net.nodes)
    if (!v.is_gateway) {
      vm.d_node[v.id] = m.add_var("d" + std::to_string(v.id), 0.0, kInf);
      vm.u_node[v.id] = m.add_var("u" + std::to_string(v.id), 0.0, kInf);
    }
  vm.c = m.add_var("c", 0.0, kInf);

  for (int l = 0; l < L; ++l) {
    std::vector<std::pair<int, double>> row{{vm.r[l], 1.0}, {vm.r_up[l], 1.0}};
    for (size_t a = 0; a < vm.patterns.size(); ++a)
      if (set_contains(vm.patterns[a], l))
        row.emplace_back(vm.x_pattern[a],
                         -spectral_efficiency(l, vm.patterns[a], M));
    m.add_row("rate_" + std::to_string(l), std::move(row), Relation::kEq, 0.0);
  }
  detail::add_flow_rows(m, net, vm.r, vm.d_node, false, "dl");
  detail::add_flow_rows(m, net, vm.r_up, vm.u_node, true, "ul");
  detail::add_service_rows(m, net, vm.d_node, w.alpha, vm.c, "dl");
  detail::add_service_rows(m, net, vm.u_node, w.beta, vm.c, "ul");
  {
    std::vector<std::pair<int, double>> row;
    for (int x : vm.x_pattern) row.emplace_back(x, 1.0);
    m.add_row("frame", std::move(row), Relation::kLe, 1.0);
  }
  m.set_objective({{vm.c, 1.0}});
  return bm;
}

namespace detail {

// Scalable slot machinery shared by the DL and UL/DL builders: slot lengths
// y_m, per-link activation binaries z_l^m, local-pattern selectors q with
// their time shares x, and the consistency rows that force each active
// link's chosen local pattern to equal the true activation state of its
// neighborhood. Conflict pairs exclude each other directly through z.
inline void build_scalable_core(LinearModel& m, VarMap& vm, const Network& net,
                                const InterferenceMatrix& M,
                                const NeighborhoodSet& nb, int T) {
  if (T < 1) throw InvalidParams("slot count T must be >= 1");
  const int L = net.num_links();
  vm.T = T;
  vm.local_patterns.resize(L);
  vm.local_gamma.resize(L);
  for (int l = 0; l < L; ++l) {
    vm.local_patterns[l] = enumerate_local_patterns(l, M, nb);
    for (const auto& b : vm.local_patterns[l])
      vm.local_gamma[l].push_back(local_spectral_efficiency(l, b, M, nb));
  }

  for (int mIdx = 0; mIdx < T; ++mIdx)
    vm.y.push_back(m.add_var("y" + std::to_string(mIdx), 0.0, 1.0));
  vm.z_var.assign(L, {});
  vm.q_var.assign(L, {});
  vm.x_var.assign(L, {});
  for (int l = 0; l < L; ++l) {
    vm.q_var[l].resize(T);
    vm.x_var[l].resize(T);
    for (int mIdx = 0; mIdx < T; ++mIdx) {
      std::string sm = std::to_string(l) + "_" + std::to_string(mIdx);
      // integral z forces the q selectors integral via the claim rows, so
      // branching concentrates on z
      int zv = m.add_var("z" + sm, 0.0, 1.0, true);
      m.vars[zv].branch_priority = 1;
      vm.z_var[l].push_back(zv);
      for (size_t p = 0; p < vm.local_patterns[l].size(); ++p) {
        std::string sp = sm + "_" + std::to_string(p);
        vm.q_var[l][mIdx].push_back(m.add_var("q" + sp, 0.0, 1.0, true));
        vm.x_var[l][mIdx].push_back(m.add_var("xs" + sp, 0.0, 1.0));
      }
    }
  }

  for (int mIdx = 0; mIdx < T; ++mIdx) {
    std::string sm = std::to_string(mIdx);
    for (int l = 0; l < L; ++l) {
      std::string sl = std::to_string(l) + "_" + sm;
      // active links pick exactly one local pattern
      std::vector<std::pair<int, double>> pick{{vm.z_var[l][mIdx], -1.0}};
      for (int q : vm.q_var[l][mIdx]) pick.emplace_back(q, 1.0);
      m.add_row("pick_" + sl, std::move(pick), Relation::kEq, 0.0);

      // the chosen pattern must claim neighbor j active iff z_j says so
      for (int j : nb.neighbors[l]) {
        if (j == l || links_conflict(j, l, M)) continue;
        std::vector<std::pair<int, double>> up{{vm.z_var[j][mIdx], -1.0}};
        std::vector<std::pair<int, double>> down{{vm.z_var[j][mIdx], 1.0}};
        for (size_t p = 0; p < vm.local_patterns[l].size(); ++p)
          (set_contains(vm.local_patterns[l][p], j) ? up : down)
              .emplace_back(vm.q_var[l][mIdx][p], 1.0);
        m.add_row("claim_" + sl + "_" + std::to_string(j), std::move(up),
                  Relation::kLe, 0.0);
        m.add_row("deny_" + sl + "_" + std::to_string(j), std::move(down),
                  Relation::kLe, 1.0);
      }

      // time share only inside the chosen pattern, bounded by the slot
      std::vector<std::pair<int, double>> share{{vm.y[mIdx], -1.0}};
      for (size_t p = 0; p < vm.local_patterns[l].size(); ++p) {
        m.add_row("onoff_" + sl + "_" + std::to_string(p),
                  {{vm.x_var[l][mIdx][p], 1.0}, {vm.q_var[l][mIdx][p], -1.0}},
                  Relation::kLe, 0.0);
        share.emplace_back(vm.x_var[l][mIdx][p], 1.0);
      }
      m.add_row("share_" + sl, std::move(share), Relation::kLe, 0.0);
    }

    // half-duplex conflicts exclude each other outright; their slot shares
    // cannot overlap either, which tightens the LP relaxation
    for (int l = 0; l < L; ++l)
      for (int j : nb.neighbors[l]) {
        if (j <= l || !links_conflict(j, l, M)) continue;
        std::string sp = std::to_string(l) + "_" + std::to_string(j) + "_" + sm;
        m.add_row("hd_" + sp,
                  {{vm.z_var[l][mIdx], 1.0}, {vm.z_var[j][mIdx], 1.0}},
                  Relation::kLe, 1.0);
        std::vector<std::pair<int, double>> pair{{vm.y[mIdx], -1.0}};
        for (int x : vm.x_var[l][mIdx]) pair.emplace_back(x, 1.0);
        for (int x : vm.x_var[j][mIdx]) pair.emplace_back(x, 1.0);
        m.add_row("hdshare_" + sp, std::move(pair), Relation::kLe, 0.0);

        // conflict triangles (directed 3-cycles) are cliques: at most one of
        // the three links runs per slot, and their shares cannot overlap
        for (int k : nb.neighbors[l]) {
          if (k <= j || !links_conflict(k, l, M) || !links_conflict(k, j, M))
            continue;
          std::string st = sp + "_" + std::to_string(k);
          m.add_row("tri_" + st,
                    {{vm.z_var[l][mIdx], 1.0},
                     {vm.z_var[j][mIdx], 1.0},
                     {vm.z_var[k][mIdx], 1.0}},
                    Relation::kLe, 1.0);
          std::vector<std::pair<int, double>> tri{{vm.y[mIdx], -1.0}};
          for (int x : vm.x_var[l][mIdx]) tri.emplace_back(x, 1.0);
          for (int x : vm.x_var[j][mIdx]) tri.emplace_back(x, 1.0);
          for (int x : vm.x_var[k][mIdx]) tri.emplace_back(x, 1.0);
          m.add_row("trishare_" + st, std::move(tri), Relation::kLe, 0.0);
        }
      }
  }

  {
    std::vector<std::pair<int, double>> row;
    for (int y : vm.y) row.emplace_back(y, 1.0);
    m.add_row("frame", std::move(row), Relation::kLe, 1.0);
  }
  // slot-permutation symmetry breaking
  for (int mIdx = 0; mIdx + 1 < T; ++mIdx)
    m.add_row("order_" + std::to_string(mIdx),
              {{vm.y[mIdx], 1.0}, {vm.y[mIdx + 1], -1.0}}, Relation::kGe, 0.0);
}

// Negligible penalty on activations: silences the z binaries of unused
// slots, which otherwise generate vast plateaus of equivalent solutions,
// and makes relaxation z values track the time shares actually used (which
// guides rounding heuristics). Must stay above the simplex optimality
// tolerance to take effect; the objective shift is < 1e-8 * L * T.
inline void add_activation_tiebreak(std::vector<std::pair<int, double>>& obj,
                                    const VarMap& vm) {
  for (const auto& zs : vm.z_var)
    for (int z : zs) obj.emplace_back(z, -1e-8);
}

// Rate rows are relaxed to <= : truncated slot counts make the exact
// equality over-constraining without changing the achievable service.
inline void add_scalable_rate_rows(LinearModel& m, const VarMap& vm,
                                   const std::vector<int>& rate_vars,
                                   const std::vector<int>& rate_vars2) {
  const int L = static_cast<int>(vm.local_patterns.size());
  for (int l = 0; l < L; ++l) {
    std::vector<std::pair<int, double>> row{{rate_vars[l], 1.0}};
    if (!rate_vars2.empty()) row.emplace_back(rate_vars2[l], 1.0);
    for (int mIdx = 0; mIdx < vm.T; ++mIdx)
      for (size_t p = 0; p < vm.local_patterns[l].size(); ++p)
        row.emplace_back(vm.x_var[l][mIdx][p], -vm.local_gamma[l][p]);
    m.add_row("rate_" + std::to_string(l), std::move(row), Relation::kLe, 0.0);
  }
}

}  // namespace detail

// Scalable downlink BLP over per-link local patterns and T time slots.
inline BuiltModel build_scalable_dl(const Network& net,
                                    const InterferenceMatrix& M,
                                    const NeighborhoodSet& nb, int T,
                                    const ServiceWeights& w,
                                    double lambda = -1.0) {
  w.validate(net);
  if (lambda < 0.0) lambda = default_lambda(net, w);
  check_lambda(lambda, net, w);
  const int L = net.num_links();

  BuiltModel bm;
  LinearModel& m = bm.model;
  VarMap& vm = bm.map;
  detail::build_scalable_core(m, vm, net, M, nb, T);

  for (int l = 0; l < L; ++l)
    vm.r.push_back(m.add_var("r" + std::to_string(l), 0.0, kInf));
  vm.d_node.assign(net.num_nodes(), -1);
  for (const auto& v : net.nodes)
    if (!v.is_gateway)
      vm.d_node[v.id] = m.add_var("d" + std::to_string(v.id), 0.0, kInf);
  vm.d = m.add_var("d", 0.0, kInf);

  detail::add_scalable_rate_rows(m, vm, vm.r, {});
  detail::add_flow_rows(m, net, vm.r, vm.d_node, false, "dl");
  detail::add_service_rows(m, net, vm.d_node, w.alpha, vm.d, "dl");

  std::vector<std::pair<int, double>> obj{{vm.d, 1.0}};
  if (lambda > 0.0)
    for (int l = 0; l < L; ++l) obj.emplace_back(vm.r[l], -lambda);
  detail::add_activation_tiebreak(obj, vm);
  m.set_objective(std::move(obj));
  return bm;
}

// Scalable joint uplink/downlink BLP; objective is the service level c.
inline BuiltModel build_scalable_uldl(const Network& net,
                                      const InterferenceMatrix& M,
                                      const NeighborhoodSet& nb, int T,
                                      const ServiceWeights& w) {
  w.validate(net);
  const int L = net.num_links();

  BuiltModel bm;
  LinearModel& m = bm.model;
  VarMap& vm = bm.map;
  detail::build_scalable_core(m, vm, net, M, nb, T);

  for (int l = 0; l < L; ++l) {
    vm.r.push_back(m.add_var("rd" + std::to_string(l), 0.0, kInf));
    vm.r_up.push_back(m.add_var("ru" + std::to_string(l), 0.0, kInf));
  }
  vm.d_node.assign(net.num_nodes(), -1);
  vm.u_node.assign(net.num_nodes(), -1);
  for (const auto& v : net.nodes)
    if (!v.is_gateway) {
      vm.d_node[v.id] = m.add_var("d" + std::to_string(v.id), 0.0, kInf);
      vm.u_node[v.id] = m.add_var("u" + std::to_string(v.id), 0.0, kInf);
    }
  vm.c = m.add_var("c", 0.0, kInf);

  detail::add_scalable_rate_rows(m, vm, vm.r, vm.r_up);
  detail::add_flow_rows(m, net, vm.r, vm.d_node, false, "dl");
  detail::add_flow_rows(m, net, vm.r_up, vm.u_node, true, "ul");
  detail::add_service_rows(m, net, vm.d_node, w.alpha, vm.c, "dl");
  detail::add_service_rows(m, net, vm.u_node, w.beta, vm.c, "ul");
  std::vector<std::pair<int, double>> obj{{vm.c, 1.0}};
  detail::add_activation_tiebreak(obj, vm);
  m.set_objective(std::move(obj));
  return bm;
}

// Multiplies every finite nonzero interference entry by (1+u),
// u ~ U(-magnitude, magnitude); breaks LP degeneracy ties.
inline InterferenceMatrix perturb_interference(const InterferenceMatrix& M,
                                               double magnitude,
                                               std::uint64_t seed) {
  if (!(magnitude > 0.0) || magnitude > 1e-2)
    throw InvalidParams("perturbation magnitude must be in (0, 1e-2]");
  InterferenceMatrix out = M;
  Rng rng(derive_seed(seed, "perturb"));
  for (int k = 0; k < M.num_links(); ++k)
    for (int l = 0; l < M.num_links(); ++l) {
      double v = M.I[k][l];
      if (v == 0.0 || std::isinf(v)) continue;
      out.I[k][l] = v * (1.0 + rng.uniform(-magnitude, magnitude));
    }
  return out;
}

// Net per-node service rates implied by an allocation when every link carries
// its full rate (the flow-conservation identity evaluated at r = sum x*gamma).
inline std::vector<double> node_service_from_allocation(
    const Allocation& alloc, const Network& net, const InterferenceMatrix& M) {
  std::vector<double> r(net.num_links(), 0.0);
  for (const auto& [pat, frac] : alloc.entries)
    for (int l : pat) r[l] += frac * spectral_efficiency(l, pat, M);
  std::vector<double> d(net.num_nodes(), 0.0);
  for (const auto& l : net.links) {
    d[l.rx] += r[l.id];
    d[l.tx] -= r[l.id];
  }
  for (const auto& v : net.nodes)
    if (v.is_gateway) d[v.id] = 0.0;
  return d;
}

// Caratheodory reduction: keeps the node-service vector and total resource
// use while shrinking the support to at most N+1 patterns. Repeatedly walks
// along a null-space direction of the (N+1)-row system until a weight hits 0.
inline Allocation sparsify_allocation(const Allocation& alloc,
                                      const Network& net,
                                      const InterferenceMatrix& M) {
  if (alloc.total() > 1.0 + 1e-9)
    throw InvalidParams("allocation uses more than the whole frame");
  // merge duplicate patterns
  Allocation cur;
  {
    std::vector<std::pair<LinkSet, double>> es = alloc.entries;
    std::sort(es.begin(), es.end());
    for (auto& e : es) {
      if (e.second == 0.0) continue;
      if (e.second < 0.0) throw InvalidParams("negative allocation weight");
      if (!cur.entries.empty() && cur.entries.back().first == e.first)
        cur.entries.back().second += e.second;
      else
        cur.entries.push_back(e);
    }
  }

  std::vector<int> ngw;
  for (const auto& v : net.nodes)
    if (!v.is_gateway) ngw.push_back(v.id);
  const int rows = static_cast<int>(ngw.size()) + 1;  // N service rows + frame

  auto column = [&](const LinkSet& pat) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(rows);
    for (int l : pat) {
      double g = spectral_efficiency(l, pat, M);
      for (int i = 0; i < rows - 1; ++i) {
        if (net.links[l].rx == ngw[i]) col[i] += g;
        if (net.links[l].tx == ngw[i]) col[i] -= g;
      }
    }
    col[rows - 1] = 1.0;
    return col;
  };

  while (static_cast<int>(cur.entries.size()) > rows) {
    const int k = static_cast<int>(cur.entries.size());
    Eigen::MatrixXd A(rows, k);
    for (int j = 0; j < k; ++j) A.col(j) = column(cur.entries[j].first);
    Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(A).kernel();
    if (kernel.cols() == 0 || kernel.col(0).norm() < 1e-12) break;
    Eigen::VectorXd wdir = kernel.col(0);
    if (wdir.maxCoeff() <= 0.0) wdir = -wdir;
    // largest step keeping all weights nonnegative zeroes at least one
    double t = kInf;
    for (int j = 0; j < k; ++j)
      if (wdir[j] > 1e-14) t = std::min(t, cur.entries[j].second / wdir[j]);
    Allocation next;
    for (int j = 0; j < k; ++j) {
      double v = cur.entries[j].second - t * wdir[j];
      if (v > 1e-14) next.entries.push_back({cur.entries[j].first, v});
    }
    if (next.entries.size() >= cur.entries.size()) break;  // numerical stall
    cur = std::move(next);
  }
  return cur;
}

// Reads the pattern time shares out of a combinatorial solution.
inline Allocation allocation_from_solution(const Solution& sol,
                                           const VarMap& vm) {
  Allocation a;
  for (size_t p = 0; p < vm.patterns.size(); ++p) {
    double v = sol.x[vm.x_pattern[p]];
    if (v > 1e-9) a.entries.push_back({vm.patterns[p], v});
  }
  return a;
}

// Rounds the LP relaxation of a scalable model into a conflict-free per-slot
// schedule, returned as a variable vector for MilpOptions::warm_start. Slot
// by slot, links enter in order of their relaxation time share (discounted
// once scheduled) while they stay conflict-free against the pattern built so
// far; the binaries z and q are set to match and the polish LP inside the
// solver fills in the slot lengths, shares and routing. Large instances need
// this: the tree search alone can take hours to find a first incumbent.
inline std::vector<double> greedy_warm_start(const BuiltModel& bm,
                                             const Solution& relax,
                                             const Network& net,
                                             const InterferenceMatrix& M,
                                             const NeighborhoodSet& nb,
                                             const ServiceWeights& w,
                                             std::uint64_t seed = 1) {
  const VarMap& vm = bm.map;
  if (vm.T == 0 || relax.status != SolveStatus::kOptimal) return {};
  const int L = static_cast<int>(vm.local_patterns.size());

  // local (pessimistic) rate a link gets inside a global pattern; matches
  // what the pinned model will credit the warm start with
  auto local_rate = [&](int l, const LinkSet& pat) {
    return local_spectral_efficiency(l, set_intersect(pat, nb.neighbors[l]), M,
                                     nb);
  };

  // greedy conflict-free packing in the given link order
  auto pack = [&](std::vector<std::pair<double, int>> order) {
    std::sort(order.begin(), order.end());
    LinkSet pat;
    for (const auto& [negw, l] : order) {
      bool ok = true;
      for (int j : pat)
        if (links_conflict(l, j, M)) {
          ok = false;
          break;
        }
      if (ok) pat.push_back(l);
    }
    std::sort(pat.begin(), pat.end());
    return pat;
  };

  // candidate pattern pool: per-slot LP shares (with and without a boost for
  // links the relaxation uses anywhere) plus randomized orders for diversity
  std::vector<double> total(L, 0.0);
  for (int l = 0; l < L; ++l)
    for (int mIdx = 0; mIdx < vm.T; ++mIdx)
      for (int x : vm.x_var[l][mIdx]) total[l] += relax.x[x];

  std::vector<LinkSet> pool;
  auto add = [&](LinkSet pat) {
    if (pat.empty()) return;
    if (std::find(pool.begin(), pool.end(), pat) == pool.end())
      pool.push_back(std::move(pat));
  };
  for (double discount : {0.0, 0.25, 1.0})
    for (int mIdx = 0; mIdx < vm.T; ++mIdx) {
      std::vector<std::pair<double, int>> order;
      for (int l = 0; l < L; ++l) {
        double w = 0.0;
        for (int x : vm.x_var[l][mIdx]) w += relax.x[x];
        w += discount * total[l];
        if (w > 1e-4) order.emplace_back(-w, l);
      }
      add(pack(std::move(order)));
    }
  Rng rng(derive_seed(seed, "warmstart"));
  for (int v = 0; v < 24; ++v) {
    std::vector<std::pair<double, int>> order;
    for (int l = 0; l < L; ++l) {
      double w = (total[l] + 0.02) * std::exp(rng.uniform(-1.0, 1.0));
      order.emplace_back(-w, l);
    }
    add(pack(std::move(order)));
  }

  // restricted master over a pattern pool: optimal time shares plus the
  // rate-row and frame duals used for pricing; mirrors the service structure
  // of the target model (DL only, or joint UL/DL when it has c). When
  // max_patterns > 0, binary selectors limit the support size instead.
  const bool uldl = vm.c >= 0;
  struct MasterResult {
    double obj = -kInf;
    std::vector<double> shares;
    std::vector<double> pi;  // rate-row duals, >= 0
    double pi_frame = 0.0;
  };
  auto master = [&](const std::vector<LinkSet>& pats, int max_patterns,
                    const std::vector<double>* select_hint) {
    LinearModel m;
    std::vector<int> share, sel;
    for (size_t a = 0; a < pats.size(); ++a)
      share.push_back(m.add_var("y" + std::to_string(a), 0.0, 1.0));
    if (max_patterns > 0)
      for (size_t a = 0; a < pats.size(); ++a)
        sel.push_back(m.add_var("w" + std::to_string(a), 0.0, 1.0, true));
    std::vector<int> rate, rate_up;
    for (int l = 0; l < L; ++l) {
      rate.push_back(m.add_var("rd" + std::to_string(l), 0.0, kInf));
      if (uldl) rate_up.push_back(m.add_var("ru" + std::to_string(l), 0.0, kInf));
    }
    std::vector<int> svc(net.num_nodes(), -1), svc_up(net.num_nodes(), -1);
    for (const auto& v : net.nodes)
      if (!v.is_gateway) {
        svc[v.id] = m.add_var("d" + std::to_string(v.id), 0.0, kInf);
        if (uldl) svc_up[v.id] = m.add_var("u" + std::to_string(v.id), 0.0, kInf);
      }
    int level = m.add_var("lvl", 0.0, kInf);
    for (int l = 0; l < L; ++l) {
      std::vector<std::pair<int, double>> row{{rate[l], 1.0}};
      if (uldl) row.emplace_back(rate_up[l], 1.0);
      for (size_t a = 0; a < pats.size(); ++a)
        if (set_contains(pats[a], l))
          row.emplace_back(share[a], -local_rate(l, pats[a]));
      m.add_row("rate_" + std::to_string(l), std::move(row), Relation::kLe,
                0.0);
    }
    detail::add_flow_rows(m, net, rate, svc, false, "dl");
    detail::add_service_rows(m, net, svc, w.alpha, level, "dl");
    if (uldl) {
      detail::add_flow_rows(m, net, rate_up, svc_up, true, "ul");
      detail::add_service_rows(m, net, svc_up, w.beta, level, "ul");
    }
    std::vector<std::pair<int, double>> frame;
    for (int y : share) frame.emplace_back(y, 1.0);
    const int frame_row = m.num_rows();
    m.add_row("frame", std::move(frame), Relation::kLe, 1.0);
    if (max_patterns > 0) {
      for (size_t a = 0; a < pats.size(); ++a)
        m.add_row("use_" + std::to_string(a),
                  {{share[a], 1.0}, {sel[a], -1.0}}, Relation::kLe, 0.0);
      std::vector<std::pair<int, double>> cap;
      for (int v : sel) cap.emplace_back(v, 1.0);
      m.add_row("support", std::move(cap), Relation::kLe,
                static_cast<double>(max_patterns));
    }
    m.set_objective({{level, 1.0}});

    MasterResult res;
    Solution s;
    try {
      if (max_patterns > 0) {
        MilpOptions mo;
        mo.gap_tol = 1e-6;
        mo.node_limit = 2000;
        mo.dive_every = 8;
        if (select_hint) {
          mo.warm_start.assign(m.num_vars(), 0.0);
          for (size_t a = 0; a < pats.size(); ++a)
            if ((*select_hint)[a] > 1e-9) mo.warm_start[sel[a]] = 1.0;
        }
        s = solve_milp(m, mo);
        if (s.status == SolveStatus::kGapLimit) s.status = SolveStatus::kOptimal;
      } else {
        s = solve_lp(m);
      }
    } catch (const Error& e) {
      fprintf(stderr, "[master] %s\n", e.what());
      return res;  // drop this candidate set
    }
    if (s.status != SolveStatus::kOptimal) return res;
    res.obj = s.objective;
    res.shares.assign(pats.size(), 0.0);
    for (size_t a = 0; a < pats.size(); ++a) res.shares[a] = s.x[share[a]];
    if (static_cast<int>(s.duals.size()) == m.num_rows()) {
      res.pi.assign(L, 0.0);
      // duals of <= rows in a max problem should be >= 0; flip if the
      // solver reports them with the opposite sign convention
      double flip = s.duals[frame_row] < 0.0 ? -1.0 : 1.0;
      for (int l = 0; l < L; ++l)
        res.pi[l] = std::max(0.0, flip * s.duals[l]);
      res.pi_frame = flip * s.duals[frame_row];
    }
    return res;
  };

  // selection 1: sequential slot greedy on the relaxation shares, links
  // scheduled earlier discounted so later slots diversify (the fallback when
  // the master LPs stall: shares only rank patterns, the polish LP inside
  // the solver computes the real slot lengths)
  std::vector<LinkSet> seq;
  {
    std::vector<int> used(L, 0);
    for (int mIdx = 0; mIdx < vm.T; ++mIdx) {
      std::vector<std::pair<double, int>> order;
      for (int l = 0; l < L; ++l) {
        double v = 0.0;
        for (int x : vm.x_var[l][mIdx]) v += relax.x[x];
        v += 0.25 * total[l] / (1.0 + used[l]);
        if (v > 1e-4) order.emplace_back(-v, l);
      }
      LinkSet pat = pack(std::move(order));
      for (int l : pat) ++used[l];
      if (!pat.empty()) seq.push_back(std::move(pat));
    }
  }
  std::vector<LinkSet> pats = seq;
  std::vector<double> shares;
  double obj;
  {
    MasterResult mr = master(seq, 0, nullptr);
    obj = mr.obj;
    shares = std::move(mr.shares);
    if (obj == -kInf) shares.assign(pats.size(), 1.0);
  }

  // column generation: price new conflict-free patterns against the pool
  // master's rate duals until none improves (reduced cost = credited rate
  // value minus the frame dual)
  std::vector<double> solo(L, 0.0);
  for (int l = 0; l < L; ++l) solo[l] = local_rate(l, LinkSet{l});
  auto credit = [&](const LinkSet& pat, const std::vector<double>& pi) {
    double v = 0.0;
    for (int l : pat) v += pi[l] * local_rate(l, pat);
    return v;
  };
  for (int it = 0; it < 60; ++it) {
    MasterResult mr = master(pool, 0, nullptr);
    fprintf(stderr, "[cg] it=%d pool=%zu obj=%.6f piN=%zu piF=%.6f\n", it,
            pool.size(), mr.obj, mr.pi.size(), mr.pi_frame);
    if (mr.obj == -kInf || mr.pi.empty()) break;
    bool grew = false;
    for (int pass = 0; pass < 4; ++pass) {
      std::vector<std::pair<double, int>> order;
      for (int l = 0; l < L; ++l) {
        double wl = mr.pi[l] * solo[l];
        if (wl <= 1e-12) continue;
        if (pass > 0) wl *= std::exp(rng.uniform(-0.3, 0.3));
        order.emplace_back(-wl, l);
      }
      LinkSet pat = pack(std::move(order));
      // dropping a weakly credited link can raise everyone else's rate
      bool improved = true;
      while (improved && pat.size() > 1) {
        improved = false;
        double cur = credit(pat, mr.pi);
        for (size_t i = 0; i < pat.size(); ++i) {
          LinkSet trial = pat;
          trial.erase(trial.begin() + i);
          if (credit(trial, mr.pi) > cur + 1e-12) {
            pat = std::move(trial);
            improved = true;
            break;
          }
        }
      }
      if (!pat.empty() && credit(pat, mr.pi) > mr.pi_frame + 1e-7 &&
          std::find(pool.begin(), pool.end(), pat) == pool.end()) {
        pool.push_back(std::move(pat));
        grew = true;
      }
    }
    if (!grew) break;
  }

  // selection 2: drop the weakest pool column until at most T patterns
  // remain; its support also seeds the selection MILP below
  std::vector<double> hint(pool.size(), 0.0);
  {
    std::vector<LinkSet> cur = pool;
    MasterResult mr = master(cur, 0, nullptr);
    while (mr.obj > -kInf) {
      int active = 0;
      for (double y : mr.shares)
        if (y > 1e-9) ++active;
      if (active <= vm.T) break;
      size_t drop = 0;
      double least = kInf;
      for (size_t a = 0; a < cur.size(); ++a)
        if (mr.shares[a] > 1e-9 && mr.shares[a] < least) {
          least = mr.shares[a];
          drop = a;
        }
      std::vector<LinkSet> next;
      for (size_t a = 0; a < cur.size(); ++a)
        if (a != drop && mr.shares[a] > 1e-9) next.push_back(cur[a]);
      cur = std::move(next);
      mr = master(cur, 0, nullptr);
    }
    if (mr.obj > -kInf) {
      for (size_t a = 0; a < cur.size(); ++a)
        if (mr.shares[a] > 1e-9)
          for (size_t b = 0; b < pool.size(); ++b)
            if (pool[b] == cur[a]) hint[b] = 1.0;
      if (mr.obj > obj) {
        obj = mr.obj;
        pats = std::move(cur);
        shares = std::move(mr.shares);
      }
    }
  }

  // selection 3: exact best <=T subset of the pool via binary selectors,
  // warm-started from the drop-least support
  {
    MasterResult mr = master(pool, vm.T, &hint);
    fprintf(stderr, "[sel] dropleast/seq obj=%.6f milp obj=%.6f\n", obj, mr.obj);
    if (mr.obj > obj) {
      obj = mr.obj;
      pats = pool;
      shares = std::move(mr.shares);
    }
  }
  if (pats.empty()) return {};

  // chosen patterns, largest share first to respect the slot ordering rows
  std::vector<std::pair<double, size_t>> by_share;
  for (size_t a = 0; a < pats.size(); ++a)
    if (shares[a] > 1e-9) by_share.emplace_back(-shares[a], a);
  std::sort(by_share.begin(), by_share.end());

  std::vector<double> ws(bm.model.num_vars(), 0.0);
  int mIdx = 0;
  for (const auto& [negy, a] : by_share) {
    for (int l : pats[a]) {
      LinkSet b = set_intersect(pats[a], nb.neighbors[l]);
      const auto& lps = vm.local_patterns[l];
      auto it = std::lower_bound(lps.begin(), lps.end(), b);
      if (it == lps.end() || *it != b) return {};  // pattern not enumerable
      ws[vm.z_var[l][mIdx]] = 1.0;
      ws[vm.q_var[l][mIdx][it - lps.begin()]] = 1.0;
    }
    ++mIdx;
  }
  return ws;
}

// ---- index-map serialization (exported alongside MPS files) ----

inline nlohmann::json to_json(const VarMap& vm) {
  nlohmann::json j;
  j["patterns"] = vm.patterns;
  j["x_pattern"] = vm.x_pattern;
  j["r"] = vm.r;
  j["r_up"] = vm.r_up;
  j["d_node"] = vm.d_node;
  j["u_node"] = vm.u_node;
  j["d"] = vm.d;
  j["c"] = vm.c;
  j["T"] = vm.T;
  j["y"] = vm.y;
  j["local_patterns"] = vm.local_patterns;
  j["local_gamma"] = vm.local_gamma;
  j["q_var"] = vm.q_var;
  j["x_var"] = vm.x_var;
  j["z_var"] = vm.z_var;
  return j;
}

inline VarMap varmap_from_json(const nlohmann::json& j) {
  VarMap vm;
  vm.patterns = j.at("patterns").get<std::vector<LinkSet>>();
  vm.x_pattern = j.at("x_pattern").get<std::vector<int>>();
  vm.r = j.at("r").get<std::vector<int>>();
  vm.r_up = j.at("r_up").get<std::vector<int>>();
  vm.d_node = j.at("d_node").get<std::vector<int>>();
  vm.u_node = j.at("u_node").get<std::vector<int>>();
  vm.d = j.at("d");
  vm.c = j.at("c");
  vm.T = j.at("T");
  vm.y = j.at("y").get<std::vector<int>>();
  vm.local_patterns = j.at("local_patterns").get<std::vector<std::vector<LinkSet>>>();
  vm.local_gamma = j.at("local_gamma").get<std::vector<std::vector<double>>>();
  vm.q_var = j.at("q_var").get<std::vector<std::vector<std::vector<int>>>>();
  vm.x_var = j.at("x_var").get<std::vector<std::vector<std::vector<int>>>>();
  vm.z_var = j.at("z_var").get<std::vector<std::vector<int>>>();
  return vm;
}

}  // namespace mmbh
