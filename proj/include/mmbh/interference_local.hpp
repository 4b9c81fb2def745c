#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmbh/errors.hpp"
#include "mmbh/propagation.hpp"

namespace mmbh {

// Activation patterns and local patterns are sorted vectors of link ids.
using LinkSet = std::vector<int>;

inline bool set_contains(const LinkSet& s, int l) {
  return std::binary_search(s.begin(), s.end(), l);
}

inline LinkSet set_intersect(const LinkSet& a, const LinkSet& b) {
  LinkSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

// Per-link interference neighborhoods: the links whose interference on l is
// non-negligible, plus every half-duplex conflict and l itself. Interference
// from links outside the neighborhood is folded into a pessimistic residual
// floor added to the noise.
struct NeighborhoodSet {
  std::vector<LinkSet> neighbors;
  std::vector<double> residual;
  double threshold_db = 3.0;
  int cap = 12;

  int num_links() const { return static_cast<int>(neighbors.size()); }
};

// Eq.-style link throughput under a global activation pattern.
inline double spectral_efficiency(int l, const LinkSet& A,
                                  const InterferenceMatrix& M) {
  if (!set_contains(A, l))
    throw LinkNotInPattern("link " + std::to_string(l) +
                           " not in activation pattern");
  double acc = 0.0;
  for (int k : A) {
    if (k == l) continue;
    if (std::isinf(M.I[k][l])) return 0.0;
    acc += M.I[k][l];
  }
  return std::log2(1.0 + M.S[l] / (M.noise + acc));
}

// Neighborhood construction. Links are included when their interference is at
// most `threshold_db` below the noise floor (ties included); conflicts are
// always included. If more than `cap` finite interferers qualify, only the
// strongest `cap` stay and the rest join the residual floor.
inline NeighborhoodSet build_neighborhoods(const InterferenceMatrix& M,
                                           double threshold_db = 3.0,
                                           int cap = 12) {
  if (!std::isfinite(threshold_db)) throw InvalidParams("threshold not finite");
  if (cap < 0) throw InvalidParams("neighborhood cap must be >= 0");
  const int L = M.num_links();
  double thr = M.noise * std::pow(10.0, -threshold_db / 10.0);

  NeighborhoodSet nb;
  nb.threshold_db = threshold_db;
  nb.cap = cap;
  nb.neighbors.resize(L);
  nb.residual.assign(L, 0.0);

  for (int l = 0; l < L; ++l) {
    std::vector<int> finite;
    LinkSet lam{l};
    for (int k = 0; k < L; ++k) {
      if (k == l) continue;
      double v = M.I[k][l];
      if (std::isinf(v)) {
        lam.push_back(k);
      } else if (v >= thr) {
        finite.push_back(k);
      } else {
        nb.residual[l] += v;
      }
    }
    if (static_cast<int>(finite.size()) > cap) {
      std::sort(finite.begin(), finite.end(), [&](int a, int b) {
        if (M.I[a][l] != M.I[b][l]) return M.I[a][l] > M.I[b][l];
        return a < b;
      });
      for (size_t i = cap; i < finite.size(); ++i)
        nb.residual[l] += M.I[finite[i]][l];
      finite.resize(cap);
    }
    lam.insert(lam.end(), finite.begin(), finite.end());
    std::sort(lam.begin(), lam.end());
    nb.neighbors[l] = std::move(lam);
  }
  return nb;
}

// Pessimistic local throughput: interference from the local pattern plus the
// residual floor standing in for everything outside the neighborhood.
inline double local_spectral_efficiency(int l, const LinkSet& B,
                                        const InterferenceMatrix& M,
                                        const NeighborhoodSet& nb) {
  if (!set_contains(B, l))
    throw LinkNotInPattern("owner link " + std::to_string(l) +
                           " not in local pattern");
  const LinkSet& lam = nb.neighbors[l];
  double acc = nb.residual[l];
  for (int k : B) {
    if (k == l) continue;
    if (!set_contains(lam, k))
      throw LinkNotInPattern("local pattern leaves neighborhood of link " +
                             std::to_string(l));
    if (std::isinf(M.I[k][l])) return 0.0;
    acc += M.I[k][l];
  }
  return std::log2(1.0 + M.S[l] / (M.noise + acc));
}

// Two local patterns (B owned by l, A owned by k) agree iff they impose the
// same activations on the overlap of the two neighborhoods.
inline bool compatible(int l, const LinkSet& B, int k, const LinkSet& A,
                       const NeighborhoodSet& nb) {
  return set_intersect(A, nb.neighbors[l]) == set_intersect(B, nb.neighbors[k]);
}

inline bool links_conflict(int a, int b, const InterferenceMatrix& M) {
  return std::isinf(M.I[a][b]) || std::isinf(M.I[b][a]);
}

// All local patterns B ⊆ Λ_l with l ∈ B and no internal half-duplex conflict.
// Conflicted patterns would only ever carry zero rate, so solvers skip them.
inline std::vector<LinkSet> enumerate_local_patterns(
    int l, const InterferenceMatrix& M, const NeighborhoodSet& nb) {
  std::vector<int> others;
  for (int k : nb.neighbors[l])
    if (k != l && !links_conflict(k, l, M)) others.push_back(k);

  std::vector<LinkSet> out;
  LinkSet cur{l};
  auto rec = [&](auto&& self, size_t i) -> void {
    if (i == others.size()) {
      LinkSet b = cur;
      std::sort(b.begin(), b.end());
      out.push_back(std::move(b));
      return;
    }
    self(self, i + 1);
    int cand = others[i];
    bool ok = true;
    for (int m : cur)
      if (links_conflict(cand, m, M)) {
        ok = false;
        break;
      }
    if (ok) {
      cur.push_back(cand);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mmbh
