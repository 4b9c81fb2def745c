#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "mmbh/errors.hpp"
#include "mmbh/rng.hpp"

namespace mmbh {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation : char { kLe = '<', kEq = '=', kGe = '>' };

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kGapLimit };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kGapLimit: return "gap-limit";
  }
  return "?";
}

// Solver-agnostic LP/MILP container. Objective sense is always maximize.
class LinearModel {
 public:
  struct Variable {
    std::string name;
    double lo = 0.0;
    double hi = kInf;
    bool is_binary = false;
    // Branch-and-bound picks fractional binaries of the highest priority
    // class first. Useful when one set of binaries implies the rest.
    int branch_priority = 0;
  };
  struct Constraint {
    std::string name;
    std::vector<std::pair<int, double>> coeffs;  // (variable, coefficient)
    Relation rel = Relation::kLe;
    double rhs = 0.0;
  };

  std::vector<Variable> vars;
  std::vector<Constraint> rows;
  std::vector<std::pair<int, double>> objective;

  int add_var(std::string name, double lo, double hi, bool binary = false) {
    if (!(lo <= hi)) throw InvalidParams("variable bounds inconsistent: " + name);
    if (binary && (lo < 0.0 || hi > 1.0))
      throw InvalidParams("binary variable bounds outside [0,1]: " + name);
    vars.push_back({std::move(name), lo, hi, binary});
    return static_cast<int>(vars.size()) - 1;
  }

  int add_row(std::string name, std::vector<std::pair<int, double>> coeffs,
              Relation rel, double rhs) {
    for (auto& [j, c] : coeffs) {
      if (j < 0 || j >= static_cast<int>(vars.size()))
        throw InvalidParams("row references unknown variable");
      if (!std::isfinite(c)) throw InvalidParams("non-finite coefficient");
    }
    if (!std::isfinite(rhs)) throw InvalidParams("non-finite rhs");
    rows.push_back({std::move(name), std::move(coeffs), rel, rhs});
    return static_cast<int>(rows.size()) - 1;
  }

  void set_objective(std::vector<std::pair<int, double>> obj) {
    for (auto& [j, c] : obj)
      if (!std::isfinite(c)) throw InvalidParams("non-finite objective coefficient");
    objective = std::move(obj);
  }

  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  bool has_binaries() const {
    for (const auto& v : vars)
      if (v.is_binary) return true;
    return false;
  }

  // Stable content hash, reported on numerical failures.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 0x100000001b3ULL;
    };
    auto mixd = [&](double d) {
      std::uint64_t b;
      static_assert(sizeof(b) == sizeof(d));
      std::memcpy(&b, &d, sizeof(b));
      mix(b);
    };
    for (const auto& v : vars) {
      mixd(v.lo);
      mixd(v.hi);
      mix(v.is_binary);
    }
    for (const auto& r : rows) {
      mix(static_cast<std::uint64_t>(r.rel));
      mixd(r.rhs);
      for (auto [j, c] : r.coeffs) {
        mix(static_cast<std::uint64_t>(j));
        mixd(c);
      }
    }
    for (auto [j, c] : objective) {
      mix(static_cast<std::uint64_t>(j));
      mixd(c);
    }
    return h;
  }
};

struct Solution {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  // MILP: best bound and relative gap; LP: bound == objective, gap 0
  double best_bound = 0.0;
  double gap = 0.0;
  // row duals and the reconstructed dual objective (LP only)
  std::vector<double> duals;
  double dual_objective = 0.0;
  std::int64_t iterations = 0;
  std::int64_t nodes = 0;
};

namespace detail {

inline std::string mps_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

// Fixed-format MPS export (OBJSENSE MAX, binaries in an INTORG marker
// section as BV bounds). Column order follows variable insertion order.
inline std::string export_model(const LinearModel& m) {
  std::string out;
  auto field = [](const std::string& s, size_t w) {
    std::string r = s;
    if (r.size() < w) r.append(w - r.size(), ' ');
    return r;
  };
  out += "NAME          MMBH\n";
  out += "OBJSENSE\n    MAX\n";
  out += "ROWS\n";
  out += " N  OBJ\n";
  for (int i = 0; i < m.num_rows(); ++i) {
    char t = m.rows[i].rel == Relation::kLe   ? 'L'
             : m.rows[i].rel == Relation::kEq ? 'E'
                                              : 'G';
    out += std::string(" ") + t + "  " + m.rows[i].name + "\n";
  }

  // gather per-column entries (objective first, then rows in order)
  std::vector<std::vector<std::pair<std::string, double>>> cols(m.num_vars());
  for (auto [j, c] : m.objective) cols[j].emplace_back("OBJ", c);
  for (const auto& r : m.rows)
    for (auto [j, c] : r.coeffs) cols[j].emplace_back(r.name, c);

  out += "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < m.num_vars(); ++j) {
    if (m.vars[j].is_binary != in_int) {
      in_int = m.vars[j].is_binary;
      out += "    MARKER" + std::to_string(marker++) +
             "                 'MARKER'                 " +
             (in_int ? "'INTORG'" : "'INTEND'") + "\n";
    }
    for (auto& [row, c] : cols[j])
      out += "    " + field(m.vars[j].name, 10) + field(row, 10) +
             detail::mps_num(c) + "\n";
  }
  if (in_int)
    out += "    MARKER" + std::to_string(marker++) +
           "                 'MARKER'                 'INTEND'\n";

  out += "RHS\n";
  for (const auto& r : m.rows)
    if (r.rhs != 0.0)
      out += "    RHS       " + field(r.name, 10) + detail::mps_num(r.rhs) + "\n";

  out += "BOUNDS\n";
  for (int j = 0; j < m.num_vars(); ++j) {
    const auto& v = m.vars[j];
    if (v.is_binary) {
      out += " BV BND       " + field(v.name, 10) + "\n";
      continue;
    }
    if (v.lo == 0.0 && v.hi == kInf) continue;  // default
    if (v.lo == -kInf && v.hi == kInf) {
      out += " FR BND       " + field(v.name, 10) + "\n";
      continue;
    }
    if (v.lo == -kInf)
      out += " MI BND       " + field(v.name, 10) + "\n";
    else if (v.lo != 0.0)
      out += " LO BND       " + field(v.name, 10) + detail::mps_num(v.lo) + "\n";
    if (v.hi != kInf)
      out += " UP BND       " + field(v.name, 10) + detail::mps_num(v.hi) + "\n";
  }
  out += "ENDATA\n";
  return out;
}

}  // namespace mmbh
