#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>

#include "mmbh/branch_bound.hpp"
#include "mmbh/linear_model.hpp"
#include "mmbh/simplex.hpp"

using namespace mmbh;

TEST_CASE("trivial single-variable LP") {
  LinearModel m;
  int x = m.add_var("x", 0.0, kInf);
  m.add_row("c0", {{x, 1.0}}, Relation::kLe, 1.0);
  m.set_objective({{x, 1.0}});
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.x[x] == Catch::Approx(1.0));
  CHECK(s.objective == Catch::Approx(1.0));
}

TEST_CASE("degenerate optimal face accepts any vertex") {
  LinearModel m;
  int x = m.add_var("x", 0.0, kInf);
  int y = m.add_var("y", 0.0, kInf);
  m.add_row("c0", {{x, 1.0}, {y, 1.0}}, Relation::kLe, 1.0);
  m.set_objective({{x, 1.0}, {y, 1.0}});
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.objective == Catch::Approx(1.0));
}

TEST_CASE("equality and >= rows, bounded variables") {
  // max 2x + 3y  s.t. x + y = 4, x - y >= -2, 0<=x<=3, 0<=y<=5
  LinearModel m;
  int x = m.add_var("x", 0.0, 3.0);
  int y = m.add_var("y", 0.0, 5.0);
  m.add_row("eq", {{x, 1.0}, {y, 1.0}}, Relation::kEq, 4.0);
  m.add_row("ge", {{x, 1.0}, {y, -1.0}}, Relation::kGe, -2.0);
  m.set_objective({{x, 2.0}, {y, 3.0}});
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  // best: y as large as possible: x=1,y=3 -> 11
  CHECK(s.objective == Catch::Approx(11.0));
  CHECK(s.x[x] == Catch::Approx(1.0));
  CHECK(s.x[y] == Catch::Approx(3.0));
}

TEST_CASE("infeasible LP reported") {
  LinearModel m;
  int x = m.add_var("x", 0.0, 1.0);
  m.add_row("c0", {{x, 1.0}}, Relation::kGe, 2.0);
  m.set_objective({{x, 1.0}});
  CHECK(solve_lp(m).status == SolveStatus::kInfeasible);
}

TEST_CASE("unbounded LP reported") {
  LinearModel m;
  int x = m.add_var("x", 0.0, kInf);
  m.add_row("c0", {{x, -1.0}}, Relation::kLe, 1.0);
  m.set_objective({{x, 1.0}});
  CHECK(solve_lp(m).status == SolveStatus::kUnbounded);
}

TEST_CASE("free variables") {
  // max -|x| style: max -x - y with x + y >= 1, x free in [-10,10]
  LinearModel m;
  int x = m.add_var("x", -kInf, kInf);
  int y = m.add_var("y", 0.0, kInf);
  m.add_row("c0", {{x, 1.0}, {y, 1.0}}, Relation::kGe, 1.0);
  m.add_row("c1", {{x, 1.0}}, Relation::kLe, 10.0);
  m.add_row("c2", {{x, -1.0}}, Relation::kLe, 10.0);
  m.set_objective({{x, -1.0}, {y, -1.0}});
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.objective == Catch::Approx(-1.0));
}

TEST_CASE("duality gap closes at optimum") {
  LinearModel m;
  int x = m.add_var("x", 0.0, 4.0);
  int y = m.add_var("y", 0.0, kInf);
  int z = m.add_var("z", 1.0, 2.0);
  m.add_row("r0", {{x, 2.0}, {y, 1.0}, {z, 1.0}}, Relation::kLe, 10.0);
  m.add_row("r1", {{x, 1.0}, {y, 3.0}}, Relation::kLe, 15.0);
  m.add_row("r2", {{y, 1.0}, {z, -1.0}}, Relation::kGe, 0.5);
  m.set_objective({{x, 3.0}, {y, 2.0}, {z, 1.0}});
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.dual_objective ==
        Catch::Approx(s.objective).epsilon(1e-6));
}

TEST_CASE("deterministic re-solve") {
  LinearModel m;
  for (int j = 0; j < 30; ++j) m.add_var("x" + std::to_string(j), 0.0, 1.0);
  std::vector<std::pair<int, double>> obj;
  for (int j = 0; j < 30; ++j) obj.emplace_back(j, 1.0 + 0.01 * (j % 7));
  for (int i = 0; i < 15; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < 30; ++j)
      if ((i * 7 + j) % 3 == 0) row.emplace_back(j, 1.0 + ((i + j) % 5) * 0.5);
    m.add_row("r" + std::to_string(i), row, Relation::kLe, 2.0);
  }
  m.set_objective(obj);
  Solution a = solve_lp(m);
  Solution b = solve_lp(m);
  REQUIRE(a.status == SolveStatus::kOptimal);
  CHECK(a.objective == Catch::Approx(b.objective).margin(1e-9));
}

TEST_CASE("MILP: binaries fixed by bounds reduces to LP") {
  LinearModel m;
  int a = m.add_var("a", 1.0, 1.0, true);
  int b = m.add_var("b", 0.0, 0.0, true);
  int x = m.add_var("x", 0.0, 5.0);
  m.add_row("r0", {{a, 1.0}, {b, 1.0}, {x, 1.0}}, Relation::kLe, 3.0);
  m.set_objective({{a, 1.0}, {b, 1.0}, {x, 1.0}});
  Solution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.objective == Catch::Approx(3.0));
  LinearModel relax = m;
  CHECK(solve_lp(relax).objective == Catch::Approx(s.objective));
}

TEST_CASE("MILP: tiny knapsack") {
  LinearModel m;
  int a = m.add_var("a", 0.0, 1.0, true);
  int b = m.add_var("b", 0.0, 1.0, true);
  m.add_row("cap", {{a, 1.0}, {b, 1.0}}, Relation::kLe, 1.0);
  m.set_objective({{a, 3.0}, {b, 2.0}});
  Solution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.objective == Catch::Approx(3.0));
  CHECK(s.x[a] == Catch::Approx(1.0).margin(1e-9));
  CHECK(s.x[b] == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("MILP: fractional LP relaxation forces branching") {
  // max a+b+c with pairwise conflicts: LP relax gives 1.5, MILP 1
  LinearModel m;
  int a = m.add_var("a", 0.0, 1.0, true);
  int b = m.add_var("b", 0.0, 1.0, true);
  int c = m.add_var("c", 0.0, 1.0, true);
  m.add_row("ab", {{a, 1.0}, {b, 1.0}}, Relation::kLe, 1.0);
  m.add_row("bc", {{b, 1.0}, {c, 1.0}}, Relation::kLe, 1.0);
  m.add_row("ca", {{c, 1.0}, {a, 1.0}}, Relation::kLe, 1.0);
  m.set_objective({{a, 1.0}, {b, 1.0}, {c, 1.0}});
  Solution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.objective == Catch::Approx(1.0));
  CHECK(s.best_bound <= 1.0 + 1e-6);
}

TEST_CASE("MILP: infeasible") {
  LinearModel m;
  int a = m.add_var("a", 0.0, 1.0, true);
  m.add_row("r", {{a, 1.0}}, Relation::kGe, 0.5);
  m.add_row("r2", {{a, 1.0}}, Relation::kLe, 0.4);
  m.set_objective({{a, 1.0}});
  CHECK(solve_milp(m).status == SolveStatus::kInfeasible);
}

TEST_CASE("incumbent never exceeds root relaxation") {
  LinearModel m;
  std::vector<int> v;
  for (int j = 0; j < 12; ++j)
    v.push_back(m.add_var("b" + std::to_string(j), 0.0, 1.0, true));
  std::vector<std::pair<int, double>> obj;
  for (int j = 0; j < 12; ++j) obj.emplace_back(v[j], 1.0 + 0.1 * (j % 4));
  for (int i = 0; i < 8; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < 12; ++j)
      if ((i + j) % 2 == 0) row.emplace_back(v[j], 1.0);
    m.add_row("r" + std::to_string(i), row, Relation::kLe, 2.0);
  }
  m.set_objective(obj);
  LinearModel relax = m;
  for (auto& var : relax.vars) var.is_binary = false;
  double root = solve_lp(relax).objective;
  Solution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.objective <= root + 1e-6);
}

// minimal MPS reader used only to verify the writer round-trips
namespace {
struct ParsedMps {
  std::map<std::string, char> row_type;
  std::map<std::string, std::map<std::string, double>> cols;
  std::map<std::string, double> rhs;
  std::map<std::string, bool> integer;
};
ParsedMps parse_mps(const std::string& text) {
  ParsedMps p;
  std::istringstream in(text);
  std::string line, section;
  bool integer_mode = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] != ' ') {
      std::istringstream ls(line);
      ls >> section;
      continue;
    }
    std::istringstream ls(line);
    if (section == "ROWS") {
      std::string t, name;
      ls >> t >> name;
      p.row_type[name] = t[0];
    } else if (section == "COLUMNS") {
      std::string a, b, c;
      ls >> a >> b >> c;
      if (b == "'MARKER'") {
        integer_mode = c == "'INTORG'";
        continue;
      }
      p.cols[a][b] = std::stod(c);
      if (integer_mode) p.integer[a] = true;
    } else if (section == "RHS") {
      std::string a, b, c;
      ls >> a >> b >> c;
      p.rhs[b] = std::stod(c);
    }
  }
  return p;
}
}  // namespace

TEST_CASE("MPS export: empty model skeleton") {
  LinearModel m;
  std::string text = export_model(m);
  CHECK(text.find("NAME") == 0);
  CHECK(text.find("ROWS") != std::string::npos);
  CHECK(text.find("ENDATA") != std::string::npos);
}

TEST_CASE("MPS export round-trips coefficients") {
  LinearModel m;
  int x = m.add_var("x", 0.0, 4.0);
  int q = m.add_var("q", 0.0, 1.0, true);
  int y = m.add_var("y", -1.0, kInf);
  m.add_row("r0", {{x, 2.5}, {q, -1.0}}, Relation::kLe, 3.0);
  m.add_row("r1", {{y, 1.0}, {x, 0.125}}, Relation::kEq, 1.5);
  m.set_objective({{x, 1.0}, {y, -2.0}, {q, 0.5}});
  ParsedMps p = parse_mps(export_model(m));
  CHECK(p.row_type.at("r0") == 'L');
  CHECK(p.row_type.at("r1") == 'E');
  CHECK(p.cols.at("x").at("r0") == 2.5);
  CHECK(p.cols.at("x").at("r1") == 0.125);
  CHECK(p.cols.at("x").at("OBJ") == 1.0);
  CHECK(p.cols.at("y").at("OBJ") == -2.0);
  CHECK(p.cols.at("q").at("r0") == -1.0);
  CHECK(p.rhs.at("r0") == 3.0);
  CHECK(p.rhs.at("r1") == 1.5);
  CHECK(p.integer.count("q") == 1);
  CHECK(p.integer.count("x") == 0);
}
