// mmbh: generate topologies, solve the joint routing/scheduling problem,
// and run the experiment sweeps. Configuration comes from a JSON file
// (--config) with every key optional; command-line flags override it.
//
// Exit codes: 0 ok, 1 config error, 2 solver failure, 3 infeasible.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmbh/experiments.hpp"
#include "mmbh/net_model.hpp"
#include "mmbh/propagation.hpp"
#include "mmbh/rng.hpp"

using namespace mmbh;
using nlohmann::json;

namespace {

struct Config {
  // network source
  std::string net_type = "suburban";  // suburban | urban | file
  std::string net_file;
  GenParams gen;
  UrbanGridParams grid;

  PropagationParams prop;
  SolveSettings solve;
  std::string formulation = "scal-dl";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string axis = "truncation";  // truncation | snr | uplink
  int cluster_group = 2;
  std::string out = "run";
  bool export_mps = false;
};

template <typename T>
void get_to_if(const json& j, const char* key, T& dst) {
  if (j.contains(key)) j.at(key).get_to(dst);
}

Config load_config(const std::string& path) {
  Config c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) throw InvalidParams("cannot open config file " + path);
  json j = json::parse(in);

  if (j.contains("network")) {
    const json& n = j["network"];
    get_to_if(n, "type", c.net_type);
    get_to_if(n, "file", c.net_file);
    get_to_if(n, "node_count", c.gen.node_count);
    get_to_if(n, "area_side", c.gen.area_side);
    get_to_if(n, "gateway_fraction", c.gen.gateway_fraction);
    get_to_if(n, "degree_lo", c.gen.degree_lo);
    get_to_if(n, "degree_hi", c.gen.degree_hi);
    get_to_if(n, "min_link_distance", c.gen.min_link_distance);
    get_to_if(n, "truncation_threshold", c.gen.truncation_threshold);
    get_to_if(n, "blocks_x", c.grid.blocks_x);
    get_to_if(n, "blocks_y", c.grid.blocks_y);
    get_to_if(n, "block_w", c.grid.block_w);
    get_to_if(n, "block_h", c.grid.block_h);
    get_to_if(n, "node_spacing", c.grid.node_spacing);
    get_to_if(n, "street_width", c.grid.street_width);
  }
  if (j.contains("propagation")) {
    const json& p = j["propagation"];
    get_to_if(p, "nominal_snr_db", c.prop.nominal_snr_db);
    get_to_if(p, "array_size", c.prop.array_size);
    get_to_if(p, "wavelength", c.prop.wavelength);
    get_to_if(p, "wall_permittivity", c.prop.wall_permittivity);
    get_to_if(p, "ground_permittivity", c.prop.ground_permittivity);
    get_to_if(p, "street_width", c.prop.street_width);
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    get_to_if(s, "gap", c.solve.milp.gap_tol);
    get_to_if(s, "node_limit", c.solve.milp.node_limit);
    get_to_if(s, "time_limit_sec", c.solve.milp.time_limit_sec);
    get_to_if(s, "neighborhood_threshold_db", c.solve.nb_threshold_db);
    get_to_if(s, "neighborhood_cap", c.solve.nb_cap);
    get_to_if(s, "pattern_cap", c.solve.pattern_cap);
  }
  get_to_if(j, "formulation", c.formulation);
  get_to_if(j, "slots", c.solve.slots);
  get_to_if(j, "lambda", c.solve.lambda);
  get_to_if(j, "beta", c.solve.beta_ratio);
  get_to_if(j, "seed", c.seed);
  get_to_if(j, "threads", c.threads);
  get_to_if(j, "axis", c.axis);
  get_to_if(j, "cluster_group", c.cluster_group);
  get_to_if(j, "out", c.out);
  return c;
}

Network make_network(const Config& c) {
  if (c.net_type == "file") {
    if (c.net_file.empty()) throw InvalidParams("network.file not set");
    return load_network(c.net_file);
  }
  GenParams g = c.gen;
  g.seed = derive_seed(c.seed, "topology");
  if (c.net_type == "suburban") return generate_suburban(g);
  if (c.net_type == "urban") return generate_urban_grid(g, c.grid);
  throw InvalidParams("unknown network type '" + c.net_type + "'");
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw InvalidParams("cannot write " + path);
  out << body;
}

int cmd_generate(const Config& c) {
  Network net = make_network(c);
  int gws = 0;
  for (const auto& v : net.nodes) gws += v.is_gateway;
  save_network(net, c.out);
  std::cout << "nodes=" << net.num_nodes() << " links=" << net.num_links()
            << " gateways=" << gws << " out=" << c.out << "\n";
  return 0;
}

int cmd_solve(const Config& c) {
  Network net = make_network(c);
  InterferenceMatrix M = compute_link_budget(net, c.prop, c.seed);
  SolveSettings s = c.solve;
  s.formulation = parse_formulation(c.formulation);

  std::string mps;
  SolveOutcome r = run_solve(net, M, s, c.export_mps ? &mps : nullptr);
  if (c.export_mps) write_file(c.out + ".mps", mps);
  write_file(c.out + ".schedule.json", to_json(r.schedule).dump(2) + "\n");
  write_file(c.out + ".report.csv", report_to_csv(r.report, net));
  json meta{{"formulation", c.formulation},
            {"objective", r.objective},
            {"maxmin_exact", r.report.maxmin},
            {"gap", r.gap},
            {"wall_sec", r.wall_sec},
            {"status", to_string(r.sol.status)},
            {"nodes_explored", r.sol.nodes},
            {"seed", c.seed}};
  write_file(c.out + ".meta.json", meta.dump(2) + "\n");
  std::printf("objective=%.9g exact=%.9g gap=%.3g wall=%.2fs\n", r.objective,
              r.report.maxmin, r.gap, r.wall_sec);
  return 0;
}

struct SweepPoint {
  double value = 0.0;
  bool ok = false;
  std::string error;
  double objective = 0.0, runtime = 0.0, degradation = 0.0;
};

// Sweeps re-solve per point; the degradation column is axis-specific:
// truncation/uplink report the loss against the best point of the sweep,
// snr reports the interference-agnostic loss at that SNR.
int cmd_sweep(const Config& c) {
  std::vector<double> values;
  if (c.axis == "truncation")
    values = {1, 2, 3, 4, 5, 6, 7, 8};
  else if (c.axis == "snr")
    values = {5, 10, 15, 20, 25};
  else if (c.axis == "uplink")
    values = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  else
    throw InvalidParams("unknown sweep axis '" + c.axis + "'");

  Network net = make_network(c);
  Formulation f = parse_formulation(c.formulation);
  if (c.axis == "uplink" && !(f == Formulation::kCombUldl ||
                              f == Formulation::kScalUldl))
    throw InvalidParams("uplink sweep needs a uldl formulation");

  std::vector<SweepPoint> pts(values.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < values.size();) {
      SweepPoint& pt = pts[i];
      pt.value = values[i];
      try {
        PropagationParams prop = c.prop;
        SolveSettings s = c.solve;
        s.formulation = f;
        if (c.axis == "truncation") s.slots = static_cast<int>(values[i]);
        if (c.axis == "snr") prop.nominal_snr_db = values[i];
        if (c.axis == "uplink") s.beta_ratio = values[i];
        InterferenceMatrix M = compute_link_budget(net, prop, c.seed);
        SolveOutcome r = run_solve(net, M, s);
        pt.objective = r.objective;
        pt.runtime = r.wall_sec;
        if (c.axis == "snr") {
          SolveSettings sa = s;
          InterferenceMatrix C = conflict_only_matrix(M);
          SolveOutcome agn = run_solve(net, C, sa);
          pt.degradation = degradation(
              agn.schedule, r.schedule, M, net,
              ServiceWeights::uniform(net, s.beta_ratio));
        }
        pt.ok = true;
      } catch (const std::exception& e) {
        pt.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, c.threads); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  double best = 0.0;
  for (const auto& pt : pts)
    if (pt.ok) best = std::max(best, pt.objective);
  std::string csv = "axis,value,objective,runtime_sec,degradation,status\n";
  char buf[256];
  for (auto& pt : pts) {  // `values` is sorted, so output is too
    if (pt.ok && c.axis != "snr" && best > 0.0)
      pt.degradation = (best - pt.objective) / best;
    std::snprintf(buf, sizeof(buf), "%s,%g,%.9g,%.3f,%.9g,%s\n",
                  c.axis.c_str(), pt.value, pt.objective, pt.runtime,
                  pt.degradation, pt.ok ? "ok" : ("error: " + pt.error).c_str());
    csv += buf;
  }
  write_file(c.out, csv);
  std::cout << csv;
  for (const auto& pt : pts)
    if (!pt.ok) return 2;
  return 0;
}

int cmd_cluster_compare(const Config& c) {
  Network net = make_network(c);
  int gws = 0;
  for (const auto& v : net.nodes) gws += v.is_gateway;
  if (gws < 2) throw InvalidParams("cluster compare needs >= 2 gateways");

  SolveSettings s = c.solve;
  s.formulation = parse_formulation(c.formulation);

  std::string csv = "name,nodes,gateways,objective,maxmin_exact\n";
  char buf[192];
  auto add_row = [&](const std::string& name, const Network& n) {
    InterferenceMatrix M = compute_link_budget(n, c.prop, c.seed);
    SolveOutcome r = run_solve(n, M, s);
    int g = 0;
    for (const auto& v : n.nodes) g += v.is_gateway;
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.9g,%.9g\n", name.c_str(),
                  n.num_nodes(), g, r.objective, r.report.maxmin);
    csv += buf;
    return r.objective;
  };
  add_row("whole", net);
  std::vector<Network> clusters = cluster_by_gateway(net, c.cluster_group);
  for (size_t i = 0; i < clusters.size(); ++i)
    add_row("cluster-" + std::to_string(i), clusters[i]);
  write_file(c.out, csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint routing and slot allocation for mm-wave mesh backhaul"};
  app.require_subcommand(1);

  std::string config_path, out, formulation, axis;
  std::optional<std::uint64_t> seed;
  std::optional<int> slots, threads;
  std::optional<double> gap;
  bool export_mps = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output path (or prefix for solve)");
  app.add_option("--formulation", formulation,
                 "comb-dl | comb-uldl | scal-dl | scal-uldl");
  app.add_option("--slots", slots, "slot count T for scalable formulations");
  app.add_option("--gap", gap, "MILP relative gap tolerance");
  app.add_option("--threads", threads, "sweep worker threads");
  app.add_flag("--export-mps", export_mps, "also write the model in MPS form");

  auto* c_gen = app.add_subcommand("generate", "generate a topology file");
  auto* c_solve = app.add_subcommand("solve", "solve one instance");
  auto* c_sweep = app.add_subcommand("sweep", "sweep truncation, snr, or uplink");
  c_sweep->add_option("--axis", axis, "truncation | snr | uplink");
  auto* c_cluster =
      app.add_subcommand("cluster-compare", "whole network vs gateway clusters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    Config cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    if (!formulation.empty()) cfg.formulation = formulation;
    if (slots) cfg.solve.slots = *slots;
    if (gap) cfg.solve.milp.gap_tol = *gap;
    if (threads) cfg.threads = *threads;
    if (!axis.empty()) cfg.axis = axis;
    cfg.export_mps = export_mps;

    if (c_gen->parsed()) return cmd_generate(cfg);
    if (c_solve->parsed()) return cmd_solve(cfg);
    if (c_sweep->parsed()) return cmd_sweep(cfg);
    if (c_cluster->parsed()) return cmd_cluster_compare(cfg);
    return 1;
  } catch (const InfeasibleModel& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const NumericalFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const NodeLimitNoIncumbent& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const InconsistentSolution& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
}
