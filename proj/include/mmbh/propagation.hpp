#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmbh/errors.hpp"
#include "mmbh/linear_model.hpp"
#include "mmbh/net_model.hpp"
#include "mmbh/rng.hpp"

namespace mmbh {

struct PropagationParams {
  double nominal_snr_db = 10.0;
  int array_size = 32;
  double wavelength = 0.005;  // 60 GHz carrier
  double wall_permittivity = 6.0;
  double ground_permittivity = 6.0;
  double street_width = 25.0;

  double snr_linear() const { return std::pow(10.0, nominal_snr_db / 10.0); }

  void validate() const {
    if (!std::isfinite(nominal_snr_db)) throw InvalidParams("SNR must be finite");
    if (array_size < 1) throw InvalidParams("array size must be >= 1");
    if (!(wall_permittivity > 1.0) || !(ground_permittivity > 1.0))
      throw InvalidParams("permittivity must exceed 1");
    if (!(wavelength > 0.0)) throw InvalidParams("wavelength must be positive");
  }
};

// Per-link signal PSD and pairwise interference PSD, noise-normalized
// (n = 1). I[k][l] is the interference of link k's transmitter on link l's
// receiver; +infinity marks half-duplex node conflicts.
struct InterferenceMatrix {
  std::vector<double> S;
  std::vector<std::vector<double>> I;
  double noise = 1.0;
  std::uint64_t seed = 0;
  PropagationParams params;

  int num_links() const { return static_cast<int>(S.size()); }
  bool is_infinite(int k, int l) const { return std::isinf(I[k][l]); }
};

// Power gain of an n-element half-wavelength uniform linear array with
// conjugate (phase-steered) weights, boresight along the steer direction.
// Normalized so the steered peak equals n^2; depends only on the angular
// offset and is symmetric in its sign.
inline double array_factor_gain(int array_size, double steer_az,
                                double observe_az) {
  int n = array_size;
  if (n <= 1) return 1.0;
  double delta = observe_az - steer_az;
  double u = std::sin(delta);
  double psi = std::numbers::pi * u;  // half-wavelength element spacing
  double s = std::sin(psi / 2.0);
  if (std::abs(s) < 1e-12) return static_cast<double>(n) * n;
  double num = std::sin(n * psi / 2.0);
  double af = num / s;
  return af * af;
}

// Front-hemisphere element taper. Mesh nodes carry planar array faces that
// cover at most a half-plane of azimuth, so radiation behind the face is
// suppressed; a cosine taper models the element pattern of the active face.
inline double element_gain(double steer_az, double observe_az) {
  double c = std::cos(observe_az - steer_az);
  return std::max(0.0, c);
}

inline double directional_gain(int array_size, double steer_az,
                               double observe_az) {
  return array_factor_gain(array_size, steer_az, observe_az) *
         element_gain(steer_az, observe_az);
}

inline double azimuth(const Node& from, const Node& to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

// Free-space (suburban) channel gain between two nodes with both phased
// arrays steered as given.
inline double suburban_gain(const Node& tx, const Node& rx, double tx_steer,
                            double rx_steer, const PropagationParams& p) {
  double d = tx.dist3d(rx);
  double fs = p.wavelength / (4.0 * std::numbers::pi * d);
  return directional_gain(p.array_size, tx_steer, azimuth(tx, rx)) *
         directional_gain(p.array_size, rx_steer, azimuth(rx, tx)) * fs * fs;
}

// Fresnel reflection coefficient, perpendicular polarization.
// cos_incidence is measured from the surface normal.
inline double fresnel_reflection(double cos_incidence, double permittivity) {
  double s2 = 1.0 - cos_incidence * cos_incidence;
  double root = std::sqrt(std::max(0.0, permittivity - s2));
  return (cos_incidence - root) / (cos_incidence + root);
}

struct PathComponent {
  double amplitude = 0.0;  // signed field amplitude incl. antenna gains
  double length = 0.0;
};

// Image-source decomposition of the street-canyon channel: LOS, one bounce
// off each canyon wall, one bounce off the ground.
inline std::array<PathComponent, 4> canyon_paths(const Node& tx, const Node& rx,
                                                 double tx_steer, double rx_steer,
                                                 const Street& street,
                                                 const PropagationParams& p) {
  // canyon coordinates: s longitudinal, t lateral offset from centerline
  auto lateral = [&](const Node& v) {
    return street.vertical ? v.x - street.center : v.y - street.center;
  };
  auto longitudinal = [&](const Node& v) { return street.vertical ? v.y : v.x; };

  double st = longitudinal(tx), tt = lateral(tx), ht = tx.height;
  double sr = longitudinal(rx), tr = lateral(rx), hr = rx.height;
  double w = street.width;

  auto make_node = [&](double s, double t, double h) {
    Node v;
    if (street.vertical) {
      v.x = street.center + t;
      v.y = s;
    } else {
      v.x = s;
      v.y = street.center + t;
    }
    v.height = h;
    return v;
  };

  std::array<PathComponent, 4> out{};
  struct Image {
    double t, h;      // image of the receiver
    int surface;      // 0 none, 1 wall+, 2 wall-, 3 ground
  };
  const std::array<Image, 4> images{{{tr, hr, 0},
                                     {w - tr, hr, 1},
                                     {-w - tr, hr, 2},
                                     {tr, -hr, 3}}};

  for (int i = 0; i < 4; ++i) {
    Node img_rx = make_node(sr, images[i].t, images[i].h);
    // arrival direction at the receiver comes from the matching TX image
    double img_tt = images[i].surface == 1   ? w - tt
                    : images[i].surface == 2 ? -w - tt
                                             : tt;
    double img_th = images[i].surface == 3 ? -ht : ht;
    Node img_tx = make_node(st, img_tt, img_th);

    double d = tx.dist3d(img_rx);
    if (!(d > 0.0)) continue;
    double g_tx = directional_gain(p.array_size, tx_steer, azimuth(tx, img_rx));
    double g_rx = directional_gain(p.array_size, rx_steer, azimuth(rx, img_tx));
    double amp = std::sqrt(g_tx * g_rx) * p.wavelength /
                 (4.0 * std::numbers::pi * d);

    if (images[i].surface == 1 || images[i].surface == 2) {
      // incidence from the wall normal (lateral direction)
      double cosi = std::abs(images[i].t - tt) / d;
      amp *= fresnel_reflection(cosi, p.wall_permittivity);
    } else if (images[i].surface == 3) {
      double cosi = (ht + hr) / d;
      amp *= fresnel_reflection(cosi, p.ground_permittivity);
    }
    out[i] = {amp, d};
  }
  return out;
}

inline double coherent_power_sum(const std::array<PathComponent, 4>& paths,
                                 const std::array<double, 4>& phases) {
  std::complex<double> acc = 0.0;
  for (int i = 0; i < 4; ++i)
    acc += paths[i].amplitude *
           std::complex<double>(std::cos(phases[i]), std::sin(phases[i]));
  return std::norm(acc);
}

// Street-canyon channel gain: coherent sum of the four image paths with
// per-path phases drawn uniformly from [0, 2pi) out of the supplied rng.
inline double urban_canyon_gain(const Node& tx, const Node& rx, double tx_steer,
                                double rx_steer, const Street& street,
                                const PropagationParams& p, Rng& rng) {
  auto paths = canyon_paths(tx, rx, tx_steer, rx_steer, street, p);
  std::array<double, 4> phases{};
  for (auto& ph : phases) ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return coherent_power_sum(paths, phases);
}

// Full link budget: per-link transmit power controlled so every link sees
// the nominal SNR, pairwise interference under the environment's propagation
// model, node conflicts (shared endpoint with opposing roles) at +infinity,
// and zero across different urban canyons (building blockage).
inline InterferenceMatrix compute_link_budget(const Network& net,
                                              const PropagationParams& p,
                                              std::uint64_t seed) {
  p.validate();
  const int L = net.num_links();
  const bool urban = net.environment == Environment::kUrban;
  double snr = p.snr_linear();

  InterferenceMatrix M;
  M.noise = 1.0;
  M.seed = seed;
  M.params = p;
  M.S.assign(L, snr);
  M.I.assign(L, std::vector<double>(L, 0.0));

  // per-link steering and power scale
  std::vector<double> tx_steer(L), rx_steer(L), power(L);
  for (int l = 0; l < L; ++l) {
    const Node& a = net.nodes[net.links[l].tx];
    const Node& b = net.nodes[net.links[l].rx];
    tx_steer[l] = azimuth(a, b);
    rx_steer[l] = azimuth(b, a);
    double g;
    if (urban) {
      int c = net.common_canyon(a.id, b.id);
      if (c < 0) throw InvalidParams("urban link endpoints share no canyon");
      Rng rng(derive_seed(seed, "phases", l, l));
      g = urban_canyon_gain(a, b, tx_steer[l], rx_steer[l], net.streets[c], p,
                            rng);
    } else {
      g = suburban_gain(a, b, tx_steer[l], rx_steer[l], p);
    }
    if (!(g > 0.0))
      throw NumericalFailure("vanishing channel gain on link " +
                             std::to_string(l) + " (seed " +
                             std::to_string(seed) + ")");
    power[l] = snr / g;
  }

  for (int k = 0; k < L; ++k) {
    const Link& lk = net.links[k];
    for (int l = 0; l < L; ++l) {
      if (k == l) continue;
      const Link& ll = net.links[l];
      // half-duplex: k transmits at l's receiver or k receives at l's
      // transmitter (covers the two directions of one edge)
      if (lk.tx == ll.rx || lk.rx == ll.tx) {
        M.I[k][l] = kInf;
        continue;
      }
      const Node& src = net.nodes[lk.tx];
      const Node& dst = net.nodes[ll.rx];
      double g;
      if (urban) {
        int c = net.common_canyon(src.id, dst.id);
        if (c < 0) continue;  // blocked by buildings
        Rng rng(derive_seed(seed, "phases", k, l));
        g = urban_canyon_gain(src, dst, tx_steer[k], rx_steer[l],
                              net.streets[c], p, rng);
      } else {
        g = suburban_gain(src, dst, tx_steer[k], rx_steer[l], p);
      }
      M.I[k][l] = power[k] * g;
    }
  }
  return M;
}

// ---- serialization ----

inline nlohmann::json to_json(const InterferenceMatrix& M) {
  nlohmann::json j;
  j["noise"] = M.noise;
  j["seed"] = M.seed;
  j["params"] = {{"nominal_snr_db", M.params.nominal_snr_db},
                 {"array_size", M.params.array_size},
                 {"wavelength", M.params.wavelength},
                 {"wall_permittivity", M.params.wall_permittivity},
                 {"ground_permittivity", M.params.ground_permittivity},
                 {"street_width", M.params.street_width}};
  j["S"] = M.S;
  auto& tri = j["I"] = nlohmann::json::array();
  for (int k = 0; k < M.num_links(); ++k)
    for (int l = 0; l < M.num_links(); ++l) {
      if (M.I[k][l] == 0.0) continue;
      nlohmann::json e = {k, l, M.I[k][l]};
      if (std::isinf(M.I[k][l])) e[2] = "inf";
      tri.push_back(e);
    }
  return j;
}

inline InterferenceMatrix interference_from_json(const nlohmann::json& j) {
  InterferenceMatrix M;
  M.noise = j.at("noise");
  M.seed = j.at("seed");
  const auto& pj = j.at("params");
  M.params.nominal_snr_db = pj.at("nominal_snr_db");
  M.params.array_size = pj.at("array_size");
  M.params.wavelength = pj.at("wavelength");
  M.params.wall_permittivity = pj.at("wall_permittivity");
  M.params.ground_permittivity = pj.at("ground_permittivity");
  M.params.street_width = pj.at("street_width");
  M.S = j.at("S").get<std::vector<double>>();
  int L = M.num_links();
  M.I.assign(L, std::vector<double>(L, 0.0));
  for (const auto& e : j.at("I")) {
    int k = e.at(0), l = e.at(1);
    M.I[k][l] = e.at(2).is_string() ? kInf : e.at(2).get<double>();
  }
  return M;
}

inline void save_interference(const InterferenceMatrix& M,
                              const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << to_json(M).dump() << "\n";
}

inline InterferenceMatrix load_interference(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  nlohmann::json j;
  f >> j;
  return interference_from_json(j);
}

}  // namespace mmbh
