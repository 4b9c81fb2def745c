#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmbh/errors.hpp"
#include "mmbh/rng.hpp"

namespace mmbh {

constexpr int kMaxDegree = 6;

enum class Environment { kSuburban, kUrban };

inline std::string to_string(Environment e) {
  return e == Environment::kSuburban ? "suburban" : "urban";
}

struct Node {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double height = 1.0;
  bool is_gateway = false;
  // Street (canyon) ids this node belongs to; empty in suburban networks.
  // Intersection nodes carry both crossing streets.
  std::vector<int> canyons;

  double dist2d(const Node& o) const { return std::hypot(x - o.x, y - o.y); }
  double dist3d(const Node& o) const {
    return std::sqrt((x - o.x) * (x - o.x) + (y - o.y) * (y - o.y) +
                     (height - o.height) * (height - o.height));
  }
};

struct Link {
  int id = 0;
  int tx = 0;
  int rx = 0;
  double length = 0.0;
};

// Street canyon geometry for the urban model. Streets are axis-aligned;
// `center` is the centerline coordinate (y for horizontal, x for vertical).
struct Street {
  bool vertical = false;
  double center = 0.0;
  double width = 25.0;
};

struct GenParams {
  int node_count = 100;
  double area_side = 500.0;
  double gateway_fraction = 0.1;
  int degree_lo = 3;
  int degree_hi = 5;
  double min_link_distance = 10.0;
  double truncation_threshold = 120.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (node_count < 2) throw InvalidParams("node_count must be >= 2");
    if (!(gateway_fraction > 0.0 && gateway_fraction <= 1.0))
      throw InvalidParams("gateway_fraction must be in (0,1]");
    if (degree_lo < 1 || degree_hi > kMaxDegree || degree_lo > degree_hi)
      throw InvalidParams("degree range must lie within [1,6]");
    if (!(area_side > 0.0) || !(min_link_distance > 0.0) ||
        !(truncation_threshold > 0.0))
      throw InvalidParams("lengths must be positive");
  }
};

// Defaults give a Manhattan-like strip: long east-west blocks, short
// north-south ones, 48 nodes total.
struct UrbanGridParams {
  int blocks_x = 5;
  int blocks_y = 2;
  double block_w = 150.0;
  double block_h = 70.0;
  double node_spacing = 50.0;
  double street_width = 25.0;

  void validate() const {
    // blocks_y = 0 degenerates to a single horizontal street
    if (blocks_x < 1 || blocks_y < 0)
      throw InvalidParams("grid dimensions must be >= 1");
    if (!(block_w > 0.0) || !(block_h > 0.0) || !(node_spacing > 0.0) ||
        !(street_width > 0.0))
      throw InvalidParams("grid lengths must be positive");
  }
};

class Network {
 public:
  std::vector<Node> nodes;
  std::vector<Link> links;
  Environment environment = Environment::kSuburban;
  std::vector<Street> streets;  // urban only
  std::optional<GenParams> gen_params;
  std::optional<UrbanGridParams> urban_params;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_links() const { return static_cast<int>(links.size()); }
  // N in the optimization: non-gateway node count
  int num_non_gateway() const {
    int n = 0;
    for (const auto& v : nodes) n += v.is_gateway ? 0 : 1;
    return n;
  }
  int num_gateways() const { return num_nodes() - num_non_gateway(); }

  // Links are stored as consecutive (a->b, b->a) pairs.
  int reverse_link(int l) const { return l ^ 1; }

  std::vector<int> in_links(int node) const {
    std::vector<int> r;
    for (const auto& l : links)
      if (l.rx == node) r.push_back(l.id);
    return r;
  }
  std::vector<int> out_links(int node) const {
    std::vector<int> r;
    for (const auto& l : links)
      if (l.tx == node) r.push_back(l.id);
    return r;
  }

  int undirected_degree(int node) const {
    int d = 0;
    for (const auto& l : links)
      if (l.tx == node) ++d;
    return d;
  }

  bool nodes_share_canyon(int a, int b) const {
    for (int c : nodes[a].canyons)
      for (int c2 : nodes[b].canyons)
        if (c == c2) return true;
    return false;
  }
  // First canyon shared by the two nodes, or -1.
  int common_canyon(int a, int b) const {
    for (int c : nodes[a].canyons)
      for (int c2 : nodes[b].canyons)
        if (c == c2) return c;
    return -1;
  }

  void validate() const;
};

namespace detail {

inline std::vector<std::vector<int>> adjacency(
    int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

// Undirected BFS hop distances from a source.
inline std::vector<int> bfs_hops(const std::vector<std::vector<int>>& adj,
                                 int src) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int w : adj[v])
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push_back(w);
      }
  }
  return dist;
}

}  // namespace detail

inline void Network::validate() const {
  const int n = num_nodes();
  for (int i = 0; i < n; ++i) {
    const Node& v = nodes[i];
    if (v.id != i) throw InvalidParams("node ids must be contiguous 0..n-1");
    if (!(v.height > 0.0)) throw InvalidParams("node height must be positive");
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw InvalidParams("node positions must be finite");
  }
  if (links.size() % 2 != 0) throw InvalidParams("link count must be even");
  for (size_t l = 0; l < links.size(); ++l) {
    const Link& lk = links[l];
    if (lk.id != static_cast<int>(l))
      throw InvalidParams("link ids must be contiguous");
    if (lk.tx == lk.rx) throw DuplicateOrSelfLoop("self-loop link");
    const Link& rev = links[l ^ 1];
    if (rev.tx != lk.rx || rev.rx != lk.tx)
      throw InvalidParams("reverse link pairing broken");
  }
  for (int i = 0; i < n; ++i) {
    if (undirected_degree(i) > kMaxDegree)
      throw DegreeViolation("node " + std::to_string(i) + " exceeds degree " +
                            std::to_string(kMaxDegree));
  }
  // every non-gateway must reach some gateway (links come in reverse pairs,
  // so undirected reachability covers both directions)
  std::vector<std::pair<int, int>> edges;
  for (size_t l = 0; l < links.size(); l += 2)
    edges.emplace_back(links[l].tx, links[l].rx);
  auto adj = detail::adjacency(n, edges);
  std::vector<int> reach(n, 0);
  for (int i = 0; i < n; ++i)
    if (nodes[i].is_gateway) {
      auto d = detail::bfs_hops(adj, i);
      for (int j = 0; j < n; ++j)
        if (d[j] >= 0) reach[j] = 1;
    }
  for (int i = 0; i < n; ++i)
    if (!nodes[i].is_gateway && !reach[i])
      throw DisconnectedNetwork("node " + std::to_string(i) +
                                " has no path to a gateway");
}

// Expands undirected edges into directed link pairs and validates the result.
inline Network build_network(std::vector<Node> nodes,
                             const std::vector<std::pair<int, int>>& edges,
                             Environment env = Environment::kSuburban,
                             std::vector<Street> streets = {}) {
  Network net;
  const int n = static_cast<int>(nodes.size());
  std::set<std::pair<int, int>> seen;
  net.environment = env;
  net.streets = std::move(streets);
  net.nodes = std::move(nodes);
  for (auto [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw InvalidParams("edge endpoint out of range");
    if (a == b) throw DuplicateOrSelfLoop("self-loop edge");
    auto key = std::minmax(a, b);
    if (!seen.insert(key).second) throw DuplicateOrSelfLoop("duplicate edge");
    double len = net.nodes[a].dist3d(net.nodes[b]);
    int id = static_cast<int>(net.links.size());
    net.links.push_back({id, a, b, len});
    net.links.push_back({id + 1, b, a, len});
  }
  net.validate();
  return net;
}

namespace detail {

// Gateways are the distinct nodes nearest to a grid of anchor points spread
// over the area; the grid aspect follows the area's (4 gateways on a long
// strip become a 4x1 row, on a square a 2x2 grid). `eligible` restricts the
// candidate set (urban grids only use intersections: a wired drop at a
// mid-street relay would bottleneck its whole street).
inline void assign_gateways(std::vector<Node>& nodes, int want, double x0,
                            double y0, double w, double h,
                            const std::vector<int>* eligible = nullptr) {
  int ka = 1, kb = want;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int a = 1; a <= want; ++a) {
    int b = (want + a - 1) / a;
    double cw = w / a, ch = std::max(h, 1e-9) / b;
    double cost = std::max(cw, ch) / std::max(std::min(cw, ch), 1e-9);
    if (cost < best_cost) {
      best_cost = cost;
      ka = a;
      kb = b;
    }
  }
  int made = 0;
  for (int j = 0; j < kb && made < want; ++j) {
    for (int i = 0; i < ka && made < want; ++i) {
      double ax = x0 + (i + 0.5) * w / ka;
      double ay = y0 + (j + 0.5) * h / kb;
      int best = -1;
      double bd = std::numeric_limits<double>::infinity();
      auto consider = [&](const Node& v) {
        if (v.is_gateway) return;
        double d = std::hypot(v.x - ax, v.y - ay);
        if (d < bd) {
          bd = d;
          best = v.id;
        }
      };
      if (eligible)
        for (int id : *eligible) consider(nodes[id]);
      else
        for (const auto& v : nodes) consider(v);
      if (best >= 0) {
        nodes[best].is_gateway = true;
        ++made;
      }
    }
  }
  if (made == 0) nodes[0].is_gateway = true;
}

}  // namespace detail

// Random suburban topology: uniform node placement with a minimum spacing,
// nearest-neighbor connection with a per-node degree draw, and truncation of
// overlong links.
inline Network generate_suburban(const GenParams& p) {
  p.validate();
  Rng rng(derive_seed(p.seed, "topology"));

  std::vector<Node> nodes;
  const int kMaxRejects = 100000;
  int rejects = 0;
  while (static_cast<int>(nodes.size()) < p.node_count) {
    double x = rng.uniform(0.0, p.area_side);
    double y = rng.uniform(0.0, p.area_side);
    bool ok = true;
    for (const auto& v : nodes)
      if (std::hypot(v.x - x, v.y - y) < p.min_link_distance) {
        ok = false;
        break;
      }
    if (!ok) {
      if (++rejects > kMaxRejects)
        throw GenerationFailure("node placement failed (seed " +
                                std::to_string(p.seed) + ")");
      continue;
    }
    int id = static_cast<int>(nodes.size());
    // rooftop-mounted; modest height spread keeps links LOS-like
    nodes.push_back({id, x, y, rng.uniform(5.0, 8.0), false, {}});
  }

  int gw = std::max(1, static_cast<int>(std::lround(p.gateway_fraction *
                                                    p.node_count)));
  detail::assign_gateways(nodes, gw, 0.0, 0.0, p.area_side, p.area_side);

  const int n = p.node_count;
  std::vector<int> degree(n, 0);
  std::set<std::pair<int, int>> edge_set;
  auto add_edge = [&](int a, int b) {
    auto key = std::minmax(a, b);
    if (edge_set.count(key)) return false;
    edge_set.insert(key);
    ++degree[a];
    ++degree[b];
    return true;
  };

  for (int i = 0; i < n; ++i) {
    // gateway degree is pinned to the cap; wired drops are worth saturating
    int want = nodes[i].is_gateway
                   ? kMaxDegree
                   : static_cast<int>(rng.uniform_int(
                         static_cast<std::uint64_t>(p.degree_lo),
                         static_cast<std::uint64_t>(p.degree_hi)));
    std::vector<int> order;
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double da = nodes[i].dist2d(nodes[a]), db = nodes[i].dist2d(nodes[b]);
      if (da != db) return da < db;
      return a < b;
    });
    // connect to nearest neighbors, skipping peers already at the cap
    for (int j : order) {
      if (degree[i] >= want) break;
      if (degree[i] >= kMaxDegree) break;
      if (degree[j] >= kMaxDegree) continue;
      add_edge(i, j);
    }
  }

  // truncate overlong links, then reconnect any node left isolated to its
  // single nearest neighbor regardless of threshold
  std::vector<std::pair<int, int>> edges;
  for (auto [a, b] : edge_set)
    if (nodes[a].dist2d(nodes[b]) <= p.truncation_threshold)
      edges.emplace_back(a, b);
  {
    std::vector<int> deg(n, 0);
    for (auto [a, b] : edges) {
      ++deg[a];
      ++deg[b];
    }
    for (int i = 0; i < n; ++i) {
      if (deg[i] > 0) continue;
      int best = -1;
      double bd = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (j == i || deg[j] >= kMaxDegree) continue;
        double d = nodes[i].dist2d(nodes[j]);
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      if (best < 0) throw GenerationFailure("cannot reconnect isolated node");
      edges.emplace_back(i, best);
      ++deg[i];
      ++deg[best];
    }
  }

  // stitch gateway-less components to the nearest reached node
  for (int guard = 0; guard < n; ++guard) {
    auto adj = detail::adjacency(n, edges);
    std::vector<int> reach(n, 0);
    for (int i = 0; i < n; ++i)
      if (nodes[i].is_gateway) {
        auto d = detail::bfs_hops(adj, i);
        for (int j = 0; j < n; ++j)
          if (d[j] >= 0) reach[j] = 1;
      }
    std::vector<int> deg(n, 0);
    for (auto [a, b] : edges) {
      ++deg[a];
      ++deg[b];
    }
    int bi = -1, bj = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (reach[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (!reach[j]) continue;
        if (deg[i] >= kMaxDegree || deg[j] >= kMaxDegree) continue;
        double d = nodes[i].dist2d(nodes[j]);
        if (d < bd) {
          bd = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;  // everything reached (or nothing fixable)
    edges.emplace_back(bi, bj);
  }

  Network net = build_network(std::move(nodes), edges, Environment::kSuburban);
  net.gen_params = p;
  return net;
}

// Urban street-canyon grid: nodes along the streets of a rectangular block
// grid, lateral offsets and heights jittered, links between consecutive
// nodes on each street.
inline Network generate_urban_grid(const GenParams& p,
                                   const UrbanGridParams& up) {
  p.validate();
  up.validate();
  Rng rng(derive_seed(p.seed, "topology"));

  std::vector<Street> streets;
  // horizontal streets first, then vertical
  for (int j = 0; j <= up.blocks_y; ++j)
    streets.push_back({false, j * up.block_h, up.street_width});
  for (int i = 0; i <= up.blocks_x; ++i)
    streets.push_back({true, i * up.block_w, up.street_width});
  auto hstreet = [&](int j) { return j; };
  auto vstreet = [&](int i) { return up.blocks_y + 1 + i; };

  // lateral jitter per Table-I style placement: node sits U(4,21) m from one
  // wall of a 25 m street, i.e. centered uniform over +-8.5 m
  double half = up.street_width / 2.0;
  auto jitter = [&]() { return rng.uniform(4.0, up.street_width - 4.0) - half; };

  std::vector<Node> nodes;
  auto add_node = [&](double x, double y, std::vector<int> canyons) {
    int id = static_cast<int>(nodes.size());
    nodes.push_back({id, x, y, rng.uniform(5.0, 8.0), false, std::move(canyons)});
    return id;
  };

  // intersections
  std::vector<std::vector<int>> xid(up.blocks_x + 1,
                                    std::vector<int>(up.blocks_y + 1));
  for (int i = 0; i <= up.blocks_x; ++i)
    for (int j = 0; j <= up.blocks_y; ++j)
      xid[i][j] = add_node(i * up.block_w + jitter(), j * up.block_h + jitter(),
                           {hstreet(j), vstreet(i)});

  std::vector<std::pair<int, int>> edges;
  auto chain = [&](int from, int to, bool along_x, double fixed, int street,
                   double a0, double a1) {
    // interior nodes between two intersections, then consecutive links
    int interior = std::max(
        0, static_cast<int>(std::lround((a1 - a0) / up.node_spacing)) - 1);
    int prev = from;
    for (int k = 1; k <= interior; ++k) {
      double t = a0 + (a1 - a0) * k / (interior + 1);
      int id = along_x ? add_node(t, fixed + jitter(), {street})
                       : add_node(fixed + jitter(), t, {street});
      edges.emplace_back(prev, id);
      prev = id;
    }
    edges.emplace_back(prev, to);
  };

  for (int j = 0; j <= up.blocks_y; ++j)
    for (int i = 0; i < up.blocks_x; ++i)
      chain(xid[i][j], xid[i + 1][j], true, j * up.block_h, hstreet(j),
            i * up.block_w, (i + 1) * up.block_w);
  for (int i = 0; i <= up.blocks_x; ++i)
    for (int j = 0; j < up.blocks_y; ++j)
      chain(xid[i][j], xid[i][j + 1], false, i * up.block_w, vstreet(i),
            j * up.block_h, (j + 1) * up.block_h);

  int gw = std::max(1, static_cast<int>(std::lround(
                           p.gateway_fraction * nodes.size())));
  std::vector<int> intersections;
  for (const auto& v : nodes)
    if (v.canyons.size() >= 2) intersections.push_back(v.id);
  detail::assign_gateways(nodes, gw, 0.0, 0.0, up.blocks_x * up.block_w,
                          up.blocks_y * up.block_h, &intersections);

  // Gateway degree is pinned to the cap: add LOS skip links to the nearest
  // not-yet-adjacent nodes sharing one of the gateway's canyons
  std::set<std::pair<int, int>> have;
  for (auto [a, b] : edges) have.insert(std::minmax(a, b));
  auto degree_of = [&](int id) {
    int d = 0;
    for (auto [a, b] : edges) d += (a == id) + (b == id);
    return d;
  };
  for (const auto& v : nodes) {
    if (!v.is_gateway) continue;
    std::vector<int> cands;
    for (const auto& o : nodes) {
      if (o.id == v.id) continue;
      bool shared = false;
      for (int c : o.canyons)
        for (int cc : v.canyons) shared |= (c == cc);
      auto key = std::minmax(v.id, o.id);
      if (shared && !have.count(key)) cands.push_back(o.id);
    }
    std::sort(cands.begin(), cands.end(), [&](int a, int b) {
      double da = v.dist2d(nodes[a]), db = v.dist2d(nodes[b]);
      if (da != db) return da < db;
      return a < b;
    });
    for (int id : cands) {
      if (degree_of(v.id) >= kMaxDegree) break;
      if (degree_of(id) >= kMaxDegree) continue;
      edges.emplace_back(v.id, id);
      have.insert(std::minmax(v.id, id));
    }
  }

  Network net =
      build_network(std::move(nodes), edges, Environment::kUrban, streets);
  net.gen_params = p;
  net.urban_params = up;
  return net;
}

// Partition around gateways by hop count (ties by Euclidean distance).
// group_size > 1 merges that many mutually-nearest gateways per cluster.
inline std::vector<Network> cluster_by_gateway(const Network& net,
                                               int group_size = 1) {
  const int n = net.num_nodes();
  std::vector<int> gws;
  for (const auto& v : net.nodes)
    if (v.is_gateway) gws.push_back(v.id);
  if (gws.size() < 2) throw InvalidParams("clustering needs >= 2 gateways");
  if (group_size < 1) throw InvalidParams("group_size must be >= 1");

  // group gateways greedily by proximity
  std::vector<int> group_of(n, -1);
  std::vector<std::vector<int>> groups;
  {
    std::vector<bool> used(gws.size(), false);
    for (size_t i = 0; i < gws.size(); ++i) {
      if (used[i]) continue;
      std::vector<int> g{gws[i]};
      used[i] = true;
      while (static_cast<int>(g.size()) < group_size) {
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < gws.size(); ++j) {
          if (used[j]) continue;
          double d = net.nodes[g[0]].dist2d(net.nodes[gws[j]]);
          if (d < bd) {
            bd = d;
            best = static_cast<int>(j);
          }
        }
        if (best < 0) break;
        used[best] = true;
        g.push_back(gws[best]);
      }
      for (int v : g) group_of[v] = static_cast<int>(groups.size());
      groups.push_back(std::move(g));
    }
  }

  std::vector<std::pair<int, int>> edges;
  for (int l = 0; l < net.num_links(); l += 2)
    edges.emplace_back(net.links[l].tx, net.links[l].rx);
  auto adj = detail::adjacency(n, edges);

  // nearest gateway by hops, ties by Euclidean distance
  std::vector<int> assign(n, -1);
  std::vector<double> best_hops(n, std::numeric_limits<double>::infinity());
  std::vector<double> best_eu(n, std::numeric_limits<double>::infinity());
  for (int g : gws) {
    auto hops = detail::bfs_hops(adj, g);
    for (int v = 0; v < n; ++v) {
      if (hops[v] < 0) continue;
      double eu = net.nodes[v].dist2d(net.nodes[g]);
      if (hops[v] < best_hops[v] ||
          (hops[v] == best_hops[v] && eu < best_eu[v])) {
        best_hops[v] = hops[v];
        best_eu[v] = eu;
        assign[v] = group_of[g];
      }
    }
  }

  // repair: every node must reach a gateway inside its own cluster
  for (int guard = 0; guard < n; ++guard) {
    std::vector<int> ok(n, 0);
    for (int g : gws) {
      std::deque<int> q{g};
      std::vector<int> seen(n, 0);
      seen[g] = 1;
      while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        ok[v] = 1;
        for (int w : adj[v])
          if (!seen[w] && assign[w] == assign[g]) {
            seen[w] = 1;
            q.push_back(w);
          }
      }
    }
    int moved = 0;
    for (int v = 0; v < n; ++v) {
      if (ok[v]) continue;
      for (int w : adj[v])
        if (ok[w]) {
          assign[v] = assign[w];
          ++moved;
          break;
        }
    }
    if (!moved) break;
  }

  std::vector<Network> out;
  for (size_t c = 0; c < groups.size(); ++c) {
    std::vector<Node> cn;
    std::vector<int> remap(n, -1);
    for (int v = 0; v < n; ++v)
      if (assign[v] == static_cast<int>(c)) {
        Node nd = net.nodes[v];
        nd.id = static_cast<int>(cn.size());
        remap[v] = nd.id;
        cn.push_back(nd);
      }
    std::vector<std::pair<int, int>> ce;
    for (auto [a, b] : edges)
      if (remap[a] >= 0 && remap[b] >= 0) ce.emplace_back(remap[a], remap[b]);
    Network sub = build_network(std::move(cn), ce, net.environment, net.streets);
    out.push_back(std::move(sub));
  }
  return out;
}

// ---- serialization (JSON; lossless round trip) ----

inline nlohmann::json to_json(const Network& net) {
  nlohmann::json j;
  j["environment"] = to_string(net.environment);
  if (net.gen_params) {
    const auto& p = *net.gen_params;
    j["gen_params"] = {{"node_count", p.node_count},
                       {"area_side", p.area_side},
                       {"gateway_fraction", p.gateway_fraction},
                       {"degree_lo", p.degree_lo},
                       {"degree_hi", p.degree_hi},
                       {"min_link_distance", p.min_link_distance},
                       {"truncation_threshold", p.truncation_threshold},
                       {"seed", p.seed}};
  }
  if (net.urban_params) {
    const auto& u = *net.urban_params;
    j["urban_params"] = {{"blocks_x", u.blocks_x},   {"blocks_y", u.blocks_y},
                         {"block_w", u.block_w},     {"block_h", u.block_h},
                         {"node_spacing", u.node_spacing},
                         {"street_width", u.street_width}};
  }
  for (const auto& s : net.streets)
    j["streets"].push_back(
        {{"vertical", s.vertical}, {"center", s.center}, {"width", s.width}});
  for (const auto& v : net.nodes)
    j["nodes"].push_back({{"id", v.id},
                          {"x", v.x},
                          {"y", v.y},
                          {"height", v.height},
                          {"gateway", v.is_gateway},
                          {"canyons", v.canyons}});
  for (int l = 0; l < net.num_links(); l += 2)
    j["edges"].push_back({net.links[l].tx, net.links[l].rx});
  return j;
}

inline Network network_from_json(const nlohmann::json& j) {
  std::vector<Node> nodes;
  for (const auto& nj : j.at("nodes")) {
    Node v;
    v.id = nj.at("id");
    v.x = nj.at("x");
    v.y = nj.at("y");
    v.height = nj.at("height");
    v.is_gateway = nj.at("gateway");
    v.canyons = nj.at("canyons").get<std::vector<int>>();
    nodes.push_back(v);
  }
  std::vector<std::pair<int, int>> edges;
  if (j.contains("edges"))
    for (const auto& ej : j.at("edges"))
      edges.emplace_back(ej.at(0).get<int>(), ej.at(1).get<int>());
  std::vector<Street> streets;
  if (j.contains("streets"))
    for (const auto& sj : j.at("streets"))
      streets.push_back({sj.at("vertical"), sj.at("center"), sj.at("width")});
  Environment env = j.at("environment") == "urban" ? Environment::kUrban
                                                   : Environment::kSuburban;
  Network net = build_network(std::move(nodes), edges, env, streets);
  if (j.contains("gen_params")) {
    const auto& pj = j.at("gen_params");
    GenParams p;
    p.node_count = pj.at("node_count");
    p.area_side = pj.at("area_side");
    p.gateway_fraction = pj.at("gateway_fraction");
    p.degree_lo = pj.at("degree_lo");
    p.degree_hi = pj.at("degree_hi");
    p.min_link_distance = pj.at("min_link_distance");
    p.truncation_threshold = pj.at("truncation_threshold");
    p.seed = pj.at("seed");
    net.gen_params = p;
  }
  if (j.contains("urban_params")) {
    const auto& uj = j.at("urban_params");
    UrbanGridParams u;
    u.blocks_x = uj.at("blocks_x");
    u.blocks_y = uj.at("blocks_y");
    u.block_w = uj.at("block_w");
    u.block_h = uj.at("block_h");
    u.node_spacing = uj.at("node_spacing");
    u.street_width = uj.at("street_width");
    net.urban_params = u;
  }
  return net;
}

inline void save_network(const Network& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << to_json(net).dump(2) << "\n";
}

inline Network load_network(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  nlohmann::json j;
  f >> j;
  return network_from_json(j);
}

}  // namespace mmbh
