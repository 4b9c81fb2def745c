#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <set>

#include "mmbh/net_model.hpp"

using namespace mmbh;

TEST_CASE("build_network: smallest valid network") {
  std::vector<Node> nodes{{0, 0, 0, 6, true, {}}, {1, 50, 0, 6, false, {}}};
  Network net = build_network(nodes, {{0, 1}});
  CHECK(net.num_links() == 2);
  CHECK(net.num_non_gateway() == 1);
  CHECK(net.num_gateways() == 1);
  CHECK(net.links[0].length == Catch::Approx(50.0));
  CHECK(net.reverse_link(0) == 1);
  CHECK(net.reverse_link(1) == 0);
}

TEST_CASE("build_network: three-node chain") {
  std::vector<Node> nodes{{0, 0, 0, 6, true, {}},
                          {1, 60, 0, 6, false, {}},
                          {2, 120, 0, 6, false, {}}};
  Network net = build_network(nodes, {{0, 1}, {1, 2}});
  CHECK(net.num_links() == 4);
  CHECK(net.num_non_gateway() == 2);
  CHECK(net.in_links(1) == std::vector<int>{0, 3});
  CHECK(net.out_links(1) == std::vector<int>{1, 2});
}

TEST_CASE("build_network: rejects self-loops and duplicates") {
  std::vector<Node> nodes{{0, 0, 0, 6, true, {}}, {1, 50, 0, 6, false, {}}};
  CHECK_THROWS_AS(build_network(nodes, {{1, 1}}), DuplicateOrSelfLoop);
  CHECK_THROWS_AS(build_network(nodes, {{0, 1}, {1, 0}}), DuplicateOrSelfLoop);
}

TEST_CASE("build_network: connectivity and degree invariants") {
  std::vector<Node> iso{{0, 0, 0, 6, true, {}},
                        {1, 50, 0, 6, false, {}},
                        {2, 200, 0, 6, false, {}}};
  CHECK_THROWS_AS(build_network(iso, {{0, 1}}), DisconnectedNetwork);

  std::vector<Node> star;
  star.push_back({0, 0, 0, 6, true, {}});
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= 7; ++i) {
    star.push_back({i, 30.0 * i, 20.0, 6, false, {}});
    edges.emplace_back(0, i);
  }
  for (int i = 1; i < 7; ++i) edges.emplace_back(i, i + 1);  // keep 1..7 tied
  CHECK_THROWS_AS(build_network(star, edges), DegreeViolation);
}

TEST_CASE("generate_suburban: 100-node reference topology") {
  GenParams p;
  p.node_count = 100;
  p.area_side = 500.0;
  p.gateway_fraction = 0.1;
  p.seed = 7;
  Network net = generate_suburban(p);
  CHECK(net.num_nodes() == 100);
  int g = net.num_gateways();
  CHECK((g == 9 || g == 10));
  for (int i = 0; i < net.num_nodes(); ++i)
    CHECK(net.undirected_degree(i) <= kMaxDegree);
  for (const auto& l : net.links) CHECK(l.length >= p.min_link_distance);
  // reverse pairing
  for (int l = 0; l < net.num_links(); ++l) {
    CHECK(net.links[net.reverse_link(l)].tx == net.links[l].rx);
    CHECK(net.links[net.reverse_link(l)].rx == net.links[l].tx);
  }
}

TEST_CASE("generate_suburban: two nodes") {
  GenParams p;
  p.node_count = 2;
  p.area_side = 200.0;
  p.seed = 3;
  Network net = generate_suburban(p);
  CHECK(net.num_gateways() == 1);
  CHECK(net.num_non_gateway() == 1);
  CHECK(net.num_links() == 2);
}

TEST_CASE("generate_suburban: deterministic in the seed") {
  GenParams p;
  p.node_count = 40;
  p.area_side = 300.0;
  p.seed = 123;
  auto a = to_json(generate_suburban(p)).dump();
  auto b = to_json(generate_suburban(p)).dump();
  CHECK(a == b);
  p.seed = 124;
  CHECK(to_json(generate_suburban(p)).dump() != a);
}

TEST_CASE("generate_urban_grid: 48-node 4-gateway fixture") {
  GenParams p;
  p.gateway_fraction = 4.0 / 48.0;
  p.seed = 11;
  UrbanGridParams up;  // defaults: 5x2 blocks of 150x70 m, 50 m spacing
  Network net = generate_urban_grid(p, up);
  CHECK(net.num_nodes() == 48);
  CHECK(net.num_gateways() == 4);
  CHECK(net.environment == Environment::kUrban);
  // gateways sit on intersections and get their full link budget
  for (const auto& v : net.nodes)
    if (v.is_gateway) {
      CHECK(v.canyons.size() >= 2);
      int deg = 0;
      for (const auto& l : net.links)
        if (l.tx == v.id) ++deg;
      CHECK(deg == kMaxDegree);
    }
  REQUIRE(!net.streets.empty());
  for (const auto& s : net.streets) CHECK(s.width == Catch::Approx(25.0));
  for (const auto& v : net.nodes) {
    CHECK(!v.canyons.empty());
    CHECK(v.height >= 5.0);
    CHECK(v.height <= 8.0);
  }
  // links run along streets: endpoints always share a canyon
  for (const auto& l : net.links) CHECK(net.nodes_share_canyon(l.tx, l.rx));
}

TEST_CASE("generate_urban_grid: single street chain") {
  GenParams p;
  p.node_count = 3;
  p.seed = 5;
  UrbanGridParams up;
  up.blocks_x = 1;
  up.blocks_y = 0;
  up.block_w = 100.0;
  up.node_spacing = 50.0;
  Network net = generate_urban_grid(p, up);
  CHECK(net.num_nodes() == 3);
  // two street segments plus the gateway's skip link to the far node, each
  // in both directions
  CHECK(net.num_links() == 6);
  for (const auto& v : net.nodes)
    CHECK(std::count(v.canyons.begin(), v.canyons.end(), 0) == 1);
}

TEST_CASE("cluster_by_gateway: barbell splits cleanly") {
  std::vector<Node> nodes{{0, 0, 0, 6, true, {}},   {1, 50, 0, 6, false, {}},
                          {2, 100, 0, 6, false, {}}, {3, 150, 0, 6, false, {}},
                          {4, 200, 0, 6, true, {}}};
  Network net =
      build_network(nodes, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  auto clusters = cluster_by_gateway(net);
  REQUIRE(clusters.size() == 2);
  int total = 0;
  for (const auto& c : clusters) {
    CHECK(c.num_gateways() == 1);
    total += c.num_nodes();
  }
  CHECK(total == net.num_nodes());
}

TEST_CASE("cluster_by_gateway: urban super-clusters of two gateways") {
  GenParams p;
  p.gateway_fraction = 4.0 / 48.0;
  p.seed = 11;
  Network net = generate_urban_grid(p, UrbanGridParams{});
  auto clusters = cluster_by_gateway(net, 2);
  REQUIRE(clusters.size() == 2);
  int total = 0;
  for (const auto& c : clusters) {
    CHECK(c.num_gateways() == 2);
    total += c.num_nodes();
  }
  CHECK(total == net.num_nodes());
}

TEST_CASE("cluster_by_gateway: requires two gateways") {
  std::vector<Node> nodes{{0, 0, 0, 6, true, {}}, {1, 50, 0, 6, false, {}}};
  Network net = build_network(nodes, {{0, 1}});
  CHECK_THROWS_AS(cluster_by_gateway(net), InvalidParams);
}

TEST_CASE("network serialization round trip is lossless") {
  GenParams p;
  p.node_count = 30;
  p.area_side = 300.0;
  p.seed = 77;
  Network net = generate_suburban(p);
  std::string path = "net_roundtrip.json";
  save_network(net, path);
  Network back = load_network(path);
  CHECK(to_json(back).dump() == to_json(net).dump());
  std::remove(path.c_str());

  Network urb = generate_urban_grid(p, UrbanGridParams{});
  save_network(urb, path);
  CHECK(to_json(load_network(path)).dump() == to_json(urb).dump());
  std::remove(path.c_str());
}
