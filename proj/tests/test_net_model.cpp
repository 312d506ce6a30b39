#include "doctest.h"

#include "ianum/net_model.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

using namespace ianum;

namespace {

LinkParams no_randomness() {
  LinkParams p;
  p.shadowing_sd_db = 0.0;
  p.antenna_gain_db = 0.0;
  return p;
}

double nearest_neighbour(const TopologySpec& t, std::size_t b) {
  double best = INFINITY;
  for (std::size_t o = 0; o < t.bs_positions.size(); ++o)
    if (o != b) best = std::min(best, distance(t.bs_positions[b], t.bs_positions[o]));
  return best;
}

}  // namespace

TEST_CASE("topologies have the declared sizes and spacing") {
  for (double d : {600.0, 1200.0}) {
    const auto three = build_topology(TopologyKind::ThreeSector, d);
    CHECK(three.cluster_size() == 3);
    CHECK(three.bs_positions.size() == 3);
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        CHECK(distance(three.bs_positions[a], three.bs_positions[b]) == doctest::Approx(d));

    const auto ring = build_topology(TopologyKind::Ring5, d);
    CHECK(ring.cluster_size() == 5);
    for (int j = 0; j < 5; ++j)
      CHECK(distance(ring.bs_positions[j], ring.bs_positions[(j + 1) % 5]) == doctest::Approx(d));

    const auto hex = build_topology(TopologyKind::Hex7, d);
    CHECK(hex.cluster_size() == 7);
    CHECK(hex.out_of_cluster_bs_indices().empty());

    const auto big = build_topology(TopologyKind::Hex49Surround, d);
    CHECK(big.bs_positions.size() == 49);
    CHECK(big.cluster_size() == 7);
    CHECK(big.out_of_cluster_bs_indices().size() == 42);
    for (std::size_t b = 0; b < big.bs_positions.size(); ++b)
      CHECK(nearest_neighbour(big, b) == doctest::Approx(d));
    // No two sites coincide and the central cluster is the 7 closest to the origin.
    for (int b : big.out_of_cluster_bs_indices())
      CHECK(std::hypot(big.bs_positions[b].x, big.bs_positions[b].y) > 1.5 * d);
  }
}

TEST_CASE("ring topology has 72 degree rotational symmetry") {
  const auto ring = build_topology(TopologyKind::Ring5, 900.0);
  const double a = 2.0 * std::numbers::pi / 5.0;
  for (int j = 0; j < 5; ++j) {
    const Point p = ring.bs_positions[j];
    const Point rotated{p.x * std::cos(a) - p.y * std::sin(a), p.x * std::sin(a) + p.y * std::cos(a)};
    CHECK(distance(rotated, ring.bs_positions[(j + 1) % 5]) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("cell regions contain their BS and have positive area") {
  for (auto kind : {TopologyKind::ThreeSector, TopologyKind::Ring5, TopologyKind::Hex7,
                    TopologyKind::Hex49Surround}) {
    const auto t = build_topology(kind, 750.0);
    REQUIRE(static_cast<int>(t.cell_regions.size()) == t.cluster_size());
    for (int g = 0; g < t.cluster_size(); ++g) {
      CHECK(area(t.cell_regions[g]) > 0.0);
      CHECK(contains(t.cell_regions[g], t.cluster_bs(g)));
    }
  }
}

TEST_CASE("topology errors") {
  CHECK_THROWS_AS(build_topology(TopologyKind::Hex7, 0.0), ConfigError);
  CHECK_THROWS_AS(build_topology(TopologyKind::Hex7, -5.0), ConfigError);
  CHECK_THROWS_AS(parse_topology_kind("Square9"), ConfigError);
  CHECK(parse_topology_kind("Ring5") == TopologyKind::Ring5);
}

TEST_CASE("drops are deterministic, counted and inside their cells") {
  const auto t = build_topology(TopologyKind::Hex7, 600.0);
  const auto dims = ClusterDims::uniform(7, 4, 4, 4);
  const auto a = drop_users(t, dims, 42);
  const auto b = drop_users(t, dims, 42);
  int total = 0;
  for (int g = 0; g < 7; ++g) {
    REQUIRE(a.user_positions[g].size() == 4);
    for (int k = 0; k < 4; ++k) {
      CHECK(a.user_positions[g][k].x == b.user_positions[g][k].x);
      CHECK(a.user_positions[g][k].y == b.user_positions[g][k].y);
      CHECK(contains(t.cell_regions[g], a.user_positions[g][k]));
      ++total;
    }
  }
  CHECK(total == 28);
  const auto c = drop_users(t, dims, 43);
  CHECK(c.user_positions[0][0].x != a.user_positions[0][0].x);

  const auto excluded = drop_users(t, dims, 42, 100.0);
  for (int g = 0; g < 7; ++g)
    for (const auto& p : excluded.user_positions[g]) CHECK(distance(p, t.cluster_bs(g)) >= 100.0);

  CHECK_THROWS_AS(drop_users(t, ClusterDims::uniform(3, 1, 1, 1), 1), ConfigError);
}

TEST_CASE("user placement is uniform: empirical centroid matches the region centroid") {
  const auto dims = ClusterDims(1, {10000}, 1, 10000);
  for (auto kind : {TopologyKind::Hex7, TopologyKind::Ring5}) {
    auto t = build_topology(kind, 1000.0);
    t.cluster_bs_indices.resize(1);
    t.cell_regions.resize(1);
    const auto drop = drop_users(t, dims, 7);
    double x = 0.0;
    double y = 0.0;
    for (const auto& p : drop.user_positions[0]) {
      x += p.x;
      y += p.y;
    }
    x /= 10000.0;
    y /= 10000.0;
    const Point c = centroid(t.cell_regions[0]);
    const auto box = bounding_box(t.cell_regions[0]);
    const double size = std::max(box[1].x - box[0].x, box[1].y - box[0].y) / 2.0;
    CHECK(distance({x, y}, c) < 0.02 * size);
  }
}

TEST_CASE("pathloss formula") {
  LinkParams p;
  CHECK(pathloss_db(1000.0, p) == doctest::Approx(128.1).epsilon(1e-12));
  CHECK(std::abs(pathloss_db(600.0, p) - 119.89) <= 0.01);
  CHECK_THROWS_AS(pathloss_db(0.0, p), ConfigError);
  double previous = -INFINITY;
  for (double d = 10.0; d < 5000.0; d *= 1.3) {
    const double pl = pathloss_db(d, p);
    CHECK(pl > previous);
    previous = pl;
  }
}

TEST_CASE("link budget defaults give a 16.9 dBm per-tone budget") {
  LinkParams p;
  CHECK(w_to_dbm(p.p_max_w()) == doctest::Approx(16.9).epsilon(1e-9));
  CHECK(w_to_dbm(p.noise_w()) == doctest::Approx(-117.1).epsilon(1e-9));
  LinkParams doubled = p;
  doubled.tone_bandwidth_hz *= 2.0;
  CHECK(doubled.p_max_w() == doctest::Approx(2.0 * p.p_max_w()));
  CHECK(doubled.noise_w() == doctest::Approx(2.0 * p.noise_w()));
}

TEST_CASE("channel realization: determinism, scaling, rank and errors") {
  const auto t = build_topology(TopologyKind::ThreeSector, 600.0);
  const auto dims = ClusterDims::uniform(3, 3, 3, 4);
  const auto drop = drop_users(t, dims, 5, 35.0);
  LinkParams params;
  const auto a = realize_channels(t, drop, dims, params, 11);
  const auto b = realize_channels(t, drop, dims, params, 11);
  REQUIRE(a.h.size() == 27);
  for (std::size_t i = 0; i < a.h.size(); ++i) {
    CHECK(a.h[i] == b.h[i]);
    CHECK(a.h[i].allFinite());
    CHECK(a.h[i].rows() == 3);
    CHECK(a.h[i].cols() == 4);
    Eigen::JacobiSVD<CMatrix> svd(a.h[i]);
    CHECK(svd.singularValues()(2) > 1e-12 * svd.singularValues()(0));
  }
  CHECK(a.sigma_n2 > 0.0);
  CHECK(a.p_max > 0.0);
  for (double nu : a.nu2) CHECK(nu == 0.0);

  LinkParams wide = params;
  wide.tone_bandwidth_hz *= 2.0;
  const auto w = realize_channels(t, drop, dims, wide, 11);
  CHECK(w.sigma_n2 == doctest::Approx(2.0 * a.sigma_n2));
  CHECK(w.p_max == doctest::Approx(2.0 * a.p_max));

  LinkParams bad = params;
  bad.tone_bandwidth_hz = -1.0;
  CHECK_THROWS_AS(realize_channels(t, drop, dims, bad, 11), ConfigError);

  Drop colocated = drop;
  colocated.user_positions[0][0] = t.cluster_bs(0);
  CHECK_THROWS_AS(realize_channels(t, colocated, dims, params, 11), ConfigError);
}

TEST_CASE("Rayleigh entries have unit mean power relative to the large-scale gain") {
  auto t = build_topology(TopologyKind::Hex7, 1000.0);
  const auto dims = ClusterDims::uniform(7, 1, 1, 1);
  Drop drop;
  for (int g = 0; g < 7; ++g) drop.user_positions.push_back({Point{t.cluster_bs(g).x + 600.0, t.cluster_bs(g).y}});
  const LinkParams params = no_randomness();
  const double gain = std::pow(10.0, -pathloss_db(600.0, params) / 10.0);
  double sum = 0.0;
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    const auto cs = realize_channels(t, drop, dims, params, static_cast<std::uint64_t>(s));
    sum += std::norm(cs.at(0, UserId{0, 0})(0, 0)) / gain;
  }
  const double mean = sum / draws;
  CHECK(mean >= 0.97);
  CHECK(mean <= 1.03);
}

TEST_CASE("out-of-cluster interference") {
  SUBCASE("isolated cluster has none") {
    const auto t = build_topology(TopologyKind::Hex7, 900.0);
    const auto dims = ClusterDims::uniform(7, 2, 4, 4);
    const auto drop = drop_users(t, dims, 3, 35.0);
    for (double nu : out_of_cluster_power(t, drop, dims, LinkParams{}, 9)) CHECK(nu == 0.0);
  }
  SUBCASE("single interferer at 1 km") {
    TopologySpec t;
    t.kind = TopologyKind::Hex7;
    t.bs_distance_m = 1000.0;
    t.bs_positions = {{0.0, 0.0}, {1000.0, 500.0}};
    t.cluster_bs_indices = {0};
    t.cell_regions = {Hexagon{{0.0, 0.0}, 600.0}};
    Drop drop;
    drop.user_positions = {{Point{0.0, 500.0}}};
    const auto dims = ClusterDims::uniform(1, 1, 1, 1);
    const LinkParams params = no_randomness();
    const auto nu = out_of_cluster_power(t, drop, dims, params, 1);
    REQUIRE(nu.size() == 1);
    CHECK(nu[0] == doctest::Approx(params.p_max_w() * 1.5488166189124795e-13).epsilon(1e-12));
    const auto cs = realize_channels(t, drop, dims, params, 1);
    CHECK(cs.nu2[0] == doctest::Approx(nu[0]).epsilon(1e-12));
  }
  SUBCASE("edge-of-cluster users see more than central users") {
    const auto t = build_topology(TopologyKind::Hex49Surround, 1000.0);
    const auto dims = ClusterDims::uniform(7, 1, 4, 4);
    Drop drop;
    const Point offset{0.0, 200.0};
    for (int g = 0; g < 7; ++g)
      drop.user_positions.push_back({Point{t.cluster_bs(g).x + offset.x, t.cluster_bs(g).y + offset.y}});
    const auto nu = out_of_cluster_power(t, drop, dims, no_randomness(), 1);
    for (int g = 1; g < 7; ++g) CHECK(nu[g] > nu[0]);
  }
}
