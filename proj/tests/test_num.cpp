#include "doctest.h"

#include "ianum/num.hpp"
#include "ianum/rng.hpp"
#include "support.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

using namespace ianum;
using ianum::testing::make_channels;

namespace {

ChannelSet gaussian_channels(const ClusterDims& dims, std::uint64_t seed, double sigma2, double p_max,
                             double cross_scale = 1.0) {
  auto cs = ChannelSet::zeros(dims, sigma2, p_max);
  Rng rng(seed);
  for (int i = 0; i < dims.cells(); ++i)
    for (const auto& u : dims.all_users()) {
      cs.at(i, u) = complex_normal_matrix(rng, dims.rx_antennas(), dims.tx_antennas());
      if (i != u.cell) cs.at(i, u) *= cross_scale;
    }
  return cs;
}

double min_of(const std::vector<double>& x) { return *std::min_element(x.begin(), x.end()); }

}  // namespace

TEST_CASE("SINR matches a direct recomputation") {
  const auto dims = ClusterDims::uniform(3, 2, 3, 4);
  auto cs = make_channels(TopologyKind::ThreeSector, 900.0, dims, 4);
  cs.nu2[1] = 3.0 * cs.sigma_n2;
  const auto bf = random_initialization(cs, 7);
  for (const auto& user : dims.all_users()) {
    const int me = dims.flat(user);
    const CVector& u = bf.u[me];
    double signal = 0.0;
    double rest = cs.sigma_n2 + cs.nu2[me];
    for (const auto& other : dims.all_users()) {
      const double p = std::norm((u.adjoint() * cs.at(other.cell, user) * bf.v[dims.flat(other)])(0, 0));
      (other == user ? signal : rest) += p;
    }
    CHECK(sinr(cs, bf, user) == doctest::Approx(signal / rest).epsilon(1e-12));
  }
  CHECK(rate_with_gap(3.0, 1.0) == doctest::Approx(2.0));
  CHECK(rate_with_gap(7.0, 2.0) == doctest::Approx(std::log2(4.5)));
}

TEST_CASE("random initialization: orthogonal columns at p_max / K") {
  const auto dims = ClusterDims::uniform(3, 3, 3, 4);
  const auto cs = make_channels(TopologyKind::ThreeSector, 600.0, dims, 1);
  const auto bf = random_initialization(cs, 2);
  for (int g = 0; g < 3; ++g) {
    const CMatrix v = bf.cell_precoder(dims, g);
    const CMatrix gram = v.adjoint() * v;
    CHECK((gram - (cs.p_max / 3.0) * CMatrix::Identity(3, 3)).norm() < 1e-12 * cs.p_max);
    CHECK(bf.bs_power(dims, g) == doctest::Approx(cs.p_max));
  }
  for (const auto& u : bf.u) CHECK(u.norm() == doctest::Approx(1.0));
  const auto scaled = equal_power(cs, std::vector<CVector>(dims.num_users(), CVector::Ones(4)));
  for (const auto& v : scaled) CHECK(v.squaredNorm() == doctest::Approx(cs.p_max / 3.0));
}

TEST_CASE("MMSE receivers beat random receivers") {
  const auto dims = ClusterDims::uniform(3, 2, 3, 4);
  const auto cs = make_channels(TopologyKind::ThreeSector, 600.0, dims, 6);
  auto bf = random_initialization(cs, 3);
  const auto best = all_sinr(cs, bf);
  Rng rng(99);
  for (int probe = 0; probe < 200; ++probe) {
    auto other = bf;
    for (auto& u : other.u) u = complex_normal_matrix(rng, 3, 1).col(0).normalized();
    const auto s = all_sinr(cs, other);
    for (std::size_t w = 0; w < s.size(); ++w) CHECK(s[w] <= best[w] * (1.0 + 1e-12));
  }
}

TEST_CASE("WMMSE single user reaches the closed-form rate") {
  const auto dims = ClusterDims::uniform(1, 1, 2, 3);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cs = gaussian_channels(dims, seed, 0.1, 2.0);
    const double s = Eigen::JacobiSVD<CMatrix>(cs.h[0]).singularValues()(0);
    const double closed = std::log2(1.0 + cs.p_max * s * s / cs.sigma_n2);
    const auto r = wmmse_sum_rate(cs, random_initialization(cs, seed).v);
    CHECK(std::abs(r.sum_rate() - closed) <= 1e-6);
    CHECK(r.beamformers.bs_power(dims, 0) <= cs.p_max * (1.0 + 1e-9));
  }
}

TEST_CASE("WMMSE sum-rate is non-decreasing and respects the budget") {
  const auto dims = ClusterDims::uniform(3, 3, 3, 4);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto cs = make_channels(TopologyKind::ThreeSector, 600.0 + 300.0 * (seed % 3), dims, seed);
    const auto r = wmmse_sum_rate(cs, random_initialization(cs, seed).v);
    const auto& t = r.objective_trace;
    REQUIRE(t.size() == static_cast<std::size_t>(r.iterations) + 1);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] >= t[i - 1] - 1e-9);
    for (int g = 0; g < 3; ++g) CHECK(r.beamformers.bs_power(dims, g) <= cs.p_max * (1.0 + 1e-9));
    // The reported gap-free rates match the last trace entry.
    double plain = 0.0;
    for (double s : r.per_user_sinr) plain += std::log2(1.0 + s);
    CHECK(plain == doctest::Approx(t.back()).epsilon(1e-6));
    CHECK(t.back() >= t.front());
  }
}

TEST_CASE("SINR gap lowers reported rates") {
  const auto dims = ClusterDims::uniform(3, 2, 3, 4);
  const auto cs = make_channels(TopologyKind::ThreeSector, 900.0, dims, 12);
  const auto init = random_initialization(cs, 1).v;
  WmmseOptions plain;
  WmmseOptions gapped;
  gapped.gap_linear = db_to_linear(6.0);
  const auto a = wmmse_sum_rate(cs, init, plain);
  const auto b = wmmse_sum_rate(cs, init, gapped);
  CHECK(b.sum_rate() < a.sum_rate());
  for (std::size_t w = 0; w < a.per_user_sinr.size(); ++w)
    CHECK(b.per_user_rate[w] == doctest::Approx(rate_with_gap(b.per_user_sinr[w], gapped.gap_linear)));
  double previous = INFINITY;
  for (double gap_db : {0.0, 3.0, 6.0, 9.0}) {
    const double r = rate_with_gap(10.0, db_to_linear(gap_db));
    CHECK(r < previous);
    previous = r;
  }
  WmmseOptions inside = gapped;
  inside.objective_gap_linear = gapped.gap_linear;
  const auto c = wmmse_sum_rate(cs, init, inside);
  CHECK(c.sum_rate() > 0.0);
  for (int g = 0; g < 3; ++g) CHECK(c.beamformers.bs_power(dims, g) <= cs.p_max * (1.0 + 1e-9));
}

TEST_CASE("WMMSE rejects mismatched inputs") {
  const auto dims = ClusterDims::uniform(2, 1, 1, 2);
  const auto cs = gaussian_channels(dims, 1, 1.0, 1.0);
  CHECK_THROWS_AS(wmmse_sum_rate(cs, {CVector::Ones(2)}), ConfigError);
}

TEST_CASE("max-min with one user equals the interference-free bound") {
  const auto dims = ClusterDims::uniform(1, 1, 2, 3);
  const auto cs = gaussian_channels(dims, 5, 0.5, 4.0);
  const std::vector<CVector> u = {CVector::Ones(2).normalized()};
  const double expected = cs.p_max * (cs.h[0].adjoint() * u[0]).squaredNorm() / cs.sigma_n2;
  CHECK(interference_free_bound(cs, u) == doctest::Approx(expected));
  const auto r = maxmin_fixed_rx(cs, u);
  CHECK(r.t == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("max-min on toy instances beats random feasible beamformers") {
  const auto dims = ClusterDims::uniform(2, 1, 1, 2);
  const std::vector<CVector> u(2, CVector::Ones(1));
  Rng rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cs = gaussian_channels(dims, seed, 1.0, 10.0, 0.7);
    const auto r = maxmin_fixed_rx(cs, u);
    BeamformerSet witness{r.v, u};
    const auto s = all_sinr(cs, witness);
    for (double x : s) CHECK(x == doctest::Approx(r.t).epsilon(1e-4));
    double best_random = 0.0;
    for (int draw = 0; draw < 2000; ++draw) {
      BeamformerSet bf;
      bf.u = u;
      for (int w = 0; w < 2; ++w) {
        CVector v = complex_normal_matrix(rng, 2, 1).col(0).normalized();
        bf.v.push_back(v * std::sqrt(cs.p_max * unit(rng)));
      }
      best_random = std::max(best_random, min_of(all_sinr(cs, bf)));
    }
    CHECK(r.t >= best_random);
  }
}

TEST_CASE("symmetric users get equal SINRs") {
  const auto dims = ClusterDims::uniform(2, 1, 1, 2);
  auto cs = ChannelSet::zeros(dims, 1.0, 5.0);
  CMatrix direct(1, 2);
  direct << cd(1.0, 0.2), cd(-0.3, 0.8);
  CMatrix cross(1, 2);
  cross << cd(0.4, -0.1), cd(0.2, 0.3);
  cs.at(0, UserId{0, 0}) = direct;
  cs.at(1, UserId{1, 0}) = direct;
  cs.at(1, UserId{0, 0}) = cross;
  cs.at(0, UserId{1, 0}) = cross;
  const std::vector<CVector> u(2, CVector::Ones(1));
  const auto r = maxmin_fixed_rx(cs, u);
  const auto s = all_sinr(cs, BeamformerSet{r.v, u});
  CHECK(std::abs(s[0] - s[1]) <= 1e-4 * std::max(s[0], s[1]));
  CHECK(r.t > 0.0);
}

TEST_CASE("SINR target feasibility") {
  const auto dims = ClusterDims::uniform(3, 2, 2, 4);
  const auto cs = make_channels(TopologyKind::ThreeSector, 900.0, dims, 3);
  const auto init = random_initialization(cs, 3);
  const double bound = interference_free_bound(cs, init.u);
  const auto zero = sinr_target_feasible(cs, init.u, 0.0);
  CHECK(zero.feasible);
  const auto over = sinr_target_feasible(cs, init.u, 2.0 * bound);
  CHECK_FALSE(over.feasible);
  const auto low = sinr_target_feasible(cs, init.u, 1e-3 * bound);
  REQUIRE(low.feasible);
  const auto s = all_sinr(cs, BeamformerSet{low.v, init.u});
  for (double x : s) CHECK(x >= 1e-3 * bound * (1.0 - 1e-6));
  for (double p : low.bs_power) CHECK(p <= cs.p_max * (1.0 + 1e-9));
}

TEST_CASE("max-min with fixed receivers on a real drop") {
  const auto dims = ClusterDims::uniform(3, 2, 3, 4);
  const auto cs = make_channels(TopologyKind::ThreeSector, 600.0, dims, 9);
  const auto init = random_initialization(cs, 9);
  const auto r = maxmin_fixed_rx(cs, init.u);
  CHECK(r.t > 0.0);
  CHECK(r.t <= r.t_hi);
  const BeamformerSet witness{r.v, init.u};
  CHECK(min_of(all_sinr(cs, witness)) >= r.t * (1.0 - 1e-3));
  for (int g = 0; g < 3; ++g) CHECK(witness.bs_power(dims, g) <= cs.p_max * (1.0 + 1e-6));
  // One step above the result is infeasible.
  CHECK_FALSE(sinr_target_feasible(cs, init.u, r.t * 1.01).feasible);
}

TEST_CASE("alternating max-min keeps its best iterate") {
  const auto dims = ClusterDims::uniform(3, 2, 3, 4);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto cs = make_channels(TopologyKind::ThreeSector, 900.0, dims, seed);
    const auto init = random_initialization(cs, seed);
    MaxMinOptions opts;
    opts.outer_iters = 4;
    const auto r = maxmin_alternate(cs, init, opts);
    REQUIRE(r.objective_trace.size() == 5);
    const double best = *std::max_element(r.objective_trace.begin(), r.objective_trace.end());
    CHECK(std::log2(1.0 + min_of(r.per_user_sinr)) == doctest::Approx(best).epsilon(1e-12));
    CHECK(best >= r.objective_trace.front());
    for (int g = 0; g < 3; ++g) CHECK(r.beamformers.bs_power(dims, g) <= cs.p_max * (1.0 + 1e-6));
    const auto recomputed = all_sinr(cs, r.beamformers);
    for (std::size_t w = 0; w < recomputed.size(); ++w)
      CHECK(recomputed[w] == doctest::Approx(r.per_user_sinr[w]));
  }
}
