#pragma once

#include "ianum/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ianum {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

enum class TopologyKind { ThreeSector, Ring5, Hex7, Hex49Surround };

std::string_view to_string(TopologyKind kind);
// Throws ConfigError for unknown names.
TopologyKind parse_topology_kind(std::string_view name);

// Regular hexagon with vertices at 30 + 60j degrees.
struct Hexagon {
  Point center;
  double circumradius = 0.0;
};

// {r_inner <= |p - origin| <= r_outer, angle_begin <= arg(p - origin) <= angle_end}
struct AnnularSector {
  Point origin;
  double r_inner = 0.0;
  double r_outer = 0.0;
  double angle_begin = 0.0;  // radians
  double angle_end = 0.0;
};

using CellRegion = std::variant<Hexagon, AnnularSector>;

bool contains(const CellRegion& region, Point p);
double area(const CellRegion& region);
Point centroid(const CellRegion& region);
// Axis-aligned bounding box as {min, max}.
std::array<Point, 2> bounding_box(const CellRegion& region);

struct TopologySpec {
  TopologyKind kind = TopologyKind::Hex7;
  double bs_distance_m = 0.0;
  std::vector<Point> bs_positions;
  // Indices into bs_positions; cluster cell g is served by
  // bs_positions[cluster_bs_indices[g]].
  std::vector<int> cluster_bs_indices;
  // One region per cluster cell.
  std::vector<CellRegion> cell_regions;

  int cluster_size() const { return static_cast<int>(cluster_bs_indices.size()); }
  std::vector<int> out_of_cluster_bs_indices() const;
  Point cluster_bs(int cell) const { return bs_positions.at(cluster_bs_indices.at(cell)); }
};

TopologySpec build_topology(TopologyKind kind, double bs_distance_m);

struct Drop {
  // user_positions[g][k]
  std::vector<std::vector<Point>> user_positions;
  std::uint64_t seed = 0;

  Point position(UserId u) const { return user_positions.at(u.cell).at(u.index); }
};

/// Link-budget parameters. Defaults follow the simulation table: -35 dBm/Hz
/// transmit PSD, -169 dBm/Hz noise PSD, 10 dBi antenna gain, 6 dB SINR gap,
/// 128.1 + 37 log10(d_km) pathloss and 8 dB log-normal shadowing.
struct LinkParams {
  double tx_psd_dbm_per_hz = -35.0;
  double noise_psd_dbm_per_hz = -169.0;
  // Back-solved so that the per-tone budget is exactly 16.9 dBm.
  double tone_bandwidth_hz = 154881.66189124828;
  double antenna_gain_db = 10.0;
  double sinr_gap_db = 6.0;
  double pathloss_intercept_db = 128.1;
  double pathloss_slope_db = 37.0;
  double shadowing_sd_db = 8.0;
  // Users closer than this to their serving BS are redrawn.
  double min_distance_m = 35.0;
  bool rayleigh_fading = true;

  double p_max_w() const;
  double noise_w() const;
};

// Throws ConfigError for a non-positive bandwidth, negative shadowing SD or
// exclusion radius, or non-finite entries.
void validate_link_params(const LinkParams& params);

double dbm_to_w(double dbm);
double w_to_dbm(double w);
double db_to_linear(double db);

// Pathloss in dB for a distance in meters; throws ConfigError for d <= 0.
double pathloss_db(double distance_m, const LinkParams& params);

// Drop users uniformly in each of the first dims.cells() cluster regions.
Drop drop_users(const TopologySpec& topology, const ClusterDims& dims,
                std::uint64_t seed);
// Same, but positions closer than min_distance_m to the serving BS are
// rejected and redrawn.
Drop drop_users(const TopologySpec& topology, const ClusterDims& dims,
                std::uint64_t seed, double min_distance_m);

/// All in-cluster channels of one drop together with the noise, per-user
/// out-of-cluster interference and per-BS budget, in linear units (W per
/// tone, amplitude gains).
struct ChannelSet {
  ClusterDims dims;
  // h[bs * num_users + flat_user] is the M x N matrix H_(bs, user).
  std::vector<CMatrix> h;
  double sigma_n2 = 0.0;
  std::vector<double> nu2;  // per flat user
  double p_max = 0.0;

  const CMatrix& at(int bs, UserId u) const {
    return h[static_cast<std::size_t>(bs) * dims.num_users() + dims.flat(u)];
  }
  CMatrix& at(int bs, UserId u) {
    return h[static_cast<std::size_t>(bs) * dims.num_users() + dims.flat(u)];
  }
  const CMatrix& at(int bs, int flat_user) const {
    return h[static_cast<std::size_t>(bs) * dims.num_users() + flat_user];
  }
  // sigma_n^2 + nu^2 for the user.
  double noise_plus_ooc(int flat_user) const { return sigma_n2 + nu2.at(flat_user); }

  // Allocates zero channels for the given dims.
  static ChannelSet zeros(const ClusterDims& dims, double sigma_n2, double p_max);
};

// Large-scale gain in dB (negative pathloss + shadow + antenna gain) for every
// (BS, user) link, BS indexed over all topology BSs. Deterministic in seed.
std::vector<std::vector<double>> large_scale_gains_db(const TopologySpec& topology,
                                                      const Drop& drop,
                                                      const ClusterDims& dims,
                                                      const LinkParams& params,
                                                      std::uint64_t seed);

ChannelSet realize_channels(const TopologySpec& topology, const Drop& drop,
                            const ClusterDims& dims, const LinkParams& params,
                            std::uint64_t seed);

// Per flat user: sum over out-of-cluster BSs of p_max times the fading-averaged
// link gain. Uses the same shadowing draws as realize_channels for equal seeds.
std::vector<double> out_of_cluster_power(const TopologySpec& topology,
                                         const Drop& drop,
                                         const ClusterDims& dims,
                                         const LinkParams& params,
                                         std::uint64_t seed);

}  // namespace ianum
