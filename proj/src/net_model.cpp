#include "ianum/net_model.hpp"

#include "ianum/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ianum {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kShadowStream = 0x5348414444ULL;
constexpr std::uint64_t kFadingStream = 0x46414445ULL;

Point polar(double r, double angle) { return {r * std::cos(angle), r * std::sin(angle)}; }

Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }

double deg(double d) { return d * kPi / 180.0; }

// Hex-lattice cells around `center` at inter-site distance d: the center plus
// its six neighbours.
std::vector<Point> seven_cell_cluster(Point center, double d) {
  std::vector<Point> out{center};
  for (int j = 0; j < 6; ++j) out.push_back(center + polar(d, deg(60.0 * j)));
  return out;
}

}  // namespace

void validate_link_params(const LinkParams& p) {
  if (!(p.tone_bandwidth_hz > 0.0) || !std::isfinite(p.tone_bandwidth_hz))
    throw ConfigError("tone bandwidth must be positive");
  if (!(p.shadowing_sd_db >= 0.0)) throw ConfigError("shadowing SD must be non-negative");
  if (!(p.min_distance_m >= 0.0)) throw ConfigError("min_distance_m must be non-negative");
  for (double x : {p.tx_psd_dbm_per_hz, p.noise_psd_dbm_per_hz, p.antenna_gain_db, p.sinr_gap_db,
                   p.pathloss_intercept_db, p.pathloss_slope_db, p.shadowing_sd_db, p.min_distance_m})
    if (!std::isfinite(x)) throw ConfigError("link parameters must be finite");
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::ThreeSector: return "ThreeSector";
    case TopologyKind::Ring5: return "Ring5";
    case TopologyKind::Hex7: return "Hex7";
    case TopologyKind::Hex49Surround: return "Hex49Surround";
  }
  return "?";
}

TopologyKind parse_topology_kind(std::string_view name) {
  for (auto k : {TopologyKind::ThreeSector, TopologyKind::Ring5, TopologyKind::Hex7,
                 TopologyKind::Hex49Surround})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown topology kind '" + std::string(name) + "'");
}

bool contains(const CellRegion& region, Point p) {
  if (const auto* hex = std::get_if<Hexagon>(&region)) {
    // Vertices at 30 + 60j degrees: flat sides face 0, 60, ..., 300 degrees,
    // at apothem distance R cos(30).
    const double apothem = hex->circumradius * std::sqrt(3.0) / 2.0;
    const double dx = p.x - hex->center.x;
    const double dy = p.y - hex->center.y;
    for (int j = 0; j < 3; ++j) {
      const double a = deg(60.0 * j);
      if (std::abs(dx * std::cos(a) + dy * std::sin(a)) > apothem * (1.0 + 1e-12)) return false;
    }
    return true;
  }
  const auto& s = std::get<AnnularSector>(region);
  const double r = distance(p, s.origin);
  if (r < s.r_inner || r > s.r_outer) return false;
  const double span = s.angle_end - s.angle_begin;
  double rel = std::atan2(p.y - s.origin.y, p.x - s.origin.x) - s.angle_begin;
  rel = rel - 2.0 * kPi * std::floor(rel / (2.0 * kPi));
  return rel <= span;
}

double area(const CellRegion& region) {
  if (const auto* hex = std::get_if<Hexagon>(&region))
    return 1.5 * std::sqrt(3.0) * hex->circumradius * hex->circumradius;
  const auto& s = std::get<AnnularSector>(region);
  return 0.5 * (s.r_outer * s.r_outer - s.r_inner * s.r_inner) * (s.angle_end - s.angle_begin);
}

Point centroid(const CellRegion& region) {
  if (const auto* hex = std::get_if<Hexagon>(&region)) return hex->center;
  const auto& s = std::get<AnnularSector>(region);
  const double half = 0.5 * (s.angle_end - s.angle_begin);
  const double r3 = std::pow(s.r_outer, 3) - std::pow(s.r_inner, 3);
  const double r2 = s.r_outer * s.r_outer - s.r_inner * s.r_inner;
  const double radial = (2.0 / 3.0) * r3 / r2 * std::sin(half) / half;
  return s.origin + polar(radial, s.angle_begin + half);
}

std::array<Point, 2> bounding_box(const CellRegion& region) {
  if (const auto* hex = std::get_if<Hexagon>(&region)) {
    const double r = hex->circumradius;
    const double a = r * std::sqrt(3.0) / 2.0;
    return {Point{hex->center.x - a, hex->center.y - r}, Point{hex->center.x + a, hex->center.y + r}};
  }
  const auto& s = std::get<AnnularSector>(region);
  // Conservative: the full outer disc.
  return {Point{s.origin.x - s.r_outer, s.origin.y - s.r_outer},
          Point{s.origin.x + s.r_outer, s.origin.y + s.r_outer}};
}

std::vector<int> TopologySpec::out_of_cluster_bs_indices() const {
  std::vector<int> out;
  for (int b = 0; b < static_cast<int>(bs_positions.size()); ++b)
    if (std::find(cluster_bs_indices.begin(), cluster_bs_indices.end(), b) ==
        cluster_bs_indices.end())
      out.push_back(b);
  return out;
}

TopologySpec build_topology(TopologyKind kind, double bs_distance_m) {
  if (!(bs_distance_m > 0.0) || !std::isfinite(bs_distance_m))
    throw ConfigError("bs_distance_m must be positive");
  const double d = bs_distance_m;
  const double hex_radius = d / std::sqrt(3.0);
  TopologySpec t;
  t.kind = kind;
  t.bs_distance_m = d;

  switch (kind) {
    case TopologyKind::ThreeSector: {
      // Three hexagons sharing the vertex at the origin.
      for (double a : {90.0, 210.0, 330.0}) t.bs_positions.push_back(polar(hex_radius, deg(a)));
      break;
    }
    case TopologyKind::Ring5: {
      const double r = d / (2.0 * std::sin(kPi / 5.0));
      for (int j = 0; j < 5; ++j) t.bs_positions.push_back(polar(r, deg(90.0 + 72.0 * j)));
      for (int j = 0; j < 5; ++j) {
        const double mid = deg(90.0 + 72.0 * j);
        t.cell_regions.push_back(AnnularSector{{0.0, 0.0}, r - d / 2.0, r + d / 2.0,
                                               mid - deg(36.0), mid + deg(36.0)});
      }
      break;
    }
    case TopologyKind::Hex7: {
      t.bs_positions = seven_cell_cluster({0.0, 0.0}, d);
      break;
    }
    case TopologyKind::Hex49Surround: {
      t.bs_positions = seven_cell_cluster({0.0, 0.0}, d);
      // Seven-cell clusters tile the plane with shifts of length sqrt(7) d.
      const Point shift{2.5 * d, std::sqrt(3.0) / 2.0 * d};
      const double shift_len = std::hypot(shift.x, shift.y);
      const double shift_angle = std::atan2(shift.y, shift.x);
      for (int j = 0; j < 6; ++j) {
        auto ring = seven_cell_cluster(polar(shift_len, shift_angle + deg(60.0 * j)), d);
        t.bs_positions.insert(t.bs_positions.end(), ring.begin(), ring.end());
      }
      break;
    }
  }

  const int cluster = kind == TopologyKind::ThreeSector ? 3 : kind == TopologyKind::Ring5 ? 5 : 7;
  for (int b = 0; b < cluster; ++b) t.cluster_bs_indices.push_back(b);
  if (t.cell_regions.empty())
    for (int b = 0; b < cluster; ++b) t.cell_regions.push_back(Hexagon{t.bs_positions[b], hex_radius});
  return t;
}

Drop drop_users(const TopologySpec& topology, const ClusterDims& dims, std::uint64_t seed,
                double min_distance_m) {
  if (dims.cells() != topology.cluster_size())
    throw ConfigError("cluster dims have " + std::to_string(dims.cells()) +
                      " cells but topology cluster has " +
                      std::to_string(topology.cluster_size()));
  Rng rng(seed);
  Drop drop;
  drop.seed = seed;
  drop.user_positions.resize(dims.cells());
  for (int g = 0; g < dims.cells(); ++g) {
    const auto& region = topology.cell_regions[g];
    const auto box = bounding_box(region);
    std::uniform_real_distribution<double> ux(box[0].x, box[1].x);
    std::uniform_real_distribution<double> uy(box[0].y, box[1].y);
    const Point bs = topology.cluster_bs(g);
    while (static_cast<int>(drop.user_positions[g].size()) < dims.users_in(g)) {
      const double x = ux(rng);
      const double y = uy(rng);
      const Point p{x, y};
      if (contains(region, p) && distance(p, bs) >= min_distance_m)
        drop.user_positions[g].push_back(p);
    }
  }
  return drop;
}

Drop drop_users(const TopologySpec& topology, const ClusterDims& dims, std::uint64_t seed) {
  return drop_users(topology, dims, seed, 0.0);
}

double dbm_to_w(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double w_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double LinkParams::p_max_w() const {
  return dbm_to_w(tx_psd_dbm_per_hz) * tone_bandwidth_hz;
}

double LinkParams::noise_w() const {
  return dbm_to_w(noise_psd_dbm_per_hz) * tone_bandwidth_hz;
}

double pathloss_db(double distance_m, const LinkParams& params) {
  if (!(distance_m > 0.0)) throw ConfigError("zero BS-user distance (co-located BS and user)");
  return params.pathloss_intercept_db + params.pathloss_slope_db * std::log10(distance_m / 1000.0);
}

std::vector<std::vector<double>> large_scale_gains_db(const TopologySpec& topology,
                                                      const Drop& drop,
                                                      const ClusterDims& dims,
                                                      const LinkParams& params,
                                                      std::uint64_t seed) {
  validate_link_params(params);
  Rng rng(mix_seed(seed, kShadowStream));
  std::normal_distribution<double> shadow(0.0, 1.0);
  const auto users = dims.all_users();
  std::vector<std::vector<double>> gains(topology.bs_positions.size(),
                                         std::vector<double>(users.size()));
  for (std::size_t b = 0; b < topology.bs_positions.size(); ++b) {
    for (std::size_t u = 0; u < users.size(); ++u) {
      const double d = distance(topology.bs_positions[b], drop.position(users[u]));
      const double s = shadow(rng);
      gains[b][u] = -pathloss_db(d, params) + params.shadowing_sd_db * s + params.antenna_gain_db;
    }
  }
  return gains;
}

std::vector<double> out_of_cluster_power(const TopologySpec& topology, const Drop& drop,
                                         const ClusterDims& dims, const LinkParams& params,
                                         std::uint64_t seed) {
  std::vector<double> nu2(static_cast<std::size_t>(dims.num_users()), 0.0);
  const auto outside = topology.out_of_cluster_bs_indices();
  if (outside.empty()) return nu2;
  const auto gains = large_scale_gains_db(topology, drop, dims, params, seed);
  const double p = params.p_max_w();
  for (int b : outside)
    for (std::size_t u = 0; u < nu2.size(); ++u) nu2[u] += p * db_to_linear(gains[b][u]);
  return nu2;
}

ChannelSet ChannelSet::zeros(const ClusterDims& dims, double sigma_n2, double p_max) {
  ChannelSet cs;
  cs.dims = dims;
  cs.sigma_n2 = sigma_n2;
  cs.p_max = p_max;
  cs.nu2.assign(static_cast<std::size_t>(dims.num_users()), 0.0);
  cs.h.assign(static_cast<std::size_t>(dims.cells()) * dims.num_users(),
              CMatrix::Zero(dims.rx_antennas(), dims.tx_antennas()));
  return cs;
}

ChannelSet realize_channels(const TopologySpec& topology, const Drop& drop,
                            const ClusterDims& dims, const LinkParams& params,
                            std::uint64_t seed) {
  validate_link_params(params);
  if (dims.cells() != topology.cluster_size())
    throw ConfigError("cluster dims do not match topology cluster size");
  const auto gains = large_scale_gains_db(topology, drop, dims, params, seed);
  ChannelSet cs = ChannelSet::zeros(dims, params.noise_w(), params.p_max_w());
  Rng rng(mix_seed(seed, kFadingStream));
  for (int g = 0; g < dims.cells(); ++g) {
    const int b = topology.cluster_bs_indices[g];
    for (int u = 0; u < dims.num_users(); ++u) {
      const double amp = std::sqrt(db_to_linear(gains[b][u]));
      CMatrix& h = cs.h[static_cast<std::size_t>(g) * dims.num_users() + u];
      if (params.rayleigh_fading)
        h = amp * complex_normal_matrix(rng, dims.rx_antennas(), dims.tx_antennas());
      else
        h = CMatrix::Constant(dims.rx_antennas(), dims.tx_antennas(), cd(amp, 0.0));
    }
  }
  const auto outside = topology.out_of_cluster_bs_indices();
  const double p = cs.p_max;
  for (int b : outside)
    for (int u = 0; u < dims.num_users(); ++u) cs.nu2[u] += p * db_to_linear(gains[b][u]);
  return cs;
}

}  // namespace ianum
