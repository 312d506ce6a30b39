#include "ianum/harness.hpp"

#include "ianum/feasibility.hpp"
#include "ianum/rng.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace ianum {

namespace {

constexpr std::uint64_t kRedrawTag = 0x5245445241570000ULL;
constexpr std::uint64_t kSolverTag = 0x534f4c5645520000ULL;
constexpr std::uint64_t kRandomTag = 0x524e44;

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
                const char* what) {
  for (const auto& [name, value] : table)
    if (name == s) return value;
  throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Utility>, 2> kUtilities{
    {{"MaxMin", Utility::MaxMin}, {"SumRate", Utility::SumRate}}};
constexpr std::array<std::pair<std::string_view, InitMode>, 3> kInitModes{
    {{"IA", InitMode::IA}, {"Random", InitMode::Random}, {"Both", InitMode::Both}}};

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::vector<Arm> arms_of(InitMode m) {
  switch (m) {
    case InitMode::IA: return {Arm::IA};
    case InitMode::Random: return {Arm::Random};
    case InitMode::Both: return {Arm::IA, Arm::Random};
  }
  return {};
}

struct SweepPoint {
  double distance = 0.0;
  int users = 0;
  int q = 0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
  std::vector<SweepPoint> out;
  const int g = c.cells();
  for (double d : c.bs_distances_m)
    for (int k : c.users_per_cell) {
      const int q = c.fixed_q ? *c.fixed_q : std::min(compute_q(c.rx_antennas, c.tx_antennas, k), g - 1);
      out.push_back({d, k, q});
    }
  return out;
}

std::uint64_t hash_channels(const ChannelSet& cs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& m : cs.h) feed(m.data(), sizeof(cd) * static_cast<std::size_t>(m.size()));
  feed(cs.nu2.data(), sizeof(double) * cs.nu2.size());
  feed(&cs.sigma_n2, sizeof cs.sigma_n2);
  feed(&cs.p_max, sizeof cs.p_max);
  return h;
}

bool ia_set_feasible(const ClusterDims& dims, int q, const AlignmentSet& set) {
  if (check_corollary1(dims, q)) return true;
  try {
    return check_theorem1(dims, set);
  } catch (const TooLargeError&) {
    return false;
  }
}

UtilityResult stage_two(const ChannelSet& cs, const BeamformerSet& init, const ExperimentConfig& c) {
  const double gap = db_to_linear(c.link.sinr_gap_db);
  if (c.utility == Utility::SumRate) {
    WmmseOptions o;
    o.max_iter = c.wmmse_max_iter;
    o.tol = c.wmmse_tol;
    o.gap_linear = gap;
    o.objective_gap_linear = c.gap_in_objective ? gap : 1.0;
    return wmmse_sum_rate(cs, init.v, o);
  }
  MaxMinOptions o;
  o.eps = c.maxmin_eps;
  o.outer_iters = c.maxmin_outer_iters;
  o.gap_linear = gap;
  return maxmin_alternate(cs, init, o);
}

DropRecord make_record(const ExperimentConfig& c, const ChannelSet& cs, const UtilityResult& r) {
  DropRecord rec;
  rec.min_rate = r.min_rate();
  rec.sum_rate = r.sum_rate();
  rec.cell_throughput = c.utility == Utility::MaxMin ? cs.dims.users_in(0) * rec.min_rate
                                                     : rec.sum_rate / cs.dims.cells();
  for (double s : r.per_user_sinr) rec.sinr_db.push_back(10.0 * std::log10(s));
  for (const auto& v : r.beamformers.v) rec.power_dbm.push_back(w_to_dbm(v.squaredNorm()));
  return rec;
}

struct TaskOutput {
  std::vector<DropRecord> records;  // one per arm, arm order
  std::vector<std::string> log;
};

TaskOutput run_task(const ExperimentConfig& c, const TopologySpec& topology, const SweepPoint& point,
                    int sweep_index, int drop) {
  TaskOutput out;
  const auto dims = ClusterDims::uniform(c.cells(), point.users, c.rx_antennas, c.tx_antennas);
  const std::uint64_t drop_seed = mix_seed(c.base_seed, static_cast<std::uint64_t>(drop));
  const auto arms = arms_of(c.init);
  auto where = [&] {
    std::ostringstream os;
    os << "drop " << drop << " (d=" << fmt(point.distance) << " m, K=" << point.users << ")";
    return os.str();
  };

  for (int attempt = 0;; ++attempt) {
    if (attempt > c.max_redraws)
      throw NumericalError(where() + ": still degenerate after " + std::to_string(c.max_redraws) +
                           " redraws");
    const std::uint64_t seed =
        attempt == 0 ? drop_seed : mix_seed(drop_seed, kRedrawTag + static_cast<std::uint64_t>(attempt));
    const auto users = drop_users(topology, dims, seed, c.link.min_distance_m);
    const auto cs = realize_channels(topology, users, dims, c.link, seed);
    const std::uint64_t solver_seed = mix_seed(seed, kSolverTag + static_cast<std::uint64_t>(sweep_index));
    const BeamformerSet random_init = random_initialization(cs, mix_seed(solver_seed, kRandomTag));

    std::vector<std::pair<BeamformerSet, bool>> inits;  // (init, fell back)
    try {
      for (Arm arm : arms) {
        if (arm == Arm::Random) {
          inits.emplace_back(random_init, false);
          continue;
        }
        const auto set = select_interferers(cs, dims, point.q);
        if (!ia_set_feasible(dims, point.q, set)) {
          out.log.push_back(where() + ": alignment set infeasible for q=" + std::to_string(point.q) +
                            ", IA arm falls back to random initialization");
          inits.emplace_back(random_init, true);
          continue;
        }
        const auto ia = solve_partial_ia(cs, set, c.ia, random_init);
        const auto aligned = cancel_intracell(cs, ia.beamformers);
        inits.emplace_back(BeamformerSet{equal_power(cs, aligned.v), aligned.u}, false);
      }
    } catch (const DegenerateDropError& e) {
      out.log.push_back(where() + ": degenerate drop, redrawing (" + e.what() + ")");
      continue;
    }

    const std::uint64_t hash = hash_channels(cs);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const auto r = stage_two(cs, inits[a].first, c);
      DropRecord rec = make_record(c, cs, r);
      rec.sweep_index = sweep_index;
      rec.bs_distance_m = point.distance;
      rec.users_per_cell = point.users;
      rec.q = point.q;
      rec.arm = arms[a];
      rec.drop = drop;
      rec.seed = seed;
      rec.channel_hash = hash;
      rec.redraws = attempt;
      rec.fell_back = inits[a].second;
      out.records.push_back(std::move(rec));
    }
    return out;
  }
}

int worker_count(std::size_t tasks) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("IANUM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("IANUM_WORKERS must be a positive integer");
    n = static_cast<int>(v);
  }
  return std::max(1, std::min(n, static_cast<int>(tasks)));
}

}  // namespace

std::string_view to_string(Utility u) { return u == Utility::MaxMin ? "MaxMin" : "SumRate"; }

std::string_view to_string(InitMode m) {
  switch (m) {
    case InitMode::IA: return "IA";
    case InitMode::Random: return "Random";
    case InitMode::Both: return "Both";
  }
  return "";
}

std::string_view to_string(Arm a) { return a == Arm::IA ? "IA" : "Random"; }

Utility parse_utility(std::string_view s) { return parse_enum(s, kUtilities, "utility"); }
InitMode parse_init_mode(std::string_view s) { return parse_enum(s, kInitModes, "init mode"); }

int ExperimentConfig::cells() const { return build_topology(topology, 1.0).cluster_size(); }

void ExperimentConfig::validate() const {
  if (drops < 1) throw ConfigError("drops must be >= 1");
  if (bs_distances_m.empty()) throw ConfigError("bs_distances_m must not be empty");
  for (double d : bs_distances_m)
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("BS distances must be positive");
  if (rx_antennas < 1 || tx_antennas < 1) throw ConfigError("antenna counts must be >= 1");
  if (users_per_cell.empty()) throw ConfigError("users_per_cell must not be empty");
  for (int k : users_per_cell)
    if (k < 1 || k > tx_antennas)
      throw ConfigError("K=" + std::to_string(k) + " outside [1, N=" + std::to_string(tx_antennas) + "]");
  if (fixed_q && (*fixed_q < 0 || *fixed_q > cells() - 1))
    throw ConfigError("q must lie in [0, G-1]");
  validate_link_params(link);
  if (ia.max_iter < 0 || !(ia.tol >= 0.0)) throw ConfigError("invalid IA tolerances");
  if (wmmse_max_iter < 1 || !(wmmse_tol >= 0.0)) throw ConfigError("invalid WMMSE tolerances");
  if (!(maxmin_eps > 0.0 && maxmin_eps < 1.0)) throw ConfigError("maxmin eps must lie in (0, 1)");
  if (maxmin_outer_iters < 1) throw ConfigError("maxmin outer_iters must be >= 1");
  if (max_redraws < 0) throw ConfigError("max_redraws must be >= 0");
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["topology"] = std::string(to_string(c.topology));
  j["cells"] = c.cells();
  j["bs_distances_m"] = c.bs_distances_m;
  j["users_per_cell"] = c.users_per_cell;
  j["rx_antennas"] = c.rx_antennas;
  j["tx_antennas"] = c.tx_antennas;
  j["utility"] = std::string(to_string(c.utility));
  j["init"] = std::string(to_string(c.init));
  if (c.fixed_q)
    j["q"] = *c.fixed_q;
  else
    j["q"] = "auto";
  j["drops"] = c.drops;
  j["base_seed"] = c.base_seed;
  j["gap_in_objective"] = c.gap_in_objective;
  auto& l = j["link"];
  l["tx_psd_dbm_per_hz"] = c.link.tx_psd_dbm_per_hz;
  l["noise_psd_dbm_per_hz"] = c.link.noise_psd_dbm_per_hz;
  l["tone_bandwidth_hz"] = c.link.tone_bandwidth_hz;
  l["antenna_gain_db"] = c.link.antenna_gain_db;
  l["sinr_gap_db"] = c.link.sinr_gap_db;
  l["pathloss_intercept_db"] = c.link.pathloss_intercept_db;
  l["pathloss_slope_db"] = c.link.pathloss_slope_db;
  l["shadowing_sd_db"] = c.link.shadowing_sd_db;
  l["min_distance_m"] = c.link.min_distance_m;
  l["rayleigh_fading"] = c.link.rayleigh_fading;
  auto& t = j["tolerances"];
  t["ia_tol"] = c.ia.tol;
  t["ia_max_iter"] = c.ia.max_iter;
  t["ia_normalize_links"] = c.ia.normalize_links;
  t["wmmse_tol"] = c.wmmse_tol;
  t["wmmse_max_iter"] = c.wmmse_max_iter;
  t["maxmin_eps"] = c.maxmin_eps;
  t["maxmin_outer_iters"] = c.maxmin_outer_iters;
  t["max_redraws"] = c.max_redraws;
  return j;
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  try {
    reject_unknown(j,
                   {"topology", "cells", "bs_distances_m", "users_per_cell", "rx_antennas", "tx_antennas",
                    "utility", "init", "q", "drops", "base_seed", "gap_in_objective", "link", "tolerances"},
                   "config");
    if (auto it = j.find("topology"); it != j.end()) c.topology = parse_topology_kind(it->get<std::string>());
    read(j, "bs_distances_m", c.bs_distances_m);
    if (auto it = j.find("users_per_cell"); it != j.end())
      c.users_per_cell = it->is_array() ? it->get<std::vector<int>>() : std::vector<int>{it->get<int>()};
    read(j, "rx_antennas", c.rx_antennas);
    read(j, "tx_antennas", c.tx_antennas);
    if (auto it = j.find("utility"); it != j.end()) c.utility = parse_utility(it->get<std::string>());
    if (auto it = j.find("init"); it != j.end()) c.init = parse_init_mode(it->get<std::string>());
    if (auto it = j.find("q"); it != j.end()) {
      if (it->is_string()) {
        if (it->get<std::string>() != "auto") throw ConfigError("q must be \"auto\" or an integer");
        c.fixed_q.reset();
      } else {
        c.fixed_q = it->get<int>();
      }
    }
    read(j, "drops", c.drops);
    read(j, "base_seed", c.base_seed);
    read(j, "gap_in_objective", c.gap_in_objective);
    if (auto it = j.find("link"); it != j.end()) {
      const auto& l = *it;
      reject_unknown(l,
                     {"tx_psd_dbm_per_hz", "noise_psd_dbm_per_hz", "tone_bandwidth_hz", "antenna_gain_db",
                      "sinr_gap_db", "pathloss_intercept_db", "pathloss_slope_db", "shadowing_sd_db",
                      "min_distance_m", "rayleigh_fading"},
                     "link");
      read(l, "tx_psd_dbm_per_hz", c.link.tx_psd_dbm_per_hz);
      read(l, "noise_psd_dbm_per_hz", c.link.noise_psd_dbm_per_hz);
      read(l, "tone_bandwidth_hz", c.link.tone_bandwidth_hz);
      read(l, "antenna_gain_db", c.link.antenna_gain_db);
      read(l, "sinr_gap_db", c.link.sinr_gap_db);
      read(l, "pathloss_intercept_db", c.link.pathloss_intercept_db);
      read(l, "pathloss_slope_db", c.link.pathloss_slope_db);
      read(l, "shadowing_sd_db", c.link.shadowing_sd_db);
      read(l, "min_distance_m", c.link.min_distance_m);
      read(l, "rayleigh_fading", c.link.rayleigh_fading);
    }
    if (auto it = j.find("tolerances"); it != j.end()) {
      const auto& t = *it;
      reject_unknown(t,
                     {"ia_tol", "ia_max_iter", "ia_normalize_links", "wmmse_tol", "wmmse_max_iter",
                      "maxmin_eps", "maxmin_outer_iters", "max_redraws"},
                     "tolerances");
      read(t, "ia_tol", c.ia.tol);
      read(t, "ia_max_iter", c.ia.max_iter);
      read(t, "ia_normalize_links", c.ia.normalize_links);
      read(t, "wmmse_tol", c.wmmse_tol);
      read(t, "wmmse_max_iter", c.wmmse_max_iter);
      read(t, "maxmin_eps", c.maxmin_eps);
      read(t, "maxmin_outer_iters", c.maxmin_outer_iters);
      read(t, "max_redraws", c.max_redraws);
    }
    if (auto it = j.find("cells"); it != j.end() && it->get<int>() != c.cells())
      throw ConfigError("cells=" + std::to_string(it->get<int>()) + " does not match topology " +
                        std::string(to_string(c.topology)) + " (" + std::to_string(c.cells()) + " cells)");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig figure_preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "fig5" || name == "fig8a") {
    c.topology = TopologyKind::ThreeSector;
    c.users_per_cell = {2, 3, 4};
    c.rx_antennas = 3;
    c.tx_antennas = 4;
  } else if (name == "fig6a") {
    c.topology = TopologyKind::Ring5;
    c.users_per_cell = {2, 3, 4, 5, 6};
    c.rx_antennas = 5;
    c.tx_antennas = 6;
  } else if (name == "fig6b" || name == "fig8b" || name == "fig9") {
    c.topology = name == "fig9" ? TopologyKind::Hex49Surround : TopologyKind::Hex7;
    c.users_per_cell = {1, 2, 3, 4};
    c.rx_antennas = 4;
    c.tx_antennas = 4;
  } else {
    throw ConfigError("unknown figure '" + std::string(name) +
                      "' (expected fig5, fig6a, fig6b, fig8a, fig8b or fig9)");
  }
  c.utility = name == "fig8a" || name == "fig8b" ? Utility::SumRate : Utility::MaxMin;
  c.init = InitMode::Both;
  c.drops = name == "fig9" ? 10 : 20;
  return c;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const LogSink& log) {
  config.validate();
  const auto points = sweep_points(config);
  std::vector<TopologySpec> topologies;
  for (const auto& p : points) topologies.push_back(build_topology(config.topology, p.distance));

  const std::size_t tasks = points.size() * static_cast<std::size_t>(config.drops);
  std::vector<TaskOutput> outputs(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t s = t / config.drops;
      const int drop = static_cast<int>(t % config.drops);
      try {
        outputs[t] = run_task(config, topologies[s], points[s], static_cast<int>(s), drop);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const int workers = worker_count(tasks);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < tasks; ++t) {
    if (log)
      for (const auto& line : outputs[t].log) log(line);
    if (errors[t]) std::rethrow_exception(errors[t]);
  }

  ExperimentResult result;
  const auto arms = arms_of(config.init);
  for (std::size_t s = 0; s < points.size(); ++s)
    for (std::size_t a = 0; a < arms.size(); ++a)
      for (int d = 0; d < config.drops; ++d)
        result.records.push_back(outputs[s * config.drops + d].records.at(a));
  result.rows = aggregate(config, result.records);
  return result;
}

std::vector<ResultRow> aggregate(const ExperimentConfig& config, const std::vector<DropRecord>& records) {
  const auto points = sweep_points(config);
  std::vector<ResultRow> rows;
  for (std::size_t s = 0; s < points.size(); ++s)
    for (Arm arm : arms_of(config.init)) {
      ResultRow row;
      row.topology = config.topology;
      row.bs_distance_m = points[s].distance;
      row.cells = config.cells();
      row.users_per_cell = points[s].users;
      row.rx_antennas = config.rx_antennas;
      row.tx_antennas = config.tx_antennas;
      row.q = points[s].q;
      row.utility = config.utility;
      row.arm = arm;
      std::vector<double> x;
      for (const auto& r : records)
        if (r.sweep_index == static_cast<int>(s) && r.arm == arm) {
          x.push_back(r.cell_throughput);
          row.fallbacks += r.fell_back ? 1 : 0;
          row.redraws += r.redraws;
        }
      row.drops = static_cast<int>(x.size());
      if (!x.empty()) {
        const double n = static_cast<double>(x.size());
        row.avg_cell_throughput = std::accumulate(x.begin(), x.end(), 0.0) / n;
        if (x.size() > 1) {
          double ss = 0.0;
          for (double v : x) ss += (v - row.avg_cell_throughput) * (v - row.avg_cell_throughput);
          row.stderr_throughput = std::sqrt(ss / (n - 1.0) / n);
        }
      }
      rows.push_back(row);
    }
  return rows;
}

std::vector<CdfPoint> emit_cdf(const std::vector<DropRecord>& records, CdfMetric metric) {
  std::vector<double> x;
  for (const auto& r : records) {
    const auto& v = metric == CdfMetric::TxPowerDbm ? r.power_dbm : r.sinr_db;
    x.insert(x.end(), v.begin(), v.end());
  }
  if (x.empty()) throw ConfigError("no samples for the CDF");
  std::sort(x.begin(), x.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (i + 1 == x.size() || x[i + 1] != x[i]) out.push_back({x[i], static_cast<double>(i + 1) / n});
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "topology,bs_distance_m,G,K,M,N,q,utility,init,drops,avg_cell_throughput,stderr,fallbacks,redraws\n";
  for (const auto& r : rows)
    os << to_string(r.topology) << ',' << fmt(r.bs_distance_m) << ',' << r.cells << ',' << r.users_per_cell << ','
       << r.rx_antennas << ',' << r.tx_antennas << ',' << r.q << ',' << to_string(r.utility) << ','
       << to_string(r.arm) << ',' << r.drops << ',' << fmt(r.avg_cell_throughput) << ','
       << fmt(r.stderr_throughput) << ',' << r.fallbacks << ',' << r.redraws << '\n';
  return os.str();
}

std::string drops_csv(const std::vector<DropRecord>& records) {
  std::ostringstream os;
  os << "bs_distance_m,K,q,init,drop,seed,channel_hash,redraws,fell_back,min_rate,sum_rate,cell_throughput\n";
  for (const auto& r : records) {
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.channel_hash));
    os << fmt(r.bs_distance_m) << ',' << r.users_per_cell << ',' << r.q << ',' << to_string(r.arm) << ','
       << r.drop << ',' << r.seed << ',' << hash << ',' << r.redraws << ',' << (r.fell_back ? 1 : 0) << ','
       << fmt(r.min_rate) << ',' << fmt(r.sum_rate) << ',' << fmt(r.cell_throughput) << '\n';
  }
  return os.str();
}

std::string cdf_csv(const ExperimentConfig& config, const std::vector<DropRecord>& records, CdfMetric metric) {
  std::ostringstream os;
  os << "topology,bs_distance_m,K,utility,init," << (metric == CdfMetric::TxPowerDbm ? "power_dbm" : "sinr_db")
     << ",fraction\n";
  const auto points = sweep_points(config);
  for (std::size_t s = 0; s < points.size(); ++s)
    for (Arm arm : arms_of(config.init)) {
      std::vector<DropRecord> group;
      for (const auto& r : records)
        if (r.sweep_index == static_cast<int>(s) && r.arm == arm) group.push_back(r);
      if (group.empty()) continue;
      for (const auto& p : emit_cdf(group, metric))
        os << to_string(config.topology) << ',' << fmt(points[s].distance) << ',' << points[s].users << ','
           << to_string(config.utility) << ',' << to_string(arm) << ',' << fmt(p.value) << ','
           << fmt(p.fraction) << '\n';
    }
  return os.str();
}

nlohmann::ordered_json manifest(const ExperimentConfig& config, const ExperimentResult& result) {
  nlohmann::ordered_json m;
  m["tool"] = "ianum";
  m["config"] = to_json(config);
  m["seed_derivation"] = {
      {"drop_seed", "mix_seed(base_seed, drop)"},
      {"redraw_seed", "mix_seed(drop_seed, 0x5245445241570000 + attempt)"},
      {"solver_seed", "mix_seed(seed, 0x534f4c5645520000 + sweep_index)"},
      {"random_init_seed", "mix_seed(solver_seed, 0x524e44)"},
      {"ia_start", "random initialisation of the same drop, columns at unit norm"},
      {"shadowing_seed", "mix_seed(seed, 0x5348414444)"},
      {"fading_seed", "mix_seed(seed, 0x46414445)"}};
  m["fixed_constants"] = {{"ia_zero_floor", 1e-24},
                          {"degenerate_condition_number", 1e12},
                          {"maxmin_witness_sinr_slack", "10 * maxmin_eps"},
                          {"maxmin_witness_power_slack", 1e-6},
                          {"maxmin_dual_max_iter", MaxMinOptions{}.dual_max_iter},
                          {"maxmin_fixed_point_max_iter", MaxMinOptions{}.fixed_point_max_iter}};
  nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
  int fallbacks = 0;
  int redraws = 0;
  for (const auto& r : result.records) {
    if (r.arm == Arm::Random && config.init == InitMode::Both) continue;
    seeds.push_back({{"bs_distance_m", r.bs_distance_m}, {"K", r.users_per_cell}, {"drop", r.drop},
                     {"seed", r.seed}, {"redraws", r.redraws}});
  }
  for (const auto& r : result.records) {
    fallbacks += r.fell_back ? 1 : 0;
    redraws += r.redraws;
  }
  m["drop_seeds"] = std::move(seeds);
  m["fallbacks"] = fallbacks;
  m["redraws"] = redraws;
  m["outputs"] = {"results.csv", "drops.csv", "cdf_power.csv", "cdf_sinr.csv", "manifest.json"};
  return m;
}

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                   const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    out << text;
  };
  write("results.csv", results_csv(result.rows));
  write("drops.csv", drops_csv(result.records));
  write("cdf_power.csv", cdf_csv(config, result.records, CdfMetric::TxPowerDbm));
  write("cdf_sinr.csv", cdf_csv(config, result.records, CdfMetric::SinrDb));
  write("manifest.json", manifest(config, result).dump(2) + "\n");
}

}  // namespace ianum
