#pragma once

#include "ianum/alignment.hpp"
#include "ianum/net_model.hpp"
#include "ianum/num.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ianum {

enum class Utility { MaxMin, SumRate };
enum class InitMode { IA, Random, Both };
enum class Arm { IA, Random };

std::string_view to_string(Utility u);
std::string_view to_string(InitMode m);
std::string_view to_string(Arm a);
Utility parse_utility(std::string_view s);
InitMode parse_init_mode(std::string_view s);

/// One Monte-Carlo experiment: a grid of BS distances x users per cell.
struct ExperimentConfig {
  TopologyKind topology = TopologyKind::ThreeSector;
  std::vector<double> bs_distances_m = {600.0, 900.0, 1200.0, 1500.0, 1800.0};
  std::vector<int> users_per_cell = {2};  // K values swept
  int rx_antennas = 3;
  int tx_antennas = 4;
  Utility utility = Utility::MaxMin;
  InitMode init = InitMode::Both;
  std::optional<int> fixed_q;  // empty: min(compute_q, G - 1)
  int drops = 20;
  std::uint64_t base_seed = 1;
  LinkParams link;
  IaOptions ia;
  int wmmse_max_iter = 500;
  double wmmse_tol = 1e-6;
  double maxmin_eps = 1e-4;
  int maxmin_outer_iters = 10;
  bool gap_in_objective = false;
  int max_redraws = 20;

  int cells() const;
  // Throws ConfigError.
  void validate() const;
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Preset for one of fig5, fig6a, fig6b, fig8a, fig8b, fig9.
ExperimentConfig figure_preset(std::string_view name);

/// Outcome of one arm on one drop.
struct DropRecord {
  int sweep_index = 0;
  double bs_distance_m = 0.0;
  int users_per_cell = 0;
  int q = 0;
  Arm arm = Arm::IA;
  int drop = 0;
  std::uint64_t seed = 0;       // seed of the realisation actually used
  std::uint64_t channel_hash = 0;
  int redraws = 0;
  bool fell_back = false;       // IA arm ran from random init
  double min_rate = 0.0;        // with the SINR gap
  double sum_rate = 0.0;
  double cell_throughput = 0.0;
  std::vector<double> sinr_db;  // per user, flat order
  std::vector<double> power_dbm;
};

struct ResultRow {
  TopologyKind topology = TopologyKind::ThreeSector;
  double bs_distance_m = 0.0;
  int cells = 0;
  int users_per_cell = 0;
  int rx_antennas = 0;
  int tx_antennas = 0;
  int q = 0;
  Utility utility = Utility::MaxMin;
  Arm arm = Arm::IA;
  int drops = 0;
  double avg_cell_throughput = 0.0;
  double stderr_throughput = 0.0;
  int fallbacks = 0;
  int redraws = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;      // distance-major, then K, then IA before Random
  std::vector<DropRecord> records;  // same order, drops ascending
};

using LogSink = std::function<void(const std::string&)>;

// Runs every (distance, K) sweep point for every drop. Worker count comes from
// IANUM_WORKERS (default: hardware concurrency); results do not depend on it.
ExperimentResult run_experiment(const ExperimentConfig& config, const LogSink& log = {});

// Average and standard error of the per-drop throughputs of each row.
std::vector<ResultRow> aggregate(const ExperimentConfig& config,
                                 const std::vector<DropRecord>& records);

enum class CdfMetric { TxPowerDbm, SinrDb };

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;  // share of samples <= value
};

// Empirical CDF over every per-user sample of the records. Throws ConfigError
// when there are no samples.
std::vector<CdfPoint> emit_cdf(const std::vector<DropRecord>& records, CdfMetric metric);

// Fixed-column CSV text.
std::string results_csv(const std::vector<ResultRow>& rows);
std::string drops_csv(const std::vector<DropRecord>& records);
std::string cdf_csv(const ExperimentConfig& config, const std::vector<DropRecord>& records,
                    CdfMetric metric);
nlohmann::ordered_json manifest(const ExperimentConfig& config, const ExperimentResult& result);

// Writes results.csv, drops.csv, cdf_power.csv, cdf_sinr.csv and
// manifest.json into dir (created if needed).
void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                   const ExperimentResult& result);

// Command-line entry point. Returns the process exit code.
int cli(int argc, const char* const* argv);

}  // namespace ianum
