#include "ianum/feasibility.hpp"
#include "ianum/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace ianum {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(std::string("bad ") + what + " '" + s + "'");
  }
}

// "G,K,M,N" where K may be "K1:K2:...".
ClusterDims parse_dims(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw ConfigError("--dims expects G,K,M,N");
  const int g = parse_int(parts[0], "G");
  std::vector<int> k;
  for (const auto& s : split(parts[1], ':')) k.push_back(parse_int(s, "K"));
  if (k.size() == 1) k.assign(static_cast<std::size_t>(std::max(g, 0)), k[0]);
  if (static_cast<int>(k.size()) != g) throw ConfigError("--dims: need one K per cell");
  return ClusterDims(g, k, parse_int(parts[2], "M"), parse_int(parts[3], "N"));
}

// One "i g k" triple per line, 1-based; '#' starts a comment.
AlignmentSet read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pairs file '" + path + "'");
  AlignmentSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = line.substr(0, line.find('#'));
    std::istringstream ls(line);
    int i = 0, g = 0, k = 0;
    if (!(ls >> i)) continue;
    std::string rest;
    if (!(ls >> g >> k) || (ls >> rest))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'i g k'");
    set.insert({i - 1, {g - 1, k - 1}});
  }
  return set;
}

// User (g,k) nulls BSs g+1, ..., g+q (mod G).
AlignmentSet cyclic_set(const ClusterDims& dims, int q) {
  if (q < 0 || q > dims.cells() - 1) throw ConfigError("--q must lie in [0, G-1]");
  AlignmentSet set;
  for (const auto& u : dims.all_users())
    for (int s = 1; s <= q; ++s) set.insert({(u.cell + s) % dims.cells(), u});
  return set;
}

int feascheck(const std::string& dims_text, const std::string& pairs_path, std::optional<int> q) {
  const auto dims = parse_dims(dims_text);
  AlignmentSet set;
  if (!pairs_path.empty())
    set = read_pairs(pairs_path);
  else if (q)
    set = cyclic_set(dims, *q);
  else
    set = AlignmentSet::all_pairs(dims);
  set.validate(dims);
  const auto verdict = theorem2_verdict(dims, set);
  std::cout << (verdict.feasible ? "FEASIBLE" : "INFEASIBLE") << '\n';
  if (verdict.violation) std::cout << "violated " << describe(*verdict.violation) << '\n';
  std::cout << "dims=" << to_string(dims) << " pairs=" << set.size()
            << " equations=" << equation_count(dims, set) << " variables=" << variable_count(dims, set)
            << '\n';
  if (q && dims.is_uniform())
    std::cout << "corollary=" << (check_corollary1(dims, *q) ? "holds" : "fails") << '\n';
  return 0;
}

int run_and_write(const ExperimentConfig& config, const std::string& out_dir) {
  const auto result = run_experiment(config, [](const std::string& line) { std::cerr << "warn: " << line << '\n'; });
  write_outputs(out_dir, config, result);
  std::cout << results_csv(result.rows);
  return 0;
}

}  // namespace

int cli(int argc, const char* const* argv) {
  CLI::App app{"Partial interference alignment and utility maximisation simulator", "ianum"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override base_seed");

  std::string dims_text, pairs_path;
  std::optional<int> q;
  auto* feas = app.add_subcommand("feascheck", "Check IA feasibility of a nulling set");
  feas->add_option("--dims", dims_text, "G,K,M,N (K may be K1:K2:...)")->required();
  auto* pairs_opt = feas->add_option("--pairs", pairs_path, "File of 1-based 'i g k' lines");
  feas->add_option("--q", q, "Cyclic set: each user nulls the next q BSs")->excludes(pairs_opt);

  std::string figure;
  int drops = 0;
  std::string fig_out;
  std::optional<std::uint64_t> fig_seed;
  auto* sweep = app.add_subcommand("sweep-figure", "Run a preset figure sweep");
  sweep->add_option("figure", figure, "fig5, fig6a, fig6b, fig8a, fig8b or fig9")->required();
  sweep->add_option("--drops", drops, "Drops per sweep point");
  sweep->add_option("--out", fig_out, "Output directory")->required();
  sweep->add_option("--seed", fig_seed, "Base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[config]: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*run) {
      auto config = load_config(config_path);
      if (seed) config.base_seed = *seed;
      return run_and_write(config, out_dir);
    }
    if (*feas) return feascheck(dims_text, pairs_path, q);
    auto config = figure_preset(figure);
    if (drops != 0) config.drops = drops;
    if (fig_seed) config.base_seed = *fig_seed;
    config.validate();
    return run_and_write(config, fig_out);
  } catch (const ConfigError& e) {
    std::cerr << "error[config]: " << e.what() << '\n';
    return 1;
  } catch (const TooLargeError& e) {
    std::cerr << "error[too-large]: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "error[numerical]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace ianum
