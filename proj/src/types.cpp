#include "ianum/types.hpp"

#include <algorithm>
#include <sstream>

namespace ianum {

ClusterDims::ClusterDims(int cells, std::vector<int> users_per_cell, int rx_antennas,
                         int tx_antennas)
    : cells_(cells),
      users_per_cell_(std::move(users_per_cell)),
      rx_antennas_(rx_antennas),
      tx_antennas_(tx_antennas) {
  if (cells_ < 1) throw ConfigError("cluster needs at least one cell");
  if (static_cast<int>(users_per_cell_.size()) != cells_)
    throw ConfigError("users_per_cell must have one entry per cell");
  if (rx_antennas_ < 1) throw ConfigError("M must be >= 1");
  if (tx_antennas_ < 1) throw ConfigError("N must be >= 1");
  offsets_.assign(1, 0);
  for (int k : users_per_cell_) {
    if (k < 1) throw ConfigError("every cell needs at least one user");
    if (k > tx_antennas_)
      throw ConfigError("N must be >= K_g for every cell (got K_g=" + std::to_string(k) +
                        ", N=" + std::to_string(tx_antennas_) + ")");
    offsets_.push_back(offsets_.back() + k);
  }
}

ClusterDims ClusterDims::uniform(int cells, int users, int rx_antennas, int tx_antennas) {
  if (cells < 1) throw ConfigError("cluster needs at least one cell");
  return ClusterDims(cells, std::vector<int>(static_cast<std::size_t>(cells), users),
                     rx_antennas, tx_antennas);
}

int ClusterDims::max_users_per_cell() const {
  return *std::max_element(users_per_cell_.begin(), users_per_cell_.end());
}

bool ClusterDims::is_uniform() const {
  return std::all_of(users_per_cell_.begin(), users_per_cell_.end(),
                     [&](int k) { return k == users_per_cell_.front(); });
}

int ClusterDims::uniform_users() const {
  if (!is_uniform())
    throw ConfigError("cluster has non-uniform users per cell; use check_theorem2");
  return users_per_cell_.front();
}

UserId ClusterDims::user(int flat_index) const {
  if (flat_index < 0 || flat_index >= num_users()) throw std::out_of_range("flat user index");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat_index);
  const int cell = static_cast<int>(it - offsets_.begin()) - 1;
  return {cell, flat_index - offsets_[cell]};
}

std::vector<UserId> ClusterDims::all_users() const {
  std::vector<UserId> out;
  out.reserve(num_users());
  for (int g = 0; g < cells_; ++g)
    for (int k = 0; k < users_per_cell_[g]; ++k) out.push_back({g, k});
  return out;
}

std::string to_string(const ClusterDims& dims) {
  std::ostringstream os;
  os << "(" << dims.cells() << ",";
  if (dims.is_uniform()) {
    os << dims.users_in(0);
  } else {
    os << "{";
    for (int g = 0; g < dims.cells(); ++g) os << (g ? "," : "") << dims.users_in(g);
    os << "}";
  }
  os << "," << dims.rx_antennas() << "x" << dims.tx_antennas() << ")";
  return os.str();
}

}  // namespace ianum
