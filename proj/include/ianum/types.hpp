#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ianum {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Raised for invalid user input: bad dimensions, unknown topology, missing
// files. The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a numerical routine cannot produce a trustworthy result. The
// CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An exhaustive check would exceed its enumeration cap.
class TooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cell g, user k within that cell. Both zero-based.
struct UserId {
  int cell = 0;
  int index = 0;

  friend auto operator<=>(const UserId&, const UserId&) = default;
};

/// Shape of a (G, {K_g}, M x N) cluster: G cells, K_g single-stream users in
/// cell g, M receive antennas per user and N transmit antennas per BS.
class ClusterDims {
 public:
  ClusterDims() = default;
  ClusterDims(int cells, std::vector<int> users_per_cell, int rx_antennas,
              int tx_antennas);

  // Uniform-K convenience constructor.
  static ClusterDims uniform(int cells, int users, int rx_antennas,
                             int tx_antennas);

  int cells() const { return cells_; }
  int rx_antennas() const { return rx_antennas_; }
  int tx_antennas() const { return tx_antennas_; }
  int users_in(int cell) const { return users_per_cell_.at(cell); }
  const std::vector<int>& users_per_cell() const { return users_per_cell_; }
  int num_users() const { return static_cast<int>(offsets_.back()); }
  int max_users_per_cell() const;

  bool is_uniform() const;
  // Throws ConfigError when the cluster is not uniform.
  int uniform_users() const;

  // Flat user numbering: cell-major, then user index.
  int flat(UserId u) const { return offsets_.at(u.cell) + u.index; }
  int flat(int cell, int index) const { return offsets_.at(cell) + index; }
  UserId user(int flat_index) const;
  std::vector<UserId> all_users() const;

  friend bool operator==(const ClusterDims&, const ClusterDims&) = default;

 private:
  int cells_ = 0;
  std::vector<int> users_per_cell_;
  int rx_antennas_ = 0;
  int tx_antennas_ = 0;
  std::vector<int> offsets_{0};
};

std::string to_string(const ClusterDims& dims);

}  // namespace ianum
