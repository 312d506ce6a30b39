#include "ianum/feasibility.hpp"

#include "ianum/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace ianum {

AlignmentSet::AlignmentSet(std::vector<AlignmentPair> pairs) : pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end());
  pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
}

AlignmentSet AlignmentSet::all_pairs(const ClusterDims& dims) {
  std::vector<AlignmentPair> pairs;
  for (int i = 0; i < dims.cells(); ++i)
    for (const auto& u : dims.all_users())
      if (u.cell != i) pairs.push_back({i, u});
  return AlignmentSet(std::move(pairs));
}

void AlignmentSet::insert(AlignmentPair p) {
  const auto it = std::lower_bound(pairs_.begin(), pairs_.end(), p);
  if (it == pairs_.end() || *it != p) pairs_.insert(it, p);
}

bool AlignmentSet::contains(const AlignmentPair& p) const {
  return std::binary_search(pairs_.begin(), pairs_.end(), p);
}

void AlignmentSet::validate(const ClusterDims& dims) const {
  for (const auto& p : pairs_) {
    if (p.bs < 0 || p.bs >= dims.cells() || p.user.cell < 0 || p.user.cell >= dims.cells() ||
        p.user.index < 0 || p.user.index >= dims.users_in(p.user.cell))
      throw ConfigError("alignment pair index out of range");
    if (p.bs == p.user.cell) throw ConfigError("alignment pair is intra-cell (i == g)");
  }
}

int equation_count(const ClusterDims& dims, const AlignmentSet& set) {
  int n = 0;
  for (const auto& p : set) n += dims.users_in(p.bs);
  return n;
}

int variable_count(const ClusterDims& dims, const AlignmentSet& set) {
  std::set<int> bss;
  std::set<UserId> users;
  for (const auto& p : set) {
    bss.insert(p.bs);
    users.insert(p.user);
  }
  int n = static_cast<int>(users.size()) * (dims.rx_antennas() - 1);
  for (int b : bss) n += (dims.tx_antennas() - dims.users_in(b)) * dims.users_in(b);
  return n;
}

bool check_corollary1(const ClusterDims& dims, int q) {
  const int k = dims.uniform_users();
  if (q < 0 || q > dims.cells() - 1)
    throw ConfigError("q must lie in [0, G-1], got " + std::to_string(q));
  const int m = dims.rx_antennas();
  const int n = dims.tx_antennas();
  return m >= 1 && n >= k && m + n >= k * (q + 1) + 1;
}

namespace {

// Enumerates (BS subset, user subset) pairs over the indices that appear in
// I; each subset J of I is dominated by the maximal J with the same induced
// index sets, which has the same LHS and the largest RHS.
FeasibilityVerdict enumerate_counting_condition(const ClusterDims& dims,
                                                const AlignmentSet& set,
                                                const EnumerationCaps& caps) {
  set.validate(dims);
  FeasibilityVerdict verdict;
  if (set.empty()) return verdict;

  std::vector<int> bss;
  std::vector<UserId> users;
  for (const auto& p : set) {
    bss.push_back(p.bs);
    users.push_back(p.user);
  }
  std::sort(bss.begin(), bss.end());
  bss.erase(std::unique(bss.begin(), bss.end()), bss.end());
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());

  const int nb = static_cast<int>(bss.size());
  const int nu = static_cast<int>(users.size());
  if (nb > caps.max_bs || nu > caps.max_users)
    throw TooLargeError("alignment set too large to enumerate: " + std::to_string(nb) +
                        " BSs (cap " + std::to_string(caps.max_bs) + "), " +
                        std::to_string(nu) + " users (cap " + std::to_string(caps.max_users) +
                        ")");

  // bs_mask[u]: local BS indices paired with local user u.
  std::vector<std::uint32_t> bs_mask(nu, 0);
  for (const auto& p : set) {
    const int ub = static_cast<int>(std::lower_bound(users.begin(), users.end(), p.user) - users.begin());
    const int bb = static_cast<int>(std::lower_bound(bss.begin(), bss.end(), p.bs) - bss.begin());
    bs_mask[ub] |= 1u << bb;
  }

  std::vector<long long> stream_weight(nb);      // K_l
  std::vector<long long> bs_variables(nb);       // (N - K_l) K_l
  for (int b = 0; b < nb; ++b) {
    const long long k = dims.users_in(bss[b]);
    stream_weight[b] = k;
    bs_variables[b] = (dims.tx_antennas() - k) * k;
  }
  const std::uint32_t bs_subsets = 1u << nb;
  std::vector<long long> bs_lhs(bs_subsets, 0);
  for (std::uint32_t b = 1; b < bs_subsets; ++b) {
    const int low = std::countr_zero(b);
    bs_lhs[b] = bs_lhs[b & (b - 1)] + bs_variables[low];
  }

  const long long per_user = dims.rx_antennas() - 1;
  const std::size_t user_subsets = std::size_t{1} << nu;
  std::vector<long long> rhs(user_subsets);
  std::vector<std::uint32_t> induced_bs(user_subsets);
  std::vector<int> induced_users(user_subsets);
  std::vector<std::uint32_t> hit(nu);
  std::vector<long long> weight(nu);

  for (std::uint32_t b = 1; b < bs_subsets; ++b) {
    for (int u = 0; u < nu; ++u) {
      hit[u] = bs_mask[u] & b;
      long long w = 0;
      for (std::uint32_t m = hit[u]; m; m &= m - 1) w += stream_weight[std::countr_zero(m)];
      weight[u] = w;
    }
    rhs[0] = 0;
    induced_bs[0] = 0;
    induced_users[0] = 0;
    for (std::size_t s = 1; s < user_subsets; ++s) {
      const int low = std::countr_zero(s);
      const std::size_t rest = s & (s - 1);
      rhs[s] = rhs[rest] + weight[low];
      induced_bs[s] = induced_bs[rest] | hit[low];
      induced_users[s] = induced_users[rest] + (hit[low] != 0);
      // Only the exact induced sets are distinct subsets J.
      if (induced_bs[s] != b || induced_users[s] != std::popcount(s)) continue;
      const long long lhs = induced_users[s] * per_user + bs_lhs[b];
      if (lhs < rhs[s]) {
        ViolatedSubset v;
        for (int u = 0; u < nu; ++u)
          if (s >> u & 1) v.users.push_back(users[u]);
        for (int bb = 0; bb < nb; ++bb)
          if (b >> bb & 1) v.bss.push_back(bss[bb]);
        v.lhs = lhs;
        v.rhs = rhs[s];
        verdict.feasible = false;
        verdict.violation = std::move(v);
        return verdict;
      }
    }
  }
  return verdict;
}

}  // namespace

FeasibilityVerdict theorem1_verdict(const ClusterDims& dims, const AlignmentSet& set,
                                    const EnumerationCaps& caps) {
  dims.uniform_users();
  return enumerate_counting_condition(dims, set, caps);
}

bool check_theorem1(const ClusterDims& dims, const AlignmentSet& set, const EnumerationCaps& caps) {
  return theorem1_verdict(dims, set, caps).feasible;
}

FeasibilityVerdict theorem2_verdict(const ClusterDims& dims, const AlignmentSet& set,
                                    const EnumerationCaps& caps) {
  return enumerate_counting_condition(dims, set, caps);
}

bool check_theorem2(const ClusterDims& dims, const AlignmentSet& set, const EnumerationCaps& caps) {
  return theorem2_verdict(dims, set, caps).feasible;
}

namespace {

// Column layout of the reduced variables.
struct VariableLayout {
  std::map<int, int> bs_offset;       // BS -> first column of its (N-K_i) x K_i block
  std::map<UserId, int> user_offset;  // user -> first column of its (M-1) entries
  int total = 0;
};

VariableLayout layout_variables(const ClusterDims& dims, const AlignmentSet& set) {
  VariableLayout layout;
  std::set<int> bss;
  std::set<UserId> users;
  for (const auto& p : set) {
    bss.insert(p.bs);
    users.insert(p.user);
  }
  for (int b : bss) {
    layout.bs_offset[b] = layout.total;
    layout.total += (dims.tx_antennas() - dims.users_in(b)) * dims.users_in(b);
  }
  for (const auto& u : users) {
    layout.user_offset[u] = layout.total;
    layout.total += dims.rx_antennas() - 1;
  }
  return layout;
}

// Pairs in BS-major order (AlignmentSet is already sorted by BS first).
int bs_var_column(const VariableLayout& layout, int bs, int free_rows, int row, int stream) {
  return layout.bs_offset.at(bs) + stream * free_rows + row;
}

}  // namespace

AlignmentJacobian alignment_jacobian(const ClusterDims& dims, const AlignmentSet& set,
                                     std::uint64_t seed) {
  set.validate(dims);
  const auto layout = layout_variables(dims, set);
  AlignmentJacobian out;
  out.equations = equation_count(dims, set);
  out.variables = layout.total;
  out.jacobian = CMatrix::Zero(out.equations, out.variables);

  Rng rng(seed);
  const int m1 = dims.rx_antennas() - 1;
  // Random evaluation point: one transmit block per BS, one receive vector
  // (conjugated) per user.
  std::map<int, CMatrix> tx_point;
  for (const auto& [b, off] : layout.bs_offset)
    tx_point[b] = complex_normal_matrix(rng, dims.tx_antennas() - dims.users_in(b), dims.users_in(b));
  std::map<UserId, CVector> rx_point;
  for (const auto& [u, off] : layout.user_offset) rx_point[u] = complex_normal_matrix(rng, m1, 1);

  int row = 0;
  for (const auto& p : set) {
    const int k = dims.users_in(p.bs);
    const int free_rows = dims.tx_antennas() - k;
    const CMatrix h2 = complex_normal_matrix(rng, 1, free_rows);
    const CMatrix h3 = complex_normal_matrix(rng, m1, k);
    const CMatrix h4 = complex_normal_matrix(rng, m1, free_rows);
    const CMatrix& tx = tx_point.at(p.bs);
    const CVector& w = rx_point.at(p.user);
    // F_s = -(w^T h3[:, s] + h2 tx[:, s] + w^T h4 tx[:, s]), s = 0..k-1.
    const CMatrix d_rx = -(h3 + h4 * tx);                      // m1 x k, column s: dF_s/dw
    const CMatrix d_tx = -(h2 + w.transpose() * h4);            // 1 x free_rows: dF_s/dtx[:, s]
    const int user_col = layout.user_offset.at(p.user);
    for (int s = 0; s < k; ++s, ++row) {
      for (int a = 0; a < m1; ++a) out.jacobian(row, user_col + a) = d_rx(a, s);
      for (int r = 0; r < free_rows; ++r)
        out.jacobian(row, bs_var_column(layout, p.bs, free_rows, r, s)) = d_tx(0, r);
    }
  }
  return out;
}

int numerical_rank(const CMatrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

bool jacobian_rank_oracle(const ClusterDims& dims, const AlignmentSet& set, std::uint64_t seed,
                          int size_cap) {
  set.validate(dims);
  const int eqs = equation_count(dims, set);
  const int vars = variable_count(dims, set);
  if (eqs > size_cap || vars > size_cap)
    throw TooLargeError("Jacobian oracle size cap exceeded: " + std::to_string(eqs) +
                        " equations, " + std::to_string(vars) + " variables (cap " +
                        std::to_string(size_cap) + ")");
  if (eqs == 0) return true;
  if (eqs > vars) return false;
  int votes = 0;
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    const auto jac = alignment_jacobian(dims, set, mix_seed(seed, trial));
    if (numerical_rank(jac.jacobian) == eqs) ++votes;
  }
  return votes >= 2;
}

bool hall_matching_exists(const ClusterDims& dims, const AlignmentSet& set, int size_cap) {
  set.validate(dims);
  const int eqs = equation_count(dims, set);
  const auto layout = layout_variables(dims, set);
  if (eqs > size_cap || layout.total > size_cap)
    throw TooLargeError("matching size cap exceeded");
  if (eqs == 0) return true;
  if (eqs > layout.total) return false;

  std::vector<std::vector<int>> adj;
  adj.reserve(eqs);
  const int m1 = dims.rx_antennas() - 1;
  for (const auto& p : set) {
    const int k = dims.users_in(p.bs);
    const int free_rows = dims.tx_antennas() - k;
    const int user_col = layout.user_offset.at(p.user);
    for (int s = 0; s < k; ++s) {
      std::vector<int> nbrs;
      for (int a = 0; a < m1; ++a) nbrs.push_back(user_col + a);
      for (int r = 0; r < free_rows; ++r) nbrs.push_back(bs_var_column(layout, p.bs, free_rows, r, s));
      adj.push_back(std::move(nbrs));
    }
  }

  // Kuhn's augmenting paths.
  std::vector<int> match_of_var(layout.total, -1);
  std::vector<char> seen;
  auto augment = [&](auto&& self, int eq) -> bool {
    for (int v : adj[eq]) {
      if (seen[v]) continue;
      seen[v] = 1;
      if (match_of_var[v] < 0 || self(self, match_of_var[v])) {
        match_of_var[v] = eq;
        return true;
      }
    }
    return false;
  };
  for (int eq = 0; eq < eqs; ++eq) {
    seen.assign(layout.total, 0);
    if (!augment(augment, eq)) return false;
  }
  return true;
}

std::string describe(const ViolatedSubset& v) {
  std::ostringstream os;
  os << "users={";
  for (std::size_t i = 0; i < v.users.size(); ++i)
    os << (i ? "," : "") << "(" << v.users[i].cell + 1 << "," << v.users[i].index + 1 << ")";
  os << "} bss={";
  for (std::size_t i = 0; i < v.bss.size(); ++i) os << (i ? "," : "") << v.bss[i] + 1;
  os << "} lhs=" << v.lhs << " rhs=" << v.rhs;
  return os.str();
}

}  // namespace ianum
