#pragma once

#include "ianum/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ianum {

/// BS `bs` must null its interference at user `user` (bs != user.cell).
struct AlignmentPair {
  int bs = 0;
  UserId user;

  friend auto operator<=>(const AlignmentPair&, const AlignmentPair&) = default;
};

/// The nulling set I. Pairs are kept sorted and unique.
class AlignmentSet {
 public:
  AlignmentSet() = default;
  explicit AlignmentSet(std::vector<AlignmentPair> pairs);

  // Every (i, gk) with i != g: the full-IA set I_all.
  static AlignmentSet all_pairs(const ClusterDims& dims);

  void insert(AlignmentPair p);
  bool contains(const AlignmentPair& p) const;
  // Throws ConfigError for intra-cell pairs or indices outside dims.
  void validate(const ClusterDims& dims) const;

  const std::vector<AlignmentPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

  friend bool operator==(const AlignmentSet&, const AlignmentSet&) = default;

 private:
  std::vector<AlignmentPair> pairs_;
};

// Number of scalar IA equations sum_{(i,gk) in I} K_i.
int equation_count(const ClusterDims& dims, const AlignmentSet& set);
// Number of free scalar variables |I_users|(M-1) + sum_{i in I_BS} (N-K_i)K_i.
int variable_count(const ClusterDims& dims, const AlignmentSet& set);

struct EnumerationCaps {
  int max_bs = 8;      // distinct BSs appearing in I
  int max_users = 16;  // distinct users appearing in I
};

/// A subset J of I whose counting inequality fails, described by its user
/// and BS index sets.
struct ViolatedSubset {
  std::vector<UserId> users;
  std::vector<int> bss;
  long long lhs = 0;
  long long rhs = 0;
};

struct FeasibilityVerdict {
  bool feasible = true;
  std::optional<ViolatedSubset> violation;
};

// M >= 1, N >= K and M + N >= K(q + 1) + 1. Throws ConfigError for
// non-uniform clusters or q outside [0, G - 1].
bool check_corollary1(const ClusterDims& dims, int q);

// Uniform-K counting condition over all subsets of I. Throws ConfigError for
// non-uniform clusters and TooLargeError beyond the caps.
bool check_theorem1(const ClusterDims& dims, const AlignmentSet& set,
                    const EnumerationCaps& caps = {});
FeasibilityVerdict theorem1_verdict(const ClusterDims& dims, const AlignmentSet& set,
                                    const EnumerationCaps& caps = {});

// Per-cell-K counting condition.
bool check_theorem2(const ClusterDims& dims, const AlignmentSet& set,
                    const EnumerationCaps& caps = {});
FeasibilityVerdict theorem2_verdict(const ClusterDims& dims, const AlignmentSet& set,
                                    const EnumerationCaps& caps = {});

/// Jacobian of the reduced alignment map at a random point, for random
/// channel blocks. Rows follow BS-major pair order then stream index; columns
/// hold the per-BS transmit variables first, then the per-user receive ones.
struct AlignmentJacobian {
  CMatrix jacobian;
  int equations = 0;
  int variables = 0;
};

AlignmentJacobian alignment_jacobian(const ClusterDims& dims, const AlignmentSet& set,
                                     std::uint64_t seed);

// Numerical rank of the same Jacobian against max_dim * eps * sigma_max.
int numerical_rank(const CMatrix& m);

// True iff the Jacobian has full row rank, majority of three seeded draws.
// Throws TooLargeError if equations or variables exceed size_cap.
bool jacobian_rank_oracle(const ClusterDims& dims, const AlignmentSet& set,
                          std::uint64_t seed, int size_cap = 200);

// Perfect matching (equation side) in the equation/variable bipartite graph
// given by the Jacobian's sparsity pattern with the H^(4) blocks zeroed.
bool hall_matching_exists(const ClusterDims& dims, const AlignmentSet& set,
                          int size_cap = 200);

std::string describe(const ViolatedSubset& v);

}  // namespace ianum
