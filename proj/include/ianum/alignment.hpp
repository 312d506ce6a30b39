#pragma once

#include "ianum/feasibility.hpp"
#include "ianum/net_model.hpp"
#include "ianum/types.hpp"

#include <cstdint>
#include <vector>

namespace ianum {

/// Transmit vectors v_gk (N x 1) and receive vectors u_gk (M x 1), indexed by
/// flat user. ||v_gk||^2 is the stream power once powers are applied.
struct BeamformerSet {
  std::vector<CVector> v;
  std::vector<CVector> u;

  // [v_g1 ... v_gK] for one cell.
  CMatrix cell_precoder(const ClusterDims& dims, int cell) const;
  void set_cell_precoder(const ClusterDims& dims, int cell, const CMatrix& columns);
  double bs_power(const ClusterDims& dims, int cell) const;
};

// A degenerate drop (near-singular intra-cell effective channel). The harness
// redraws the drop when it sees this.
class DegenerateDropError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// q = max(0, floor((M + N - 1) / K) - 1). Callers cap at G - 1.
int compute_q(int rx_antennas, int tx_antennas, int users_per_cell);

// Interference from BS i at the user with all-ones probe beamformers,
// summed over the K_i streams of BS i.
double interference_power(const ChannelSet& channels, int bs, UserId user);

// Each user's q strongest out-of-cell BSs, then every BS column pruned to its
// K_i q strongest pairs. Ties go to the lower BS index, then the lower user.
AlignmentSet select_interferers(const ChannelSet& channels, const ClusterDims& dims, int q);

// sum_{(i,gk) in I} sum_j |u_gk^H H_(i,gk) v_ij|^2 with every v_ij scaled to unit
// norm.
double leakage(const ChannelSet& channels, const BeamformerSet& beamformers,
               const AlignmentSet& set);

struct IaOptions {
  double tol = 1e-10;  // relative leakage change
  int max_iter = 2000;
  // Minimise leakage over unit-Frobenius-norm copies of the links in I. Same
  // zero set, far better conditioned when link gains differ by tens of dB.
  bool normalize_links = true;
};

struct IaResult {
  BeamformerSet beamformers;  // unit-norm v and u
  // Minimised objective per iteration (normalised links when enabled); entry 0
  // is the initial point.
  std::vector<double> leakage_trace;
  int iterations = 0;
  bool converged = false;

  double final_leakage() const { return leakage_trace.back(); }
  double relative_leakage() const;
};

// Starting point of the leakage minimisation: K_i random orthonormal columns
// per BS, and each receiver on the dominant left singular vector of its direct
// channel.
BeamformerSet ia_initialization(const ChannelSet& channels, std::uint64_t seed);

// Alternating leakage minimisation: all receivers from the current
// precoders, then all precoders (K_i least-leaking orthonormal directions)
// from the new receivers. Stops on a relative change below tol, on leakage
// below 1e-24 of its initial value, or after max_iter iterations.
IaResult solve_partial_ia(const ChannelSet& channels, const AlignmentSet& set,
                          const IaOptions& options, std::uint64_t seed);
// Same, from the given starting beamformers (columns rescaled to unit norm).
IaResult solve_partial_ia(const ChannelSet& channels, const AlignmentSet& set,
                          const IaOptions& options, const BeamformerSet& start);

// V_g <- V_g A_g^{-1} with [A_g]_kj = u_gk^H H_(g,gk) v_gj, then unit-norm
// columns. Throws DegenerateDropError if cond(A_g) > 1e12.
BeamformerSet cancel_intracell(const ChannelSet& channels, const BeamformerSet& beamformers);

// Largest |[A_g]_kj| / |[A_g]_kk| over k != j and all cells.
double intracell_offdiag_ratio(const ChannelSet& channels, const BeamformerSet& beamformers);

}  // namespace ianum
