#pragma once

#include "ianum/alignment.hpp"
#include "ianum/net_model.hpp"
#include "ianum/types.hpp"

#include <cstdint>
#include <vector>

namespace ianum {

struct UtilityResult {
  BeamformerSet beamformers;  // V carries power, U unit norm
  std::vector<double> per_user_sinr;  // linear
  std::vector<double> per_user_rate;  // b/s/Hz with the SINR gap applied
  std::vector<double> objective_trace;  // gap-free objective per iteration
  int iterations = 0;

  double min_rate() const;
  double sum_rate() const;
};

// Received SINR of one user, counting every other stream (intra-cell included)
// as interference.
double sinr(const ChannelSet& channels, const BeamformerSet& beamformers, UserId user);
std::vector<double> all_sinr(const ChannelSet& channels, const BeamformerSet& beamformers);

// log2(1 + sinr / gap), gap linear.
double rate_with_gap(double sinr, double gap_linear);

// Unit-norm MMSE receivers for the given precoders.
std::vector<CVector> mmse_receivers(const ChannelSet& channels, const std::vector<CVector>& v);

// Seeded Gaussian precoders, orthonormalised per cell with p_max / K_g per
// stream, and MMSE receivers.
BeamformerSet random_initialization(const ChannelSet& channels, std::uint64_t seed);

// Scales every stream to p_max / K_g (directions kept).
std::vector<CVector> equal_power(const ChannelSet& channels, const std::vector<CVector>& v);

struct WmmseOptions {
  int max_iter = 500;
  double tol = 1e-6;  // relative sum-rate change
  double gap_linear = 1.0;  // reported-rate gap
  // SINR gap inside the optimised objective; 1 optimises plain log2(1+SINR).
  double objective_gap_linear = 1.0;
};

// Weighted-MMSE sum-rate maximisation under per-BS power constraints. The
// objective trace holds the gap-free sum-rate of every iterate, starting with
// the initial precoders.
UtilityResult wmmse_sum_rate(const ChannelSet& channels, const std::vector<CVector>& init_v,
                             const WmmseOptions& options = {});

// Effective MISO channels h_(i,gk) = H_(i,gk)^H u_gk for fixed receivers,
// indexed [bs * num_users + flat_user].
std::vector<CVector> effective_channels(const ChannelSet& channels, const std::vector<CVector>& u);

/// Outcome of one SINR-target feasibility test under per-BS power limits.
struct SinrFeasibility {
  bool feasible = false;
  // True when infeasibility is certified by a dual bound rather than an
  // exhausted iteration budget.
  bool certified = false;
  std::vector<CVector> v;  // witnessing precoders when feasible
  std::vector<double> bs_power;
};

struct MaxMinOptions {
  double eps = 1e-4;
  int outer_iters = 10;
  double gap_linear = 1.0;
  int dual_max_iter = 400;
  int fixed_point_max_iter = 20000;
};

// Is there V with SINR_gk >= target for all users (receivers fixed) and
// sum_k ||v_gk||^2 <= p_max per BS? Solved through the uplink dual with
// per-BS noise weights.
SinrFeasibility sinr_target_feasible(const ChannelSet& channels, const std::vector<CVector>& u,
                                     double target, const MaxMinOptions& options = {});

// min over users of p_max ||H_(g,gk)^H u_gk||^2 / (sigma_n^2 + nu_gk^2).
double interference_free_bound(const ChannelSet& channels, const std::vector<CVector>& u);

struct MaxMinFixedResult {
  std::vector<CVector> v;
  double t = 0.0;      // largest feasible common SINR found
  double t_hi = 0.0;   // bisection upper limit used
  int bisection_steps = 0;
};

// Bisection on the common SINR target with the receivers held fixed. A
// non-positive t_hi selects interference_free_bound.
MaxMinFixedResult maxmin_fixed_rx(const ChannelSet& channels, const std::vector<CVector>& u,
                                  double t_hi = 0.0, const MaxMinOptions& options = {});

// Alternates maxmin_fixed_rx and MMSE receiver updates for outer_iters rounds
// and returns the best iterate by minimum SINR (under MMSE receivers). The
// objective trace holds log2(1 + min SINR) of the initial point and of every
// round.
UtilityResult maxmin_alternate(const ChannelSet& channels, const BeamformerSet& init,
                               const MaxMinOptions& options = {});

}  // namespace ianum
