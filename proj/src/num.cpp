#include "ianum/num.hpp"

#include "ianum/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ianum {

double UtilityResult::min_rate() const {
  return per_user_rate.empty() ? 0.0 : *std::min_element(per_user_rate.begin(), per_user_rate.end());
}

double UtilityResult::sum_rate() const {
  return std::accumulate(per_user_rate.begin(), per_user_rate.end(), 0.0);
}

double sinr(const ChannelSet& channels, const BeamformerSet& beamformers, UserId user) {
  const auto& dims = channels.dims;
  const int me = dims.flat(user);
  const CVector& u = beamformers.u.at(me);
  double signal = 0.0;
  double interference = channels.noise_plus_ooc(me);
  for (int i = 0; i < dims.cells(); ++i) {
    const CVector uh = channels.at(i, me).adjoint() * u;
    for (int j = 0; j < dims.users_in(i); ++j) {
      const int other = dims.flat(i, j);
      const double p = std::norm(uh.dot(beamformers.v.at(other)));
      if (other == me)
        signal = p;
      else
        interference += p;
    }
  }
  return signal / interference;
}

std::vector<double> all_sinr(const ChannelSet& channels, const BeamformerSet& beamformers) {
  std::vector<double> out;
  for (const auto& user : channels.dims.all_users()) out.push_back(sinr(channels, beamformers, user));
  return out;
}

double rate_with_gap(double sinr_linear, double gap_linear) {
  return std::log2(1.0 + sinr_linear / gap_linear);
}

namespace {

// Noise plus every stream other than the user's own, at user `me`.
CMatrix interference_covariance(const ChannelSet& channels, const std::vector<CVector>& v, int me) {
  const auto& dims = channels.dims;
  const int m = dims.rx_antennas();
  CMatrix c = channels.noise_plus_ooc(me) * CMatrix::Identity(m, m);
  for (int i = 0; i < dims.cells(); ++i) {
    const CMatrix& h = channels.at(i, me);
    for (int j = 0; j < dims.users_in(i); ++j) {
      const int other = dims.flat(i, j);
      if (other == me) continue;
      const CVector hv = h * v[other];
      c.noalias() += hv * hv.adjoint();
    }
  }
  return c;
}

CVector dominant_direction(const CMatrix& direct) {
  Eigen::JacobiSVD<CMatrix> svd(direct, Eigen::ComputeThinU);
  return svd.matrixU().col(0);
}

void require_finite(double x, const char* what, int iteration) {
  if (!std::isfinite(x))
    throw NumericalError(std::string("non-finite ") + what + " at iteration " + std::to_string(iteration));
}

}  // namespace

std::vector<CVector> mmse_receivers(const ChannelSet& channels, const std::vector<CVector>& v) {
  const auto& dims = channels.dims;
  std::vector<CVector> u(dims.num_users());
  for (int me = 0; me < dims.num_users(); ++me) {
    const UserId user = dims.user(me);
    const CMatrix c = interference_covariance(channels, v, me);
    const CVector signal = channels.at(user.cell, me) * v[me];
    CVector x = c.llt().solve(signal);
    const double n = x.norm();
    u[me] = n > 0.0 && std::isfinite(n) ? CVector(x / n) : dominant_direction(channels.at(user.cell, me));
  }
  return u;
}

std::vector<CVector> equal_power(const ChannelSet& channels, const std::vector<CVector>& v) {
  const auto& dims = channels.dims;
  std::vector<CVector> out = v;
  for (const auto& user : dims.all_users()) {
    CVector& x = out[dims.flat(user)];
    const double n = x.norm();
    if (n > 0.0) x *= std::sqrt(channels.p_max / dims.users_in(user.cell)) / n;
  }
  return out;
}

BeamformerSet random_initialization(const ChannelSet& channels, std::uint64_t seed) {
  const auto& dims = channels.dims;
  Rng rng(seed);
  BeamformerSet bf;
  bf.v.resize(dims.num_users());
  for (int g = 0; g < dims.cells(); ++g) {
    const CMatrix gauss = complex_normal_matrix(rng, dims.tx_antennas(), dims.users_in(g));
    Eigen::HouseholderQR<CMatrix> qr(gauss);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(dims.tx_antennas(), dims.users_in(g));
    bf.set_cell_precoder(dims, g, q * std::sqrt(channels.p_max / dims.users_in(g)));
  }
  bf.u = mmse_receivers(channels, bf.v);
  return bf;
}

namespace {

// Direct links scaled by 1/sqrt(gap): optimising log(1 + SINR) on the result
// optimises log(1 + SINR / gap) on the original.
ChannelSet with_direct_gap(const ChannelSet& channels, double gap_linear) {
  ChannelSet out = channels;
  const double s = 1.0 / std::sqrt(gap_linear);
  for (const auto& user : channels.dims.all_users()) out.at(user.cell, user) *= s;
  return out;
}

struct MmseStep {
  std::vector<CVector> u;  // unnormalised MMSE receivers
  std::vector<double> mse;
  double sum_rate = 0.0;   // sum log2(1 / mse) = sum log2(1 + SINR_mmse)
};

MmseStep mmse_step(const ChannelSet& channels, const std::vector<CVector>& v) {
  const auto& dims = channels.dims;
  MmseStep step;
  step.u.resize(dims.num_users());
  step.mse.resize(dims.num_users());
  for (int me = 0; me < dims.num_users(); ++me) {
    const UserId user = dims.user(me);
    const CMatrix c = interference_covariance(channels, v, me);
    const CVector signal = channels.at(user.cell, me) * v[me];
    const CVector x = c.llt().solve(signal);
    // With the own stream added back (Sherman-Morrison): u = x / (1 + SINR),
    // mse = 1 / (1 + SINR).
    const double sinr_me = std::max(0.0, signal.dot(x).real());
    step.u[me] = x / (1.0 + sinr_me);
    step.mse[me] = 1.0 / (1.0 + sinr_me);
    step.sum_rate += std::log2(1.0 + sinr_me);
  }
  return step;
}

// Per-BS transmit update: v_k = (A + mu I)^+ b_k with the smallest mu >= 0
// meeting sum_k ||v_k||^2 <= p_max.
CMatrix constrained_precoder(const CMatrix& a, const CMatrix& b, double p_max) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(a);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  const CMatrix c = eig.eigenvectors().adjoint() * b;
  const Eigen::VectorXd phi = c.cwiseAbs2().rowwise().sum();
  const double lmax = lambda.maxCoeff();
  const double floor = std::max(lmax, 1e-300) * 1e-13;

  auto power = [&](double mu) {
    double p = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const double d = lambda(i) + mu;
      if (mu == 0.0 && lambda(i) <= floor) continue;  // pseudo-inverse at mu = 0
      p += phi(i) / (d * d);
    }
    return p;
  };
  auto solve = [&](double mu) {
    CMatrix scaled = c;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const double d = lambda(i) + mu;
      if (mu == 0.0 && lambda(i) <= floor)
        scaled.row(i).setZero();
      else
        scaled.row(i) /= d;
    }
    return CMatrix(eig.eigenvectors() * scaled);
  };

  if (power(0.0) <= p_max) return solve(0.0);
  double lo = 0.0;
  double hi = std::sqrt(phi.sum() / p_max);
  while (power(hi) > p_max) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (power(mid) > p_max ? lo : hi) = mid;
  }
  return solve(hi);
}

}  // namespace

UtilityResult wmmse_sum_rate(const ChannelSet& channels, const std::vector<CVector>& init_v,
                             const WmmseOptions& options) {
  const auto& dims = channels.dims;
  if (static_cast<int>(init_v.size()) != dims.num_users())
    throw ConfigError("initial precoders do not match cluster size");
  const ChannelSet objective = options.objective_gap_linear == 1.0
                                   ? channels
                                   : with_direct_gap(channels, options.objective_gap_linear);
  UtilityResult result;
  std::vector<CVector> v = init_v;
  MmseStep step = mmse_step(objective, v);
  require_finite(step.sum_rate, "sum-rate", 0);
  result.objective_trace.push_back(step.sum_rate);

  const int n = dims.tx_antennas();
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    std::vector<double> weight(dims.num_users());
    for (int me = 0; me < dims.num_users(); ++me) weight[me] = 1.0 / step.mse[me];
    for (int g = 0; g < dims.cells(); ++g) {
      CMatrix a = CMatrix::Zero(n, n);
      for (int w = 0; w < dims.num_users(); ++w) {
        const CVector hu = objective.at(g, w).adjoint() * step.u[w];
        a.noalias() += weight[w] * hu * hu.adjoint();
      }
      CMatrix b(n, dims.users_in(g));
      for (int k = 0; k < dims.users_in(g); ++k) {
        const int me = dims.flat(g, k);
        b.col(k) = weight[me] * (objective.at(g, me).adjoint() * step.u[me]);
      }
      const CMatrix vg = constrained_precoder(a, b, channels.p_max);
      for (int k = 0; k < dims.users_in(g); ++k) v[dims.flat(g, k)] = vg.col(k);
    }
    step = mmse_step(objective, v);
    require_finite(step.sum_rate, "sum-rate", iter);
    const double prev = result.objective_trace.back();
    result.objective_trace.push_back(step.sum_rate);
    result.iterations = iter;
    if (std::abs(step.sum_rate - prev) <= options.tol * std::max(std::abs(prev), 1e-12)) break;
  }

  result.beamformers.v = v;
  result.beamformers.u = mmse_receivers(channels, v);
  result.per_user_sinr = all_sinr(channels, result.beamformers);
  for (double s : result.per_user_sinr) result.per_user_rate.push_back(rate_with_gap(s, options.gap_linear));
  return result;
}

std::vector<CVector> effective_channels(const ChannelSet& channels, const std::vector<CVector>& u) {
  const auto& dims = channels.dims;
  const int users = dims.num_users();
  std::vector<CVector> out(static_cast<std::size_t>(dims.cells()) * users);
  for (int i = 0; i < dims.cells(); ++i)
    for (int w = 0; w < users; ++w)
      out[static_cast<std::size_t>(i) * users + w] = channels.at(i, w).adjoint() * u.at(w);
  return out;
}

double interference_free_bound(const ChannelSet& channels, const std::vector<CVector>& u) {
  const auto& dims = channels.dims;
  double bound = std::numeric_limits<double>::infinity();
  for (const auto& user : dims.all_users()) {
    const int me = dims.flat(user);
    const double gain = (channels.at(user.cell, me).adjoint() * u.at(me)).squaredNorm();
    bound = std::min(bound, channels.p_max * gain / channels.noise_plus_ooc(me));
  }
  return bound;
}

namespace {

// Uplink dual of min sum_g mu_g P_g subject to SINR >= target. Dual powers
// grow monotonically from any lower start to the fixed point, so every
// iterate gives the lower bound sum lambda n <= f(mu).
class DualSolver {
 public:
  DualSolver(const ChannelSet& channels, const std::vector<CVector>& u, double target,
             const MaxMinOptions& options)
      : channels_(channels),
        dims_(channels.dims),
        heff_(effective_channels(channels, u)),
        target_(target),
        options_(options),
        users_(dims_.num_users()),
        n_(dims_.tx_antennas()) {
    noise_.resize(users_);
    for (int w = 0; w < users_; ++w) noise_[w] = channels.noise_plus_ooc(w);
    serving_.resize(users_);
    for (int w = 0; w < users_; ++w) serving_[w] = dims_.user(w).cell;
  }

  struct Evaluation {
    bool converged = false;
    bool certified_infeasible = false;
    double dual_value = 0.0;  // sum lambda n
    std::vector<double> lambda;
    std::vector<CVector> v;       // precoders meeting the target with equality
    std::vector<double> bs_power;
    double weighted_power = 0.0;  // sum mu_g P_g
  };

  Evaluation evaluate(const std::vector<double>& mu, std::vector<double> lambda_start) const {
    Evaluation ev;
    std::vector<double> lambda = lambda_start.empty() ? std::vector<double>(users_, 0.0)
                                                      : std::move(lambda_start);
    std::vector<Eigen::LLT<CMatrix>> chol(dims_.cells());
    const double budget = channels_.p_max;
    std::vector<CVector> dir(users_);
    // Lower phase: lambda <- I(lambda) increases monotonically towards the
    // fixed point. Upper phase: Newton steps on the tangent of the concave
    // I(.), which decrease monotonically once a positive iterate exists.
    bool upper = false;
    for (int it = 0; it < options_.fixed_point_max_iter; ++it) {
      factor(mu, lambda, chol);
      double dual = 0.0;
      double change = 0.0;
      std::vector<double> next(users_);
      for (int w = 0; w < users_; ++w) {
        const CVector& h = direct(w);
        dir[w] = chol[serving_[w]].solve(h);
        const double s = h.dot(dir[w]).real();
        // h^H Sigma_{-w}^{-1} h recovered from the full-covariance quadratic.
        const double a = s / std::max(1.0 - lambda[w] * s, 1e-300);
        next[w] = a > 0.0 ? target_ / a : std::numeric_limits<double>::infinity();
      }
      if (!upper) {
        for (int w = 0; w < users_; ++w) {
          change = std::max(change, std::abs(next[w] - lambda[w]) / std::max(next[w], 1e-300));
          dual += next[w] * noise_[w];
        }
        ev.dual_value = dual;
        if (!(dual <= budget)) {
          ev.certified_infeasible = true;
          ev.lambda = std::move(next);
          return ev;
        }
      }
      std::vector<double> newton;
      if (newton_step(mu, dir, newton)) {
        double gap = 0.0;
        double total = 0.0;
        for (int w = 0; w < users_; ++w) {
          gap = std::max(gap, std::abs(newton[w] - (upper ? lambda[w] : next[w])) /
                                  std::max(newton[w], 1e-300));
          total += newton[w] * noise_[w];
        }
        upper = true;
        lambda = std::move(newton);
        ev.dual_value = total;
        if (gap < 1e-12) {
          ev.converged = true;
          break;
        }
        continue;
      }
      if (upper) break;  // lost positivity in the upper phase: rounding floor
      lambda = std::move(next);
      if (change < 1e-12) {
        ev.converged = true;
        break;
      }
    }
    if (upper) ev.converged = true;
    ev.lambda = lambda;
    if (!ev.converged) return ev;
    if (upper && !(ev.dual_value <= budget * (1.0 + 1e-9))) {
      ev.certified_infeasible = true;
      return ev;
    }

    factor(mu, lambda, chol);
    for (int w = 0; w < users_; ++w) {
      dir[w] = chol[serving_[w]].solve(direct(w));
      dir[w].normalize();
    }
    // Downlink powers meeting every SINR target with equality.
    Eigen::MatrixXd a(users_, users_);
    for (int w = 0; w < users_; ++w)
      for (int x = 0; x < users_; ++x) {
        const double gain = std::norm(link(serving_[x], w).dot(dir[x]));
        a(w, x) = w == x ? gain / target_ : -gain;
      }
    const Eigen::VectorXd noise = Eigen::Map<const Eigen::VectorXd>(noise_.data(), users_);
    const Eigen::VectorXd p = a.partialPivLu().solve(noise);
    if (!p.allFinite() || p.minCoeff() < 0.0) {
      ev.converged = false;
      return ev;
    }
    ev.v.resize(users_);
    ev.bs_power.assign(dims_.cells(), 0.0);
    for (int w = 0; w < users_; ++w) {
      ev.v[w] = std::sqrt(p(w)) * dir[w];
      ev.bs_power[serving_[w]] += p(w);
    }
    for (int g = 0; g < dims_.cells(); ++g) ev.weighted_power += mu[g] * ev.bs_power[g];
    return ev;
  }

  int cells() const { return dims_.cells(); }

 private:
  const CVector& link(int bs, int user) const {
    return heff_[static_cast<std::size_t>(bs) * users_ + user];
  }
  const CVector& direct(int user) const { return link(serving_[user], user); }

  // Uplink powers meeting every target with equality for the receive
  // directions `dir`. False when no positive solution exists.
  bool newton_step(const std::vector<double>& mu, const std::vector<CVector>& dir,
                   std::vector<double>& out) const {
    Eigen::MatrixXd a(users_, users_);
    Eigen::VectorXd b(users_);
    for (int w = 0; w < users_; ++w) {
      const int g = serving_[w];
      const double own = std::norm(dir[w].dot(direct(w)));
      if (!(own > 0.0)) return false;
      for (int x = 0; x < users_; ++x)
        a(w, x) = x == w ? 1.0 : -target_ * std::norm(dir[w].dot(link(g, x))) / own;
      b(w) = target_ * mu[g] * dir[w].squaredNorm() / own;
    }
    const Eigen::VectorXd p = a.partialPivLu().solve(b);
    if (!p.allFinite() || !(p.minCoeff() > 0.0)) return false;
    out.assign(p.data(), p.data() + users_);
    return true;
  }

  void factor(const std::vector<double>& mu, const std::vector<double>& lambda,
              std::vector<Eigen::LLT<CMatrix>>& chol) const {
    for (int g = 0; g < dims_.cells(); ++g) {
      CMatrix sigma = mu[g] * CMatrix::Identity(n_, n_);
      for (int w = 0; w < users_; ++w) {
        if (lambda[w] == 0.0) continue;
        const CVector& h = link(g, w);
        sigma.noalias() += lambda[w] * h * h.adjoint();
      }
      chol[g].compute(sigma);
    }
  }

  const ChannelSet& channels_;
  const ClusterDims& dims_;
  std::vector<CVector> heff_;
  double target_;
  MaxMinOptions options_;
  int users_;
  int n_;
  std::vector<double> noise_;
  std::vector<int> serving_;
};

}  // namespace

namespace {

// Feasibility test with the per-BS weights carried in and out of the call.
SinrFeasibility feasible_from(const ChannelSet& channels, const std::vector<CVector>& u,
                              double target, const MaxMinOptions& options,
                              std::vector<double>& mu) {
  SinrFeasibility out;
  const auto& dims = channels.dims;
  if (target <= 0.0) {
    out.feasible = true;
    out.v.assign(dims.num_users(), CVector::Zero(dims.tx_antennas()));
    out.bs_power.assign(dims.cells(), 0.0);
    return out;
  }
  const DualSolver solver(channels, u, target, options);
  const int cells = solver.cells();
  const double budget = channels.p_max;
  constexpr double kMuFloor = 1e-9;

  if (static_cast<int>(mu.size()) != cells) mu.assign(cells, 1.0 / cells);
  auto ev = solver.evaluate(mu, {});
  double step = 1.0;
  for (int it = 0; it < options.dual_max_iter; ++it) {
    if (ev.certified_infeasible) {
      out.certified = true;
      return out;
    }
    if (!ev.converged) return out;
    const double worst = *std::max_element(ev.bs_power.begin(), ev.bs_power.end());
    if (worst <= budget * (1.0 + 1e-9)) {
      out.feasible = true;
      out.v = std::move(ev.v);
      out.bs_power = std::move(ev.bs_power);
      return out;
    }
    // f(mu) <= min_V max_g P_g <= worst; a closed gap with worst > budget
    // leaves the target within rounding of the boundary.
    const double f = ev.weighted_power;
    if (worst - f <= 1e-9 * worst) return out;

    // Exponentiated-gradient ascent on the concave f over the simplex.
    bool improved = false;
    while (step > 1e-8) {
      std::vector<double> trial(cells);
      double total = 0.0;
      for (int g = 0; g < cells; ++g) {
        trial[g] = std::max(mu[g] * std::exp(step * (ev.bs_power[g] / f - 1.0)), kMuFloor);
        total += trial[g];
      }
      double ratio = std::numeric_limits<double>::infinity();
      for (int g = 0; g < cells; ++g) {
        trial[g] /= total;
        ratio = std::min(ratio, trial[g] / mu[g]);
      }
      std::vector<double> warm = ev.lambda;
      for (double& l : warm) l *= ratio * (1.0 - 1e-12);
      auto next = solver.evaluate(trial, std::move(warm));
      if (next.certified_infeasible || (next.converged && next.weighted_power >= f * (1.0 - 1e-13))) {
        mu = std::move(trial);
        ev = std::move(next);
        step = std::min(step * 1.5, 64.0);
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) return out;
  }
  return out;
}

}  // namespace

SinrFeasibility sinr_target_feasible(const ChannelSet& channels, const std::vector<CVector>& u,
                                     double target, const MaxMinOptions& options) {
  std::vector<double> mu;
  return feasible_from(channels, u, target, options, mu);
}

MaxMinFixedResult maxmin_fixed_rx(const ChannelSet& channels, const std::vector<CVector>& u,
                                  double t_hi, const MaxMinOptions& options) {
  const auto& dims = channels.dims;
  MaxMinFixedResult result;
  result.t_hi = t_hi > 0.0 ? t_hi : interference_free_bound(channels, u);
  result.v.assign(dims.num_users(), CVector::Zero(dims.tx_antennas()));
  if (!(result.t_hi > 0.0)) return result;
  if (!std::isfinite(result.t_hi)) throw NumericalError("non-finite bisection upper limit");

  double lo = 0.0;
  double hi = result.t_hi;
  std::vector<double> mu;
  auto top = feasible_from(channels, u, hi, options, mu);
  ++result.bisection_steps;
  if (top.feasible) {
    lo = hi;
    result.v = std::move(top.v);
  }
  while (hi - lo > options.eps * lo && hi - lo > 1e-12 * result.t_hi) {
    const double mid = lo > 0.0 && hi > 4.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    auto trial = feasible_from(channels, u, mid, options, mu);
    ++result.bisection_steps;
    if (trial.feasible) {
      lo = mid;
      result.v = std::move(trial.v);
    } else {
      hi = mid;
    }
  }
  result.t = lo;

  // Post-hoc verification of the witness.
  BeamformerSet bf{result.v, u};
  const auto s = all_sinr(channels, bf);
  const double worst = s.empty() ? 0.0 : *std::min_element(s.begin(), s.end());
  if (worst < result.t * (1.0 - 10.0 * options.eps))
    throw NumericalError("max-min witness misses its SINR target at t=" + std::to_string(result.t));
  for (int g = 0; g < dims.cells(); ++g)
    if (bf.bs_power(dims, g) > channels.p_max * (1.0 + 1e-6))
      throw NumericalError("max-min witness exceeds the BS power budget at t=" +
                           std::to_string(result.t));
  return result;
}

UtilityResult maxmin_alternate(const ChannelSet& channels, const BeamformerSet& init,
                               const MaxMinOptions& options) {
  UtilityResult result;
  auto min_of = [](const std::vector<double>& x) { return *std::min_element(x.begin(), x.end()); };

  BeamformerSet best{init.v, mmse_receivers(channels, init.v)};
  std::vector<double> best_sinr = all_sinr(channels, best);
  result.objective_trace.push_back(std::log2(1.0 + min_of(best_sinr)));

  std::vector<CVector> u = init.u;
  for (auto& x : u) x.normalize();
  for (int it = 1; it <= options.outer_iters; ++it) {
    const auto fixed = maxmin_fixed_rx(channels, u, 0.0, options);
    BeamformerSet current{fixed.v, mmse_receivers(channels, fixed.v)};
    const auto current_sinr = all_sinr(channels, current);
    result.objective_trace.push_back(std::log2(1.0 + min_of(current_sinr)));
    result.iterations = it;
    if (min_of(current_sinr) > min_of(best_sinr)) {
      best = current;
      best_sinr = current_sinr;
    }
    u = current.u;
  }

  result.beamformers = std::move(best);
  result.per_user_sinr = std::move(best_sinr);
  for (double s : result.per_user_sinr) result.per_user_rate.push_back(rate_with_gap(s, options.gap_linear));
  return result;
}

}  // namespace ianum
