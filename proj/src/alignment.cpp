#include "ianum/alignment.hpp"

#include "ianum/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ianum {

CMatrix BeamformerSet::cell_precoder(const ClusterDims& dims, int cell) const {
  CMatrix out(dims.tx_antennas(), dims.users_in(cell));
  for (int k = 0; k < dims.users_in(cell); ++k) out.col(k) = v.at(dims.flat(cell, k));
  return out;
}

void BeamformerSet::set_cell_precoder(const ClusterDims& dims, int cell, const CMatrix& columns) {
  for (int k = 0; k < dims.users_in(cell); ++k) v.at(dims.flat(cell, k)) = columns.col(k);
}

double BeamformerSet::bs_power(const ClusterDims& dims, int cell) const {
  double p = 0.0;
  for (int k = 0; k < dims.users_in(cell); ++k) p += v.at(dims.flat(cell, k)).squaredNorm();
  return p;
}

int compute_q(int rx_antennas, int tx_antennas, int users_per_cell) {
  if (users_per_cell < 1) throw ConfigError("K must be >= 1");
  return std::max(0, (rx_antennas + tx_antennas - 1) / users_per_cell - 1);
}

double interference_power(const ChannelSet& channels, int bs, UserId user) {
  const cd s = channels.at(bs, user).sum();
  return channels.dims.users_in(bs) * std::norm(s);
}

AlignmentSet select_interferers(const ChannelSet& channels, const ClusterDims& dims, int q) {
  if (q < 0 || q > dims.cells() - 1)
    throw ConfigError("q must lie in [0, G-1], got " + std::to_string(q));
  if (q == 0) return {};

  struct Candidate {
    double power;
    AlignmentPair pair;
  };
  std::map<int, std::vector<Candidate>> columns;
  for (const auto& user : dims.all_users()) {
    std::vector<Candidate> row;
    for (int i = 0; i < dims.cells(); ++i)
      if (i != user.cell) row.push_back({interference_power(channels, i, user), {i, user}});
    std::stable_sort(row.begin(), row.end(), [](const Candidate& a, const Candidate& b) {
      if (a.power != b.power) return a.power > b.power;
      return a.pair.bs < b.pair.bs;
    });
    for (int j = 0; j < q && j < static_cast<int>(row.size()); ++j)
      columns[row[j].pair.bs].push_back(row[j]);
  }

  AlignmentSet out;
  for (auto& [bs, column] : columns) {
    const std::size_t cap = static_cast<std::size_t>(dims.users_in(bs)) * q;
    std::stable_sort(column.begin(), column.end(), [](const Candidate& a, const Candidate& b) {
      if (a.power != b.power) return a.power > b.power;
      return a.pair.user < b.pair.user;
    });
    if (column.size() > cap) column.resize(cap);
    for (const auto& c : column) out.insert(c.pair);
  }
  return out;
}

double leakage(const ChannelSet& channels, const BeamformerSet& beamformers,
               const AlignmentSet& set) {
  const auto& dims = channels.dims;
  double total = 0.0;
  for (const auto& p : set) {
    const CVector& u = beamformers.u.at(dims.flat(p.user));
    const CMatrix& h = channels.at(p.bs, p.user);
    const CVector uh = h.adjoint() * u;  // (u^H H)^H
    for (int j = 0; j < dims.users_in(p.bs); ++j) {
      const CVector& v = beamformers.v.at(dims.flat(p.bs, j));
      const double n = v.norm();
      if (n == 0.0) continue;
      total += std::norm(uh.dot(v)) / (n * n);
    }
  }
  return total;
}

double IaResult::relative_leakage() const {
  const double first = leakage_trace.front();
  return first > 0.0 ? leakage_trace.back() / first : 0.0;
}

namespace {

void check_finite(const ChannelSet& channels) {
  for (const auto& h : channels.h)
    if (!h.allFinite()) throw NumericalError("non-finite channel entry");
}

}  // namespace

BeamformerSet ia_initialization(const ChannelSet& channels, std::uint64_t seed) {
  const auto& dims = channels.dims;
  Rng rng(seed);
  BeamformerSet bf;
  bf.v.resize(dims.num_users());
  bf.u.resize(dims.num_users());
  for (int g = 0; g < dims.cells(); ++g) {
    const CMatrix gauss = complex_normal_matrix(rng, dims.tx_antennas(), dims.users_in(g));
    Eigen::HouseholderQR<CMatrix> qr(gauss);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(dims.tx_antennas(), dims.users_in(g));
    bf.set_cell_precoder(dims, g, q);
  }
  for (const auto& user : dims.all_users()) {
    const CMatrix& direct = channels.at(user.cell, user);
    Eigen::JacobiSVD<CMatrix> svd(direct, Eigen::ComputeThinU);
    bf.u[dims.flat(user)] = svd.matrixU().col(0);
  }
  return bf;
}

IaResult solve_partial_ia(const ChannelSet& raw_channels, const AlignmentSet& set,
                          const IaOptions& options, std::uint64_t seed) {
  return solve_partial_ia(raw_channels, set, options, ia_initialization(raw_channels, seed));
}

IaResult solve_partial_ia(const ChannelSet& raw_channels, const AlignmentSet& set,
                          const IaOptions& options, const BeamformerSet& start) {
  check_finite(raw_channels);
  const auto& dims = raw_channels.dims;
  set.validate(dims);
  ChannelSet scaled;
  if (options.normalize_links) {
    scaled = raw_channels;
    for (const auto& p : set) {
      CMatrix& h = scaled.at(p.bs, p.user);
      const double n = h.norm();
      if (n > 0.0) h /= n;
    }
  }
  const ChannelSet& channels = options.normalize_links ? scaled : raw_channels;
  IaResult result;
  if (start.v.size() != static_cast<std::size_t>(dims.num_users()) ||
      start.u.size() != static_cast<std::size_t>(dims.num_users()))
    throw ConfigError("starting beamformers do not match the cluster dimensions");
  result.beamformers = start;
  for (auto& v : result.beamformers.v) v.normalize();
  for (auto& u : result.beamformers.u) u.normalize();
  result.leakage_trace.push_back(leakage(channels, result.beamformers, set));
  if (set.empty()) {
    result.converged = true;
    return result;
  }

  std::map<UserId, std::vector<int>> bss_of_user;
  std::map<int, std::vector<UserId>> users_of_bs;
  for (const auto& p : set) {
    bss_of_user[p.user].push_back(p.bs);
    users_of_bs[p.bs].push_back(p.user);
  }

  const int m = dims.rx_antennas();
  const int n = dims.tx_antennas();
  auto& bf = result.beamformers;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    // Receivers: least-interference direction given all current precoders.
    for (const auto& [user, bss] : bss_of_user) {
      CMatrix q = CMatrix::Zero(m, m);
      for (int i : bss) {
        const CMatrix hv = channels.at(i, user) * bf.cell_precoder(dims, i);
        q.noalias() += hv * hv.adjoint();
      }
      eig.compute(q);
      bf.u[dims.flat(user)] = eig.eigenvectors().col(0);
    }
    // Precoders: K_i least-leaking orthonormal directions given the receivers.
    for (const auto& [bs, users] : users_of_bs) {
      CMatrix q = CMatrix::Zero(n, n);
      for (const auto& user : users) {
        const CVector hu = channels.at(bs, user).adjoint() * bf.u[dims.flat(user)];
        q.noalias() += hu * hu.adjoint();
      }
      eig.compute(q);
      bf.set_cell_precoder(dims, bs, eig.eigenvectors().leftCols(dims.users_in(bs)));
    }

    const double prev = result.leakage_trace.back();
    const double now = leakage(channels, bf, set);
    result.leakage_trace.push_back(now);
    result.iterations = iter;
    if (!std::isfinite(now)) throw NumericalError("non-finite leakage at iteration " + std::to_string(iter));
    if (now <= 1e-24 * result.leakage_trace.front() ||
        (prev > 0.0 && std::abs(prev - now) / prev < options.tol)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

BeamformerSet cancel_intracell(const ChannelSet& channels, const BeamformerSet& beamformers) {
  const auto& dims = channels.dims;
  BeamformerSet out = beamformers;
  for (int g = 0; g < dims.cells(); ++g) {
    const int k = dims.users_in(g);
    const CMatrix vg = beamformers.cell_precoder(dims, g);
    CMatrix a(k, k);
    for (int r = 0; r < k; ++r) {
      const UserId user{g, r};
      const CVector& u = beamformers.u.at(dims.flat(user));
      a.row(r) = u.adjoint() * channels.at(g, user) * vg;
    }
    Eigen::JacobiSVD<CMatrix> svd(a);
    const auto& sv = svd.singularValues();
    const double cond = sv(k - 1) > 0.0 ? sv(0) / sv(k - 1) : INFINITY;
    if (!(cond <= 1e12))
      throw DegenerateDropError("intra-cell effective channel of cell " + std::to_string(g + 1) +
                                " is ill-conditioned (cond=" + std::to_string(cond) + ")");
    CMatrix mixed = vg * a.partialPivLu().inverse();
    for (int c = 0; c < k; ++c) mixed.col(c).normalize();
    out.set_cell_precoder(dims, g, mixed);
  }
  return out;
}

double intracell_offdiag_ratio(const ChannelSet& channels, const BeamformerSet& beamformers) {
  const auto& dims = channels.dims;
  double worst = 0.0;
  for (int g = 0; g < dims.cells(); ++g) {
    for (int r = 0; r < dims.users_in(g); ++r) {
      const UserId user{g, r};
      const CVector& u = beamformers.u.at(dims.flat(user));
      const CMatrix& h = channels.at(g, user);
      const double diag = std::abs(u.dot(h * beamformers.v.at(dims.flat(user))));
      for (int j = 0; j < dims.users_in(g); ++j) {
        if (j == r) continue;
        const double off = std::abs(u.dot(h * beamformers.v.at(dims.flat(g, j))));
        worst = std::max(worst, diag > 0.0 ? off / diag : INFINITY);
      }
    }
  }
  return worst;
}

}  // namespace ianum
