// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#include "model/rates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfnoma {

namespace {
constexpr double kFeasSlack = 1e-9;

void check_shapes(const SicMatrix& alpha, const BeamMatrix& w, const ChannelMatrix& h) {
  if (alpha.num_users() != h.num_users() || w.cols() != h.num_users() ||
      w.rows() != h.num_antennas())
    throw std::invalid_argument("rates: inconsistent alpha/W/H shapes");
}
}  // namespace

double transmit_power(const BeamMatrix& w) { return w.squaredNorm(); }

bool power_feasible(const BeamMatrix& w, const SystemConfig& config) {
  return transmit_power(w) <= config.p_max + kFeasSlack;
}

std::complex<double> beam_gain(const ChannelMatrix& h, int i, const BeamMatrix& w, int u) {
  return (h.rows().row(i).conjugate() * w.col(u)).value();
}

Eigen::MatrixXd cross_gains(const BeamMatrix& w, const ChannelMatrix& h) {
  Eigen::MatrixXd g(h.num_users(), w.cols());
  for (int i = 0; i < h.num_users(); ++i)
    for (int u = 0; u < w.cols(); ++u)
      g(i, u) = std::norm(beam_gain(h, i, w, u));
  return g;
}

Eigen::VectorXd interference_own(const SicMatrix& alpha, const BeamMatrix& w,
                                 const ChannelMatrix& h, double sigma2) {
  check_shapes(alpha, w, h);
  const int k_users = h.num_users();
  const Eigen::MatrixXd g = cross_gains(w, h);
  Eigen::VectorXd out(k_users);
  for (int k = 0; k < k_users; ++k) {
    double acc = sigma2;
    for (int u = 0; u < k_users; ++u)
      if (u != k && !alpha.decodes(k, u)) acc += g(k, u);
    out(k) = acc;
  }
  return out;
}

double interference_decode(const SicMatrix& alpha, const BeamMatrix& w,
                           const ChannelMatrix& h, double sigma2, int i, int k) {
  check_shapes(alpha, w, h);
  if (i == k) throw std::invalid_argument("rates: own-signal interference is a separate query");
  const int k_users = h.num_users();
  double acc = sigma2;
  for (int u = 0; u < k_users; ++u) {
    if (u == k) continue;
    const double gain = std::norm(beam_gain(h, i, w, u));
    const int a_iu = alpha.decodes(i, u) ? 1 : 0;
    if (u < k) {
      // Weaker-than-k stream: cancelled only if i decoded it and k will
      // have cancelled it too by the time k's stream is detected.
      const int a_uk = alpha.decodes(u, k) ? 1 : 0;
      acc += static_cast<double>(1 - a_iu + a_iu * a_uk) * gain;
    } else {
      // Stronger-than-k stream: cancelled only if both i and k decode it.
      const int a_ku = alpha.decodes(k, u) ? 1 : 0;
      acc += static_cast<double>(1 - a_iu * a_ku) * gain;
    }
  }
  return acc;
}

double rate_own(const SicMatrix& alpha, const BeamMatrix& w, const ChannelMatrix& h,
                double sigma2, int k) {
  const double signal = std::norm(beam_gain(h, k, w, k));
  const double intf = interference_own(alpha, w, h, sigma2)(k);
  return std::log2(1.0 + signal / intf);
}

double rate_decode(const SicMatrix& alpha, const BeamMatrix& w, const ChannelMatrix& h,
                   double sigma2, int i, int k) {
  const double signal = std::norm(beam_gain(h, i, w, k));
  const double intf = interference_decode(alpha, w, h, sigma2, i, k);
  return std::log2(1.0 + signal / intf);
}

RateReport rate_report(const SicMatrix& alpha, const BeamMatrix& w,
                       const ChannelMatrix& h, const SystemConfig& config) {
  check_shapes(alpha, w, h);
  const int k_users = h.num_users();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  RateReport rep;
  rep.rate_own.resize(k_users);
  rep.rate_decode = Eigen::MatrixXd::Constant(k_users, k_users, nan);
  rep.effective_rate.resize(k_users);
  rep.sic_feasible = true;
  rep.min_rate_feasible = true;

  for (int k = 0; k < k_users; ++k)
    rep.rate_own(k) = rate_own(alpha, w, h, config.sigma2, k);

  for (int k = 0; k < k_users; ++k) {
    double eff = rep.rate_own(k);
    for (int i = 0; i < k_users; ++i) {
      if (i == k || !alpha.decodes(i, k)) continue;
      const double rd = rate_decode(alpha, w, h, config.sigma2, i, k);
      rep.rate_decode(i, k) = rd;
      eff = std::min(eff, rd);
      if (rd < rep.rate_own(k) - kFeasSlack) rep.sic_feasible = false;
    }
    rep.effective_rate(k) = eff;
    if (rep.rate_own(k) < config.r_min(k) - kFeasSlack) rep.min_rate_feasible = false;
  }
  rep.sum_rate = rep.rate_own.sum();
  return rep;
}

double baseline_rate_formula(BaselineScheme scheme, const BeamMatrix& w,
                             const ChannelMatrix& h, double sigma2,
                             const std::vector<std::vector<int>>* clusters) {
  const int k_users = h.num_users();
  const Eigen::MatrixXd g = cross_gains(w, h);

  std::vector<int> cluster_of;
  if (scheme == BaselineScheme::CbNoma) {
    if (clusters == nullptr)
      throw std::invalid_argument("rates: cluster-based scheme needs a partition");
    cluster_of.assign(static_cast<std::size_t>(k_users), -1);
    for (std::size_t c = 0; c < clusters->size(); ++c) {
      if ((*clusters)[c].empty())
        throw std::invalid_argument("rates: empty cluster");
      for (int u : (*clusters)[c]) {
        if (u < 0 || u >= k_users || cluster_of[static_cast<std::size_t>(u)] != -1)
          throw std::invalid_argument("rates: clusters must partition the user set");
        cluster_of[static_cast<std::size_t>(u)] = static_cast<int>(c);
      }
    }
    for (int u = 0; u < k_users; ++u)
      if (cluster_of[static_cast<std::size_t>(u)] == -1)
        throw std::invalid_argument("rates: clusters must cover every user");
  }

  double sum = 0.0;
  for (int k = 0; k < k_users; ++k) {
    double denom = sigma2;
    for (int u = 0; u < k_users; ++u) {
      if (u == k) continue;
      switch (scheme) {
        case BaselineScheme::Sdma:
          denom += g(k, u);
          break;
        case BaselineScheme::BbNoma:
          // Global chain in ascending gain order: only stronger users'
          // streams remain after cancellation.
          if (u > k) denom += g(k, u);
          break;
        case BaselineScheme::CbNoma:
          // In-cluster chain: stronger members of the own cluster remain;
          // other clusters interfere in full.
          if (cluster_of[static_cast<std::size_t>(u)] == cluster_of[static_cast<std::size_t>(k)]) {
            if (u > k) denom += g(k, u);
          } else {
            denom += g(k, u);
          }
          break;
      }
    }
    sum += std::log2(1.0 + g(k, k) / denom);
  }
  return sum;
}

}  // namespace cfnoma
