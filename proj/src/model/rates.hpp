// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

#include <Eigen/Dense>
#include <optional>

#include "model/channel.hpp"
#include "model/config.hpp"
#include "model/sic.hpp"

namespace cfnoma {

/// M x K beamforming matrix; column k serves user k.  Power feasibility is
/// checked against a config via power_feasible() (the matrix itself does
/// not know the budget).
using BeamMatrix = Eigen::MatrixXcd;

double transmit_power(const BeamMatrix& w);
bool power_feasible(const BeamMatrix& w, const SystemConfig& config);

/// h_i^H w_u — conjugate channel row of user i times beam column u.
std::complex<double> beam_gain(const ChannelMatrix& h, int i, const BeamMatrix& w, int u);

/// |h_i^H w_u|^2 for all (i, u); row = observing user, column = beam.
Eigen::MatrixXd cross_gains(const BeamMatrix& w, const ChannelMatrix& h);

/// Achievable-rate summary for one (alpha, W, H) triple.
struct RateReport {
  Eigen::VectorXd rate_own;       ///< rate of each user's own stream
  Eigen::MatrixXd rate_decode;    ///< (i,k): rate at which i decodes k; NaN when inactive
  Eigen::VectorXd effective_rate; ///< own rate capped by the decode bottlenecks
  double sum_rate = 0.0;
  bool sic_feasible = false;      ///< every active cross-decode sustains the target rate
  bool min_rate_feasible = false; ///< every own rate meets its configured floor
};

/// Residual interference at user k when decoding its own signal: active
/// cross-decodes are cancelled, everything else plus noise remains.
/// Returns one value per user.
Eigen::VectorXd interference_own(const SicMatrix& alpha, const BeamMatrix& w,
                                 const ChannelMatrix& h, double sigma2);

/// Residual interference at user i while decoding user k's signal (i != k).
/// Users are indexed in ascending gain order; signals of users weaker than k
/// are cancelled when i has decoded them, unless k itself would have kept
/// them (then they still interfere at k and are counted here as well);
/// signals stronger than k interfere unless both i and k decode them.
double interference_decode(const SicMatrix& alpha, const BeamMatrix& w,
                           const ChannelMatrix& h, double sigma2, int i, int k);

double rate_own(const SicMatrix& alpha, const BeamMatrix& w, const ChannelMatrix& h,
                double sigma2, int k);
double rate_decode(const SicMatrix& alpha, const BeamMatrix& w, const ChannelMatrix& h,
                   double sigma2, int i, int k);

/// Full rate/feasibility evaluation (1e-9 slack on the SIC and rate-floor
/// checks to absorb solver round-off).
RateReport rate_report(const SicMatrix& alpha, const BeamMatrix& w,
                       const ChannelMatrix& h, const SystemConfig& config);

/// Comparison schemes with closed-form sum rates.
enum class BaselineScheme { Sdma, BbNoma, CbNoma };

/// Direct closed-form sum rate of a comparison scheme, written from the
/// per-scheme SINR expressions (not via the decode-indicator machinery),
/// used to cross-check rate_report.  clusters: ascending-gain user index
/// sets, required for CbNoma.
double baseline_rate_formula(BaselineScheme scheme, const BeamMatrix& w,
                             const ChannelMatrix& h, double sigma2,
                             const std::vector<std::vector<int>>* clusters = nullptr);

}  // namespace cfnoma
