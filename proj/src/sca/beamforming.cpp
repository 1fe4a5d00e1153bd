// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#include "sca/beamforming.hpp"

#include <cmath>

#include "convex/solver.hpp"

namespace cfnoma::sca {

namespace {

double log2_(double v) { return std::log(v) / 0.6931471805599453; }

/// One convexified solve expanded at `w`.  Returns false when the solver did
/// not reach Optimal, leaving `w` untouched.
bool one_pass(const SicMatrix& alpha, const ChannelMatrix& h,
              const SystemConfig& config, BeamMatrix& w, double& objective) {
  const convex::BuiltProgram b = convex::build_beamforming_problem(
      alpha, h, config, expansion_at(alpha, w, h, config.sigma2));
  const convex::SolverResult res = convex::solve(b.program);
  if (res.status != convex::SolveStatus::Optimal) return false;
  w = b.extract_w(res.x);
  objective = res.objective;
  return true;
}

}  // namespace

convex::BeamExpansion expansion_at(const SicMatrix& alpha, const BeamMatrix& w,
                                   const ChannelMatrix& h, double sigma2) {
  const int K = h.num_users();
  convex::BeamExpansion e;
  e.w_bar = w;
  e.i_bar.resize(K, K);
  const Eigen::VectorXd own = interference_own(alpha, w, h, sigma2);
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) {
      e.i_bar(i, k) = i == k ? own(k) : interference_decode(alpha, w, h, sigma2, i, k);
    }
  }
  return e;
}

convex::AuxiliaryBlock exact_aux(const SicMatrix& alpha, const BeamMatrix& w,
                                 const ChannelMatrix& h, double sigma2) {
  const int K = h.num_users();
  convex::AuxiliaryBlock aux = convex::AuxiliaryBlock::floor(K, sigma2);
  const Eigen::MatrixXd gains = cross_gains(w, h);
  const convex::BeamExpansion e = expansion_at(alpha, w, h, sigma2);
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) {
      aux.S(i, k) = gains(i, k);
      aux.I(i, k) = e.i_bar(i, k);
      aux.r(i, k) = log2_(1.0 + aux.S(i, k) / aux.I(i, k));
    }
  }
  return aux;
}

ScaResult run_sca_beamforming(const SicMatrix& alpha, const ChannelMatrix& h,
                              const SystemConfig& config, const BeamMatrix& w_init,
                              int passes) {
  ScaResult out;
  out.w = w_init;
  for (int l = 0; l < passes; ++l) {
    double objective = 0.0;
    if (!one_pass(alpha, h, config, out.w, objective)) {
      if (l == 0) out.feasible = false;
      break;
    }
    out.objectives.push_back(objective);
    out.sum_rates.push_back(rate_report(alpha, out.w, h, config).sum_rate);
    ++out.passes;
  }
  out.aux = exact_aux(alpha, out.w, h, config.sigma2);
  return out;
}

ScaResult run_sca_to_convergence(const SicMatrix& alpha, const ChannelMatrix& h,
                                 const SystemConfig& config, const BeamMatrix& w_init,
                                 double eps, int max_passes) {
  ScaResult out;
  out.w = w_init;
  for (int l = 0; l < max_passes; ++l) {
    double objective = 0.0;
    if (!one_pass(alpha, h, config, out.w, objective)) {
      if (l == 0) out.feasible = false;
      break;
    }
    out.objectives.push_back(objective);
    out.sum_rates.push_back(rate_report(alpha, out.w, h, config).sum_rate);
    ++out.passes;
    // Squared-difference stop on the solve objective (the rate variables);
    // the exact sum rate can wobble while residual infeasibility burns off.
    if (l > 0) {
      const double d = out.objectives[l] - out.objectives[l - 1];
      if (d * d <= eps) break;
    }
  }
  out.aux = exact_aux(alpha, out.w, h, config.sigma2);
  return out;
}

}  // namespace cfnoma::sca
