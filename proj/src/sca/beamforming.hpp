// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

// Successive convex approximation loop for the beamforming subproblem at a
// fixed binary SIC matrix: each pass rebuilds the convexified program at the
// previous iterate and solves it, so the achieved sum rate is non-decreasing
// across passes.  Used as the inner loop of the matching solver, the
// post-rounding polish of the ADMM solver, and the baseline schemes.

#include <vector>

#include "convex/builders.hpp"
#include "model/channel.hpp"
#include "model/config.hpp"
#include "model/rates.hpp"
#include "model/sic.hpp"

namespace cfnoma::sca {

struct ScaResult {
  BeamMatrix w;
  convex::AuxiliaryBlock aux;      ///< signal/interference/rate at `w`, exact
  std::vector<double> objectives;  ///< surrogate optimum per completed pass
  std::vector<double> sum_rates;   ///< exact sum rate after each completed pass
  int passes = 0;                  ///< solves that returned Optimal
  bool feasible = true;            ///< false iff the very first solve failed
};

/// Linearization point for the beamforming program: the beams themselves plus
/// the exact interference table they induce under `alpha`.
convex::BeamExpansion expansion_at(const SicMatrix& alpha, const BeamMatrix& w,
                                   const ChannelMatrix& h, double sigma2);

/// Exact auxiliary block at (alpha, w): S_ik = |h_i^H w_k|^2, I_ik the exact
/// interference-plus-noise, r_ik = log2(1 + S/I).
convex::AuxiliaryBlock exact_aux(const SicMatrix& alpha, const BeamMatrix& w,
                                 const ChannelMatrix& h, double sigma2);

/// Runs exactly `passes` convexified solves (an inexact solution by design;
/// the caller decides how much refinement it needs).  passes = 0 returns
/// `w_init` untouched.  If the first solve is not Optimal the result carries
/// `feasible = false` and `w_init`; a later failed pass just stops early and
/// keeps the last good iterate.
ScaResult run_sca_beamforming(const SicMatrix& alpha, const ChannelMatrix& h,
                              const SystemConfig& config, const BeamMatrix& w_init,
                              int passes);

/// Re-solves until the squared change of the exact sum rate drops to `eps`
/// or `max_passes` is hit.  Same failure conventions as above.
ScaResult run_sca_to_convergence(const SicMatrix& alpha, const ChannelMatrix& h,
                                 const SystemConfig& config, const BeamMatrix& w_init,
                                 double eps = 1e-5, int max_passes = 30);

}  // namespace cfnoma::sca
