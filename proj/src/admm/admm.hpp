// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

// Alternating penalty solver for the joint SIC-assignment/beamforming
// problem: the binary assignment matrix is relaxed through its complement
// (beta = 1 - alpha with alpha .* beta = 0), the augmented-Lagrangian
// penalties keep the pair consistent, and two convexified subproblems are
// solved in alternation — {alpha, W, S, I, r} then {beta, I, r} — followed
// by scaled dual ascent.  Multi-start, with rounding and an SCA polish at
// the end of each start.

#include <cstdint>
#include <string>
#include <vector>

#include "convex/builders.hpp"
#include "model/channel.hpp"
#include "model/config.hpp"
#include "model/rates.hpp"
#include "model/sic.hpp"

namespace cfnoma::admm {

struct AdmmState {
  convex::AdmmPoint point;
  convex::AdmmDuals duals;
  int iteration = 0;
};

/// One iteration of one start; `status` is "ok" or names the failing block.
struct AdmmTraceRow {
  int start = 0;
  int iteration = 0;
  double objective = 0.0;      ///< sum of the diagonal rate variables
  double residual_sum = 0.0;   ///< max |beta + alpha - 1|
  double residual_prod = 0.0;  ///< max |alpha .* beta|
  std::string status;
  double ms = 0.0;
};

struct AdmmResult {
  SicMatrix alpha = SicMatrix::identity(1);  ///< overwritten by every run
  BeamMatrix w;
  RateReport report;
  std::vector<AdmmTraceRow> trace;  ///< all starts, concatenated in order
  bool feasible = false;            ///< best start passed all feasibility checks
  bool sdma_fallback = false;       ///< no start survived rounding; identity used
  int best_start = -1;
};

/// Deterministic initial state: beams complex-Gaussian scaled to exactly the
/// power budget, assignment entries uniform in [0, 0.5] (so the exclusion
/// rows hold), complement consistent, auxiliaries evaluated at that point,
/// duals zero.
AdmmState init_state(const SystemConfig& config, const ChannelMatrix& h,
                     std::uint64_t seed);

/// Objective at the current auxiliaries: sum of diagonal rates.
double objective_value(const AdmmState& state);

double residual_sum(const AdmmState& state);
double residual_prod(const AdmmState& state);

/// Scaled dual ascent for both couplings, applied in place:
/// lambda += (beta + alpha - 1)/rho, lambda_tilde += (alpha .* beta)/rho.
void dual_ascent(AdmmState& state);

/// One alternation: assignment/beam block, complement block, dual ascent.
/// Returns false (state unchanged past the failing block) when a subproblem
/// does not solve to optimality; `row`, if given, is always filled.
bool admm_iterate(AdmmState& state, const SystemConfig& config,
                  const ChannelMatrix& h, AdmmTraceRow* row = nullptr);

/// Threshold at 0.5, resolve pairwise conflicts toward the larger entry,
/// force the diagonal.
SicMatrix round_alpha(const Eigen::MatrixXd& alpha);

/// Full multi-start run per the configuration (n_ini starts, eps_admm
/// squared-difference stop, t_admm_max cap, 3-pass polish after rounding).
AdmmResult run_admm_sca(const SystemConfig& config, const ChannelMatrix& h);

/// CSV with the fixed header: iteration,objective,residual_sum,residual_prod,status,ms
std::string trace_csv(const std::vector<AdmmTraceRow>& rows);

}  // namespace cfnoma::admm
