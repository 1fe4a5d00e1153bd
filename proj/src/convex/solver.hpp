// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

#include <Eigen/Dense>

#include "convex/program.hpp"

namespace cfnoma::convex {

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

const char* to_string(SolveStatus s);

struct SolverOptions {
  int max_iters = 120;
  double tol_feas = 1e-8;    ///< primal/dual residual target (scaled inf-norm)
  double tol_gap = 1e-8;     ///< complementarity target
  double tol_accept = 1e-6;  ///< loosest residual still reported Optimal
  bool allow_phase1 = true;  ///< run a feasibility phase before declaring Infeasible
};

struct SolverResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;         ///< populated only when status == Optimal
  double objective = 0.0;    ///< maximize-sense objective at x
  double solve_time_ms = 0.0;
  int iterations = 0;
  double kkt_residual = kInf;
};

/// Primal-dual interior-point solve of a ConvexProgram (maximize sense).
/// Infeasible-start: the initial point only needs positive log arguments
/// (repaired automatically when possible).  Deterministic: identical
/// programs produce identical results.
SolverResult solve(const ConvexProgram& p, const SolverOptions& opts = {});

}  // namespace cfnoma::convex
