// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

// Assembles the three convex subproblems of the decoding-structure
// optimizers as ConvexPrograms:
//   - a beamforming problem for a fixed binary SIC matrix (the inner step
//     of the matching optimizer and of the exhaustive oracle),
//   - the {alpha, W} and {beta} blocks of the alternating penalty method.
// Successive-convexification pieces (linearized squared gains, linearized
// log-interference, bilinear rate coupling) are exposed individually so
// they can be unit-tested in isolation.

#include <Eigen/Dense>

#include "convex/program.hpp"
#include "model/channel.hpp"
#include "model/config.hpp"
#include "model/rates.hpp"
#include "model/sic.hpp"

namespace cfnoma::convex {

/// Auxiliary variable block shared by the subproblems: effective-gain
/// lower bounds S, interference upper bounds I and rate lower bounds r,
/// each indexed (decoder i, stream k).
struct AuxiliaryBlock {
  Eigen::MatrixXd S;
  Eigen::MatrixXd I;
  Eigen::MatrixXd r;

  /// All-zero gains/rates with interference pinned at the noise floor.
  static AuxiliaryBlock floor(int num_users, double sigma2);
};

/// Convexified decode interference as a function of the relaxed complement
/// matrix beta = 1 - alpha (diagonal fixed at 0).  For i == k this is the
/// served-signal interference sum_{u != k} beta_ku |h_k^H w_u|^2 + sigma2;
/// for i != k each earlier stream u < k contributes with coefficient
/// max(beta_iu, 1 - beta_uk) and each later stream u > k with coefficient
/// max(beta_iu, beta_ku).  At binary beta this equals the exact
/// interference; it is jointly convex in beta.
double intf_beta(const Eigen::MatrixXd& beta, const BeamMatrix& w,
                 const ChannelMatrix& h, double sigma2, int i, int k);

/// Appends the linearized squared-gain row
///   S_ik + |h_i^H w_bar|^2 <= 2 Re(w_bar^H h_i h_i^H w_k)
/// (the first-order lower bound of |h_i^H w_k|^2 at w_bar).  w_k enters
/// through the paired real variable ids w_re/w_im (antenna-indexed).
void taylor_signal(ConvexProgram& p, const Eigen::VectorXcd& h_i,
                   const Eigen::VectorXcd& w_bar, const Eigen::VectorXi& w_re,
                   const Eigen::VectorXi& w_im, int s_var);

/// Appends the linearized rate row
///   r + log2(I_bar) + (I - I_bar)/(I_bar ln2) <= log2(I + S)
/// (upper-tangent on log2(I) at I_bar), as one log-epigraph constraint.
/// The signal term is either the variable s_var or, when s_var < 0, the
/// constant s_const (used when the S block is held fixed).
/// Throws std::invalid_argument if i_bar <= 0.
void taylor_log_intf(ConvexProgram& p, double i_bar, int r_var, int i_var,
                     int s_var, double s_const = 0.0);

/// Appends the convexified bilinear coupling  alpha * r_kk <= r_ik  via
/// the square split  alpha*r = ((alpha+r)^2 - (alpha-r)^2)/4  with the
/// concave half linearized at (alpha_bar, r_bar):
///   (alpha + r_kk)^2/4 <= r_ik - d^2/4 + (d/2)(alpha - r_kk),
/// where d = alpha_bar - r_bar.  `alpha` is passed as an affine expression
/// so the same row serves both the alpha-variable and alpha-fixed blocks.
void taylor_bilinear(ConvexProgram& p, double alpha_bar, double r_bar,
                     const AffineExpr& alpha, int r_kk_var, int r_ik_var);

/// A ConvexProgram plus the variable ids needed to read a solution back.
/// Matrices hold -1 where the block has no variable (fixed or absent).
struct BuiltProgram {
  ConvexProgram program;
  int num_antennas = 0;
  int num_users = 0;
  Eigen::MatrixXi w_re, w_im;   ///< M x K beam coordinate ids
  Eigen::MatrixXi gain;         ///< K x K squared-gain epigraph ids
  Eigen::MatrixXi s_id, i_id, r_id;
  Eigen::MatrixXi alpha_id;     ///< off-diagonal, alpha-block only
  Eigen::MatrixXi beta_id;      ///< off-diagonal, beta-block only
  int t1_id = -1, t2_id = -1;   ///< penalty epigraphs

  BeamMatrix extract_w(const Eigen::VectorXd& x) const;
  /// base with entries overwritten wherever ids hold a variable.
  static Eigen::MatrixXd merge(const Eigen::VectorXd& x,
                               const Eigen::MatrixXi& ids,
                               Eigen::MatrixXd base);
  AuxiliaryBlock extract_aux(const Eigen::VectorXd& x,
                             const AuxiliaryBlock& base) const;
};

/// Expansion point for the fixed-SIC beamforming problem.
struct BeamExpansion {
  BeamMatrix w_bar;
  Eigen::MatrixXd i_bar;  ///< K x K interference expansion points
};

/// Beamforming problem for a fixed binary SIC matrix: maximize sum_k r_kk
/// over {W, S, I, r} subject to power, linearized gains, linearized rates,
/// binary-coefficient interference rows and the decode-rate conditions
/// r_ik >= r_kk on matched pairs.  Only the diagonal plus matched (i, k)
/// pairs carry auxiliary variables.
BuiltProgram build_beamforming_problem(const SicMatrix& alpha,
                                       const ChannelMatrix& h,
                                       const SystemConfig& config,
                                       const BeamExpansion& expansion);

/// Current iterate of the alternating penalty method: expansion points and
/// the block values held fixed by the subproblem being built.
struct AdmmPoint {
  Eigen::MatrixXd alpha;  ///< diag = 1
  Eigen::MatrixXd beta;   ///< diag = 0
  BeamMatrix w;
  AuxiliaryBlock aux;
};

/// Scaled dual estimates for the two coupling constraints
/// beta + alpha - 1 = 0 and alpha .* beta = 0, plus the penalty weight.
struct AdmmDuals {
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd lambda_tilde;
  double rho = 1.0;
};

/// {alpha, W, S, I, r} block: beta fixed, alpha relaxed to [0,1] with the
/// mutual-exclusion rows, interference coefficients frozen at beta, rate
/// coupling through the bilinear convexification, and the two augmented
/// penalty terms as quadratic epigraphs entering the objective.
BuiltProgram build_alpha_w_problem(const AdmmPoint& state, const AdmmDuals& duals,
                                   const SystemConfig& config,
                                   const ChannelMatrix& h);

/// {beta, I, r} block: alpha, W, S fixed; the max() interference
/// coefficients become per-term epigraph variables, everything else is
/// affine or the alpha-fixed specializations of the rate rows.
BuiltProgram build_beta_problem(const AdmmPoint& state, const AdmmDuals& duals,
                                const SystemConfig& config,
                                const ChannelMatrix& h);

}  // namespace cfnoma::convex
