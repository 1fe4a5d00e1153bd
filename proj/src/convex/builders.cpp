// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#include "convex/builders.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cfnoma::convex {

namespace {

constexpr double kLn2 = 0.6931471805599453;
/// Interference coefficients this small contribute nothing to a row.
constexpr double kCoefEps = 1e-12;

double log2_(double v) { return std::log(v) / kLn2; }

/// Re(h_i^H w) as an affine expression over the paired real beam ids.
AffineExpr re_gain_expr(const Eigen::VectorXcd& h_i, const Eigen::VectorXi& w_re,
                        const Eigen::VectorXi& w_im) {
  AffineExpr e;
  for (int m = 0; m < h_i.size(); ++m) {
    e.add(w_re(m), h_i(m).real());
    e.add(w_im(m), h_i(m).imag());
  }
  return e;
}

/// Im(h_i^H w) as an affine expression.
AffineExpr im_gain_expr(const Eigen::VectorXcd& h_i, const Eigen::VectorXi& w_re,
                        const Eigen::VectorXi& w_im) {
  AffineExpr e;
  for (int m = 0; m < h_i.size(); ++m) {
    e.add(w_im(m), h_i(m).real());
    e.add(w_re(m), -h_i(m).imag());
  }
  return e;
}

/// Decode-interference coefficient of stream u as seen by decoder i
/// working on stream k (u != k), for a complement matrix beta.
double beta_coef(const Eigen::MatrixXd& beta, int i, int k, int u) {
  return u < k ? std::max(beta(i, u), 1.0 - beta(u, k))
               : std::max(beta(i, u), beta(k, u));
}

void check_shapes(const ChannelMatrix& h, const SystemConfig& config) {
  if (h.num_users() != config.num_users || h.num_antennas() != config.num_antennas)
    throw std::invalid_argument("builders: channel does not match config shape");
}

Eigen::MatrixXi minus_ones(int rows, int cols) {
  return Eigen::MatrixXi::Constant(rows, cols, -1);
}

/// Feasible initial rate at the expansion point: a fraction of the slack
/// the linearized rate row leaves at r = 0 (zero when the expansion is
/// stale enough to leave none).
double initial_rate(double i_val, double s_val, double i_bar) {
  const double slack = log2_(i_val + s_val) - log2_(i_bar) - (i_val - i_bar) / (i_bar * kLn2);
  return 0.95 * std::max(0.0, slack);
}

}  // namespace

AuxiliaryBlock AuxiliaryBlock::floor(int num_users, double sigma2) {
  AuxiliaryBlock a;
  a.S = Eigen::MatrixXd::Zero(num_users, num_users);
  a.I = Eigen::MatrixXd::Constant(num_users, num_users, sigma2);
  a.r = Eigen::MatrixXd::Zero(num_users, num_users);
  return a;
}

double intf_beta(const Eigen::MatrixXd& beta, const BeamMatrix& w,
                 const ChannelMatrix& h, double sigma2, int i, int k) {
  const int n = h.num_users();
  if (beta.rows() != n || beta.cols() != n || w.cols() != n ||
      w.rows() != h.num_antennas())
    throw std::invalid_argument("intf_beta: inconsistent shapes");
  double acc = sigma2;
  if (i == k) {
    for (int u = 0; u < n; ++u)
      if (u != k) acc += beta(k, u) * std::norm(beam_gain(h, k, w, u));
  } else {
    for (int u = 0; u < n; ++u)
      if (u != k) acc += beta_coef(beta, i, k, u) * std::norm(beam_gain(h, i, w, u));
  }
  return acc;
}

void taylor_signal(ConvexProgram& p, const Eigen::VectorXcd& h_i,
                   const Eigen::VectorXcd& w_bar, const Eigen::VectorXi& w_re,
                   const Eigen::VectorXi& w_im, int s_var) {
  // g_bar = h_i^H w_bar; the linearized row reads
  //   S + |g_bar|^2 - 2 sum_m [Re(a_m) Re(w_m) + Im(a_m) Im(w_m)] <= 0
  // with a_m = g_bar * h_im.
  std::complex<double> g_bar = 0.0;
  for (int m = 0; m < h_i.size(); ++m) g_bar += std::conj(h_i(m)) * w_bar(m);
  AffineExpr row = AffineExpr::term(s_var);
  row.add_constant(std::norm(g_bar));
  for (int m = 0; m < h_i.size(); ++m) {
    const std::complex<double> a = g_bar * h_i(m);
    row.add(w_re(m), -2.0 * a.real());
    row.add(w_im(m), -2.0 * a.imag());
  }
  p.add_affine_le(std::move(row));
}

void taylor_log_intf(ConvexProgram& p, double i_bar, int r_var, int i_var,
                     int s_var, double s_const) {
  if (!(i_bar > 0.0))
    throw std::invalid_argument("taylor_log_intf: nonpositive expansion point");
  AffineExpr lhs = AffineExpr::term(r_var);
  lhs.add(i_var, 1.0 / (i_bar * kLn2));
  lhs.add_constant(log2_(i_bar) - 1.0 / kLn2);
  AffineExpr arg = AffineExpr::term(i_var);
  if (s_var >= 0)
    arg.add(s_var, 1.0);
  else
    arg.add_constant(s_const);
  p.add_log_le(std::move(lhs), 1.0 / kLn2, std::move(arg));
}

void taylor_bilinear(ConvexProgram& p, double alpha_bar, double r_bar,
                     const AffineExpr& alpha, int r_kk_var, int r_ik_var) {
  const double d = alpha_bar - r_bar;
  AffineExpr entry = alpha * 0.5;
  entry += AffineExpr::term(r_kk_var, 0.5);
  AffineExpr bound = AffineExpr::term(r_ik_var);
  bound.add_constant(-0.25 * d * d);
  bound += alpha * (0.5 * d);
  bound.add(r_kk_var, -0.5 * d);
  p.add_quad_le({std::move(entry)}, std::move(bound));
}

BeamMatrix BuiltProgram::extract_w(const Eigen::VectorXd& x) const {
  BeamMatrix w(num_antennas, num_users);
  for (int k = 0; k < num_users; ++k)
    for (int m = 0; m < num_antennas; ++m)
      w(m, k) = {x(w_re(m, k)), x(w_im(m, k))};
  return w;
}

Eigen::MatrixXd BuiltProgram::merge(const Eigen::VectorXd& x,
                                    const Eigen::MatrixXi& ids,
                                    Eigen::MatrixXd base) {
  for (int i = 0; i < ids.rows(); ++i)
    for (int j = 0; j < ids.cols(); ++j)
      if (ids(i, j) >= 0) base(i, j) = x(ids(i, j));
  return base;
}

AuxiliaryBlock BuiltProgram::extract_aux(const Eigen::VectorXd& x,
                                         const AuxiliaryBlock& base) const {
  AuxiliaryBlock out;
  out.S = merge(x, s_id, base.S);
  out.I = merge(x, i_id, base.I);
  out.r = merge(x, r_id, base.r);
  return out;
}

BuiltProgram build_beamforming_problem(const SicMatrix& alpha,
                                       const ChannelMatrix& h,
                                       const SystemConfig& config,
                                       const BeamExpansion& expansion) {
  check_shapes(h, config);
  const int K = config.num_users;
  const int M = config.num_antennas;
  if (alpha.num_users() != K || expansion.w_bar.rows() != M ||
      expansion.w_bar.cols() != K || expansion.i_bar.rows() != K ||
      expansion.i_bar.cols() != K)
    throw std::invalid_argument("build_beamforming_problem: inconsistent shapes");

  BuiltProgram b;
  b.num_users = K;
  b.num_antennas = M;
  ConvexProgram& p = b.program;

  b.w_re.resize(M, K);
  b.w_im.resize(M, K);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) {
      b.w_re(m, k) = p.add_variable();
      b.w_im(m, k) = p.add_variable();
      p.set_initial(b.w_re(m, k), expansion.w_bar(m, k).real());
      p.set_initial(b.w_im(m, k), expansion.w_bar(m, k).imag());
    }

  // Binary interference coefficient of stream u in the (i, k) row.
  const Eigen::MatrixXd beta_bin =
      (Eigen::MatrixXd::Ones(K, K) - alpha.matrix().cast<double>());
  auto coef = [&](int i, int k, int u) {
    return i == k ? beta_bin(k, u) : beta_coef(beta_bin, i, k, u);
  };

  // Squared-gain epigraphs for every gain some interference row uses.
  Eigen::MatrixXi needed = Eigen::MatrixXi::Zero(K, K);
  auto trio = [&](int i, int k) { return i == k || alpha.decodes(i, k); };
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      if (!trio(i, k)) continue;
      for (int u = 0; u < K; ++u)
        if (u != k && coef(i, k, u) > kCoefEps) needed(i, u) = 1;
    }

  const Eigen::MatrixXd gains = cross_gains(expansion.w_bar, h);
  b.gain = minus_ones(K, K);
  for (int i = 0; i < K; ++i)
    for (int u = 0; u < K; ++u) {
      if (!needed(i, u)) continue;
      b.gain(i, u) = p.add_variable(0.0);
      p.set_initial(b.gain(i, u), gains(i, u));
      p.add_quad_le({re_gain_expr(h.user(i), b.w_re.col(u), b.w_im.col(u)),
                     im_gain_expr(h.user(i), b.w_re.col(u), b.w_im.col(u))},
                    AffineExpr::term(b.gain(i, u)));
    }

  b.s_id = minus_ones(K, K);
  b.i_id = minus_ones(K, K);
  b.r_id = minus_ones(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      if (!trio(i, k)) continue;
      b.s_id(i, k) = p.add_variable(0.0);
      b.i_id(i, k) = p.add_variable(config.sigma2);
      const double rate_lb = i == k ? std::max(0.0, config.r_min(k)) : 0.0;
      b.r_id(i, k) = p.add_variable(rate_lb);
      p.set_initial(b.s_id(i, k), gains(i, k));

      // Interference row: sum_u coef * gain_iu + sigma2 <= I_ik.
      AffineExpr intf(config.sigma2);
      double i_init = config.sigma2;
      for (int u = 0; u < K; ++u) {
        if (u == k) continue;
        const double c = coef(i, k, u);
        if (c <= kCoefEps) continue;
        intf.add(b.gain(i, u), c);
        i_init += c * gains(i, u);
      }
      intf.add(b.i_id(i, k), -1.0);
      p.add_affine_le(std::move(intf));
      p.set_initial(b.i_id(i, k), i_init);

      const double i_bar = std::max(expansion.i_bar(i, k), config.sigma2 * 1e-3);
      taylor_signal(p, h.user(i), expansion.w_bar.col(k), b.w_re.col(k),
                    b.w_im.col(k), b.s_id(i, k));
      taylor_log_intf(p, i_bar, b.r_id(i, k), b.i_id(i, k), b.s_id(i, k));
      p.set_initial(b.r_id(i, k), initial_rate(i_init, gains(i, k), i_bar));
    }

  // Decode-rate conditions on matched pairs: r_kk <= r_ik.
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k)
      if (i != k && alpha.decodes(i, k))
        p.add_affine_le(AffineExpr::term(b.r_id(k, k)).add(b.r_id(i, k), -1.0));

  // Total transmit power.
  std::vector<AffineExpr> pw;
  pw.reserve(static_cast<std::size_t>(2 * M * K));
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) {
      pw.push_back(AffineExpr::term(b.w_re(m, k)));
      pw.push_back(AffineExpr::term(b.w_im(m, k)));
    }
  p.add_quad_le(std::move(pw), AffineExpr(config.p_max));

  for (int k = 0; k < K; ++k) p.add_objective(b.r_id(k, k), 1.0);
  return b;
}

BuiltProgram build_alpha_w_problem(const AdmmPoint& state, const AdmmDuals& duals,
                                   const SystemConfig& config,
                                   const ChannelMatrix& h) {
  check_shapes(h, config);
  const int K = config.num_users;
  const int M = config.num_antennas;

  BuiltProgram b;
  b.num_users = K;
  b.num_antennas = M;
  ConvexProgram& p = b.program;

  b.alpha_id = minus_ones(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      if (i == k) continue;
      b.alpha_id(i, k) = p.add_variable(0.0, 1.0);
      p.set_initial(b.alpha_id(i, k), std::clamp(state.alpha(i, k), 0.0, 1.0));
    }
  for (int i = 0; i < K; ++i)
    for (int k = i + 1; k < K; ++k)
      p.add_affine_le(AffineExpr::term(b.alpha_id(i, k))
                          .add(b.alpha_id(k, i), 1.0)
                          .add_constant(-1.0));

  b.w_re.resize(M, K);
  b.w_im.resize(M, K);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) {
      b.w_re(m, k) = p.add_variable();
      b.w_im(m, k) = p.add_variable();
      p.set_initial(b.w_re(m, k), state.w(m, k).real());
      p.set_initial(b.w_im(m, k), state.w(m, k).imag());
    }

  auto coef = [&](int i, int k, int u) {
    return i == k ? state.beta(k, u) : beta_coef(state.beta, i, k, u);
  };
  Eigen::MatrixXi needed = Eigen::MatrixXi::Zero(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k)
      for (int u = 0; u < K; ++u)
        if (u != k && coef(i, k, u) > kCoefEps) needed(i, u) = 1;

  const Eigen::MatrixXd gains = cross_gains(state.w, h);
  b.gain = minus_ones(K, K);
  for (int i = 0; i < K; ++i)
    for (int u = 0; u < K; ++u) {
      if (!needed(i, u)) continue;
      b.gain(i, u) = p.add_variable(0.0);
      p.set_initial(b.gain(i, u), gains(i, u));
      p.add_quad_le({re_gain_expr(h.user(i), b.w_re.col(u), b.w_im.col(u)),
                     im_gain_expr(h.user(i), b.w_re.col(u), b.w_im.col(u))},
                    AffineExpr::term(b.gain(i, u)));
    }

  b.s_id.resize(K, K);
  b.i_id.resize(K, K);
  b.r_id.resize(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      b.s_id(i, k) = p.add_variable(0.0);
      b.i_id(i, k) = p.add_variable(config.sigma2);
      b.r_id(i, k) = p.add_variable(i == k ? std::max(0.0, config.r_min(k)) : 0.0);
      p.set_initial(b.s_id(i, k), gains(i, k));

      AffineExpr intf(config.sigma2);
      double i_init = config.sigma2;
      for (int u = 0; u < K; ++u) {
        if (u == k) continue;
        const double c = coef(i, k, u);
        if (c <= kCoefEps) continue;
        intf.add(b.gain(i, u), c);
        i_init += c * gains(i, u);
      }
      intf.add(b.i_id(i, k), -1.0);
      p.add_affine_le(std::move(intf));
      p.set_initial(b.i_id(i, k), i_init);

      const double i_bar = std::max(state.aux.I(i, k), config.sigma2 * 1e-3);
      taylor_signal(p, h.user(i), state.w.col(k), b.w_re.col(k), b.w_im.col(k),
                    b.s_id(i, k));
      taylor_log_intf(p, i_bar, b.r_id(i, k), b.i_id(i, k), b.s_id(i, k));
      p.set_initial(b.r_id(i, k), initial_rate(i_init, gains(i, k), i_bar));
    }

  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k)
      if (i != k)
        taylor_bilinear(p, state.alpha(i, k), state.aux.r(k, k),
                        AffineExpr::term(b.alpha_id(i, k)), b.r_id(k, k),
                        b.r_id(i, k));

  std::vector<AffineExpr> pw;
  pw.reserve(static_cast<std::size_t>(2 * M * K));
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) {
      pw.push_back(AffineExpr::term(b.w_re(m, k)));
      pw.push_back(AffineExpr::term(b.w_im(m, k)));
    }
  p.add_quad_le(std::move(pw), AffineExpr(config.p_max));

  // Augmented penalty epigraphs: t1 >= (1/2rho) sum (beta + alpha - 1 +
  // rho*lambda)^2 and t2 >= (1/2rho) sum (beta*alpha + rho*lambda~)^2,
  // both over off-diagonal pairs, with beta fixed here.
  const double rho = duals.rho;
  const double s = std::sqrt(0.5 / rho);
  b.t1_id = p.add_variable(0.0);
  b.t2_id = p.add_variable(0.0);
  std::vector<AffineExpr> v1, v2;
  double l1 = 0.0, l2 = 0.0;
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      if (i == k) continue;
      const double c1 = state.beta(i, k) - 1.0 + rho * duals.lambda(i, k);
      v1.push_back(AffineExpr::term(b.alpha_id(i, k), s).add_constant(s * c1));
      const double e1 = s * (state.alpha(i, k) + c1);
      l1 += e1 * e1;
      const double c2 = rho * duals.lambda_tilde(i, k);
      v2.push_back(
          AffineExpr::term(b.alpha_id(i, k), s * state.beta(i, k)).add_constant(s * c2));
      const double e2 = s * (state.beta(i, k) * state.alpha(i, k) + c2);
      l2 += e2 * e2;
    }
  p.add_quad_le(std::move(v1), AffineExpr::term(b.t1_id));
  p.add_quad_le(std::move(v2), AffineExpr::term(b.t2_id));
  p.set_initial(b.t1_id, l1 + 1e-6);
  p.set_initial(b.t2_id, l2 + 1e-6);

  for (int k = 0; k < K; ++k) p.add_objective(b.r_id(k, k), 1.0);
  p.add_objective(b.t1_id, -1.0);
  p.add_objective(b.t2_id, -1.0);
  return b;
}

BuiltProgram build_beta_problem(const AdmmPoint& state, const AdmmDuals& duals,
                                const SystemConfig& config,
                                const ChannelMatrix& h) {
  check_shapes(h, config);
  const int K = config.num_users;

  BuiltProgram b;
  b.num_users = K;
  b.num_antennas = config.num_antennas;
  ConvexProgram& p = b.program;

  b.beta_id = minus_ones(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      if (i == k) continue;
      b.beta_id(i, k) = p.add_variable(0.0, 1.0);
      p.set_initial(b.beta_id(i, k), std::clamp(state.beta(i, k), 0.0, 1.0));
    }
  // Mutual exclusion in complement form: beta_ik + beta_ki >= 1.
  for (int i = 0; i < K; ++i)
    for (int k = i + 1; k < K; ++k)
      p.add_affine_le(AffineExpr(1.0).add(b.beta_id(i, k), -1.0).add(b.beta_id(k, i), -1.0));

  const Eigen::MatrixXd gains = cross_gains(state.w, h);

  b.s_id = minus_ones(K, K);  // S is fixed in this block
  b.i_id.resize(K, K);
  b.r_id.resize(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      b.i_id(i, k) = p.add_variable(config.sigma2);
      b.r_id(i, k) = p.add_variable(i == k ? std::max(0.0, config.r_min(k)) : 0.0);
    }

  for (int k = 0; k < K; ++k) {
    // Served-signal interference is affine in beta.
    AffineExpr intf(config.sigma2);
    double i_init = config.sigma2;
    for (int u = 0; u < K; ++u) {
      if (u == k || gains(k, u) <= 0.0) continue;
      intf.add(b.beta_id(k, u), gains(k, u));
      i_init += state.beta(k, u) * gains(k, u);
    }
    intf.add(b.i_id(k, k), -1.0);
    p.add_affine_le(std::move(intf));
    p.set_initial(b.i_id(k, k), i_init);
  }

  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      if (i == k) continue;
      // Each max(beta_iu, .) term gets an epigraph variable except u = i,
      // where beta_ii = 0 collapses the max to an affine coefficient.
      AffineExpr intf(config.sigma2);
      double i_init = config.sigma2;
      for (int u = 0; u < K; ++u) {
        if (u == k || gains(i, u) <= 0.0) continue;
        if (u == i) {
          if (u < k) {  // coefficient 1 - beta_uk
            intf.add_constant(gains(i, u));
            intf.add(b.beta_id(u, k), -gains(i, u));
            i_init += (1.0 - state.beta(u, k)) * gains(i, u);
          } else {  // coefficient beta_ku
            intf.add(b.beta_id(k, u), gains(i, u));
            i_init += state.beta(k, u) * gains(i, u);
          }
          continue;
        }
        const int e = p.add_variable(0.0, 1.0);
        p.add_affine_le(AffineExpr::term(b.beta_id(i, u)).add(e, -1.0));
        if (u < k)
          p.add_affine_le(AffineExpr(1.0).add(b.beta_id(u, k), -1.0).add(e, -1.0));
        else
          p.add_affine_le(AffineExpr::term(b.beta_id(k, u)).add(e, -1.0));
        // Exactly the max-coefficient value, so the interference row is
        // tight (not violated) at the assembled starting point.
        const double e_init = beta_coef(state.beta, i, k, u);
        p.set_initial(e, e_init);
        intf.add(e, gains(i, u));
        i_init += e_init * gains(i, u);
      }
      intf.add(b.i_id(i, k), -1.0);
      p.add_affine_le(std::move(intf));
      p.set_initial(b.i_id(i, k), i_init);
    }

  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      const double i_bar = std::max(state.aux.I(i, k), config.sigma2 * 1e-3);
      taylor_log_intf(p, i_bar, b.r_id(i, k), b.i_id(i, k), -1, state.aux.S(i, k));
      p.set_initial(b.r_id(i, k),
                    initial_rate(state.aux.I(i, k), state.aux.S(i, k), i_bar));
      if (i != k)
        taylor_bilinear(p, state.alpha(i, k), state.aux.r(k, k),
                        AffineExpr(state.alpha(i, k)), b.r_id(k, k), b.r_id(i, k));
    }

  const double rho = duals.rho;
  const double s = std::sqrt(0.5 / rho);
  b.t1_id = p.add_variable(0.0);
  b.t2_id = p.add_variable(0.0);
  std::vector<AffineExpr> v1, v2;
  double l1 = 0.0, l2 = 0.0;
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      if (i == k) continue;
      const double c1 = state.alpha(i, k) - 1.0 + rho * duals.lambda(i, k);
      v1.push_back(AffineExpr::term(b.beta_id(i, k), s).add_constant(s * c1));
      const double e1 = s * (state.beta(i, k) + c1);
      l1 += e1 * e1;
      const double c2 = rho * duals.lambda_tilde(i, k);
      v2.push_back(
          AffineExpr::term(b.beta_id(i, k), s * state.alpha(i, k)).add_constant(s * c2));
      const double e2 = s * (state.alpha(i, k) * state.beta(i, k) + c2);
      l2 += e2 * e2;
    }
  p.add_quad_le(std::move(v1), AffineExpr::term(b.t1_id));
  p.add_quad_le(std::move(v2), AffineExpr::term(b.t2_id));
  p.set_initial(b.t1_id, l1 + 1e-6);
  p.set_initial(b.t2_id, l2 + 1e-6);

  for (int k = 0; k < K; ++k) p.add_objective(b.r_id(k, k), 1.0);
  p.add_objective(b.t1_id, -1.0);
  p.add_objective(b.t2_id, -1.0);
  return b;
}

}  // namespace cfnoma::convex
