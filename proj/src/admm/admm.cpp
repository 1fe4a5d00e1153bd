// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#include "admm/admm.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "convex/solver.hpp"
#include "model/rng.hpp"
#include "sca/beamforming.hpp"

namespace cfnoma::admm {

namespace {

constexpr std::uint64_t kStreamStart = 0x61646d6d73746172ULL;
constexpr std::uint64_t kStreamFallback = 0x61646d6d66616c6cULL;

double log2_(double v) { return std::log(v) / 0.6931471805599453; }

/// Beams with independent CN(0,1) entries rescaled to exactly the power
/// budget (two passes so the residual is at the rounding level).
BeamMatrix random_beams(int m, int k, double p_max, Rng& rng) {
  BeamMatrix w(m, k);
  for (int c = 0; c < k; ++c) {
    for (int r = 0; r < m; ++r) w(r, c) = rng.cnormal();
  }
  for (int pass = 0; pass < 2; ++pass) {
    w *= std::sqrt(p_max / transmit_power(w));
  }
  return w;
}

/// Drops active cross-decodes until the exact decode-rate conditions hold,
/// worst deficit first.  Rounding and the finite-accuracy polish can leave
/// assignments whose decode rate sits a hair under the target; removing
/// them trades a sliver of cancellation gain for exact feasibility.
RateReport prune_to_sic_feasible(SicMatrix& alpha, const BeamMatrix& w,
                                 const ChannelMatrix& h,
                                 const SystemConfig& config) {
  RateReport rep = rate_report(alpha, w, h, config);
  const int K = alpha.num_users();
  while (!rep.sic_feasible) {
    int bi = -1, bk = -1;
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
      for (int k = 0; k < K; ++k) {
        if (i == k || !alpha.decodes(i, k)) continue;
        const double deficit = rep.rate_own(k) - rep.rate_decode(i, k);
        if (deficit > worst) {
          worst = deficit;
          bi = i;
          bk = k;
        }
      }
    }
    if (bi < 0) break;  // nothing left to drop; report stands as-is
    alpha.set(bi, bk, false);
    rep = rate_report(alpha, w, h, config);
  }
  return rep;
}

}  // namespace

AdmmState init_state(const SystemConfig& config, const ChannelMatrix& h,
                     std::uint64_t seed) {
  const int K = config.num_users;
  const int M = config.num_antennas;
  Rng rng(seed);

  AdmmState st;
  st.point.w = random_beams(M, K, config.p_max, rng);
  st.point.alpha = Eigen::MatrixXd::Identity(K, K);
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) {
      if (i != k) st.point.alpha(i, k) = 0.5 * rng.uniform();
    }
  }
  st.point.beta = Eigen::MatrixXd::Ones(K, K) - st.point.alpha;
  st.point.beta.diagonal().setZero();

  st.point.aux = convex::AuxiliaryBlock::floor(K, config.sigma2);
  const Eigen::MatrixXd gains = cross_gains(st.point.w, h);
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) {
      st.point.aux.S(i, k) = gains(i, k);
      st.point.aux.I(i, k) =
          convex::intf_beta(st.point.beta, st.point.w, h, config.sigma2, i, k);
      st.point.aux.r(i, k) =
          log2_(1.0 + st.point.aux.S(i, k) / st.point.aux.I(i, k));
    }
  }
  // The relaxed decode coupling requires alpha_ik * r_kk <= r_ik, so the
  // diagonal rates are capped to keep the whole state feasible for both
  // subproblems by plain substitution.
  for (int k = 0; k < K; ++k) {
    double lim = st.point.aux.r(k, k);
    for (int i = 0; i < K; ++i) {
      if (i != k && st.point.alpha(i, k) > 1e-12) {
        lim = std::min(lim, st.point.aux.r(i, k) / st.point.alpha(i, k));
      }
    }
    st.point.aux.r(k, k) = std::max(0.0, lim);
  }

  st.duals.lambda = Eigen::MatrixXd::Zero(K, K);
  st.duals.lambda_tilde = Eigen::MatrixXd::Zero(K, K);
  st.duals.rho = config.rho;
  st.iteration = 0;
  return st;
}

double objective_value(const AdmmState& state) {
  return state.point.aux.r.diagonal().sum();
}

double residual_sum(const AdmmState& state) {
  const Eigen::MatrixXd r = state.point.beta + state.point.alpha -
                            Eigen::MatrixXd::Ones(state.point.alpha.rows(),
                                                  state.point.alpha.cols());
  return r.cwiseAbs().maxCoeff();
}

double residual_prod(const AdmmState& state) {
  return (state.point.alpha.array() * state.point.beta.array()).abs().maxCoeff();
}

bool admm_iterate(AdmmState& state, const SystemConfig& config,
                  const ChannelMatrix& h, AdmmTraceRow* row) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto finish = [&](const char* status) {
    state.iteration += 1;
    if (row != nullptr) {
      row->iteration = state.iteration;
      row->objective = objective_value(state);
      row->residual_sum = residual_sum(state);
      row->residual_prod = residual_prod(state);
      row->status = status;
      row->ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    }
  };

  // Assignment/beam block.
  {
    const convex::BuiltProgram b =
        convex::build_alpha_w_problem(state.point, state.duals, config, h);
    const convex::SolverResult res = convex::solve(b.program);
    if (res.status != convex::SolveStatus::Optimal) {
      finish(res.status == convex::SolveStatus::Infeasible ? "assign-infeasible"
                                                           : "assign-failed");
      return false;
    }
    state.point.alpha =
        convex::BuiltProgram::merge(res.x, b.alpha_id, state.point.alpha);
    state.point.w = b.extract_w(res.x);
    state.point.aux = b.extract_aux(res.x, state.point.aux);
  }

  // Complement block.
  {
    const convex::BuiltProgram b =
        convex::build_beta_problem(state.point, state.duals, config, h);
    const convex::SolverResult res = convex::solve(b.program);
    if (res.status != convex::SolveStatus::Optimal) {
      finish(res.status == convex::SolveStatus::Infeasible
                 ? "complement-infeasible"
                 : "complement-failed");
      return false;
    }
    state.point.beta =
        convex::BuiltProgram::merge(res.x, b.beta_id, state.point.beta);
    state.point.aux = b.extract_aux(res.x, state.point.aux);
  }

  dual_ascent(state);
  finish("ok");
  return true;
}

void dual_ascent(AdmmState& state) {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(state.point.alpha.rows(),
                                                     state.point.alpha.cols());
  state.duals.lambda +=
      (state.point.beta + state.point.alpha - ones) / state.duals.rho;
  state.duals.lambda_tilde +=
      (state.point.beta.array() * state.point.alpha.array()).matrix() /
      state.duals.rho;
}

SicMatrix round_alpha(const Eigen::MatrixXd& alpha) {
  const int K = static_cast<int>(alpha.rows());
  Eigen::MatrixXi a = Eigen::MatrixXi::Identity(K, K);
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) {
      if (i != k && alpha(i, k) >= 0.5) a(i, k) = 1;
    }
  }
  for (int i = 0; i < K; ++i) {
    for (int k = i + 1; k < K; ++k) {
      if (a(i, k) == 1 && a(k, i) == 1) {
        // Pairwise exclusion: keep the direction the relaxation favored.
        if (alpha(i, k) >= alpha(k, i)) {
          a(k, i) = 0;
        } else {
          a(i, k) = 0;
        }
      }
    }
  }
  return SicMatrix::from_matrix(a);
}

AdmmResult run_admm_sca(const SystemConfig& config, const ChannelMatrix& h) {
  const int K = config.num_users;
  AdmmResult out;
  double best_rate = -std::numeric_limits<double>::infinity();

  for (int start = 0; start < config.n_ini; ++start) {
    const std::uint64_t seed =
        mix_seed(config.rng_seed, {kStreamStart, static_cast<std::uint64_t>(start)});
    AdmmState st = init_state(config, h, seed);
    double prev = objective_value(st);
    for (int t = 0; t < config.t_admm_max; ++t) {
      AdmmTraceRow row;
      row.start = start;
      const bool ok = admm_iterate(st, config, h, &row);
      out.trace.push_back(row);
      if (!ok) break;
      const double f = row.objective;
      const double d = f - prev;
      prev = f;
      if (d * d <= config.eps_admm) break;
    }

    // Round, polish the beams on the binary assignment, and enforce exact
    // decode feasibility; the start competes on the resulting sum rate.
    SicMatrix a = round_alpha(st.point.alpha);
    const sca::ScaResult pol =
        sca::run_sca_beamforming(a, h, config, st.point.w, config.l_max);
    const RateReport rep = prune_to_sic_feasible(a, pol.w, h, config);
    const bool feas = pol.feasible && rep.sic_feasible &&
                      rep.min_rate_feasible && power_feasible(pol.w, config);
    if (feas && rep.sum_rate > best_rate) {
      best_rate = rep.sum_rate;
      out.alpha = a;
      out.w = pol.w;
      out.report = rep;
      out.best_start = start;
      out.feasible = true;
    }
  }

  if (out.best_start < 0) {
    // No start survived: fall back to beamforming-only service.
    out.sdma_fallback = true;
    Rng rng(mix_seed(config.rng_seed, {kStreamFallback}));
    SicMatrix a = SicMatrix::identity(K);
    const BeamMatrix w0 = random_beams(config.num_antennas, K, config.p_max, rng);
    const sca::ScaResult pol = sca::run_sca_to_convergence(a, h, config, w0);
    out.alpha = a;
    out.w = pol.w;
    out.report = rate_report(a, pol.w, h, config);
    out.feasible = pol.feasible && out.report.sic_feasible &&
                   out.report.min_rate_feasible &&
                   power_feasible(pol.w, config);
  }
  return out;
}

std::string trace_csv(const std::vector<AdmmTraceRow>& rows) {
  std::ostringstream os;
  os << "iteration,objective,residual_sum,residual_prod,status,ms\n";
  os.precision(10);
  for (const auto& r : rows) {
    os << r.iteration << ',' << r.objective << ',' << r.residual_sum << ','
       << r.residual_prod << ',' << r.status << ',' << r.ms << '\n';
  }
  return os.str();
}

}  // namespace cfnoma::admm
