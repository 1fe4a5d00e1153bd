// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors
//
// Unit tests for the domain types and rate arithmetic.  Every numeric
// expectation is either an analytic identity or an independently coded
// oracle (direct term-by-term sums), never a value copied from the
// implementation under test.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "model/channel.hpp"
#include "model/config.hpp"
#include "model/rates.hpp"
#include "model/rng.hpp"
#include "model/sic.hpp"
#include "test_helpers.hpp"

using namespace cfnoma;
using cfnoma::test::random_beams;
using cfnoma::test::small_config;

namespace {

// Independent oracle for the own-signal interference sum.
double own_intf_oracle(const SicMatrix& a, const BeamMatrix& w, const ChannelMatrix& h,
                       double sigma2, int k) {
  double acc = sigma2;
  for (int u = 0; u < h.num_users(); ++u) {
    if (u == k) continue;
    std::complex<double> dot = 0;
    for (int m = 0; m < h.num_antennas(); ++m)
      dot += std::conj(h.rows()(k, m)) * w(m, u);
    acc += (1.0 - (a.decodes(k, u) ? 1.0 : 0.0)) * std::norm(dot);
  }
  return acc;
}

// Independent oracle for the cross-decode interference sum.
double decode_intf_oracle(const SicMatrix& a, const BeamMatrix& w, const ChannelMatrix& h,
                          double sigma2, int i, int k) {
  double acc = sigma2;
  for (int u = 0; u < h.num_users(); ++u) {
    if (u == k) continue;
    std::complex<double> dot = 0;
    for (int m = 0; m < h.num_antennas(); ++m)
      dot += std::conj(h.rows()(i, m)) * w(m, u);
    const double g = std::norm(dot);
    const double aiu = a.decodes(i, u) ? 1.0 : 0.0;
    if (u < k) {
      const double auk = a.decodes(u, k) ? 1.0 : 0.0;
      acc += (1.0 - aiu + aiu * auk) * g;
    } else {
      const double aku = a.decodes(k, u) ? 1.0 : 0.0;
      acc += (1.0 - aiu * aku) * g;
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("rng: deterministic streams and seed mixing") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(a.uniform() != c.uniform());
  CHECK(mix_seed(1, {0, 0}) != mix_seed(1, {0, 1}));
  CHECK(mix_seed(1, {2, 3}) != mix_seed(2, {2, 3}));
  CHECK(mix_seed(7, {5}) == mix_seed(7, {5}));
}

TEST_CASE("rng: normal moments are sane") {
  Rng rng(7);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);

  Rng crng(8);
  double csq = 0;
  for (int i = 0; i < n; ++i) csq += std::norm(crng.cnormal());
  CHECK(std::abs(csq / n - 1.0) < 0.05);  // unit-variance complex entries
}

TEST_CASE("config: validation and json round-trip") {
  SystemConfig cfg = small_config(4, 3, 0.6);
  CHECK(cfg.p_max == doctest::Approx(100.0));  // 20 dB over unit noise

  CHECK_THROWS_AS(small_config(0, 3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(small_config(4, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(small_config(4, 3, 0.9995), std::invalid_argument);
  CHECK_THROWS_AS(small_config(4, 3, -0.1), std::invalid_argument);

  SystemConfig bad = cfg;
  bad.rho = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.min_rates = {1.0, 2.0};  // wrong length for K=3
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const auto j = cfg.to_json();
  const SystemConfig back = SystemConfig::from_json(j);
  CHECK(back.p_max == cfg.p_max);
  CHECK(back.corr == cfg.corr);
  CHECK(back.num_users == cfg.num_users);

  CHECK_THROWS_AS(SystemConfig::from_json({{"nope", 1}}), std::invalid_argument);

  // Scalar min_rates broadcasts; snr_db drives p_max when absent.
  const SystemConfig s = SystemConfig::from_json(
      {{"num_users", 2}, {"num_antennas", 2}, {"snr_db", 10.0}, {"min_rates", 0.25}});
  CHECK(s.p_max == doctest::Approx(10.0));
  CHECK(s.min_rates == std::vector<double>{0.25, 0.25});
}

TEST_CASE("channel: correlation matrix analytic 2x2 eigenvalues") {
  for (double phase : {0.0, 1.3}) {
    const Eigen::MatrixXcd r = correlation_matrix(2, 0.5, phase);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    CHECK(es.eigenvalues()(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(es.eigenvalues()(1) == doctest::Approx(1.5).epsilon(1e-12));
  }
}

TEST_CASE("channel: zero correlation reproduces the raw i.i.d. draw") {
  const SystemConfig cfg = small_config(3, 4, 0.0);
  const ChannelMatrix h = generate_channel(cfg, 99);

  // Oracle: replay the documented draw order (phase first, then entries
  // row-major) and sort rows ascending by squared norm.
  Rng rng(99);
  (void)rng.uniform(0.0, 2.0 * std::numbers::pi);
  Eigen::MatrixXcd raw(4, 3);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c) raw(r, c) = rng.cnormal();
  const ChannelMatrix expect = ChannelMatrix::from_rows(raw);
  CHECK((h.rows() - expect.rows()).norm() == 0.0);
}

TEST_CASE("channel: determinism, ordering, permutation metadata") {
  const SystemConfig cfg = small_config(4, 5, 0.7);
  const ChannelMatrix a = generate_channel(cfg, 5);
  const ChannelMatrix b = generate_channel(cfg, 5);
  CHECK(a.rows() == b.rows());  // bit-identical
  for (int k = 0; k + 1 < a.num_users(); ++k) CHECK(a.gain(k) <= a.gain(k + 1));
  for (int k = 0; k < a.num_users(); ++k) CHECK(a.gain_order()[k] == k);

  // Stable tie-break by original index.
  Eigen::MatrixXcd rows(3, 1);
  rows << std::complex<double>(2, 0), std::complex<double>(1, 0), std::complex<double>(0, 2);
  const ChannelMatrix tied = ChannelMatrix::from_rows(rows);
  CHECK(tied.gain_order() == std::vector<int>{1, 0, 2});
}

TEST_CASE("channel: higher corr raises mean pairwise alignment by > 0.1") {
  auto mean_alignment = [](double corr) {
    const SystemConfig cfg = small_config(4, 6, corr);
    double acc = 0;
    int cnt = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const ChannelMatrix h = generate_channel(cfg, mix_seed(1234, {seed}));
      for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) {
          const std::complex<double> d = (h.rows().row(i).conjugate() * h.rows().row(j).transpose()).value();
          acc += std::abs(d) / std::sqrt(h.gain(i) * h.gain(j));
          ++cnt;
        }
    }
    return acc / cnt;
  };
  CHECK(mean_alignment(0.9) - mean_alignment(0.6) > 0.1);
}

TEST_CASE("channel: text serialization round-trips exactly") {
  const ChannelMatrix h = generate_channel(small_config(4, 3, 0.8), 17);
  const ChannelMatrix back = ChannelMatrix::from_text(h.to_text());
  CHECK(back.rows() == h.rows());
  CHECK(back.gain_order() == h.gain_order());
  CHECK_THROWS_AS(ChannelMatrix::from_text("bogus"), std::invalid_argument);
}

TEST_CASE("sic: constructors enforce structure") {
  const SicMatrix id = SicMatrix::identity(3);
  CHECK(id.complexity() == 0);

  const SicMatrix ch = SicMatrix::chain(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(ch.decodes(i, j) == (i >= j));
  CHECK(ch.complexity() == 4 * 3);  // one directed operation per unordered pair

  Eigen::MatrixXi bad = Eigen::MatrixXi::Identity(3, 3);
  bad(0, 0) = 0;
  CHECK_THROWS_AS(SicMatrix::from_matrix(bad), std::invalid_argument);
  bad = Eigen::MatrixXi::Identity(3, 3);
  bad(0, 1) = bad(1, 0) = 1;
  CHECK_THROWS_AS(SicMatrix::from_matrix(bad), std::invalid_argument);
  bad = Eigen::MatrixXi::Identity(3, 3);
  bad(0, 1) = 2;
  CHECK_THROWS_AS(SicMatrix::from_matrix(bad), std::invalid_argument);

  SicMatrix s = SicMatrix::identity(3);
  s.set(0, 1, true);
  CHECK_THROWS_AS(s.set(1, 0, true), std::invalid_argument);
  CHECK_THROWS_AS(s.set(1, 1, true), std::invalid_argument);
  s.set(0, 1, false);
  s.set(1, 0, true);
  CHECK(s.decodes(1, 0));
}

TEST_CASE("interference_own: special cases and oracle") {
  const SystemConfig cfg = small_config(2, 3, 0.5);
  const ChannelMatrix h = generate_channel(cfg, 3);
  const BeamMatrix w = random_beams(cfg, 30);

  SUBCASE("identity alpha = full multi-user interference") {
    const Eigen::VectorXd v = interference_own(SicMatrix::identity(3), w, h, cfg.sigma2);
    for (int k = 0; k < 3; ++k)
      CHECK(v(k) == doctest::Approx(own_intf_oracle(SicMatrix::identity(3), w, h, cfg.sigma2, k))
                        .epsilon(1e-12));
  }
  SUBCASE("all cross-decodes active leaves only noise") {
    SicMatrix a = SicMatrix::identity(3);
    a.set(1, 0, true);
    a.set(1, 2, true);
    const Eigen::VectorXd v = interference_own(a, w, h, cfg.sigma2);
    CHECK(v(1) == doctest::Approx(cfg.sigma2).epsilon(1e-15));
  }
  SUBCASE("random alpha matches oracle to 1e-12 relative") {
    SicMatrix a = SicMatrix::identity(3);
    a.set(2, 0, true);
    a.set(0, 1, true);
    const Eigen::VectorXd v = interference_own(a, w, h, cfg.sigma2);
    for (int k = 0; k < 3; ++k)
      CHECK(v(k) == doctest::Approx(own_intf_oracle(a, w, h, cfg.sigma2, k)).epsilon(1e-12));
  }
}

TEST_CASE("interference_decode: chain algebra, shielded weaker stream, oracle") {
  SUBCASE("full chain, strongest decoding weakest") {
    const SystemConfig cfg = small_config(4, 4, 0.5);
    const ChannelMatrix h = generate_channel(cfg, 11);
    const BeamMatrix w = random_beams(cfg, 12);
    const SicMatrix a = SicMatrix::chain(4);
    const int i = 3, k = 0;
    double expect = cfg.sigma2;  // weakest user decodes nobody, so every u > 0 interferes
    for (int u = 1; u < 4; ++u)
      expect += std::norm((h.rows().row(i).conjugate() * w.col(u)).value());
    CHECK(interference_decode(a, w, h, cfg.sigma2, i, k) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("weaker stream decoded by both sides drops out") {
    // i decodes both k and u (u < k), and k decodes u as well: the u-term
    // must vanish from i's interference while decoding k.
    const SystemConfig cfg = small_config(3, 3, 0.5);
    const ChannelMatrix h = generate_channel(cfg, 21);
    const BeamMatrix w = random_beams(cfg, 22);
    const int u = 0, k = 1, i = 2;
    SicMatrix a = SicMatrix::identity(3);
    a.set(i, k, true);
    a.set(i, u, true);
    SicMatrix a_with = a;
    a_with.set(u, k, true);  // now alpha_uk = 1: u's stream no longer shields k
    // Manual expectations from the two-case rule:
    const double gu = std::norm((h.rows().row(i).conjugate() * w.col(u)).value());
    const double without = interference_decode(a, w, h, cfg.sigma2, i, k);
    const double with = interference_decode(a_with, w, h, cfg.sigma2, i, k);
    CHECK(without == doctest::Approx(with - gu).epsilon(1e-12));
    CHECK(with == doctest::Approx(decode_intf_oracle(a_with, w, h, cfg.sigma2, i, k)).epsilon(1e-12));
  }
  SUBCASE("random K=4 instance matches term-by-term oracle") {
    const SystemConfig cfg = small_config(3, 4, 0.6);
    const ChannelMatrix h = generate_channel(cfg, 31);
    const BeamMatrix w = random_beams(cfg, 32);
    SicMatrix a = SicMatrix::identity(4);
    a.set(3, 0, true);
    a.set(3, 1, true);
    a.set(1, 2, true);
    a.set(0, 2, true);
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) {
        if (i == k) continue;
        CHECK(interference_decode(a, w, h, cfg.sigma2, i, k) ==
              doctest::Approx(decode_intf_oracle(a, w, h, cfg.sigma2, i, k)).epsilon(1e-12));
      }
    CHECK_THROWS_AS(interference_decode(a, w, h, cfg.sigma2, 2, 2), std::invalid_argument);
  }
}

TEST_CASE("interference monotonicity: activating a decode never hurts the decoder") {
  const SystemConfig cfg = small_config(4, 4, 0.7);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ChannelMatrix h = generate_channel(cfg, mix_seed(500, {seed}));
    const BeamMatrix w = random_beams(cfg, mix_seed(501, {seed}));
    Rng rng(mix_seed(502, {seed}));
    SicMatrix a = SicMatrix::identity(4);
    const int k = static_cast<int>(rng.uniform(0, 4));
    int u = static_cast<int>(rng.uniform(0, 4));
    if (u == k) u = (u + 1) % 4;
    const double before = interference_own(a, w, h, cfg.sigma2)(k);
    a.set(k, u, true);
    const double after = interference_own(a, w, h, cfg.sigma2)(k);
    CHECK(after <= before + 1e-15);
  }
}

TEST_CASE("rate_report: capacity, vacuous feasibility, weak-link detection") {
  SUBCASE("single user matched filter reaches capacity") {
    const SystemConfig cfg = small_config(4, 1, 0.0);
    const ChannelMatrix h = generate_channel(cfg, 8);
    BeamMatrix w(4, 1);
    w.col(0) = std::sqrt(cfg.p_max) * h.user(0) / h.user(0).norm();
    const RateReport rep = rate_report(SicMatrix::identity(1), w, h, cfg);
    CHECK(rep.sum_rate ==
          doctest::Approx(std::log2(1.0 + cfg.p_max * h.gain(0) / cfg.sigma2)).epsilon(1e-12));
    CHECK(rep.sic_feasible);
    CHECK(rep.min_rate_feasible);
  }
  SUBCASE("identity alpha: no SIC constraints, effective = own") {
    const SystemConfig cfg = small_config(3, 3, 0.5);
    const ChannelMatrix h = generate_channel(cfg, 9);
    const BeamMatrix w = random_beams(cfg, 10);
    const RateReport rep = rate_report(SicMatrix::identity(3), w, h, cfg);
    CHECK(rep.sic_feasible);
    CHECK((rep.effective_rate - rep.rate_own).norm() == 0.0);
    CHECK(rep.sum_rate == doctest::Approx(rep.rate_own.sum()));
    CHECK(std::isnan(rep.rate_decode(0, 1)));
  }
  SUBCASE("deliberately weak decode link flips sic_feasible") {
    const SystemConfig cfg = small_config(3, 3, 0.3);
    const ChannelMatrix h = generate_channel(cfg, 13);
    // Zero-force user 1's beam against user 0 so user 0 cannot decode it.
    Eigen::VectorXcd h0 = h.user(0);
    BeamMatrix w = random_beams(cfg, 14);
    Eigen::VectorXcd w1 = w.col(1);
    w1 -= h0 * (h0.adjoint() * w1)(0) / h0.squaredNorm();
    w.col(1) = w1;
    SicMatrix a = SicMatrix::identity(3);
    a.set(0, 1, true);
    const RateReport rep = rate_report(a, w, h, cfg);
    CHECK_FALSE(rep.sic_feasible);
    CHECK(rep.rate_decode(0, 1) < rep.rate_own(1) - 1e-9);
    CHECK(rep.effective_rate(1) == doctest::Approx(rep.rate_decode(0, 1)));
    CHECK(rep.effective_rate(1) <= rep.rate_own(1));
  }
  SUBCASE("rate floors flag infeasibility") {
    SystemConfig cfg = small_config(2, 2, 0.4);
    cfg.min_rates = {50.0, 50.0};  // unreachable floor
    const ChannelMatrix h = generate_channel(cfg, 15);
    const BeamMatrix w = random_beams(cfg, 16);
    CHECK_FALSE(rate_report(SicMatrix::identity(2), w, h, cfg).min_rate_feasible);
  }
}

TEST_CASE("baseline closed forms agree with the decode-indicator machinery") {
  SUBCASE("three schemes on 100 seeded instances, 1e-9 absolute") {
    const SystemConfig cfg = small_config(3, 5, 0.6);
    const std::vector<std::vector<int>> part{{0, 1}, {2, 3}, {4}};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const ChannelMatrix h = generate_channel(cfg, mix_seed(900, {seed}));
      const BeamMatrix w = random_beams(cfg, mix_seed(901, {seed}));

      const double sdma = baseline_rate_formula(BaselineScheme::Sdma, w, h, cfg.sigma2);
      CHECK(std::abs(sdma - rate_report(SicMatrix::identity(5), w, h, cfg).sum_rate) < 1e-9);

      const double bb = baseline_rate_formula(BaselineScheme::BbNoma, w, h, cfg.sigma2);
      CHECK(std::abs(bb - rate_report(SicMatrix::chain(5), w, h, cfg).sum_rate) < 1e-9);

      // Cluster chains: within each cluster, stronger decodes weaker.
      SicMatrix cb = SicMatrix::identity(5);
      for (const auto& cl : part)
        for (std::size_t x = 0; x < cl.size(); ++x)
          for (std::size_t y = x + 1; y < cl.size(); ++y) cb.set(cl[y], cl[x], true);
      const double cbr = baseline_rate_formula(BaselineScheme::CbNoma, w, h, cfg.sigma2, &part);
      CHECK(std::abs(cbr - rate_report(cb, w, h, cfg).sum_rate) < 1e-9);
    }
  }
  SUBCASE("single all-user cluster degenerates to the global chain") {
    const SystemConfig cfg = small_config(2, 3, 0.5);
    const ChannelMatrix h = generate_channel(cfg, 55);
    const BeamMatrix w = random_beams(cfg, 56);
    const std::vector<std::vector<int>> one{{0, 1, 2}};
    CHECK(baseline_rate_formula(BaselineScheme::CbNoma, w, h, cfg.sigma2, &one) ==
          doctest::Approx(baseline_rate_formula(BaselineScheme::BbNoma, w, h, cfg.sigma2))
              .epsilon(1e-12));
  }
  SUBCASE("invalid partitions rejected") {
    const SystemConfig cfg = small_config(2, 3, 0.5);
    const ChannelMatrix h = generate_channel(cfg, 57);
    const BeamMatrix w = random_beams(cfg, 58);
    const std::vector<std::vector<int>> overlap{{0, 1}, {1, 2}};
    CHECK_THROWS_AS(baseline_rate_formula(BaselineScheme::CbNoma, w, h, cfg.sigma2, &overlap),
                    std::invalid_argument);
    const std::vector<std::vector<int>> missing{{0, 1}};
    CHECK_THROWS_AS(baseline_rate_formula(BaselineScheme::CbNoma, w, h, cfg.sigma2, &missing),
                    std::invalid_argument);
    CHECK_THROWS_AS(baseline_rate_formula(BaselineScheme::CbNoma, w, h, cfg.sigma2, nullptr),
                    std::invalid_argument);
  }
}

TEST_CASE("power accounting") {
  const SystemConfig cfg = small_config(3, 2, 0.5);
  const BeamMatrix w = random_beams(cfg, 70);
  CHECK(transmit_power(w) == doctest::Approx(cfg.p_max).epsilon(1e-12));
  CHECK(power_feasible(w, cfg));
  CHECK_FALSE(power_feasible(1.01 * w, cfg));
}
