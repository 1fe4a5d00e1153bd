// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

// Interior-point solver checks.  Closed-form toys pin exact optima;
// seeded random programs are cross-checked against the independent
// penalty-descent reference in solver_oracle.hpp.

#include <cmath>
#include <string>

#include "convex/program.hpp"
#include "convex/solver.hpp"
#include "doctest.h"
#include "model/rng.hpp"
#include "solver_oracle.hpp"

using cfnoma::Rng;
using cfnoma::convex::AffineExpr;
using cfnoma::convex::ConvexProgram;
using cfnoma::convex::kInf;
using cfnoma::convex::solve;
using cfnoma::convex::SolveStatus;

namespace {

constexpr double kLn2 = 0.6931471805599453;

/// Strictly feasible random program on the box [0, 2]^n, built so that the
/// all-ones point satisfies every row with slack.  Mix of affine, squared
/// norm and log rows.
ConvexProgram random_program(std::uint64_t seed) {
  Rng rng(seed);
  const int n = 5;
  ConvexProgram p;
  for (int v = 0; v < n; ++v) p.add_variable(0.0, 2.0);
  Eigen::VectorXd x0 = Eigen::VectorXd::Ones(n);
  for (int v = 0; v < n; ++v) {
    p.add_objective(v, rng.uniform(-1.0, 1.0));
    p.set_initial(v, 1.0);
  }

  for (int row = 0; row < 3; ++row) {
    AffineExpr e;
    double at_x0 = 0.0;
    for (int v = 0; v < n; ++v) {
      const double a = rng.uniform(-1.0, 1.0);
      e.add(v, a);
      at_x0 += a;
    }
    e.add_constant(-(at_x0 + rng.uniform(0.3, 0.8)));
    p.add_affine_le(std::move(e));
  }

  std::vector<AffineExpr> vec;
  for (int row = 0; row < 2; ++row) {
    AffineExpr v_r;
    double at_x0 = 0.0;
    for (int v = 0; v < n; ++v) {
      const double b = rng.uniform(-0.5, 0.5);
      v_r.add(v, b);
      at_x0 += b;
    }
    v_r.add_constant(rng.uniform(-0.3, 0.3) - at_x0);
    vec.push_back(std::move(v_r));
  }
  p.add_quad_le(std::move(vec), AffineExpr(rng.uniform(1.5, 3.0)));

  AffineExpr lhs, arg;
  double lhs_x0 = 0.0, arg_x0 = 0.5;
  arg.add_constant(0.5);
  for (int v = 0; v < n; ++v) {
    const double c = rng.uniform(-0.4, 0.4);
    const double d = rng.uniform(0.05, 0.4);  // nonnegative: arg > 0 on the box
    lhs.add(v, c);
    arg.add(v, d);
    lhs_x0 += c;
    arg_x0 += d;
  }
  lhs.add_constant(0.8 * std::log(arg_x0) - rng.uniform(0.2, 0.5) - lhs_x0);
  p.add_log_le(std::move(lhs), 0.8, std::move(arg));
  return p;
}

}  // namespace

TEST_CASE("log epigraph toy attains the closed-form cap") {
  // maximize t subject to t <= log2(4); optimum t = 2.
  ConvexProgram p;
  const int t = p.add_variable(-kInf, kInf, "t");
  p.add_objective(t, 1.0);
  p.add_log_le(AffineExpr::term(t), 1.0 / kLn2, AffineExpr(4.0));

  const auto r = solve(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(std::abs(r.x(t) - 2.0) < 1e-6);
  CHECK(std::abs(r.objective - 2.0) < 1e-6);
  CHECK(r.kkt_residual <= 1e-7);
}

TEST_CASE("conflicting rate floor and cap is certified infeasible") {
  // r >= 5 clashes with r <= log2(1 + 1) = 1.
  ConvexProgram p;
  const int r = p.add_variable(-kInf, kInf, "r");
  p.add_objective(r, 1.0);
  p.add_affine_le(AffineExpr::term(r, -1.0).add_constant(5.0));
  p.add_log_le(AffineExpr::term(r), 1.0 / kLn2, AffineExpr(2.0));

  const auto res = solve(p);
  CHECK(res.status == SolveStatus::Infeasible);
  CHECK(res.x.size() == 0);
}

TEST_CASE("equality row pins a linear program corner") {
  // maximize x0 + 2*x1 with x0 + x1 = 1, x >= 0; optimum (0, 1), value 2.
  ConvexProgram p;
  const int a = p.add_variable(0.0, kInf);
  const int b = p.add_variable(0.0, kInf);
  p.add_objective(a, 1.0);
  p.add_objective(b, 2.0);
  p.add_equality(AffineExpr::term(a) += AffineExpr::term(b).add_constant(-1.0));

  const auto r = solve(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(std::abs(r.objective - 2.0) < 1e-6);
  CHECK(std::abs(r.x(a)) < 1e-6);
  CHECK(std::abs(r.x(b) - 1.0) < 1e-6);
}

TEST_CASE("squared-distance epigraph projects onto the box") {
  // minimize ||x - c||^2 over [0,1]^3 with c = (2, -1, 0.5): the program
  // maximizes -t with the distance in a squared-norm row.  Projection is
  // (1, 0, 0.5), squared distance 2.
  ConvexProgram p;
  const double c[3] = {2.0, -1.0, 0.5};
  int xs[3];
  for (int i = 0; i < 3; ++i) xs[i] = p.add_variable(0.0, 1.0);
  const int t = p.add_variable(-kInf, kInf);
  p.add_objective(t, -1.0);
  std::vector<AffineExpr> vec;
  for (int i = 0; i < 3; ++i) vec.push_back(AffineExpr::term(xs[i]).add_constant(-c[i]));
  p.add_quad_le(std::move(vec), AffineExpr::term(t));

  const auto r = solve(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(std::abs(r.objective + 2.0) < 1e-6);
  CHECK(std::abs(r.x(xs[0]) - 1.0) < 1e-5);
  CHECK(std::abs(r.x(xs[1])) < 1e-5);
  CHECK(std::abs(r.x(xs[2]) - 0.5) < 1e-5);
}

TEST_CASE("norm-ball linear maximization lands on the boundary") {
  // maximize 3x + 4y over x^2 + y^2 <= 1: optimum (0.6, 0.8), value 5.
  ConvexProgram p;
  const int x = p.add_variable();
  const int y = p.add_variable();
  p.add_objective(x, 3.0);
  p.add_objective(y, 4.0);
  p.add_quad_le({AffineExpr::term(x), AffineExpr::term(y)}, AffineExpr(1.0));

  const auto r = solve(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(std::abs(r.objective - 5.0) < 1e-6);
  CHECK(std::abs(r.x(x) - 0.6) < 1e-6);
  CHECK(std::abs(r.x(y) - 0.8) < 1e-6);
  CHECK(r.iterations < 70);
}

TEST_CASE("power split across two log rows equalizes") {
  // maximize r1 + r2 with r_i <= log2(1 + p_i) and p1 + p2 = 2, p >= 0.
  // Concavity makes the even split optimal: p = (1, 1), value 2.
  ConvexProgram p;
  const int p1 = p.add_variable(0.0, kInf, "p1");
  const int p2 = p.add_variable(0.0, kInf, "p2");
  const int r1 = p.add_variable(-kInf, kInf, "r1");
  const int r2 = p.add_variable(-kInf, kInf, "r2");
  p.add_objective(r1, 1.0);
  p.add_objective(r2, 1.0);
  p.add_log_le(AffineExpr::term(r1), 1.0 / kLn2, AffineExpr::term(p1).add_constant(1.0));
  p.add_log_le(AffineExpr::term(r2), 1.0 / kLn2, AffineExpr::term(p2).add_constant(1.0));
  p.add_equality(AffineExpr::term(p1) += AffineExpr::term(p2).add_constant(-2.0));

  const auto r = solve(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(std::abs(r.objective - 2.0) < 1e-6);
  CHECK(std::abs(r.x(p1) - 1.0) < 1e-5);
  CHECK(std::abs(r.x(p2) - 1.0) < 1e-5);
}

TEST_CASE("initial point outside the log domain is repaired") {
  // arg = y - 3 vanishes at the default initial point y = lb = 3; the
  // repair step must nudge y inward before iterating.  Optimum y = 5.
  ConvexProgram p;
  const int y = p.add_variable(3.0, 5.0, "y");
  const int r = p.add_variable(-kInf, kInf, "r");
  p.add_objective(r, 1.0);
  p.add_log_le(AffineExpr::term(r), 1.0 / kLn2, AffineExpr::term(y).add_constant(-3.0));
  p.set_initial(y, 3.0);

  const auto res = solve(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(std::abs(res.x(y) - 5.0) < 1e-5);
  CHECK(std::abs(res.objective - 1.0) < 1e-6);
}

TEST_CASE("bounds conflicting with an equality are infeasible") {
  ConvexProgram p;
  const int x = p.add_variable(0.0, 1.0);
  p.add_objective(x, 1.0);
  p.add_equality(AffineExpr::term(x).add_constant(-2.0));

  CHECK(solve(p).status == SolveStatus::Infeasible);
}

TEST_CASE("bounds-only program maximizes at the upper bound") {
  ConvexProgram p;
  const int x = p.add_variable(-1.0, 3.0);
  p.add_objective(x, 1.0);
  const auto r = solve(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(std::abs(r.x(x) - 3.0) < 1e-6);
}

TEST_CASE("agrees with the penalty-descent reference on seeded programs") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    CAPTURE(seed);
    const ConvexProgram p = random_program(seed);
    const auto ipm = solve(p);
    REQUIRE(ipm.status == SolveStatus::Optimal);
    CHECK(p.max_violation(ipm.x) <= 1e-7);

    const auto ref = cfnoma::test::penalty_descent(p);
    CHECK(ref.violation <= 1e-4);
    CHECK(std::abs(ipm.objective - ref.objective) <=
          2e-4 * (1.0 + std::abs(ref.objective)));
  }
}

TEST_CASE("identical programs produce identical results") {
  const ConvexProgram p = random_program(42);
  const auto a = solve(p);
  const auto b = solve(p);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
  REQUIRE(a.x.size() == b.x.size());
  for (int v = 0; v < a.x.size(); ++v) CHECK(a.x(v) == b.x(v));
}

TEST_CASE("warm starts converge to the same optimum") {
  auto build = [](double p1_init) {
    ConvexProgram p;
    const int p1 = p.add_variable(0.0, kInf);
    const int p2 = p.add_variable(0.0, kInf);
    const int r1 = p.add_variable(-kInf, kInf);
    const int r2 = p.add_variable(-kInf, kInf);
    p.add_objective(r1, 1.0);
    p.add_objective(r2, 1.0);
    p.add_log_le(AffineExpr::term(r1), 1.0 / kLn2, AffineExpr::term(p1).add_constant(1.0));
    p.add_log_le(AffineExpr::term(r2), 1.0 / kLn2, AffineExpr::term(p2).add_constant(1.0));
    p.add_equality(AffineExpr::term(p1) += AffineExpr::term(p2).add_constant(-2.0));
    p.set_initial(p1, p1_init);
    p.set_initial(p2, 2.0 - p1_init);
    return p;
  };
  const auto cold = solve(build(0.3));
  const auto warm = solve(build(1.9));
  REQUIRE(cold.status == SolveStatus::Optimal);
  REQUIRE(warm.status == SolveStatus::Optimal);
  CHECK(std::abs(cold.objective - warm.objective) < 1e-6);
}

TEST_CASE("violation audit and dump expose program structure") {
  ConvexProgram p;
  const int x = p.add_variable(0.0, 2.0, "power");
  p.add_objective(x, 1.0);
  p.add_log_le(AffineExpr::term(x, 0.1), 1.0, AffineExpr::term(x));

  Eigen::VectorXd bad(1);
  bad << 5.0;
  CHECK(p.max_violation(bad) >= 3.0);  // upper bound breached by 3
  Eigen::VectorXd edge(1);
  edge << 0.0;
  CHECK(p.max_violation(edge) == kInf);  // log argument collapses to zero
  Eigen::VectorXd ok(1);
  ok << 1.5;  // 0.1 * 1.5 = 0.15 <= ln(1.5) = 0.405
  CHECK(p.max_violation(ok) <= 1e-12);

  const std::string text = p.dump_string();
  CHECK(text.find("power") != std::string::npos);
  CHECK_FALSE(text.empty());
}
