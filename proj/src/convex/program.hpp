// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

#include <Eigen/Dense>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace cfnoma::convex {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sparse affine expression: sum of coef * x[var] + constant.
class AffineExpr {
 public:
  AffineExpr() = default;
  explicit AffineExpr(double constant) : constant_(constant) {}

  static AffineExpr term(int var, double coef = 1.0) {
    AffineExpr e;
    e.add(var, coef);
    return e;
  }

  AffineExpr& add(int var, double coef) {
    if (coef != 0.0) {
      vars_.push_back(var);
      coefs_.push_back(coef);
    }
    return *this;
  }
  AffineExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr operator*(double s) const;

  /// Merges duplicate variables and drops zero coefficients (sorted order).
  void canonicalize();

  double eval(const Eigen::VectorXd& x) const;

  double constant() const { return constant_; }
  const std::vector<int>& vars() const { return vars_; }
  const std::vector<double>& coefs() const { return coefs_; }
  bool empty() const { return vars_.empty(); }

 private:
  std::vector<int> vars_;
  std::vector<double> coefs_;
  double constant_ = 0.0;
};

/// expr <= 0
struct AffineCon {
  AffineExpr expr;
};

/// expr == 0
struct EqualityCon {
  AffineExpr expr;
};

/// sum_i vec[i](x)^2 <= bound(x)
struct QuadCon {
  std::vector<AffineExpr> vec;
  AffineExpr bound;
};

/// lhs(x) <= scale * ln(arg(x)), with implicit domain arg(x) > 0
struct LogCon {
  AffineExpr lhs;
  double scale = 1.0;
  AffineExpr arg;
};

/// Smooth convex program over real scalars: linear objective (maximize),
/// box bounds, affine equalities/inequalities, squared-norm ("quadratic
/// cone") rows and logarithm epigraph rows.  Complex quantities enter as
/// re/im variable pairs; base-2 logs as natural logs scaled by 1/ln2.
class ConvexProgram {
 public:
  int add_variable(double lb = -kInf, double ub = kInf, std::string name = {});
  int num_variables() const { return static_cast<int>(lb_.size()); }

  /// Accumulates a maximize-objective coefficient.
  void add_objective(int var, double coef);

  void add_affine_le(AffineExpr e);
  void add_equality(AffineExpr e);
  void add_quad_le(std::vector<AffineExpr> vec, AffineExpr bound);
  void add_log_le(AffineExpr lhs, double scale, AffineExpr arg);

  /// Initial primal guess (defaults to 0 clipped into bounds).
  void set_initial(int var, double value);

  // --- introspection (solver + tests) ---
  const Eigen::VectorXd& objective() const { return obj_; }
  double lower_bound(int v) const { return lb_[static_cast<std::size_t>(v)]; }
  double upper_bound(int v) const { return ub_[static_cast<std::size_t>(v)]; }
  const std::vector<AffineCon>& affine_cons() const { return affine_; }
  const std::vector<EqualityCon>& equality_cons() const { return equality_; }
  const std::vector<QuadCon>& quad_cons() const { return quad_; }
  const std::vector<LogCon>& log_cons() const { return log_; }

  Eigen::VectorXd initial_point() const;
  double eval_objective(const Eigen::VectorXd& x) const { return obj_.dot(x); }

  /// Largest constraint/bound violation at x (log-domain violations count
  /// as +inf).  Used by feasibility audits in tests.
  double max_violation(const Eigen::VectorXd& x) const;

  /// Human-readable listing of variables and constraint rows.
  void dump(std::ostream& os) const;
  std::string dump_string() const;

 private:
  std::string var_name(int v) const;
  void format_expr(std::ostream& os, const AffineExpr& e) const;

  std::vector<double> lb_, ub_, init_;
  std::vector<std::string> names_;
  Eigen::VectorXd obj_;
  std::vector<AffineCon> affine_;
  std::vector<EqualityCon> equality_;
  std::vector<QuadCon> quad_;
  std::vector<LogCon> log_;
};

}  // namespace cfnoma::convex
