// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#include "convex/program.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cfnoma::convex {

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  vars_.insert(vars_.end(), o.vars_.begin(), o.vars_.end());
  coefs_.insert(coefs_.end(), o.coefs_.begin(), o.coefs_.end());
  constant_ += o.constant_;
  return *this;
}

AffineExpr AffineExpr::operator*(double s) const {
  AffineExpr out;
  out.vars_ = vars_;
  out.coefs_.reserve(coefs_.size());
  for (double c : coefs_) out.coefs_.push_back(c * s);
  out.constant_ = constant_ * s;
  return out;
}

void AffineExpr::canonicalize() {
  std::map<int, double> merged;
  for (std::size_t i = 0; i < vars_.size(); ++i) merged[vars_[i]] += coefs_[i];
  vars_.clear();
  coefs_.clear();
  for (const auto& [v, c] : merged) {
    if (c != 0.0) {
      vars_.push_back(v);
      coefs_.push_back(c);
    }
  }
}

double AffineExpr::eval(const Eigen::VectorXd& x) const {
  double acc = constant_;
  for (std::size_t i = 0; i < vars_.size(); ++i) acc += coefs_[i] * x(vars_[i]);
  return acc;
}

int ConvexProgram::add_variable(double lb, double ub, std::string name) {
  if (lb > ub) throw std::invalid_argument("program: empty variable range");
  lb_.push_back(lb);
  ub_.push_back(ub);
  init_.push_back(std::clamp(0.0, lb, ub));
  names_.push_back(std::move(name));
  obj_.conservativeResize(static_cast<Eigen::Index>(lb_.size()));
  obj_(static_cast<Eigen::Index>(lb_.size()) - 1) = 0.0;
  return static_cast<int>(lb_.size()) - 1;
}

void ConvexProgram::add_objective(int var, double coef) { obj_(var) += coef; }

namespace {
void check_expr(const AffineExpr& e, int n) {
  for (int v : e.vars())
    if (v < 0 || v >= n) throw std::invalid_argument("program: constraint references unknown variable");
}
}  // namespace

void ConvexProgram::add_affine_le(AffineExpr e) {
  e.canonicalize();
  check_expr(e, num_variables());
  affine_.push_back({std::move(e)});
}

void ConvexProgram::add_equality(AffineExpr e) {
  e.canonicalize();
  check_expr(e, num_variables());
  equality_.push_back({std::move(e)});
}

void ConvexProgram::add_quad_le(std::vector<AffineExpr> vec, AffineExpr bound) {
  for (auto& row : vec) {
    row.canonicalize();
    check_expr(row, num_variables());
  }
  bound.canonicalize();
  check_expr(bound, num_variables());
  // Drop identically-zero rows; they contribute nothing.
  std::erase_if(vec, [](const AffineExpr& r) { return r.empty() && r.constant() == 0.0; });
  quad_.push_back({std::move(vec), std::move(bound)});
}

void ConvexProgram::add_log_le(AffineExpr lhs, double scale, AffineExpr arg) {
  if (!(scale > 0.0)) throw std::invalid_argument("program: log scale must be positive");
  lhs.canonicalize();
  arg.canonicalize();
  check_expr(lhs, num_variables());
  check_expr(arg, num_variables());
  log_.push_back({std::move(lhs), scale, std::move(arg)});
}

void ConvexProgram::set_initial(int var, double value) {
  init_.at(static_cast<std::size_t>(var)) = value;
}

Eigen::VectorXd ConvexProgram::initial_point() const {
  Eigen::VectorXd x(num_variables());
  for (int v = 0; v < num_variables(); ++v) x(v) = init_[static_cast<std::size_t>(v)];
  return x;
}

double ConvexProgram::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  for (int v = 0; v < num_variables(); ++v) {
    worst = std::max(worst, lb_[static_cast<std::size_t>(v)] - x(v));
    worst = std::max(worst, x(v) - ub_[static_cast<std::size_t>(v)]);
  }
  for (const auto& c : affine_) worst = std::max(worst, c.expr.eval(x));
  for (const auto& c : equality_) worst = std::max(worst, std::abs(c.expr.eval(x)));
  for (const auto& c : quad_) {
    double lhs = 0.0;
    for (const auto& row : c.vec) {
      const double v = row.eval(x);
      lhs += v * v;
    }
    worst = std::max(worst, lhs - c.bound.eval(x));
  }
  for (const auto& c : log_) {
    const double arg = c.arg.eval(x);
    if (arg <= 0.0) return kInf;
    worst = std::max(worst, c.lhs.eval(x) - c.scale * std::log(arg));
  }
  return worst;
}

std::string ConvexProgram::var_name(int v) const {
  const auto& n = names_[static_cast<std::size_t>(v)];
  if (!n.empty()) return n;
  return "x" + std::to_string(v);
}

void ConvexProgram::format_expr(std::ostream& os, const AffineExpr& e) const {
  bool first = true;
  for (std::size_t i = 0; i < e.vars().size(); ++i) {
    if (!first) os << " + ";
    os << e.coefs()[i] << "*" << var_name(e.vars()[i]);
    first = false;
  }
  if (e.constant() != 0.0 || first) {
    if (!first) os << " + ";
    os << e.constant();
  }
}

void ConvexProgram::dump(std::ostream& os) const {
  os << "maximize ";
  bool first = true;
  for (int v = 0; v < num_variables(); ++v) {
    if (obj_(v) == 0.0) continue;
    if (!first) os << " + ";
    os << obj_(v) << "*" << var_name(v);
    first = false;
  }
  if (first) os << "0";
  os << "\n";
  for (int v = 0; v < num_variables(); ++v) {
    os << "var " << var_name(v) << " in [" << lb_[static_cast<std::size_t>(v)] << ", "
       << ub_[static_cast<std::size_t>(v)] << "] start " << init_[static_cast<std::size_t>(v)]
       << "\n";
  }
  for (const auto& c : affine_) {
    os << "affine: ";
    format_expr(os, c.expr);
    os << " <= 0\n";
  }
  for (const auto& c : equality_) {
    os << "eq: ";
    format_expr(os, c.expr);
    os << " = 0\n";
  }
  for (const auto& c : quad_) {
    os << "quad: ";
    for (std::size_t i = 0; i < c.vec.size(); ++i) {
      os << (i ? " + (" : "(");
      format_expr(os, c.vec[i]);
      os << ")^2";
    }
    if (c.vec.empty()) os << "0";
    os << " <= ";
    format_expr(os, c.bound);
    os << "\n";
  }
  for (const auto& c : log_) {
    os << "log: ";
    format_expr(os, c.lhs);
    os << " <= " << c.scale << " * ln(";
    format_expr(os, c.arg);
    os << ")\n";
  }
}

std::string ConvexProgram::dump_string() const {
  std::ostringstream os;
  dump(os);
  return os.str();
}

}  // namespace cfnoma::convex
