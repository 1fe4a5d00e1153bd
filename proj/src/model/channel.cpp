// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#include "model/channel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "model/rng.hpp"

namespace cfnoma {

ChannelMatrix ChannelMatrix::from_rows(const Eigen::MatrixXcd& rows) {
  if (rows.rows() < 1 || rows.cols() < 1)
    throw std::invalid_argument("channel: empty matrix");
  if (!rows.allFinite()) throw std::invalid_argument("channel: non-finite entries");

  const int k = static_cast<int>(rows.rows());
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return rows.row(a).squaredNorm() < rows.row(b).squaredNorm();
  });

  ChannelMatrix out;
  out.h_.resize(rows.rows(), rows.cols());
  for (int r = 0; r < k; ++r) out.h_.row(r) = rows.row(order[static_cast<std::size_t>(r)]);
  out.order_ = std::move(order);
  return out;
}

std::string ChannelMatrix::to_text() const {
  std::ostringstream os;
  char buf[64];
  os << num_users() << ' ' << num_antennas() << '\n';
  for (int r = 0; r < num_users(); ++r) {
    for (int c = 0; c < num_antennas(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g", h_(r, c).real(), h_(r, c).imag());
      os << (c ? " " : "") << buf;
    }
    os << '\n';
  }
  for (int r = 0; r < num_users(); ++r) os << (r ? " " : "") << order_[static_cast<std::size_t>(r)];
  os << '\n';
  return os.str();
}

ChannelMatrix ChannelMatrix::from_text(const std::string& text) {
  std::istringstream is(text);
  int k = 0, m = 0;
  if (!(is >> k >> m) || k < 1 || m < 1)
    throw std::invalid_argument("channel: malformed header");
  ChannelMatrix out;
  out.h_.resize(k, m);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < m; ++c) {
      double re = 0, im = 0;
      if (!(is >> re >> im)) throw std::invalid_argument("channel: truncated row data");
      out.h_(r, c) = {re, im};
    }
  out.order_.resize(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r)
    if (!(is >> out.order_[static_cast<std::size_t>(r)]))
      throw std::invalid_argument("channel: truncated permutation");
  return out;
}

Eigen::MatrixXcd correlation_matrix(int m, double corr, double phase) {
  const std::complex<double> c =
      corr * std::complex<double>(std::cos(phase), std::sin(phase));
  Eigen::MatrixXcd r(m, m);
  for (int p = 0; p < m; ++p) {
    r(p, p) = 1.0;
    std::complex<double> acc = 1.0;
    for (int q = p + 1; q < m; ++q) {
      acc *= c;
      r(p, q) = acc;
      r(q, p) = std::conj(acc);
    }
  }
  return r;
}

ChannelMatrix generate_channel(const SystemConfig& config, std::uint64_t seed) {
  config.validate();
  const int k = config.num_users;
  const int m = config.num_antennas;
  Rng rng(seed);

  // Complex correlation ratio with a fresh phase per realization.
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Eigen::MatrixXcd r = correlation_matrix(m, config.corr, phi);

  // Hermitian square root; eigenvalues clamped at zero as numerical safety
  // (the matrix is positive definite for corr < 1).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXcd sqrt_r =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();

  Eigen::MatrixXcd iid(k, m);
  for (int row = 0; row < k; ++row)
    for (int col = 0; col < m; ++col) iid(row, col) = rng.cnormal();

  // Sort once, then rebuild from the sorted rows so the stored permutation
  // is the identity: generated channels are already in canonical user order.
  ChannelMatrix sorted = ChannelMatrix::from_rows(iid * sqrt_r);
  return ChannelMatrix::from_rows(sorted.rows());
}

}  // namespace cfnoma
