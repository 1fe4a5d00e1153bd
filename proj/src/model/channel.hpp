// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "model/config.hpp"

namespace cfnoma {

/// K x M downlink channel, rows stored in ascending squared-norm order
/// (weakest user first).  gain_order[r] is the pre-sort index of the user
/// now sitting at rank r, so a freshly generated channel carries the
/// identity permutation.
class ChannelMatrix {
 public:
  /// Builds from arbitrary user rows; sorts them ascending by squared norm
  /// (stable, ties by original index) and records the permutation.
  static ChannelMatrix from_rows(const Eigen::MatrixXcd& rows);

  int num_users() const { return static_cast<int>(h_.rows()); }
  int num_antennas() const { return static_cast<int>(h_.cols()); }

  const Eigen::MatrixXcd& rows() const { return h_; }
  /// Channel row of the rank-k user (ascending gain), as a column vector.
  Eigen::VectorXcd user(int k) const { return h_.row(k).transpose(); }
  double gain(int k) const { return h_.row(k).squaredNorm(); }

  const std::vector<int>& gain_order() const { return order_; }

  /// Plain-text serialization: "K M" header, then one row per user as
  /// interleaved re/im pairs (row-major), then the permutation.  Exact
  /// round-trip via max-precision formatting.
  std::string to_text() const;
  static ChannelMatrix from_text(const std::string& text);

 private:
  ChannelMatrix() = default;
  Eigen::MatrixXcd h_;       // K x M, sorted rows
  std::vector<int> order_;   // rank -> original index
};

/// Hermitian exponential-correlation (Kac-Murdock-Szego) matrix with
/// complex ratio corr * e^{j phase}: entry (p, q) = ratio^(q-p) for q >= p.
Eigen::MatrixXcd correlation_matrix(int m, double corr, double phase);

/// Draws one correlated Rayleigh channel realization: i.i.d. CN(0,1) rows
/// multiplied by the Hermitian square root of correlation_matrix(M, corr,
/// phi) with phi ~ U[0, 2pi) per realization.  Deterministic under
/// (config, seed).
ChannelMatrix generate_channel(const SystemConfig& config, std::uint64_t seed);

}  // namespace cfnoma
