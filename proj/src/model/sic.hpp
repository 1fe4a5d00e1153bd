// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

#include <Eigen/Dense>

namespace cfnoma {

/// Binary K x K decode-indicator matrix: entry (i, k) = 1 means user i
/// decodes (and cancels) user k's signal.  Structural rules, enforced at
/// every mutation:
///   * diagonal fixed to 1 (every user decodes itself), and
///   * mutual exclusion: (i, k) and (k, i) cannot both be active.
class SicMatrix {
 public:
  /// No cross-decoding at all (pure spatial multiplexing).
  static SicMatrix identity(int k);

  /// Full chain in ascending-gain order: every user decodes all weaker
  /// users, i.e. entry (i, k) = 1 for all i > k.
  static SicMatrix chain(int k);

  /// Validates and adopts an arbitrary 0/1 matrix.
  static SicMatrix from_matrix(const Eigen::MatrixXi& a);

  int num_users() const { return static_cast<int>(a_.rows()); }
  bool decodes(int i, int k) const { return a_(i, k) != 0; }
  const Eigen::MatrixXi& matrix() const { return a_; }

  /// Activates/deactivates a cross-decode; throws on diagonal writes and
  /// mutual-exclusion violations.
  void set(int i, int k, bool active);

  /// Number of directed decode operations counted from both endpoints:
  /// sum over k, j != k of a(k,j) + a(j,k).  Equals twice the active
  /// off-diagonal count; a full chain scores K(K-1).
  int complexity() const;

  bool operator==(const SicMatrix& other) const { return a_ == other.a_; }

 private:
  explicit SicMatrix(Eigen::MatrixXi a) : a_(std::move(a)) {}
  Eigen::MatrixXi a_;
};

}  // namespace cfnoma
