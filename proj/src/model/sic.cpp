// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#include "model/sic.hpp"

#include <stdexcept>

namespace cfnoma {

SicMatrix SicMatrix::identity(int k) {
  if (k < 1) throw std::invalid_argument("sic: need at least one user");
  return SicMatrix(Eigen::MatrixXi::Identity(k, k));
}

SicMatrix SicMatrix::chain(int k) {
  if (k < 1) throw std::invalid_argument("sic: need at least one user");
  Eigen::MatrixXi a = Eigen::MatrixXi::Identity(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < i; ++j) a(i, j) = 1;
  return SicMatrix(a);
}

SicMatrix SicMatrix::from_matrix(const Eigen::MatrixXi& a) {
  if (a.rows() < 1 || a.rows() != a.cols())
    throw std::invalid_argument("sic: matrix must be square and non-empty");
  const int k = static_cast<int>(a.rows());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (a(i, j) != 0 && a(i, j) != 1)
        throw std::invalid_argument("sic: entries must be 0 or 1");
  for (int i = 0; i < k; ++i)
    if (a(i, i) != 1) throw std::invalid_argument("sic: diagonal must be 1");
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (a(i, j) + a(j, i) > 1)
        throw std::invalid_argument("sic: mutual exclusion violated");
  return SicMatrix(a);
}

void SicMatrix::set(int i, int k, bool active) {
  if (i == k) throw std::invalid_argument("sic: diagonal is fixed");
  if (active && a_(k, i) != 0)
    throw std::invalid_argument("sic: mutual exclusion violated");
  a_(i, k) = active ? 1 : 0;
}

int SicMatrix::complexity() const {
  const int k = num_users();
  int total = 0;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      if (a != b) total += a_(a, b) + a_(b, a);
  return total;
}

}  // namespace cfnoma
