// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cfnoma {

/// Derives a child seed from a base seed and a list of index parts
/// (splitmix64 chaining).  Used so that every instance / multi-start /
/// restart draws from its own deterministic stream.
std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

/// Deterministic random source.  All distributions are implemented by hand
/// on top of the (fully specified) mt19937_64 engine so that streams are
/// bit-identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1): 53-bit mantissa construction.
  double uniform();

  /// Uniform double in [a, b).
  double uniform(double a, double b);

  /// Standard normal via Box-Muller (second value cached).
  double normal();

  /// Circularly-symmetric complex normal CN(0, 1): one uniform pair per draw.
  std::complex<double> cnormal();

 private:
  std::mt19937_64 eng_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace cfnoma
