// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cfnoma {

/// System-wide scenario description plus algorithm knobs.  Immutable in
/// spirit: validate() is called by every consumer entry point, and all
/// algorithm code treats a config as read-only.
struct SystemConfig {
  // --- scenario ---
  int num_antennas = 4;              ///< M, base-station antennas
  int num_users = 4;                 ///< K, single-antenna users
  double snr_db = 20.0;              ///< transmit SNR in dB (P_max / sigma2)
  double sigma2 = 1.0;               ///< noise power, linear watts
  double p_max = 100.0;              ///< total transmit power budget, linear watts
  double corr = 0.5;                 ///< channel correlation magnitude in [0, 0.999)
  std::vector<double> min_rates;     ///< per-user rate floors, bits/s/Hz (empty = all 0)
  std::uint64_t rng_seed = 1;

  // --- algorithm knobs ---
  double eps_admm = 1e-4;            ///< squared objective-difference stop, alternating scheme
  double eps_msca = 1e-4;            ///< squared objective-difference stop, matching scheme
  int t_admm_max = 100;              ///< outer-iteration cap, alternating scheme
  int t_msca_max = 20;               ///< outer-iteration cap, matching scheme
  int l_max = 3;                     ///< inner SCA passes per matching outer iteration
  double rho = 1.0;                  ///< penalty parameter, fixed
  int n_ini = 20;                    ///< multi-start count, alternating scheme

  // --- clustering knobs (cluster-based baseline) ---
  double cluster_tau = 0.7;          ///< normalized-correlation attach threshold
  int cluster_max_size = 0;          ///< 0 = auto: ceil(K / M)

  /// Rate floor for user k (0 when min_rates is empty).
  double r_min(int k) const;

  /// Effective cluster capacity (resolves the auto value).
  int cluster_capacity() const;

  /// Throws std::invalid_argument with a descriptive message on any
  /// out-of-range field.
  void validate() const;

  /// Parses a config from JSON, deriving p_max from snr_db (and sigma2)
  /// when not given explicitly.  Unknown keys are rejected.
  static SystemConfig from_json(const nlohmann::json& j);

  nlohmann::json to_json() const;
};

}  // namespace cfnoma
