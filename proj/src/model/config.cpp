// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors

#include "model/config.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace cfnoma {

double SystemConfig::r_min(int k) const {
  if (min_rates.empty()) return 0.0;
  return min_rates.at(static_cast<std::size_t>(k));
}

int SystemConfig::cluster_capacity() const {
  if (cluster_max_size > 0) return cluster_max_size;
  return (num_users + num_antennas - 1) / num_antennas;
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (num_antennas < 1) fail("num_antennas must be >= 1");
  if (num_users < 1) fail("num_users must be >= 1");
  if (!(sigma2 > 0.0)) fail("sigma2 must be > 0");
  if (!(p_max > 0.0)) fail("p_max must be > 0");
  if (!(corr >= 0.0) || corr >= 1.0) fail("corr must lie in [0, 1)");
  if (corr >= 0.999) fail("corr >= 0.999 is numerically degenerate (correlation matrix near-singular)");
  if (!min_rates.empty() && static_cast<int>(min_rates.size()) != num_users)
    fail("min_rates must be empty or have num_users entries");
  for (double r : min_rates)
    if (!(r >= 0.0)) fail("min_rates entries must be >= 0");
  if (!(eps_admm > 0.0)) fail("eps_admm must be > 0");
  if (!(eps_msca > 0.0)) fail("eps_msca must be > 0");
  if (t_admm_max < 1) fail("t_admm_max must be >= 1");
  if (t_msca_max < 1) fail("t_msca_max must be >= 1");
  if (l_max < 1) fail("l_max must be >= 1");
  if (!(rho > 0.0)) fail("rho must be > 0");
  if (n_ini < 1) fail("n_ini must be >= 1");
  if (!(cluster_tau > 0.0) || !(cluster_tau < 1.0)) fail("cluster_tau must lie in (0, 1)");
  if (cluster_max_size < 0) fail("cluster_max_size must be >= 0");
}

SystemConfig SystemConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "num_antennas", "num_users", "snr_db", "sigma2", "p_max", "corr",
      "min_rates", "rng_seed", "eps_admm", "eps_msca", "t_admm_max",
      "t_msca_max", "l_max", "rho", "n_ini", "cluster_tau", "cluster_max_size"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");

  SystemConfig c;
  c.num_antennas = j.value("num_antennas", c.num_antennas);
  c.num_users = j.value("num_users", c.num_users);
  c.snr_db = j.value("snr_db", c.snr_db);
  c.sigma2 = j.value("sigma2", 1.0);
  // p_max defaults to sigma2 * 10^(snr_db/10) so only the ratio matters.
  c.p_max = j.contains("p_max") ? j["p_max"].get<double>()
                                : c.sigma2 * std::pow(10.0, c.snr_db / 10.0);
  c.corr = j.value("corr", c.corr);
  if (j.contains("min_rates")) {
    if (j["min_rates"].is_number()) {
      c.min_rates.assign(static_cast<std::size_t>(c.num_users), j["min_rates"].get<double>());
    } else {
      c.min_rates = j["min_rates"].get<std::vector<double>>();
    }
  }
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.eps_admm = j.value("eps_admm", c.eps_admm);
  c.eps_msca = j.value("eps_msca", c.eps_msca);
  c.t_admm_max = j.value("t_admm_max", c.t_admm_max);
  c.t_msca_max = j.value("t_msca_max", c.t_msca_max);
  c.l_max = j.value("l_max", c.l_max);
  c.rho = j.value("rho", c.rho);
  c.n_ini = j.value("n_ini", c.n_ini);
  c.cluster_tau = j.value("cluster_tau", c.cluster_tau);
  c.cluster_max_size = j.value("cluster_max_size", c.cluster_max_size);
  c.validate();
  return c;
}

nlohmann::json SystemConfig::to_json() const {
  nlohmann::json j{{"num_antennas", num_antennas},
                   {"num_users", num_users},
                   {"snr_db", snr_db},
                   {"sigma2", sigma2},
                   {"p_max", p_max},
                   {"corr", corr},
                   {"rng_seed", rng_seed},
                   {"eps_admm", eps_admm},
                   {"eps_msca", eps_msca},
                   {"t_admm_max", t_admm_max},
                   {"t_msca_max", t_msca_max},
                   {"l_max", l_max},
                   {"rho", rho},
                   {"n_ini", n_ini},
                   {"cluster_tau", cluster_tau},
                   {"cluster_max_size", cluster_max_size}};
  if (!min_rates.empty()) j["min_rates"] = min_rates;
  return j;
}

}  // namespace cfnoma
