#pragma once

namespace nhdp {

/// Prior settings shared by the generative process and inference. Defaults
/// follow the large-corpus experiments: alpha = 5, beta = 1,
/// (gamma1, gamma2) = (1/3, 2/3), lambda0 = 0.1.
struct Hyperparameters {
  double alpha = 5.0;           // global DP concentration (sticks Beta(1, alpha))
  double beta = 1.0;            // document DP concentration (sticks Beta(1, beta))
  double gamma1 = 1.0 / 3.0;    // switch prior Beta(gamma1, gamma2)
  double gamma2 = 2.0 / 3.0;
  double lambda0 = 0.1;         // symmetric Dirichlet base for topics

  void validate() const;  // throws ConfigError unless all are positive
  bool operator==(const Hyperparameters&) const = default;
};

}  // namespace nhdp
