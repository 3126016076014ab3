#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nhdp/hyperparameters.hpp"
#include "nhdp/tree.hpp"

namespace nhdp {

/// Global variational parameters: a Dirichlet q(theta_i) = Dir(lambda_i) per
/// node and a Beta q(V) = Beta(tau1, tau2) per global stick. Stick arrays are
/// indexed by the child's flat id; entries for the root topic and for last
/// children (whose stick is closed at 1 by the truncation) are carried but
/// never read.
struct GlobalModel {
  TruncatedTree tree;
  Hyperparameters hyper;
  int vocab_size = 0;
  std::vector<double> lambda;  // [node * vocab_size + term]
  std::vector<double> tau1;
  std::vector<double> tau2;
  std::int64_t step_count = 0;

  std::span<const double> topic(int node) const {
    return std::span<const double>(lambda).subspan(static_cast<std::size_t>(node) * static_cast<std::size_t>(vocab_size),
                                                   static_cast<std::size_t>(vocab_size));
  }
  std::span<double> topic(int node) {
    return std::span<double>(lambda).subspan(static_cast<std::size_t>(node) * static_cast<std::size_t>(vocab_size),
                                             static_cast<std::size_t>(vocab_size));
  }

  /// Throws NumericError if any parameter is not strictly positive and finite.
  void validate() const;
};

/// Model with every topic at the base measure (lambda = lambda0) and sticks
/// at their prior.
GlobalModel make_prior_model(const TruncatedTree& tree, const Hyperparameters& hyper, int vocab_size);

/// tau1 = 1, tau2 = alpha everywhere.
std::pair<std::vector<double>, std::vector<double>> init_sticks(const TruncatedTree& tree,
                                                                const Hyperparameters& hyper);

/// Expected stick weight E[V_j] prod_{m<j} E[1 - V_m] of each node within its
/// parent's DP under the plug-in means of q (1 for the root).
std::vector<double> expected_transition_weights(const GlobalModel& model);
/// Product of expected transition weights along the path from the top.
std::vector<double> expected_node_weights(const GlobalModel& model);

/// Read-only expectations under q computed once per global step and shared
/// by all documents of the step.
struct ModelExpectations {
  const GlobalModel* model = nullptr;
  std::int64_t step = 0;
  std::vector<double> elog_theta;  // [node * V + term], psi(lambda) - psi(sum lambda)
  /// E_q[ln p(z = node | V)]: E ln V_node + sum over earlier siblings of
  /// E ln(1 - V). Zero for the root; last children contribute no E ln V.
  std::vector<double> elog_pick;

  explicit ModelExpectations(const GlobalModel& model);

  const TruncatedTree& tree() const { return model->tree; }
  const Hyperparameters& hyper() const { return model->hyper; }
  int vocab_size() const { return model->vocab_size; }
  double elog_theta_at(int node, int term) const {
    return elog_theta[static_cast<std::size_t>(node) * static_cast<std::size_t>(model->vocab_size) +
                      static_cast<std::size_t>(term)];
  }
};

}  // namespace nhdp
