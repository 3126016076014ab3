#include "nhdp/global_model.hpp"

#include <cmath>
#include <tuple>

#include "nhdp/errors.hpp"
#include "nhdp/specfun.hpp"

namespace nhdp {

void GlobalModel::validate() const {
  const auto positive = [](const std::vector<double>& xs) {
    for (double x : xs) {
      if (!(x > 0.0) || !std::isfinite(x)) return false;
    }
    return true;
  };
  if (lambda.size() != static_cast<std::size_t>(tree.size()) * static_cast<std::size_t>(vocab_size) ||
      tau1.size() != static_cast<std::size_t>(tree.size()) || tau2.size() != tau1.size()) {
    throw NumericError("global model arrays do not match the tree");
  }
  if (!positive(lambda)) throw NumericError("topic parameters must be strictly positive");
  if (!positive(tau1) || !positive(tau2)) throw NumericError("stick parameters must be strictly positive");
}

std::pair<std::vector<double>, std::vector<double>> init_sticks(const TruncatedTree& tree,
                                                                const Hyperparameters& hyper) {
  const auto n = static_cast<std::size_t>(tree.size());
  return {std::vector<double>(n, 1.0), std::vector<double>(n, hyper.alpha)};
}

GlobalModel make_prior_model(const TruncatedTree& tree, const Hyperparameters& hyper, int vocab_size) {
  hyper.validate();
  if (vocab_size < 1) throw ConfigError("vocabulary size must be >= 1");
  GlobalModel model;
  model.tree = tree;
  model.hyper = hyper;
  model.vocab_size = vocab_size;
  model.lambda.assign(static_cast<std::size_t>(tree.size()) * static_cast<std::size_t>(vocab_size), hyper.lambda0);
  std::tie(model.tau1, model.tau2) = init_sticks(tree, hyper);
  return model;
}

std::vector<double> expected_transition_weights(const GlobalModel& model) {
  const auto& tree = model.tree;
  std::vector<double> weight(static_cast<std::size_t>(tree.size()), 1.0);
  for (int i = 0; i < tree.size(); ++i) {
    if (tree.include_root() && i == 0) continue;
    double remaining = 1.0;
    for (int s : tree.siblings(i)) {
      const auto k = static_cast<std::size_t>(s);
      const double mean = tree.is_last_child(s) ? 1.0 : model.tau1[k] / (model.tau1[k] + model.tau2[k]);
      if (s == i) {
        weight[static_cast<std::size_t>(i)] = remaining * mean;
        break;
      }
      remaining *= 1.0 - mean;
    }
  }
  return weight;
}

std::vector<double> expected_node_weights(const GlobalModel& model) {
  auto weight = expected_transition_weights(model);
  for (int i = 0; i < model.tree.size(); ++i) {
    const int p = model.tree.parent(i);
    if (p >= 0) weight[static_cast<std::size_t>(i)] *= weight[static_cast<std::size_t>(p)];
  }
  return weight;
}

ModelExpectations::ModelExpectations(const GlobalModel& m) : model(&m), step(m.step_count) {
  const auto& tree = m.tree;
  const auto V = static_cast<std::size_t>(m.vocab_size);
  elog_theta.resize(m.lambda.size());
  for (int i = 0; i < tree.size(); ++i) {
    const auto off = static_cast<std::size_t>(i) * V;
    expect_log_dirichlet(std::span<const double>(m.lambda).subspan(off, V),
                         std::span<double>(elog_theta).subspan(off, V));
  }
  elog_pick.assign(static_cast<std::size_t>(tree.size()), 0.0);
  for (int i = 0; i < tree.size(); ++i) {
    if (tree.include_root() && i == 0) continue;
    double acc = 0.0;
    for (int s : tree.siblings(i)) {
      const auto k = static_cast<std::size_t>(s);
      if (s == i) {
        if (!tree.is_last_child(s)) acc += expect_log_beta(m.tau1[k], m.tau2[k]).e_log;
        break;
      }
      acc += expect_log_beta(m.tau1[k], m.tau2[k]).e_log1m;
    }
    elog_pick[static_cast<std::size_t>(i)] = acc;
  }
}

}  // namespace nhdp
