#pragma once

#include <random>
#include <vector>

#include "nhdp/corpus.hpp"
#include "nhdp/global_model.hpp"
#include "nhdp/random.hpp"

namespace fixture {

// Model with random topic and stick parameters, so every expectation differs.
inline nhdp::GlobalModel random_model(const nhdp::TruncatedTree& tree, int vocab, std::uint64_t seed,
                                      nhdp::Hyperparameters hyper = {}) {
  auto m = nhdp::make_prior_model(tree, hyper, vocab);
  nhdp::Rng rng(seed);
  std::uniform_real_distribution<double> lam(0.05, 5.0), stick(0.5, 8.0);
  for (double& x : m.lambda) x = lam(rng);
  for (double& x : m.tau1) x = stick(rng);
  for (double& x : m.tau2) x = stick(rng);
  return m;
}

inline nhdp::BowDocument random_document(int vocab, int words, std::uint64_t seed) {
  nhdp::Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, vocab - 1);
  std::vector<nhdp::TermCount> entries;
  for (int k = 0; k < words; ++k) entries.push_back({pick(rng), 1});
  return nhdp::make_document(static_cast<std::int64_t>(seed), std::move(entries));
}

}  // namespace fixture
