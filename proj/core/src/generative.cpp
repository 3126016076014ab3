#include "nhdp/generative.hpp"

#include <algorithm>
#include <cmath>

#include "nhdp/errors.hpp"

namespace nhdp {

namespace {

// Visits every Dirichlet process of the tree as (key, children).
template <typename Fn>
void for_each_dp(const TruncatedTree& tree, Fn&& fn) {
  if (!tree.include_root()) fn(-1, tree.top_level());
  for (int i = 0; i < tree.size(); ++i) {
    const auto kids = tree.children(i);
    if (!kids.empty()) fn(i, kids);
  }
}

std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) cdf[k] = (acc += p[k]);
  return cdf;
}

int draw_from_cdf(const std::vector<double>& cdf, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, cdf.back());
  const double u = unif(rng);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

SampledTree SampledTree::from_parts(TruncatedTree tree, std::vector<std::vector<double>> topics,
                                    std::vector<double> sticks) {
  const auto n = static_cast<std::size_t>(tree.size());
  if (topics.size() != n || sticks.size() != n) {
    throw ConfigError("planted tree needs one topic and one stick per node");
  }
  SampledTree out;
  out.transition.assign(n, 1.0);
  for_each_dp(tree, [&](int, std::span<const int> kids) {
    double remaining = 1.0;
    for (int c : kids) {
      auto& v = sticks[static_cast<std::size_t>(c)];
      if (tree.is_last_child(c)) v = 1.0;
      out.transition[static_cast<std::size_t>(c)] = v * remaining;
      remaining *= 1.0 - v;
    }
  });
  if (tree.include_root()) sticks[0] = 1.0;
  for (const auto& t : topics) out.topic_cdf.push_back(cumulative(t));
  out.tree = std::move(tree);
  out.topics = std::move(topics);
  out.sticks = std::move(sticks);
  return out;
}

SampledTree sample_global_tree(const Hyperparameters& hyper, const TruncatedTree& tree, int vocab_size,
                               Rng& rng) {
  hyper.validate();
  if (vocab_size < 1) throw ConfigError("vocabulary size must be >= 1");
  const auto n = static_cast<std::size_t>(tree.size());
  std::vector<std::vector<double>> topics;
  topics.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    topics.push_back(sample_symmetric_dirichlet(rng, hyper.lambda0, static_cast<std::size_t>(vocab_size)));
  }
  std::vector<double> sticks(n, 1.0);
  for_each_dp(tree, [&](int, std::span<const int> kids) {
    for (int c : kids) {
      if (!tree.is_last_child(c)) sticks[static_cast<std::size_t>(c)] = sample_beta(rng, 1.0, hyper.alpha);
    }
  });
  return SampledTree::from_parts(tree, std::move(topics), std::move(sticks));
}

SampledDocumentProcess sample_document_process(const SampledTree& global, const Hyperparameters& hyper,
                                               Rng& rng) {
  const auto& tree = global.tree;
  const auto n = static_cast<std::size_t>(tree.size());
  SampledDocumentProcess doc;
  doc.dps.resize(n + 1);
  doc.transition.assign(n, 0.0);
  if (tree.include_root()) doc.transition[0] = 1.0;

  for_each_dp(tree, [&](int key, std::span<const int> kids) {
    auto& dp = doc.dps[static_cast<std::size_t>(key + 1)];
    std::vector<double> base;
    for (int c : kids) base.push_back(global.transition[static_cast<std::size_t>(c)]);
    double remaining = 1.0;
    for (std::size_t j = 0; j < kids.size(); ++j) {
      const double v = (j + 1 == kids.size()) ? 1.0 : sample_beta(rng, 1.0, hyper.beta);
      const int target = kids[sample_categorical(rng, base)];
      dp.sticks.push_back(v);
      dp.pointers.push_back(target);
      doc.transition[static_cast<std::size_t>(target)] += v * remaining;
      remaining *= 1.0 - v;
    }
  });

  doc.switches.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!tree.is_truncation_leaf(static_cast<int>(i))) {
      doc.switches[i] = sample_beta(rng, hyper.gamma1, hyper.gamma2);
    }
  }
  return doc;
}

std::vector<double> node_termination_distribution(const SampledDocumentProcess& doc,
                                                  const SampledTree& global) {
  const auto& tree = global.tree;
  const auto n = static_cast<std::size_t>(tree.size());
  // reach[i]: probability a word's path arrives at node i without stopping above it.
  std::vector<double> reach(n, 0.0), prob(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int p = tree.parent(static_cast<int>(i));
    const double arrive = p < 0 ? 1.0 : reach[static_cast<std::size_t>(p)] * (1.0 - doc.switches[static_cast<std::size_t>(p)]);
    reach[i] = arrive * doc.transition[i];
    prob[i] = reach[i] * doc.switches[i];
  }
  return prob;
}

SampledDocument sample_document(const SampledTree& tree, const Hyperparameters& hyper, int n_words,
                                Rng& rng, std::int64_t doc_id) {
  if (n_words < 1) throw ConfigError("n_words must be >= 1");
  SampledDocument out;
  out.process = sample_document_process(tree, hyper, rng);
  const auto node_cdf = cumulative(node_termination_distribution(out.process, tree));
  std::vector<TermCount> entries;
  entries.reserve(static_cast<std::size_t>(n_words));
  out.assignments.reserve(static_cast<std::size_t>(n_words));
  for (int k = 0; k < n_words; ++k) {
    const int node = draw_from_cdf(node_cdf, rng);
    const int term = draw_from_cdf(tree.topic_cdf[static_cast<std::size_t>(node)], rng);
    out.assignments.push_back({term, node});
    entries.push_back({term, 1});
  }
  out.document = make_document(doc_id, std::move(entries));
  return out;
}

SampledCorpus sample_corpus(const SampledTree& tree, const Hyperparameters& hyper, int n_docs,
                            int words_per_doc, std::uint64_t seed) {
  SampledCorpus out;
  out.corpus.vocabulary = Vocabulary::numbered(tree.vocab_size());
  out.corpus.documents.reserve(static_cast<std::size_t>(n_docs));
  for (int d = 0; d < n_docs; ++d) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(d)});
    auto doc = sample_document(tree, hyper, words_per_doc, rng, d);
    out.corpus.documents.push_back(std::move(doc.document));
    out.assignments.push_back(std::move(doc.assignments));
  }
  return out;
}

}  // namespace nhdp
