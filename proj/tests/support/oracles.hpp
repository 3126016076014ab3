#pragma once

// Token-level reference computations. Everything here works on one token
// at a time and walks explicit ancestor chains, sharing no code with the
// library beyond the tree layout and the digamma function.

#include <algorithm>
#include <cmath>
#include <vector>

#include "nhdp/corpus.hpp"
#include "nhdp/generative.hpp"
#include "nhdp/global_model.hpp"
#include "nhdp/local_inference.hpp"
#include "nhdp/specfun.hpp"

namespace oracle {

inline std::vector<int> tokens(const nhdp::BowDocument& doc) {
  std::vector<int> out;
  for (const auto& e : doc.entries)
    for (int c = 0; c < e.count; ++c) out.push_back(e.term);
  return out;
}

inline double elog(double a, double b) { return nhdp::digamma(a) - nhdp::digamma(a + b); }
inline double elog1m(double a, double b) { return nhdp::digamma(b) - nhdp::digamma(a + b); }

inline double elog_theta(const nhdp::GlobalModel& m, int node, int term) {
  double sum = 0.0;
  for (double x : m.topic(node)) sum += x;
  return nhdp::digamma(m.topic(node)[static_cast<std::size_t>(term)]) - nhdp::digamma(sum);
}

inline bool is_root(const nhdp::TruncatedTree& tree, int flat) { return tree.include_root() && flat == 0; }

// True when `anc` is `node` or one of its ancestors.
inline bool at_or_above(const nhdp::TruncatedTree& tree, int anc, int node) {
  for (int x = node; x >= 0; x = tree.parent(x))
    if (x == anc) return true;
  return false;
}

// E ln pi for subtree node k, by walking from the node up to the top.
inline double log_prior(const nhdp::DocumentState& s, const nhdp::TruncatedTree& tree,
                        const nhdp::Hyperparameters& h, int k, bool prior_fixed) {
  const auto& st = s.subtree;
  const auto U = [&](int j) { return prior_fixed ? std::pair{h.gamma1, h.gamma2} : std::pair{s.a[static_cast<std::size_t>(j)], s.b[static_cast<std::size_t>(j)]}; };
  const auto V = [&](int j) { return prior_fixed ? std::pair{1.0, h.beta} : std::pair{s.u[static_cast<std::size_t>(j)], s.v[static_cast<std::size_t>(j)]}; };
  const int flat = st.node(k);
  double total = 0.0;
  if (!tree.is_truncation_leaf(flat)) total += elog(U(k).first, U(k).second);
  bool first = true;
  for (int x = flat; x >= 0; x = tree.parent(x)) {
    const int j = st.local_index(x);
    if (!first) total += elog1m(U(j).first, U(j).second);
    first = false;
    if (is_root(tree, x)) continue;
    total += elog(V(j).first, V(j).second);
    for (int y : st.nodes()) {
      const int m = st.local_index(y);
      if (tree.parent(y) == tree.parent(x) && !is_root(tree, y) && st.break_position(m) < st.break_position(j))
        total += elog1m(V(m).first, V(m).second);
    }
  }
  return total;
}

// nu for one token, normalized by subtracting the max.
inline std::vector<double> nu_token(const nhdp::DocumentState& s, const nhdp::GlobalModel& m, int term,
                                    bool prior_fixed = false) {
  const int K = s.width();
  std::vector<double> score(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    score[static_cast<std::size_t>(k)] = elog_theta(m, s.subtree.node(k), term) + log_prior(s, m.tree, m.hyper, k, prior_fixed);
  const double hi = *std::max_element(score.begin(), score.end());
  double z = 0.0;
  for (double& x : score) z += (x = std::exp(x - hi));
  for (double& x : score) x /= z;
  return score;
}

// Probability mass of token t at subtree node k, from the per-type nu rows.
inline double nu_at(const nhdp::DocumentState& s, const nhdp::BowDocument& doc, int term, int k) {
  for (std::size_t t = 0; t < doc.entries.size(); ++t)
    if (doc.entries[t].term == term) return s.nu_row(t)[static_cast<std::size_t>(k)];
  return 0.0;
}

struct LocalBetas {
  std::vector<double> u, v, a, b;
};

inline LocalBetas local_betas(const nhdp::DocumentState& s, const nhdp::BowDocument& doc,
                              const nhdp::TruncatedTree& tree, const nhdp::Hyperparameters& h) {
  const auto& st = s.subtree;
  const int K = st.size();
  LocalBetas out{std::vector<double>(static_cast<std::size_t>(K), 1.0), std::vector<double>(static_cast<std::size_t>(K), h.beta),
                 std::vector<double>(static_cast<std::size_t>(K), h.gamma1), std::vector<double>(static_cast<std::size_t>(K), h.gamma2)};
  for (int w : tokens(doc)) {
    for (int i = 0; i < K; ++i) {
      const double p = nu_at(s, doc, w, i);
      const int node = st.node(i);
      for (int k = 0; k < K; ++k) {
        const int flat = st.node(k);
        const auto kk = static_cast<std::size_t>(k);
        if (!is_root(tree, flat) && at_or_above(tree, flat, node)) out.u[kk] += p;
        if (flat == node) out.a[kk] += p;
        if (flat != node && at_or_above(tree, flat, node)) out.b[kk] += p;
        if (is_root(tree, flat)) continue;
        for (int m = 0; m < K; ++m) {
          const int sib = st.node(m);
          if (tree.parent(sib) == tree.parent(flat) && !is_root(tree, sib) &&
              st.break_position(m) > st.break_position(k) && at_or_above(tree, sib, node))
            out.v[kk] += p;
        }
      }
    }
  }
  return out;
}

// Transition probabilities rebuilt from the raw breaks and pointers.
inline std::vector<double> transitions_from_breaks(const nhdp::SampledDocumentProcess& doc,
                                                   const nhdp::TruncatedTree& tree) {
  std::vector<double> t(static_cast<std::size_t>(tree.size()), 0.0);
  if (tree.include_root()) t[0] = 1.0;
  for (const auto& dp : doc.dps) {
    double rest = 1.0;
    for (std::size_t j = 0; j < dp.sticks.size(); ++j) {
      t[static_cast<std::size_t>(dp.pointers[j])] += dp.sticks[j] * rest;
      rest *= 1.0 - dp.sticks[j];
    }
  }
  return t;
}

// Walks every root-to-node path explicitly: probability of stopping at the
// last node of the path.
inline std::vector<double> path_oracle(const nhdp::SampledDocumentProcess& doc, const nhdp::SampledTree& g) {
  const auto& tree = g.tree;
  const auto t = transitions_from_breaks(doc, tree);
  std::vector<double> out(static_cast<std::size_t>(tree.size()), 0.0);
  for (const auto& node : tree.nodes()) {
    double p = 1.0;
    std::vector<int> prefix;
    std::vector<int> chain;
    if (tree.include_root()) chain.push_back(0);
    for (int c : node.path) {
      prefix.push_back(c);
      chain.push_back(*tree.find(prefix));
    }
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const auto i = static_cast<std::size_t>(chain[k]);
      p *= t[i];
      p *= (k + 1 == chain.size()) ? doc.switches[i] : 1.0 - doc.switches[i];
    }
    out[static_cast<std::size_t>(node.flat_id)] = p;
  }
  return out;
}

struct GlobalStats {
  std::vector<double> lambda_hat, tau1_hat, tau2_hat;
};

// Minibatch statistics scaled to a corpus of D documents, token by token.
inline GlobalStats global_stats(const std::vector<nhdp::DocumentState>& states,
                                const std::vector<nhdp::BowDocument>& docs, int D, const nhdp::GlobalModel& model) {
  const auto& tree = model.tree;
  const auto V = static_cast<std::size_t>(model.vocab_size);
  const double scale = static_cast<double>(D) / static_cast<double>(docs.size());
  GlobalStats out{std::vector<double>(model.lambda.size(), 0.0), std::vector<double>(model.tau1.size(), 0.0),
                  std::vector<double>(model.tau2.size(), 0.0)};
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& st = states[d].subtree;
    for (int w : tokens(docs[d]))
      for (int k = 0; k < st.size(); ++k)
        out.lambda_hat[static_cast<std::size_t>(st.node(k)) * V + static_cast<std::size_t>(w)] +=
            scale * nu_at(states[d], docs[d], w, k);
    for (int i = 0; i < tree.size(); ++i) {
      if (!st.contains(i)) continue;
      out.tau1_hat[static_cast<std::size_t>(i)] += scale;
      if (is_root(tree, i)) continue;
      // Atoms of higher child index in the same DP used by this document.
      for (int j = 0; j < tree.size(); ++j) {
        if (tree.parent(j) == tree.parent(i) && !is_root(tree, j) && tree.child_index(j) > tree.child_index(i) &&
            st.contains(j))
          out.tau2_hat[static_cast<std::size_t>(i)] += scale;
      }
    }
  }
  return out;
}

}  // namespace oracle
