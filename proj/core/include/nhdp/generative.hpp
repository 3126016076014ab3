#pragma once

#include <cstdint>
#include <vector>

#include "nhdp/corpus.hpp"
#include "nhdp/hyperparameters.hpp"
#include "nhdp/random.hpp"
#include "nhdp/tree.hpp"

namespace nhdp {

/// A draw of the global tree: a topic per node and the global stick
/// construction at every Dirichlet process. Stick arrays are indexed by the
/// child's flat id; the last child at each DP takes the residual stick
/// (stick = 1) so transitions out of every DP sum to one.
struct SampledTree {
  TruncatedTree tree;
  std::vector<std::vector<double>> topics;  // [node][term]
  std::vector<double> sticks;               // V_{parent, j} for node (parent, j)
  std::vector<double> transition;           // probability the parent's DP picks node
  std::vector<std::vector<double>> topic_cdf;

  int vocab_size() const noexcept { return topics.empty() ? 0 : static_cast<int>(topics[0].size()); }

  /// Assembles a tree from explicit topics and sticks (sticks of last
  /// children are forced to 1). Used for planted trees in experiments.
  static SampledTree from_parts(TruncatedTree tree, std::vector<std::vector<double>> topics,
                                std::vector<double> sticks);
};

/// Document-level draw. Each internal DP (keyed by parent flat id, -1 for the
/// top DP, stored at index key + 1) has one stick break per global child;
/// break j points at z[j], a child drawn from the parent's global transition
/// distribution with replacement.
struct SampledDocumentProcess {
  struct DocumentDp {
    std::vector<double> sticks;  // V^(d)_j, last break absorbs the residual
    std::vector<int> pointers;   // child flat ids
  };
  std::vector<DocumentDp> dps;          // index key + 1
  std::vector<double> transition;       // document probability of entering node from its parent
  std::vector<double> switches;         // U_{d,i}; fixed to 1 at truncation leaves
};

SampledTree sample_global_tree(const Hyperparameters& hyper, const TruncatedTree& tree, int vocab_size,
                               Rng& rng);

SampledDocumentProcess sample_document_process(const SampledTree& tree, const Hyperparameters& hyper,
                                               Rng& rng);

/// Probability that a word's topic is each node:
/// path transitions times U_i prod_{ancestors} (1 - U_a).
std::vector<double> node_termination_distribution(const SampledDocumentProcess& doc,
                                                  const SampledTree& tree);

struct WordAssignment {
  int term = 0;
  int node = 0;
};

struct SampledDocument {
  BowDocument document;
  std::vector<WordAssignment> assignments;  // one per token, in draw order
  SampledDocumentProcess process;
};

SampledDocument sample_document(const SampledTree& tree, const Hyperparameters& hyper, int n_words,
                                Rng& rng, std::int64_t doc_id = 0);

struct SampledCorpus {
  Corpus corpus;
  std::vector<std::vector<WordAssignment>> assignments;
};

/// Document d uses the stream derive_seed(seed, {d}), so documents can be
/// generated independently and in any order.
SampledCorpus sample_corpus(const SampledTree& tree, const Hyperparameters& hyper, int n_docs,
                            int words_per_doc, std::uint64_t seed);

}  // namespace nhdp
