#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nhdp/corpus.hpp"
#include "nhdp/global_model.hpp"
#include "nhdp/local_inference.hpp"

namespace nhdp {

/// Predictive distribution over the vocabulary from plug-in means: each
/// local Beta is replaced by its mean, the node-termination product is
/// formed over the subtree and renormalized, and topics use their Dirichlet
/// means lambda_i / sum(lambda_i).
std::vector<double> predictive_distribution(const DocumentState& state, const GlobalModel& model);

/// Plug-in node probabilities (same order as state.subtree), summing to 1.
std::vector<double> plugin_node_probabilities(const DocumentState& state, const TruncatedTree& tree);

struct DocumentPrediction {
  std::int64_t doc_id = 0;
  int heldout_tokens = 0;
  double avg_loglik = 0.0;  // per held-out token
};

struct PredictiveReport {
  std::vector<DocumentPrediction> per_doc;
  double corpus_avg = 0.0;    // token-weighted
  double document_avg = 0.0;  // unweighted mean of per-document averages
  int skipped = 0;            // documents with fewer than two tokens
};

struct HeldoutConfig {
  double observed_fraction = 0.9;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Splits every document at the token level, fits local parameters on the
/// observed part only with the model frozen, and scores the held-out tokens.
/// Document i's split uses derive_seed(seed, {i}).
PredictiveReport heldout_loglik(const GlobalModel& model, std::span<const BowDocument> docs,
                                const HeldoutConfig& config, const LocalConfig& local,
                                std::vector<DocumentState>* states = nullptr,
                                std::vector<BowDocument>* observed = nullptr);

/// Smallest number of nodes whose summed mass reaches each fraction of the total.
std::vector<int> mass_threshold_counts(std::span<const double> node_mass, std::span<const double> fractions);

struct TreeMassReport {
  int nodes_95 = 0;
  int nodes_99 = 0;
  int nodes_999 = 0;
  std::vector<double> node_mass;             // summed over documents, per node
  std::vector<double> level_words;           // mean over documents of expected tokens per level
  std::vector<double> level_active_nodes;    // mean over documents of nodes with > 1 expected token
};

TreeMassReport tree_mass_stats(const GlobalModel& model, std::span<const DocumentState> states,
                               std::span<const BowDocument> docs);

struct ExportedTerm {
  std::string term;
  double prob = 0.0;
  bool operator==(const ExportedTerm&) const = default;
};

struct ExportedNode {
  std::string id;  // slash-joined path
  int level = 0;
  double weight = 0.0;  // expected global stick weight of the node
  std::vector<ExportedTerm> top_terms;
  bool operator==(const ExportedNode&) const = default;
};

struct TopicTreeExport {
  std::vector<int> widths;
  bool include_root = false;
  int vocab_size = 0;
  std::int64_t step = 0;
  std::vector<ExportedNode> nodes;
  bool operator==(const TopicTreeExport&) const = default;
};

/// Top-k terms of every topic mean (descending) with each node's expected
/// stick weight. `vocab` may be empty, in which case terms are ids.
TopicTreeExport export_topics(const GlobalModel& model, const Vocabulary& vocab, int top_k);

std::string to_json(const TopicTreeExport& tree, int indent = 2);
TopicTreeExport topic_tree_from_json(const std::string& text);  // throws ParseError
/// Indented text, one node per line followed by its terms.
std::string render_text(const TopicTreeExport& tree);

}  // namespace nhdp
