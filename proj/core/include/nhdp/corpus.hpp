#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nhdp/random.hpp"

namespace nhdp {

/// Dense bijection between token strings and ids 0..V-1.
class Vocabulary {
public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terms);  // throws ConfigError on duplicates

  /// Id of `term`, adding it when absent.
  int intern(const std::string& term);
  /// -1 when absent.
  int find(const std::string& term) const;
  const std::string& term(int id) const { return terms_.at(static_cast<std::size_t>(id)); }
  std::span<const std::string> terms() const noexcept { return terms_; }
  int size() const noexcept { return static_cast<int>(terms_.size()); }

  /// Placeholder vocabulary "0", "1", ... for id-only corpora.
  static Vocabulary numbered(int size);

private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, int> index_;
};

struct TermCount {
  int term = 0;
  int count = 0;
  bool operator==(const TermCount&) const = default;
};

/// Sparse count vector; entries sorted by term id, no duplicates, counts >= 1.
struct BowDocument {
  std::int64_t doc_id = 0;
  std::vector<TermCount> entries;

  int total_words() const noexcept;
  bool operator==(const BowDocument&) const = default;
};

/// Builds a document from (term, count) pairs in any order; merges duplicates
/// and drops zero counts.
BowDocument make_document(std::int64_t doc_id, std::vector<TermCount> entries);

struct Corpus {
  std::vector<BowDocument> documents;
  Vocabulary vocabulary;

  int size() const noexcept { return static_cast<int>(documents.size()); }
  int vocab_size() const noexcept { return vocabulary.size(); }
  std::int64_t total_words() const noexcept;
};

enum class CorpusFormat { raw_text_lines, term_count_lines };

/// One token per line, line number = id.
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);

/// Raw text: one document per line, lowercased, punctuation stripped,
/// whitespace split; lines without tokens are skipped.
Corpus load_raw_text(const std::filesystem::path& path);
/// `doc_id term_id:count ...` against `vocab`; ids are 0-based.
Corpus load_term_counts(const std::filesystem::path& path, Vocabulary vocab);
/// Term-count input with V inferred as max id + 1 when no vocabulary is known.
Corpus load_term_counts(const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

void save_term_counts(const Corpus& corpus, const std::filesystem::path& path);

/// Tokenizer used by raw-text loading.
std::vector<std::string> tokenize(const std::string& line);

struct PruneResult {
  Corpus corpus;
  int dropped_documents = 0;
  int removed_terms = 0;
};

PruneResult prune_vocabulary(const Corpus& corpus, int min_count,
                             const std::unordered_set<std::string>& stopwords = {});

/// `size` distinct document indices drawn uniformly without replacement.
std::vector<int> sample_minibatch(int corpus_size, int size, Rng& rng);

struct HeldoutSplit {
  BowDocument observed;
  BowDocument heldout;
};

/// Token-level split: observed receives round(fraction * N_d) tokens, clamped
/// so both sides get at least one token.
HeldoutSplit split_heldout_words(const BowDocument& doc, double observed_fraction, Rng& rng);

}  // namespace nhdp
