#include "nhdp/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "nhdp/errors.hpp"

namespace nhdp {

Vocabulary::Vocabulary(std::vector<std::string> terms) {
  for (auto& t : terms) {
    if (index_.count(t)) throw ConfigError("duplicate vocabulary term '" + t + "'");
    index_.emplace(t, static_cast<int>(terms_.size()));
    terms_.push_back(std::move(t));
  }
}

int Vocabulary::intern(const std::string& term) {
  const auto it = index_.find(term);
  if (it != index_.end()) return it->second;
  const int id = size();
  index_.emplace(term, id);
  terms_.push_back(term);
  return id;
}

int Vocabulary::find(const std::string& term) const {
  const auto it = index_.find(term);
  return it == index_.end() ? -1 : it->second;
}

Vocabulary Vocabulary::numbered(int size) {
  std::vector<std::string> terms;
  terms.reserve(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k) terms.push_back(std::to_string(k));
  return Vocabulary(std::move(terms));
}

int BowDocument::total_words() const noexcept {
  int n = 0;
  for (const auto& e : entries) n += e.count;
  return n;
}

std::int64_t Corpus::total_words() const noexcept {
  std::int64_t n = 0;
  for (const auto& d : documents) n += d.total_words();
  return n;
}

BowDocument make_document(std::int64_t doc_id, std::vector<TermCount> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const TermCount& a, const TermCount& b) { return a.term < b.term; });
  BowDocument doc{doc_id, {}};
  for (const auto& e : entries) {
    if (e.count <= 0) continue;
    if (!doc.entries.empty() && doc.entries.back().term == e.term) {
      doc.entries.back().count += e.count;
    } else {
      doc.entries.push_back(e);
    }
  }
  return doc;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

template <typename Int>
bool parse_int(std::string_view text, Int& value) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

void require_nonempty(const Corpus& corpus) {
  if (corpus.documents.empty()) throw IoError("empty corpus");
}

}  // namespace

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    terms.push_back(line);
  }
  return Vocabulary(std::move(terms));
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& t : vocab.terms()) out << t << '\n';
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : line) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (!std::ispunct(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Corpus load_raw_text(const std::filesystem::path& path) {
  auto in = open_input(path);
  Corpus corpus;
  std::string line;
  std::int64_t doc_id = 0;
  while (std::getline(in, line)) {
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    std::vector<TermCount> entries;
    entries.reserve(tokens.size());
    for (const auto& t : tokens) entries.push_back({corpus.vocabulary.intern(t), 1});
    corpus.documents.push_back(make_document(doc_id++, std::move(entries)));
  }
  require_nonempty(corpus);
  return corpus;
}

namespace {

Corpus load_term_counts_impl(const std::filesystem::path& path, Vocabulary vocab, bool infer_vocab) {
  auto in = open_input(path);
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  int max_term = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string field;
    if (!(fields >> field)) continue;
    std::int64_t doc_id = 0;
    if (!parse_int(field, doc_id)) throw ParseError("bad document id '" + field + "'", line_no);
    std::vector<TermCount> entries;
    while (fields >> field) {
      const auto colon = field.find(':');
      TermCount tc;
      if (colon == std::string::npos || !parse_int(std::string_view(field).substr(0, colon), tc.term) ||
          !parse_int(std::string_view(field).substr(colon + 1), tc.count)) {
        throw ParseError("bad entry '" + field + "', expected term_id:count", line_no);
      }
      if (tc.term < 0) throw ParseError("negative term id", line_no);
      if (tc.count < 1) throw ParseError("counts must be positive", line_no);
      if (!infer_vocab && tc.term >= vocab.size()) {
        throw ParseError("term id out of range: " + std::to_string(tc.term) +
                             " >= V=" + std::to_string(vocab.size()),
                         line_no);
      }
      max_term = std::max(max_term, tc.term);
      entries.push_back(tc);
    }
    if (entries.empty()) continue;
    corpus.documents.push_back(make_document(doc_id, std::move(entries)));
  }
  corpus.vocabulary = infer_vocab ? Vocabulary::numbered(max_term + 1) : std::move(vocab);
  require_nonempty(corpus);
  return corpus;
}

}  // namespace

Corpus load_term_counts(const std::filesystem::path& path, Vocabulary vocab) {
  return load_term_counts_impl(path, std::move(vocab), false);
}

Corpus load_term_counts(const std::filesystem::path& path) {
  return load_term_counts_impl(path, {}, true);
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  return format == CorpusFormat::raw_text_lines ? load_raw_text(path) : load_term_counts(path);
}

void save_term_counts(const Corpus& corpus, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& doc : corpus.documents) {
    out << doc.doc_id;
    for (const auto& e : doc.entries) out << ' ' << e.term << ':' << e.count;
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

PruneResult prune_vocabulary(const Corpus& corpus, int min_count,
                             const std::unordered_set<std::string>& stopwords) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  const int V = corpus.vocab_size();
  std::vector<std::int64_t> freq(static_cast<std::size_t>(V), 0);
  for (const auto& doc : corpus.documents) {
    for (const auto& e : doc.entries) freq[static_cast<std::size_t>(e.term)] += e.count;
  }

  PruneResult result;
  std::vector<int> remap(static_cast<std::size_t>(V), -1);
  std::vector<std::string> kept;
  for (int w = 0; w < V; ++w) {
    const auto& term = corpus.vocabulary.term(w);
    if (freq[static_cast<std::size_t>(w)] < min_count || stopwords.count(term)) {
      ++result.removed_terms;
      continue;
    }
    remap[static_cast<std::size_t>(w)] = static_cast<int>(kept.size());
    kept.push_back(term);
  }
  result.corpus.vocabulary = Vocabulary(std::move(kept));

  for (const auto& doc : corpus.documents) {
    BowDocument out{doc.doc_id, {}};
    for (const auto& e : doc.entries) {
      const int id = remap[static_cast<std::size_t>(e.term)];
      if (id >= 0) out.entries.push_back({id, e.count});
    }
    if (out.entries.empty()) {
      ++result.dropped_documents;
    } else {
      result.corpus.documents.push_back(std::move(out));
    }
  }
  return result;
}

std::vector<int> sample_minibatch(int corpus_size, int size, Rng& rng) {
  if (size < 1 || size > corpus_size) {
    throw ConfigError("minibatch size " + std::to_string(size) + " outside [1, " +
                      std::to_string(corpus_size) + "]");
  }
  std::vector<int> ids(static_cast<std::size_t>(corpus_size));
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates.
  for (int k = 0; k < size; ++k) {
    std::uniform_int_distribution<int> pick(k, corpus_size - 1);
    std::swap(ids[static_cast<std::size_t>(k)], ids[static_cast<std::size_t>(pick(rng))]);
  }
  ids.resize(static_cast<std::size_t>(size));
  return ids;
}

HeldoutSplit split_heldout_words(const BowDocument& doc, double observed_fraction, Rng& rng) {
  if (!(observed_fraction > 0.0 && observed_fraction < 1.0)) {
    throw ConfigError("observed_fraction must lie in (0, 1)");
  }
  const int n = doc.total_words();
  if (n < 2) throw ConfigError("split_heldout_words needs at least 2 tokens");
  const int n_obs = std::clamp(static_cast<int>(std::lround(observed_fraction * n)), 1, n - 1);

  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(n));
  for (const auto& e : doc.entries) tokens.insert(tokens.end(), static_cast<std::size_t>(e.count), e.term);
  for (int k = 0; k < n_obs; ++k) {
    std::uniform_int_distribution<int> pick(k, n - 1);
    std::swap(tokens[static_cast<std::size_t>(k)], tokens[static_cast<std::size_t>(pick(rng))]);
  }

  std::map<int, int> observed, heldout;
  for (int k = 0; k < n; ++k) ++(k < n_obs ? observed : heldout)[tokens[static_cast<std::size_t>(k)]];
  HeldoutSplit split{{doc.doc_id, {}}, {doc.doc_id, {}}};
  for (const auto& [t, c] : observed) split.observed.entries.push_back({t, c});
  for (const auto& [t, c] : heldout) split.heldout.entries.push_back({t, c});
  return split;
}

}  // namespace nhdp
