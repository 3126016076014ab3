#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nhdp/checkpoint.hpp"
#include "nhdp/corpus.hpp"
#include "nhdp/errors.hpp"
#include "nhdp/evaluation.hpp"
#include "nhdp/generative.hpp"
#include "nhdp/parallel.hpp"
#include "nhdp/training.hpp"

namespace nhdp::cli {

void RunConfig::validate() const {
  truncation.validate();
  hyper.validate();
  schedule.validate();
  local.validate();
  if (format != "counts" && format != "text") throw ConfigError("format must be 'counts' or 'text'");
  if (minibatch_size < 1) throw ConfigError("minibatch-size must be >= 1");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (metrics_every < 1) throw ConfigError("metrics-every must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("checkpoint-every must be >= 1");
  if (init_docs < 1) throw ConfigError("init-docs must be >= 1");
  if (!(init.kappa >= 0.0 && init.kappa <= 1.0)) throw ConfigError("init-kappa must lie in [0, 1]");
  if (init.iterations < 1) throw ConfigError("kmeans-iters must be >= 1");
  if (!(observed_fraction > 0.0 && observed_fraction < 1.0)) throw ConfigError("observed-fraction must lie in (0, 1)");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (sample_docs < 1 || sample_words < 1 || sample_vocab < 1) throw ConfigError("docs, words and vocab-size must be >= 1");
  if (top_k < 1) throw ConfigError("top-k must be >= 1");
}

namespace {

enum Stream : std::uint64_t { kSampleTree = 101, kSampleDocs = 102 };

void require(const std::filesystem::path& p, const char* option, const char* command) {
  if (p.empty()) throw ConfigError(std::string(command) + " needs --" + option);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.precision(17);
  return out;
}

void make_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

// Maps raw text through a fixed vocabulary, dropping unknown tokens.
std::vector<BowDocument> load_text_with_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<BowDocument> docs;
  std::string line;
  std::int64_t id = 0;
  while (std::getline(in, line)) {
    std::vector<TermCount> entries;
    for (const auto& t : tokenize(line)) {
      const int w = vocab.find(t);
      if (w >= 0) entries.push_back({w, 1});
    }
    auto doc = make_document(id++, std::move(entries));
    if (!doc.entries.empty()) docs.push_back(std::move(doc));
  }
  return docs;
}

Corpus load_training_corpus(const RunConfig& c) {
  if (c.format == "text") return load_raw_text(c.corpus);
  if (!c.vocab.empty()) return load_term_counts(c.corpus, load_vocabulary(c.vocab));
  return load_term_counts(c.corpus);
}

// Documents scored against an existing vocabulary of size `vocab_size`.
std::vector<BowDocument> load_documents(const RunConfig& c, const std::filesystem::path& path, const Vocabulary& vocab) {
  if (c.format == "text") return load_text_with_vocab(path, vocab);
  return load_term_counts(path, vocab).documents;
}

Vocabulary vocabulary_for(const RunConfig& c, int vocab_size) {
  if (c.vocab.empty()) return Vocabulary::numbered(vocab_size);
  auto vocab = load_vocabulary(c.vocab);
  if (vocab.size() != vocab_size) {
    throw CompatibilityError("vocabulary has " + std::to_string(vocab.size()) + " terms, the model expects " +
                             std::to_string(vocab_size));
  }
  return vocab;
}

void check_compatible(const RunConfig& c, const GlobalModel& model) {
  if (c.truncation_given && (c.truncation != model.tree.truncation() || c.include_root != model.tree.include_root())) {
    std::vector<int> given = c.truncation.widths, stored = model.tree.truncation().widths;
    throw CompatibilityError("truncation mismatch: config " + format_path(given) + (c.include_root ? " with root" : "") +
                             ", checkpoint " + format_path(stored) + (model.tree.include_root() ? " with root" : ""));
  }
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.local = c.local;
  t.schedule = c.schedule;
  t.init = c.init;
  t.init_docs = c.init_docs;
  t.minibatch_size = c.minibatch_size;
  t.steps = c.steps;
  t.seed = c.seed;
  t.threads = c.threads;
  t.metrics_every = c.metrics_every;
  t.observed_fraction = c.observed_fraction;
  return t;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  require(c.corpus, "corpus", "train");
  const Corpus corpus = load_training_corpus(c);
  const std::vector<BowDocument> heldout =
      c.heldout.empty() ? std::vector<BowDocument>{} : load_documents(c, c.heldout, corpus.vocabulary);
  TrainConfig tc = train_config(c);

  GlobalModel model;
  std::int64_t docs_seen = 0;
  if (!c.resume.empty()) {
    auto ck = load_checkpoint(c.resume);
    check_compatible(c, ck.model);
    if (ck.model.vocab_size != corpus.vocab_size()) {
      throw CompatibilityError("checkpoint vocabulary size " + std::to_string(ck.model.vocab_size) +
                               " does not match the corpus (" + std::to_string(corpus.vocab_size()) + ")");
    }
    tc.seed = ck.seed;
    docs_seen = ck.docs_seen;
    model = std::move(ck.model);
  } else {
    model = Trainer::initialize(corpus, TruncatedTree(c.truncation, c.include_root), c.hyper, tc);
  }
  Trainer trainer(corpus, heldout, tc, std::move(model), docs_seen);

  make_output_dir(c.output);
  const auto ckpt_path = c.checkpoint.empty() ? c.output / "model.ckpt" : c.checkpoint;
  const auto metrics_path = c.output / "metrics.csv";
  const bool append = !c.resume.empty() && std::filesystem::exists(metrics_path);
  auto metrics = open_out(metrics_path, append ? std::ios::app : std::ios::trunc);
  if (!append) metrics << metrics_csv_header() << '\n';
  save_vocabulary(corpus.vocabulary, c.output / "vocab.txt");

  while (!trainer.finished()) {
    const auto result = trainer.step();
    if (trainer.metrics_due(result.step)) {
      const auto row = trainer.metrics(result);
      metrics << format_metrics_row(row) << '\n' << std::flush;
      out << "step " << row.step << "  docs " << row.docs_seen << "  heldout " << row.heldout_loglik << "  nodes95 "
          << row.nodes_95 << '\n';
    }
    if (result.step % c.checkpoint_every == 0 || trainer.finished()) save_checkpoint(trainer.checkpoint(), ckpt_path);
  }
  if (!metrics) throw IoError("write failed for '" + metrics_path.string() + "'");
  out << "wrote " << ckpt_path.string() << " after " << trainer.model().step_count << " steps\n";
  return kOk;
}

void write_debug_dump(const std::filesystem::path& path, const GlobalModel& model, const std::vector<DocumentState>& states,
                      const std::vector<BowDocument>& observed) {
  auto out = open_out(path);
  for (std::size_t d = 0; d < states.size(); ++d) {
    const auto& s = states[d];
    const auto mass = s.node_mass(observed[d]);
    nlohmann::json j;
    j["doc_id"] = observed[d].doc_id;
    j["iterations"] = s.iterations;
    j["nodes"] = nlohmann::json::array();
    for (int k = 0; k < s.width(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      j["nodes"].push_back({{"id", format_path(model.tree.node(s.subtree.node(k)).path)},
                            {"break", s.subtree.break_position(k)},
                            {"mass", mass[kk]},
                            {"stick", {s.u[kk], s.v[kk]}},
                            {"switch", {s.a[kk], s.b[kk]}}});
    }
    out << j.dump() << '\n';
  }
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  require(c.checkpoint, "checkpoint", "eval");
  require(c.corpus, "corpus", "eval");
  const auto ck = load_checkpoint(c.checkpoint);
  check_compatible(c, ck.model);
  const auto vocab = vocabulary_for(c, ck.model.vocab_size);
  const auto docs = load_documents(c, c.corpus, vocab);

  std::vector<DocumentState> states;
  std::vector<BowDocument> observed;
  const bool dump = !c.debug_dump.empty();
  const auto report = heldout_loglik(ck.model, docs, HeldoutConfig{c.observed_fraction, c.seed, c.threads}, c.local,
                                     dump ? &states : nullptr, dump ? &observed : nullptr);

  make_output_dir(c.output);
  auto per_doc = open_out(c.output / "eval_per_doc.csv");
  per_doc << "doc_id,heldout_tokens,avg_loglik\n";
  for (const auto& d : report.per_doc) per_doc << d.doc_id << ',' << d.heldout_tokens << ',' << d.avg_loglik << '\n';
  auto summary = open_out(c.output / "eval_summary.txt");
  summary << "documents=" << report.per_doc.size() << "\nskipped=" << report.skipped
          << "\ncorpus_avg=" << report.corpus_avg << "\ndocument_avg=" << report.document_avg
          << "\nuniform_baseline=" << -std::log(static_cast<double>(ck.model.vocab_size)) << '\n';
  if (dump) write_debug_dump(c.debug_dump, ck.model, states, observed);
  out << "held-out log likelihood per token " << report.corpus_avg << " over " << report.per_doc.size()
      << " documents\n";
  return kOk;
}

int cmd_sample(const RunConfig& c, std::ostream& out) {
  const TruncatedTree tree(c.truncation, c.include_root);
  Rng rng = make_rng(c.seed, {kSampleTree});
  const auto truth = sample_global_tree(c.hyper, tree, c.sample_vocab, rng);
  const auto sampled = sample_corpus(truth, c.hyper, c.sample_docs, c.sample_words, derive_seed(c.seed, {kSampleDocs}));

  make_output_dir(c.output);
  save_term_counts(sampled.corpus, c.output / "corpus.txt");
  save_vocabulary(sampled.corpus.vocabulary, c.output / "vocab.txt");
  {
    // One row per token: document id, term id, node path.
    auto f = open_out(c.output / "truth_assignments.txt");
    for (std::size_t d = 0; d < sampled.assignments.size(); ++d) {
      for (const auto& a : sampled.assignments[d]) {
        f << sampled.corpus.documents[d].doc_id << ' ' << a.term << ' ' << format_path(tree.node(a.node).path) << '\n';
      }
    }
    if (!f) throw IoError("write failed for truth_assignments.txt");
  }
  {
    // One row per node: path, global transition probability, topic.
    auto f = open_out(c.output / "truth_topics.txt");
    for (int i = 0; i < tree.size(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      f << format_path(tree.node(i).path) << ' ' << truth.transition[ii];
      for (double p : truth.topics[ii]) f << ' ' << p;
      f << '\n';
    }
    if (!f) throw IoError("write failed for truth_topics.txt");
  }
  out << "sampled " << c.sample_docs << " documents of " << c.sample_words << " words into " << c.output.string()
      << '\n';
  return kOk;
}

int cmd_export(const RunConfig& c, std::ostream& out) {
  require(c.checkpoint, "checkpoint", "export");
  const auto ck = load_checkpoint(c.checkpoint);
  check_compatible(c, ck.model);
  const Vocabulary vocab = c.vocab.empty() ? Vocabulary{} : vocabulary_for(c, ck.model.vocab_size);
  const auto tree = export_topics(ck.model, vocab, c.top_k);
  make_output_dir(c.output);
  open_out(c.output / "topics.json") << to_json(tree) << '\n';
  open_out(c.output / "topics.txt") << render_text(tree);
  out << "exported " << tree.nodes.size() << " nodes\n";
  return kOk;
}

int cmd_stats(const RunConfig& c, std::ostream& out) {
  require(c.checkpoint, "checkpoint", "stats");
  require(c.corpus, "corpus", "stats");
  const auto ck = load_checkpoint(c.checkpoint);
  check_compatible(c, ck.model);
  const auto vocab = vocabulary_for(c, ck.model.vocab_size);
  const auto docs = load_documents(c, c.corpus, vocab);
  if (docs.empty()) throw IoError("empty corpus");

  const ModelExpectations ex(ck.model);
  std::vector<DocumentState> states(docs.size());
  parallel_for(docs.size(), c.threads, [&](std::size_t i) { states[i] = run_local(docs[i], ex, c.local); });
  const auto report = tree_mass_stats(ck.model, states, docs);

  make_output_dir(c.output);
  auto f = open_out(c.output / "stats.csv");
  f << "metric,value\nnodes_95," << report.nodes_95 << "\nnodes_99," << report.nodes_99 << "\nnodes_999,"
    << report.nodes_999 << '\n';
  for (std::size_t l = 0; l < report.level_words.size(); ++l) {
    if (l == 0 && !ck.model.tree.include_root()) continue;
    f << "level_" << l << "_words," << report.level_words[l] << "\nlevel_" << l << "_active_nodes,"
      << report.level_active_nodes[l] << '\n';
  }
  auto m = open_out(c.output / "node_mass.csv");
  m << "node,level,mass\n";
  for (int i = 0; i < ck.model.tree.size(); ++i) {
    m << format_path(ck.model.tree.node(i).path) << ',' << ck.model.tree.level(i) << ','
      << report.node_mass[static_cast<std::size_t>(i)] << '\n';
  }
  out << "nodes covering 95% / 99% / 99.9% of mass: " << report.nodes_95 << " / " << report.nodes_99 << " / "
      << report.nodes_999 << '\n';
  return kOk;
}

void add_options(CLI::App& app, RunConfig& c, std::vector<int>& widths) {
  app.set_config("--config", "", "key = value configuration file; flags override it");

  app.add_option("--truncation", widths, "children per level, e.g. 20,10,5")->delimiter(',')->group("Model");
  app.add_flag("--include-root", c.include_root, "add a root topic node above the first level")->group("Model");
  app.add_option("--alpha", c.hyper.alpha, "global DP concentration")->group("Model");
  app.add_option("--beta", c.hyper.beta, "document DP concentration")->group("Model");
  app.add_option("--gamma1", c.hyper.gamma1, "switch prior, first shape")->group("Model");
  app.add_option("--gamma2", c.hyper.gamma2, "switch prior, second shape")->group("Model");
  app.add_option("--lambda0", c.hyper.lambda0, "topic Dirichlet base")->group("Model");

  app.add_option("--tau0", c.schedule.tau0, "step size offset")->group("Training");
  app.add_option("--kappa", c.schedule.kappa, "step size decay rate, in (0.5, 1]")->group("Training");
  app.add_option("--minibatch-size", c.minibatch_size, "documents per global step")->group("Training");
  app.add_option("--steps", c.steps, "global steps; 0 runs one epoch")->group("Training");
  app.add_option("--metrics-every", c.metrics_every, "steps between metrics rows")->group("Training");
  app.add_option("--checkpoint-every", c.checkpoint_every, "steps between checkpoint writes")->group("Training");
  app.add_option("--init-docs", c.init_docs, "documents used by the k-means initialization")->group("Training");
  app.add_option("--init-kappa", c.init.kappa, "weight of the k-means means in the initial topics")->group("Training");
  app.add_option("--kmeans-iters", c.init.iterations, "k-means iterations per split")->group("Training");
  app.add_option("--seed", c.seed, "base seed of every random stream");
  app.add_option("--threads", c.threads, "worker threads; 0 uses every core");

  app.add_option("--greedy-threshold", c.local.greedy_threshold, "minimum objective gain to grow a subtree")->group("Local");
  app.add_option("--l1-tolerance", c.local.l1_tolerance, "local convergence tolerance")->group("Local");
  app.add_option("--max-local-iters", c.local.max_local_iters, "cap on coordinate sweeps")->group("Local");
  app.add_option("--max-subtree-nodes", c.local.max_subtree_nodes, "cap on subtree size")->group("Local");
  app.add_flag("--single-path", c.local.single_path, "allow at most one child per node (nCRP-style ablation)")->group("Local");
  app.add_option("--score-global-sticks", c.local.score_global_sticks,
                 "include the global stick term when selecting subtrees")->group("Local");
  app.add_option("--observed-fraction", c.observed_fraction, "share of each held-out document used for fitting")
      ->group("Evaluation");

  app.add_option("--corpus", c.corpus, "corpus file")->group("Paths");
  app.add_option("--vocab", c.vocab, "vocabulary file, one term per line")->group("Paths");
  app.add_option("--format", c.format, "corpus format: counts or text")->group("Paths");
  app.add_option("--heldout", c.heldout, "held-out documents for training metrics")->group("Paths");
  app.add_option("--checkpoint", c.checkpoint, "checkpoint to read (eval, export, stats) or write (train)")->group("Paths");
  app.add_option("--resume", c.resume, "checkpoint to resume training from")->group("Paths");
  app.add_option("--output", c.output, "output directory")->group("Paths");
  app.add_option("--debug-dump", c.debug_dump, "eval: per-document subtree dump, one JSON object per line")->group("Paths");

  app.add_option("--docs", c.sample_docs, "sample: number of documents")->group("Sampling");
  app.add_option("--words", c.sample_words, "sample: words per document")->group("Sampling");
  app.add_option("--vocab-size", c.sample_vocab, "sample: vocabulary size")->group("Sampling");
  app.add_option("--top-k", c.top_k, "export: terms per topic")->group("Export");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nested hierarchical Dirichlet process topic model"};
  app.name(args.empty() ? "nhdp" : args.front());
  RunConfig config;
  std::vector<int> widths;
  add_options(app, config, widths);
  app.require_subcommand(1, 1);
  auto* train = app.add_subcommand("train", "fit a model with stochastic variational inference")->fallthrough();
  auto* eval = app.add_subcommand("eval", "held-out predictive log likelihood")->fallthrough();
  auto* sample = app.add_subcommand("sample", "draw a synthetic corpus with its ground truth")->fallthrough();
  auto* exp = app.add_subcommand("export", "write the topic tree as JSON and text")->fallthrough();
  auto* stats = app.add_subcommand("stats", "tree usage statistics over a corpus")->fallthrough();

  try {
    std::vector<std::string> rest(args.empty() ? args.begin() : args.begin() + 1, args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigOrIo;
  }

  try {
    if (app.get_option("--truncation")->count() > 0) {
      config.truncation.widths = widths;
      config.truncation_given = true;
    }
    config.validate();
    if (train->parsed()) return cmd_train(config, out);
    if (eval->parsed()) return cmd_eval(config, out);
    if (sample->parsed()) return cmd_sample(config, out);
    if (exp->parsed()) return cmd_export(config, out);
    if (stats->parsed()) return cmd_stats(config, out);
    return kConfigOrIo;
  } catch (const CompatibilityError& e) {
    err << "error: " << e.what() << '\n';
    return kCompatibility;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigOrIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigOrIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace nhdp::cli
