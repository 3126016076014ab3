#include "nhdp/training.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nhdp/errors.hpp"
#include "nhdp/parallel.hpp"

namespace nhdp {
namespace {

enum Stream : std::uint64_t { kInit = 1, kMinibatch = 2, kEval = 3 };

}  // namespace

void TrainConfig::validate() const {
  local.validate();
  schedule.validate();
  if (minibatch_size < 1) throw ConfigError("minibatch size must be >= 1");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (metrics_every < 1) throw ConfigError("metrics cadence must be >= 1");
  if (init_docs < 1) throw ConfigError("init_docs must be >= 1");
  if (!(observed_fraction > 0.0 && observed_fraction < 1.0)) throw ConfigError("observed fraction must lie in (0, 1)");
  if (!(init.kappa >= 0.0 && init.kappa <= 1.0)) throw ConfigError("init kappa must lie in [0, 1]");
}

std::string metrics_csv_header() { return "step,docs_seen,heldout_loglik,nodes_95,nodes_99,nodes_999,rho"; }

std::string format_metrics_row(const MetricsRow& row) {
  std::ostringstream out;
  out.precision(17);
  out << row.step << ',' << row.docs_seen << ',' << row.heldout_loglik << ',' << row.nodes_95 << ','
      << row.nodes_99 << ',' << row.nodes_999 << ',' << row.rho;
  return out.str();
}

Trainer::Trainer(const Corpus& corpus, std::span<const BowDocument> heldout, TrainConfig config, GlobalModel model,
                 std::int64_t docs_seen)
    : corpus_(corpus), heldout_(heldout), config_(std::move(config)), model_(std::move(model)), docs_seen_(docs_seen) {
  config_.validate();
  if (corpus_.documents.empty()) throw ConfigError("empty corpus");
  if (corpus_.vocab_size() != model_.vocab_size) {
    throw CompatibilityError("corpus vocabulary size " + std::to_string(corpus_.vocab_size()) +
                             " does not match the model's " + std::to_string(model_.vocab_size));
  }
}

GlobalModel Trainer::initialize(const Corpus& corpus, const TruncatedTree& tree, const Hyperparameters& hyper,
                                const TrainConfig& config) {
  config.validate();
  GlobalModel model = make_prior_model(tree, hyper, corpus.vocab_size());
  Rng rng = make_rng(config.seed, {kInit});
  const int n = std::min(config.init_docs, corpus.size());
  std::vector<BowDocument> sample;
  sample.reserve(static_cast<std::size_t>(n));
  for (int id : sample_minibatch(corpus.size(), n, rng)) sample.push_back(corpus.documents[static_cast<std::size_t>(id)]);
  KMeansInitConfig init = config.init;
  if (init.scale <= 0.0) init.scale = corpus.size();
  model.lambda = init_topics_hierarchical_kmeans(sample, tree, corpus.vocab_size(), init, rng);
  model.validate();
  return model;
}

std::int64_t Trainer::planned_steps() const {
  if (config_.steps > 0) return config_.steps;
  const std::int64_t b = std::min(config_.minibatch_size, corpus_.size());
  return (corpus_.size() + b - 1) / b;
}

bool Trainer::metrics_due(std::int64_t step) const {
  return step % config_.metrics_every == 0 || step == planned_steps();
}

Trainer::StepResult Trainer::step() {
  StepResult result;
  result.step = model_.step_count + 1;
  result.rho = step_size(result.step, config_.schedule);
  Rng rng = make_rng(config_.seed, {kMinibatch, static_cast<std::uint64_t>(result.step)});
  result.batch = sample_minibatch(corpus_.size(), std::min(config_.minibatch_size, corpus_.size()), rng);
  for (int id : result.batch) result.docs.push_back(corpus_.documents[static_cast<std::size_t>(id)]);

  const ModelExpectations ex(model_);
  result.states.resize(result.docs.size());
  parallel_for(result.docs.size(), config_.threads,
               [&](std::size_t i) { result.states[i] = run_local(result.docs[i], ex, config_.local); });

  const auto stats = accumulate_stats(result.states, result.docs, corpus_.size(), model_);
  apply_stochastic_update(model_, stats, result.rho);
  docs_seen_ += static_cast<std::int64_t>(result.docs.size());
  return result;
}

MetricsRow Trainer::metrics(const StepResult& result) const {
  MetricsRow row;
  row.step = result.step;
  row.docs_seen = docs_seen_;
  row.rho = result.rho;
  row.heldout_loglik = std::numeric_limits<double>::quiet_NaN();
  if (!heldout_.empty()) {
    HeldoutConfig hc{config_.observed_fraction, derive_seed(config_.seed, {kEval}), config_.threads};
    row.heldout_loglik = heldout_loglik(model_, heldout_, hc, config_.local).corpus_avg;
  }
  if (!result.states.empty()) {
    const auto mass = tree_mass_stats(model_, result.states, result.docs);
    row.nodes_95 = mass.nodes_95;
    row.nodes_99 = mass.nodes_99;
    row.nodes_999 = mass.nodes_999;
  }
  return row;
}

TrainResult run_training(Trainer& trainer, const TrainCallbacks& callbacks) {
  TrainResult out;
  while (!trainer.finished()) {
    const auto result = trainer.step();
    if (trainer.metrics_due(result.step)) {
      out.metrics.push_back(trainer.metrics(result));
      if (callbacks.on_metrics) callbacks.on_metrics(out.metrics.back());
    }
    if (callbacks.on_step) callbacks.on_step(trainer);
  }
  out.model = trainer.model();
  return out;
}

TrainResult train(const Corpus& corpus, std::span<const BowDocument> heldout, const TruncatedTree& tree,
                  const Hyperparameters& hyper, const TrainConfig& config, const TrainCallbacks& callbacks) {
  Trainer trainer(corpus, heldout, config, Trainer::initialize(corpus, tree, hyper, config));
  return run_training(trainer, callbacks);
}

}  // namespace nhdp
