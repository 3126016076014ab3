#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nhdp/checkpoint.hpp"
#include "nhdp/corpus.hpp"
#include "nhdp/evaluation.hpp"
#include "nhdp/global_inference.hpp"
#include "nhdp/local_inference.hpp"

namespace nhdp {

struct TrainConfig {
  LocalConfig local;
  StepSchedule schedule;
  KMeansInitConfig init;
  int init_docs = 10000;      // documents sampled for k-means initialization
  int minibatch_size = 500;
  std::int64_t steps = 0;     // total global steps; 0 runs one epoch, ceil(D / minibatch)
  std::uint64_t seed = 1;
  int threads = 0;            // 0: hardware concurrency
  int metrics_every = 20;     // the final step always reports
  double observed_fraction = 0.9;

  void validate() const;
};

/// One line of the metrics stream.
struct MetricsRow {
  std::int64_t step = 0;
  std::int64_t docs_seen = 0;
  double heldout_loglik = 0.0;  // token-weighted, NaN without held-out documents
  int nodes_95 = 0;             // node counts covering the minibatch's allocated mass
  int nodes_99 = 0;
  int nodes_999 = 0;
  double rho = 0.0;
};

std::string metrics_csv_header();
std::string format_metrics_row(const MetricsRow& row);

/// Stochastic variational inference driver. Each step samples a minibatch
/// with a stream derived from (seed, step), fits every document against the
/// frozen previous model in parallel, merges statistics in minibatch order,
/// and applies one natural-gradient update.
class Trainer {
public:
  Trainer(const Corpus& corpus, std::span<const BowDocument> heldout, TrainConfig config, GlobalModel model,
          std::int64_t docs_seen = 0);

  /// Hierarchical k-means initialization from a seeded sample of the corpus.
  static GlobalModel initialize(const Corpus& corpus, const TruncatedTree& tree, const Hyperparameters& hyper,
                                const TrainConfig& config);

  struct StepResult {
    std::int64_t step = 0;
    double rho = 0.0;
    std::vector<int> batch;
    std::vector<DocumentState> states;
    std::vector<BowDocument> docs;
  };

  StepResult step();
  bool finished() const { return model_.step_count >= planned_steps(); }
  std::int64_t planned_steps() const;
  bool metrics_due(std::int64_t step) const;
  MetricsRow metrics(const StepResult& result) const;

  const GlobalModel& model() const noexcept { return model_; }
  std::int64_t docs_seen() const noexcept { return docs_seen_; }
  Checkpoint checkpoint() const { return {model_, config_.seed, docs_seen_}; }

private:
  const Corpus& corpus_;
  std::span<const BowDocument> heldout_;
  TrainConfig config_;
  GlobalModel model_;
  std::int64_t docs_seen_ = 0;
};

struct TrainCallbacks {
  std::function<void(const MetricsRow&)> on_metrics;
  std::function<void(const Trainer&)> on_step;
};

struct TrainResult {
  GlobalModel model;
  std::vector<MetricsRow> metrics;
};

/// Runs `trainer` until its planned step count.
TrainResult run_training(Trainer& trainer, const TrainCallbacks& callbacks = {});

/// Initializes and trains from scratch.
TrainResult train(const Corpus& corpus, std::span<const BowDocument> heldout, const TruncatedTree& tree,
                  const Hyperparameters& hyper, const TrainConfig& config, const TrainCallbacks& callbacks = {});

}  // namespace nhdp
