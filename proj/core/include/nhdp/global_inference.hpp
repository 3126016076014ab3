#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nhdp/corpus.hpp"
#include "nhdp/global_model.hpp"
#include "nhdp/local_inference.hpp"
#include "nhdp/random.hpp"

namespace nhdp {

/// Minibatch statistics already scaled by D / |C_s|.
struct SufficientStats {
  std::vector<double> lambda_hat;  // [node * V + term]: expected tokens of term w at node
  std::vector<double> tau1_hat;    // per node: documents whose subtree includes it
  std::vector<double> tau2_hat;    // per node: included siblings with a larger child index
  int batch_size = 0;
  int corpus_size = 0;
};

SufficientStats accumulate_stats(std::span<const DocumentState> states, std::span<const BowDocument> docs,
                                 int corpus_size, const GlobalModel& model);

/// Robbins-Monro schedule rho_s = (tau0 + s)^(-kappa).
struct StepSchedule {
  double tau0 = 1.0;
  double kappa = 0.75;

  void validate() const;  // kappa in (0.5, 1], tau0 >= 0
};

double step_size(std::int64_t s, const StepSchedule& schedule);

/// Natural-gradient step blending the statistic part of every parameter
/// around its fixed prior offset:
///   lambda <- lambda0 + (1 - rho)(lambda - lambda0) + rho * lambda_hat
///   tau1   <- 1       + (1 - rho)(tau1 - 1)         + rho * tau1_hat
///   tau2   <- alpha   + (1 - rho)(tau2 - alpha)     + rho * tau2_hat
/// Increments the step count.
void apply_stochastic_update(GlobalModel& model, const SufficientStats& stats, double rho);

/// Sparse probability vector over the vocabulary.
struct SparseDistribution {
  std::vector<int> terms;
  std::vector<double> probs;
};

SparseDistribution empirical_distribution(const BowDocument& doc);

struct KMeansResult {
  std::vector<std::vector<double>> centroids;  // dense, each sums to 1
  std::vector<int> assignment;
};

/// k-means under the L1 distance: seeding picks each new centre with
/// probability proportional to its L1 distance from the nearest chosen one,
/// assignments use L1, centres are cluster means. An emptied cluster is
/// reseeded from a random member of the data.
KMeansResult kmeans_l1(std::span<const SparseDistribution> points, int k, int vocab_size, int iterations,
                       Rng& rng);

double l1_distance(const SparseDistribution& x, std::span<const double> centroid);

struct KMeansInitConfig {
  double kappa = 0.5;
  double scale = 0.0;  // N; 0 selects the number of documents
  int iterations = 25;
};

/// Hierarchical k-means initialization of the topic parameters. Documents
/// are clustered into the children of each DP; each child's centroid is
/// subtracted from its members, negatives clamped and the remainder
/// renormalized before recursing. Final parameters are
///   lambda_i = N (kappa * mean_i + (1 - kappa)(1/V + noise_i)),
/// noise_i ~ Dirichlet(100/V * 1). Throws ConfigError with fewer documents
/// than leaves. `level_means`, when given, receives the centroid of every node.
std::vector<double> init_topics_hierarchical_kmeans(std::span<const BowDocument> docs, const TruncatedTree& tree,
                                                    int vocab_size, const KMeansInitConfig& config, Rng& rng,
                                                    std::vector<std::vector<double>>* level_means = nullptr);

}  // namespace nhdp
