#include "nhdp/global_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nhdp/errors.hpp"

namespace nhdp {

SufficientStats accumulate_stats(std::span<const DocumentState> states, std::span<const BowDocument> docs,
                                 int corpus_size, const GlobalModel& model) {
  if (states.size() != docs.size()) throw ConfigError("accumulate_stats: states and documents differ in count");
  const auto& tree = model.tree;
  const auto V = static_cast<std::size_t>(model.vocab_size);
  const auto n = static_cast<std::size_t>(tree.size());
  SufficientStats stats;
  stats.lambda_hat.assign(n * V, 0.0);
  stats.tau1_hat.assign(n, 0.0);
  stats.tau2_hat.assign(n, 0.0);
  stats.batch_size = static_cast<int>(states.size());
  stats.corpus_size = corpus_size;
  if (states.empty()) return stats;

  const double scale = static_cast<double>(corpus_size) / static_cast<double>(states.size());
  for (std::size_t d = 0; d < states.size(); ++d) {
    const auto& state = states[d];
    const auto& doc = docs[d];
    if (state.snapshot_step != model.step_count) {
      throw CompatibilityError("document state fitted against step " + std::to_string(state.snapshot_step) +
                               ", model is at step " + std::to_string(model.step_count));
    }
    const auto& st = state.subtree;
    for (std::size_t t = 0; t < doc.entries.size(); ++t) {
      const auto row = state.nu_row(t);
      const double c = doc.entries[t].count * scale;
      for (int k = 0; k < st.size(); ++k) {
        stats.lambda_hat[static_cast<std::size_t>(st.node(k)) * V + static_cast<std::size_t>(doc.entries[t].term)] +=
            c * row[static_cast<std::size_t>(k)];
      }
    }
    for (int flat : st.nodes()) {
      stats.tau1_hat[static_cast<std::size_t>(flat)] += scale;
      // Every included sibling with a larger child index uses a later atom
      // of the same global DP.
      if (tree.include_root() && flat == 0) continue;
      for (int s : tree.siblings(flat)) {
        if (s > flat && st.contains(s)) stats.tau2_hat[static_cast<std::size_t>(flat)] += scale;
      }
    }
  }
  return stats;
}

void StepSchedule::validate() const {
  if (!(kappa > 0.5 && kappa <= 1.0)) throw ConfigError("kappa_rate must lie in (0.5, 1]");
  if (!(tau0 >= 0.0)) throw ConfigError("tau0 must be >= 0");
}

double step_size(std::int64_t s, const StepSchedule& schedule) {
  schedule.validate();
  if (s < 1) throw ConfigError("step index must be >= 1");
  return std::pow(schedule.tau0 + static_cast<double>(s), -schedule.kappa);
}

void apply_stochastic_update(GlobalModel& model, const SufficientStats& stats, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("step size must lie in (0, 1]");
  if (stats.lambda_hat.size() != model.lambda.size() || stats.tau1_hat.size() != model.tau1.size() ||
      stats.tau2_hat.size() != model.tau2.size()) {
    throw CompatibilityError("sufficient statistics do not match the model shape");
  }
  const auto blend = [rho](double current, double offset, double hat) {
    return offset + (1.0 - rho) * (current - offset) + rho * hat;
  };
  const auto& h = model.hyper;
  for (std::size_t k = 0; k < model.lambda.size(); ++k) {
    model.lambda[k] = blend(model.lambda[k], h.lambda0, stats.lambda_hat[k]);
  }
  for (std::size_t k = 0; k < model.tau1.size(); ++k) {
    model.tau1[k] = blend(model.tau1[k], 1.0, stats.tau1_hat[k]);
    model.tau2[k] = blend(model.tau2[k], h.alpha, stats.tau2_hat[k]);
  }
  ++model.step_count;
  model.validate();
}

// ---------------------------------------------------------------------------
// k-means initialization

SparseDistribution empirical_distribution(const BowDocument& doc) {
  SparseDistribution out;
  const double n = doc.total_words();
  for (const auto& e : doc.entries) {
    out.terms.push_back(e.term);
    out.probs.push_back(e.count / n);
  }
  return out;
}

double l1_distance(const SparseDistribution& x, std::span<const double> centroid) {
  // |c|_1 plus, on the support of x, the correction |x - c| - c.
  double dist = std::accumulate(centroid.begin(), centroid.end(), 0.0);
  for (std::size_t k = 0; k < x.terms.size(); ++k) {
    const double c = centroid[static_cast<std::size_t>(x.terms[k])];
    dist += std::abs(x.probs[k] - c) - c;
  }
  return std::max(dist, 0.0);
}

namespace {

std::vector<double> densify(const SparseDistribution& x, int vocab_size) {
  std::vector<double> out(static_cast<std::size_t>(vocab_size), 0.0);
  for (std::size_t k = 0; k < x.terms.size(); ++k) out[static_cast<std::size_t>(x.terms[k])] = x.probs[k];
  return out;
}

std::vector<double> uniform_distribution(int vocab_size) {
  return std::vector<double>(static_cast<std::size_t>(vocab_size), 1.0 / vocab_size);
}

}  // namespace

KMeansResult kmeans_l1(std::span<const SparseDistribution> points, int k, int vocab_size, int iterations,
                       Rng& rng) {
  if (k < 1) throw ConfigError("k-means needs k >= 1");
  if (points.empty()) throw ConfigError("k-means needs at least one point");
  const std::size_t n = points.size();
  KMeansResult result;
  result.assignment.assign(n, 0);

  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  result.centroids.push_back(densify(points[any(rng)], vocab_size));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(result.centroids.size()) < k) {
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], l1_distance(points[i], result.centroids.back()));
    }
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    const std::size_t next = total > 0.0 ? sample_categorical(rng, nearest) : any(rng);
    result.centroids.push_back(densify(points[next], vocab_size));
  }

  for (int iter = 0; iter < iterations; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dist = l1_distance(points[i], result.centroids[static_cast<std::size_t>(c)]);
        if (dist < best_dist) {
          best = c;
          best_dist = dist;
        }
      }
      if (result.assignment[i] != best) changed = true;
      result.assignment[i] = best;
    }
    if (!changed) break;

    std::vector<int> members(static_cast<std::size_t>(k), 0);
    for (auto& c : result.centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignment[i]);
      ++members[c];
      for (std::size_t t = 0; t < points[i].terms.size(); ++t) {
        result.centroids[c][static_cast<std::size_t>(points[i].terms[t])] += points[i].probs[t];
      }
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (members[c] == 0) {
        result.centroids[c] = densify(points[any(rng)], vocab_size);
      } else {
        for (double& x : result.centroids[c]) x /= members[c];
      }
    }
  }
  return result;
}

namespace {

// max(x - mean, 0) renormalized; nullopt-like empty result when nothing remains.
SparseDistribution residual(const SparseDistribution& x, std::span<const double> mean) {
  SparseDistribution out;
  double total = 0.0;
  for (std::size_t k = 0; k < x.terms.size(); ++k) {
    const double r = x.probs[k] - mean[static_cast<std::size_t>(x.terms[k])];
    if (r > 0.0) {
      out.terms.push_back(x.terms[k]);
      out.probs.push_back(r);
      total += r;
    }
  }
  for (double& p : out.probs) p /= total;
  return out;
}

std::vector<double> mean_of(std::span<const SparseDistribution> points, int vocab_size) {
  std::vector<double> mean(static_cast<std::size_t>(vocab_size), 0.0);
  for (const auto& p : points) {
    for (std::size_t k = 0; k < p.terms.size(); ++k) mean[static_cast<std::size_t>(p.terms[k])] += p.probs[k];
  }
  for (double& m : mean) m /= static_cast<double>(points.size());
  return mean;
}

struct HierarchicalKMeans {
  const TruncatedTree& tree;
  int vocab_size;
  int iterations;
  Rng& rng;
  std::vector<std::vector<double>>& means;

  std::vector<SparseDistribution> strip(std::span<const SparseDistribution> group, std::span<const double> mean) {
    std::vector<SparseDistribution> next;
    for (const auto& x : group) {
      auto r = residual(x, mean);
      if (!r.terms.empty()) next.push_back(std::move(r));
    }
    return next;
  }

  void split(std::span<const int> kids, std::span<const SparseDistribution> group) {
    if (kids.empty()) return;
    const int k = static_cast<int>(kids.size());
    if (group.empty()) {
      for (int c : kids) {
        means[static_cast<std::size_t>(c)] = uniform_distribution(vocab_size);
        split(tree.children(c), {});
      }
      return;
    }
    const auto km = kmeans_l1(group, k, vocab_size, iterations, rng);
    for (int j = 0; j < k; ++j) {
      const int node = kids[static_cast<std::size_t>(j)];
      means[static_cast<std::size_t>(node)] = km.centroids[static_cast<std::size_t>(j)];
      if (tree.children(node).empty()) continue;
      std::vector<SparseDistribution> members;
      for (std::size_t i = 0; i < group.size(); ++i) {
        if (km.assignment[i] == j) members.push_back(group[i]);
      }
      const auto next = strip(members, means[static_cast<std::size_t>(node)]);
      split(tree.children(node), next);
    }
  }
};

}  // namespace

std::vector<double> init_topics_hierarchical_kmeans(std::span<const BowDocument> docs, const TruncatedTree& tree,
                                                    int vocab_size, const KMeansInitConfig& config, Rng& rng,
                                                    std::vector<std::vector<double>>* level_means) {
  if (!(config.kappa >= 0.0 && config.kappa <= 1.0)) throw ConfigError("kappa must lie in [0, 1]");
  if (static_cast<int>(docs.size()) < tree.leaf_count()) {
    throw ConfigError("k-means initialization needs at least " + std::to_string(tree.leaf_count()) +
                      " documents, got " + std::to_string(docs.size()));
  }
  std::vector<SparseDistribution> points;
  points.reserve(docs.size());
  for (const auto& d : docs) points.push_back(empirical_distribution(d));

  std::vector<std::vector<double>> means(static_cast<std::size_t>(tree.size()));
  HierarchicalKMeans hk{tree, vocab_size, config.iterations, rng, means};
  if (tree.include_root()) {
    means[0] = mean_of(points, vocab_size);
    hk.split(tree.children(0), hk.strip(points, means[0]));
  } else {
    hk.split(tree.top_level(), points);
  }

  const double scale = config.scale > 0.0 ? config.scale : static_cast<double>(docs.size());
  const auto V = static_cast<std::size_t>(vocab_size);
  std::vector<double> lambda(static_cast<std::size_t>(tree.size()) * V);
  for (std::size_t i = 0; i < static_cast<std::size_t>(tree.size()); ++i) {
    const auto noise = sample_symmetric_dirichlet(rng, 100.0 / vocab_size, V);
    for (std::size_t w = 0; w < V; ++w) {
      // The floor only matters at kappa = 1, where unused terms would get 0.
      lambda[i * V + w] = std::max(
          scale * (config.kappa * means[i][w] + (1.0 - config.kappa) * (1.0 / vocab_size + noise[w])), 1e-8);
    }
  }
  if (level_means) *level_means = std::move(means);
  return lambda;
}

}  // namespace nhdp
