#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nhdp/corpus.hpp"
#include "nhdp/global_model.hpp"

namespace nhdp {

struct LocalConfig {
  /// Greedy selection stops once the best marginal gain falls below this.
  double greedy_threshold = 1e-3;
  /// Coordinate ascent stops once the L1 change of the document's
  /// word-to-node distribution falls below this.
  double l1_tolerance = 1e-2;
  int max_local_iters = 50;
  int max_subtree_nodes = 50;
  /// nCRP-style restriction: at most one included child per node.
  bool single_path = false;
  /// Include E_q[ln p(z | V)] for each selected atom in the objective.
  bool score_global_sticks = true;

  void validate() const;  // throws ConfigError
};

/// Connected set of tree nodes selected for one document, in inclusion order
/// (a parent always precedes its children). Each non-root node records the
/// 1-based break of its parent's document-level stick construction that
/// points at it; siblings take breaks 1, 2, ... in inclusion order.
class Subtree {
public:
  Subtree() = default;
  explicit Subtree(const TruncatedTree& tree);

  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::span<const int> nodes() const noexcept { return nodes_; }
  int node(int k) const { return nodes_.at(static_cast<std::size_t>(k)); }
  int break_position(int k) const { return breaks_.at(static_cast<std::size_t>(k)); }
  /// Local index of the parent, -1 for top-level nodes and the root.
  int parent_local(int k) const { return parent_local_.at(static_cast<std::size_t>(k)); }
  /// Local indices of included children in break order.
  std::span<const int> children_local(int k) const { return children_.at(static_cast<std::size_t>(k)); }
  std::span<const int> top_local() const noexcept { return top_; }
  /// -1 when the node is not included.
  int local_index(int flat) const;
  bool contains(int flat) const { return local_index(flat) >= 0; }

  /// Break position a new child of `parent_flat` (-1: top DP) would take.
  int next_break(int parent_flat) const;
  /// Appends a node whose parent is already included. Throws ConfigError otherwise.
  int add(const TruncatedTree& tree, int flat);

private:
  std::vector<int> nodes_;
  std::vector<int> breaks_;
  std::vector<int> parent_local_;
  std::vector<std::vector<int>> children_;
  std::vector<int> top_;
  std::vector<int> index_of_;  // flat id -> local index
};

/// Per-document variational state over its subtree. `nu` is row-major
/// [word type][subtree node], word types in the document's entry order.
struct DocumentState {
  Subtree subtree;
  std::vector<double> nu;
  std::vector<double> u, v;  // q(V^(d)) per subtree node (its break under its parent)
  std::vector<double> a, b;  // q(U_d) per subtree node
  std::int64_t snapshot_step = 0;
  int iterations = 0;

  int width() const noexcept { return subtree.size(); }
  std::span<const double> nu_row(std::size_t type) const {
    return std::span<const double>(nu).subspan(type * static_cast<std::size_t>(width()),
                                               static_cast<std::size_t>(width()));
  }
  /// Expected tokens allocated to each subtree node.
  std::vector<double> node_mass(const BowDocument& doc) const;
};

enum class PriorMode { prior_fixed, current_q };

/// State over `subtree` with local Betas at their priors and empty nu.
DocumentState make_prior_state(Subtree subtree, const Hyperparameters& hyper, std::size_t types,
                               std::int64_t snapshot_step = 0);

/// Per-break and per-switch log expectations feeding the tree prior.
struct PriorFactors {
  std::vector<double> stick_elog, stick_elog1m;    // per subtree node (its break)
  std::vector<double> switch_elog, switch_elog1m;  // per subtree node
};

PriorFactors prior_factors(const DocumentState& state, const TruncatedTree& tree,
                           const Hyperparameters& hyper, PriorMode mode);

/// E[ln pi_{d,i}] for every subtree node from arbitrary per-factor values.
/// Switches at truncation leaves contribute nothing (the word stops there).
std::vector<double> compose_log_prior(const Subtree& subtree, const TruncatedTree& tree,
                                      const PriorFactors& factors);

std::vector<double> log_prior_over_subtree(const DocumentState& state, const TruncatedTree& tree,
                                           const Hyperparameters& hyper, PriorMode mode);

void update_nu(const BowDocument& doc, DocumentState& state, const ModelExpectations& ex,
               PriorMode mode = PriorMode::current_q);
void update_sticks(const BowDocument& doc, DocumentState& state, const Hyperparameters& hyper);
void update_switches(const BowDocument& doc, DocumentState& state, const Hyperparameters& hyper);

/// Restricted objective used by greedy selection: local Betas fixed at their
/// priors and nu optimized in closed form over the subtree, giving
/// sum_w count(w) * logsumexp_i(E ln theta_iw + E ln pi_i) plus, when
/// enabled, the E ln p(z | V) term of every selected atom.
double restricted_objective(const BowDocument& doc, const Subtree& subtree, const ModelExpectations& ex,
                            const LocalConfig& config);

/// Restricted objective of subtree + {candidate}; the candidate takes the
/// break after its already included siblings.
double greedy_candidate_score(const BowDocument& doc, const Subtree& subtree, int candidate,
                              const ModelExpectations& ex, const LocalConfig& config);

/// Candidates activated by the subtree: children of included nodes (or
/// top-level nodes) not yet included, respecting single-path mode.
std::vector<int> activated_candidates(const Subtree& subtree, const TruncatedTree& tree,
                                      const LocalConfig& config);

Subtree select_subtree(const BowDocument& doc, const ModelExpectations& ex, const LocalConfig& config);

/// Local evidence lower bound of one document given its state:
/// expected log likelihood and tree prior of word allocations, entropy of nu,
/// minus KL of every local Beta from its prior, plus the atom-selection term
/// when enabled.
double local_elbo(const BowDocument& doc, const DocumentState& state, const ModelExpectations& ex,
                  const LocalConfig& config);

/// Called with the initial state (sweep 0) and after every coordinate sweep.
using LocalObserver = std::function<void(int sweep, const DocumentState& state)>;

/// Greedy subtree selection followed by coordinate ascent. Local Betas start
/// at their priors, so the initial nu is the greedy step's allocation. Each
/// sweep updates sticks, switches, then nu; the loop stops when the L1
/// distance between successive word-to-node distributions (each a
/// probability vector over subtree nodes, so this equals the fractional
/// change) falls below l1_tolerance, or after max_local_iters sweeps. A
/// final stick/switch update leaves the Betas consistent with the final nu.
DocumentState run_local(const BowDocument& doc, const ModelExpectations& ex, const LocalConfig& config,
                        const LocalObserver& observer = {});

/// Fits the local state on an externally chosen subtree.
DocumentState fit_subtree(const BowDocument& doc, Subtree subtree, const ModelExpectations& ex,
                          const LocalConfig& config, const LocalObserver& observer = {});

}  // namespace nhdp
