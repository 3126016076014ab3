#include "nhdp/local_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nhdp/errors.hpp"
#include "nhdp/specfun.hpp"

namespace nhdp {

void LocalConfig::validate() const {
  if (std::isnan(greedy_threshold)) throw ConfigError("greedy_threshold must be a number");
  if (!(l1_tolerance >= 0.0)) throw ConfigError("l1_tolerance must be >= 0");
  if (max_local_iters < 1) throw ConfigError("max_local_iters must be >= 1");
  if (max_subtree_nodes < 1) throw ConfigError("max_subtree_nodes must be >= 1");
}

// ---------------------------------------------------------------------------
// Subtree

Subtree::Subtree(const TruncatedTree& tree) : index_of_(static_cast<std::size_t>(tree.size()), -1) {}

int Subtree::local_index(int flat) const {
  if (flat < 0 || static_cast<std::size_t>(flat) >= index_of_.size()) return -1;
  return index_of_[static_cast<std::size_t>(flat)];
}

int Subtree::next_break(int parent_flat) const {
  if (parent_flat < 0) return static_cast<int>(top_.size()) + 1;
  const int k = local_index(parent_flat);
  if (k < 0) throw ConfigError("parent not in subtree");
  return static_cast<int>(children_[static_cast<std::size_t>(k)].size()) + 1;
}

int Subtree::add(const TruncatedTree& tree, int flat) {
  if (index_of_.size() != static_cast<std::size_t>(tree.size())) index_of_.assign(static_cast<std::size_t>(tree.size()), -1);
  if (flat < 0 || flat >= tree.size()) throw ConfigError("node outside the tree");
  if (contains(flat)) throw ConfigError("node " + format_path(tree.node(flat).path) + " already in subtree");
  const int p = tree.parent(flat);
  const bool is_root = tree.include_root() && flat == 0;
  int parent_k = -1;
  if (p >= 0) {
    parent_k = local_index(p);
    if (parent_k < 0) {
      throw ConfigError("parent of " + format_path(tree.node(flat).path) + " not in subtree");
    }
  }
  const int k = size();
  nodes_.push_back(flat);
  breaks_.push_back(is_root ? 0 : next_break(p));
  parent_local_.push_back(parent_k);
  children_.emplace_back();
  if (parent_k >= 0) {
    children_[static_cast<std::size_t>(parent_k)].push_back(k);
  } else if (!is_root) {
    top_.push_back(k);
  }
  index_of_[static_cast<std::size_t>(flat)] = k;
  return k;
}

// ---------------------------------------------------------------------------
// State helpers

std::vector<double> DocumentState::node_mass(const BowDocument& doc) const {
  const auto K = static_cast<std::size_t>(width());
  std::vector<double> mass(K, 0.0);
  for (std::size_t t = 0; t < doc.entries.size(); ++t) {
    const double c = doc.entries[t].count;
    const auto row = nu_row(t);
    for (std::size_t k = 0; k < K; ++k) mass[k] += c * row[k];
  }
  return mass;
}

DocumentState make_prior_state(Subtree subtree, const Hyperparameters& hyper, std::size_t types,
                               std::int64_t snapshot_step) {
  DocumentState state;
  const auto K = static_cast<std::size_t>(subtree.size());
  state.subtree = std::move(subtree);
  state.nu.assign(types * K, 0.0);
  state.u.assign(K, 1.0);
  state.v.assign(K, hyper.beta);
  state.a.assign(K, hyper.gamma1);
  state.b.assign(K, hyper.gamma2);
  state.snapshot_step = snapshot_step;
  return state;
}

namespace {

bool is_root_node(const TruncatedTree& tree, int flat) { return tree.include_root() && flat == 0; }

std::span<const int> sibling_group(const Subtree& subtree, int k) {
  const int p = subtree.parent_local(k);
  return p >= 0 ? subtree.children_local(p) : subtree.top_local();
}

// Expected mass in the subtree rooted at each node (node itself included).
std::vector<double> subtree_mass(const Subtree& subtree, const std::vector<double>& mass) {
  std::vector<double> sub = mass;
  for (int k = subtree.size() - 1; k >= 0; --k) {
    const int p = subtree.parent_local(k);
    if (p >= 0) sub[static_cast<std::size_t>(p)] += sub[static_cast<std::size_t>(k)];
  }
  return sub;
}

}  // namespace

PriorFactors prior_factors(const DocumentState& state, const TruncatedTree& tree,
                           const Hyperparameters& hyper, PriorMode mode) {
  const auto K = static_cast<std::size_t>(state.width());
  PriorFactors f;
  f.stick_elog.assign(K, 0.0);
  f.stick_elog1m.assign(K, 0.0);
  f.switch_elog.assign(K, 0.0);
  f.switch_elog1m.assign(K, 0.0);
  const auto stick_prior = expect_log_beta(1.0, hyper.beta);
  const auto switch_prior = expect_log_beta(hyper.gamma1, hyper.gamma2);
  for (std::size_t k = 0; k < K; ++k) {
    const int flat = state.subtree.node(static_cast<int>(k));
    if (!is_root_node(tree, flat)) {
      const auto e = mode == PriorMode::prior_fixed ? stick_prior : expect_log_beta(state.u[k], state.v[k]);
      f.stick_elog[k] = e.e_log;
      f.stick_elog1m[k] = e.e_log1m;
    }
    if (!tree.is_truncation_leaf(flat)) {
      const auto e = mode == PriorMode::prior_fixed ? switch_prior : expect_log_beta(state.a[k], state.b[k]);
      f.switch_elog[k] = e.e_log;
      f.switch_elog1m[k] = e.e_log1m;
    }
  }
  return f;
}

std::vector<double> compose_log_prior(const Subtree& subtree, const TruncatedTree& tree,
                                      const PriorFactors& f) {
  const auto K = static_cast<std::size_t>(subtree.size());
  // down[k]: log probability of reaching node k (path sticks and the
  // continue-switches of its ancestors), before its own switch.
  std::vector<double> down(K, 0.0), out(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const int ki = static_cast<int>(k);
    const int flat = subtree.node(ki);
    double value = 0.0;
    const int p = subtree.parent_local(ki);
    if (p >= 0) value = down[static_cast<std::size_t>(p)] + f.switch_elog1m[static_cast<std::size_t>(p)];
    if (!is_root_node(tree, flat)) {
      value += f.stick_elog[k];
      const int j = subtree.break_position(ki);
      for (int s : sibling_group(subtree, ki)) {
        if (subtree.break_position(s) < j) value += f.stick_elog1m[static_cast<std::size_t>(s)];
      }
    }
    down[k] = value;
    out[k] = value + (tree.is_truncation_leaf(flat) ? 0.0 : f.switch_elog[k]);
  }
  return out;
}

std::vector<double> log_prior_over_subtree(const DocumentState& state, const TruncatedTree& tree,
                                           const Hyperparameters& hyper, PriorMode mode) {
  return compose_log_prior(state.subtree, tree, prior_factors(state, tree, hyper, mode));
}

void update_nu(const BowDocument& doc, DocumentState& state, const ModelExpectations& ex, PriorMode mode) {
  if (state.subtree.empty()) throw ConfigError("update_nu: empty subtree");
  const auto log_prior = log_prior_over_subtree(state, ex.tree(), ex.hyper(), mode);
  const auto K = static_cast<std::size_t>(state.width());
  state.nu.resize(doc.entries.size() * K);
  for (std::size_t t = 0; t < doc.entries.size(); ++t) {
    std::span<double> row(state.nu.data() + t * K, K);
    for (std::size_t k = 0; k < K; ++k) {
      row[k] = ex.elog_theta_at(state.subtree.node(static_cast<int>(k)), doc.entries[t].term) + log_prior[k];
    }
    normalize_log_inplace(row);
    for (double& x : row) x = std::exp(x);
  }
}

void update_sticks(const BowDocument& doc, DocumentState& state, const Hyperparameters& hyper) {
  const auto sub = subtree_mass(state.subtree, state.node_mass(doc));
  const auto& st = state.subtree;
  for (int k = 0; k < st.size(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    state.u[kk] = 1.0 + sub[kk];
    double later = 0.0;
    if (st.break_position(k) > 0) {
      for (int s : sibling_group(st, k)) {
        if (st.break_position(s) > st.break_position(k)) later += sub[static_cast<std::size_t>(s)];
      }
    } else {
      state.u[kk] = 1.0;  // the root has no stick
    }
    state.v[kk] = hyper.beta + later;
  }
}

void update_switches(const BowDocument& doc, DocumentState& state, const Hyperparameters& hyper) {
  const auto mass = state.node_mass(doc);
  const auto sub = subtree_mass(state.subtree, mass);
  const auto& st = state.subtree;
  for (int k = 0; k < st.size(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    double below = 0.0;
    for (int c : st.children_local(k)) below += sub[static_cast<std::size_t>(c)];
    state.a[kk] = hyper.gamma1 + mass[kk];
    state.b[kk] = hyper.gamma2 + below;
  }
}

// ---------------------------------------------------------------------------
// Greedy selection

double restricted_objective(const BowDocument& doc, const Subtree& subtree, const ModelExpectations& ex,
                            const LocalConfig& config) {
  if (subtree.empty()) return -std::numeric_limits<double>::infinity();
  const DocumentState state = make_prior_state(subtree, ex.hyper(), doc.entries.size());
  const auto log_prior = log_prior_over_subtree(state, ex.tree(), ex.hyper(), PriorMode::prior_fixed);
  const auto K = static_cast<std::size_t>(subtree.size());
  std::vector<double> row(K);
  double total = 0.0;
  for (const auto& e : doc.entries) {
    for (std::size_t k = 0; k < K; ++k) {
      row[k] = ex.elog_theta_at(subtree.node(static_cast<int>(k)), e.term) + log_prior[k];
    }
    total += e.count * log_sum_exp(row);
  }
  if (config.score_global_sticks) {
    for (int flat : subtree.nodes()) total += ex.elog_pick[static_cast<std::size_t>(flat)];
  }
  return total;
}

double greedy_candidate_score(const BowDocument& doc, const Subtree& subtree, int candidate,
                              const ModelExpectations& ex, const LocalConfig& config) {
  const auto& tree = ex.tree();
  if (candidate < 0 || candidate >= tree.size() || subtree.contains(candidate)) {
    throw ConfigError("invalid greedy candidate");
  }
  const int p = tree.parent(candidate);
  if (p >= 0 && !subtree.contains(p)) throw ConfigError("greedy candidate's parent is not in the subtree");
  Subtree extended = subtree;
  extended.add(tree, candidate);
  return restricted_objective(doc, extended, ex, config);
}

std::vector<int> activated_candidates(const Subtree& subtree, const TruncatedTree& tree,
                                      const LocalConfig& config) {
  std::vector<int> out;
  const auto consider = [&](std::span<const int> kids, bool parent_has_child) {
    if (config.single_path && parent_has_child) return;
    for (int c : kids) {
      if (!subtree.contains(c)) out.push_back(c);
    }
  };
  if (tree.include_root()) {
    if (!subtree.contains(0)) out.push_back(0);
  } else {
    consider(tree.top_level(), !subtree.top_local().empty());
  }
  for (int k = 0; k < subtree.size(); ++k) {
    consider(tree.children(subtree.node(k)), !subtree.children_local(k).empty());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Subtree select_subtree(const BowDocument& doc, const ModelExpectations& ex, const LocalConfig& config) {
  const auto& tree = ex.tree();
  const auto& hyper = ex.hyper();
  if (doc.entries.empty()) throw ConfigError("select_subtree: empty document");
  const auto stick = expect_log_beta(1.0, hyper.beta);
  const auto sw = expect_log_beta(hyper.gamma1, hyper.gamma2);
  const std::size_t T = doc.entries.size();

  Subtree subtree(tree);
  std::vector<double> down;     // per local node, see compose_log_prior
  std::vector<double> lse(T);   // per word type, logsumexp over included nodes

  // Prior-fixed log prior of `flat` if it were added now.
  const auto candidate_prior = [&](int flat, double& down_out) {
    double value = 0.0;
    if (!is_root_node(tree, flat)) {
      const int p = tree.parent(flat);
      if (p >= 0) value = down[static_cast<std::size_t>(subtree.local_index(p))] + sw.e_log1m;
      value += stick.e_log + (subtree.next_break(p) - 1) * stick.e_log1m;
    }
    down_out = value;
    return value + (tree.is_truncation_leaf(flat) ? 0.0 : sw.e_log);
  };
  const auto pick = [&](int flat) {
    return config.score_global_sticks ? ex.elog_pick[static_cast<std::size_t>(flat)] : 0.0;
  };
  const auto accept = [&](int flat) {
    double d = 0.0;
    const double lp = candidate_prior(flat, d);
    for (std::size_t t = 0; t < T; ++t) {
      const double s = ex.elog_theta_at(flat, doc.entries[t].term) + lp;
      if (subtree.empty()) {
        lse[t] = s;
      } else {
        const double hi = std::max(lse[t], s);
        lse[t] = hi + std::log(std::exp(lse[t] - hi) + std::exp(s - hi));
      }
    }
    subtree.add(tree, flat);
    down.push_back(d);
  };

  if (tree.include_root()) {
    accept(0);
  } else {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c : tree.top_level()) {
      double d = 0.0;
      const double lp = candidate_prior(c, d);
      double score = pick(c);
      for (const auto& e : doc.entries) score += e.count * (ex.elog_theta_at(c, e.term) + lp);
      if (best < 0 || score > best_score) {
        best = c;
        best_score = score;
      }
    }
    accept(best);
  }

  while (subtree.size() < config.max_subtree_nodes) {
    int best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int c : activated_candidates(subtree, tree, config)) {
      double d = 0.0;
      const double lp = candidate_prior(c, d);
      double gain = pick(c);
      for (std::size_t t = 0; t < T; ++t) {
        const double s = ex.elog_theta_at(c, doc.entries[t].term) + lp;
        // log(exp(lse) + exp(s)) - lse
        const double x = s - lse[t];
        gain += doc.entries[t].count * (x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)));
      }
      if (best < 0 || gain > best_gain) {
        best = c;
        best_gain = gain;
      }
    }
    if (best < 0 || !(best_gain > config.greedy_threshold)) break;
    accept(best);
  }
  return subtree;
}

// ---------------------------------------------------------------------------
// Objective and coordinate ascent

double local_elbo(const BowDocument& doc, const DocumentState& state, const ModelExpectations& ex,
                  const LocalConfig& config) {
  const auto& tree = ex.tree();
  const auto& hyper = ex.hyper();
  const auto log_prior = log_prior_over_subtree(state, tree, hyper, PriorMode::current_q);
  const auto K = static_cast<std::size_t>(state.width());
  double elbo = 0.0;
  for (std::size_t t = 0; t < doc.entries.size(); ++t) {
    const auto row = state.nu_row(t);
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (row[k] <= 0.0) continue;
      acc += row[k] * (ex.elog_theta_at(state.subtree.node(static_cast<int>(k)), doc.entries[t].term) +
                       log_prior[k] - std::log(row[k]));
    }
    elbo += doc.entries[t].count * acc;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const int flat = state.subtree.node(static_cast<int>(k));
    if (!is_root_node(tree, flat)) {
      elbo -= kl_beta(state.u[k], state.v[k], 1.0, hyper.beta);
      if (config.score_global_sticks) elbo += ex.elog_pick[static_cast<std::size_t>(flat)];
    }
    if (!tree.is_truncation_leaf(flat)) elbo -= kl_beta(state.a[k], state.b[k], hyper.gamma1, hyper.gamma2);
  }
  return elbo;
}

namespace {

std::vector<double> word_node_distribution(const BowDocument& doc, const DocumentState& state) {
  auto mass = state.node_mass(doc);
  const double n = doc.total_words();
  for (double& m : mass) m /= n;
  return mass;
}

}  // namespace

DocumentState fit_subtree(const BowDocument& doc, Subtree subtree, const ModelExpectations& ex,
                          const LocalConfig& config, const LocalObserver& observer) {
  const auto& hyper = ex.hyper();
  DocumentState state = make_prior_state(std::move(subtree), hyper, doc.entries.size(), ex.step);
  update_nu(doc, state, ex, PriorMode::current_q);
  if (observer) observer(0, state);
  auto previous = word_node_distribution(doc, state);
  for (int sweep = 1; sweep <= config.max_local_iters; ++sweep) {
    update_sticks(doc, state, hyper);
    update_switches(doc, state, hyper);
    update_nu(doc, state, ex, PriorMode::current_q);
    state.iterations = sweep;
    if (observer) observer(sweep, state);
    auto current = word_node_distribution(doc, state);
    double change = 0.0;
    for (std::size_t k = 0; k < current.size(); ++k) change += std::abs(current[k] - previous[k]);
    previous = std::move(current);
    if (change < config.l1_tolerance) break;
  }
  update_sticks(doc, state, hyper);
  update_switches(doc, state, hyper);
  return state;
}

DocumentState run_local(const BowDocument& doc, const ModelExpectations& ex, const LocalConfig& config,
                        const LocalObserver& observer) {
  return fit_subtree(doc, select_subtree(doc, ex, config), ex, config, observer);
}

}  // namespace nhdp
