#include "nhdp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "nhdp/errors.hpp"
#include "nhdp/parallel.hpp"

namespace nhdp {

std::vector<double> plugin_node_probabilities(const DocumentState& state, const TruncatedTree& tree) {
  const auto& st = state.subtree;
  const auto K = static_cast<std::size_t>(st.size());
  std::vector<double> stick_mean(K, 1.0), switch_mean(K, 1.0);
  for (std::size_t k = 0; k < K; ++k) {
    const int flat = st.node(static_cast<int>(k));
    if (st.break_position(static_cast<int>(k)) > 0) stick_mean[k] = state.u[k] / (state.u[k] + state.v[k]);
    if (!tree.is_truncation_leaf(flat)) switch_mean[k] = state.a[k] / (state.a[k] + state.b[k]);
  }
  std::vector<double> reach(K, 0.0), prob(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const int ki = static_cast<int>(k);
    const int p = st.parent_local(ki);
    double weight = 1.0;
    if (st.break_position(ki) > 0) {
      weight = stick_mean[k];
      const auto group = p >= 0 ? st.children_local(p) : st.top_local();
      for (int s : group) {
        if (st.break_position(s) < st.break_position(ki)) weight *= 1.0 - stick_mean[static_cast<std::size_t>(s)];
      }
    }
    const double arrive = p >= 0 ? reach[static_cast<std::size_t>(p)] * (1.0 - switch_mean[static_cast<std::size_t>(p)]) : 1.0;
    reach[k] = arrive * weight;
    prob[k] = reach[k] * switch_mean[k];
  }
  const double total = std::accumulate(prob.begin(), prob.end(), 0.0);
  if (!(total > 0.0)) throw NumericError("plug-in node probabilities vanish");
  for (double& p : prob) p /= total;
  return prob;
}

std::vector<double> predictive_distribution(const DocumentState& state, const GlobalModel& model) {
  const auto prob = plugin_node_probabilities(state, model.tree);
  const auto V = static_cast<std::size_t>(model.vocab_size);
  std::vector<double> out(V, 0.0);
  for (int k = 0; k < state.subtree.size(); ++k) {
    const auto topic = model.topic(state.subtree.node(k));
    const double total = std::accumulate(topic.begin(), topic.end(), 0.0);
    const double w = prob[static_cast<std::size_t>(k)] / total;
    for (std::size_t t = 0; t < V; ++t) out[t] += w * topic[t];
  }
  return out;
}

PredictiveReport heldout_loglik(const GlobalModel& model, std::span<const BowDocument> docs,
                                const HeldoutConfig& config, const LocalConfig& local,
                                std::vector<DocumentState>* states, std::vector<BowDocument>* observed) {
  const ModelExpectations ex(model);
  struct Slot {
    bool used = false;
    DocumentPrediction prediction;
    DocumentState state;
    BowDocument observed;
  };
  std::vector<Slot> slots(docs.size());
  parallel_for(docs.size(), config.threads, [&](std::size_t i) {
    const auto& doc = docs[i];
    if (doc.total_words() < 2) return;
    Rng rng = make_rng(config.seed, {static_cast<std::uint64_t>(i)});
    auto split = split_heldout_words(doc, config.observed_fraction, rng);
    auto state = run_local(split.observed, ex, local);
    const auto p = predictive_distribution(state, model);
    double ll = 0.0;
    int tokens = 0;
    for (const auto& e : split.heldout.entries) {
      ll += e.count * std::log(p[static_cast<std::size_t>(e.term)]);
      tokens += e.count;
    }
    slots[i] = {true, {doc.doc_id, tokens, ll / tokens}, std::move(state), std::move(split.observed)};
  });

  PredictiveReport report;
  double weighted = 0.0;
  long total_tokens = 0;
  for (auto& slot : slots) {
    if (!slot.used) {
      ++report.skipped;
      continue;
    }
    report.per_doc.push_back(slot.prediction);
    weighted += slot.prediction.avg_loglik * slot.prediction.heldout_tokens;
    total_tokens += slot.prediction.heldout_tokens;
    report.document_avg += slot.prediction.avg_loglik;
    if (states) states->push_back(std::move(slot.state));
    if (observed) observed->push_back(std::move(slot.observed));
  }
  if (!report.per_doc.empty()) {
    report.corpus_avg = weighted / static_cast<double>(total_tokens);
    report.document_avg /= static_cast<double>(report.per_doc.size());
  }
  return report;
}

std::vector<int> mass_threshold_counts(std::span<const double> node_mass, std::span<const double> fractions) {
  std::vector<double> sorted(node_mass.begin(), node_mass.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  std::vector<int> counts;
  for (double f : fractions) {
    // Relative slack keeps exact boundaries (e.g. 0.95 of a sum reached by
    // a prefix) from depending on summation rounding.
    const double target = f * total * (1.0 - 1e-12);
    double acc = 0.0;
    int n = 0;
    while (n < static_cast<int>(sorted.size()) && acc < target) acc += sorted[static_cast<std::size_t>(n++)];
    counts.push_back(n);
  }
  return counts;
}

TreeMassReport tree_mass_stats(const GlobalModel& model, std::span<const DocumentState> states,
                               std::span<const BowDocument> docs) {
  if (states.empty() || states.size() != docs.size()) {
    throw ConfigError("tree_mass_stats needs one state per document and at least one document");
  }
  const auto& tree = model.tree;
  TreeMassReport report;
  report.node_mass.assign(static_cast<std::size_t>(tree.size()), 0.0);
  report.level_words.assign(static_cast<std::size_t>(tree.depth() + 1), 0.0);
  report.level_active_nodes.assign(static_cast<std::size_t>(tree.depth() + 1), 0.0);
  for (std::size_t d = 0; d < states.size(); ++d) {
    const auto mass = states[d].node_mass(docs[d]);
    for (int k = 0; k < states[d].subtree.size(); ++k) {
      const int flat = states[d].subtree.node(k);
      const double m = mass[static_cast<std::size_t>(k)];
      report.node_mass[static_cast<std::size_t>(flat)] += m;
      const auto level = static_cast<std::size_t>(tree.level(flat));
      report.level_words[level] += m;
      if (m > 1.0) report.level_active_nodes[level] += 1.0;
    }
  }
  const double n = static_cast<double>(states.size());
  for (double& x : report.level_words) x /= n;
  for (double& x : report.level_active_nodes) x /= n;
  const double fractions[] = {0.95, 0.99, 0.999};
  const auto counts = mass_threshold_counts(report.node_mass, fractions);
  report.nodes_95 = counts[0];
  report.nodes_99 = counts[1];
  report.nodes_999 = counts[2];
  return report;
}

TopicTreeExport export_topics(const GlobalModel& model, const Vocabulary& vocab, int top_k) {
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  const auto& tree = model.tree;
  TopicTreeExport out;
  out.widths = tree.truncation().widths;
  out.include_root = tree.include_root();
  out.vocab_size = model.vocab_size;
  out.step = model.step_count;
  const auto weights = expected_node_weights(model);
  const auto k = static_cast<std::size_t>(std::min(top_k, model.vocab_size));
  std::vector<int> order(static_cast<std::size_t>(model.vocab_size));
  for (int i = 0; i < tree.size(); ++i) {
    const auto topic = model.topic(i);
    const double total = std::accumulate(topic.begin(), topic.end(), 0.0);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), [&](int x, int y) {
      const double px = topic[static_cast<std::size_t>(x)], py = topic[static_cast<std::size_t>(y)];
      return px > py || (px == py && x < y);
    });
    ExportedNode node{format_path(tree.node(i).path), tree.level(i), weights[static_cast<std::size_t>(i)], {}};
    for (std::size_t r = 0; r < k; ++r) {
      const int w = order[r];
      const std::string term = w < vocab.size() ? vocab.term(w) : std::to_string(w);
      node.top_terms.push_back({term, topic[static_cast<std::size_t>(w)] / total});
    }
    out.nodes.push_back(std::move(node));
  }
  return out;
}

std::string to_json(const TopicTreeExport& tree, int indent) {
  nlohmann::json j;
  j["format"] = "nhdp-topic-tree";
  j["version"] = 1;
  j["widths"] = tree.widths;
  j["include_root"] = tree.include_root;
  j["vocab_size"] = tree.vocab_size;
  j["step"] = tree.step;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : n.top_terms) terms.push_back({{"term", t.term}, {"prob", t.prob}});
    j["nodes"].push_back({{"id", n.id}, {"level", n.level}, {"weight", n.weight}, {"terms", std::move(terms)}});
  }
  return j.dump(indent);
}

TopicTreeExport topic_tree_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "nhdp-topic-tree") throw ParseError("not a topic tree document", 0);
    TopicTreeExport out;
    out.widths = j.at("widths").get<std::vector<int>>();
    out.include_root = j.at("include_root").get<bool>();
    out.vocab_size = j.at("vocab_size").get<int>();
    out.step = j.at("step").get<std::int64_t>();
    for (const auto& n : j.at("nodes")) {
      ExportedNode node{n.at("id").get<std::string>(), n.at("level").get<int>(), n.at("weight").get<double>(), {}};
      for (const auto& t : n.at("terms")) node.top_terms.push_back({t.at("term").get<std::string>(), t.at("prob").get<double>()});
      out.nodes.push_back(std::move(node));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("topic tree JSON: ") + e.what(), 0);
  }
}

std::string render_text(const TopicTreeExport& tree) {
  std::ostringstream out;
  out.precision(4);
  // Depth-first order: lexicographic on paths, root first.
  std::vector<std::pair<std::vector<int>, const ExportedNode*>> order;
  for (const auto& n : tree.nodes) order.emplace_back(parse_path(n.id), &n);
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [path, node] : order) {
    const auto& n = *node;
    const std::string pad(static_cast<std::size_t>(2 * std::max(0, n.level - (tree.include_root ? 0 : 1))), ' ');
    out << pad << n.id << "  (weight " << n.weight << ")\n" << pad << "   ";
    for (const auto& t : n.top_terms) out << ' ' << t.term << ':' << t.prob;
    out << '\n';
  }
  return out.str();
}

}  // namespace nhdp
