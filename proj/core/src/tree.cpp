#include "nhdp/tree.hpp"

#include <algorithm>
#include <charconv>

#include "nhdp/errors.hpp"

namespace nhdp {

void Truncation::validate() const {
  if (widths.empty()) throw ConfigError("truncation needs at least one level");
  for (int w : widths) {
    if (w < 1) throw ConfigError("truncation widths must be >= 1");
  }
}

std::string format_path(std::span<const int> path) {
  if (path.empty()) return "root";
  std::string out;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (k) out += '/';
    out += std::to_string(path[k]);
  }
  return out;
}

std::vector<int> parse_path(std::string_view text) {
  std::vector<int> path;
  if (text == "root") return path;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t slash = std::min(text.find('/', pos), text.size());
    const std::string_view part = text.substr(pos, slash - pos);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size() || value < 1) {
      throw ParseError("bad node path '" + std::string(text) + "'", 0);
    }
    path.push_back(value);
    pos = slash + 1;
  }
  return path;
}

int total_nodes(const Truncation& trunc, bool include_root) {
  int total = include_root ? 1 : 0;
  int width = 1;
  for (int w : trunc.widths) {
    width *= w;
    total += width;
  }
  return total;
}

TruncatedTree::TruncatedTree(Truncation trunc, bool include_root)
    : trunc_(std::move(trunc)), include_root_(include_root) {
  trunc_.validate();
  const int n = total_nodes(trunc_, include_root_);
  nodes_.reserve(static_cast<std::size_t>(n));
  parent_.reserve(static_cast<std::size_t>(n));
  child_begin_.assign(static_cast<std::size_t>(n), 0);
  child_count_.assign(static_cast<std::size_t>(n), 0);

  // Breadth-first expansion: each frontier node spawns its children in order.
  std::vector<int> frontier;
  if (include_root_) {
    nodes_.push_back({{}, 0});
    parent_.push_back(-1);
    frontier.push_back(0);
  }
  level_offset_.push_back(0);
  for (int l = 0; l < depth(); ++l) {
    const int width = trunc_.widths[static_cast<std::size_t>(l)];
    std::vector<int> next;
    level_offset_.push_back(static_cast<int>(nodes_.size()));
    if (l == 0 && !include_root_) {
      for (int j = 1; j <= width; ++j) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({{j}, id});
        parent_.push_back(-1);
        next.push_back(id);
      }
    } else {
      for (int p : frontier) {
        child_begin_[static_cast<std::size_t>(p)] = static_cast<int>(nodes_.size());
        child_count_[static_cast<std::size_t>(p)] = width;
        for (int j = 1; j <= width; ++j) {
          const int id = static_cast<int>(nodes_.size());
          std::vector<int> path = nodes_[static_cast<std::size_t>(p)].path;
          path.push_back(j);
          nodes_.push_back({std::move(path), id});
          parent_.push_back(p);
          next.push_back(id);
        }
      }
    }
    if (l == 0) top_level_ = next;
    frontier = std::move(next);
  }
  ids_.resize(nodes_.size());
  for (std::size_t k = 0; k < ids_.size(); ++k) ids_[k] = static_cast<int>(k);
}

std::span<const int> TruncatedTree::children(int flat) const {
  const auto k = static_cast<std::size_t>(flat);
  const int count = child_count_.at(k);
  if (count == 0) return {};
  // Children hold consecutive flat ids, so they are a window of ids_.
  return std::span<const int>(ids_).subspan(static_cast<std::size_t>(child_begin_[k]),
                                            static_cast<std::size_t>(count));
}

std::span<const int> TruncatedTree::siblings(int flat) const {
  if (include_root_ && flat == 0) return std::span<const int>(ids_).subspan(0, 1);
  const int p = parent(flat);
  return p < 0 ? top_level() : children(p);
}

bool TruncatedTree::is_last_child(int flat) const {
  const auto sib = siblings(flat);
  return !sib.empty() && sib.back() == flat;
}

std::optional<int> TruncatedTree::find(std::span<const int> path) const {
  if (path.empty()) {
    if (include_root_) return 0;
    return std::nullopt;
  }
  if (static_cast<int>(path.size()) > depth()) return std::nullopt;
  int index = 0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const int w = trunc_.widths[k];
    if (path[k] < 1 || path[k] > w) return std::nullopt;
    index = index * w + (path[k] - 1);
  }
  return level_offset_[path.size()] + index;
}

int TruncatedTree::leaf_count() const {
  int count = 1;
  for (int w : trunc_.widths) count *= w;
  return count;
}

std::vector<TreeNodeId> enumerate_nodes(const Truncation& trunc, bool include_root) {
  const TruncatedTree tree(trunc, include_root);
  return {tree.nodes().begin(), tree.nodes().end()};
}

std::optional<TreeNodeId> parent(const TruncatedTree& tree, const TreeNodeId& node) {
  const int p = tree.parent(node.flat_id);
  if (p < 0) return std::nullopt;
  return tree.node(p);
}

std::vector<TreeNodeId> children(const TruncatedTree& tree, const TreeNodeId& node) {
  std::vector<TreeNodeId> out;
  for (int c : tree.children(node.flat_id)) out.push_back(tree.node(c));
  return out;
}

}  // namespace nhdp
