#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nhdp {

/// Children per node at each level: widths[l - 1] nodes hang below every
/// node at level l - 1. Depth L is widths.size().
struct Truncation {
  std::vector<int> widths;

  int levels() const noexcept { return static_cast<int>(widths.size()); }
  void validate() const;  // throws ConfigError
  bool operator==(const Truncation&) const = default;
};

/// A node of the truncated tree. Paths are 1-based child indices from the
/// top; the optional root topic node has the empty path and level 0.
struct TreeNodeId {
  std::vector<int> path;
  int flat_id = 0;

  int level() const noexcept { return static_cast<int>(path.size()); }
  bool operator==(const TreeNodeId&) const = default;
};

/// Slash-joined path ("1/2/3"); the root node renders as "root".
std::string format_path(std::span<const int> path);
std::vector<int> parse_path(std::string_view text);  // throws ParseError

/// Breadth-first indexed view of a truncated tree. Flat ids are dense,
/// parents precede children, and siblings appear in child-index order, so
/// per-node parameter arrays can be stored contiguously.
class TruncatedTree {
public:
  TruncatedTree() = default;
  explicit TruncatedTree(Truncation trunc, bool include_root = false);

  const Truncation& truncation() const noexcept { return trunc_; }
  bool include_root() const noexcept { return include_root_; }
  int depth() const noexcept { return trunc_.levels(); }
  int size() const noexcept { return static_cast<int>(nodes_.size()); }

  std::span<const TreeNodeId> nodes() const noexcept { return nodes_; }
  const TreeNodeId& node(int flat) const { return nodes_.at(static_cast<std::size_t>(flat)); }
  int level(int flat) const { return static_cast<int>(node(flat).path.size()); }

  /// -1 for level-1 nodes without a root topic and for the root itself.
  int parent(int flat) const { return parent_.at(static_cast<std::size_t>(flat)); }
  std::span<const int> children(int flat) const;
  /// Level-1 nodes: the atoms of the top Dirichlet process.
  std::span<const int> top_level() const noexcept { return top_level_; }
  /// Nodes competing with `flat` for its parent's stick (its siblings and itself).
  std::span<const int> siblings(int flat) const;
  /// 1-based position among siblings (last element of the path).
  int child_index(int flat) const { return node(flat).path.empty() ? 0 : node(flat).path.back(); }
  bool is_last_child(int flat) const;
  bool is_truncation_leaf(int flat) const { return level(flat) == depth(); }

  std::optional<int> find(std::span<const int> path) const;
  int leaf_count() const;

private:
  Truncation trunc_;
  bool include_root_ = false;
  std::vector<TreeNodeId> nodes_;
  std::vector<int> parent_;
  std::vector<int> child_begin_;
  std::vector<int> child_count_;
  std::vector<int> top_level_;
  std::vector<int> level_offset_;
  std::vector<int> ids_;
};

/// Total node count: sum over levels of the product of widths, plus one
/// when the root topic is included.
int total_nodes(const Truncation& trunc, bool include_root = false);

std::vector<TreeNodeId> enumerate_nodes(const Truncation& trunc, bool include_root = false);
std::optional<TreeNodeId> parent(const TruncatedTree& tree, const TreeNodeId& node);
std::vector<TreeNodeId> children(const TruncatedTree& tree, const TreeNodeId& node);

}  // namespace nhdp
