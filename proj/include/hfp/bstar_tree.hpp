#pragma once

// B*-tree floorplan representation. A left child sits immediately to the right
// of its parent; a right child sits above its parent at the same x. Packing
// resolves y coordinates against a horizontal contour.

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hfp/error.hpp"
#include "hfp/model.hpp"
#include "hfp/random.hpp"

namespace hfp {

enum class Side { left, right };

class BStarTree {
 public:
  static constexpr int kNil = -1;

  struct Node {
    std::size_t block = 0;
    int left = kNil;
    int right = kNil;
    int parent = kNil;
  };

  BStarTree() = default;
  BStarTree(std::vector<Node> nodes, int root) : nodes_(std::move(nodes)), root_(root) {
    validate();
  }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  int root() const { return root_; }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::span<const Node> nodes() const { return nodes_; }

  int child(int i, Side s) const { return s == Side::left ? node(i).left : node(i).right; }
  bool has_free_slot(int i) const { return node(i).left == kNil || node(i).right == kNil; }

  int find(std::size_t block) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].block == block) return static_cast<int>(i);
    }
    return kNil;
  }

  std::vector<std::size_t> blocks() const {
    std::vector<std::size_t> out;
    out.reserve(nodes_.size());
    for (const Node& n : nodes_) out.push_back(n.block);
    return out;
  }

  void swap_blocks(int a, int b) { std::swap(at(a).block, at(b).block); }

  /// Append an unlinked node; link it with attach().
  int add_node(std::size_t block) {
    nodes_.push_back(Node{block});
    return static_cast<int>(nodes_.size()) - 1;
  }

  /// Link the unlinked node `n` into the `side` slot of `parent`, or make it
  /// the root when the tree has none.
  void attach(int n, int parent, Side side) {
    if (root_ == kNil) {
      root_ = n;
      at(n).parent = kNil;
      return;
    }
    int& slot = side == Side::left ? at(parent).left : at(parent).right;
    if (slot != kNil) throw StructureError("attach: child slot is occupied");
    slot = n;
    at(n).parent = parent;
  }

  /// Unlink `n`, splicing its children back: the left child (or the right one
  /// when there is no left) takes n's place, and a remaining right subtree
  /// hangs off the leftmost free slot below the promoted child.
  void detach(int n) {
    Node& nd = at(n);
    const int promoted = nd.left != kNil ? nd.left : nd.right;
    const int other = nd.left != kNil ? nd.right : kNil;
    replace_in_parent(n, promoted);
    if (promoted != kNil) at(promoted).parent = nd.parent;
    if (other != kNil) {
      int c = promoted;
      while (at(c).left != kNil) c = at(c).left;
      at(c).left = other;
      at(other).parent = c;
    }
    nd.left = nd.right = nd.parent = kNil;
  }

  /// Remove `n` entirely. The last node is moved into slot `n`, so node
  /// indices other than `n` may change.
  void erase(int n) {
    detach(n);
    const int last = static_cast<int>(nodes_.size()) - 1;
    if (n != last) {
      nodes_[static_cast<std::size_t>(n)] = nodes_.back();
      Node& moved = at(n);
      if (moved.parent != kNil) {
        Node& p = at(moved.parent);
        (p.left == last ? p.left : p.right) = n;
      }
      if (moved.left != kNil) at(moved.left).parent = n;
      if (moved.right != kNil) at(moved.right).parent = n;
      if (root_ == last) root_ = n;
    }
    nodes_.pop_back();
  }

  /// Node indices in depth-first order: node, left subtree, right subtree.
  std::vector<int> preorder() const {
    std::vector<int> order;
    order.reserve(nodes_.size());
    if (root_ == kNil) return order;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      order.push_back(n);
      if (node(n).right != kNil) stack.push_back(node(n).right);
      if (node(n).left != kNil) stack.push_back(node(n).left);
    }
    return order;
  }

  /// Throws StructureError unless the links form one tree over all nodes.
  void validate() const {
    if (nodes_.empty()) {
      if (root_ != kNil) throw StructureError("empty tree has a root");
      return;
    }
    const int n = static_cast<int>(nodes_.size());
    auto in_range = [n](int i) { return i == kNil || (i >= 0 && i < n); };
    if (root_ < 0 || root_ >= n) throw StructureError("root index out of range");
    if (node(root_).parent != kNil) throw StructureError("root has a parent");
    for (int i = 0; i < n; ++i) {
      const Node& nd = node(i);
      if (!in_range(nd.left) || !in_range(nd.right) || !in_range(nd.parent)) {
        throw StructureError("link out of range at node " + std::to_string(i));
      }
      if (nd.left != kNil && (nd.left == nd.right || node(nd.left).parent != i)) {
        throw StructureError("inconsistent left link at node " + std::to_string(i));
      }
      if (nd.right != kNil && node(nd.right).parent != i) {
        throw StructureError("inconsistent right link at node " + std::to_string(i));
      }
      if (i != root_ && nd.parent == kNil) {
        throw StructureError("node " + std::to_string(i) + " is detached");
      }
    }
    // Parent links are consistent, so reaching every node from the root rules
    // out cycles.
    std::vector<char> seen(nodes_.size(), 0);
    std::size_t count = 0;
    for (int i : preorder()) {
      if (seen[static_cast<std::size_t>(i)]++) throw StructureError("cycle in tree");
      ++count;
      if (count > nodes_.size()) throw StructureError("cycle in tree");
    }
    if (count != nodes_.size()) throw StructureError("tree is disconnected");
    std::vector<std::size_t> ids = blocks();
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw StructureError("block appears in more than one node");
    }
  }

  /// Copy with left and right children exchanged everywhere.
  BStarTree mirrored() const {
    BStarTree m = *this;
    for (Node& nd : m.nodes_) std::swap(nd.left, nd.right);
    return m;
  }

 private:
  Node& at(int i) { return nodes_[static_cast<std::size_t>(i)]; }

  void replace_in_parent(int n, int replacement) {
    const int p = node(n).parent;
    if (p == kNil) {
      root_ = replacement;
    } else if (at(p).left == n) {
      at(p).left = replacement;
    } else {
      at(p).right = replacement;
    }
  }

  std::vector<Node> nodes_;
  int root_ = kNil;
};

/// Packed coordinates; `rects` is indexed by tree node.
struct Packing {
  std::vector<Rect> rects;
  double width = 0.0;
  double height = 0.0;

  double area() const { return width * height; }
};

namespace detail {

// Horizontal skyline over [0, inf) as contiguous segments sorted by x.
class Contour {
 public:
  Contour() : segs_{{0.0, std::numeric_limits<double>::infinity(), 0.0}} {}

  /// Lowest y at which [x, x+w) is clear; then raises that span to y+h.
  double place(double x, double w, double h) {
    const double x1 = x + w;
    std::size_t i = 0;
    while (segs_[i].x1 <= x) ++i;
    std::size_t j = i;
    double y = 0.0;
    while (j < segs_.size() && segs_[j].x0 < x1) y = std::max(y, segs_[j++].y);

    std::array<Seg, 3> repl;
    std::size_t k = 0;
    if (segs_[i].x0 < x) repl[k++] = {segs_[i].x0, x, segs_[i].y};
    repl[k++] = {x, x1, y + h};
    if (segs_[j - 1].x1 > x1) repl[k++] = {x1, segs_[j - 1].x1, segs_[j - 1].y};

    segs_.erase(segs_.begin() + static_cast<std::ptrdiff_t>(i),
                segs_.begin() + static_cast<std::ptrdiff_t>(j));
    segs_.insert(segs_.begin() + static_cast<std::ptrdiff_t>(i), repl.begin(),
                 repl.begin() + static_cast<std::ptrdiff_t>(k));
    return y;
  }

 private:
  struct Seg {
    double x0 = 0.0;
    double x1 = 0.0;
    double y = 0.0;
  };
  std::vector<Seg> segs_;
};

}  // namespace detail

/// Pack `tree`; `dims` is indexed by block.
inline Packing pack(const BStarTree& tree, std::span<const Dims> dims) {
  Packing out;
  out.rects.resize(tree.size());
  if (tree.empty()) return out;
  detail::Contour contour;
  for (int n : tree.preorder()) {
    const BStarTree::Node& nd = tree.node(n);
    if (nd.block >= dims.size()) throw StructureError("pack: block without dimensions");
    const Dims d = dims[nd.block];
    double x = 0.0;
    if (nd.parent != BStarTree::kNil) {
      const Rect& p = out.rects[static_cast<std::size_t>(nd.parent)];
      x = tree.node(nd.parent).left == n ? p.x + p.w : p.x;
    }
    const double y = contour.place(x, d.width, d.height);
    out.rects[static_cast<std::size_t>(n)] = {x, y, d.width, d.height};
    out.width = std::max(out.width, x + d.width);
    out.height = std::max(out.height, y + d.height);
  }
  return out;
}

enum class MoveKind : int { swap = 0, rotate = 1, remove_insert = 2, ratio_change = 3 };

inline constexpr std::size_t kMoveKinds = 4;
inline constexpr std::array<MoveKind, kMoveKinds> kAllMoves{
    MoveKind::swap, MoveKind::rotate, MoveKind::remove_insert, MoveKind::ratio_change};

inline const char* to_string(MoveKind k) {
  switch (k) {
    case MoveKind::swap: return "swap";
    case MoveKind::rotate: return "rotate";
    case MoveKind::remove_insert: return "remove_insert";
    case MoveKind::ratio_change: return "ratio_change";
  }
  return "?";
}

struct PerturbResult {
  bool applied = false;                      // false: no eligible operand
  std::optional<std::size_t> resized_block;  // block whose aspect ratio changed
};

/// Apply one random perturbation of `kind`. `ratio_of` holds the current
/// aspect ratio of every block and is updated by rotate / ratio_change.
/// Hard-IP blocks are never rotated or reshaped.
inline PerturbResult perturb(BStarTree& tree, std::span<double> ratio_of, const Design& design,
                             MoveKind kind, Rng& rng) {
  const int n = static_cast<int>(tree.size());
  switch (kind) {
    case MoveKind::swap: {
      if (n < 2) return {};
      const int a = static_cast<int>(rng.uniform_index(tree.size()));
      int b = static_cast<int>(rng.uniform_index(tree.size() - 1));
      if (b >= a) ++b;
      tree.swap_blocks(a, b);
      return {true, std::nullopt};
    }
    case MoveKind::rotate: {
      std::vector<int> eligible;
      for (int i = 0; i < n; ++i) {
        const std::size_t blk = tree.node(i).block;
        const Block& b = design.blocks[blk];
        const double rho = ratio_of[blk];
        if (!b.locked() && !same_ratio(rho, 1.0 / rho) && has_ratio_option(b, 1.0 / rho)) {
          eligible.push_back(i);
        }
      }
      if (eligible.empty()) return {};
      const std::size_t blk = tree.node(eligible[rng.uniform_index(eligible.size())]).block;
      const double target = 1.0 / ratio_of[blk];
      for (double r : design.blocks[blk].ratios) {
        if (same_ratio(r, target)) ratio_of[blk] = r;
      }
      return {true, blk};
    }
    case MoveKind::remove_insert: {
      if (n < 2) return {};
      int victim = static_cast<int>(rng.uniform_index(tree.size() - 1));
      if (victim >= tree.root()) ++victim;
      tree.detach(victim);
      std::vector<int> hosts;
      for (int i = 0; i < n; ++i) {
        if (i != victim && tree.has_free_slot(i)) hosts.push_back(i);
      }
      const int host = hosts[rng.uniform_index(hosts.size())];
      Side side = tree.node(host).left == BStarTree::kNil ? Side::left : Side::right;
      if (tree.node(host).left == BStarTree::kNil && tree.node(host).right == BStarTree::kNil) {
        side = rng.bernoulli(0.5) ? Side::left : Side::right;
      }
      tree.attach(victim, host, side);
      return {true, std::nullopt};
    }
    case MoveKind::ratio_change: {
      std::vector<int> eligible;
      for (int i = 0; i < n; ++i) {
        const Block& b = design.blocks[tree.node(i).block];
        if (!b.locked() && b.ratios.size() >= 2) eligible.push_back(i);
      }
      if (eligible.empty()) return {};
      const std::size_t blk = tree.node(eligible[rng.uniform_index(eligible.size())]).block;
      const Block& b = design.blocks[blk];
      std::vector<double> options;
      for (double r : b.ratios) {
        if (!same_ratio(r, ratio_of[blk])) options.push_back(r);
      }
      if (options.empty()) return {};
      ratio_of[blk] = options[rng.uniform_index(options.size())];
      return {true, blk};
    }
  }
  return {};
}

/// Random valid tree: blocks inserted in random order, each at a uniformly
/// chosen free child slot.
inline BStarTree random_tree(std::span<const std::size_t> blocks, Rng& rng) {
  BStarTree tree;
  if (blocks.empty()) return tree;
  std::vector<std::size_t> order(blocks.begin(), blocks.end());
  rng.shuffle(order);
  std::vector<std::pair<int, Side>> slots;
  for (std::size_t blk : order) {
    const int n = tree.add_node(blk);
    if (slots.empty() && tree.root() == BStarTree::kNil) {
      tree.attach(n, BStarTree::kNil, Side::left);
    } else {
      const std::size_t k = rng.uniform_index(slots.size());
      const auto [parent, side] = slots[k];
      slots[k] = slots.back();
      slots.pop_back();
      tree.attach(n, parent, side);
    }
    slots.emplace_back(n, Side::left);
    slots.emplace_back(n, Side::right);
  }
  return tree;
}

inline constexpr std::size_t kNodeFeatures = 5;

/// B*-tree statistics for the RL state: per node (subtree height, nodes with a
/// right child, nodes with a left child, node count, subtree HPWL), averaged
/// per depth level (root = level 0) and concatenated over the first `h`
/// levels. Missing levels are zero. Subtree HPWL sums the HPWL of every net
/// with at least two pins inside the subtree, over those pins only.
inline std::vector<double> extract_features(const BStarTree& tree, const Packing& packing,
                                            const Design& design, int h) {
  if (h <= 0) throw ConfigError("feature height must be positive");
  std::vector<double> out(kNodeFeatures * static_cast<std::size_t>(h), 0.0);
  if (tree.empty()) return out;

  const std::vector<int> order = tree.preorder();
  const std::size_t n = tree.size();
  std::vector<std::size_t> pre(n), size(n, 1), height(n, 1), rcount(n, 0), lcount(n, 0), depth(n);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int i = order[k];
    pre[static_cast<std::size_t>(i)] = k;
    const int p = tree.node(i).parent;
    depth[static_cast<std::size_t>(i)] = p == BStarTree::kNil ? 0 : depth[static_cast<std::size_t>(p)] + 1;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto i = static_cast<std::size_t>(*it);
    const BStarTree::Node& nd = tree.node(*it);
    if (nd.left != BStarTree::kNil) ++lcount[i];
    if (nd.right != BStarTree::kNil) ++rcount[i];
    if (nd.parent != BStarTree::kNil) {
      const auto p = static_cast<std::size_t>(nd.parent);
      size[p] += size[i];
      height[p] = std::max(height[p], height[i] + 1);
      rcount[p] += rcount[i];
      lcount[p] += lcount[i];
    }
  }

  // Local pins of every net, as (preorder position, center).
  std::vector<int> node_of(design.blocks.size(), BStarTree::kNil);
  for (std::size_t i = 0; i < n; ++i) node_of[tree.node(static_cast<int>(i)).block] = static_cast<int>(i);
  std::vector<double> hpwl(n, 0.0);
  std::vector<std::pair<std::size_t, Point>> pins;
  for (const Net& net : design.nets) {
    pins.clear();
    for (std::size_t blk : net.pins) {
      const int nd = node_of[blk];
      if (nd != BStarTree::kNil) {
        pins.emplace_back(pre[static_cast<std::size_t>(nd)],
                          packing.rects[static_cast<std::size_t>(nd)].center());
      }
    }
    if (pins.size() < 2) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = pre[i], hi = pre[i] + size[i];
      std::size_t inside = 0;
      double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
      for (const auto& [pos, c] : pins) {
        if (pos < lo || pos >= hi) continue;
        ++inside;
        xmin = std::min(xmin, c.x);
        xmax = std::max(xmax, c.x);
        ymin = std::min(ymin, c.y);
        ymax = std::max(ymax, c.y);
      }
      if (inside >= 2) hpwl[i] += net.weight * ((xmax - xmin) + (ymax - ymin));
    }
  }

  std::vector<std::size_t> level_count(static_cast<std::size_t>(h), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (depth[i] >= static_cast<std::size_t>(h)) continue;
    double* level = &out[depth[i] * kNodeFeatures];
    level[0] += static_cast<double>(height[i]);
    level[1] += static_cast<double>(rcount[i]);
    level[2] += static_cast<double>(lcount[i]);
    level[3] += static_cast<double>(size[i]);
    level[4] += hpwl[i];
    ++level_count[depth[i]];
  }
  for (std::size_t l = 0; l < level_count.size(); ++l) {
    if (level_count[l] == 0) continue;
    for (std::size_t f = 0; f < kNodeFeatures; ++f) {
      out[l * kNodeFeatures + f] /= static_cast<double>(level_count[l]);
    }
  }
  return out;
}

}  // namespace hfp
