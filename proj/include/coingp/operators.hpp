#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "coingp/error.hpp"
#include "coingp/random.hpp"
#include "coingp/tree.hpp"

namespace coingp {

enum class CrossoverKind { SimpleSubtree, Uniform, SizeFair, OnePoint, ContextPreserving };

inline constexpr std::array<CrossoverKind, 5> kCrossoverKinds{
    CrossoverKind::SimpleSubtree, CrossoverKind::Uniform, CrossoverKind::SizeFair,
    CrossoverKind::OnePoint, CrossoverKind::ContextPreserving,
};

constexpr std::string_view to_string(CrossoverKind k) {
  switch (k) {
    case CrossoverKind::SimpleSubtree: return "simple-subtree";
    case CrossoverKind::Uniform: return "uniform";
    case CrossoverKind::SizeFair: return "size-fair";
    case CrossoverKind::OnePoint: return "one-point";
    case CrossoverKind::ContextPreserving: return "context-preserving";
  }
  return "?";
}

inline constexpr int kInitMinDepth = 2;
inline constexpr int kInitMaxDepth = 6;
inline constexpr int kMutationGrowDepth = 4;
inline constexpr int kCrossoverRetries = 5;

/// Random terminal: each input variable and the ephemeral constant are
/// equally likely. Constants are drawn once from [-1, 1).
inline Node random_terminal(int vars, Rng& rng) {
  const std::size_t pick = rng.index(static_cast<std::size_t>(vars) + 1);
  if (pick == static_cast<std::size_t>(vars)) return Node::constant(rng.uniform(-1.0, 1.0));
  return Node::variable(static_cast<int>(pick));
}

inline Node random_function(Rng& rng) {
  return Node::function(kFunctionSet[rng.index(kFunctionSet.size())]);
}

namespace detail {

inline void generate(std::vector<Node>& out, int depth_left, bool full, int vars, Rng& rng) {
  bool terminal = depth_left == 0;
  if (!terminal && !full) {
    const std::size_t primitives = kFunctionSet.size() + static_cast<std::size_t>(vars) + 1;
    terminal = rng.index(primitives) >= kFunctionSet.size();
  }
  if (terminal) {
    out.push_back(random_terminal(vars, rng));
    return;
  }
  const Node fn = random_function(rng);
  out.push_back(fn);
  for (int k = 0; k < fn.arity(); ++k) generate(out, depth_left - 1, full, vars, rng);
}

}  // namespace detail

/// Grow method: any primitive may appear above max_depth, terminals at it.
inline GpTree grow_tree(int max_depth, int vars, Rng& rng) {
  std::vector<Node> nodes;
  detail::generate(nodes, max_depth, false, vars, rng);
  return GpTree(std::move(nodes));
}

/// Full method: every leaf sits exactly at `depth`.
inline GpTree full_tree(int depth, int vars, Rng& rng) {
  std::vector<Node> nodes;
  detail::generate(nodes, depth, true, vars, rng);
  return GpTree(std::move(nodes));
}

/// Ramped half-and-half over depths kInitMinDepth..kInitMaxDepth (capped by
/// max_depth); individuals alternate full and grow within each depth ramp.
inline std::vector<GpTree> ramped_half_and_half(std::size_t count, int max_depth, int vars,
                                                Rng& rng) {
  const int hi = std::min(kInitMaxDepth, max_depth);
  const int lo = std::min(kInitMinDepth, hi);
  const int levels = hi - lo + 1;
  std::vector<GpTree> trees;
  trees.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int d = lo + static_cast<int>((i / 2) % static_cast<std::size_t>(levels));
    trees.push_back(i % 2 == 0 ? full_tree(d, vars, rng) : grow_tree(d, vars, rng));
  }
  return trees;
}

namespace detail {

struct PointPair {
  std::size_t a;
  std::size_t b;
};

// Common region: descend only while both nodes have the same arity.
inline void common_region(const GpTree& a, std::size_t ia, const GpTree& b, std::size_t ib,
                          std::vector<PointPair>& out) {
  out.push_back({ia, ib});
  const int arity_a = a.node(ia).arity();
  if (arity_a == 0 || arity_a != b.node(ib).arity()) return;
  std::size_t ca = ia + 1;
  std::size_t cb = ib + 1;
  for (int k = 0; k < arity_a; ++k) {
    common_region(a, ca, b, cb, out);
    ca = a.subtree_end(ca);
    cb = b.subtree_end(cb);
  }
}

// Node coordinates (paths from the root) present in both trees.
inline void shared_coordinates(const GpTree& a, std::size_t ia, const GpTree& b, std::size_t ib,
                               std::vector<PointPair>& out) {
  out.push_back({ia, ib});
  const int shared = std::min(a.node(ia).arity(), b.node(ib).arity());
  std::size_t ca = ia + 1;
  std::size_t cb = ib + 1;
  for (int k = 0; k < shared; ++k) {
    shared_coordinates(a, ca, b, cb, out);
    ca = a.subtree_end(ca);
    cb = b.subtree_end(cb);
  }
}

// Uniform crossover over the common region: interior nodes take either
// parent's label, boundary nodes take either parent's whole subtree.
inline void uniform_merge(const GpTree& a, std::size_t ia, const GpTree& b, std::size_t ib,
                          std::vector<Node>& out, Rng& rng) {
  const bool from_b = rng.coin();
  const int arity_a = a.node(ia).arity();
  const bool interior = arity_a > 0 && arity_a == b.node(ib).arity();
  if (!interior) {
    const GpTree& src = from_b ? b : a;
    const std::size_t i = from_b ? ib : ia;
    const auto nodes = src.nodes();
    out.insert(out.end(), nodes.begin() + static_cast<std::ptrdiff_t>(i),
               nodes.begin() + static_cast<std::ptrdiff_t>(src.subtree_end(i)));
    return;
  }
  out.push_back(from_b ? b.node(ib) : a.node(ia));
  std::size_t ca = ia + 1;
  std::size_t cb = ib + 1;
  for (int k = 0; k < arity_a; ++k) {
    uniform_merge(a, ca, b, cb, out, rng);
    ca = a.subtree_end(ca);
    cb = b.subtree_end(cb);
  }
}

inline GpTree swap_at(const GpTree& a, std::size_t ia, const GpTree& b, std::size_t ib) {
  const auto donor = b.nodes().subspan(ib, b.subtree_size(ib));
  return a.replace_subtree(ia, donor);
}

inline GpTree crossover_once(const GpTree& a, const GpTree& b, CrossoverKind kind, Rng& rng) {
  switch (kind) {
    case CrossoverKind::SimpleSubtree: {
      const std::size_t ia = rng.index(a.size());
      const std::size_t ib = rng.index(b.size());
      return swap_at(a, ia, b, ib);
    }
    case CrossoverKind::SizeFair: {
      // Donor subtrees are restricted to at most 2 * recipient + 1 nodes.
      const std::size_t ia = rng.index(a.size());
      const std::size_t limit = 2 * a.subtree_size(ia) + 1;
      const std::vector<std::size_t> sizes = b.subtree_sizes();
      std::vector<std::size_t> candidates;
      for (std::size_t j = 0; j < sizes.size(); ++j) {
        if (sizes[j] <= limit) candidates.push_back(j);
      }
      const std::size_t ib = candidates[rng.index(candidates.size())];
      return swap_at(a, ia, b, ib);
    }
    case CrossoverKind::OnePoint: {
      std::vector<PointPair> region;
      common_region(a, 0, b, 0, region);
      const PointPair p = region[rng.index(region.size())];
      return swap_at(a, p.a, b, p.b);
    }
    case CrossoverKind::ContextPreserving: {
      std::vector<PointPair> coords;
      shared_coordinates(a, 0, b, 0, coords);
      const PointPair p = coords[rng.index(coords.size())];
      return swap_at(a, p.a, b, p.b);
    }
    case CrossoverKind::Uniform: {
      std::vector<Node> out;
      out.reserve(std::max(a.size(), b.size()));
      uniform_merge(a, 0, b, 0, out, rng);
      return GpTree(std::move(out));
    }
  }
  return a;
}

}  // namespace detail

/// Produces one offspring from parents a (recipient) and b (donor).
///
/// An offspring deeper than max_depth is discarded and the operator is
/// retried up to kCrossoverRetries times; after that, a is returned.
inline GpTree crossover(const GpTree& a, const GpTree& b, CrossoverKind kind, int max_depth,
                        Rng& rng) {
  for (int attempt = 0; attempt <= kCrossoverRetries; ++attempt) {
    GpTree child = detail::crossover_once(a, b, kind, rng);
    if (child.depth() <= max_depth) return child;
  }
  return a;
}

inline CrossoverKind random_crossover_kind(Rng& rng) {
  return kCrossoverKinds[rng.index(kCrossoverKinds.size())];
}

/// Subtree mutation: with the given probability, a uniformly chosen node is
/// replaced by a grown subtree that keeps the tree within max_depth.
inline GpTree mutate(const GpTree& tree, double probability, int max_depth, int vars, Rng& rng) {
  if (!rng.bernoulli(probability)) return tree;
  const std::size_t i = rng.index(tree.size());
  const int node_depth = tree.node_depths()[i];
  const int room = std::max(0, std::min(kMutationGrowDepth, max_depth - node_depth));
  const GpTree fresh = grow_tree(room, vars, rng);
  return tree.replace_subtree(i, fresh.nodes());
}

}  // namespace coingp
