#ifndef TEXP_REDUCTIONS_HPP
#define TEXP_REDUCTIONS_HPP

#include <vector>

#include "texp/model.hpp"

namespace texp {

namespace detail {

/**
 * Copies the subtree of `src` rooted at `idx` into `dst`, keeping only the
 * weight of class `c` (as a one-hot vector). Subtrees whose every leaf
 * contributes zero to class `c` collapse to a single all-zero leaf.
 * Returns the index of the new root in `dst`.
 */
inline int copy_for_class(const Tree& src, int idx, int c, int num_classes, Tree& dst) {
  const Node& n = src.nodes[idx];
  if (n.is_leaf()) {
    const int out = static_cast<int>(dst.nodes.size());
    dst.nodes.emplace_back();
    dst.nodes[out].weights.assign(num_classes, Rat(0));
    dst.nodes[out].weights[c] = n.weights[c];
    return out;
  }
  const int out = static_cast<int>(dst.nodes.size());
  dst.nodes.push_back(n);
  dst.nodes[out].weights.clear();
  const int yes = copy_for_class(src, n.yes, c, num_classes, dst);
  const int no = copy_for_class(src, n.no, c, num_classes, dst);
  auto is_zero_leaf = [&](int i) {
    return dst.nodes[i].is_leaf() && dst.nodes[i].weights[c].is_zero();
  };
  if (is_zero_leaf(yes) && is_zero_leaf(no)) {
    // Both branches collapsed, so the test is irrelevant for this class.
    dst.nodes.resize(out);
    dst.nodes.emplace_back();
    dst.nodes[out].weights.assign(num_classes, Rat(0));
    return out;
  }
  dst.nodes[out].yes = yes;
  dst.nodes[out].no = no;
  return out;
}

inline Ensemble per_class_copies(const Ensemble& e) {
  Ensemble out;
  out.variant = Variant::bt;
  out.classes = e.classes;
  out.features = e.features;
  const int K = e.num_classes();
  for (const Tree& t : e.trees)
    for (int c = 0; c < K; ++c) {
      Tree copy;
      copy_for_class(t, 0, c, K, copy);
      out.trees.push_back(std::move(copy));
    }
  return out;
}

}  // namespace detail

/**
 * Rewrites a majority-vote forest as an additive ensemble: each tree splits
 * into one 0/1 tree per class, with all-zero subtrees pruned to a single
 * zero leaf. Class scores equal the vote counts of the original forest.
 */
inline Ensemble reduce_rfmv_to_bt(const Ensemble& e) {
  if (e.variant != Variant::rfmv)
    throw ValidationError("reduce_rfmv_to_bt expects a majority-vote forest");
  return detail::per_class_copies(e);
}

/**
 * Rewrites a weighted-vote forest as an additive ensemble: one scalar-leaf
 * tree per (tree, class) pair. The uniform 1/n averaging factor is dropped,
 * which preserves the argmax and every score comparison.
 */
inline Ensemble reduce_rfwv_to_unified(const Ensemble& e) {
  if (e.variant != Variant::rfwv)
    throw ValidationError("reduce_rfwv_to_unified expects a weighted-vote forest");
  return detail::per_class_copies(e);
}

/** Any supported variant as an additive ensemble with identical argmax. */
inline Ensemble to_unified(const Ensemble& e) {
  switch (e.variant) {
    case Variant::rfmv: return reduce_rfmv_to_bt(e);
    case Variant::rfwv: return reduce_rfwv_to_unified(e);
    default: return e;
  }
}

}  // namespace texp

#endif  // TEXP_REDUCTIONS_HPP
