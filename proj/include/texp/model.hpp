#ifndef TEXP_MODEL_HPP
#define TEXP_MODEL_HPP

#include <algorithm>
#include <string>
#include <variant>
#include <vector>

#include "texp/errors.hpp"
#include "texp/rational.hpp"

namespace texp {

/** Ensemble flavor: majority-vote forest, weighted-vote forest, boosted/additive. */
enum class Variant { rfmv, rfwv, bt };

enum class FeatureKind { real_num, categorical, binary };

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::real_num;
  Rat lo, hi;                     // closed real domain [lo, hi]
  std::vector<std::string> cats;  // categorical domain values
};

/**
 * Instance value: Rat for real features, int for categorical (domain index)
 * and binary (0/1) features.
 */
using Value = std::variant<Rat, int>;
using Instance = std::vector<Value>;

/**
 * Decision node or leaf. Real tests are `x < threshold` (strict) or
 * `x <= threshold` when `le` is set; categorical tests are set membership;
 * binary tests are `x = 1`. The `yes` child is taken when the test holds.
 */
struct Node {
  int feature = -1;  // -1 marks a leaf
  Rat threshold;
  bool le = false;
  std::vector<int> cat_set;
  int yes = -1, no = -1;
  std::vector<Rat> weights;  // leaf: per-class score contributions

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<Node> nodes;  // root at index 0
};

struct Ensemble {
  Variant variant = Variant::bt;
  std::vector<std::string> classes;
  std::vector<Feature> features;
  std::vector<Tree> trees;

  int num_classes() const { return static_cast<int>(classes.size()); }
  int num_features() const { return static_cast<int>(features.size()); }
  int num_trees() const { return static_cast<int>(trees.size()); }

  void validate() const;
};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::rfmv: return "rfmv";
    case Variant::rfwv: return "rfwv";
    default: return "bt";
  }
}

/** Evaluates one decision-node test against an instance value. */
inline bool node_test(const Feature& f, const Node& n, const Value& v) {
  switch (f.kind) {
    case FeatureKind::real_num: {
      const Rat& x = std::get<Rat>(v);
      return n.le ? x <= n.threshold : x < n.threshold;
    }
    case FeatureKind::categorical:
      return std::binary_search(n.cat_set.begin(), n.cat_set.end(), std::get<int>(v));
    default:  // binary: test is x = 1
      return std::get<int>(v) == 1;
  }
}

/** Leaf reached by an instance in one tree. */
inline const Node& walk_tree(const Ensemble& e, const Tree& t, const Instance& x) {
  const Node* n = &t.nodes[0];
  while (!n->is_leaf()) {
    const Feature& f = e.features[n->feature];
    n = &t.nodes[node_test(f, *n, x[n->feature]) ? n->yes : n->no];
  }
  return *n;
}

/** Per-class score: sum over trees of the consistent leaf's class weight. */
inline std::vector<Rat> class_scores(const Ensemble& e, const Instance& x) {
  std::vector<Rat> scores(e.num_classes());
  for (const Tree& t : e.trees) {
    const Node& leaf = walk_tree(e, t, x);
    for (int c = 0; c < e.num_classes(); ++c) scores[c] += leaf.weights[c];
  }
  return scores;
}

/** Predicted class: argmax of class_scores, lowest index winning ties. */
inline int predict(const Ensemble& e, const Instance& x) {
  std::vector<Rat> s = class_scores(e, x);
  int best = 0;
  for (int c = 1; c < e.num_classes(); ++c)
    if (s[c] > s[best]) best = c;
  return best;
}

/** Throws ValidationError when an instance does not fit the feature space. */
inline void validate_instance(const Ensemble& e, const Instance& x) {
  if (static_cast<int>(x.size()) != e.num_features())
    throw ValidationError("instance has " + std::to_string(x.size()) + " values, expected " +
                          std::to_string(e.num_features()));
  for (int i = 0; i < e.num_features(); ++i) {
    const Feature& f = e.features[i];
    switch (f.kind) {
      case FeatureKind::real_num: {
        if (!std::holds_alternative<Rat>(x[i]))
          throw ValidationError("feature '" + f.name + "': expected a numeric value");
        const Rat& v = std::get<Rat>(x[i]);
        if (v < f.lo || v > f.hi)
          throw ValidationError("feature '" + f.name + "': value " + v.to_string() +
                                " outside domain [" + f.lo.to_string() + ", " +
                                f.hi.to_string() + "]");
        break;
      }
      case FeatureKind::categorical: {
        if (!std::holds_alternative<int>(x[i]))
          throw ValidationError("feature '" + f.name + "': expected a category index");
        int c = std::get<int>(x[i]);
        if (c < 0 || c >= static_cast<int>(f.cats.size()))
          throw ValidationError("feature '" + f.name + "': category index out of range");
        break;
      }
      default: {
        if (!std::holds_alternative<int>(x[i]) ||
            (std::get<int>(x[i]) != 0 && std::get<int>(x[i]) != 1))
          throw ValidationError("feature '" + f.name + "': expected 0 or 1");
      }
    }
  }
}

inline void Ensemble::validate() const {
  if (classes.size() < 2) throw ValidationError("a classifier needs at least two classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].empty()) throw ValidationError("empty class name");
    for (std::size_t j = i + 1; j < classes.size(); ++j)
      if (classes[i] == classes[j]) throw ValidationError("duplicate class '" + classes[i] + "'");
  }
  if (features.empty()) throw ValidationError("a model needs at least one feature");
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Feature& f = features[i];
    if (f.name.empty()) throw ValidationError("empty feature name");
    for (std::size_t j = i + 1; j < features.size(); ++j)
      if (f.name == features[j].name)
        throw ValidationError("duplicate feature '" + f.name + "'");
    if (f.kind == FeatureKind::real_num && !(f.lo < f.hi))
      throw ValidationError("feature '" + f.name + "': domain is empty");
    if (f.kind == FeatureKind::categorical && f.cats.size() < 2)
      throw ValidationError("feature '" + f.name + "': categorical domain needs >= 2 values");
  }
  if (trees.empty()) throw ValidationError("a model needs at least one tree");

  const int K = num_classes();
  for (std::size_t ti = 0; ti < trees.size(); ++ti) {
    const Tree& t = trees[ti];
    const std::string where = "tree " + std::to_string(ti);
    if (t.nodes.empty()) throw ValidationError(where + ": empty");
    // Shape check: children in range, every node reached exactly once from the root.
    std::vector<int> indeg(t.nodes.size(), 0);
    int bt_class = -1;
    for (std::size_t ni = 0; ni < t.nodes.size(); ++ni) {
      const Node& n = t.nodes[ni];
      if (n.is_leaf()) {
        if (n.weights.size() != static_cast<std::size_t>(K))
          throw ValidationError(where + ": leaf weight vector has wrong length");
        int nonzero = -1;
        int ones = 0;
        for (int c = 0; c < K; ++c) {
          if (!n.weights[c].is_zero()) {
            nonzero = nonzero < 0 ? c : -2;
            if (n.weights[c] == Rat(1)) ++ones;
          }
          if (variant == Variant::rfwv && n.weights[c].sign() < 0)
            throw ValidationError(where + ": weighted-vote leaves must be non-negative");
        }
        if (variant == Variant::rfmv && !(nonzero >= 0 && ones == 1))
          throw ValidationError(where + ": majority-vote leaves must be one-hot with value 1");
        if (variant == Variant::bt) {
          if (nonzero == -2) throw ValidationError(where + ": boosted leaves carry one class");
          if (nonzero >= 0) {
            if (bt_class >= 0 && bt_class != nonzero)
              throw ValidationError(where + ": boosted tree mixes classes");
            bt_class = nonzero;
          }
        }
        continue;
      }
      if (n.feature >= num_features())
        throw ValidationError(where + ": feature index out of range");
      if (n.yes < 0 || n.no < 0 || n.yes >= static_cast<int>(t.nodes.size()) ||
          n.no >= static_cast<int>(t.nodes.size()) || n.yes == n.no)
        throw ValidationError(where + ": bad child links");
      ++indeg[n.yes];
      ++indeg[n.no];
      const Feature& f = features[n.feature];
      if (f.kind == FeatureKind::real_num) {
        if (!(f.lo < n.threshold && n.threshold < f.hi))
          throw ValidationError(where + ": threshold " + n.threshold.to_string() +
                                " not strictly inside the domain of '" + f.name + "'");
      } else if (f.kind == FeatureKind::categorical) {
        if (n.cat_set.empty() || n.cat_set.size() >= f.cats.size())
          throw ValidationError(where + ": categorical test must be a proper nonempty subset");
        for (std::size_t k = 0; k < n.cat_set.size(); ++k) {
          if (n.cat_set[k] < 0 || n.cat_set[k] >= static_cast<int>(f.cats.size()))
            throw ValidationError(where + ": categorical test value out of range");
          if (k > 0 && n.cat_set[k] <= n.cat_set[k - 1])
            throw ValidationError(where + ": categorical test values must be sorted and unique");
        }
      }
    }
    if (indeg[0] != 0) throw ValidationError(where + ": root has a parent");
    for (std::size_t ni = 1; ni < t.nodes.size(); ++ni)
      if (indeg[ni] != 1) throw ValidationError(where + ": node not reached exactly once");
  }
}

}  // namespace texp

#endif  // TEXP_MODEL_HPP
