#ifndef TEXP_ENCODE_HPP
#define TEXP_ENCODE_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "texp/cnf.hpp"
#include "texp/discretize.hpp"
#include "texp/errors.hpp"
#include "texp/gadgets.hpp"
#include "texp/maxsat.hpp"
#include "texp/model.hpp"
#include "texp/rational.hpp"

namespace texp {

/** Literal tables for one feature inside an encoded replica of the domain. */
struct FeatureLits {
  std::vector<Lit> thresholds;  // numeric features: one literal per split boundary
  std::vector<Lit> intervals;   // one literal per interval; empty when only one interval exists
};

/**
 * CNF encoding of the discretized feature space.
 *
 * Per numeric feature, threshold literals form a monotone chain ("below
 * boundary k" implies "below boundary k+1") and interval literals are linked
 * to adjacent thresholds so every model selects exactly one interval per
 * feature. A feature with a single split needs no auxiliary variables: the
 * threshold literal and its negation serve as the two interval literals.
 * Categorical features get a one-hot selector; binary features reuse one
 * variable for both values.
 *
 * The object may share its clause sink with other replicas (the pairwise
 * verification queries put two replicas in one Cnf).
 */
class DomainEncoding {
 public:
  DomainEncoding(Cnf& cnf, const Ensemble& e, const IntervalMap& im)
      : cnf_(&cnf), model_(&e), imap_(&im) {
    build();
  }

  Cnf& cnf() { return *cnf_; }
  const Ensemble& model() const { return *model_; }
  const IntervalMap& imap() const { return *imap_; }
  const std::vector<FeatureLits>& features() const { return feats_; }

  /** True when feature f has more than one interval (so it owns literals). */
  bool multi(int f) const { return imap_->feats[static_cast<std::size_t>(f)].count > 1; }

  /** Literal holding iff feature f lies in interval k; requires multi(f). */
  Lit interval_lit(int f, int k) const {
    const auto& iv = feats_[static_cast<std::size_t>(f)].intervals;
    if (iv.empty()) throw UsageError("feature has a single interval and no literal");
    return iv[static_cast<std::size_t>(k)];
  }

  /** Literal for a decision node's test, allocating shared helpers on demand. */
  Lit test_lit(const Node& nd) {
    const Feature& f = model_->features[static_cast<std::size_t>(nd.feature)];
    FeatureLits& fl = feats_[static_cast<std::size_t>(nd.feature)];
    switch (f.kind) {
      case FeatureKind::real_num: {
        const auto& splits = imap_->feats[static_cast<std::size_t>(nd.feature)].splits;
        Boundary b{nd.threshold, nd.le};
        auto it = std::lower_bound(splits.begin(), splits.end(), b);
        if (it == splits.end() || !(*it == b))
          throw UsageError("decision threshold missing from the interval map");
        return fl.thresholds[static_cast<std::size_t>(it - splits.begin())];
      }
      case FeatureKind::categorical: {
        if (nd.cat_set.size() == 1) return fl.intervals[static_cast<std::size_t>(nd.cat_set[0])];
        auto key = std::make_pair(nd.feature, nd.cat_set);
        auto it = subset_lit_.find(key);
        if (it != subset_lit_.end()) return it->second;
        Lit g = lit(cnf_->new_var());  // g <-> OR of the selected category literals
        std::vector<Lit> any{~g};
        for (int c : nd.cat_set) {
          Lit v = fl.intervals[static_cast<std::size_t>(c)];
          cnf_->add({g, ~v});
          any.push_back(v);
        }
        cnf_->add(std::move(any));
        subset_lit_.emplace(std::move(key), g);
        return g;
      }
      case FeatureKind::binary:
        return fl.intervals[1];
    }
    throw UsageError("unknown feature kind");
  }

  /** Lazily created literal fixed true (used to pad counts with constants). */
  Lit true_lit() {
    if (!true_lit_) {
      Lit t = lit(cnf_->new_var());
      cnf_->add({t});
      true_lit_ = t;
    }
    return *true_lit_;
  }
  Lit false_lit() { return ~true_lit(); }

 private:
  void build() {
    feats_.resize(model_->features.size());
    for (std::size_t i = 0; i < model_->features.size(); ++i) {
      const FeatureIntervals& fi = imap_->feats[i];
      FeatureLits& fl = feats_[i];
      switch (fi.kind) {
        case FeatureKind::real_num: {
          const int r = static_cast<int>(fi.splits.size());
          if (r == 0) break;  // untested feature: one interval, no literals
          for (int k = 0; k < r; ++k) fl.thresholds.push_back(lit(cnf_->new_var()));
          if (r == 1) {  // two intervals: the threshold literal doubles as both
            fl.intervals = {fl.thresholds[0], ~fl.thresholds[0]};
            break;
          }
          for (int k = 0; k <= r; ++k) fl.intervals.push_back(lit(cnf_->new_var()));
          for (int k = 0; k + 1 < r; ++k)  // below boundary k implies below boundary k+1
            cnf_->add({~fl.thresholds[static_cast<std::size_t>(k)],
                       fl.thresholds[static_cast<std::size_t>(k + 1)]});
          for (int k = 0; k <= r; ++k) {  // interval k <-> (not below k-1) and (below k)
            Lit iv = fl.intervals[static_cast<std::size_t>(k)];
            if (k > 0) cnf_->add({~iv, ~fl.thresholds[static_cast<std::size_t>(k - 1)]});
            if (k < r) cnf_->add({~iv, fl.thresholds[static_cast<std::size_t>(k)]});
            std::vector<Lit> back{iv};
            if (k > 0) back.push_back(fl.thresholds[static_cast<std::size_t>(k - 1)]);
            if (k < r) back.push_back(~fl.thresholds[static_cast<std::size_t>(k)]);
            cnf_->add(std::move(back));
          }
          cnf_->add(std::vector<Lit>(fl.intervals));  // at least one interval
          break;
        }
        case FeatureKind::categorical: {
          for (int k = 0; k < fi.count; ++k) fl.intervals.push_back(lit(cnf_->new_var()));
          add_exactly_one(*cnf_, fl.intervals);
          break;
        }
        case FeatureKind::binary: {
          Lit b = lit(cnf_->new_var());
          fl.intervals = {~b, b};
          break;
        }
      }
    }
  }

  Cnf* cnf_;
  const Ensemble* model_;
  const IntervalMap* imap_;
  std::vector<FeatureLits> feats_;
  std::map<std::pair<int, std::vector<int>>, Lit> subset_lit_;
  std::optional<Lit> true_lit_;
};

/** Assumption literal fixing one feature to the instance's interval. */
struct InstanceAssumption {
  int feature;
  Lit lit;
};

/** One assumption literal per multi-interval feature, following locate(). */
inline std::vector<InstanceAssumption> instance_assumptions(const DomainEncoding& dom,
                                                            const Instance& v) {
  std::vector<int> cell = locate(dom.imap(), v);
  std::vector<InstanceAssumption> out;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (!dom.multi(static_cast<int>(i))) continue;
    out.push_back({static_cast<int>(i), dom.interval_lit(static_cast<int>(i), cell[i])});
  }
  return out;
}

/** Reachable root-to-leaf path atom with its merged per-class score contribution. */
struct LeafAtom {
  Lit lit;
  std::vector<Rat> contrib;  // indexed by class
};

namespace detail {

/** Canonical path = sorted condition literals; nullopt when self-contradictory. */
inline std::optional<std::vector<Lit>> canonical_path(std::vector<Lit> conds) {
  std::sort(conds.begin(), conds.end());
  conds.erase(std::unique(conds.begin(), conds.end()), conds.end());
  for (std::size_t i = 0; i + 1 < conds.size(); ++i)
    if (conds[i].var() == conds[i + 1].var()) return std::nullopt;
  return conds;
}

template <class LeafFn>
void walk_paths(DomainEncoding& dom, const Tree& t, int node, std::vector<Lit>& conds,
                LeafFn&& fn) {
  const Node& nd = t.nodes[static_cast<std::size_t>(node)];
  if (nd.is_leaf()) {
    fn(nd, conds);
    return;
  }
  Lit c = dom.test_lit(nd);
  conds.push_back(c);
  walk_paths(dom, t, nd.yes, conds, fn);
  conds.back() = ~c;
  walk_paths(dom, t, nd.no, conds, fn);
  conds.pop_back();
}

}  // namespace detail

/**
 * Path-atom encoding of every tree: one literal per distinct reachable
 * root-to-leaf path, biconditionally tied to its condition conjunction, with
 * an exactly-one constraint per tree. Identical paths (frequent across the
 * per-class copies produced by the ensemble reductions) share one literal and
 * accumulate their leaf scores into a single contribution vector.
 */
class PathAtomEncoding {
 public:
  explicit PathAtomEncoding(DomainEncoding& dom) {
    Cnf& cnf = dom.cnf();
    const Ensemble& e = dom.model();
    const std::size_t K = e.classes.size();
    std::map<std::vector<Lit>, std::size_t> index;
    tree_atoms_.resize(e.trees.size());
    for (std::size_t t = 0; t < e.trees.size(); ++t) {
      std::vector<Lit> conds;
      detail::walk_paths(dom, e.trees[t], 0, conds,
                         [&](const Node& leaf, const std::vector<Lit>& path) {
                           auto canon = detail::canonical_path(path);
                           if (!canon) return;  // contradictory path: reachable in no model
                           auto [it, fresh] = index.emplace(*canon, atoms_.size());
                           if (fresh) {
                             Lit r = lit(cnf.new_var());
                             std::vector<Lit> back{r};
                             for (Lit c : *canon) {
                               cnf.add({~r, c});
                               back.push_back(~c);
                             }
                             cnf.add(std::move(back));
                             atoms_.push_back({r, std::vector<Rat>(K, Rat(0))});
                           }
                           LeafAtom& a = atoms_[it->second];
                           for (std::size_t c = 0; c < K; ++c) a.contrib[c] += leaf.weights[c];
                           tree_atoms_[t].push_back(a.lit);
                         });
      add_exactly_one(cnf, tree_atoms_[t]);
    }
  }

  const std::vector<LeafAtom>& atoms() const { return atoms_; }
  const std::vector<std::vector<Lit>>& tree_atoms() const { return tree_atoms_; }

 private:
  std::vector<LeafAtom> atoms_;
  std::vector<std::vector<Lit>> tree_atoms_;
};

/** Soft-clause objective: maximize sum of satisfied weights plus offset. */
struct Objective {
  std::vector<SoftLit> softs;
  Rat offset;
};

/**
 * Objective whose maximum over the hard encoding equals the best achievable
 * score gap (opponent total minus predicted total). Each path atom turns into
 * one soft literal on its net gap; atoms favoring the predicted class enter
 * negated with the constant folded into the offset.
 */
inline Objective score_gap_objective(const std::vector<LeafAtom>& atoms, int predicted,
                                     int opponent) {
  Objective obj;
  obj.offset = Rat(0);
  for (const LeafAtom& a : atoms) {
    Rat net = a.contrib[static_cast<std::size_t>(opponent)] -
              a.contrib[static_cast<std::size_t>(predicted)];
    if (net.is_zero()) continue;
    if (net.sign() > 0) {
      obj.softs.push_back({a.lit, net});
    } else {
      obj.softs.push_back({~a.lit, net.abs()});
      obj.offset -= net.abs();
    }
  }
  return obj;
}

/**
 * Score-gap threshold for "opponent overtakes the predicted class": a
 * lower-index opponent wins ties, a higher-index opponent needs a strictly
 * positive gap.
 */
inline Threshold overtake_threshold(int predicted, int opponent) {
  return Threshold{Rat(0), opponent > predicted};
}

/**
 * Vote encoding of a majority-vote forest: per tree one literal per class it
 * can output, implied by the corresponding path conditions, with exactly one
 * true per tree.
 */
class VoteEncoding {
 public:
  explicit VoteEncoding(DomainEncoding& dom) {
    if (dom.model().variant != Variant::rfmv)
      throw UsageError("vote encoding requires a majority-vote forest");
    Cnf& cnf = dom.cnf();
    const Ensemble& e = dom.model();
    const std::size_t K = e.classes.size();
    lits_.assign(e.trees.size(), std::vector<std::optional<Lit>>(K));
    for (std::size_t t = 0; t < e.trees.size(); ++t) {
      std::vector<Lit> conds;
      detail::walk_paths(dom, e.trees[t], 0, conds,
                         [&](const Node& leaf, const std::vector<Lit>& path) {
                           auto canon = detail::canonical_path(path);
                           if (!canon) return;
                           std::size_t cls = 0;
                           while (leaf.weights[cls].is_zero()) ++cls;
                           auto& l = lits_[t][cls];
                           if (!l) l = lit(cnf.new_var());
                           std::vector<Lit> cl;
                           for (Lit c : *canon) cl.push_back(~c);
                           cl.push_back(*l);
                           cnf.add(std::move(cl));
                         });
      std::vector<Lit> present;
      for (const auto& l : lits_[t])
        if (l) present.push_back(*l);
      add_exactly_one(cnf, present);
    }
  }

  /** Literal "tree t votes class c", absent when the tree never outputs c. */
  std::optional<Lit> vote(int t, int c) const {
    return lits_[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
  }

  /** Same, padded with a constant-false literal for impossible votes. */
  Lit vote_or_false(DomainEncoding& dom, int t, int c) const {
    const auto& l = lits_[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
    return l ? *l : dom.false_lit();
  }

 private:
  std::vector<std::vector<std::optional<Lit>>> lits_;
};

enum class AttackVariant { pairwise, two_comparator, k2 };

namespace detail {

inline std::vector<Lit> class_votes(DomainEncoding& dom, const VoteEncoding& votes, int c) {
  std::vector<Lit> out;
  const int n = dom.model().num_trees();
  for (int t = 0; t < n; ++t) out.push_back(votes.vote_or_false(dom, t, c));
  return out;
}

}  // namespace detail

/**
 * Adds the "some class overtakes the target" block to a vote encoding.
 *
 * pairwise: per opponent one counter over the opponent's votes plus the
 * negated target votes; the opponent wins on count >= n (lower index) or
 * >= n+1 (higher index); the disjunction of the winner flags is asserted.
 *
 * two_comparator: two selector groups pick one candidate below and one above
 * the target, channeling the candidate's votes into shared comparison inputs;
 * each side also offers a guaranteed-winner selector (all inputs true), at
 * most one of which may be used. Two unary comparators then require
 * count(target) <= count(below pick) and count(target) < count(above pick).
 *
 * k2: binary classification only; the single opponent needs floor(n/2)+1
 * votes to beat class 0, or ceil(n/2) votes to tie-and-win against class 1.
 */
inline void add_overtake_block(DomainEncoding& dom, const VoteEncoding& votes, int target,
                               AttackVariant variant) {
  Cnf& cnf = dom.cnf();
  const int n = dom.model().num_trees();
  const int K = dom.model().num_classes();
  switch (variant) {
    case AttackVariant::pairwise: {
      std::vector<Lit> winners;
      std::vector<Lit> target_votes = detail::class_votes(dom, votes, target);
      for (int k = 0; k < K; ++k) {
        if (k == target) continue;
        std::vector<Lit> inputs = detail::class_votes(dom, votes, k);
        for (Lit l : target_votes) inputs.push_back(~l);
        const int bound = k < target ? n : n + 1;
        UnaryCounter u = sort_unary(cnf, inputs);
        winners.push_back(u.outputs[static_cast<std::size_t>(bound - 1)]);
      }
      cnf.add(std::move(winners));
      break;
    }
    case AttackVariant::two_comparator: {
      std::vector<Lit> below_z, above_z;
      for (int t = 0; t < n; ++t) {
        below_z.push_back(lit(cnf.new_var()));
        above_z.push_back(lit(cnf.new_var()));
      }
      Lit p_below_any = lit(cnf.new_var());  // guaranteed winner on the below side
      Lit p_above_any = lit(cnf.new_var());  // guaranteed winner on the above side
      for (int t = 0; t < n; ++t) {
        cnf.add({~p_below_any, below_z[static_cast<std::size_t>(t)]});
        cnf.add({~p_above_any, above_z[static_cast<std::size_t>(t)]});
      }
      cnf.add({~p_below_any, ~p_above_any});
      std::vector<Lit> below_sel{p_below_any}, above_sel{p_above_any};
      for (int k = 0; k < K; ++k) {
        if (k == target) continue;
        Lit p = lit(cnf.new_var());
        auto& z = k < target ? below_z : above_z;
        (k < target ? below_sel : above_sel).push_back(p);
        for (int t = 0; t < n; ++t) {  // p -> (z_t <-> vote(t, k))
          Lit v = votes.vote_or_false(dom, t, k);
          cnf.add({~p, ~z[static_cast<std::size_t>(t)], v});
          cnf.add({~p, z[static_cast<std::size_t>(t)], ~v});
        }
      }
      add_exactly_one(cnf, below_sel);
      add_exactly_one(cnf, above_sel);
      UnaryCounter target_count = sort_unary(cnf, detail::class_votes(dom, votes, target));
      UnaryCounter below_count = sort_unary(cnf, below_z);
      UnaryCounter above_count = sort_unary(cnf, above_z);
      cnf.add({add_unary_comparator(cnf, target_count.outputs, below_count.outputs, CmpMode::le)});
      cnf.add({add_unary_comparator(cnf, target_count.outputs, above_count.outputs, CmpMode::lt)});
      break;
    }
    case AttackVariant::k2: {
      if (K != 2) throw UsageError("the binary overtake block requires exactly two classes");
      const int opponent = 1 - target;
      const long long bound = target == 0 ? n / 2 + 1 : (n + 1) / 2;
      add_cardinality_geq(cnf, detail::class_votes(dom, votes, opponent), bound);
      break;
    }
  }
}

/**
 * Two replicas of a majority-vote forest in one formula, with a winner
 * selector for the first replica, a "different class wins" block for the
 * second, and per-feature equality flags channeled between the replicas.
 * Satisfying models decode to a pair of cells with distinct predictions.
 */
class PairEncoding {
 public:
  explicit PairEncoding(const Ensemble& e, const IntervalMap& im) : model_(&e), imap_(&im) {
    if (e.variant != Variant::rfmv)
      throw UsageError("pairwise verification requires a majority-vote forest");
    const int K = e.num_classes();
    for (int copy = 0; copy < 2; ++copy) {
      dom_[copy].emplace(cnf_, e, im);
      vote_[copy].emplace(*dom_[copy]);
    }
    // Per-replica class counts, most significant first.
    std::vector<std::vector<Lit>> count_a(static_cast<std::size_t>(K));
    std::vector<std::vector<Lit>> count_b(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      count_a[static_cast<std::size_t>(k)] =
          sort_unary(cnf_, detail::class_votes(*dom_[0], *vote_[0], k)).outputs;
      count_b[static_cast<std::size_t>(k)] =
          sort_unary(cnf_, detail::class_votes(*dom_[1], *vote_[1], k)).outputs;
    }
    for (int k = 0; k < K; ++k) {
      sel_a_.push_back(lit(cnf_.new_var()));
      sel_b_.push_back(lit(cnf_.new_var()));
    }
    add_exactly_one(cnf_, sel_a_);
    add_exactly_one(cnf_, sel_b_);
    for (int j = 0; j < K; ++j) {
      cnf_.add({~sel_a_[static_cast<std::size_t>(j)], ~sel_b_[static_cast<std::size_t>(j)]});
      for (int k = 0; k < K; ++k) {
        if (k == j) continue;
        // Replica a: the selected class j beats every other class k.
        Lit a_wins = add_unary_comparator(
            cnf_, count_a[static_cast<std::size_t>(k)], count_a[static_cast<std::size_t>(j)],
            k < j ? CmpMode::lt : CmpMode::le);
        cnf_.add({~sel_a_[static_cast<std::size_t>(j)], a_wins});
        // Replica b: the selected class k overtakes replica a's winner j.
        Lit b_beats = add_unary_comparator(
            cnf_, count_b[static_cast<std::size_t>(j)], count_b[static_cast<std::size_t>(k)],
            k < j ? CmpMode::le : CmpMode::lt);
        cnf_.add({~sel_a_[static_cast<std::size_t>(j)], ~sel_b_[static_cast<std::size_t>(k)],
                  b_beats});
      }
    }
    // Equality flags: eq_i <-> the replicas pick the same interval of feature i.
    for (int i = 0; i < e.num_features(); ++i) {
      if (!dom_[0]->multi(i)) continue;
      Lit eq = lit(cnf_.new_var());
      multi_.push_back(i);
      eq_.push_back(eq);
      for (int k = 0; k < im.feats[static_cast<std::size_t>(i)].count; ++k) {
        Lit a = dom_[0]->interval_lit(i, k);
        Lit b = dom_[1]->interval_lit(i, k);
        cnf_.add({~a, ~b, eq});
        cnf_.add({~a, b, ~eq});
      }
    }
  }

  Cnf& cnf() { return cnf_; }
  DomainEncoding& replica(int copy) { return *dom_[copy]; }
  const std::vector<int>& multi_features() const { return multi_; }
  const std::vector<Lit>& eq_lits() const { return eq_; }

  /** Forces equality on every multi-interval feature outside `protected_set`. */
  void require_equal_outside(const std::vector<int>& protected_set) {
    for (std::size_t i = 0; i < multi_.size(); ++i) {
      if (std::find(protected_set.begin(), protected_set.end(), multi_[i]) ==
          protected_set.end())
        cnf_.add({eq_[i]});
    }
  }

  /** Pins the first replica to the instance's cell and bounds the number of
      differing features by delta. */
  void require_neighborhood(const Instance& v, int delta) {
    std::vector<int> cell = locate(*imap_, v);
    for (std::size_t i = 0; i < cell.size(); ++i)
      if (dom_[0]->multi(static_cast<int>(i)))
        cnf_.add({dom_[0]->interval_lit(static_cast<int>(i), cell[i])});
    add_cardinality_geq(cnf_, eq_, static_cast<long long>(multi_.size()) - delta);
  }

  /** Reads one replica's cell out of a satisfying assignment. */
  template <class ModelFn>
  std::vector<int> decode_cell(int copy, ModelFn&& value) const {
    std::vector<int> cell(model_->features.size(), 0);
    for (std::size_t i = 0; i < cell.size(); ++i) {
      if (!dom_[copy]->multi(static_cast<int>(i))) continue;
      const int count = imap_->feats[i].count;
      for (int k = 0; k < count; ++k) {
        if (value(dom_[copy]->interval_lit(static_cast<int>(i), k))) {
          cell[i] = k;
          break;
        }
      }
    }
    return cell;
  }

 private:
  const Ensemble* model_;
  const IntervalMap* imap_;
  Cnf cnf_;
  std::optional<DomainEncoding> dom_[2];
  std::optional<VoteEncoding> vote_[2];
  std::vector<Lit> sel_a_, sel_b_;
  std::vector<int> multi_;
  std::vector<Lit> eq_;
};

}  // namespace texp

#endif  // TEXP_ENCODE_HPP
