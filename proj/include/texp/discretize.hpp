#ifndef TEXP_DISCRETIZE_HPP
#define TEXP_DISCRETIZE_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "texp/errors.hpp"
#include "texp/model.hpp"

namespace texp {

/**
 * A split point of a real feature, remembering whether the split test was
 * strict. "x lies below (v, incl)" means x < v, or x == v when incl is set;
 * so `x < t` contributes (t, false) and `x <= t` contributes (t, true).
 */
struct Boundary {
  Rat value;
  bool incl = false;

  friend bool operator==(const Boundary& a, const Boundary& b) {
    return a.value == b.value && a.incl == b.incl;
  }
  /** Sorted by inclusion of the "below" sets: (v, false) precedes (v, true). */
  friend bool operator<(const Boundary& a, const Boundary& b) {
    if (a.value != b.value) return a.value < b.value;
    return !a.incl && b.incl;
  }
};

inline bool below(const Rat& x, const Boundary& b) {
  return x < b.value || (b.incl && x == b.value);
}

/**
 * The value partition of one feature. Real features split into
 * `splits.size() + 1` intervals between consecutive boundaries; categorical
 * and binary features keep one slot per domain value.
 */
struct FeatureIntervals {
  FeatureKind kind = FeatureKind::real_num;
  int count = 1;
  std::vector<Boundary> splits;  // sorted, unique; real features only
};

struct IntervalMap {
  std::vector<FeatureIntervals> feats;
};

/** All split points the ensemble tests on one real feature, sorted. */
inline std::vector<Boundary> collect_split_points(const Ensemble& e, int feature) {
  std::vector<Boundary> out;
  for (const Tree& t : e.trees)
    for (const Node& n : t.nodes)
      if (!n.is_leaf() && n.feature == feature)
        out.push_back(Boundary{n.threshold, n.le});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline IntervalMap build_interval_map(const Ensemble& e) {
  IntervalMap m;
  m.feats.resize(e.num_features());
  for (int i = 0; i < e.num_features(); ++i) {
    FeatureIntervals& fi = m.feats[i];
    fi.kind = e.features[i].kind;
    switch (fi.kind) {
      case FeatureKind::real_num:
        fi.splits = collect_split_points(e, i);
        fi.count = static_cast<int>(fi.splits.size()) + 1;
        break;
      case FeatureKind::categorical:
        fi.count = static_cast<int>(e.features[i].cats.size());
        break;
      default:
        fi.count = 2;
    }
  }
  return m;
}

/** Interval index of one value: the number of boundaries it is not below. */
inline int interval_of(const FeatureIntervals& fi, const Value& v) {
  if (fi.kind != FeatureKind::real_num) return std::get<int>(v);
  const Rat& x = std::get<Rat>(v);
  int k = 0;
  while (k < static_cast<int>(fi.splits.size()) && !below(x, fi.splits[k])) ++k;
  return k;
}

/** Per-feature interval indices of an instance. */
inline std::vector<int> locate(const IntervalMap& m, const Instance& x) {
  std::vector<int> cell(m.feats.size());
  for (std::size_t i = 0; i < m.feats.size(); ++i) cell[i] = interval_of(m.feats[i], x[i]);
  return cell;
}

/**
 * A concrete value inside one interval. For real features this is the
 * midpoint of the interval's endpoints, which also handles singleton
 * intervals squeezed between a strict and a non-strict boundary at the
 * same value.
 */
inline Value representative_value(const Feature& f, const FeatureIntervals& fi, int k) {
  if (fi.kind != FeatureKind::real_num) return k;
  const int r = static_cast<int>(fi.splits.size());
  const Rat lo = k == 0 ? f.lo : fi.splits[k - 1].value;
  const Rat hi = k == r ? f.hi : fi.splits[k].value;
  return (lo + hi) / Rat(2);
}

/** Instance whose every feature sits in the requested interval. */
inline Instance representative(const Ensemble& e, const IntervalMap& m,
                               const std::vector<int>& cell) {
  Instance x;
  x.reserve(cell.size());
  for (std::size_t i = 0; i < cell.size(); ++i)
    x.push_back(representative_value(e.features[i], m.feats[i], cell[i]));
  return x;
}

/** Human-readable description of one interval, e.g. "(0.75, 1.55]". */
inline std::string interval_to_string(const Feature& f, const FeatureIntervals& fi, int k) {
  if (fi.kind == FeatureKind::categorical) return f.cats[k];
  if (fi.kind == FeatureKind::binary) return k ? "1" : "0";
  const int r = static_cast<int>(fi.splits.size());
  // Open below a strict boundary from the left; singleton when pinched.
  const bool lo_closed = k == 0 || !fi.splits[k - 1].incl;
  const bool hi_closed = k == r || fi.splits[k].incl;
  const Rat lo = k == 0 ? f.lo : fi.splits[k - 1].value;
  const Rat hi = k == r ? f.hi : fi.splits[k].value;
  if (lo == hi) return "{" + lo.to_string() + "}";
  return std::string(lo_closed ? "[" : "(") + lo.to_string() + ", " + hi.to_string() +
         (hi_closed ? "]" : ")");
}

/**
 * Number of cells in the product of all feature partitions. Throws
 * BudgetError when the product exceeds `budget`.
 */
inline std::uint64_t cell_count(const IntervalMap& m, std::uint64_t budget) {
  std::uint64_t total = 1;
  for (const FeatureIntervals& fi : m.feats) {
    const std::uint64_t c = static_cast<std::uint64_t>(fi.count);
    if (total > budget / c)
      throw BudgetError("feature-space cell count exceeds budget", 0, budget);
    total *= c;
  }
  if (total > budget) throw BudgetError("feature-space cell count exceeds budget", total, budget);
  return total;
}

}  // namespace texp

#endif  // TEXP_DISCRETIZE_HPP
