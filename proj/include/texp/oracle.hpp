#ifndef TEXP_ORACLE_HPP
#define TEXP_ORACLE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "texp/discretize.hpp"
#include "texp/model.hpp"

namespace texp {

/**
 * Exhaustive-enumeration reference oracle. The ensemble's split points carve
 * the feature space into finitely many cells on which the predicted class is
 * constant; this walks them all. Intended for validating the solver-based
 * pipeline on small models, guarded by an explicit cell budget.
 */
class CellGrid {
 public:
  explicit CellGrid(const Ensemble& e, std::uint64_t cell_budget = 10'000'000)
      : ens_(&e), map_(build_interval_map(e)) {
    total_ = cell_count(map_, cell_budget);
    stride_.assign(map_.feats.size(), 1);
    // Row-major with feature 0 most significant.
    for (int i = static_cast<int>(map_.feats.size()) - 2; i >= 0; --i)
      stride_[i] = stride_[i + 1] * static_cast<std::uint64_t>(map_.feats[i + 1].count);
  }

  const Ensemble& model() const { return *ens_; }
  const IntervalMap& map() const { return map_; }
  std::uint64_t size() const { return total_; }

  std::vector<int> cell_of(std::uint64_t id) const {
    std::vector<int> cell(map_.feats.size());
    for (std::size_t i = 0; i < map_.feats.size(); ++i) {
      cell[i] = static_cast<int>(id / stride_[i]);
      id %= stride_[i];
    }
    return cell;
  }

  std::uint64_t id_of(const std::vector<int>& cell) const {
    std::uint64_t id = 0;
    for (std::size_t i = 0; i < cell.size(); ++i)
      id += stride_[i] * static_cast<std::uint64_t>(cell[i]);
    return id;
  }

  Instance rep(const std::vector<int>& cell) const { return representative(*ens_, map_, cell); }

  int predict_cell(const std::vector<int>& cell) const { return predict(*ens_, rep(cell)); }

  /** Predicted class for every cell id; computed once, then cached. */
  const std::vector<int>& predictions() const {
    if (preds_.empty()) {
      preds_.resize(total_);
      std::vector<int> cell(map_.feats.size(), 0);
      for (std::uint64_t id = 0; id < total_; ++id) {
        preds_[id] = predict_cell(cell);
        for (int i = static_cast<int>(cell.size()) - 1; i >= 0; --i) {
          if (++cell[i] < map_.feats[i].count) break;
          cell[i] = 0;
        }
      }
    }
    return preds_;
  }

 private:
  const Ensemble* ens_;
  IntervalMap map_;
  std::vector<std::uint64_t> stride_;
  std::uint64_t total_ = 1;
  mutable std::vector<int> preds_;
};

namespace detail {

/**
 * Runs `fn(cell)` for every cell agreeing with `base` on the features in
 * `fixed`; stops early when `fn` returns false. Returns false on early stop.
 */
template <typename F>
inline bool for_each_cell_fixing(const IntervalMap& m, const std::vector<int>& base,
                                 const std::vector<bool>& fixed, F&& fn) {
  std::vector<int> cell = base;
  std::vector<int> free;
  for (std::size_t i = 0; i < m.feats.size(); ++i)
    if (!fixed[i]) {
      free.push_back(static_cast<int>(i));
      cell[i] = 0;
    }
  for (;;) {
    if (!fn(cell)) return false;
    int j = static_cast<int>(free.size()) - 1;
    for (; j >= 0; --j) {
      const int i = free[j];
      if (++cell[i] < m.feats[i].count) break;
      cell[i] = 0;
    }
    if (j < 0) return true;
  }
}

}  // namespace detail

/**
 * True when fixing the features of `subset` to the cell of `x` forces the
 * ensemble's prediction to its value at `x`, everywhere in the feature space.
 */
inline bool brute_entails(const CellGrid& g, const Instance& x, const std::vector<int>& subset) {
  const std::vector<int> base = locate(g.map(), x);
  const int target = predict(g.model(), x);
  std::vector<bool> fixed(g.map().feats.size(), false);
  for (int i : subset) fixed[i] = true;
  return detail::for_each_cell_fixing(g.map(), base, fixed, [&](const std::vector<int>& cell) {
    return g.predict_cell(cell) == target;
  });
}

struct XpSets {
  std::vector<std::vector<int>> axps;  // each sorted; list in discovery order
  std::vector<std::vector<int>> cxps;
};

/**
 * All minimal sufficient-reason and minimal counterexample-reason feature
 * sets of one prediction, by explicit enumeration over all feature subsets.
 * `ops_budget` bounds the total number of cell visits.
 */
inline XpSets brute_xps(const CellGrid& g, const Instance& x,
                        std::uint64_t ops_budget = 200'000'000) {
  const IntervalMap& m = g.map();
  // Only features with more than one interval can ever matter.
  std::vector<int> cand;
  for (std::size_t i = 0; i < m.feats.size(); ++i)
    if (m.feats[i].count > 1) cand.push_back(static_cast<int>(i));
  const int f = static_cast<int>(cand.size());
  if (f > 20) throw BudgetError("too many candidate features for subset enumeration",
                                static_cast<std::uint64_t>(f), 20);
  std::uint64_t work = 1;
  for (int i : cand) {
    const std::uint64_t c = static_cast<std::uint64_t>(m.feats[i].count) + 1;
    if (work > ops_budget / c)
      throw BudgetError("subset enumeration exceeds budget", 0, ops_budget);
    work *= c;
  }

  const std::uint64_t nmask = std::uint64_t(1) << f;
  std::vector<char> ent(nmask, 0);
  const std::vector<int> base = locate(m, x);
  const int target = predict(g.model(), x);
  std::vector<bool> fixed(m.feats.size(), false);
  for (std::uint64_t mask = 0; mask < nmask; ++mask) {
    std::fill(fixed.begin(), fixed.end(), false);
    for (int b = 0; b < f; ++b)
      if (mask >> b & 1) fixed[cand[b]] = true;
    ent[mask] = detail::for_each_cell_fixing(
        m, base, fixed, [&](const std::vector<int>& cell) {
          return g.predict_cell(cell) == target;
        });
  }

  XpSets out;
  auto to_features = [&](std::uint64_t mask) {
    std::vector<int> s;
    for (int b = 0; b < f; ++b)
      if (mask >> b & 1) s.push_back(cand[b]);
    return s;
  };
  const std::uint64_t full = nmask - 1;
  for (std::uint64_t mask = 0; mask < nmask; ++mask) {
    if (ent[mask]) {
      bool minimal = true;
      for (int b = 0; b < f && minimal; ++b)
        if ((mask >> b & 1) && ent[mask & ~(std::uint64_t(1) << b)]) minimal = false;
      if (minimal) out.axps.push_back(to_features(mask));
    }
    // mask as the freed set: a counterexample set iff fixing the rest fails.
    if (!ent[full & ~mask]) {
      bool minimal = true;
      for (int b = 0; b < f && minimal; ++b)
        if ((mask >> b & 1) && !ent[full & ~(mask & ~(std::uint64_t(1) << b))]) minimal = false;
      if (minimal) out.cxps.push_back(to_features(mask));
    }
  }
  return out;
}

/**
 * Model-level individual fairness: no two instances that agree on every
 * feature outside `protected_feats` may be classified differently. Returns
 * a violating pair when unfair.
 */
inline std::optional<std::pair<Instance, Instance>> brute_fairness_witness(
    const CellGrid& g, const std::vector<int>& protected_feats) {
  const IntervalMap& m = g.map();
  std::vector<bool> prot(m.feats.size(), false);
  for (int i : protected_feats) prot[i] = true;
  // Group cells by their projection onto unprotected features.
  std::map<std::vector<int>, std::pair<int, std::vector<int>>> seen;  // key -> (class, cell)
  const std::vector<int>& preds = g.predictions();
  for (std::uint64_t id = 0; id < g.size(); ++id) {
    std::vector<int> cell = g.cell_of(id);
    std::vector<int> key;
    for (std::size_t i = 0; i < cell.size(); ++i)
      if (!prot[i]) key.push_back(cell[i]);
    auto [it, fresh] = seen.emplace(std::move(key), std::make_pair(preds[id], cell));
    if (!fresh && it->second.first != preds[id])
      return std::make_pair(g.rep(it->second.second), g.rep(cell));
  }
  return std::nullopt;
}

inline bool brute_fair(const CellGrid& g, const std::vector<int>& protected_feats) {
  return !brute_fairness_witness(g, protected_feats).has_value();
}

/**
 * Pointwise robustness: no instance within Hamming distance `delta` of `x`
 * (counting changed features) may get a different class. Returns a
 * counterexample instance when not robust.
 */
inline std::optional<Instance> brute_robustness_witness(const CellGrid& g, const Instance& x,
                                                        int delta) {
  const std::vector<int> base = locate(g.map(), x);
  const int target = predict(g.model(), x);
  const std::vector<int>& preds = g.predictions();
  for (std::uint64_t id = 0; id < g.size(); ++id) {
    if (preds[id] == target) continue;
    std::vector<int> cell = g.cell_of(id);
    int dist = 0;
    for (std::size_t i = 0; i < cell.size(); ++i)
      if (cell[i] != base[i]) ++dist;
    if (dist <= delta) {
      // Keep x's exact values on agreeing features so the distance is tight.
      Instance y = g.rep(cell);
      for (std::size_t i = 0; i < cell.size(); ++i)
        if (cell[i] == base[i]) y[i] = x[i];
      return y;
    }
  }
  return std::nullopt;
}

inline bool brute_robust(const CellGrid& g, const Instance& x, int delta) {
  return !brute_robustness_witness(g, x, delta).has_value();
}

}  // namespace texp

#endif  // TEXP_ORACLE_HPP
