#ifndef TEXP_VERIFY_HPP
#define TEXP_VERIFY_HPP

#include <algorithm>
#include <chrono>
#include <optional>
#include <utility>
#include <vector>

#include "texp/discretize.hpp"
#include "texp/encode.hpp"
#include "texp/errors.hpp"
#include "texp/model.hpp"
#include "texp/sat_solver.hpp"

namespace texp {

/** Two instances the model treats differently despite agreeing on every
 * non-protected feature. */
struct WitnessPair {
  Instance a;
  Instance b;
  int class_a = 0;
  int class_b = 0;
};

struct FairnessResult {
  bool fair = false;
  std::optional<WitnessPair> witness;  // populated when unfair
};

struct RobustnessResult {
  bool robust = false;
  std::optional<Instance> witness;  // differently classified near point
  int witness_class = -1;
};

/**
 * Decides whether any two inputs that agree outside `protected_features`
 * can be classified differently. Exact over the model's value grid (every
 * input lies in some grid cell, and the model is constant per cell), hence
 * exact over the whole input space. Majority-vote forests only.
 */
inline FairnessResult check_fairness(
    const Ensemble& e, const std::vector<int>& protected_features,
    std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt) {
  if (protected_features.empty())
    throw ValidationError("fairness check needs at least one protected feature");
  std::vector<int> prot = protected_features;
  std::sort(prot.begin(), prot.end());
  if (std::adjacent_find(prot.begin(), prot.end()) != prot.end())
    throw ValidationError("duplicate protected feature");
  if (prot.front() < 0 || prot.back() >= e.num_features())
    throw ValidationError("protected feature index out of range");

  const IntervalMap imap = build_interval_map(e);
  PairEncoding pair(e, imap);
  pair.require_equal_outside(prot);

  SatSolver solver;
  solver.set_deadline(deadline);
  solver.load(pair.cnf());
  FairnessResult res;
  if (solver.solve() == SatSolver::Result::unsat) {
    res.fair = true;
    return res;
  }
  const auto val = [&](Lit l) { return solver.model_value(l); };
  WitnessPair w;
  w.a = representative(e, imap, pair.decode_cell(0, val));
  w.b = representative(e, imap, pair.decode_cell(1, val));
  w.class_a = predict(e, w.a);
  w.class_b = predict(e, w.b);
  res.fair = false;
  res.witness = std::move(w);
  return res;
}

/**
 * Decides whether every input differing from `v` on at most `delta` features
 * keeps v's predicted class. Exact over the value grid: a differing feature
 * means a different grid interval, and any within-interval change cannot
 * affect the model. Majority-vote forests only.
 */
inline RobustnessResult check_robustness(
    const Ensemble& e, const Instance& v, int delta,
    std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt) {
  validate_instance(e, v);
  if (delta < 0 || delta > e.num_features())
    throw ValidationError("distance bound out of range");

  const IntervalMap imap = build_interval_map(e);
  PairEncoding pair(e, imap);
  pair.require_neighborhood(v, delta);

  SatSolver solver;
  solver.set_deadline(deadline);
  solver.load(pair.cnf());
  RobustnessResult res;
  if (solver.solve() == SatSolver::Result::unsat) {
    res.robust = true;
    return res;
  }
  const std::vector<int> base = locate(imap, v);
  const std::vector<int> cell =
      pair.decode_cell(1, [&](Lit l) { return solver.model_value(l); });
  Instance w = v;  // keep v's exact values wherever the cells agree
  for (std::size_t f = 0; f < cell.size(); ++f)
    if (cell[f] != base[f]) w[f] = representative_value(e.features[f], imap.feats[f], cell[f]);
  res.robust = false;
  res.witness_class = predict(e, w);
  res.witness = std::move(w);
  return res;
}

}  // namespace texp

#endif  // TEXP_VERIFY_HPP
