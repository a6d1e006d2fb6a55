#ifndef TEXP_MAXSAT_HPP
#define TEXP_MAXSAT_HPP

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "texp/cnf.hpp"
#include "texp/errors.hpp"
#include "texp/gadgets.hpp"
#include "texp/rational.hpp"
#include "texp/sat_solver.hpp"

namespace texp {

/**
 * Weight strata, heaviest first. Weights are scanned in descending order;
 * each joins the open stratum when it is at least as close to that stratum's
 * mean as to the mean of the weights still to come (an empty remainder
 * counts as distance zero, closing the stratum unless the weight ties).
 */
inline std::vector<std::vector<Rat>> stratify_weights(std::vector<Rat> weights) {
  std::sort(weights.begin(), weights.end(), [](const Rat& a, const Rat& b) { return b < a; });
  std::vector<std::vector<Rat>> strata;
  if (weights.empty()) return strata;

  std::vector<Rat> suffix(weights.size() + 1, Rat(0));  // suffix sums
  for (int i = static_cast<int>(weights.size()) - 1; i >= 0; --i)
    suffix[i] = suffix[i + 1] + weights[i];

  strata.push_back({weights[0]});
  Rat cur_sum = weights[0];
  for (std::size_t i = 1; i < weights.size(); ++i) {
    const Rat& w = weights[i];
    const Rat cur_cnt(static_cast<long long>(strata.back().size()));
    const Rat mean_cur = cur_sum / cur_cnt;
    const std::size_t rest = weights.size() - i - 1;
    const Rat mean_rest = rest == 0 ? w : suffix[i + 1] / Rat(static_cast<long long>(rest));
    if ((w - mean_cur).abs() <= (w - mean_rest).abs()) {
      strata.back().push_back(w);
      cur_sum += w;
    } else {
      strata.push_back({w});
      cur_sum = w;
    }
  }
  return strata;
}

/** Decision threshold: the objective "meets" it when value > bound (strict)
 * or value >= bound (non-strict). */
struct Threshold {
  Rat bound;
  bool strict = false;

  bool met_by(const Rat& value) const { return strict ? value > bound : value >= bound; }
};

enum class OptStatus {
  optimum,     // exact maximum found
  early_meet,  // stopped early: some model already meets the threshold
  early_fail,  // stopped early: no model can meet the threshold
  infeasible,  // hard clauses plus assumptions are unsatisfiable
};

struct OptResult {
  OptStatus status = OptStatus::optimum;
  Rat value;               // exact objective of `model` (optimum / early_meet)
  std::vector<char> model; // truth value per variable, index 0 unused
  std::vector<Lit> core;   // infeasible: conflicting assumption subset
  bool meets = false;      // threshold verdict (threshold queries only)

  bool feasible() const { return status != OptStatus::infeasible; }
};

/**
 * Incremental core-guided weighted-MaxSAT engine (OLL-style) over an
 * assumption-capable CDCL solver. Maximizes "sum of satisfied soft weights
 * plus offset" under caller assumptions. Supports weight stratification,
 * early termination of threshold queries in both directions, and replay of
 * previously extracted cores across calls with varying assumptions.
 */
class MaxSatEngine {
 public:
  explicit MaxSatEngine(const Wcnf& w) : offset_(w.offset) {
    solver_.load(w.hard);
    std::unordered_map<std::int32_t, std::size_t> seen;
    for (const SoftLit& s : w.softs) {
      if (!(Rat(0) < s.weight)) throw ValidationError("soft weights must be positive");
      solver_.ensure_vars(s.lit.var());
      auto it = seen.find(s.lit.code);
      if (it == seen.end()) {
        seen.emplace(s.lit.code, softs_.size());
        softs_.push_back(s);
      } else {
        softs_[it->second].weight += s.weight;
      }
    }
    for (const SoftLit& s : softs_) total_ += s.weight;
  }

  void add_hard(std::vector<Lit> clause) { solver_.add_clause(std::move(clause)); }

  void set_use_stratification(bool on) { use_strat_ = on; }
  void set_use_core_reuse(bool on) { use_reuse_ = on; }
  void set_use_early_termination(bool on) { use_early_ = on; }
  void set_deadline(std::optional<std::chrono::steady_clock::time_point> d) {
    solver_.set_deadline(d);
  }

  /** Largest objective value any model could reach. */
  Rat upper_bound() const { return total_ + offset_; }

  /** Exact maximization; never stops early. */
  OptResult maximize(const std::vector<Lit>& assumptions = {}) { return run(assumptions, nullptr); }

  /** Threshold query; may stop as soon as the verdict is decided. */
  OptResult check(const std::vector<Lit>& assumptions, const Threshold& t) {
    return run(assumptions, &t);
  }

  /**
   * Assumption literals that participated in the last call's cost proof
   * (core dependencies and infeasibility cores). A "fails the threshold"
   * verdict remains valid under any assumption subset containing them.
   */
  const std::vector<Lit>& last_responsible() const { return responsible_; }

  long long cores_extracted() const { return stat_extracted_; }
  long long cores_replayed() const { return stat_replayed_; }
  SatSolver& solver() { return solver_; }

 private:
  struct Active {
    Lit lit;
    Rat residual;
    int level = 0;
  };
  struct Recorded {
    std::vector<Lit> adeps;     // caller-assumption dependencies
    std::vector<Lit> members;   // soft literals falsified by the core
    std::vector<Lit> counters;  // counter softs introduced for this core
  };

  OptResult run(const std::vector<Lit>& assumptions, const Threshold* thr) {
    responsible_.clear();
    std::unordered_set<std::int32_t> resp_seen;
    auto add_resp = [&](Lit a) {
      if (resp_seen.insert(a.code).second) responsible_.push_back(a);
    };
    std::unordered_set<std::int32_t> asm_set;
    for (const Lit& a : assumptions) {
      solver_.ensure_vars(a.var());
      asm_set.insert(a.code);
    }

    // Stratification levels, a pure function of the original weight multiset.
    int num_levels = 1;
    std::map<Rat, int> level_of;
    if (use_strat_ && !softs_.empty()) {
      std::vector<Rat> ws;
      ws.reserve(softs_.size());
      for (const SoftLit& s : softs_) ws.push_back(s.weight);
      const std::vector<std::vector<Rat>> strata = stratify_weights(std::move(ws));
      num_levels = static_cast<int>(strata.size());
      for (int lv = 0; lv < num_levels; ++lv)
        for (const Rat& w : strata[lv]) level_of.emplace(w, lv);
    }

    // Per-call soft state, insertion-ordered for deterministic assumptions.
    std::vector<Active> act;
    std::unordered_map<std::int32_t, int> index;
    auto add_active = [&](Lit l, const Rat& w, int level) {
      index.emplace(l.code, static_cast<int>(act.size()));
      act.push_back(Active{l, w, level});
    };

    Rat cost(0);
    for (const SoftLit& s : softs_) {
      if (asm_set.count((~s.lit).code)) {
        // The caller pins this soft false: its weight is lost up front.
        cost += s.weight;
        add_resp(~s.lit);
      } else {
        const auto it = level_of.find(s.weight);
        add_active(s.lit, s.weight, it == level_of.end() ? 0 : it->second);
      }
    }

    const auto optimistic = [&] { return total_ + offset_ - cost; };
    const auto make_fail = [&] {
      OptResult r;
      r.status = OptStatus::early_fail;
      r.meets = false;
      return r;
    };

    if (use_reuse_) {
      for (const Recorded& rc : record_) {
        bool applicable = true;
        for (const Lit& a : rc.adeps)
          if (!asm_set.count(a.code)) {
            applicable = false;
            break;
          }
        if (!applicable) continue;
        Rat wmin;
        int lvl = 0;
        bool first = true;
        for (const Lit& m : rc.members) {
          const auto it = index.find(m.code);
          if (it == index.end() || !(Rat(0) < act[it->second].residual)) {
            applicable = false;
            break;
          }
          const Active& a = act[it->second];
          if (first || a.residual < wmin) wmin = a.residual;
          lvl = std::max(lvl, a.level);
          first = false;
        }
        if (!applicable) continue;
        cost += wmin;
        for (const Lit& m : rc.members) act[index[m.code]].residual -= wmin;
        for (const Lit& c : rc.counters) add_active(c, wmin, lvl);
        for (const Lit& a : rc.adeps) add_resp(a);
        ++stat_replayed_;
      }
    }
    if (thr != nullptr && use_early_ && !thr->met_by(optimistic())) return make_fail();

    int level = 0;
    std::vector<Lit> asms;
    for (;;) {
      asms = assumptions;
      for (const Active& a : act)
        if (Rat(0) < a.residual && a.level <= level) asms.push_back(a.lit);

      if (solver_.solve(asms) == SatSolver::Result::sat) {
        OptResult res;
        res.value = offset_;
        for (const SoftLit& s : softs_)
          if (solver_.model_value(s.lit)) res.value += s.weight;
        res.model.assign(static_cast<std::size_t>(solver_.num_vars()) + 1, 0);
        for (int v = 1; v <= solver_.num_vars(); ++v)
          res.model[static_cast<std::size_t>(v)] = solver_.model_value(lit(v)) ? 1 : 0;
        if (level + 1 >= num_levels) {
          res.status = OptStatus::optimum;
          res.meets = thr != nullptr && thr->met_by(res.value);
          return res;
        }
        if (thr != nullptr && use_early_ && thr->met_by(res.value)) {
          res.status = OptStatus::early_meet;
          res.meets = true;
          return res;
        }
        ++level;
        continue;
      }

      const std::vector<Lit> core = solver_.core();
      std::vector<Lit> adeps, members;
      for (const Lit& l : core)
        (asm_set.count(l.code) ? adeps : members).push_back(l);
      if (members.empty()) {
        for (const Lit& a : adeps) add_resp(a);
        OptResult res;
        res.status = OptStatus::infeasible;
        res.core = adeps;
        res.meets = false;
        return res;
      }

      // OLL step: charge the core's minimum residual, split the rest, and
      // count the core's falsified members with fresh unary-counter softs.
      Rat wmin;
      int lvl = 0;
      bool first = true;
      for (const Lit& m : members) {
        const Active& a = act[index[m.code]];
        if (first || a.residual < wmin) wmin = a.residual;
        lvl = std::max(lvl, a.level);
        first = false;
      }
      cost += wmin;
      ++stat_extracted_;
      for (const Lit& m : members) act[index[m.code]].residual -= wmin;

      Recorded rec;
      rec.adeps = adeps;
      rec.members = members;
      if (members.size() >= 2) {
        std::vector<Lit> inputs;
        inputs.reserve(members.size());
        for (const Lit& m : members) inputs.push_back(~m);
        const UnaryCounter uc = sort_unary(solver_, inputs);
        std::vector<Lit> implied;
        for (const Lit& a : adeps) implied.push_back(~a);
        implied.push_back(uc.outputs[0]);
        solver_.add_clause(std::move(implied));
        for (std::size_t j = 1; j < uc.outputs.size(); ++j) {
          const Lit c = ~uc.outputs[j];
          rec.counters.push_back(c);
          add_active(c, wmin, lvl);
        }
      } else {
        std::vector<Lit> implied;
        for (const Lit& a : adeps) implied.push_back(~a);
        implied.push_back(~members[0]);
        solver_.add_clause(std::move(implied));
      }
      for (const Lit& a : adeps) add_resp(a);
      record_.push_back(std::move(rec));

      if (thr != nullptr && use_early_ && !thr->met_by(optimistic())) return make_fail();
    }
  }

  SatSolver solver_;
  std::vector<SoftLit> softs_;
  Rat total_;
  Rat offset_;
  bool use_strat_ = true;
  bool use_reuse_ = true;
  bool use_early_ = true;
  std::vector<Recorded> record_;
  std::vector<Lit> responsible_;
  long long stat_extracted_ = 0;
  long long stat_replayed_ = 0;
};

}  // namespace texp

#endif  // TEXP_MAXSAT_HPP
