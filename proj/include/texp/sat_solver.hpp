#ifndef TEXP_SAT_SOLVER_HPP
#define TEXP_SAT_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "texp/cnf.hpp"
#include "texp/errors.hpp"

namespace texp {

/**
 * Conflict-driven clause-learning SAT solver with assumption support.
 *
 * Features: two-literal watching, first-UIP learning with recursive clause
 * minimization, exponentially decayed variable activities with an
 * index-deterministic order heap, phase saving with optional user-supplied
 * polarity suggestions, Luby restarts, and activity-based learnt-clause
 * reduction. solve(assumptions) reports either sat (model available) or
 * unsat together with a core: a subset of the assumptions whose conjunction
 * is inconsistent with the clauses (empty when the clauses alone are
 * inconsistent). Everything is deterministic; an optional wall-clock
 * deadline aborts long searches by throwing TimeoutError.
 */
class SatSolver {
 public:
  enum class Result { sat, unsat };

  struct Stats {
    std::uint64_t solves = 0;
    std::uint64_t conflicts = 0;
    std::uint64_t decisions = 0;
    std::uint64_t propagations = 0;
    std::uint64_t restarts = 0;
  };

  SatSolver() { watches_.resize(2); }

  int num_vars() const { return nvars_; }

  int new_var() {
    ++nvars_;
    watches_.emplace_back();
    watches_.emplace_back();
    assign_.push_back(-1);
    level_.push_back(0);
    reason_.push_back(-1);
    activity_.push_back(0.0);
    saved_phase_.push_back(0);
    user_pol_.push_back(-1);
    seen_.push_back(0);
    heap_pos_.push_back(-1);
    heap_insert(nvars_);
    return nvars_;
  }

  void ensure_vars(int v) {
    while (nvars_ < v) new_var();
  }

  /** Loads every clause (and the variable pool) of a formula. */
  void load(const Cnf& f) {
    ensure_vars(f.num_vars());
    for (const auto& c : f.clauses()) add_clause(c);
  }

  /** Adds a clause; the solver becomes permanently unsat if it closes a level-0 conflict. */
  void add_clause(std::vector<Lit> lits) {
    for (const Lit& l : lits) ensure_vars(l.var());
    if (!ok_) return;
    cancel_until(0);
    // Level-0 simplification: drop false literals, drop the clause if satisfied.
    std::sort(lits.begin(), lits.end());
    std::vector<Lit> c;
    Lit prev;
    for (const Lit& l : lits) {
      if (value(l) == 1 || l == ~prev) return;  // satisfied or tautological
      if (value(l) < 0 && l != prev) c.push_back(l);
      prev = l;
    }
    if (c.empty()) {
      ok_ = false;
      return;
    }
    if (c.size() == 1) {
      unchecked_enqueue(c[0], -1);
      if (propagate() != -1) ok_ = false;
      return;
    }
    attach_new(std::move(c), /*learnt=*/false);
  }
  void add_clause(std::initializer_list<Lit> lits) { add_clause(std::vector<Lit>(lits)); }

  void set_polarity(int v, bool pol) { user_pol_[v - 1] = pol ? 1 : 0; }
  void clear_polarity(int v) { user_pol_[v - 1] = -1; }

  void set_deadline(std::optional<std::chrono::steady_clock::time_point> d) { deadline_ = d; }

  Result solve(const std::vector<Lit>& assumptions = {}) {
    ++stats_.solves;
    core_.clear();
    model_.clear();
    assumptions_ = assumptions;
    for (const Lit& a : assumptions_) ensure_vars(a.var());
    if (!ok_) return Result::unsat;
    cancel_until(0);
    if (propagate() != -1) {
      ok_ = false;
      return Result::unsat;
    }
    int curr_restarts = 0;
    while (true) {
      check_deadline();
      std::uint64_t budget = luby(curr_restarts) * restart_first_;
      int st = search(budget);
      if (st == 1) return Result::sat;
      if (st == 0) return Result::unsat;
      ++curr_restarts;
      ++stats_.restarts;
    }
  }

  /** Truth value of a literal in the last sat model. */
  bool model_value(Lit l) const {
    bool v = model_[l.var() - 1] != 0;
    return l.sign() ? !v : v;
  }

  /** Subset of the last solve's assumptions that is jointly unsatisfiable. */
  const std::vector<Lit>& core() const { return core_; }

  const Stats& stats() const { return stats_; }
  bool ok() const { return ok_; }

 private:
  struct Clause {
    std::vector<Lit> lits;
    double act = 0.0;
    bool learnt = false;
  };
  struct Watch {
    int cref;
    Lit blocker;
  };

  // --- state -------------------------------------------------------------
  int nvars_ = 0;
  bool ok_ = true;
  std::vector<Clause> clauses_;
  std::vector<int> free_slots_;
  std::vector<int> learnt_refs_;
  std::vector<std::vector<Watch>> watches_;  // indexed by Lit.code
  std::vector<std::int8_t> assign_;          // per var: -1 undef, 0 false, 1 true
  std::vector<int> level_;
  std::vector<int> reason_;  // clause ref or -1
  std::vector<Lit> trail_;
  std::vector<int> trail_lim_;
  std::size_t qhead_ = 0;
  std::vector<double> activity_;
  double var_inc_ = 1.0;
  double cla_inc_ = 1.0;
  std::vector<std::int8_t> saved_phase_;
  std::vector<std::int8_t> user_pol_;
  std::vector<std::uint8_t> seen_;
  std::vector<int> heap_;      // max-heap of vars by activity (ties: smaller var)
  std::vector<int> heap_pos_;  // var -> index in heap_ or -1
  std::vector<Lit> assumptions_;
  std::vector<Lit> core_;
  std::vector<std::int8_t> model_;
  std::optional<std::chrono::steady_clock::time_point> deadline_;
  Stats stats_;
  std::size_t reduce_cap_ = 4000;
  static constexpr double kVarDecay = 0.95;
  static constexpr double kClaDecay = 0.999;
  static constexpr std::uint64_t kRestartFirst = 100;
  std::uint64_t restart_first_ = kRestartFirst;

  // --- basics ------------------------------------------------------------
  int value(Lit l) const {
    std::int8_t a = assign_[l.var() - 1];
    if (a < 0) return -1;
    return a ^ static_cast<std::int8_t>(l.sign() ? 1 : 0);
  }
  int decision_level() const { return static_cast<int>(trail_lim_.size()); }
  void new_decision_level() { trail_lim_.push_back(static_cast<int>(trail_.size())); }

  void unchecked_enqueue(Lit p, int from) {
    assign_[p.var() - 1] = p.sign() ? 0 : 1;
    level_[p.var() - 1] = decision_level();
    reason_[p.var() - 1] = from;
    trail_.push_back(p);
  }

  void cancel_until(int lvl) {
    if (decision_level() <= lvl) return;
    for (int i = static_cast<int>(trail_.size()) - 1; i >= trail_lim_[lvl]; --i) {
      int v = trail_[i].var();
      saved_phase_[v - 1] = assign_[v - 1];
      assign_[v - 1] = -1;
      reason_[v - 1] = -1;
      heap_insert(v);
    }
    trail_.resize(trail_lim_[lvl]);
    trail_lim_.resize(lvl);
    qhead_ = trail_.size();
  }

  // --- clause attachment ---------------------------------------------------
  int attach_new(std::vector<Lit> lits, bool learnt) {
    int ref;
    if (!free_slots_.empty()) {
      ref = free_slots_.back();
      free_slots_.pop_back();
      clauses_[ref] = Clause{std::move(lits), 0.0, learnt};
    } else {
      ref = static_cast<int>(clauses_.size());
      clauses_.push_back(Clause{std::move(lits), 0.0, learnt});
    }
    const Clause& c = clauses_[ref];
    watches_[(~c.lits[0]).code].push_back({ref, c.lits[1]});
    watches_[(~c.lits[1]).code].push_back({ref, c.lits[0]});
    if (learnt) learnt_refs_.push_back(ref);
    return ref;
  }

  void detach(int ref) {
    const Clause& c = clauses_[ref];
    for (int k = 0; k < 2; ++k) {
      auto& ws = watches_[(~c.lits[k]).code];
      for (std::size_t i = 0; i < ws.size(); ++i) {
        if (ws[i].cref == ref) {
          ws[i] = ws.back();
          ws.pop_back();
          break;
        }
      }
    }
  }

  bool locked(int ref) const {
    const Clause& c = clauses_[ref];
    int v = c.lits[0].var();
    return assign_[v - 1] >= 0 && reason_[v - 1] == ref;
  }

  // --- propagation ---------------------------------------------------------
  int propagate() {
    int confl = -1;
    while (qhead_ < trail_.size()) {
      Lit p = trail_[qhead_++];
      ++stats_.propagations;
      auto& ws = watches_[p.code];
      std::size_t i = 0, j = 0;
      while (i < ws.size()) {
        Watch w = ws[i];
        if (value(w.blocker) == 1) {
          ws[j++] = ws[i++];
          continue;
        }
        Clause& c = clauses_[w.cref];
        Lit not_p = ~p;
        if (c.lits[0] == not_p) std::swap(c.lits[0], c.lits[1]);
        ++i;
        Lit first = c.lits[0];
        if (first != w.blocker && value(first) == 1) {
          ws[j++] = {w.cref, first};
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < c.lits.size(); ++k) {
          if (value(c.lits[k]) != 0) {
            std::swap(c.lits[1], c.lits[k]);
            watches_[(~c.lits[1]).code].push_back({w.cref, first});
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = {w.cref, first};
        if (value(first) == 0) {
          confl = w.cref;
          qhead_ = trail_.size();
          while (i < ws.size()) ws[j++] = ws[i++];
        } else {
          unchecked_enqueue(first, w.cref);
        }
      }
      ws.resize(j);
    }
    return confl;
  }

  // --- conflict analysis -----------------------------------------------------
  void bump_var(int v) {
    activity_[v - 1] += var_inc_;
    if (activity_[v - 1] > 1e100) {
      for (double& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    heap_update(v);
  }
  void bump_clause(Clause& c) {
    c.act += cla_inc_;
    if (c.act > 1e20) {
      for (int r : learnt_refs_) clauses_[r].act *= 1e-20;
      cla_inc_ *= 1e-20;
    }
  }

  void analyze(int confl, std::vector<Lit>& out_learnt, int& out_btlevel) {
    out_learnt.clear();
    out_learnt.push_back(Lit());  // slot for the asserting literal
    int path_c = 0;
    Lit p;
    int index = static_cast<int>(trail_.size());
    do {
      Clause& c = clauses_[confl];
      if (c.learnt) bump_clause(c);
      std::size_t start = p.valid() ? 1 : 0;
      for (std::size_t k = start; k < c.lits.size(); ++k) {
        Lit q = c.lits[k];
        int v = q.var();
        if (!seen_[v - 1] && level_[v - 1] > 0) {
          seen_[v - 1] = 1;
          bump_var(v);
          if (level_[v - 1] >= decision_level())
            ++path_c;
          else
            out_learnt.push_back(q);
        }
      }
      while (!seen_[trail_[--index].var() - 1]) {
      }
      p = trail_[index];
      confl = reason_[p.var() - 1];
      seen_[p.var() - 1] = 0;
      --path_c;
    } while (path_c > 0);
    out_learnt[0] = ~p;

    // Recursive minimization: drop literals implied by the rest of the clause.
    analyze_clear_.clear();
    for (std::size_t k = 1; k < out_learnt.size(); ++k) {
      seen_[out_learnt[k].var() - 1] = 1;
      analyze_clear_.push_back(out_learnt[k].var());
    }
    std::size_t keep = 1;
    for (std::size_t k = 1; k < out_learnt.size(); ++k) {
      int r = reason_[out_learnt[k].var() - 1];
      if (r == -1 || !lit_redundant(out_learnt[k])) out_learnt[keep++] = out_learnt[k];
    }
    out_learnt.resize(keep);
    for (int v : analyze_clear_) seen_[v - 1] = 0;
    seen_[out_learnt[0].var() - 1] = 0;

    if (out_learnt.size() == 1) {
      out_btlevel = 0;
    } else {
      std::size_t max_i = 1;
      for (std::size_t k = 2; k < out_learnt.size(); ++k)
        if (level_[out_learnt[k].var() - 1] > level_[out_learnt[max_i].var() - 1]) max_i = k;
      std::swap(out_learnt[1], out_learnt[max_i]);
      out_btlevel = level_[out_learnt[1].var() - 1];
    }
  }

  std::vector<int> analyze_clear_;
  std::vector<Lit> redundant_stack_;

  /** True iff the trail implies `l` from other marked literals (safe to drop). */
  bool lit_redundant(Lit l) {
    redundant_stack_.assign(1, l);
    std::size_t top = analyze_clear_.size();
    while (!redundant_stack_.empty()) {
      Lit q = redundant_stack_.back();
      redundant_stack_.pop_back();
      const Clause& c = clauses_[reason_[q.var() - 1]];
      for (std::size_t k = 1; k < c.lits.size(); ++k) {
        Lit r = c.lits[k];
        int v = r.var();
        if (seen_[v - 1] || level_[v - 1] == 0) continue;
        if (reason_[v - 1] == -1) {
          // Hit a decision that is not part of the clause: not redundant.
          for (std::size_t i = top; i < analyze_clear_.size(); ++i)
            seen_[analyze_clear_[i] - 1] = 0;
          analyze_clear_.resize(top);
          return false;
        }
        seen_[v - 1] = 1;
        analyze_clear_.push_back(v);
        redundant_stack_.push_back(r);
      }
    }
    return true;
  }

  /** Collects the assumptions responsible for forcing ~p; p itself joins the core. */
  void analyze_final(Lit p) {
    core_.clear();
    core_.push_back(p);
    if (decision_level() == 0) return;
    seen_[p.var() - 1] = 1;
    for (int i = static_cast<int>(trail_.size()) - 1; i >= trail_lim_[0]; --i) {
      int v = trail_[i].var();
      if (!seen_[v - 1]) continue;
      if (reason_[v - 1] == -1) {
        core_.push_back(trail_[i]);  // an assumption decision
      } else {
        const Clause& c = clauses_[reason_[v - 1]];
        for (std::size_t k = 1; k < c.lits.size(); ++k)
          if (level_[c.lits[k].var() - 1] > 0) seen_[c.lits[k].var() - 1] = 1;
      }
      seen_[v - 1] = 0;
    }
    seen_[p.var() - 1] = 0;
  }

  // --- learnt DB management ----------------------------------------------
  void reduce_db() {
    std::sort(learnt_refs_.begin(), learnt_refs_.end(), [&](int a, int b) {
      const Clause& ca = clauses_[a];
      const Clause& cb = clauses_[b];
      if (ca.act != cb.act) return ca.act < cb.act;  // weakest first
      return a < b;
    });
    std::size_t target = learnt_refs_.size() / 2;
    std::vector<int> keep;
    keep.reserve(learnt_refs_.size() - target);
    std::size_t removed = 0;
    for (int ref : learnt_refs_) {
      Clause& c = clauses_[ref];
      if (removed < target && c.lits.size() > 2 && !locked(ref)) {
        detach(ref);
        c.lits.clear();
        c.lits.shrink_to_fit();
        free_slots_.push_back(ref);
        ++removed;
      } else {
        keep.push_back(ref);
      }
    }
    learnt_refs_ = std::move(keep);
  }

  // --- search ----------------------------------------------------------------
  /** Returns 1 sat, 0 unsat (core_ set when assumption-driven), -1 restart. */
  int search(std::uint64_t conflict_budget) {
    std::uint64_t conflicts_here = 0;
    std::vector<Lit> learnt;
    while (true) {
      int confl = propagate();
      if (confl != -1) {
        ++stats_.conflicts;
        ++conflicts_here;
        if ((stats_.conflicts & 1023) == 0) check_deadline();
        if (decision_level() == 0) {
          ok_ = false;
          core_.clear();
          return 0;
        }
        int btlevel;
        analyze(confl, learnt, btlevel);
        cancel_until(btlevel);
        if (learnt.size() == 1) {
          unchecked_enqueue(learnt[0], -1);
        } else {
          int ref = attach_new(learnt, /*learnt=*/true);
          bump_clause(clauses_[ref]);
          unchecked_enqueue(learnt[0], ref);
        }
        var_inc_ /= kVarDecay;
        cla_inc_ /= kClaDecay;
        continue;
      }
      if (conflicts_here >= conflict_budget) {
        cancel_until(0);
        return -1;
      }
      if (learnt_refs_.size() >= reduce_cap_) {
        reduce_db();
        reduce_cap_ += 1000;
      }
      // Establish pending assumptions, one decision level each.
      Lit next;
      while (decision_level() < static_cast<int>(assumptions_.size())) {
        Lit a = assumptions_[decision_level()];
        if (value(a) == 1) {
          new_decision_level();
        } else if (value(a) == 0) {
          analyze_final(a);
          return 0;
        } else {
          next = a;
          break;
        }
      }
      if (!next.valid()) {
        next = pick_branch_lit();
        if (!next.valid()) {
          extract_model();
          return 1;
        }
        ++stats_.decisions;
      }
      new_decision_level();
      unchecked_enqueue(next, -1);
    }
  }

  Lit pick_branch_lit() {
    while (!heap_.empty()) {
      int v = heap_[0];
      heap_pop_root();
      if (assign_[v - 1] < 0) {
        bool pol = user_pol_[v - 1] >= 0 ? user_pol_[v - 1] == 1 : saved_phase_[v - 1] == 1;
        return lit(v, !pol);
      }
    }
    return Lit();
  }

  void extract_model() {
    model_.assign(nvars_, 0);
    for (int v = 1; v <= nvars_; ++v) model_[v - 1] = assign_[v - 1] == 1 ? 1 : 0;
  }

  void check_deadline() const {
    if (deadline_ && std::chrono::steady_clock::now() > *deadline_)
      throw TimeoutError("solver wall-clock limit exceeded");
  }

  static std::uint64_t luby(int i) {
    // Luby sequence 1 1 2 1 1 2 4 ... (factor applied by the caller).
    int k = 1;
    while ((1 << (k + 1)) - 1 <= i + 1) ++k;
    while ((1 << k) - 1 != i + 1) {
      i = i - (1 << k) + 1;
      k = 1;
      while ((1 << (k + 1)) - 1 <= i + 1) ++k;
    }
    return 1ull << (k - 1);
  }

  // --- order heap (max activity, ties by smaller index) ---------------------
  bool heap_less(int a, int b) const {
    if (activity_[a - 1] != activity_[b - 1]) return activity_[a - 1] > activity_[b - 1];
    return a < b;
  }
  void heap_insert(int v) {
    if (heap_pos_[v - 1] >= 0) return;
    heap_pos_[v - 1] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    heap_up(heap_pos_[v - 1]);
  }
  void heap_update(int v) {
    if (heap_pos_[v - 1] >= 0) heap_up(heap_pos_[v - 1]);
  }
  void heap_up(int i) {
    int v = heap_[i];
    while (i > 0) {
      int parent = (i - 1) >> 1;
      if (!heap_less(v, heap_[parent])) break;
      heap_[i] = heap_[parent];
      heap_pos_[heap_[i] - 1] = i;
      i = parent;
    }
    heap_[i] = v;
    heap_pos_[v - 1] = i;
  }
  void heap_pop_root() {
    int last = heap_.back();
    heap_pos_[heap_[0] - 1] = -1;
    heap_.pop_back();
    if (heap_.empty()) return;
    heap_[0] = last;
    std::size_t i = 0;
    while (true) {
      std::size_t l = 2 * i + 1, r = 2 * i + 2, best = i;
      if (l < heap_.size() && heap_less(heap_[l], heap_[best])) best = l;
      if (r < heap_.size() && heap_less(heap_[r], heap_[best])) best = r;
      if (best == i) break;
      std::swap(heap_[i], heap_[best]);
      heap_pos_[heap_[i] - 1] = static_cast<int>(i);
      heap_pos_[heap_[best] - 1] = static_cast<int>(best);
      i = best;
    }
    heap_pos_[heap_[i] - 1] = static_cast<int>(i);
  }
};

}  // namespace texp

#endif  // TEXP_SAT_SOLVER_HPP
