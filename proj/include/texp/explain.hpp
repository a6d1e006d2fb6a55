#ifndef TEXP_EXPLAIN_HPP
#define TEXP_EXPLAIN_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "texp/discretize.hpp"
#include "texp/encode.hpp"
#include "texp/errors.hpp"
#include "texp/maxsat.hpp"
#include "texp/model.hpp"
#include "texp/reductions.hpp"
#include "texp/sat_solver.hpp"

namespace texp {

enum class XpKind { axp, cxp };

/**
 * One explanation of a prediction.
 *
 * axp: fixing `features` to the instance's values forces the prediction;
 *      no proper subset does (a minimal sufficient reason).
 * cxp: freeing `features` admits a differently classified point while all
 *      other features keep the instance's values; no proper subset does.
 *      `witness` is such a point.
 */
struct Explanation {
  XpKind kind = XpKind::axp;
  std::vector<int> features;  // ascending feature indexes
  std::optional<Instance> witness;

  bool operator==(const Explanation& o) const {
    return kind == o.kind && features == o.features;
  }
};

/** How entailment queries are answered. */
enum class QueryMode {
  sat_votes,     // majority-vote forest: one satisfiability call per query
  weighted_gap,  // additive form: per-opponent score-gap optimization
};

inline QueryMode default_mode(Variant v) {
  return v == Variant::rfmv ? QueryMode::sat_votes : QueryMode::weighted_gap;
}

/**
 * Strictness of the "opponent score overtakes the predicted class" test.
 * The default follows the argmax tie-break (lower class index wins): a
 * lower-indexed opponent needs gap >= 0, a higher-indexed one needs > 0.
 * The uniform overrides exist as diagnostic knobs and can misjudge ties.
 */
enum class GapStrictness { by_class_index, nonstrict, strict };

struct XpOptions {
  std::optional<QueryMode> mode;  // defaults from the model variant
  AttackVariant attack = AttackVariant::pairwise;
  GapStrictness strictness = GapStrictness::by_class_index;
  bool stratification = true;
  bool core_reuse = true;
  bool early_termination = true;
  bool dynamic_order = true;  // reorder opponents by recent success
  double order_decay = 0.95;  // opponent-activity decay factor
  int order_period = 32;      // decay applied every this many wins
};

struct SessionStats {
  long long entails_calls = 0;
  long long sat_solves = 0;
  long long maxsat_checks = 0;
};

/**
 * Deterministic dynamic ordering of opponent classes: classes that recently
 * produced counterexamples are tried first; activities decay periodically so
 * stale preferences fade. Ties break on the lower id.
 */
class ClassOrderHeap {
 public:
  ClassOrderHeap() = default;
  ClassOrderHeap(int n, double decay, int period)
      : act_(static_cast<std::size_t>(n), 0.0), decay_(decay), period_(period < 1 ? 1 : period) {}

  void bump(int id) {
    act_[static_cast<std::size_t>(id)] += 1.0;
    if (++bumps_ % period_ == 0)
      for (double& a : act_) a *= decay_;
  }

  std::vector<int> order() const {
    std::vector<int> ids(act_.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    std::stable_sort(ids.begin(), ids.end(),
                     [&](int a, int b) { return act_[static_cast<std::size_t>(a)] >
                                                 act_[static_cast<std::size_t>(b)]; });
    return ids;
  }

 private:
  std::vector<double> act_;
  double decay_ = 0.95;
  int period_ = 32;
  long long bumps_ = 0;
};

/**
 * Explanation queries for one (model, instance) pair.
 *
 * The session discretizes the feature space, encodes the model once, and
 * answers entailment queries ("does fixing this feature subset force the
 * prediction?") either with a single satisfiability call over a vote-counting
 * attack encoding (majority-vote forests) or with one score-gap optimization
 * per opponent class (any variant, after conversion to additive form).
 * All query answers are exact over the model's value grid, which partitions
 * the continuous input space into regions of constant model behavior.
 */
class XpSession {
 public:
  XpSession(const Ensemble& e, const Instance& v, XpOptions opt = {})
      : v_(v), opt_(std::move(opt)) {
    validate_instance(e, v_);
    mode_ = opt_.mode.value_or(default_mode(e.variant));
    if (mode_ == QueryMode::sat_votes && e.variant != Variant::rfmv)
      throw UsageError("vote-based queries require a majority-vote forest");
    work_ = mode_ == QueryMode::sat_votes ? e : to_unified(e);
    imap_ = build_interval_map(work_);
    predicted_ = predict(work_, v_);
    vcell_ = locate(imap_, v_);

    dom_.emplace(cnf_, work_, imap_);
    if (mode_ == QueryMode::sat_votes) {
      VoteEncoding votes(*dom_);
      add_overtake_block(*dom_, votes, predicted_, opt_.attack);
      solver_.emplace();
      solver_->load(cnf_);
    } else {
      PathAtomEncoding atoms(*dom_);
      const int K = work_.num_classes();
      for (int c = 0; c < K; ++c) {
        if (c == predicted_) continue;
        opponents_.push_back(c);
        objectives_.push_back(score_gap_objective(atoms.atoms(), predicted_, c));
        Threshold thr = overtake_threshold(predicted_, c);
        if (opt_.strictness == GapStrictness::nonstrict) thr.strict = false;
        if (opt_.strictness == GapStrictness::strict) thr.strict = true;
        thresholds_.push_back(thr);
        Wcnf w;
        w.hard = cnf_;
        w.softs = objectives_.back().softs;
        w.offset = objectives_.back().offset;
        engines_.push_back(MaxSatEngine(w));
        apply_toggles(engines_.back());
      }
      heap_ = ClassOrderHeap(static_cast<int>(opponents_.size()), opt_.order_decay,
                             opt_.order_period);
    }

    asms_ = instance_assumptions(*dom_, v_);
    pos_.assign(work_.features.size(), -1);
    for (const InstanceAssumption& ia : asms_) {
      pos_[static_cast<std::size_t>(ia.feature)] = static_cast<int>(candidates_.size());
      candidates_.push_back(ia.feature);
      feat_of_lit_.emplace(ia.lit.code, ia.feature);
    }
  }

  XpSession(const XpSession&) = delete;
  XpSession& operator=(const XpSession&) = delete;

  int predicted() const { return predicted_; }
  QueryMode mode() const { return mode_; }
  const Ensemble& query_model() const { return work_; }
  const IntervalMap& imap() const { return imap_; }
  const Instance& instance() const { return v_; }
  /** Features any explanation can mention (more than one grid interval). */
  const std::vector<int>& candidates() const { return candidates_; }
  const SessionStats& stats() const { return stats_; }

  void set_deadline(std::optional<std::chrono::steady_clock::time_point> d) {
    deadline_ = d;
    if (solver_) solver_->set_deadline(d);
    for (MaxSatEngine& e : engines_) e.set_deadline(d);
  }

  /**
   * True when every grid cell that agrees with the instance on `fixed`
   * receives the instance's prediction. Features outside candidates() are
   * ignored (they have a single interval and cannot vary).
   */
  bool entails(const std::vector<int>& fixed) {
    ++stats_.entails_calls;
    std::vector<char> in(pos_.size(), 0);
    for (int f : fixed) in[static_cast<std::size_t>(f)] = 1;
    std::vector<Lit> asml;
    for (const InstanceAssumption& ia : asms_)
      if (in[static_cast<std::size_t>(ia.feature)]) asml.push_back(ia.lit);
    return entails_lits(asml);
  }

  /**
   * Minimal sufficient reason, found by deletion from the full candidate set
   * in ascending feature order; unsatisfiable-subset information from each
   * successful deletion prunes the remaining candidates at once.
   */
  Explanation find_axp() {
    if (!entails(candidates_))
      throw std::logic_error("fixing every feature must force the prediction");
    return Explanation{XpKind::axp, shrink_from_support(), std::nullopt};
  }

  /**
   * Minimal counterexample reason (deletion in ascending feature order), or
   * nothing when the prediction is constant over the whole grid.
   */
  std::optional<Explanation> find_cxp() {
    if (entails({})) return std::nullopt;
    std::vector<char> freed(pos_.size(), 0);
    for (int f : candidates_) freed[static_cast<std::size_t>(f)] = 1;
    for (int f : candidates_) {
      freed[static_cast<std::size_t>(f)] = 0;
      if (entails(complement(freed))) freed[static_cast<std::size_t>(f)] = 1;
    }
    return Explanation{XpKind::cxp, members(freed), make_witness(last_cell_)};
  }

  struct EnumerateOptions {
    long long limit = -1;  // < 0: exhaust the explanation space
    bool axps = true;
    bool cxps = true;
  };

  /**
   * Explanations in discovery order. A seed solver proposes unexplored
   * feature subsets; entailing seeds shrink to minimal sufficient reasons,
   * failing seeds grow to maximal non-entailing sets whose complements are
   * minimal counterexample reasons. Blocking clauses remove the found set's
   * supersets (respectively the grown set's subsets), so an exhausted run
   * returns every explanation of both kinds exactly once.
   */
  std::vector<Explanation> enumerate() { return enumerate(EnumerateOptions{}); }

  std::vector<Explanation> enumerate(const EnumerateOptions& eo) {
    std::vector<Explanation> out;
    SatSolver map;
    const int m = static_cast<int>(candidates_.size());
    map.ensure_vars(m);
    map.set_deadline(deadline_);
    for (int i = 1; i <= m; ++i) map.set_polarity(i, true);  // bias toward large seeds
    const auto sel = [](int i) { return lit(i + 1); };
    while (eo.limit < 0 || static_cast<long long>(out.size()) < eo.limit) {
      if (map.solve() == SatSolver::Result::unsat) break;
      std::vector<int> seed;
      std::vector<char> smask(pos_.size(), 0);
      for (int i = 0; i < m; ++i)
        if (map.model_value(sel(i))) {
          seed.push_back(candidates_[static_cast<std::size_t>(i)]);
          smask[static_cast<std::size_t>(seed.back())] = 1;
        }
      if (entails(seed)) {
        std::vector<int> a = shrink_from_support();
        std::vector<Lit> block;
        for (int f : a) block.push_back(~sel(pos_[static_cast<std::size_t>(f)]));
        map.add_clause(std::move(block));
        if (eo.axps) out.push_back(Explanation{XpKind::axp, std::move(a), std::nullopt});
      } else {
        std::vector<char> g = grow(std::move(smask));
        std::vector<Lit> block;
        std::vector<int> y;
        for (int i = 0; i < m; ++i)
          if (!g[static_cast<std::size_t>(candidates_[static_cast<std::size_t>(i)])]) {
            block.push_back(sel(i));
            y.push_back(candidates_[static_cast<std::size_t>(i)]);
          }
        map.add_clause(std::move(block));
        if (eo.cxps)
          out.push_back(Explanation{XpKind::cxp, std::move(y), make_witness(last_cell_)});
      }
    }
    return out;
  }

  /**
   * Globally smallest sufficient reason. Candidate sets are minimum hitting
   * sets of the counterexample reasons found so far (computed by the same
   * optimization engine over unit-weight selectors); the first candidate that
   * forces the prediction is a smallest — and therefore minimal — reason.
   */
  Explanation smallest_axp() {
    const int m = static_cast<int>(candidates_.size());
    Wcnf w;
    w.hard.ensure_var(m);
    for (int i = 1; i <= m; ++i) w.softs.push_back({lit(i, true), Rat(1)});
    MaxSatEngine hs(w);
    apply_toggles(hs);
    while (true) {
      ++stats_.maxsat_checks;
      OptResult r = hs.maximize();
      std::vector<int> h;
      std::vector<char> hmask(pos_.size(), 0);
      for (int i = 0; i < m; ++i)
        if (r.model[static_cast<std::size_t>(i) + 1]) {
          h.push_back(candidates_[static_cast<std::size_t>(i)]);
          hmask[static_cast<std::size_t>(h.back())] = 1;
        }
      if (entails(h)) return Explanation{XpKind::axp, std::move(h), std::nullopt};
      std::vector<char> g = grow(std::move(hmask));
      std::vector<Lit> clause;  // future candidates must hit the new counterexample set
      for (int i = 0; i < m; ++i)
        if (!g[static_cast<std::size_t>(candidates_[static_cast<std::size_t>(i)])])
          clause.push_back(lit(i + 1));
      hs.add_hard(std::move(clause));
    }
  }

  /**
   * Globally smallest counterexample reason, or nothing when the prediction
   * is constant over the grid. Relaxation selectors mark freed features;
   * vote-based sessions minimize the selector count directly, score-based
   * sessions scan an at-most bound upward per opponent class (ascending,
   * later classes capped by the best size found). With jobs > 1 the
   * per-opponent scans run on separate engine instances in parallel; the
   * result is identical to the sequential scan.
   */
  std::optional<Explanation> smallest_cxp(int jobs = 1) {
    if (mode_ == QueryMode::sat_votes) return smallest_cxp_votes();
    if (candidates_.empty()) return std::nullopt;
    if (jobs > 1 && opponents_.size() > 1) return smallest_cxp_parallel(jobs);
    return smallest_cxp_sequential();
  }

 private:
  void apply_toggles(MaxSatEngine& e) const {
    e.set_use_stratification(opt_.stratification);
    e.set_use_core_reuse(opt_.core_reuse);
    e.set_use_early_termination(opt_.early_termination);
    e.set_deadline(deadline_);
  }

  /** Entailment for an assumption-literal subset; updates support / witness. */
  bool entails_lits(const std::vector<Lit>& asml) {
    if (mode_ == QueryMode::sat_votes) {
      ++stats_.sat_solves;
      if (solver_->solve(asml) == SatSolver::Result::unsat) {
        support_from_lits(solver_->core());
        return true;
      }
      last_cell_ = decode_cell([&](Lit l) { return solver_->model_value(l); });
      return false;
    }
    std::vector<char> resp(pos_.size(), 0);
    std::vector<int> order;
    if (opt_.dynamic_order) {
      order = heap_.order();
    } else {
      order.resize(opponents_.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    }
    for (int oi : order) {
      ++stats_.maxsat_checks;
      MaxSatEngine& eng = engines_[static_cast<std::size_t>(oi)];
      OptResult r = eng.check(asml, thresholds_[static_cast<std::size_t>(oi)]);
      if (r.meets) {
        heap_.bump(oi);
        last_cell_ = decode_cell([&](Lit l) {
          const bool v = r.model[static_cast<std::size_t>(l.var())] != 0;
          return l.sign() ? !v : v;
        });
        return false;
      }
      for (const Lit& a : eng.last_responsible())
        resp[static_cast<std::size_t>(feat_of_lit_.at(a.code))] = 1;
    }
    last_support_ = members(resp);
    return true;
  }

  void support_from_lits(const std::vector<Lit>& lits) {
    std::vector<char> resp(pos_.size(), 0);
    for (const Lit& l : lits) resp[static_cast<std::size_t>(feat_of_lit_.at(l.code))] = 1;
    last_support_ = members(resp);
  }

  /**
   * Deletion pass over the support of the last successful entailment check:
   * tries dropping each remaining feature in ascending order and, whenever
   * entailment survives, restarts from the (possibly much smaller) new
   * support set.
   */
  std::vector<int> shrink_from_support() {
    std::vector<char> in(pos_.size(), 0);
    for (int f : last_support_) in[static_cast<std::size_t>(f)] = 1;
    for (int f : candidates_) {
      if (!in[static_cast<std::size_t>(f)]) continue;
      in[static_cast<std::size_t>(f)] = 0;
      if (entails(members(in))) {
        in.assign(pos_.size(), 0);
        for (int g : last_support_) in[static_cast<std::size_t>(g)] = 1;
      } else {
        in[static_cast<std::size_t>(f)] = 1;
      }
    }
    return members(in);
  }

  /** Grows a non-entailing fixed set to a maximal one (ascending order). */
  std::vector<char> grow(std::vector<char> fixed) {
    for (int f : candidates_) {
      if (fixed[static_cast<std::size_t>(f)]) continue;
      fixed[static_cast<std::size_t>(f)] = 1;
      if (entails(members(fixed))) fixed[static_cast<std::size_t>(f)] = 0;
    }
    return fixed;
  }

  std::optional<Explanation> smallest_cxp_votes() {
    Wcnf w;
    w.hard = cnf_;
    std::vector<Lit> dl;  // selector: feature freed from the instance's interval
    for (const InstanceAssumption& ia : asms_) {
      Lit d = lit(w.hard.new_var());
      w.hard.add({d, ia.lit});
      w.softs.push_back({~d, Rat(1)});
      dl.push_back(d);
    }
    MaxSatEngine eng(w);
    apply_toggles(eng);
    ++stats_.maxsat_checks;
    OptResult r = eng.maximize();
    if (!r.feasible()) return std::nullopt;
    std::vector<int> y;
    for (std::size_t i = 0; i < dl.size(); ++i)
      if (r.model[static_cast<std::size_t>(dl[i].var())]) y.push_back(asms_[i].feature);
    std::vector<int> cell = decode_cell([&](Lit l) {
      const bool v = r.model[static_cast<std::size_t>(l.var())] != 0;
      return l.sign() ? !v : v;
    });
    return Explanation{XpKind::cxp, std::move(y), make_witness(cell)};
  }

  struct OppCxp {
    long long size = -1;  // -1: this opponent admits no counterexample
    std::vector<int> features;
    std::vector<int> cell;
  };

  /**
   * Smallest counterexample reaching one opponent class: scan the at-most
   * bound s upward from 0; the first satisfiable-with-threshold bound is the
   * exact minimum for this opponent. `cap` skips sizes that cannot improve
   * on an already known solution. Engine calls are tallied into `stats`.
   */
  OppCxp smallest_cxp_for(int oi, long long cap, SessionStats& stats) const {
    Wcnf w;
    w.hard = cnf_;
    std::vector<Lit> dl;
    for (const InstanceAssumption& ia : asms_) {
      Lit d = lit(w.hard.new_var());
      w.hard.add({d, ia.lit});
      dl.push_back(d);
    }
    const std::vector<Lit> outs = sort_unary(w.hard, dl).outputs;
    w.softs = objectives_[static_cast<std::size_t>(oi)].softs;
    w.offset = objectives_[static_cast<std::size_t>(oi)].offset;
    MaxSatEngine eng(w);
    apply_toggles(eng);
    const long long m = static_cast<long long>(dl.size());
    OppCxp best;
    for (long long s = 0; s <= cap; ++s) {
      std::vector<Lit> asml;
      if (s < m) asml.push_back(~outs[static_cast<std::size_t>(s)]);
      ++stats.maxsat_checks;
      OptResult r = eng.check(asml, thresholds_[static_cast<std::size_t>(oi)]);
      if (!r.meets) continue;
      best.size = s;
      for (std::size_t i = 0; i < dl.size(); ++i)
        if (r.model[static_cast<std::size_t>(dl[i].var())]) best.features.push_back(asms_[i].feature);
      best.cell = decode_cell([&](Lit l) {
        const bool v = r.model[static_cast<std::size_t>(l.var())] != 0;
        return l.sign() ? !v : v;
      });
      break;
    }
    return best;
  }

  std::optional<Explanation> smallest_cxp_sequential() {
    const long long m = static_cast<long long>(candidates_.size());
    OppCxp best;
    for (std::size_t oi = 0; oi < opponents_.size(); ++oi) {
      const long long cap = best.size < 0 ? m : best.size - 1;
      OppCxp r = smallest_cxp_for(static_cast<int>(oi), cap, stats_);
      if (r.size >= 0) best = std::move(r);
    }
    if (best.size < 0) return std::nullopt;
    return Explanation{XpKind::cxp, std::move(best.features), make_witness(best.cell)};
  }

  std::optional<Explanation> smallest_cxp_parallel(int jobs) {
    const long long m = static_cast<long long>(candidates_.size());
    const std::size_t n = opponents_.size();
    std::vector<OppCxp> results(n);
    std::vector<SessionStats> stat(n);
    std::vector<std::exception_ptr> errs(n);
    std::vector<std::thread> pool;
    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (std::size_t t = 0; t < width; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t oi = t; oi < n; oi += width) {
          try {
            results[oi] = smallest_cxp_for(static_cast<int>(oi), m, stat[oi]);
          } catch (...) {
            errs[oi] = std::current_exception();
          }
        }
      });
    for (std::thread& th : pool) th.join();
    for (std::size_t oi = 0; oi < n; ++oi) {
      stats_.maxsat_checks += stat[oi].maxsat_checks;
      if (errs[oi]) std::rethrow_exception(errs[oi]);
    }
    OppCxp best;  // lowest class index wins ties, matching the sequential scan
    for (std::size_t oi = 0; oi < n; ++oi)
      if (results[oi].size >= 0 && (best.size < 0 || results[oi].size < best.size))
        best = std::move(results[oi]);
    if (best.size < 0) return std::nullopt;
    return Explanation{XpKind::cxp, std::move(best.features), make_witness(best.cell)};
  }

  template <class ModelFn>
  std::vector<int> decode_cell(ModelFn&& val) const {
    const auto& feats = dom_->features();
    std::vector<int> cell(feats.size(), 0);
    for (std::size_t f = 0; f < feats.size(); ++f) {
      if (!dom_->multi(static_cast<int>(f))) continue;
      const auto& ivs = feats[f].intervals;
      for (std::size_t k = 0; k < ivs.size(); ++k)
        if (val(ivs[k])) {
          cell[f] = static_cast<int>(k);
          break;
        }
    }
    return cell;
  }

  /** Instance at `cell`: the query instance's exact values where the cell
   * agrees with it, interval representatives where it differs. */
  Instance make_witness(const std::vector<int>& cell) const {
    Instance w = v_;
    for (std::size_t f = 0; f < cell.size(); ++f)
      if (cell[f] != vcell_[f])
        w[f] = representative_value(work_.features[f], imap_.feats[f], cell[f]);
    return w;
  }

  std::vector<int> members(const std::vector<char>& mask) const {
    std::vector<int> out;
    for (std::size_t f = 0; f < mask.size(); ++f)
      if (mask[f]) out.push_back(static_cast<int>(f));
    return out;
  }

  std::vector<int> complement(const std::vector<char>& freed) const {
    std::vector<int> out;
    for (int f : candidates_)
      if (!freed[static_cast<std::size_t>(f)]) out.push_back(f);
    return out;
  }

  Instance v_;
  XpOptions opt_;
  QueryMode mode_ = QueryMode::sat_votes;
  Ensemble work_;
  IntervalMap imap_;
  int predicted_ = 0;
  std::vector<int> vcell_;

  Cnf cnf_;
  std::optional<DomainEncoding> dom_;
  std::optional<SatSolver> solver_;          // vote-based sessions
  std::vector<int> opponents_;               // score-based sessions
  std::vector<Objective> objectives_;
  std::vector<Threshold> thresholds_;
  std::vector<MaxSatEngine> engines_;
  ClassOrderHeap heap_;

  std::vector<InstanceAssumption> asms_;
  std::vector<int> candidates_;
  std::vector<int> pos_;  // feature -> candidate index, -1 otherwise
  std::unordered_map<std::int32_t, int> feat_of_lit_;

  std::vector<int> last_support_;  // valid after a true entailment verdict
  std::vector<int> last_cell_;     // valid after a false entailment verdict
  std::optional<std::chrono::steady_clock::time_point> deadline_;
  SessionStats stats_;
};

}  // namespace texp

#endif  // TEXP_EXPLAIN_HPP
