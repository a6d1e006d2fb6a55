#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "support/test_util.hpp"
#include "texp/discretize.hpp"
#include "texp/encode.hpp"
#include "texp/maxsat.hpp"
#include "texp/model.hpp"
#include "texp/model_io.hpp"
#include "texp/oracle.hpp"
#include "texp/reductions.hpp"
#include "texp/sat_solver.hpp"

using namespace texp;
using texp_test::Rng;

namespace {

std::string data_path(const std::string& name) { return std::string(TEXP_DATA_DIR "/") + name; }

Instance real_instance(std::initializer_list<const char*> vals) {
  Instance x;
  for (const char* v : vals) x.emplace_back(Rat::from_decimal(v));
  return x;
}

bool lit_true(Lit l, std::uint64_t mask) {
  return (((mask >> (l.var() - 1)) & 1) != 0) != l.sign();
}

/** Counts satisfying assignments of a small formula, running `check` on each. */
template <class Fn>
std::uint64_t count_models(const Cnf& f, Fn&& check) {
  REQUIRE(f.num_vars() <= 20);
  std::uint64_t n = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << f.num_vars()); ++mask) {
    if (!texp_test::eval_cnf(f, mask)) continue;
    check(mask);
    ++n;
  }
  return n;
}

/** Entailment per fixed-feature mask, computed from the cached cell predictions. */
std::vector<char> entailment_table(const CellGrid& g, const Instance& v) {
  const std::vector<int> base = locate(g.map(), v);
  const int target = predict(g.model(), v);
  const int m = static_cast<int>(base.size());
  const std::vector<int>& preds = g.predictions();
  std::vector<char> ent(std::size_t(1) << m, 1);
  for (std::uint64_t id = 0; id < g.size(); ++id) {
    if (preds[id] == target) continue;
    std::vector<int> cell = g.cell_of(id);
    std::uint64_t agree = 0;
    for (int i = 0; i < m; ++i)
      if (cell[std::size_t(i)] == base[std::size_t(i)]) agree |= std::uint64_t(1) << i;
    // This cell refutes every mask whose fixed features all agree with it.
    for (std::uint64_t mask = agree;; mask = (mask - 1) & agree) {
      ent[mask] = 0;
      if (mask == 0) break;
    }
  }
  return ent;
}

/** Largest reachable score gap (opponent minus predicted) per fixed-feature mask. */
Rat best_gap(const CellGrid& g, const std::vector<int>& base, std::uint64_t mask, int pred,
             int opp) {
  std::vector<bool> fixed(base.size(), false);
  for (std::size_t i = 0; i < base.size(); ++i)
    if (mask >> i & 1) fixed[i] = true;
  std::optional<Rat> best;
  detail::for_each_cell_fixing(g.map(), base, fixed, [&](const std::vector<int>& cell) {
    std::vector<Rat> s = class_scores(g.model(), g.rep(cell));
    Rat gap = s[std::size_t(opp)] - s[std::size_t(pred)];
    if (!best || *best < gap) best = gap;
    return true;
  });
  return *best;
}

std::vector<Lit> subset_assumptions(const std::vector<InstanceAssumption>& all,
                                    std::uint64_t mask) {
  std::vector<Lit> out;
  for (const InstanceAssumption& a : all)
    if (mask >> a.feature & 1) out.push_back(a.lit);
  return out;
}

MaxSatEngine make_gap_engine(const Cnf& hard, const std::vector<LeafAtom>& atoms, int pred,
                             int opp) {
  Objective obj = score_gap_objective(atoms, pred, opp);
  Wcnf w;
  w.hard = hard;
  w.softs = obj.softs;
  w.offset = obj.offset;
  return MaxSatEngine(w);
}

}  // namespace

TEST_CASE("domain encoding has the frozen shape and exact projected models") {
  SECTION("majority-vote iris discretization") {
    Ensemble e = load_model_file(data_path("iris_rfmv.json"));
    IntervalMap im = build_interval_map(e);
    Cnf cnf;
    DomainEncoding dom(cnf, e, im);
    // Three single-split features share their threshold variable with both
    // interval literals; petal.width has 3 thresholds and 4 interval variables.
    CHECK(cnf.num_vars() == 10);
    CHECK(cnf.num_clauses() == 13);

    std::uint64_t cells = count_models(cnf, [&](std::uint64_t mask) {
      for (int f = 0; f < e.num_features(); ++f) {
        const FeatureIntervals& fi = im.feats[std::size_t(f)];
        int chosen = -1;
        for (int k = 0; k < fi.count; ++k) {
          if (lit_true(dom.interval_lit(f, k), mask)) {
            CHECK(chosen == -1);
            chosen = k;
          }
        }
        REQUIRE(chosen != -1);
        // The chosen interval must equal the number of failed below-tests.
        int below_fails = 0;
        for (Lit t : dom.features()[std::size_t(f)].thresholds)
          if (!lit_true(t, mask)) ++below_fails;
        CHECK(chosen == below_fails);
      }
    });
    CHECK(cells == 32);
  }

  SECTION("boosted iris discretization") {
    Ensemble e = load_model_file(data_path("iris_bt.json"));
    IntervalMap im = build_interval_map(e);
    Cnf cnf;
    DomainEncoding dom(cnf, e, im);
    // sepal.length is untested (no variables); petal.length has 4 thresholds
    // and 5 interval variables with the full chain/link/coverage clause set.
    CHECK(cnf.num_vars() == 11);
    CHECK(cnf.num_clauses() == 17);
    CHECK(dom.features()[0].thresholds.empty());
    CHECK(dom.features()[0].intervals.empty());
    CHECK(count_models(cnf, [](std::uint64_t) {}) == 20);
  }
}

TEST_CASE("single-split, binary, and categorical features encode compactly") {
  const char* text = R"({
    "variant": "rfmv", "classes": ["no", "yes"],
    "features": [
      {"name": "color", "kind": "categorical", "domain": ["red", "green", "blue"]},
      {"name": "flag", "kind": "binary"},
      {"name": "size", "kind": "real", "domain": [0, 10]}
    ],
    "trees": [
      {"feature": "size", "op": "<", "threshold": 5,
       "true": {"leaf": [1, 0]}, "false": {"leaf": [0, 1]}},
      {"feature": "flag", "op": "=1",
       "true": {"feature": "color", "op": "in", "set": ["red"],
                "true": {"leaf": [0, 1]}, "false": {"leaf": [1, 0]}},
       "false": {"leaf": [1, 0]}}
    ]})";
  Ensemble e = load_model_text(text);
  IntervalMap im = build_interval_map(e);
  Cnf cnf;
  DomainEncoding dom(cnf, e, im);
  // 3 one-hot category variables, 1 binary variable, 1 shared threshold variable.
  CHECK(cnf.num_vars() == 5);
  // Only the categorical exactly-one block emits clauses: 1 cover + 3 pairs.
  CHECK(cnf.num_clauses() == 4);
  CHECK(count_models(cnf, [](std::uint64_t) {}) == 3 * 2 * 2);
  // A membership test over one category is that category's own literal.
  const Node& cat_node = e.trees[1].nodes[1];
  REQUIRE(cat_node.cat_set == std::vector<int>{0});
  CHECK(dom.test_lit(cat_node) == dom.interval_lit(0, 0));
}

TEST_CASE("path atoms merge shared paths across trees and accumulate scores") {
  Ensemble e = load_model_file(data_path("iris_bt.json"));
  IntervalMap im = build_interval_map(e);
  Cnf cnf;
  DomainEncoding dom(cnf, e, im);
  PathAtomEncoding paths(dom);

  // 6 trees with 2+4+3+2+4+3 = 18 leaves collapse to 11 distinct paths.
  REQUIRE(paths.atoms().size() == 11);
  REQUIRE(paths.tree_atoms().size() == 6);
  CHECK(paths.tree_atoms()[0] == paths.tree_atoms()[3]);  // identical tree shapes
  CHECK(paths.tree_atoms()[2] == paths.tree_atoms()[5]);

  const auto& a = paths.atoms();
  CHECK(a[0].contrib == std::vector<Rat>{Rat::from_decimal("0.72284"), Rat(0), Rat(0)});
  CHECK(a[1].contrib == std::vector<Rat>{Rat::from_decimal("-0.41527"), Rat(0), Rat(0)});
  CHECK(a[4].contrib == std::vector<Rat>{Rat(0), Rat::from_decimal("-0.40355"), Rat(0)});
  CHECK(a[6].contrib == std::vector<Rat>{Rat(0), Rat(0), Rat::from_decimal("-0.41645")});
  CHECK(a[7].contrib == std::vector<Rat>{Rat(0), Rat(0), Rat::from_decimal("0.16249")});
  CHECK(a[8].contrib == std::vector<Rat>{Rat(0), Rat(0), Rat::from_decimal("0.72452")});
}

TEST_CASE("score-gap objective reproduces the frozen soft-clause set") {
  Ensemble e = load_model_file(data_path("iris_bt.json"));
  IntervalMap im = build_interval_map(e);
  Cnf cnf;
  DomainEncoding dom(cnf, e, im);
  PathAtomEncoding paths(dom);
  const auto& a = paths.atoms();

  Objective obj = score_gap_objective(a, 0, 2);
  REQUIRE(obj.softs.size() == 5);
  CHECK(obj.softs[0].lit == ~a[0].lit);
  CHECK(obj.softs[0].weight == Rat::from_decimal("0.72284"));
  CHECK(obj.softs[1].lit == a[1].lit);
  CHECK(obj.softs[1].weight == Rat::from_decimal("0.41527"));
  CHECK(obj.softs[2].lit == ~a[6].lit);
  CHECK(obj.softs[2].weight == Rat::from_decimal("0.41645"));
  CHECK(obj.softs[3].lit == a[7].lit);
  CHECK(obj.softs[3].weight == Rat::from_decimal("0.16249"));
  CHECK(obj.softs[4].lit == a[8].lit);
  CHECK(obj.softs[4].weight == Rat::from_decimal("0.72452"));
  CHECK(obj.offset == -Rat::from_decimal("1.13929"));

  // Fixing the whole instance pins the gap to its value at that point.
  const Instance v = real_instance({"5.1", "3.5", "1.4", "0.2"});
  MaxSatEngine eng = make_gap_engine(cnf, a, 0, 2);
  std::vector<Lit> asms;
  for (const InstanceAssumption& ia : instance_assumptions(dom, v)) asms.push_back(ia.lit);
  OptResult full = eng.maximize(asms);
  REQUIRE(full.status == OptStatus::optimum);
  CHECK(full.value == -Rat::from_decimal("1.13929"));

  // Freeing everything reaches the best gap over the whole space.
  OptResult free = eng.maximize({});
  REQUIRE(free.status == OptStatus::optimum);
  CellGrid g(e);
  CHECK(free.value == best_gap(g, locate(im, v), 0, 0, 2));
}

TEST_CASE("maximized score gap equals the exhaustive optimum") {
  Rng rng(0x6a9fULL);
  int checked = 0;
  for (int round = 0; round < 36; ++round) {
    Variant variant = round % 3 == 0   ? Variant::bt
                      : round % 3 == 1 ? Variant::rfwv
                                       : Variant::rfmv;
    Ensemble raw = texp_test::random_ensemble(rng, variant, 3, 4, 2, 3);
    Ensemble e = variant == Variant::bt     ? raw
                 : variant == Variant::rfwv ? reduce_rfwv_to_unified(raw)
                                            : reduce_rfmv_to_bt(raw);
    CellGrid g(e);
    Instance v = texp_test::random_instance(rng, e);
    const int pred = predict(e, v);
    const std::vector<int> base = locate(g.map(), v);

    Cnf cnf;
    DomainEncoding dom(cnf, e, g.map());
    PathAtomEncoding paths(dom);
    auto all_asms = instance_assumptions(dom, v);
    const std::uint64_t nmask = std::uint64_t(1) << e.num_features();
    for (int opp = 0; opp < e.num_classes(); ++opp) {
      if (opp == pred) continue;
      MaxSatEngine eng = make_gap_engine(cnf, paths.atoms(), pred, opp);
      for (std::uint64_t mask : {std::uint64_t(0), nmask - 1, rng.next() % nmask}) {
        OptResult r = eng.maximize(subset_assumptions(all_asms, mask));
        REQUIRE(r.status == OptStatus::optimum);
        CHECK(r.value == best_gap(g, base, mask, pred, opp));
        ++checked;
      }
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("score-gap entailment matches the subset oracle") {
  Ensemble bt = load_model_file(data_path("iris_bt.json"));
  Rng rng(0xe27cULL);
  int subsets_checked = 0;
  for (int round = 0; round < 64; ++round) {
    Ensemble e;
    if (round == 0) {
      e = bt;
    } else {
      Variant variant = round % 3 == 0   ? Variant::bt
                        : round % 3 == 1 ? Variant::rfwv
                                         : Variant::rfmv;
      Ensemble raw = texp_test::random_ensemble(rng, variant, 4, 4, 2, 3);
      e = variant == Variant::bt     ? raw
          : variant == Variant::rfwv ? reduce_rfwv_to_unified(raw)
                                     : reduce_rfmv_to_bt(raw);
    }
    CellGrid g(e);
    Instance v = round == 0 ? real_instance({"5.1", "3.5", "1.4", "0.2"})
                            : texp_test::random_instance(rng, e);
    const int pred = predict(e, v);
    std::vector<char> ent = entailment_table(g, v);

    Cnf cnf;
    DomainEncoding dom(cnf, e, g.map());
    PathAtomEncoding paths(dom);
    auto all_asms = instance_assumptions(dom, v);

    std::vector<MaxSatEngine> engines;
    std::vector<int> opponents;
    for (int opp = 0; opp < e.num_classes(); ++opp) {
      if (opp == pred) continue;
      engines.push_back(make_gap_engine(cnf, paths.atoms(), pred, opp));
      opponents.push_back(opp);
    }
    const std::uint64_t nmask = std::uint64_t(1) << e.num_features();
    for (std::uint64_t mask = 0; mask < nmask; ++mask) {
      std::vector<Lit> asms = subset_assumptions(all_asms, mask);
      bool entails = true;
      for (std::size_t i = 0; i < engines.size(); ++i) {
        OptResult r = engines[i].check(asms, overtake_threshold(pred, opponents[i]));
        REQUIRE(r.feasible());
        if (r.meets) {
          entails = false;
          break;
        }
      }
      CHECK(entails == (ent[mask] != 0));
      if (round < 6)  // keep the independent oracle authoritative for the table
        CHECK((ent[mask] != 0) == brute_entails(g, v, [&] {
                std::vector<int> subset;
                for (int i = 0; i < e.num_features(); ++i)
                  if (mask >> i & 1) subset.push_back(i);
                return subset;
              }()));
      ++subsets_checked;
    }
  }
  CHECK(subsets_checked >= 500);
}

TEST_CASE("instance assumptions name the located intervals") {
  Ensemble e = load_model_file(data_path("iris_rfmv.json"));
  IntervalMap im = build_interval_map(e);
  Cnf cnf;
  DomainEncoding dom(cnf, e, im);
  const Instance v = real_instance({"6.0", "3.5", "1.4", "0.2"});
  auto asms = instance_assumptions(dom, v);
  REQUIRE(asms.size() == 4);
  CHECK(asms[0].feature == 0);
  CHECK(asms[0].lit == dom.interval_lit(0, 1));
  CHECK(asms[1].feature == 1);
  CHECK(asms[1].lit == dom.interval_lit(1, 1));
  CHECK(asms[2].feature == 2);
  CHECK(asms[2].lit == dom.interval_lit(2, 0));
  CHECK(asms[3].feature == 3);
  CHECK(asms[3].lit == dom.interval_lit(3, 0));

  // Fixing every feature forces the predicted class's win in every model.
  VoteEncoding votes(dom);
  add_overtake_block(dom, votes, predict(e, v), AttackVariant::pairwise);
  SatSolver s;
  s.load(cnf);
  std::vector<Lit> all;
  for (const auto& a : asms) all.push_back(a.lit);
  CHECK(s.solve(all) == SatSolver::Result::unsat);
}

TEST_CASE("vote encoding emits the expected implication clauses") {
  Ensemble e = load_model_file(data_path("iris_rfmv.json"));
  IntervalMap im = build_interval_map(e);
  Cnf cnf;
  DomainEncoding dom(cnf, e, im);
  VoteEncoding votes(dom);

  // First tree: below both first-feature splits the tree votes the middle class.
  Lit t_sl = dom.features()[0].thresholds[0];
  Lit t_sw = dom.features()[1].thresholds[0];
  REQUIRE(votes.vote(0, 1).has_value());
  std::vector<Lit> expected{~t_sl, ~t_sw, *votes.vote(0, 1)};
  bool found = false;
  for (const auto& cl : cnf.clauses()) {
    std::vector<Lit> c = cl;
    std::sort(c.begin(), c.end());
    std::vector<Lit> want = expected;
    std::sort(want.begin(), want.end());
    if (c == want) found = true;
  }
  CHECK(found);

  // Every tree of this forest can produce every class.
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < 3; ++c) CHECK(votes.vote(t, c).has_value());
}

TEST_CASE("overtake blocks match the subset oracle for every variant") {
  Rng rng(0x5a77ULL);
  int models_done = 0, k2_done = 0, agree_checked = 0;
  for (int round = 0; round < 110; ++round) {
    Ensemble e = texp_test::random_ensemble(rng, Variant::rfmv, 4, 7, 2, 4);
    CellGrid g(e);
    Instance v = texp_test::random_instance(rng, e);
    const int pred = predict(e, v);
    std::vector<char> ent = entailment_table(g, v);
    const std::uint64_t nmask = std::uint64_t(1) << e.num_features();

    std::vector<AttackVariant> variants{AttackVariant::pairwise, AttackVariant::two_comparator};
    if (e.num_classes() == 2) {
      variants.push_back(AttackVariant::k2);
      ++k2_done;
    }
    for (AttackVariant variant : variants) {
      Cnf cnf;
      DomainEncoding dom(cnf, e, g.map());
      VoteEncoding votes(dom);
      add_overtake_block(dom, votes, pred, variant);
      SatSolver s;
      s.load(cnf);
      auto all_asms = instance_assumptions(dom, v);
      for (std::uint64_t mask = 0; mask < nmask; ++mask) {
        bool adversarial = s.solve(subset_assumptions(all_asms, mask)) == SatSolver::Result::sat;
        CHECK(adversarial == (ent[mask] == 0));
      }
    }

    // The weighted path through the per-class reduction must agree subset-by-subset.
    if (round % 4 == 0) {
      Ensemble reduced = reduce_rfmv_to_bt(e);
      Cnf cnf;
      DomainEncoding dom(cnf, reduced, g.map());
      PathAtomEncoding paths(dom);
      auto all_asms = instance_assumptions(dom, v);
      std::vector<MaxSatEngine> engines;
      std::vector<int> opponents;
      for (int opp = 0; opp < e.num_classes(); ++opp) {
        if (opp == pred) continue;
        engines.push_back(make_gap_engine(cnf, paths.atoms(), pred, opp));
        opponents.push_back(opp);
      }
      for (std::uint64_t mask = 0; mask < nmask; ++mask) {
        std::vector<Lit> asms = subset_assumptions(all_asms, mask);
        bool entails = true;
        for (std::size_t i = 0; i < engines.size() && entails; ++i)
          if (engines[i].check(asms, overtake_threshold(pred, opponents[i])).meets)
            entails = false;
        CHECK(entails == (ent[mask] != 0));
        ++agree_checked;
      }
    }
    ++models_done;
  }
  CHECK(models_done >= 100);
  CHECK(k2_done >= 10);
  CHECK(agree_checked >= 200);
}

TEST_CASE("binary overtake bounds are exact for odd forests") {
  const char* text = R"({
    "variant": "rfmv", "classes": ["zero", "one"],
    "features": [{"name": "x", "kind": "binary"}],
    "trees": [
      {"feature": "x", "op": "=1", "true": {"leaf": [0, 1]}, "false": {"leaf": [1, 0]}},
      {"leaf": [1, 0]},
      {"leaf": [0, 1]}
    ]})";
  Ensemble e = load_model_text(text);
  IntervalMap im = build_interval_map(e);

  for (int side = 0; side < 2; ++side) {
    Instance v{side};
    const int pred = predict(e, v);
    CHECK(pred == side);  // x=0 -> votes (2,1); x=1 -> votes (1,2)
    for (AttackVariant variant :
         {AttackVariant::pairwise, AttackVariant::two_comparator, AttackVariant::k2}) {
      Cnf cnf;
      DomainEncoding dom(cnf, e, im);
      VoteEncoding votes(dom);
      add_overtake_block(dom, votes, pred, variant);
      SatSolver s;
      s.load(cnf);
      // The instance's own cell can never be adversarial.
      auto asms = instance_assumptions(dom, v);
      REQUIRE(asms.size() == 1);
      CHECK(s.solve({asms[0].lit}) == SatSolver::Result::unsat);
      // The opposite cell flips the majority.
      CHECK(s.solve({}) == SatSolver::Result::sat);
    }
  }

}

TEST_CASE("a lower class can overtake through the above-side guaranteed winner") {
  // All trees vote b when x=1 and a when x=0; class c is never produced.
  const char* text = R"({
    "variant": "rfmv", "classes": ["a", "b", "c"],
    "features": [{"name": "x", "kind": "binary"}],
    "trees": [
      {"feature": "x", "op": "=1", "true": {"leaf": [0, 1, 0]}, "false": {"leaf": [1, 0, 0]}},
      {"feature": "x", "op": "=1", "true": {"leaf": [0, 1, 0]}, "false": {"leaf": [1, 0, 0]}},
      {"feature": "x", "op": "=1", "true": {"leaf": [0, 1, 0]}, "false": {"leaf": [1, 0, 0]}}
    ]})";
  Ensemble e = load_model_text(text);
  IntervalMap im = build_interval_map(e);
  Instance v{1};
  REQUIRE(predict(e, v) == 1);

  {
    Cnf cnf;
    DomainEncoding dom(cnf, e, im);
    VoteEncoding votes(dom);
    CHECK_THROWS_AS(add_overtake_block(dom, votes, 1, AttackVariant::k2), UsageError);
  }

  for (AttackVariant variant : {AttackVariant::pairwise, AttackVariant::two_comparator}) {
    Cnf cnf;
    DomainEncoding dom(cnf, e, im);
    VoteEncoding votes(dom);
    CHECK(!votes.vote(0, 2).has_value());  // class c is uninhabited
    add_overtake_block(dom, votes, 1, variant);
    SatSolver s;
    s.load(cnf);
    auto asms = instance_assumptions(dom, v);
    CHECK(s.solve({asms[0].lit}) == SatSolver::Result::unsat);
    CHECK(s.solve({}) == SatSolver::Result::sat);  // x=0 gives a all 3 votes
  }
}

TEST_CASE("pair encoding decides individual fairness with witnesses") {
  SECTION("single protected split is unfair; untested protected feature is fair") {
    const char* text = R"({
      "variant": "rfmv", "classes": ["n", "y"],
      "features": [
        {"name": "p", "kind": "real", "domain": [0, 1]},
        {"name": "q", "kind": "real", "domain": [0, 1]}
      ],
      "trees": [
        {"feature": "p", "op": "<", "threshold": 0.5,
         "true": {"leaf": [1, 0]}, "false": {"leaf": [0, 1]}}
      ]})";
    Ensemble e = load_model_text(text);
    IntervalMap im = build_interval_map(e);

    PairEncoding unfair(e, im);
    unfair.require_equal_outside({0});
    SatSolver s;
    s.load(unfair.cnf());
    REQUIRE(s.solve({}) == SatSolver::Result::sat);
    auto value = [&](Lit l) { return s.model_value(l); };
    std::vector<int> ca = unfair.decode_cell(0, value);
    std::vector<int> cb = unfair.decode_cell(1, value);
    CHECK(ca[0] != cb[0]);
    Instance xa = representative(e, im, ca), xb = representative(e, im, cb);
    CHECK(predict(e, xa) != predict(e, xb));

    PairEncoding fair(e, im);
    fair.require_equal_outside({1});  // protecting the untested feature
    SatSolver s2;
    s2.load(fair.cnf());
    CHECK(s2.solve({}) == SatSolver::Result::unsat);
  }

  SECTION("random forests agree with the exhaustive pair scan") {
    Rng rng(0xfa1cULL);
    int done = 0;
    while (done < 50) {
      Ensemble e = texp_test::random_ensemble(rng, Variant::rfmv, 4, 5, 2, 3);
      CellGrid g(e);
      std::vector<int> prot{static_cast<int>(rng.below(std::uint64_t(e.num_features())))};
      PairEncoding pe(e, g.map());
      pe.require_equal_outside(prot);
      SatSolver s;
      s.load(pe.cnf());
      bool violated = s.solve({}) == SatSolver::Result::sat;
      CHECK(violated == !brute_fair(g, prot));
      if (violated) {
        auto value = [&](Lit l) { return s.model_value(l); };
        std::vector<int> ca = pe.decode_cell(0, value);
        std::vector<int> cb = pe.decode_cell(1, value);
        CHECK(g.predict_cell(ca) != g.predict_cell(cb));
        for (int i = 0; i < e.num_features(); ++i)
          if (std::find(prot.begin(), prot.end(), i) == prot.end()) CHECK(ca[i] == cb[i]);
      }
      ++done;
    }
  }
}

TEST_CASE("pair encoding decides bounded robustness with witnesses") {
  SECTION("frozen majority-vote example") {
    Ensemble e = load_model_file(data_path("iris_rfmv.json"));
    IntervalMap im = build_interval_map(e);
    const Instance v = real_instance({"6.0", "3.5", "1.4", "0.2"});

    PairEncoding tight(e, im);
    tight.require_neighborhood(v, 0);
    SatSolver s0;
    s0.load(tight.cnf());
    CHECK(s0.solve({}) == SatSolver::Result::unsat);

    PairEncoding loose(e, im);
    loose.require_neighborhood(v, 1);
    SatSolver s1;
    s1.load(loose.cnf());
    REQUIRE(s1.solve({}) == SatSolver::Result::sat);
    auto value = [&](Lit l) { return s1.model_value(l); };
    std::vector<int> cb = loose.decode_cell(1, value);
    std::vector<int> base = locate(im, v);
    int dist = 0;
    for (std::size_t i = 0; i < cb.size(); ++i)
      if (cb[i] != base[i]) ++dist;
    CHECK(dist == 1);
    CHECK(predict(e, representative(e, im, cb)) != predict(e, v));
  }

  SECTION("random forests agree with the bounded scan and are delta-monotone") {
    Rng rng(0x0b57ULL);
    int done = 0;
    while (done < 50) {
      Ensemble e = texp_test::random_ensemble(rng, Variant::rfmv, 4, 5, 2, 3);
      CellGrid g(e);
      Instance v = texp_test::random_instance(rng, e);
      bool prev_violated = false;
      for (int delta = 0; delta <= e.num_features(); ++delta) {
        PairEncoding pe(e, g.map());
        pe.require_neighborhood(v, delta);
        SatSolver s;
        s.load(pe.cnf());
        bool violated = s.solve({}) == SatSolver::Result::sat;
        CHECK(violated == !brute_robust(g, v, delta));
        if (prev_violated) CHECK(violated);  // growing the radius keeps the witness
        prev_violated = violated;
        if (violated) {
          auto value = [&](Lit l) { return s.model_value(l); };
          std::vector<int> cb = pe.decode_cell(1, value);
          std::vector<int> base = locate(g.map(), v);
          int dist = 0;
          for (std::size_t i = 0; i < cb.size(); ++i)
            if (cb[i] != base[i]) ++dist;
          CHECK(dist <= delta);
          CHECK(g.predict_cell(cb) != predict(e, v));
        }
      }
      ++done;
    }
  }
}

TEST_CASE("encoding construction is deterministic") {
  Rng rng(0xdecaULL);
  Ensemble e = texp_test::random_ensemble(rng, Variant::rfmv, 4, 5, 3, 3);
  IntervalMap im = build_interval_map(e);

  auto build = [&](Cnf& cnf) {
    DomainEncoding dom(cnf, e, im);
    VoteEncoding votes(dom);
    add_overtake_block(dom, votes, 0, AttackVariant::two_comparator);
  };
  Cnf a, b;
  build(a);
  build(b);
  REQUIRE(a.num_vars() == b.num_vars());
  REQUIRE(a.num_clauses() == b.num_clauses());
  for (std::size_t i = 0; i < a.clauses().size(); ++i) {
    REQUIRE(a.clauses()[i].size() == b.clauses()[i].size());
    for (std::size_t k = 0; k < a.clauses()[i].size(); ++k)
      CHECK(a.clauses()[i][k] == b.clauses()[i][k]);
  }
}
