// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion states its claim and its wall-clock budget.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "support/test_util.hpp"
#include "texp/errors.hpp"
#include "texp/explain.hpp"
#include "texp/maxsat.hpp"
#include "texp/model.hpp"
#include "texp/model_io.hpp"
#include "texp/oracle.hpp"
#include "texp/verify.hpp"

using namespace texp;
using texp_test::Rng;

namespace {

struct Failure {
  std::string message;
};

void req(bool cond, const std::string& what) {
  if (!cond) throw Failure{what};
}

std::string data_path(const std::string& name) {
  return std::string(TEXP_DATA_DIR) + "/" + name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<int> minus_one(const std::vector<int>& xs, int drop) {
  std::vector<int> out;
  for (int x : xs)
    if (x != drop) out.push_back(x);
  return out;
}

std::string set_to_string(const std::vector<int>& xs) {
  std::string s = "{";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s + "}";
}

std::vector<std::vector<int>> sorted_family(std::vector<std::vector<int>> fam) {
  for (auto& s : fam) std::sort(s.begin(), s.end());
  std::sort(fam.begin(), fam.end());
  return fam;
}

std::size_t min_size(const std::vector<std::vector<int>>& fam) {
  std::size_t best = SIZE_MAX;
  for (const auto& s : fam) best = std::min(best, s.size());
  return best;
}

Variant rotate_variant(long long i) {
  switch (i % 3) {
    case 0: return Variant::bt;
    case 1: return Variant::rfmv;
    default: return Variant::rfwv;
  }
}

/**
 * Random model plus its exhaustive cell grid, rejecting oversized grids.
 * Heap-held so the grid's back-pointer into the model survives the return.
 */
struct GridCase {
  std::unique_ptr<Ensemble> model;
  Instance instance;
  std::unique_ptr<CellGrid> grid;
};

GridCase make_grid_case(Rng& rng, Variant variant, int max_features, int max_trees) {
  for (;;) {
    GridCase gc;
    gc.model = std::make_unique<Ensemble>(
        texp_test::random_ensemble(rng, variant, max_features, max_trees, 3, 4));
    gc.instance = texp_test::random_instance(rng, *gc.model);
    try {
      gc.grid = std::make_unique<CellGrid>(*gc.model, 2'000'000);
      return gc;
    } catch (const BudgetError&) {
      // grid too large for exhaustive checking; draw another model
    }
  }
}

// --- criterion 1 -----------------------------------------------------------

void worked_example_fidelity() {
  const struct {
    const char* file;
    const char* instance;
    std::vector<Rat> scores;
    int cls;
    const char* label;
  } rows[] = {
      {"iris_bt.json",
       "5.1,3.5,1.4,0.2",
       {Rat::from_decimal("0.72284"), Rat::from_decimal("-0.40355"),
        Rat::from_decimal("-0.41645")},
       0,
       "Setosa"},
      {"iris_rfmv.json", "6.0,3.5,1.4,0.2", {Rat(2), Rat(1), Rat(0)}, 0, "Setosa"},
      {"iris_rfwv.json",
       "5.1,2.75,1.4,0.8",
       {Rat::from_decimal("0.307"), Rat::from_decimal("2.519"), Rat::from_decimal("0.171")},
       1,
       "Versicolor"},
  };
  for (const auto& row : rows) {
    const Ensemble e = load_model_file(data_path(row.file));
    const Instance v = parse_instance(e, row.instance);
    const std::vector<Rat> got = class_scores(e, v);
    req(got.size() == row.scores.size(), std::string(row.file) + ": score arity");
    for (std::size_t c = 0; c < got.size(); ++c)
      req(got[c] == row.scores[c], std::string(row.file) + ": score " + std::to_string(c) +
                                       " = " + got[c].to_string() + ", expected " +
                                       row.scores[c].to_string());
    const int k = predict(e, v);
    req(k == row.cls, std::string(row.file) + ": predicted " + std::to_string(k));
    req(e.classes[static_cast<std::size_t>(k)] == row.label,
        std::string(row.file) + ": label " + e.classes[static_cast<std::size_t>(k)]);
  }
}

// --- criterion 2 -----------------------------------------------------------

void unique_axp() {
  const Ensemble e = load_model_file(data_path("iris_bt.json"));
  const Instance v = parse_instance(e, "5.1,3.5,1.4,0.2");
  req(e.features[2].name == "petal.length", "feature 2 name");
  XpSession s(e, v);
  const std::vector<int> want = {2};
  const Explanation any = s.find_axp();
  req(any.features == want, "find_axp returned " + set_to_string(any.features));
  const Explanation best = s.smallest_axp();
  req(best.features == want, "smallest_axp returned " + set_to_string(best.features));
}

// --- criterion 3 -----------------------------------------------------------

void stratification_fidelity() {
  const std::vector<Rat> weights = {
      Rat::from_decimal("0.72452"), Rat::from_decimal("0.72284"), Rat::from_decimal("0.41645"),
      Rat::from_decimal("0.41527"), Rat::from_decimal("0.16249")};
  const std::vector<std::vector<Rat>> want = {
      {Rat::from_decimal("0.72452"), Rat::from_decimal("0.72284")},
      {Rat::from_decimal("0.41645"), Rat::from_decimal("0.41527")},
      {Rat::from_decimal("0.16249")}};
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::vector<Rat>> got = stratify_weights(weights);
  const double dt = seconds_since(t0);
  req(got == want, "strata partition differs (" + std::to_string(got.size()) + " strata)");
  req(dt < 0.001, "stratify took " + std::to_string(dt) + "s, budget 1ms");
}

// --- criterion 4 -----------------------------------------------------------

std::string oracle_equivalence_explanations() {
  Rng rng(0x41c4ull);
  const int rounds = 200;
  int with_cxp = 0;
  for (int round = 0; round < rounds; ++round) {
    const GridCase gc = make_grid_case(rng, rotate_variant(round), 6, 9);
    const Ensemble& e = *gc.model;
    const Instance& v = gc.instance;
    const CellGrid& g = *gc.grid;
    const XpSets brute = brute_xps(g, v);
    const std::string tag = "round " + std::to_string(round) + ": ";

    XpOptions opt;
    if (e.variant == Variant::rfmv) {
      if (round % 4 == 0) opt.mode = QueryMode::weighted_gap;
      if (round % 4 == 1) opt.attack = AttackVariant::two_comparator;
      if (round % 4 == 2 && e.num_classes() == 2) opt.attack = AttackVariant::k2;
    }
    if (round % 5 == 1) opt.stratification = false;
    if (round % 5 == 3) opt.core_reuse = false;
    if (round % 7 == 2) opt.early_termination = false;
    XpSession s(e, v, opt);

    const Explanation ax = s.find_axp();
    req(brute_entails(g, v, ax.features), tag + "find_axp not sufficient");
    for (int f : ax.features)
      req(!brute_entails(g, v, minus_one(ax.features, f)),
          tag + "find_axp not minimal at feature " + std::to_string(f));

    const std::optional<Explanation> cx = s.find_cxp();
    req(cx.has_value() == !brute.cxps.empty(), tag + "find_cxp existence verdict");

    const auto complement_of = [&](const std::vector<int>& freed) {
      std::vector<int> fixed;
      for (int f = 0; f < e.num_features(); ++f)
        if (std::find(freed.begin(), freed.end(), f) == freed.end()) fixed.push_back(f);
      return fixed;
    };
    if (cx.has_value()) {
      ++with_cxp;
      req(!brute_entails(g, v, complement_of(cx->features)), tag + "find_cxp not countering");
      for (int f : cx->features)
        req(brute_entails(g, v, complement_of(minus_one(cx->features, f))),
            tag + "find_cxp not minimal at feature " + std::to_string(f));
    }

    const Explanation bax = s.smallest_axp();
    req(bax.features.size() == min_size(brute.axps),
        tag + "smallest_axp size " + std::to_string(bax.features.size()));
    const std::optional<Explanation> bcx = s.smallest_cxp();
    req(bcx.has_value() == !brute.cxps.empty(), tag + "smallest_cxp existence verdict");
    if (bcx.has_value())
      req(bcx->features.size() == min_size(brute.cxps),
          tag + "smallest_cxp size " + std::to_string(bcx->features.size()));
  }
  req(with_cxp >= 100, "too few non-constant rounds: " + std::to_string(with_cxp));
  return std::to_string(rounds) + " models";
}

// --- criterion 5 -----------------------------------------------------------

std::string duality_suite() {
  Rng rng(0x900dull);
  const int rounds = 50;
  int nontrivial = 0;
  for (int round = 0; round < rounds; ++round) {
    const GridCase gc = make_grid_case(rng, rotate_variant(round), 5, 6);
    const CellGrid& g = *gc.grid;
    const XpSets brute = brute_xps(g, gc.instance);
    const std::string tag = "round " + std::to_string(round) + ": ";

    XpSession s(*gc.model, gc.instance);
    std::vector<std::vector<int>> axps, cxps;
    for (const Explanation& x : s.enumerate())
      (x.kind == XpKind::axp ? axps : cxps).push_back(x.features);
    axps = sorted_family(std::move(axps));
    cxps = sorted_family(std::move(cxps));
    req(axps == sorted_family(brute.axps), tag + "enumerated sufficient sets differ");
    req(cxps == sorted_family(brute.cxps), tag + "enumerated countering sets differ");
    if (!cxps.empty()) ++nontrivial;

    // Exact duality: each family equals the minimal hitting sets of the other.
    const std::vector<int>& cand = s.candidates();
    const auto minimal_hitting_sets = [&](const std::vector<std::vector<int>>& fam) {
      std::vector<std::vector<int>> out;
      const int n = static_cast<int>(cand.size());
      std::vector<char> hits(static_cast<std::size_t>(1) << n, 0);
      for (std::uint64_t mask = 0; mask < hits.size(); ++mask) {
        bool all = true;
        for (const auto& set : fam) {
          bool hit = false;
          for (int f : set) {
            const auto it = std::find(cand.begin(), cand.end(), f);
            if (it != cand.end() && (mask >> (it - cand.begin())) & 1) {
              hit = true;
              break;
            }
          }
          if (!hit) {
            all = false;
            break;
          }
        }
        hits[mask] = all;
      }
      for (std::uint64_t mask = 0; mask < hits.size(); ++mask) {
        if (!hits[mask]) continue;
        bool minimal = true;
        for (int b = 0; b < n && minimal; ++b)
          if ((mask >> b) & 1 && hits[mask & ~(std::uint64_t(1) << b)]) minimal = false;
        if (!minimal) continue;
        std::vector<int> set;
        for (int b = 0; b < n; ++b)
          if ((mask >> b) & 1) set.push_back(cand[static_cast<std::size_t>(b)]);
        out.push_back(std::move(set));
      }
      return sorted_family(std::move(out));
    };
    req(minimal_hitting_sets(cxps) == axps, tag + "sufficient sets are not the MHS duals");
    req(minimal_hitting_sets(axps) == cxps, tag + "countering sets are not the MHS duals");
  }
  req(nontrivial >= 25, "too few non-constant rounds: " + std::to_string(nontrivial));
  return std::to_string(rounds) + " problems";
}

// --- criterion 6 -----------------------------------------------------------

std::string maxsat_exactness() {
  Rng rng(0x6a75ull);
  const int rounds = 500;
  int feasible_rounds = 0;
  for (int round = 0; round < rounds; ++round) {
    const std::string tag = "round " + std::to_string(round) + ": ";
    Wcnf w;
    w.hard = texp_test::random_cnf(rng, 15, 6);
    const int nv = w.hard.num_vars();
    const int ns = static_cast<int>(rng.range(1, 10));
    for (int i = 0; i < ns; ++i) {
      SoftLit s;
      s.lit = lit(static_cast<int>(rng.range(1, nv)), rng.chance(1, 2));
      s.weight = Rat(rng.range(1, 40), rng.range(1, 4));
      w.softs.push_back(s);
    }

    // Exhaustive optimum over all assignments.
    bool any = false;
    Rat best(0);
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << nv); ++mask) {
      if (!texp_test::eval_cnf(w.hard, mask)) continue;
      Rat value(0);
      for (const SoftLit& s : w.softs) {
        const bool tv = (mask >> (s.lit.var() - 1)) & 1;
        if (s.lit.sign() ? !tv : tv) value += s.weight;
      }
      if (!any || best < value) best = value;
      any = true;
    }

    MaxSatEngine eng(w);
    const OptResult r = eng.maximize();
    req(r.feasible() == any, tag + "feasibility verdict");
    if (!any) continue;
    ++feasible_rounds;
    req(r.status == OptStatus::optimum, tag + "maximize did not report an optimum");
    req(r.value == best,
        tag + "optimum " + r.value.to_string() + ", expected " + best.to_string());

    Threshold th;
    th.bound = best + Rat(rng.range(-1, 1));
    th.strict = rng.chance(1, 2);
    const bool expected = th.met_by(best);
    for (int combo = 0; combo < 8; ++combo) {
      MaxSatEngine probe(w);
      probe.set_use_stratification(combo & 1);
      probe.set_use_core_reuse(combo & 2);
      probe.set_use_early_termination(combo & 4);
      const OptResult pr = probe.check({}, th);
      req(pr.meets == expected, tag + "verdict differs under toggle combination " +
                                    std::to_string(combo));
    }
  }
  req(feasible_rounds >= 300, "too few feasible rounds: " + std::to_string(feasible_rounds));
  return std::to_string(rounds) + " formulas x 8 toggle combinations";
}

// --- criterion 7 -----------------------------------------------------------

std::string encoding_path_agreement() {
  Rng rng(0x7a7eull);
  const int rounds = 50;
  long long subsets = 0;
  for (int round = 0; round < rounds; ++round) {
    const GridCase gc = make_grid_case(rng, Variant::rfmv, 5, 6);
    const Ensemble& e = *gc.model;
    const Instance& v = gc.instance;
    const std::string tag = "round " + std::to_string(round) + ": ";

    std::vector<std::unique_ptr<XpSession>> paths;
    XpOptions sat_pairwise;
    sat_pairwise.mode = QueryMode::sat_votes;
    paths.push_back(std::make_unique<XpSession>(e, v, sat_pairwise));
    XpOptions sat_two;
    sat_two.mode = QueryMode::sat_votes;
    sat_two.attack = AttackVariant::two_comparator;
    paths.push_back(std::make_unique<XpSession>(e, v, sat_two));
    if (e.num_classes() == 2) {
      XpOptions sat_k2;
      sat_k2.mode = QueryMode::sat_votes;
      sat_k2.attack = AttackVariant::k2;
      paths.push_back(std::make_unique<XpSession>(e, v, sat_k2));
    }
    XpOptions weighted;
    weighted.mode = QueryMode::weighted_gap;
    paths.push_back(std::make_unique<XpSession>(e, v, weighted));

    const int m = e.num_features();
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << m); ++mask) {
      std::vector<int> fixed;
      for (int f = 0; f < m; ++f)
        if ((mask >> f) & 1) fixed.push_back(f);
      const bool want = brute_entails(*gc.grid, v, fixed);
      for (std::size_t p = 0; p < paths.size(); ++p)
        req(paths[p]->entails(fixed) == want, tag + "path " + std::to_string(p) +
                                                  " differs on subset " + set_to_string(fixed));
      ++subsets;
    }
  }
  return std::to_string(rounds) + " vote models, " + std::to_string(subsets) + " subsets";
}

// --- criterion 8 -----------------------------------------------------------

std::string verification_equivalence() {
  Rng rng(0x8e11ull);
  int fairness_queries = 0, robustness_queries = 0, violations = 0, unfair = 0;
  while (fairness_queries < 50 || robustness_queries < 50) {
    const GridCase gc = make_grid_case(rng, Variant::rfmv, 5, 6);
    const Ensemble& e = *gc.model;
    const CellGrid& g = *gc.grid;
    const int m = e.num_features();
    const std::string tag = "model with " + std::to_string(m) + " features: ";

    std::vector<int> prot;
    for (int f = 0; f < m; ++f)
      if (rng.chance(1, 3)) prot.push_back(f);
    if (prot.empty()) prot.push_back(static_cast<int>(rng.below(m)));
    const FairnessResult fr = check_fairness(e, prot);
    req(fr.fair == brute_fair(g, prot), tag + "fairness verdict differs");
    ++fairness_queries;
    if (!fr.fair) {
      ++unfair;
      const WitnessPair& wp = *fr.witness;
      req(predict(e, wp.a) == wp.class_a && predict(e, wp.b) == wp.class_b,
          tag + "fairness witness classes do not re-confirm");
      req(wp.class_a != wp.class_b, tag + "fairness witness classes equal");
      for (int f = 0; f < m; ++f)
        if (std::find(prot.begin(), prot.end(), f) == prot.end())
          req(wp.a[static_cast<std::size_t>(f)] == wp.b[static_cast<std::size_t>(f)],
              tag + "fairness witnesses differ on an unprotected feature");
    }

    const Instance v = texp_test::random_instance(rng, e);
    const int target = predict(e, v);
    bool violated_before = false;
    for (int delta = 0; delta <= m; ++delta) {
      const RobustnessResult rr = check_robustness(e, v, delta);
      req(rr.robust == brute_robust(g, v, delta),
          tag + "robustness verdict differs at delta " + std::to_string(delta));
      ++robustness_queries;
      req(!(violated_before && rr.robust), tag + "robustness not monotone in delta");
      violated_before = !rr.robust;
      if (!rr.robust) {
        ++violations;
        const Instance& w = *rr.witness;
        req(predict(e, w) == rr.witness_class, tag + "robustness witness does not re-confirm");
        req(rr.witness_class != target, tag + "robustness witness class equals prediction");
        int diffs = 0;
        for (std::size_t f = 0; f < w.size(); ++f)
          if (!(w[f] == v[f])) ++diffs;
        req(diffs >= 1 && diffs <= delta, tag + "robustness witness outside the ball");
      }
    }
  }
  req(unfair >= 5 && violations >= 25, "too few violating cases observed");
  return std::to_string(fairness_queries) + " fairness + " +
         std::to_string(robustness_queries) + " robustness queries";
}

// --- criterion 9 -----------------------------------------------------------

std::string scale_smoke_benchmark() {
  Rng rng(0x5ca1eull);
  Ensemble e;
  e.variant = Variant::rfmv;
  const int K = 3, m = 10;
  for (int c = 0; c < K; ++c) e.classes.push_back("c" + std::to_string(c));
  for (int f = 0; f < m; ++f) {
    Feature ft;
    ft.name = "f" + std::to_string(f);
    ft.kind = FeatureKind::real_num;
    ft.lo = Rat(0);
    ft.hi = Rat(10);
    e.features.push_back(std::move(ft));
  }
  const std::function<int(Tree&, int)> build = [&](Tree& t, int depth) -> int {
    const int idx = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    if (depth == 0) {
      Node leaf;
      leaf.weights.assign(K, Rat(0));
      leaf.weights[rng.below(K)] = Rat(1);
      t.nodes[static_cast<std::size_t>(idx)] = leaf;
      return idx;
    }
    Node n;
    n.feature = static_cast<int>(rng.below(m));
    n.threshold = Rat(rng.range(1, 19), 2);
    n.le = true;
    t.nodes[static_cast<std::size_t>(idx)] = n;
    const int yes = build(t, depth - 1);
    const int no = build(t, depth - 1);
    t.nodes[static_cast<std::size_t>(idx)].yes = yes;
    t.nodes[static_cast<std::size_t>(idx)].no = no;
    return idx;
  };
  for (int t = 0; t < 100; ++t) {
    Tree tree;
    build(tree, 4);
    e.trees.push_back(std::move(tree));
  }
  e.validate();

  Instance v;
  for (int f = 0; f < m; ++f) v.emplace_back(Rat(rng.range(0, 40), 4));

  XpSession s(e, v);
  const Explanation ax = s.find_axp();
  req(s.entails(ax.features), "returned sufficient set fails its own query");
  for (int f : ax.features)
    req(!s.entails(minus_one(ax.features, f)), "returned sufficient set is not minimal");
  return "100 trees, depth 4, " + std::to_string(m) + " features, |axp| = " +
         std::to_string(ax.features.size());
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* label;
    double budget_s;  // <= 0: no wall-clock budget
    std::function<std::string()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "worked-example fidelity", 1.0,
       [] {
         worked_example_fidelity();
         return std::string("3 bundled models");
       }},
      {2, "unique abductive explanation", 5.0,
       [] {
         unique_axp();
         return std::string("find_axp == smallest_axp == {petal.length}");
       }},
      {3, "weight stratification", 0.0,
       [] {
         stratification_fidelity();
         return std::string("5 weights -> 3 strata, < 1ms");
       }},
      {4, "explanation oracle equivalence", 600.0, oracle_equivalence_explanations},
      {5, "duality of explanation families", 0.0, duality_suite},
      {6, "optimizer exactness and toggle invariance", 300.0, maxsat_exactness},
      {7, "encoding-path agreement", 0.0, encoding_path_agreement},
      {8, "verification equivalence", 0.0, verification_equivalence},
      {9, "large-model smoke benchmark", 60.0, scale_smoke_benchmark},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    std::string error;
    try {
      detail = c.fn();
    } catch (const Failure& f) {
      error = f.message;
    } catch (const std::exception& ex) {
      error = std::string("unexpected exception: ") + ex.what();
    }
    const double dt = seconds_since(t0);
    if (error.empty() && c.budget_s > 0 && dt > c.budget_s)
      error = "wall-clock budget exceeded (" + std::to_string(c.budget_s) + "s)";
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(2);
    if (error.empty()) {
      line << "criterion " << c.id << ": PASS  " << c.label << " (" << detail << ", " << dt
           << "s)";
    } else {
      line << "criterion " << c.id << ": FAIL  " << c.label << " — " << error << " (" << dt
           << "s)";
      ++failures;
    }
    std::cout << line.str() << std::endl;
  }
  if (failures) std::cout << failures << " criterion(s) failed" << std::endl;
  return failures == 0 ? 0 : 1;
}
