#ifndef TEXP_GADGETS_HPP
#define TEXP_GADGETS_HPP

#include <stdexcept>
#include <vector>

#include "texp/cnf.hpp"

namespace texp {

/**
 * Clause-level building blocks shared by the encoders and the MaxSAT engine.
 *
 * Every gadget is a template over the clause sink F, which must provide
 * `int new_var()` and `void add_clause(std::vector<Lit>)`; both Cnf and
 * SatSolver qualify, so the same constructions serve offline encoding and
 * incremental in-solver use.
 */

/** Asserts that exactly one of `xs` is true (pairwise encoding). */
template <class F>
void add_exactly_one(F& f, const std::vector<Lit>& xs) {
  if (xs.empty()) {
    int v = f.new_var();  // exactly-one over nothing is unsatisfiable
    f.add_clause({lit(v)});
    f.add_clause({lit(v, true)});
    return;
  }
  f.add_clause(xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) f.add_clause({~xs[i], ~xs[j]});
}

/**
 * Unary counter over a set of input literals.
 *
 * outputs[k] holds iff at least k+1 inputs are true; the encoding is exact
 * in both directions, so in every model the outputs are the monotone unary
 * representation of the input count (most significant first).
 */
struct UnaryCounter {
  std::vector<Lit> inputs;
  std::vector<Lit> outputs;
};

namespace detail {

template <class F>
std::vector<Lit> totalizer_merge(F& f, const std::vector<Lit>& a, const std::vector<Lit>& b) {
  const std::size_t p = a.size(), q = b.size();
  std::vector<Lit> r(p + q);
  for (auto& l : r) l = lit(f.new_var());
  for (std::size_t i = 0; i <= p; ++i) {
    for (std::size_t j = 0; j <= q; ++j) {
      if (i + j >= 1) {  // (a >= i) and (b >= j) imply (r >= i+j)
        std::vector<Lit> c;
        if (i > 0) c.push_back(~a[i - 1]);
        if (j > 0) c.push_back(~b[j - 1]);
        c.push_back(r[i + j - 1]);
        f.add_clause(std::move(c));
      }
      if (i + j <= p + q - 1) {  // (r >= i+j+1) implies (a >= i+1) or (b >= j+1)
        std::vector<Lit> c;
        if (i < p) c.push_back(a[i]);
        if (j < q) c.push_back(b[j]);
        c.push_back(~r[i + j]);
        f.add_clause(std::move(c));
      }
    }
  }
  return r;
}

template <class F>
std::vector<Lit> totalizer_build(F& f, const std::vector<Lit>& xs, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return {xs[lo]};
  std::size_t mid = lo + (hi - lo) / 2;
  return totalizer_merge(f, totalizer_build(f, xs, lo, mid), totalizer_build(f, xs, mid, hi));
}

}  // namespace detail

/** Builds the exact unary counter (totalizer tree) for `xs`; requires xs nonempty. */
template <class F>
UnaryCounter sort_unary(F& f, const std::vector<Lit>& xs) {
  UnaryCounter u;
  u.inputs = xs;
  u.outputs = detail::totalizer_build(f, xs, 0, xs.size());
  return u;
}

/**
 * Asserts sum(xs) >= k. k <= 0 emits nothing; k > |xs| is unsatisfiable and
 * is encoded as an explicit fresh-variable contradiction pair.
 */
template <class F>
void add_cardinality_geq(F& f, const std::vector<Lit>& xs, long long k) {
  if (k <= 0) return;
  if (k > static_cast<long long>(xs.size())) {
    int v = f.new_var();
    f.add_clause({lit(v)});
    f.add_clause({lit(v, true)});
    return;
  }
  UnaryCounter u = sort_unary(f, xs);
  f.add_clause({u.outputs[static_cast<std::size_t>(k) - 1]});
}

/** Asserts sum(xs) <= k; k >= |xs| emits nothing, k < 0 is a contradiction pair. */
template <class F>
void add_cardinality_leq(F& f, const std::vector<Lit>& xs, long long k) {
  if (k >= static_cast<long long>(xs.size())) return;
  if (k < 0) {
    int v = f.new_var();
    f.add_clause({lit(v)});
    f.add_clause({lit(v, true)});
    return;
  }
  UnaryCounter u = sort_unary(f, xs);
  f.add_clause({~u.outputs[static_cast<std::size_t>(k)]});
}

enum class CmpMode { lt, le };

/**
 * Lexicographic comparator over two equal-length bit strings (most
 * significant first). Returns a literal that holds iff s < t (mode lt) or
 * s <= t (mode le); on sorted unary counters this is numeric comparison of
 * the counts. Chain recurrences, with stage flags defined biconditionally:
 *   lt_i <-> lt_{i-1} or (eq_{i-1} and t_i and not s_i)
 *   eq_i <-> eq_{i-1} and (t_i <-> s_i)
 */
template <class F>
Lit add_unary_comparator(F& f, const std::vector<Lit>& s, const std::vector<Lit>& t, CmpMode mode) {
  if (s.size() != t.size() || s.empty())
    throw std::invalid_argument("comparator requires equal-length nonempty bit strings");
  const std::size_t n = s.size();
  Lit lt_prev, eq_prev;  // invalid until stage 1 completes
  for (std::size_t i = 0; i < n; ++i) {
    Lit si = s[i], ti = t[i];
    Lit eq_i = lit(f.new_var());  // eq_i <-> eq_{i-1} and (si <-> ti)
    if (i == 0) {
      f.add_clause({~eq_i, ~si, ti});
      f.add_clause({~eq_i, si, ~ti});
      f.add_clause({eq_i, si, ti});
      f.add_clause({eq_i, ~si, ~ti});
    } else {
      Lit xnor = lit(f.new_var());
      f.add_clause({~xnor, ~si, ti});
      f.add_clause({~xnor, si, ~ti});
      f.add_clause({xnor, si, ti});
      f.add_clause({xnor, ~si, ~ti});
      f.add_clause({~eq_i, eq_prev});
      f.add_clause({~eq_i, xnor});
      f.add_clause({eq_i, ~eq_prev, ~xnor});
    }
    Lit lt_i;
    if (i == 0) {
      lt_i = lit(f.new_var());  // lt_1 <-> t_1 and not s_1
      f.add_clause({~lt_i, ti});
      f.add_clause({~lt_i, ~si});
      f.add_clause({lt_i, ~ti, si});
    } else {
      Lit g = lit(f.new_var());  // g <-> eq_{i-1} and t_i and not s_i
      f.add_clause({~g, eq_prev});
      f.add_clause({~g, ti});
      f.add_clause({~g, ~si});
      f.add_clause({g, ~eq_prev, ~ti, si});
      lt_i = lit(f.new_var());  // lt_i <-> lt_{i-1} or g
      f.add_clause({~lt_i, lt_prev, g});
      f.add_clause({lt_i, ~lt_prev});
      f.add_clause({lt_i, ~g});
    }
    lt_prev = lt_i;
    eq_prev = eq_i;
  }
  if (mode == CmpMode::lt) return lt_prev;
  Lit le = lit(f.new_var());  // le <-> lt_n or eq_n
  f.add_clause({~le, lt_prev, eq_prev});
  f.add_clause({le, ~lt_prev});
  f.add_clause({le, ~eq_prev});
  return le;
}

}  // namespace texp

#endif  // TEXP_GADGETS_HPP
