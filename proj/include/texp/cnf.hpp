#ifndef TEXP_CNF_HPP
#define TEXP_CNF_HPP

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "texp/rational.hpp"

namespace texp {

/**
 * Propositional literal over 1-based variables.
 *
 * Encoded as 2*var | sign so literals index arrays directly; sign()==true
 * denotes the negated literal. A default-constructed literal is invalid.
 */
struct Lit {
  std::int32_t code = 0;

  constexpr Lit() = default;
  static constexpr Lit make(int var, bool negated = false) {
    Lit l;
    l.code = static_cast<std::int32_t>(var << 1) | (negated ? 1 : 0);
    return l;
  }

  constexpr int var() const { return code >> 1; }
  constexpr bool sign() const { return (code & 1) != 0; }
  constexpr bool valid() const { return code >= 2; }
  constexpr Lit operator~() const {
    Lit l;
    l.code = code ^ 1;
    return l;
  }
  constexpr bool operator==(const Lit& o) const { return code == o.code; }
  constexpr bool operator!=(const Lit& o) const { return code != o.code; }
  constexpr bool operator<(const Lit& o) const { return code < o.code; }

  int to_dimacs() const { return sign() ? -var() : var(); }
  static Lit from_dimacs(int d) { return make(d < 0 ? -d : d, d < 0); }
};

inline constexpr Lit lit(int var, bool negated = false) { return Lit::make(var, negated); }

/** Clause database with a shared variable pool. */
class Cnf {
 public:
  int num_vars() const { return nvars_; }
  std::size_t num_clauses() const { return clauses_.size(); }

  int new_var() { return ++nvars_; }
  void ensure_var(int v) {
    if (v > nvars_) nvars_ = v;
  }

  void add(std::vector<Lit> lits) {
    for (const Lit& l : lits) ensure_var(l.var());
    clauses_.push_back(std::move(lits));
  }
  void add(std::initializer_list<Lit> lits) { add(std::vector<Lit>(lits)); }

  // Uniform clause-sink interface shared with SatSolver (gadget templates).
  void add_clause(std::vector<Lit> lits) { add(std::move(lits)); }
  void add_clause(std::initializer_list<Lit> lits) { add(std::vector<Lit>(lits)); }

  const std::vector<std::vector<Lit>>& clauses() const { return clauses_; }

 private:
  int nvars_ = 0;
  std::vector<std::vector<Lit>> clauses_;
};

/** Weighted soft literal: satisfying `lit` contributes `weight` to the objective. */
struct SoftLit {
  Lit lit;
  Rat weight;
};

/**
 * Partial weighted formula: hard clauses plus unit soft literals.
 *
 * The objective of an assignment is sum of satisfied soft weights plus
 * `offset` (the constant produced when negative-coefficient terms are
 * rewritten into positive-weight softs).
 */
struct Wcnf {
  Cnf hard;
  std::vector<SoftLit> softs;
  Rat offset;

  /** Largest objective any assignment could reach (all softs satisfied). */
  Rat upper_bound() const {
    Rat total = offset;
    for (const SoftLit& s : softs) total += s.weight;
    return total;
  }
};

}  // namespace texp

#endif  // TEXP_CNF_HPP
