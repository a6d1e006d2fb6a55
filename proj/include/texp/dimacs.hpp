#ifndef TEXP_DIMACS_HPP
#define TEXP_DIMACS_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "texp/cnf.hpp"
#include "texp/errors.hpp"

namespace texp {

/** Plain `p cnf` writer. */
inline void write_dimacs(std::ostream& os, const Cnf& f) {
  os << "p cnf " << f.num_vars() << " " << f.num_clauses() << "\n";
  for (const auto& c : f.clauses()) {
    for (const Lit& l : c) os << l.to_dimacs() << " ";
    os << "0\n";
  }
}

/**
 * Classic weighted-partial dialect: `p wcnf <vars> <clauses> <top>`, hard
 * clauses carry weight `top`, soft unit clauses carry their scaled integer
 * weight. `top` is 1 + sum of soft weights. All weights share one
 * power-of-ten scale derived from the maximum fractional precision of the
 * soft weights (at most 10^6); a comment line records scale and objective
 * offset so the rational objective can be reconstructed.
 */
inline void write_wcnf(std::ostream& os, const Wcnf& f) {
  int digits = 0;
  for (const SoftLit& s : f.softs) {
    auto p = s.weight.decimal_places();
    if (!p) throw ValidationError("soft weight is not a finite decimal");
    digits = std::max(digits, *p);
  }
  {
    auto p = f.offset.decimal_places();
    if (!p) throw ValidationError("objective offset is not a finite decimal");
    digits = std::max(digits, *p);
  }
  if (digits > 6) throw ValidationError("weight precision exceeds the supported 10^6 scale");
  long long scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;

  unsigned long long top = 1;
  std::vector<long long> ws;
  ws.reserve(f.softs.size());
  for (const SoftLit& s : f.softs) {
    Rat scaled = s.weight * Rat(scale);
    if (scaled.den() != 1 || scaled.num() <= 0)
      throw ValidationError("soft weights must be positive decimals");
    ws.push_back(scaled.num());
    top += static_cast<unsigned long long>(scaled.num());
  }

  os << "c objective scale=" << scale << " offset=" << f.offset.to_string() << "\n";
  os << "p wcnf " << f.hard.num_vars() << " " << (f.hard.num_clauses() + f.softs.size())
     << " " << top << "\n";
  for (const auto& c : f.hard.clauses()) {
    os << top << " ";
    for (const Lit& l : c) os << l.to_dimacs() << " ";
    os << "0\n";
  }
  for (std::size_t i = 0; i < f.softs.size(); ++i)
    os << ws[i] << " " << f.softs[i].lit.to_dimacs() << " 0\n";
}

namespace detail {

inline bool dimacs_skippable(const std::string& line) {
  for (char c : line) {
    if (c == 'c' || c == '%') return true;
    if (!isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;  // blank
}

}  // namespace detail

/** Reads a `p cnf` file; rejects malformed headers, literals and clause lists. */
inline Cnf read_dimacs(std::istream& is) {
  Cnf f;
  std::string line;
  long declared_vars = -1, declared_clauses = -1;
  int lineno = 0;
  const auto fail = [&](const std::string& why) {
    throw ParseError("dimacs line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::dimacs_skippable(line)) continue;
    if (line[0] == 'p') {
      std::istringstream ls(line);
      std::string p, kind;
      if (!(ls >> p >> kind >> declared_vars >> declared_clauses) || kind != "cnf")
        fail("bad problem line");
      continue;
    }
    if (declared_vars < 0) fail("clause before problem line");
    std::istringstream ls(line);
    long v;
    std::vector<Lit> c;
    bool closed = false;
    while (ls >> v) {
      if (closed) fail("literal after terminating 0");
      if (v == 0) { closed = true; continue; }
      if (v > declared_vars || v < -declared_vars) fail("literal out of declared range");
      c.push_back(Lit::from_dimacs(static_cast<int>(v)));
    }
    if (!ls.eof()) fail("not a literal");
    if (!closed) fail("clause missing terminating 0");
    f.add(std::move(c));
  }
  if (declared_vars < 0) throw ParseError("dimacs: missing problem line");
  f.ensure_var(static_cast<int>(declared_vars));
  return f;
}

/**
 * Reads a classic `p wcnf` file. Weight-`top` clauses become hard; other
 * clauses must be unit and become soft literals. If an objective comment
 * written by write_wcnf is present, rational weights and offset are
 * reconstructed from it.
 */
inline Wcnf read_wcnf(std::istream& is) {
  Wcnf f;
  std::string line;
  long long declared_vars = -1;
  unsigned long long top = 0;
  long long scale = 1;
  Rat offset;
  int lineno = 0;
  bool have_p = false;
  const auto fail = [&](const std::string& why) {
    throw ParseError("wcnf line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::dimacs_skippable(line)) {
      std::istringstream ls(line);
      std::string c, tok;
      if (ls >> c >> tok && c == "c" && tok == "objective") {
        while (ls >> tok) {
          if (tok.rfind("scale=", 0) == 0) scale = std::stoll(tok.substr(6));
          if (tok.rfind("offset=", 0) == 0) offset = Rat::from_decimal(tok.substr(7));
        }
      }
      continue;
    }
    if (line[0] == 'p') {
      std::istringstream ls(line);
      std::string p, kind;
      long long nclauses;
      if (!(ls >> p >> kind >> declared_vars >> nclauses >> top) || kind != "wcnf")
        fail("bad problem line");
      have_p = true;
      continue;
    }
    if (!have_p) fail("clause before problem line");
    std::istringstream ls(line);
    unsigned long long w;
    if (!(ls >> w)) fail("missing clause weight");
    long long v;
    std::vector<Lit> c;
    bool closed = false;
    while (ls >> v) {
      if (closed) fail("literal after terminating 0");
      if (v == 0) { closed = true; continue; }
      if (v > declared_vars || v < -declared_vars) fail("literal out of declared range");
      c.push_back(Lit::from_dimacs(static_cast<int>(v)));
    }
    if (!ls.eof()) fail("not a literal");
    if (!closed) fail("clause missing terminating 0");
    if (w == top) {
      f.hard.add(std::move(c));
    } else {
      if (c.size() != 1) fail("soft clauses must be unit literals");
      if (w == 0) fail("soft clause with zero weight");
      f.softs.push_back({c[0], Rat(static_cast<long long>(w), scale)});
    }
  }
  if (!have_p) throw ParseError("wcnf: missing problem line");
  f.hard.ensure_var(static_cast<int>(declared_vars));
  f.offset = offset;
  return f;
}

}  // namespace texp

#endif  // TEXP_DIMACS_HPP
