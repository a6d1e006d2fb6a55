#ifndef TEXP_ERRORS_HPP
#define TEXP_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace texp {

/** Malformed input document (model JSON, instance CSV, DIMACS, ...). */
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/** Structurally valid input that violates a semantic invariant. */
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/** Operation invoked on inputs it does not support (wrong variant, bad mode). */
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/** Wall-clock limit exceeded inside a solver loop. */
class TimeoutError : public std::runtime_error {
 public:
  explicit TimeoutError(const std::string& what) : std::runtime_error(what) {}
};

/** Exhaustive enumeration refused because the search space exceeds the budget. */
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, std::uint64_t requested, std::uint64_t budget)
      : std::runtime_error(what), requested_(requested), budget_(budget) {}
  std::uint64_t requested() const { return requested_; }
  std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t requested_;
  std::uint64_t budget_;
};

}  // namespace texp

#endif  // TEXP_ERRORS_HPP
