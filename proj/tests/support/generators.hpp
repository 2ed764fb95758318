#pragma once

#include "refine/syntax.hpp"

#include <random>

namespace refine::testing {

/// Well-typed random programs over int variables x, y, z, address variables
/// p, q, the ghost cell count and the lock L. Integer literals are
/// non-negative; negation is always an explicit operator.
class ProgramGen {
 public:
  explicit ProgramGen(std::uint64_t seed) : rng_(seed) {}

  ExprPtr int_expr(int depth);
  ExprPtr bool_expr(int depth);
  ExprPtr seq_expr(int depth);
  CommandPtr command(int depth);
  Program program(int depth);

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  CommandPtr command(int depth, bool in_lock);
  AssertionPtr annotation();

  std::mt19937_64 rng_;
};

}  // namespace refine::testing
