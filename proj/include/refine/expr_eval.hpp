#pragma once

#include "refine/heap.hpp"
#include "refine/syntax.hpp"

namespace refine {

/// Thrown when program code reads a ghost cell that is not allocated.
class GhostReadFault : public EvalError {
 public:
  explicit GhostReadFault(const std::string& ghost)
      : EvalError("ghost cell '" + ghost + "' is not allocated"), ghost(ghost) {}
  std::string ghost;
};

/// Evaluates e on s. With `ghost_cells` set, ghost names read that heap's
/// ghost cells (program semantics); otherwise they denote their address.
/// Throws EvalError on ill-typed operands or out-of-range indexing.
Value eval_expr(const ExprPtr& e, const Stack& s, const PermHeap* ghost_cells = nullptr);

/// Applies a binary operator to evaluated operands.
Value apply_binary(Op op, const Value& l, const Value& r);
Value apply_unary(Op op, const Value& v);

}  // namespace refine
