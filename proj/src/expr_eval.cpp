#include "refine/expr_eval.hpp"

namespace refine {

Value apply_unary(Op op, const Value& v) {
  switch (op) {
    case Op::Neg: return Value::integer(-v.as_int());
    case Op::Not: return Value::boolean(!v.as_bool());
    case Op::Len: return Value::integer(static_cast<std::int64_t>(v.as_seq().size()));
    default: throw EvalError("not a unary operator");
  }
}

Value apply_binary(Op op, const Value& l, const Value& r) {
  switch (op) {
    case Op::Add: return Value::integer(l.as_int() + r.as_int());
    case Op::Sub: return Value::integer(l.as_int() - r.as_int());
    case Op::Mul: return Value::integer(l.as_int() * r.as_int());
    case Op::Eq:
      if (l.type() != r.type()) throw EvalError("comparing " + l.to_string() + " with " + r.to_string());
      return Value::boolean(l == r);
    case Op::Ne:
      if (l.type() != r.type()) throw EvalError("comparing " + l.to_string() + " with " + r.to_string());
      return Value::boolean(l != r);
    case Op::Lt: return Value::boolean(l.as_int() < r.as_int());
    case Op::Le: return Value::boolean(l.as_int() <= r.as_int());
    case Op::Gt: return Value::boolean(l.as_int() > r.as_int());
    case Op::Ge: return Value::boolean(l.as_int() >= r.as_int());
    case Op::And: return Value::boolean(l.as_bool() && r.as_bool());
    case Op::Or: return Value::boolean(l.as_bool() || r.as_bool());
    case Op::Implies: return Value::boolean(!l.as_bool() || r.as_bool());
    case Op::Append: return seq_append(l, r);
    case Op::Concat: {
      ValueSeq items = l.as_seq();
      const auto& tail = r.as_seq();
      items.insert(items.end(), tail.begin(), tail.end());
      return Value::sequence(std::move(items));
    }
    case Op::Index: {
      const auto& items = l.as_seq();
      std::int64_t i = r.as_int();
      if (i < 0 || i >= static_cast<std::int64_t>(items.size())) {
        throw EvalError("index " + std::to_string(i) + " out of range");
      }
      return items[static_cast<std::size_t>(i)];
    }
    default: throw EvalError("not a binary operator");
  }
}

Value eval_expr(const ExprPtr& e, const Stack& s, const PermHeap* ghost_cells) {
  switch (e->kind) {
    case ExprKind::Const: return e->value;
    case ExprKind::Var: return s.get(e->name);
    case ExprKind::Ghost: {
      Address a = Address::ghost_named(e->name);
      if (!ghost_cells) return Value::address(a);
      const Cell* c = ghost_cells->find(a);
      if (!c) throw GhostReadFault(e->name);
      return c->value;
    }
    case ExprKind::SeqLit: {
      ValueSeq items;
      items.reserve(e->args.size());
      for (const auto& a : e->args) items.push_back(eval_expr(a, s, ghost_cells));
      return Value::sequence(std::move(items));
    }
    case ExprKind::Unary: return apply_unary(e->op, eval_expr(e->args[0], s, ghost_cells));
    case ExprKind::Binary: {
      // Boolean connectives short-circuit so that guarded partial terms work.
      if (e->op == Op::And || e->op == Op::Or || e->op == Op::Implies) {
        bool l = eval_expr(e->args[0], s, ghost_cells).as_bool();
        if (e->op == Op::And && !l) return Value::boolean(false);
        if (e->op == Op::Or && l) return Value::boolean(true);
        if (e->op == Op::Implies && !l) return Value::boolean(true);
        return Value::boolean(eval_expr(e->args[1], s, ghost_cells).as_bool());
      }
      return apply_binary(e->op, eval_expr(e->args[0], s, ghost_cells), eval_expr(e->args[1], s, ghost_cells));
    }
  }
  throw EvalError("malformed expression");
}

}  // namespace refine
