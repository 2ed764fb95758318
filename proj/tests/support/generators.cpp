#include "generators.hpp"

#include "refine/parser.hpp"

namespace refine::testing {

namespace {

const std::vector<std::string> kIntVars = {"x", "y", "z"};
const std::vector<std::string> kAddrVars = {"p", "q"};

}  // namespace

ExprPtr ProgramGen::int_expr(int depth) {
  std::size_t n = depth <= 0 ? 3 : 8;
  switch (pick(n)) {
    case 0: return e_int(static_cast<std::int64_t>(pick(6)));
    case 1: return e_var(kIntVars[pick(kIntVars.size())]);
    case 2: return e_ghost("count");
    case 3: return e_binary(Op::Add, int_expr(depth - 1), int_expr(depth - 1));
    case 4: return e_binary(Op::Sub, int_expr(depth - 1), int_expr(depth - 1));
    case 5: return e_binary(Op::Mul, int_expr(depth - 1), int_expr(depth - 1));
    case 6: return e_unary(Op::Neg, int_expr(depth - 1));
    default: return e_unary(Op::Len, seq_expr(depth - 1));
  }
}

ExprPtr ProgramGen::bool_expr(int depth) {
  std::size_t n = depth <= 0 ? 2 : 7;
  switch (pick(n)) {
    case 0: return e_bool(pick(2) == 0);
    case 1: return e_binary(Op::Eq, int_expr(0), int_expr(0));
    case 2: return e_binary(Op::Lt, int_expr(depth - 1), int_expr(depth - 1));
    case 3: return e_binary(Op::Le, int_expr(depth - 1), int_expr(depth - 1));
    case 4: return e_unary(Op::Not, bool_expr(depth - 1));
    case 5: return e_binary(Op::And, bool_expr(depth - 1), bool_expr(depth - 1));
    default: return e_binary(Op::Or, bool_expr(depth - 1), bool_expr(depth - 1));
  }
}

ExprPtr ProgramGen::seq_expr(int depth) {
  if (depth <= 0 || pick(2) == 0) {
    std::vector<ExprPtr> items;
    for (std::size_t i = pick(3); i > 0; --i) items.push_back(int_expr(0));
    return e_seq(std::move(items));
  }
  return e_binary(Op::Concat, seq_expr(depth - 1), seq_expr(depth - 1));
}

AssertionPtr ProgramGen::annotation() {
  static const std::vector<std::string> texts = {"emp", "x == 0", "exists v. p |-> v", "count |->[1/2] _ ** x < 3",
                                                 "true && (y == 1 || z == 2)"};
  ParseContext ctx;
  ctx.ghosts = {kStdOut, "count"};
  return parse_assertion(texts[pick(texts.size())], ctx);
}

CommandPtr ProgramGen::command(int depth) { return command(depth, false); }

CommandPtr ProgramGen::command(int depth, bool in_lock) {
  std::size_t n = depth <= 0 ? 9 : 16;
  const auto& x = kIntVars[pick(kIntVars.size())];
  const auto& p = kAddrVars[pick(kAddrVars.size())];
  switch (pick(n)) {
    case 0: return c_skip();
    case 1: return c_assign(x, int_expr(2));
    case 2: return c_write(e_var(p), int_expr(1));
    case 3: return c_read(x, e_var(p));
    case 4: return c_alloc(p, int_expr(1));
    case 5: return c_free(e_var(p));
    case 6: return c_print(int_expr(1));
    case 7: return c_ghost_assign("count", int_expr(1));
    case 8: return c_next(c_seq(c_print(int_expr(0)), c_ghost_assign("count", int_expr(1))));
    case 9:
    case 10: return c_seq(command(depth - 1, in_lock), command(depth - 1, in_lock));
    case 11: return c_ite(bool_expr(1), command(depth - 1, in_lock), command(depth - 1, in_lock));
    case 12: return c_while(bool_expr(1), command(depth - 1, in_lock), pick(2) ? annotation() : nullptr);
    case 13: return c_par(command(depth - 1, in_lock), command(depth - 1, in_lock));
    case 14:
      if (in_lock) return c_with("L", bool_expr(0), command(depth - 1, true));
      return c_lock("L", command(depth - 1, true), pick(2) ? annotation() : nullptr);
    default: return c_init(command(depth - 1, in_lock), pick(2) ? annotation() : nullptr);
  }
}

Program ProgramGen::program(int depth) {
  Program prog;
  prog.ghosts = {{kStdOut, Type::Seq}, {"count", Type::Int}};
  prog.requires_ = pick(2) ? annotation() : nullptr;
  prog.body = command(depth);
  return prog;
}

}  // namespace refine::testing
