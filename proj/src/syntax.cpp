#include "refine/syntax.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace refine {

// ---------------------------------------------------------------------------
// Expression construction
// ---------------------------------------------------------------------------

namespace {

ExprPtr make_expr(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

int op_prec(Op op) {
  switch (op) {
    case Op::Implies: return 1;
    case Op::Or: return 2;
    case Op::And: return 3;
    case Op::Eq: case Op::Ne: case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: return 4;
    case Op::Append: return 5;
    case Op::Concat: return 6;
    case Op::Add: case Op::Sub: return 7;
    case Op::Mul: return 8;
    case Op::Neg: case Op::Not: return 9;
    case Op::Len: case Op::Index: return 10;
  }
  return 10;
}

enum class Assoc { Left, Right, None };

Assoc op_assoc(Op op) {
  switch (op) {
    case Op::Implies: case Op::Append: return Assoc::Right;
    case Op::Eq: case Op::Ne: case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: return Assoc::None;
    default: return Assoc::Left;
  }
}

const char* op_symbol(Op op) {
  switch (op) {
    case Op::Neg: return "-";
    case Op::Not: return "!";
    case Op::Len: return "len";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::And: return "&&";
    case Op::Or: return "||";
    case Op::Implies: return "==>";
    case Op::Append: return ":";
    case Op::Concat: return "++";
    case Op::Index: return "[]";
  }
  return "?";
}

int expr_prec(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Unary: return op_prec(e->op);
    case ExprKind::Binary: return op_prec(e->op);
    case ExprKind::Const:
      if (e->value.is_int() && e->value.as_int() < 0) return 9;
      return 11;
    default: return 11;
  }
}

}  // namespace

ExprPtr e_const(Value v) {
  Expr e;
  e.kind = ExprKind::Const;
  e.value = std::move(v);
  return make_expr(std::move(e));
}
ExprPtr e_int(std::int64_t v) { return e_const(Value::integer(v)); }
ExprPtr e_bool(bool v) { return e_const(Value::boolean(v)); }
ExprPtr e_var(std::string name) {
  Expr e;
  e.kind = ExprKind::Var;
  e.name = std::move(name);
  return make_expr(std::move(e));
}
ExprPtr e_ghost(std::string name) {
  Expr e;
  e.kind = ExprKind::Ghost;
  e.name = std::move(name);
  return make_expr(std::move(e));
}
ExprPtr e_seq(std::vector<ExprPtr> items) {
  Expr e;
  e.kind = ExprKind::SeqLit;
  e.args = std::move(items);
  return make_expr(std::move(e));
}
ExprPtr e_unary(Op op, ExprPtr a) {
  Expr e;
  e.kind = ExprKind::Unary;
  e.op = op;
  e.args = {std::move(a)};
  return make_expr(std::move(e));
}
ExprPtr e_binary(Op op, ExprPtr a, ExprPtr b) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.op = op;
  e.args = {std::move(a), std::move(b)};
  return make_expr(std::move(e));
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::Const: return a->value == b->value;
    case ExprKind::Var:
    case ExprKind::Ghost: return a->name == b->name;
    case ExprKind::Unary:
    case ExprKind::Binary:
      if (a->op != b->op) return false;
      [[fallthrough]];
    case ExprKind::SeqLit:
      if (a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (!expr_equal(a->args[i], b->args[i])) return false;
      }
      return true;
  }
  return false;
}

std::size_t expr_hash(const ExprPtr& e) {
  if (!e) return 0;
  std::size_t seed = static_cast<std::size_t>(e->kind) * 31 + static_cast<std::size_t>(e->op);
  switch (e->kind) {
    case ExprKind::Const: hash_combine(seed, e->value.hash()); break;
    case ExprKind::Var:
    case ExprKind::Ghost: hash_combine(seed, std::hash<std::string>{}(e->name)); break;
    default:
      for (const auto& a : e->args) hash_combine(seed, expr_hash(a));
  }
  return seed;
}

std::string expr_to_string(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Const: {
      const Value& v = e->value;
      if (v.is_addr() && !v.as_addr().is_ghost()) return "addr(" + std::to_string(v.as_addr().index) + ")";
      return v.to_string();
    }
    case ExprKind::Var:
    case ExprKind::Ghost: return e->name;
    case ExprKind::SeqLit: {
      std::string out = "[";
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        if (i) out += ", ";
        out += expr_to_string(e->args[i]);
      }
      return out + "]";
    }
    case ExprKind::Unary: {
      const auto& a = e->args[0];
      if (e->op == Op::Len) return "len(" + expr_to_string(a) + ")";
      bool atomic = a->kind == ExprKind::Var || a->kind == ExprKind::Ghost;
      if (a->kind == ExprKind::Const && !(e->op == Op::Neg && a->value.is_int())) atomic = true;
      if (a->kind == ExprKind::Const && a->value.is_int() && a->value.as_int() < 0) atomic = false;
      std::string inner = expr_to_string(a);
      return std::string(op_symbol(e->op)) + (atomic ? inner : "(" + inner + ")");
    }
    case ExprKind::Binary: {
      const auto& l = e->args[0];
      const auto& r = e->args[1];
      if (e->op == Op::Index) {
        std::string base = expr_to_string(l);
        if (expr_prec(l) < 10) base = "(" + base + ")";
        return base + "[" + expr_to_string(r) + "]";
      }
      int p = op_prec(e->op);
      Assoc as = op_assoc(e->op);
      int lp = expr_prec(l);
      int rp = expr_prec(r);
      bool lparen = lp < p || (lp == p && as != Assoc::Left);
      bool rparen = rp < p || (rp == p && as != Assoc::Right);
      std::string ls = expr_to_string(l);
      std::string rs = expr_to_string(r);
      if (lparen) ls = "(" + ls + ")";
      if (rparen) rs = "(" + rs + ")";
      return ls + " " + op_symbol(e->op) + " " + rs;
    }
  }
  return "?";
}

std::set<std::string> expr_vars(const ExprPtr& e) {
  std::set<std::string> out;
  std::function<void(const ExprPtr&)> go = [&](const ExprPtr& x) {
    if (x->kind == ExprKind::Var) out.insert(x->name);
    for (const auto& a : x->args) go(a);
  };
  if (e) go(e);
  return out;
}

std::set<std::string> expr_ghosts(const ExprPtr& e) {
  std::set<std::string> out;
  std::function<void(const ExprPtr&)> go = [&](const ExprPtr& x) {
    if (x->kind == ExprKind::Ghost) out.insert(x->name);
    for (const auto& a : x->args) go(a);
  };
  if (e) go(e);
  return out;
}

ExprPtr expr_subst(const ExprPtr& e, const std::string& var, const ExprPtr& by) {
  if (e->kind == ExprKind::Var) return e->name == var ? by : e;
  if (e->args.empty()) return e;
  bool changed = false;
  std::vector<ExprPtr> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) {
    args.push_back(expr_subst(a, var, by));
    changed |= args.back() != a;
  }
  if (!changed) return e;
  Expr copy = *e;
  copy.args = std::move(args);
  return make_expr(std::move(copy));
}

ExprPtr expr_rename(const ExprPtr& e, const std::map<std::string, std::string>& ren) {
  if (e->kind == ExprKind::Var) {
    auto it = ren.find(e->name);
    return it == ren.end() ? e : e_var(it->second);
  }
  if (e->args.empty()) return e;
  bool changed = false;
  std::vector<ExprPtr> args;
  for (const auto& a : e->args) {
    args.push_back(expr_rename(a, ren));
    changed |= args.back() != a;
  }
  if (!changed) return e;
  Expr copy = *e;
  copy.args = std::move(args);
  return make_expr(std::move(copy));
}

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------

namespace {

AssertionPtr make_assertion(Assertion a) { return std::make_shared<const Assertion>(std::move(a)); }

AssertionPtr node(AKind k, std::vector<AssertionPtr> parts) {
  Assertion a;
  a.kind = k;
  a.parts = std::move(parts);
  return make_assertion(std::move(a));
}

}  // namespace

AssertionPtr a_pure(ExprPtr e) {
  Assertion a;
  a.kind = AKind::Pure;
  a.expr = std::move(e);
  return make_assertion(std::move(a));
}
AssertionPtr a_true() { return a_pure(e_bool(true)); }
AssertionPtr a_false() { return a_pure(e_bool(false)); }
AssertionPtr a_emp() { return node(AKind::Emp, {}); }
AssertionPtr a_pts(ExprPtr addr, Perm perm, ExprPtr val) {
  Assertion a;
  a.kind = AKind::PointsTo;
  a.addr = std::move(addr);
  a.val = std::move(val);
  a.perm = perm;
  return make_assertion(std::move(a));
}
AssertionPtr a_and(AssertionPtr a, AssertionPtr b) { return node(AKind::And, {std::move(a), std::move(b)}); }
AssertionPtr a_not(AssertionPtr a) { return node(AKind::Not, {std::move(a)}); }
AssertionPtr a_or(AssertionPtr a, AssertionPtr b) { return a_not(a_and(a_not(std::move(a)), a_not(std::move(b)))); }
AssertionPtr a_implies(AssertionPtr a, AssertionPtr b) { return a_not(a_and(std::move(a), a_not(std::move(b)))); }
AssertionPtr a_forall(std::string var, AssertionPtr body, Type t) {
  Assertion a;
  a.kind = AKind::Forall;
  a.var = std::move(var);
  a.var_type = t;
  a.parts = {std::move(body)};
  return make_assertion(std::move(a));
}
AssertionPtr a_exists(std::string var, AssertionPtr body, Type t) {
  Assertion a;
  a.kind = AKind::Exists;
  a.var = std::move(var);
  a.var_type = t;
  a.parts = {std::move(body)};
  return make_assertion(std::move(a));
}
AssertionPtr a_sep(AssertionPtr a, AssertionPtr b) { return node(AKind::Sep, {std::move(a), std::move(b)}); }
AssertionPtr a_wand(AssertionPtr a, AssertionPtr b) { return node(AKind::Wand, {std::move(a), std::move(b)}); }
AssertionPtr a_iter_sep(std::vector<AssertionPtr> parts) { return node(AKind::IterSep, std::move(parts)); }
AssertionPtr a_apt(ExprPtr addr, Perm perm, ExprPtr val) {
  return a_sep(a_pts(std::move(addr), perm, std::move(val)), a_true());
}
AssertionPtr a_acc(ExprPtr addr, Perm perm) {
  std::string y = fresh_name("y", expr_vars(addr));
  return a_exists(y, a_apt(std::move(addr), perm, e_var(y)));
}
AssertionPtr a_and_all(const std::vector<AssertionPtr>& parts) {
  if (parts.empty()) return a_true();
  AssertionPtr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = a_and(acc, parts[i]);
  return acc;
}
AssertionPtr a_sep_all(const std::vector<AssertionPtr>& parts) {
  if (parts.empty()) return a_emp();
  AssertionPtr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = a_sep(acc, parts[i]);
  return acc;
}

bool match_or(const AssertionPtr& a, AssertionPtr* l, AssertionPtr* r) {
  if (a->kind != AKind::Not) return false;
  const auto& inner = a->parts[0];
  if (inner->kind != AKind::And) return false;
  if (inner->parts[0]->kind != AKind::Not || inner->parts[1]->kind != AKind::Not) return false;
  if (l) *l = inner->parts[0]->parts[0];
  if (r) *r = inner->parts[1]->parts[0];
  return true;
}

bool match_implies(const AssertionPtr& a, AssertionPtr* l, AssertionPtr* r) {
  if (a->kind != AKind::Not) return false;
  const auto& inner = a->parts[0];
  if (inner->kind != AKind::And) return false;
  if (inner->parts[1]->kind != AKind::Not) return false;
  if (l) *l = inner->parts[0];
  if (r) *r = inner->parts[1]->parts[0];
  return true;
}

bool assertion_equal(const AssertionPtr& a, const AssertionPtr& b) {
  if (a == b) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case AKind::Pure: return expr_equal(a->expr, b->expr);
    case AKind::Emp: return true;
    case AKind::PointsTo:
      return a->perm == b->perm && expr_equal(a->addr, b->addr) && expr_equal(a->val, b->val);
    case AKind::Forall:
    case AKind::Exists:
      if (a->var != b->var || a->var_type != b->var_type) return false;
      [[fallthrough]];
    default:
      if (a->parts.size() != b->parts.size()) return false;
      for (std::size_t i = 0; i < a->parts.size(); ++i) {
        if (!assertion_equal(a->parts[i], b->parts[i])) return false;
      }
      return true;
  }
}

AssertionPtr lift_pure(const AssertionPtr& a) {
  switch (a->kind) {
    case AKind::Pure: {
      const auto& e = a->expr;
      if (e->kind == ExprKind::Unary && e->op == Op::Not) return a_not(lift_pure(a_pure(e->args[0])));
      if (e->kind == ExprKind::Binary) {
        auto l = [&] { return lift_pure(a_pure(e->args[0])); };
        auto r = [&] { return lift_pure(a_pure(e->args[1])); };
        if (e->op == Op::And) return a_and(l(), r());
        if (e->op == Op::Or) return a_or(l(), r());
        if (e->op == Op::Implies) return a_implies(l(), r());
      }
      return a;
    }
    case AKind::Emp:
    case AKind::PointsTo: return a;
    default: {
      bool changed = false;
      std::vector<AssertionPtr> parts;
      for (const auto& p : a->parts) {
        parts.push_back(lift_pure(p));
        changed |= parts.back() != p;
      }
      if (!changed) return a;
      Assertion copy = *a;
      copy.parts = std::move(parts);
      return make_assertion(std::move(copy));
    }
  }
}

namespace {

using BoundMap = std::map<std::string, int>;

bool alpha_expr(const ExprPtr& a, const ExprPtr& b, const BoundMap& ba, const BoundMap& bb) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::Const: return a->value == b->value;
    case ExprKind::Ghost: return a->name == b->name;
    case ExprKind::Var: {
      auto ia = ba.find(a->name);
      auto ib = bb.find(b->name);
      if (ia == ba.end() && ib == bb.end()) return a->name == b->name;
      if (ia == ba.end() || ib == bb.end()) return false;
      return ia->second == ib->second;
    }
    case ExprKind::Unary:
    case ExprKind::Binary:
      if (a->op != b->op) return false;
      [[fallthrough]];
    case ExprKind::SeqLit:
      if (a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (!alpha_expr(a->args[i], b->args[i], ba, bb)) return false;
      }
      return true;
  }
  return false;
}

bool alpha_rec(const AssertionPtr& a, const AssertionPtr& b, BoundMap& ba, BoundMap& bb, int depth) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case AKind::Pure: return alpha_expr(a->expr, b->expr, ba, bb);
    case AKind::Emp: return true;
    case AKind::PointsTo:
      return a->perm == b->perm && alpha_expr(a->addr, b->addr, ba, bb) &&
             alpha_expr(a->val, b->val, ba, bb);
    case AKind::Forall:
    case AKind::Exists: {
      auto sa = ba.find(a->var);
      std::optional<int> olda = sa == ba.end() ? std::nullopt : std::optional<int>(sa->second);
      auto sb = bb.find(b->var);
      std::optional<int> oldb = sb == bb.end() ? std::nullopt : std::optional<int>(sb->second);
      ba[a->var] = depth;
      bb[b->var] = depth;
      bool ok = alpha_rec(a->parts[0], b->parts[0], ba, bb, depth + 1);
      if (olda) ba[a->var] = *olda; else ba.erase(a->var);
      if (oldb) bb[b->var] = *oldb; else bb.erase(b->var);
      return ok;
    }
    default:
      if (a->parts.size() != b->parts.size()) return false;
      for (std::size_t i = 0; i < a->parts.size(); ++i) {
        if (!alpha_rec(a->parts[i], b->parts[i], ba, bb, depth)) return false;
      }
      return true;
  }
}

}  // namespace

bool alpha_equal(const AssertionPtr& a, const AssertionPtr& b) {
  if (a == b) return true;
  BoundMap ba, bb;
  return alpha_rec(lift_pure(a), lift_pure(b), ba, bb, 0);
}

namespace {

// Assertion-level precedence: quantifiers 0, implies 1, or 2, and 3, wand 4,
// sep 5, not 6, atoms 7.
int a_prec(const AssertionPtr& a) {
  if (match_or(a, nullptr, nullptr)) return 2;
  if (match_implies(a, nullptr, nullptr)) return 1;
  switch (a->kind) {
    case AKind::Forall:
    case AKind::Exists: return 0;
    case AKind::And: return 3;
    case AKind::Wand: return 4;
    case AKind::Sep: return 5;
    case AKind::Not: return 6;
    default: return 7;
  }
}

std::string a_str(const AssertionPtr& a);

std::string a_wrap(const AssertionPtr& a, bool paren) {
  std::string s = a_str(a);
  return paren ? "(" + s + ")" : s;
}

std::string a_binary(const AssertionPtr& l, const AssertionPtr& r, int p, const char* sym, bool right_assoc) {
  int lp = a_prec(l);
  int rp = a_prec(r);
  bool lparen = lp < p || (lp == p && right_assoc);
  bool rparen = rp < p || (rp == p && !right_assoc);
  return a_wrap(l, lparen) + " " + sym + " " + a_wrap(r, rparen);
}

std::string arith_operand(const ExprPtr& e) {
  std::string s = expr_to_string(e);
  return expr_prec(e) < 5 ? "(" + s + ")" : s;
}

std::string a_str(const AssertionPtr& a) {
  AssertionPtr l, r;
  if (match_or(a, &l, &r)) return a_binary(l, r, 2, "||", false);
  if (match_implies(a, &l, &r)) return a_binary(l, r, 1, "==>", true);
  switch (a->kind) {
    case AKind::Pure: {
      std::string s = expr_to_string(a->expr);
      return expr_prec(a->expr) <= 3 ? "(" + s + ")" : s;
    }
    case AKind::Emp: return "emp";
    case AKind::PointsTo: {
      std::string out = arith_operand(a->addr) + " |->";
      if (a->perm != Perm(1)) out += "[" + perm_to_string(a->perm) + "]";
      return out + " " + arith_operand(a->val);
    }
    case AKind::And: return a_binary(a->parts[0], a->parts[1], 3, "&&", false);
    case AKind::Sep: return a_binary(a->parts[0], a->parts[1], 5, "**", false);
    case AKind::Wand: return a_binary(a->parts[0], a->parts[1], 4, "--*", true);
    case AKind::Not: return "!" + a_wrap(a->parts[0], a_prec(a->parts[0]) < 6);
    case AKind::Forall:
    case AKind::Exists: {
      std::string out = a->kind == AKind::Forall ? "forall " : "exists ";
      out += a->var;
      if (a->var_type != Type::Unknown) out += std::string(": ") + type_name(a->var_type);
      return out + ". " + a_str(a->parts[0]);
    }
    case AKind::IterSep: {
      std::string out = "bigsep(";
      for (std::size_t i = 0; i < a->parts.size(); ++i) {
        if (i) out += ", ";
        out += a_str(a->parts[i]);
      }
      return out + ")";
    }
  }
  return "?";
}

}  // namespace

std::string assertion_to_string(const AssertionPtr& a) { return a_str(a); }

std::set<std::string> free_vars(const AssertionPtr& a) {
  std::set<std::string> out;
  switch (a->kind) {
    case AKind::Pure: return expr_vars(a->expr);
    case AKind::Emp: return out;
    case AKind::PointsTo: {
      out = expr_vars(a->addr);
      auto v = expr_vars(a->val);
      out.insert(v.begin(), v.end());
      return out;
    }
    case AKind::Forall:
    case AKind::Exists:
      out = free_vars(a->parts[0]);
      out.erase(a->var);
      return out;
    default:
      for (const auto& p : a->parts) {
        auto s = free_vars(p);
        out.insert(s.begin(), s.end());
      }
      return out;
  }
}

std::set<std::string> all_vars(const AssertionPtr& a) {
  std::set<std::string> out;
  switch (a->kind) {
    case AKind::Pure: return expr_vars(a->expr);
    case AKind::Emp: return out;
    case AKind::PointsTo: {
      out = expr_vars(a->addr);
      auto v = expr_vars(a->val);
      out.insert(v.begin(), v.end());
      return out;
    }
    default:
      if (a->kind == AKind::Forall || a->kind == AKind::Exists) out.insert(a->var);
      for (const auto& p : a->parts) {
        auto s = all_vars(p);
        out.insert(s.begin(), s.end());
      }
      return out;
  }
}

std::set<std::string> assertion_ghosts(const AssertionPtr& a) {
  std::set<std::string> out;
  switch (a->kind) {
    case AKind::Pure: return expr_ghosts(a->expr);
    case AKind::Emp: return out;
    case AKind::PointsTo: {
      out = expr_ghosts(a->addr);
      auto v = expr_ghosts(a->val);
      out.insert(v.begin(), v.end());
      return out;
    }
    default:
      for (const auto& p : a->parts) {
        auto s = assertion_ghosts(p);
        out.insert(s.begin(), s.end());
      }
      return out;
  }
}

std::set<Perm> assertion_perms(const AssertionPtr& a) {
  std::set<Perm> out;
  if (a->kind == AKind::PointsTo) out.insert(a->perm);
  for (const auto& p : a->parts) {
    auto s = assertion_perms(p);
    out.insert(s.begin(), s.end());
  }
  return out;
}

bool is_fol(const AssertionPtr& a) {
  switch (a->kind) {
    case AKind::Pure: return true;
    case AKind::And:
    case AKind::Not:
    case AKind::Forall:
    case AKind::Exists:
      return std::all_of(a->parts.begin(), a->parts.end(), [](const auto& p) { return is_fol(p); });
    default: return false;
  }
}

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  std::string candidate = base;
  if (!avoid.count(candidate)) return candidate;
  for (int primes = 1; primes <= 2; ++primes) {
    candidate += "'";
    if (!avoid.count(candidate)) return candidate;
  }
  for (int i = 1;; ++i) {
    candidate = base + "_" + std::to_string(i);
    if (!avoid.count(candidate)) return candidate;
  }
}

AssertionPtr substitute_all(const AssertionPtr& a, const std::map<std::string, ExprPtr>& subst) {
  if (subst.empty()) return a;
  auto sub_expr = [&](const ExprPtr& e) {
    ExprPtr out = e;
    // Simultaneous substitution: rename through placeholders is unnecessary
    // because replacement expressions are not re-traversed.
    std::function<ExprPtr(const ExprPtr&)> go = [&](const ExprPtr& x) -> ExprPtr {
      if (x->kind == ExprKind::Var) {
        auto it = subst.find(x->name);
        return it == subst.end() ? x : it->second;
      }
      if (x->args.empty()) return x;
      bool changed = false;
      std::vector<ExprPtr> args;
      for (const auto& c : x->args) {
        args.push_back(go(c));
        changed |= args.back() != c;
      }
      if (!changed) return x;
      Expr copy = *x;
      copy.args = std::move(args);
      return make_expr(std::move(copy));
    };
    return go(out);
  };
  switch (a->kind) {
    case AKind::Pure: return a_pure(sub_expr(a->expr));
    case AKind::Emp: return a;
    case AKind::PointsTo: return a_pts(sub_expr(a->addr), a->perm, sub_expr(a->val));
    case AKind::Forall:
    case AKind::Exists: {
      std::map<std::string, ExprPtr> inner = subst;
      inner.erase(a->var);
      if (inner.empty()) return a;
      auto body_fv = free_vars(a->parts[0]);
      std::set<std::string> incoming;
      bool relevant = false;
      for (const auto& [v, e] : inner) {
        if (body_fv.count(v)) {
          relevant = true;
          auto fv = expr_vars(e);
          incoming.insert(fv.begin(), fv.end());
        }
      }
      if (!relevant) return a;
      std::string bound = a->var;
      AssertionPtr body = a->parts[0];
      if (incoming.count(bound)) {
        std::set<std::string> avoid = incoming;
        avoid.insert(body_fv.begin(), body_fv.end());
        auto av = all_vars(body);
        avoid.insert(av.begin(), av.end());
        for (const auto& [v, e] : inner) avoid.insert(v);
        std::string renamed = fresh_name(bound, avoid);
        body = substitute_all(body, {{bound, e_var(renamed)}});
        bound = renamed;
      }
      body = substitute_all(body, inner);
      return a->kind == AKind::Forall ? a_forall(bound, body, a->var_type) : a_exists(bound, body, a->var_type);
    }
    default: {
      std::vector<AssertionPtr> parts;
      for (const auto& p : a->parts) parts.push_back(substitute_all(p, subst));
      Assertion copy = *a;
      copy.parts = std::move(parts);
      return make_assertion(std::move(copy));
    }
  }
}

AssertionPtr substitute(const AssertionPtr& a, const std::string& var, const ExprPtr& by) {
  return substitute_all(a, {{var, by}});
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

const char* cmd_kind_name(CmdKind k) {
  switch (k) {
    case CmdKind::Skip: return "skip";
    case CmdKind::Assign: return "assign";
    case CmdKind::Write: return "write";
    case CmdKind::Read: return "read";
    case CmdKind::Free: return "free";
    case CmdKind::Alloc: return "alloc";
    case CmdKind::Seq: return "seq";
    case CmdKind::Ite: return "ite";
    case CmdKind::While: return "while";
    case CmdKind::Par: return "par";
    case CmdKind::LockDecl: return "lock";
    case CmdKind::With: return "with";
    case CmdKind::Within: return "within";
    case CmdKind::Print: return "print";
    case CmdKind::Init: return "init";
    case CmdKind::Next: return "next";
    case CmdKind::GhostAssign: return "ghost";
  }
  return "?";
}

namespace {

CommandPtr finish(Command c) {
  std::size_t seed = static_cast<std::size_t>(c.kind) + 0x51;
  hash_combine(seed, std::hash<std::string>{}(c.name));
  hash_combine(seed, expr_hash(c.e1));
  hash_combine(seed, expr_hash(c.e2));
  hash_combine(seed, c.c1 ? c.c1->hash : 7);
  hash_combine(seed, c.c2 ? c.c2->hash : 11);
  c.hash = seed;
  return std::make_shared<const Command>(std::move(c));
}

Command base(CmdKind k) {
  Command c;
  c.kind = k;
  return c;
}

}  // namespace

CommandPtr c_skip() {
  static const CommandPtr skip = finish(base(CmdKind::Skip));
  return skip;
}
CommandPtr c_assign(std::string x, ExprPtr e) {
  Command c = base(CmdKind::Assign);
  c.name = std::move(x);
  c.e1 = std::move(e);
  return finish(std::move(c));
}
CommandPtr c_write(ExprPtr addr, ExprPtr val) {
  Command c = base(CmdKind::Write);
  c.e1 = std::move(addr);
  c.e2 = std::move(val);
  return finish(std::move(c));
}
CommandPtr c_read(std::string x, ExprPtr addr) {
  Command c = base(CmdKind::Read);
  c.name = std::move(x);
  c.e1 = std::move(addr);
  return finish(std::move(c));
}
CommandPtr c_free(ExprPtr addr) {
  Command c = base(CmdKind::Free);
  c.e1 = std::move(addr);
  return finish(std::move(c));
}
CommandPtr c_alloc(std::string x, ExprPtr e) {
  Command c = base(CmdKind::Alloc);
  c.name = std::move(x);
  c.e1 = std::move(e);
  return finish(std::move(c));
}
CommandPtr c_seq(CommandPtr a, CommandPtr b) {
  Command c = base(CmdKind::Seq);
  c.c1 = std::move(a);
  c.c2 = std::move(b);
  return finish(std::move(c));
}
CommandPtr c_ite(ExprPtr cond, CommandPtr a, CommandPtr b) {
  Command c = base(CmdKind::Ite);
  c.e1 = std::move(cond);
  c.c1 = std::move(a);
  c.c2 = std::move(b);
  return finish(std::move(c));
}
CommandPtr c_while(ExprPtr cond, CommandPtr body, AssertionPtr inv) {
  Command c = base(CmdKind::While);
  c.e1 = std::move(cond);
  c.c1 = std::move(body);
  c.inv = std::move(inv);
  return finish(std::move(c));
}
CommandPtr c_par(CommandPtr a, CommandPtr b) {
  Command c = base(CmdKind::Par);
  c.c1 = std::move(a);
  c.c2 = std::move(b);
  return finish(std::move(c));
}
CommandPtr c_lock(std::string lock, CommandPtr body, AssertionPtr inv) {
  Command c = base(CmdKind::LockDecl);
  c.name = std::move(lock);
  c.c1 = std::move(body);
  c.inv = std::move(inv);
  return finish(std::move(c));
}
CommandPtr c_with(std::string lock, ExprPtr cond, CommandPtr body) {
  Command c = base(CmdKind::With);
  c.name = std::move(lock);
  c.e1 = std::move(cond);
  c.c1 = std::move(body);
  return finish(std::move(c));
}
CommandPtr c_within(std::string lock, CommandPtr body) {
  Command c = base(CmdKind::Within);
  c.name = std::move(lock);
  c.c1 = std::move(body);
  return finish(std::move(c));
}
CommandPtr c_print(ExprPtr e) {
  Command c = base(CmdKind::Print);
  c.e1 = std::move(e);
  return finish(std::move(c));
}
CommandPtr c_init(CommandPtr body, AssertionPtr inv) {
  Command c = base(CmdKind::Init);
  c.c1 = std::move(body);
  c.inv = std::move(inv);
  return finish(std::move(c));
}
CommandPtr c_next(CommandPtr body) {
  Command c = base(CmdKind::Next);
  c.c1 = std::move(body);
  return finish(std::move(c));
}
CommandPtr c_ghost_assign(std::string ghost, ExprPtr e) {
  Command c = base(CmdKind::GhostAssign);
  c.name = std::move(ghost);
  c.e1 = std::move(e);
  return finish(std::move(c));
}
CommandPtr with_pos(CommandPtr c, SourcePos pos) {
  Command copy = *c;
  copy.pos = pos;
  return std::make_shared<const Command>(std::move(copy));
}

bool command_equal(const CommandPtr& a, const CommandPtr& b, bool with_annotations) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->kind != b->kind || a->name != b->name) return false;
  auto eq_e = [](const ExprPtr& x, const ExprPtr& y) { return (!x && !y) || (x && y && expr_equal(x, y)); };
  if (!eq_e(a->e1, b->e1) || !eq_e(a->e2, b->e2)) return false;
  if (with_annotations) {
    if (bool(a->inv) != bool(b->inv)) return false;
    if (a->inv && !assertion_equal(a->inv, b->inv)) return false;
  }
  return command_equal(a->c1, b->c1, with_annotations) && command_equal(a->c2, b->c2, with_annotations);
}

namespace {

void print_cmd(std::ostringstream& out, const CommandPtr& c, int indent);

std::string pad(int n) { return std::string(static_cast<std::size_t>(std::max(n, 0)), ' '); }

void print_block(std::ostringstream& out, const CommandPtr& c, int indent) {
  out << "{\n";
  print_cmd(out, c, indent + 2);
  out << "\n" << pad(indent) << "}";
}

void print_cmd(std::ostringstream& out, const CommandPtr& c, int indent) {
  out << pad(indent);
  switch (c->kind) {
    case CmdKind::Skip: out << "skip"; return;
    case CmdKind::Assign: out << c->name << " := " << expr_to_string(c->e1); return;
    case CmdKind::Write: out << "[" << expr_to_string(c->e1) << "] := " << expr_to_string(c->e2); return;
    case CmdKind::Read: out << c->name << " := [" << expr_to_string(c->e1) << "]"; return;
    case CmdKind::Free: out << "free(" << expr_to_string(c->e1) << ")"; return;
    case CmdKind::Alloc: out << "new(" << c->name << ", " << expr_to_string(c->e1) << ")"; return;
    case CmdKind::Print: out << "print(" << expr_to_string(c->e1) << ")"; return;
    case CmdKind::GhostAssign: out << "ghost " << c->name << " := " << expr_to_string(c->e1); return;
    case CmdKind::Seq: {
      std::ostringstream first;
      if (c->c1->kind == CmdKind::Seq) {
        first << "{\n";
        print_cmd(first, c->c1, indent + 2);
        first << "\n" << pad(indent) << "}";
        out << first.str();
      } else {
        std::ostringstream tmp;
        print_cmd(tmp, c->c1, indent);
        out << tmp.str().substr(static_cast<std::size_t>(indent));
      }
      out << ";\n" << pad(indent);
      std::ostringstream rest;
      print_cmd(rest, c->c2, indent);
      out << rest.str().substr(static_cast<std::size_t>(indent));
      return;
    }
    case CmdKind::Ite:
      out << "if " << expr_to_string(c->e1) << " ";
      print_block(out, c->c1, indent);
      out << " else ";
      print_block(out, c->c2, indent);
      return;
    case CmdKind::While:
      out << "while " << expr_to_string(c->e1) << " ";
      if (c->inv) out << "inv " << assertion_to_string(c->inv) << " ";
      print_block(out, c->c1, indent);
      return;
    case CmdKind::Par:
      out << "par ";
      print_block(out, c->c1, indent);
      out << " ";
      print_block(out, c->c2, indent);
      return;
    case CmdKind::LockDecl:
      out << "lock " << c->name << " ";
      if (c->inv) out << "inv " << assertion_to_string(c->inv) << " ";
      print_block(out, c->c1, indent);
      return;
    case CmdKind::With:
      out << "with " << c->name << " when " << expr_to_string(c->e1) << " ";
      print_block(out, c->c1, indent);
      return;
    case CmdKind::Within:
      out << "within " << c->name << " ";
      print_block(out, c->c1, indent);
      return;
    case CmdKind::Init:
      out << "init ";
      if (c->inv) out << "inv " << assertion_to_string(c->inv) << " ";
      print_block(out, c->c1, indent);
      return;
    case CmdKind::Next:
      out << "next ";
      print_block(out, c->c1, indent);
      return;
  }
}

void collect_vars(const CommandPtr& c, std::set<std::string>& out) {
  if (!c) return;
  switch (c->kind) {
    case CmdKind::Assign:
    case CmdKind::Read:
    case CmdKind::Alloc: out.insert(c->name); break;
    default: break;
  }
  for (const auto& e : {c->e1, c->e2}) {
    if (e) {
      auto v = expr_vars(e);
      out.insert(v.begin(), v.end());
    }
  }
  collect_vars(c->c1, out);
  collect_vars(c->c2, out);
}

void collect_mod(const CommandPtr& c, std::set<std::string>& out) {
  if (!c) return;
  if (c->kind == CmdKind::Assign || c->kind == CmdKind::Read || c->kind == CmdKind::Alloc) out.insert(c->name);
  collect_mod(c->c1, out);
  collect_mod(c->c2, out);
}

}  // namespace

std::string command_to_string(const CommandPtr& c, int indent) {
  std::ostringstream out;
  print_cmd(out, c, indent);
  return out.str();
}

std::set<std::string> command_vars(const CommandPtr& c) {
  std::set<std::string> out;
  collect_vars(c, out);
  return out;
}

std::set<std::string> mod_set(const CommandPtr& c) {
  std::set<std::string> out;
  collect_mod(c, out);
  return out;
}

std::set<std::string> command_ghosts(const CommandPtr& c) {
  std::set<std::string> out;
  command_any(c, [&](const Command& x) {
    if (x.kind == CmdKind::GhostAssign) out.insert(x.name);
    for (const auto& e : {x.e1, x.e2}) {
      if (e) {
        auto g = expr_ghosts(e);
        out.insert(g.begin(), g.end());
      }
    }
    return false;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

bool Program::is_ghost(const std::string& name) const {
  return std::any_of(ghosts.begin(), ghosts.end(), [&](const GhostDecl& g) { return g.name == name; });
}

Type Program::ghost_type(const std::string& name) const {
  for (const auto& g : ghosts) {
    if (g.name == name) return g.type;
  }
  return Type::Unknown;
}

std::string program_to_string(const Program& p) {
  std::ostringstream out;
  std::vector<std::string> decls;
  for (const auto& g : p.ghosts) {
    if (g.name == kStdOut) continue;
    decls.push_back(g.name + ": " + type_name(g.type));
  }
  if (!decls.empty()) {
    out << "ghost ";
    for (std::size_t i = 0; i < decls.size(); ++i) out << (i ? ", " : "") << decls[i];
    out << ";\n";
  }
  if (p.requires_) out << "requires " << assertion_to_string(p.requires_) << ";\n";
  if (p.ensures_) out << "ensures " << assertion_to_string(p.ensures_) << ";\n";
  out << command_to_string(p.body) << "\n";
  return out.str();
}

std::string ats_to_string(const AtsSpec& a) {
  std::ostringstream out;
  out << "vars ";
  for (std::size_t i = 0; i < a.vars.size(); ++i) {
    out << (i ? ", " : "") << a.vars[i] << ": " << type_name(a.types[i]);
  }
  out << ";\ninit: " << assertion_to_string(a.init) << ";\nnext: " << assertion_to_string(a.next) << ";\n";
  return out.str();
}

}  // namespace refine
