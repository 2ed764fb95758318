#include "refine/typing.hpp"

#include <functional>

namespace refine {

Type TypeEnv::var(const std::string& name) const {
  auto it = vars.find(name);
  return it == vars.end() ? Type::Unknown : it->second;
}

TypeEnv ghost_env(const Program& p) {
  TypeEnv env;
  for (const auto& g : p.ghosts) env.ghosts[g.name] = g.type;
  return env;
}

namespace {

class Unifier {
 public:
  explicit Unifier(const TypeEnv& env) : env_(env) {
    for (const auto& [name, t] : env.vars) {
      if (t != Type::Unknown) assign(var_slot(name), t, {});
    }
  }

  int fresh() {
    parent_.push_back(static_cast<int>(parent_.size()));
    type_.push_back(Type::Unknown);
    return parent_.back();
  }

  int constant(Type t) {
    int s = fresh();
    type_[static_cast<std::size_t>(s)] = t;
    return s;
  }

  int var_slot(const std::string& name) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (it->first == name) return it->second;
    }
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    int s = fresh();
    vars_[name] = s;
    return s;
  }

  int find(int s) {
    while (parent_[static_cast<std::size_t>(s)] != s) {
      auto& p = parent_[static_cast<std::size_t>(s)];
      p = parent_[static_cast<std::size_t>(p)];
      s = p;
    }
    return s;
  }

  void unify(int a, int b, SourcePos pos) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    Type ta = type_[static_cast<std::size_t>(a)];
    Type tb = type_[static_cast<std::size_t>(b)];
    if (ta != Type::Unknown && tb != Type::Unknown && ta != tb) {
      throw TypeCheckError(std::string("type mismatch: ") + type_name(ta) + " vs " + type_name(tb), pos);
    }
    parent_[static_cast<std::size_t>(b)] = a;
    if (ta == Type::Unknown) type_[static_cast<std::size_t>(a)] = tb;
  }

  void assign(int s, Type t, SourcePos pos) { unify(s, constant(t), pos); }

  Type resolve(int s) { return type_[static_cast<std::size_t>(find(s))]; }

  // ghost_reads: ghost names denote their cell contents (program code)
  // rather than their address (assertions).
  int expr(const ExprPtr& e, bool ghost_reads, SourcePos pos) {
    switch (e->kind) {
      case ExprKind::Const: return constant(e->value.type());
      case ExprKind::Var: return var_slot(e->name);
      case ExprKind::Ghost: {
        if (!ghost_reads) return constant(Type::Addr);
        auto it = env_.ghosts.find(e->name);
        return constant(it == env_.ghosts.end() ? Type::Int : it->second);
      }
      case ExprKind::SeqLit:
        for (const auto& a : e->args) assign(expr(a, ghost_reads, pos), Type::Int, pos);
        return constant(Type::Seq);
      case ExprKind::Unary: {
        int a = expr(e->args[0], ghost_reads, pos);
        switch (e->op) {
          case Op::Neg: assign(a, Type::Int, pos); return constant(Type::Int);
          case Op::Not: assign(a, Type::Bool, pos); return constant(Type::Bool);
          default: assign(a, Type::Seq, pos); return constant(Type::Int);
        }
      }
      case ExprKind::Binary: {
        int l = expr(e->args[0], ghost_reads, pos);
        int r = expr(e->args[1], ghost_reads, pos);
        switch (e->op) {
          case Op::Add: case Op::Sub: case Op::Mul:
            assign(l, Type::Int, pos);
            assign(r, Type::Int, pos);
            return constant(Type::Int);
          case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge:
            assign(l, Type::Int, pos);
            assign(r, Type::Int, pos);
            return constant(Type::Bool);
          case Op::Eq: case Op::Ne:
            unify(l, r, pos);
            return constant(Type::Bool);
          case Op::And: case Op::Or: case Op::Implies:
            assign(l, Type::Bool, pos);
            assign(r, Type::Bool, pos);
            return constant(Type::Bool);
          case Op::Append:
            assign(l, Type::Int, pos);
            assign(r, Type::Seq, pos);
            return constant(Type::Seq);
          case Op::Concat:
            assign(l, Type::Seq, pos);
            assign(r, Type::Seq, pos);
            return constant(Type::Seq);
          case Op::Index:
            assign(l, Type::Seq, pos);
            assign(r, Type::Int, pos);
            return constant(Type::Int);
          default: return fresh();
        }
      }
    }
    return fresh();
  }

  void assertion(const AssertionPtr& a, SourcePos pos) {
    switch (a->kind) {
      case AKind::Pure: assign(expr(a->expr, false, pos), Type::Bool, pos); return;
      case AKind::Emp: return;
      case AKind::PointsTo: {
        assign(expr(a->addr, false, pos), Type::Addr, pos);
        int v = expr(a->val, false, pos);
        if (a->addr->kind == ExprKind::Ghost) {
          auto it = env_.ghosts.find(a->addr->name);
          if (it != env_.ghosts.end()) assign(v, it->second, pos);
        }
        return;
      }
      case AKind::Forall:
      case AKind::Exists: {
        int s = fresh();
        if (a->var_type != Type::Unknown) assign(s, a->var_type, pos);
        binders_[a.get()] = s;
        scopes_.emplace_back(a->var, s);
        assertion(a->parts[0], pos);
        scopes_.pop_back();
        return;
      }
      default:
        for (const auto& p : a->parts) assertion(p, pos);
    }
  }

  AssertionPtr rebuild(const AssertionPtr& a) {
    if (a->kind == AKind::Pure || a->kind == AKind::Emp || a->kind == AKind::PointsTo) return a;
    Assertion copy = *a;
    bool changed = false;
    if (a->kind == AKind::Forall || a->kind == AKind::Exists) {
      auto it = binders_.find(a.get());
      if (it != binders_.end()) {
        Type t = resolve(it->second);
        if (t != copy.var_type) {
          copy.var_type = t;
          changed = true;
        }
      }
    }
    for (auto& p : copy.parts) {
      auto np = rebuild(p);
      changed |= np != p;
      p = np;
    }
    if (!changed) return a;
    return std::make_shared<const Assertion>(std::move(copy));
  }

  void command(const CommandPtr& c) {
    if (!c) return;
    SourcePos pos = c->pos;
    switch (c->kind) {
      case CmdKind::Assign: unify(var_slot(c->name), expr(c->e1, true, pos), pos); break;
      case CmdKind::Read:
        assign(expr(c->e1, true, pos), Type::Addr, pos);
        var_slot(c->name);
        break;
      case CmdKind::Write:
        assign(expr(c->e1, true, pos), Type::Addr, pos);
        expr(c->e2, true, pos);
        break;
      case CmdKind::Free: assign(expr(c->e1, true, pos), Type::Addr, pos); break;
      case CmdKind::Alloc:
        assign(var_slot(c->name), Type::Addr, pos);
        expr(c->e1, true, pos);
        break;
      case CmdKind::Ite:
      case CmdKind::While:
      case CmdKind::With: assign(expr(c->e1, true, pos), Type::Bool, pos); break;
      case CmdKind::Print: assign(expr(c->e1, true, pos), Type::Int, pos); break;
      case CmdKind::GhostAssign: {
        auto it = env_.ghosts.find(c->name);
        int rhs = expr(c->e1, true, pos);
        if (it != env_.ghosts.end()) assign(rhs, it->second, pos);
        break;
      }
      default: break;
    }
    if (c->inv) assertion(c->inv, pos);
    command(c->c1);
    command(c->c2);
  }

  void export_vars(TypeEnv& env) {
    for (const auto& [name, slot] : vars_) {
      Type t = resolve(slot);
      if (t != Type::Unknown) env.vars[name] = t;
    }
  }

 private:
  const TypeEnv& env_;
  std::vector<int> parent_;
  std::vector<Type> type_;
  std::map<std::string, int> vars_;
  std::vector<std::pair<std::string, int>> scopes_;
  std::map<const Assertion*, int> binders_;
};

}  // namespace

TypeEnv infer_program_types(const Program& p) {
  TypeEnv env = ghost_env(p);
  Unifier u(env);
  u.command(p.body);
  if (p.requires_) u.assertion(p.requires_, {});
  if (p.ensures_) u.assertion(p.ensures_, {});
  u.export_vars(env);
  return env;
}

std::vector<AssertionPtr> annotate_assertions(const std::vector<AssertionPtr>& as, TypeEnv& env) {
  Unifier u(env);
  for (const auto& a : as) u.assertion(a, {});
  std::vector<AssertionPtr> out;
  out.reserve(as.size());
  for (const auto& a : as) out.push_back(u.rebuild(a));
  u.export_vars(env);
  return out;
}

AssertionPtr annotate_assertion(const AssertionPtr& a, TypeEnv& env) {
  return annotate_assertions({a}, env).front();
}

namespace {

CommandPtr annotate_command(const CommandPtr& c, const TypeEnv& types) {
  if (!c) return c;
  auto out = std::make_shared<Command>(*c);
  if (c->inv) {
    TypeEnv env = types;
    out->inv = annotate_assertion(c->inv, env);
  }
  out->c1 = annotate_command(c->c1, types);
  out->c2 = annotate_command(c->c2, types);
  return out;
}

}  // namespace

Program annotate_program(const Program& p, const TypeEnv& types) {
  Program out = p;
  out.body = annotate_command(p.body, types);
  return out;
}

}  // namespace refine
