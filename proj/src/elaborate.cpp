#include "refine/proof.hpp"

#include "refine/ats.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iostream>

namespace refine {

namespace {

struct Atom {
  ExprPtr addr;
  Perm perm;
  ExprPtr val;
};

// exists ex. pure && (atoms ** opaque)
struct Sym {
  std::vector<std::pair<std::string, Type>> ex;
  std::vector<AssertionPtr> pure;
  std::vector<Atom> atoms;
  std::vector<AssertionPtr> opaque;
};

// Disjunction of symbolic heaps; never empty.
using State = std::vector<Sym>;

bool is_true(const AssertionPtr& a) {
  return a->kind == AKind::Pure && a->expr->kind == ExprKind::Const && a->expr->value == Value::boolean(true);
}

void add_pure(Sym& s, const AssertionPtr& f) {
  if (f->kind == AKind::And) {
    for (const auto& p : f->parts) add_pure(s, p);
  } else if (!is_true(f)) {
    s.pure.push_back(f);
  }
}

void add_opaque(Sym& s, const AssertionPtr& a) {
  if (is_true(a) && std::any_of(s.opaque.begin(), s.opaque.end(), is_true)) return;
  s.opaque.push_back(a);
}

Sym combine(const Sym& a, const Sym& b) {
  Sym out = a;
  out.ex.insert(out.ex.end(), b.ex.begin(), b.ex.end());
  out.pure.insert(out.pure.end(), b.pure.begin(), b.pure.end());
  out.atoms.insert(out.atoms.end(), b.atoms.begin(), b.atoms.end());
  for (const auto& o : b.opaque) add_opaque(out, o);
  return out;
}

AssertionPtr spatial_of(const Sym& s) {
  std::vector<AssertionPtr> parts;
  for (const auto& a : s.atoms) parts.push_back(a_pts(a.addr, a.perm, a.val));
  parts.insert(parts.end(), s.opaque.begin(), s.opaque.end());
  return a_sep_all(parts);
}

// The quantifier-free body of a symbolic heap.
AssertionPtr body_of(const Sym& s) {
  auto spatial = spatial_of(s);
  if (s.pure.empty()) return spatial;
  auto parts = s.pure;
  parts.push_back(spatial);
  return a_and_all(parts);
}

AssertionPtr to_assertion(const Sym& s) {
  AssertionPtr a = body_of(s);
  for (std::size_t i = s.ex.size(); i-- > 0;) a = a_exists(s.ex[i].first, a, s.ex[i].second);
  return a;
}

AssertionPtr to_assertion(const State& st) {
  AssertionPtr acc = to_assertion(st.back());
  for (std::size_t i = st.size() - 1; i-- > 0;) acc = a_or(to_assertion(st[i]), acc);
  return acc;
}

std::set<std::string> body_vars(const Sym& s) { return free_vars(body_of(s)); }

Sym rename_var(const Sym& s, const std::string& x, const ExprPtr& by) {
  Sym out;
  out.ex = s.ex;
  for (const auto& p : s.pure) out.pure.push_back(substitute(p, x, by));
  for (const auto& a : s.atoms) out.atoms.push_back({expr_subst(a.addr, x, by), a.perm, expr_subst(a.val, x, by)});
  for (const auto& o : s.opaque) out.opaque.push_back(substitute(o, x, by));
  return out;
}

bool mentions(const ExprPtr& e, const std::set<std::string>& vars, const std::set<std::string>& ghosts) {
  for (const auto& v : expr_vars(e)) {
    if (vars.count(v)) return true;
  }
  for (const auto& g : expr_ghosts(e)) {
    if (ghosts.count(g)) return true;
  }
  return false;
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::none_of(a.begin(), a.end(), [&](const std::string& x) { return b.count(x) > 0; });
}

LockEnv without(const LockEnv& env, const std::string& lock) {
  LockEnv out;
  for (const auto& b : env) {
    if (b.first != lock) out.push_back(b);
  }
  return out;
}

struct Result {
  DerivationPtr d;
  State post;
};

class Elaborator {
 public:
  Elaborator(const Program& p, const AtsSpec& spec, TypeEnv& types)
      : spec_(spec), types_(types), trace_(std::getenv("REFINE_ELAB_TRACE") != nullptr) {
    used_ = command_vars(p.body);
    for (const auto& a : {p.requires_, p.ensures_}) {
      if (!a) continue;
      auto v = all_vars(a);
      used_.insert(v.begin(), v.end());
    }
    command_any(p.body, [&](const Command& c) {
      if (c.inv) {
        auto v = all_vars(c.inv);
        used_.insert(v.begin(), v.end());
      }
      return false;
    });
    for (const auto& x : spec.vars) {
      used_.insert(x);
      used_.insert(x + "'");
    }
  }

  DerivationPtr top(const Program& p, const LockEnv& gamma) {
    auto pre = p.requires_ ? p.requires_ : a_emp();
    auto post = p.ensures_ ? p.ensures_ : a_true();
    auto r = elab_from(p.body, gamma, pre);
    return cons(gamma, pre, post, r.d);
  }

 private:
  // ---- names ---------------------------------------------------------------

  std::string fresh(const std::string& hint) {
    std::string base;
    for (char ch : hint) {
      if (std::isalpha(static_cast<unsigned char>(ch))) base += ch;
    }
    if (base.empty() || base == "w") base = "v";
    for (int k = 1;; ++k) {
      std::string n = base + std::to_string(k);
      if (used_.insert(n).second) return n;
    }
  }

  std::string fresh_typed(const std::string& hint, Type t) {
    auto n = fresh(hint);
    if (t != Type::Unknown) types_.vars[n] = t;
    return n;
  }

  Type type_of(const std::string& x) const {
    auto it = types_.vars.find(x);
    return it == types_.vars.end() ? Type::Unknown : it->second;
  }

  // ---- normalization ---------------------------------------------------------

  static bool is_apt_sep(const AssertionPtr& a, std::vector<AssertionPtr>& pts) {
    if (a->kind == AKind::PointsTo) {
      pts.push_back(a);
      return true;
    }
    if (is_true(a)) return true;
    if (a->kind != AKind::Sep) return false;
    return is_apt_sep(a->parts[0], pts) && is_apt_sep(a->parts[1], pts);
  }

  State norm_rec(const AssertionPtr& a) {
    AssertionPtr l, r;
    if (match_or(a, &l, &r) && !is_fol(a)) {
      auto out = norm_rec(l);
      auto more = norm_rec(r);
      out.insert(out.end(), more.begin(), more.end());
      return out;
    }
    if (is_fol(a)) {
      Sym s;
      add_pure(s, a);
      add_opaque(s, a_true());
      return {s};
    }
    switch (a->kind) {
      case AKind::Emp: return {Sym{}};
      case AKind::PointsTo: {
        Sym s;
        s.atoms.push_back({a->addr, a->perm, a->val});
        return {s};
      }
      case AKind::Exists: {
        auto t = a->var_type != Type::Unknown ? a->var_type : type_of(a->var);
        auto n = fresh_typed(a->var, t);
        auto out = norm_rec(substitute(a->parts[0], a->var, e_var(n)));
        for (auto& s : out) s.ex.insert(s.ex.begin(), {n, t});
        return out;
      }
      case AKind::Sep:
      case AKind::IterSep: {
        State acc{Sym{}};
        for (const auto& p : a->parts) {
          State next;
          State part = norm_rec(p);
          for (const auto& x : acc) {
            for (const auto& y : part) next.push_back(combine(x, y));
          }
          acc = std::move(next);
        }
        return acc;
      }
      case AKind::And: {
        const auto& x = a->parts[0];
        const auto& y = a->parts[1];
        if (is_fol(x) || is_fol(y)) {
          const auto& f = is_fol(x) ? x : y;
          auto out = norm_rec(is_fol(x) ? y : x);
          for (auto& s : out) add_pure(s, f);
          return out;
        }
        // (a1 |->p v1 ** ... ** true) && G: the cells are G's own.
        for (int side = 0; side < 2; ++side) {
          std::vector<AssertionPtr> pts;
          if (!is_apt_sep(side == 0 ? x : y, pts) || pts.empty()) continue;
          auto out = norm_rec(side == 0 ? y : x);
          bool ok = true;
          for (auto& s : out) {
            coalesce(s);
            for (const auto& p : pts) {
              auto it = std::find_if(s.atoms.begin(), s.atoms.end(), [&](const Atom& at) {
                return expr_equal(at.addr, p->addr) && at.perm >= p->perm;
              });
              if (it == s.atoms.end()) {
                ok = false;
                break;
              }
              add_pure(s, a_pure(e_binary(Op::Eq, p->val, it->val)));
            }
          }
          if (ok) return out;
        }
        break;
      }
      default: break;
    }
    Sym s;
    add_opaque(s, a);
    return {s};
  }

  static void coalesce(Sym& s) {
    std::vector<Atom> out;
    for (const auto& a : s.atoms) {
      auto it = std::find_if(out.begin(), out.end(), [&](const Atom& b) { return expr_equal(a.addr, b.addr); });
      if (it == out.end()) {
        out.push_back(a);
        continue;
      }
      it->perm = it->perm + a.perm;
      if (!expr_equal(it->val, a.val)) s.pure.push_back(a_pure(e_binary(Op::Eq, it->val, a.val)));
    }
    s.atoms = std::move(out);
  }

  State norm(const AssertionPtr& a) {
    auto out = norm_rec(lift_pure(a));
    for (auto& s : out) coalesce(s);
    return out;
  }

  // Substitutes existential variables defined by an equation and drops
  // facts that only constrain otherwise unused existentials.
  static Sym simplify(Sym s) {
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < s.pure.size() && !changed; ++i) {
        const auto& f = s.pure[i];
        if (f->kind != AKind::Pure || f->expr->kind != ExprKind::Binary || f->expr->op != Op::Eq) continue;
        for (int side = 0; side < 2 && !changed; ++side) {
          const auto& v = f->expr->args[static_cast<std::size_t>(side)];
          const auto& other = f->expr->args[static_cast<std::size_t>(1 - side)];
          if (v->kind != ExprKind::Var) continue;
          auto ex = std::find_if(s.ex.begin(), s.ex.end(), [&](const auto& e) { return e.first == v->name; });
          if (ex == s.ex.end() || expr_vars(other).count(v->name)) continue;
          std::string x = v->name;
          ExprPtr by = other;
          s.pure.erase(s.pure.begin() + static_cast<std::ptrdiff_t>(i));
          s.ex.erase(ex);
          s = rename_var(s, x, by);
          changed = true;
        }
      }
    }
    std::set<std::string> exs;
    for (const auto& e : s.ex) exs.insert(e.first);
    std::set<std::string> live;
    for (const auto& v : free_vars(spatial_of(s))) live.insert(v);
    std::vector<bool> keep(s.pure.size(), false);
    for (bool grew = true; grew;) {
      grew = false;
      for (std::size_t i = 0; i < s.pure.size(); ++i) {
        if (keep[i]) continue;
        auto fv = free_vars(s.pure[i]);
        bool anchored = std::any_of(fv.begin(), fv.end(), [&](const std::string& v) {
          return !exs.count(v) || live.count(v);
        });
        if (!anchored && !fv.empty()) continue;
        keep[i] = true;
        live.insert(fv.begin(), fv.end());
        grew = true;
      }
    }
    std::vector<AssertionPtr> pure;
    for (std::size_t i = 0; i < s.pure.size(); ++i) {
      if (keep[i]) pure.push_back(s.pure[i]);
    }
    s.pure = std::move(pure);
    drop_unused(s);
    return s;
  }

  static void drop_unused(Sym& s) {
    auto fv = body_vars(s);
    std::vector<std::pair<std::string, Type>> ex;
    for (const auto& e : s.ex) {
      if (fv.count(e.first)) ex.push_back(e);
    }
    s.ex = std::move(ex);
  }

  // S minus the cells of F, matched by address. Pure facts and existentials
  // of S are kept.
  static std::optional<Sym> subtract(const Sym& s, const Sym& f) {
    Sym out = s;
    for (const auto& o : f.opaque) {
      if (!is_true(o)) return std::nullopt;
    }
    for (const auto& fa : f.atoms) {
      auto it = std::find_if(out.atoms.begin(), out.atoms.end(), [&](const Atom& a) {
        return expr_equal(a.addr, fa.addr) && a.perm >= fa.perm;
      });
      if (it == out.atoms.end()) return std::nullopt;
      if (it->perm == fa.perm) {
        out.atoms.erase(it);
      } else {
        it->perm = it->perm - fa.perm;
      }
    }
    return out;
  }

  Sym single(const AssertionPtr& a, const CommandPtr& at) {
    auto st = norm(a);
    if (st.size() != 1) {
      throw ElaborationError("Unsupported", "invariant " + assertion_to_string(a) + " is disjunctive", at->pos);
    }
    return st.front();
  }

  // ---- node construction -------------------------------------------------------

  static DerivationPtr node(std::string rule, const LockEnv& env, AssertionPtr pre, CommandPtr cmd, AssertionPtr post,
                            std::vector<DerivationPtr> children = {}) {
    auto d = std::make_shared<Derivation>();
    d->rule = std::move(rule);
    d->env = env;
    d->pre = std::move(pre);
    d->cmd = std::move(cmd);
    d->post = std::move(post);
    d->children = std::move(children);
    return d;
  }

  DerivationPtr cons(const LockEnv& env, const AssertionPtr& pre, const AssertionPtr& post, DerivationPtr child) {
    if (same_shape(pre, child->pre) && same_shape(post, child->post)) return child;
    if (trace_) {
      for (const auto& [p, q] : {std::pair{pre, child->pre}, std::pair{child->post, post}}) {
        if (!same_shape(p, q) && !syntactic_entails(p, q)) {
          std::cerr << "[elaborate] bounded: " << assertion_to_string(p) << "\n    |= " << assertion_to_string(q) << "\n";
        }
      }
    }
    auto cmd = child->cmd;
    return node("Cons", env, pre, cmd, post, {std::move(child)});
  }

  static DerivationPtr frame(const Sym& r, DerivationPtr local) {
    if (r.pure.empty() && r.atoms.empty() && r.opaque.empty()) return local;
    auto f = to_assertion(r);
    auto d = node("Frame", local->env, a_sep(local->pre, f), local->cmd, a_sep(local->post, f), {local});
    d->frame = f;
    return d;
  }

  // Pins a result to the assertions its parent expects.
  Result fit(const LockEnv& env, const AssertionPtr& pre, Result r) {
    r.d = cons(env, pre, to_assertion(r.post), r.d);
    return r;
  }

  // ---- elaboration -------------------------------------------------------------

  Result elab_from(const CommandPtr& c, const LockEnv& env, const AssertionPtr& pre) {
    return fit(env, pre, elab(c, env, norm(pre)));
  }

  Result elab(const CommandPtr& c, const LockEnv& env, const State& st) {
    if (st.size() == 1) return elab_sym(c, env, st.front());
    auto first = elab_sym(c, env, st.front());
    auto rest = elab(c, env, State(st.begin() + 1, st.end()));
    auto pre = a_or(first.d->pre, rest.d->pre);
    auto post = a_or(first.d->post, rest.d->post);
    State out = first.post;
    out.insert(out.end(), rest.post.begin(), rest.post.end());
    return {node("Disj", env, pre, c, post, {first.d, rest.d}), out};
  }

  Result elab_sym(const CommandPtr& c, const LockEnv& env, Sym s) {
    drop_unused(s);
    if (!s.ex.empty()) {
      auto [x, t] = s.ex.front();
      Sym inner = s;
      inner.ex.erase(inner.ex.begin());
      auto r = elab_sym(c, env, inner);
      auto q = r.d->post;
      if (!free_vars(q).count(x)) {
        auto d = node("Ex", env, a_exists(x, r.d->pre, t), c, q, {r.d});
        d->var = x;
        return {d, r.post};
      }
      auto d = node("Ex", env, a_exists(x, r.d->pre, t), c, a_exists(x, q, t), {r.d});
      d->var = x;
      State post = r.post;
      for (auto& p : post) p.ex.insert(p.ex.begin(), {x, t});
      return fit(env, d->pre, {d, post});
    }
    return fit(env, to_assertion(s), base(c, env, s));
  }

  // Renames x in s away to a fresh existential; the node proves
  // {s} c {post} from one about s[x1/x].
  template <typename K>
  Result rename_then(const CommandPtr& c, const LockEnv& env, const Sym& s, const std::string& x, K&& k) {
    auto xn = fresh_typed(x, type_of(x));
    Sym renamed = rename_var(s, x, e_var(xn));
    Result r = k(renamed, xn);
    auto q = r.d->post;
    auto d = node("Ex", env, a_exists(xn, r.d->pre, type_of(x)), c,
                  free_vars(q).count(xn) ? a_exists(xn, q, type_of(xn)) : q, {r.d});
    d->var = xn;
    State post = r.post;
    for (auto& p : post) {
      p.ex.insert(p.ex.begin(), {xn, type_of(xn)});
      drop_unused(p);
    }
    return {cons(env, to_assertion(s), to_assertion(post), d), post};
  }

  std::size_t find_atom(const Sym& s, const ExprPtr& addr, const CommandPtr& c) {
    for (std::size_t i = 0; i < s.atoms.size(); ++i) {
      if (expr_equal(s.atoms[i].addr, addr)) return i;
    }
    throw ElaborationError("Unsupported", "no points-to assertion for " + expr_to_string(addr) + " before " +
                                              cmd_kind_name(c->kind),
                           c->pos);
  }

  static Sym without_atom(const Sym& s, std::size_t i) {
    Sym r = s;
    r.atoms.erase(r.atoms.begin() + static_cast<std::ptrdiff_t>(i));
    return r;
  }

  Result base(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    switch (c->kind) {
      case CmdKind::Skip: {
        auto a = to_assertion(s);
        return {node("Skip", env, a, c, a), {s}};
      }
      case CmdKind::Assign: return assign(c, env, s);
      case CmdKind::Read: return read(c, env, s);
      case CmdKind::Alloc: return alloc(c, env, s);
      case CmdKind::Write:
      case CmdKind::Free: return write_or_free(c, env, s);
      case CmdKind::Print: return print(c, env, s);
      case CmdKind::GhostAssign: return ghost_assign(c, env, s);
      case CmdKind::Seq: {
        auto r1 = elab(c->c1, env, {s});
        auto r2 = elab(c->c2, env, r1.post);
        auto d = node("Seq", env, r1.d->pre, c, r2.d->post, {r1.d, r2.d});
        return {d, r2.post};
      }
      case CmdKind::Ite: return ite(c, env, s);
      case CmdKind::While: return loop(c, env, s);
      case CmdKind::Par: return par(c, env, s);
      case CmdKind::LockDecl: return lock(c, env, s);
      case CmdKind::With: return with(c, env, s);
      case CmdKind::Init: return init(c, env, s);
      case CmdKind::Next: return next(c, env, s);
      case CmdKind::Within:
        throw ElaborationError("Unsupported", "within is a runtime form", c->pos);
    }
    throw ElaborationError("Unsupported", "unknown command", c->pos);
  }

  Result assign(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    const auto& x = c->name;
    if (body_vars(s).count(x) || expr_vars(c->e1).count(x)) {
      return rename_then(c, env, s, x, [&](const Sym& r, const std::string& xn) {
        return assign_fresh(c, env, r, expr_subst(c->e1, x, e_var(xn)));
      });
    }
    return assign_fresh(c, env, s, c->e1);
  }

  // x does not occur in s; `value` is E with x's old value substituted.
  Result assign_fresh(const CommandPtr& c, const LockEnv& env, const Sym& s, const ExprPtr& value) {
    auto local_post = a_and(a_pure(e_binary(Op::Eq, e_var(c->name), value)), a_emp());
    auto local = node("Assign", env, substitute(local_post, c->name, c->e1), c, local_post);
    Sym post = s;
    add_pure(post, a_pure(e_binary(Op::Eq, e_var(c->name), value)));
    return {frame(s, local), {post}};
  }

  Result read(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    const auto& x = c->name;
    if (expr_vars(c->e1).count(x)) throw ElaborationError("Unsupported", "read address mentions its target", c->pos);
    if (body_vars(s).count(x)) {
      return rename_then(c, env, s, x, [&](const Sym& r, const std::string&) { return read(c, env, r); });
    }
    auto i = find_atom(s, c->e1, c);
    const auto& at = s.atoms[i];
    auto pre = a_pts(at.addr, at.perm, at.val);
    auto local = node("Read", env, pre, c, a_and(pre, a_pure(e_binary(Op::Eq, e_var(x), at.val))));
    Sym post = s;
    add_pure(post, a_pure(e_binary(Op::Eq, e_var(x), at.val)));
    return {frame(without_atom(s, i), local), {post}};
  }

  Result alloc(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    const auto& x = c->name;
    if (expr_vars(c->e1).count(x)) throw ElaborationError("Unsupported", "allocated value mentions its target", c->pos);
    if (body_vars(s).count(x)) {
      return rename_then(c, env, s, x, [&](const Sym& r, const std::string&) { return alloc(c, env, r); });
    }
    auto local = node("Alloc", env, a_emp(), c, a_pts(e_var(x), Perm(1), c->e1));
    Sym post = s;
    post.atoms.push_back({e_var(x), Perm(1), c->e1});
    return {frame(s, local), {post}};
  }

  Result write_or_free(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    auto i = find_atom(s, c->e1, c);
    const auto& at = s.atoms[i];
    auto y = fresh("y");
    auto full = a_exists(y, a_pts(c->e1, Perm(1), e_var(y)));
    bool write = c->kind == CmdKind::Write;
    auto post_local = write ? a_pts(c->e1, Perm(1), c->e2) : a_emp();
    auto axiom = node(write ? "Write" : "Free", env, full, c, post_local);
    auto local = cons(env, a_pts(at.addr, at.perm, at.val), post_local, axiom);
    Sym post = without_atom(s, i);
    if (write) post.atoms.insert(post.atoms.begin() + static_cast<std::ptrdiff_t>(i), {c->e1, Perm(1), c->e2});
    return {frame(without_atom(s, i), local), {post}};
  }

  Result print(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    auto out = e_ghost(kStdOut);
    auto i = find_atom(s, out, c);
    const auto& at = s.atoms[i];
    auto value = e_binary(Op::Append, c->e1, at.val);
    auto local = node("Print", env, a_pts(out, at.perm, at.val), c, a_pts(out, Perm(1), value));
    Sym post = s;
    post.atoms[i] = {out, Perm(1), value};
    return {frame(without_atom(s, i), local), {post}};
  }

  Result ghost_assign(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    std::set<std::string> needed = expr_ghosts(c->e1);
    needed.insert(c->name);
    Sym local_s, rest;
    rest.pure = s.pure;
    rest.opaque = s.opaque;
    std::map<std::string, ExprPtr> cells;
    for (const auto& a : s.atoms) {
      if (a.addr->kind == ExprKind::Ghost && needed.count(a.addr->name)) {
        local_s.atoms.push_back(a);
        cells[a.addr->name] = a.val;
      } else {
        rest.atoms.push_back(a);
      }
    }
    if (!cells.count(c->name)) {
      throw ElaborationError("Unsupported", "no points-to assertion for ghost " + c->name, c->pos);
    }
    Sym local_post = local_s;
    for (auto& a : local_post.atoms) {
      if (a.addr->name == c->name) a.val = subst_ghost_reads(c->e1, cells);
    }
    auto local = node("GhostAssign", env, spatial_of(local_s), c, spatial_of(local_post));
    Sym post = combine(local_post, rest);
    return {frame(rest, local), {post}};
  }

  Result ite(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    Sym st = s;
    Sym se = s;
    add_pure(st, lift_pure(a_pure(c->e1)));
    add_pure(se, lift_pure(a_pure(e_unary(Op::Not, c->e1))));
    auto pre = to_assertion(s);
    auto r1 = fit(env, a_and(pre, a_pure(c->e1)), elab(c->c1, env, {st}));
    auto r2 = fit(env, a_and(pre, a_pure(e_unary(Op::Not, c->e1))), elab(c->c2, env, {se}));
    State post = r1.post;
    post.insert(post.end(), r2.post.begin(), r2.post.end());
    auto q = to_assertion(post);
    auto d1 = cons(env, r1.d->pre, q, r1.d);
    auto d2 = cons(env, r2.d->pre, q, r2.d);
    return {node("Cond", env, pre, c, q, {d1, d2}), post};
  }

  Result loop(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    if (!c->inv) throw ElaborationError("MissingAnnotation", "while loop needs an invariant", c->pos);
    const auto& inv = c->inv;
    auto body_pre = a_and(inv, a_pure(c->e1));
    auto rb = elab_from(c->c1, env, body_pre);
    auto body = cons(env, body_pre, inv, rb.d);
    auto post = a_and(inv, a_pure(e_unary(Op::Not, c->e1)));
    auto w = node("While", env, inv, c, post, {body});
    // Cells the invariant does not mention and facts the body cannot
    // invalidate are framed around the loop.
    Sym r;
    auto mod = mod_set(c);
    if (auto rest = subtract(s, single(inv, c))) {
      for (const auto& a : rest->atoms) {
        if (!mentions(a.addr, mod, {}) && !mentions(a.val, mod, {})) r.atoms.push_back(a);
      }
    }
    for (const auto& f : s.pure) {
      if (disjoint(free_vars(f), mod)) r.pure.push_back(f);
    }
    auto d = frame(r, w);
    State after;
    for (const auto& p : norm(post)) after.push_back(combine(p, r));
    return fit(env, to_assertion(s), {cons(env, to_assertion(s), d->post, d), after});
  }

  Result par(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    std::set<std::string> v[2] = {command_vars(c->c1), command_vars(c->c2)};
    std::set<std::string> g[2] = {command_ghosts(c->c1), command_ghosts(c->c2)};
    std::set<std::string> m[2] = {mod_set(c->c1), mod_set(c->c2)};
    Sym t[2];
    Sym r;
    for (const auto& a : s.atoms) {
      bool in[2];
      for (int i = 0; i < 2; ++i) {
        in[i] = mentions(a.addr, v[i], g[i]);
      }
      auto fv = expr_vars(a.val);
      auto av = expr_vars(a.addr);
      fv.insert(av.begin(), av.end());
      if (in[0] && in[1]) {
        Perm half = a.perm / Perm(2);
        t[0].atoms.push_back({a.addr, half, a.val});
        t[1].atoms.push_back({a.addr, half, a.val});
      } else if (in[0] || in[1]) {
        t[in[0] ? 0 : 1].atoms.push_back(a);
      } else if (disjoint(fv, m[0]) && disjoint(fv, m[1])) {
        r.atoms.push_back(a);
      } else {
        t[disjoint(fv, m[1]) ? 0 : 1].atoms.push_back(a);
      }
    }
    for (const auto& f : s.pure) {
      auto fv = free_vars(f);
      for (int i = 0; i < 2; ++i) {
        if (disjoint(fv, m[1 - i])) t[i].pure.push_back(f);
      }
    }
    for (const auto& o : s.opaque) r.opaque.push_back(o);
    auto r1 = elab(c->c1, env, {t[0]});
    auto r2 = elab(c->c2, env, {t[1]});
    auto d = node("Par", env, a_sep(r1.d->pre, r2.d->pre), c, a_sep(r1.d->post, r2.d->post), {r1.d, r2.d});
    State after;
    for (const auto& p1 : r1.post) {
      for (const auto& p2 : r2.post) after.push_back(combine(combine(p1, p2), r));
    }
    return fit(env, to_assertion(s), {cons(env, to_assertion(s), to_assertion(after), frame(r, d)), after});
  }

  Result lock(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    if (!c->inv) throw ElaborationError("MissingAnnotation", "lock " + c->name + " needs an invariant", c->pos);
    auto rest = subtract(s, single(c->inv, c));
    if (!rest) {
      throw ElaborationError("Unsupported", "state does not provide the invariant of lock " + c->name, c->pos);
    }
    auto inner = extend(env, c->name, c->inv);
    auto rb = elab(c->c1, inner, {*rest});
    auto d = node("Lock", env, a_sep(c->inv, rb.d->pre), c, a_sep(c->inv, rb.d->post), {rb.d});
    State after;
    auto is = single(c->inv, c);
    for (const auto& p : rb.post) after.push_back(combine(is, p));
    return {cons(env, to_assertion(s), to_assertion(after), d), after};
  }

  // Posts of a region that returned `inv`: each disjunct minus inv's cells.
  State release(const State& posts, const AssertionPtr& inv, const CommandPtr& c,
                const std::vector<std::string>& forget = {}) {
    auto is = single(inv, c);
    State out;
    for (const auto& p : posts) {
      auto rest = subtract(p, is);
      if (!rest) throw ElaborationError("Unsupported", "region does not restore " + assertion_to_string(inv), c->pos);
      Sym q = *rest;
      for (const auto& o : forget) {
        if (!body_vars(q).count(o)) continue;
        auto n = fresh_typed(o, type_of(o));
        q = rename_var(q, o, e_var(n));
        q.ex.push_back({n, type_of(o)});
      }
      out.push_back(simplify(q));
    }
    return out;
  }

  Result with(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    auto inv = lock_bound(env, c->name) ? lock_invariant(env, c->name) : a_emp();
    auto inner = without(env, c->name);
    auto pre = to_assertion(s);
    auto body_pre = a_and(a_sep(pre, inv), a_pure(c->e1));
    auto rb = elab_from(c->c1, inner, body_pre);
    auto q = release(rb.post, inv, c);
    auto qa = to_assertion(q);
    auto body = cons(inner, body_pre, a_sep(qa, inv), rb.d);
    return {node("With", env, pre, c, qa, {body}), q};
  }

  // Smallest permission the ghost-lock invariant holds on an ATS cell.
  Perm ghost_rho(const Sym& g) const {
    std::optional<Perm> rho;
    for (std::size_t i = 0; i < spec_.k(); ++i) {
      auto addr = ats_ghost(spec_, i);
      for (const auto& a : g.atoms) {
        if (expr_equal(a.addr, addr)) rho = rho ? std::min(*rho, a.perm) : a.perm;
      }
    }
    return rho.value_or(Perm(1));
  }

  Result init(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    auto g = c->inv ? c->inv : a_emp();
    auto gs = single(g, c);
    auto rest = subtract(s, gs);
    if (!rest) throw ElaborationError("Unsupported", "state does not provide the init invariant", c->pos);
    auto inner = extend(extend(env, kGhostLock, g), kInitToken, a_emp());
    auto rb = elab(c->c1, inner, {*rest});
    auto pre = init_rule_pre(spec_, g, ghost_rho(gs), rb.d->pre);
    auto d = node("Init", env, pre, c, a_sep(g, rb.d->post), {rb.d});
    State after;
    for (const auto& p : rb.post) after.push_back(combine(gs, p));
    return {cons(env, to_assertion(s), to_assertion(after), d), after};
  }

  Result next(const CommandPtr& c, const LockEnv& env, const Sym& s) {
    auto g = lock_bound(env, kGhostLock) ? lock_invariant(env, kGhostLock) : a_emp();
    auto gs = single(g, c);
    Perm rho = ghost_rho(gs);
    // Local part: cells the block touches and the facts connected to them.
    auto cv = command_vars(c->c1);
    auto cg = command_ghosts(c->c1);
    auto mod = mod_set(c->c1);
    Sym local, rest;
    std::set<std::string> live = cv;
    for (const auto& a : s.atoms) {
      if (mentions(a.addr, cv, cg)) {
        local.atoms.push_back(a);
        auto fv = expr_vars(a.val);
        live.insert(fv.begin(), fv.end());
      } else {
        rest.atoms.push_back(a);
      }
    }
    std::vector<bool> taken(s.pure.size(), false);
    for (bool grew = true; grew;) {
      grew = false;
      for (std::size_t i = 0; i < s.pure.size(); ++i) {
        if (taken[i]) continue;
        auto fv = free_vars(s.pure[i]);
        if (disjoint(fv, live) && disjoint(fv, mod)) continue;
        taken[i] = grew = true;
        live.insert(fv.begin(), fv.end());
      }
    }
    for (std::size_t i = 0; i < s.pure.size(); ++i) (taken[i] ? local : rest).pure.push_back(s.pure[i]);
    rest.opaque = s.opaque;

    std::set<std::string> avoid = used_;
    auto o = next_fresh_names(spec_.k(), avoid);
    for (std::size_t i = 0; i < o.size(); ++i) {
      used_.insert(o[i]);
      types_.vars[o[i]] = spec_.types[i];
    }
    auto p = to_assertion(local);
    auto inner = without(env, kGhostLock);
    auto child_pre = next_premise_pre(spec_, g, rho, o, p);
    auto rb = elab_from(c->c1, inner, child_pre);
    auto q = release(rb.post, g, c, o);
    auto qa = to_assertion(q);
    auto child = cons(inner, child_pre, next_premise_post(spec_, g, rho, o, qa), rb.d);
    auto d = node("Next", env, p, c, qa, {child});
    d->fresh = o;
    State after;
    for (const auto& x : q) after.push_back(combine(x, rest));
    return {frame(rest, d), after};
  }

  const AtsSpec& spec_;
  TypeEnv& types_;
  std::set<std::string> used_;
  bool trace_;
};

}  // namespace

DerivationPtr elaborate_outline(const Program& p, const AtsSpec& spec, const LockEnv& gamma, TypeEnv& types) {
  Elaborator e(p, spec, types);
  return e.top(p, gamma);
}

}  // namespace refine
