#include "refine/assertion.hpp"

#include "refine/expr_eval.hpp"

#include <algorithm>

namespace refine {

nlohmann::json Domains::to_json() const {
  return {{"intRange", {int_lo, int_hi}},
          {"addrCount", addr_count},
          {"maxSeqLen", max_seq_len},
          {"maxHeapCells", max_heap_cells},
          {"budget", budget}};
}

Domains Domains::from_json(const nlohmann::json& j, Domains base) {
  if (j.contains("intRange")) {
    base.int_lo = j["intRange"].at(0).get<std::int64_t>();
    base.int_hi = j["intRange"].at(1).get<std::int64_t>();
  }
  if (j.contains("addrCount")) base.addr_count = j["addrCount"].get<int>();
  if (j.contains("maxSeqLen")) base.max_seq_len = j["maxSeqLen"].get<int>();
  if (j.contains("maxHeapCells")) base.max_heap_cells = j["maxHeapCells"].get<int>();
  if (j.contains("budget")) base.budget = j["budget"].get<std::uint64_t>();
  if (base.int_lo > base.int_hi) throw std::invalid_argument("empty intRange");
  if (base.addr_count < 0 || base.max_seq_len < 0 || base.max_heap_cells < 0) {
    throw std::invalid_argument("domain bounds must be non-negative");
  }
  return base;
}

Domains Domains::from_json(const nlohmann::json& j) { return from_json(j, Domains()); }

Stack env_to_stack(const Env& env) {
  Stack s;
  for (const auto& [x, v] : env) s.set(x, v);
  return s;
}

namespace {

void flatten_sep(const AssertionPtr& a, std::vector<AssertionPtr>& out) {
  if (a->kind == AKind::Sep || a->kind == AKind::IterSep) {
    for (const auto& p : a->parts) flatten_sep(p, out);
  } else {
    out.push_back(a);
  }
}

// Models of an exact assertion are determined heaps, never arbitrary supersets.
bool is_exact(const AssertionPtr& a) {
  switch (a->kind) {
    case AKind::Emp:
    case AKind::PointsTo: return true;
    case AKind::Sep:
    case AKind::IterSep:
      return std::all_of(a->parts.begin(), a->parts.end(), [](const auto& p) { return is_exact(p); });
    case AKind::And: return is_exact(a->parts[0]) || is_exact(a->parts[1]);
    case AKind::Exists: return is_exact(a->parts[0]);
    case AKind::Not: {
      AssertionPtr l, r;
      if (match_or(a, &l, &r)) return is_exact(l) && is_exact(r);
      return false;
    }
    default: return false;
  }
}

bool value_has_type(const Value& v, Type t) { return t == Type::Unknown || v.type() == t; }

// Rank used to order the parts of a separating conjunction: parts whose
// footprint is determined by the stack are matched first.
int part_rank(const AssertionPtr& a) {
  if (a->kind == AKind::PointsTo) return 0;
  if (a->kind == AKind::Exists && a->parts[0]->kind == AKind::PointsTo) return 1;
  if (is_exact(a)) return 2;
  return 3;
}

}  // namespace

struct Engine::Impl {
  // ---- quantifier candidates ---------------------------------------------

  static std::optional<std::vector<Value>> necessary(Engine& E, const AssertionPtr& a, const std::string& x,
                                                     std::set<std::string>& inner, const Stack& s,
                                                     const PermHeap& h) {
    auto blocked = [&](const ExprPtr& e) {
      for (const auto& v : expr_vars(e)) {
        if (v == x || inner.count(v)) return true;
      }
      return false;
    };
    switch (a->kind) {
      case AKind::Pure: {
        const auto& e = a->expr;
        if (e->kind != ExprKind::Binary || e->op != Op::Eq) return std::nullopt;
        for (int side = 0; side < 2; ++side) {
          const auto& var = e->args[static_cast<std::size_t>(side)];
          const auto& other = e->args[static_cast<std::size_t>(1 - side)];
          if (var->kind == ExprKind::Var && var->name == x && !blocked(other)) {
            try {
              return std::vector<Value>{eval_expr(other, s)};
            } catch (const EvalError&) {
              return std::vector<Value>{};
            }
          }
        }
        return std::nullopt;
      }
      case AKind::PointsTo: {
        if (a->val->kind == ExprKind::Var && a->val->name == x && !blocked(a->addr)) {
          try {
            Value addr = eval_expr(a->addr, s);
            if (!addr.is_addr()) return std::vector<Value>{};
            const Cell* c = h.find(addr.as_addr());
            if (!c) return std::vector<Value>{};
            return std::vector<Value>{c->value};
          } catch (const EvalError&) {
            return std::vector<Value>{};
          }
        }
        if (a->addr->kind == ExprKind::Var && a->addr->name == x) {
          std::vector<Value> out;
          for (const auto& [addr, c] : h.cells()) out.push_back(Value::address(addr));
          return out;
        }
        return std::nullopt;
      }
      case AKind::And:
      case AKind::Sep:
      case AKind::IterSep:
        for (const auto& p : a->parts) {
          if (auto r = necessary(E, p, x, inner, s, h)) return r;
        }
        return std::nullopt;
      case AKind::Exists: {
        if (a->var == x) return std::nullopt;
        bool added = inner.insert(a->var).second;
        auto r = necessary(E, a->parts[0], x, inner, s, h);
        if (added) inner.erase(a->var);
        return r;
      }
      default: return std::nullopt;
    }
  }

  static std::vector<Value> candidates(Engine& E, const Assertion& q, const Stack& s, const PermHeap& h) {
    if (q.kind == AKind::Exists) {
      std::set<std::string> inner;
      if (auto r = necessary(E, q.parts[0], q.var, inner, s, h)) return *r;
    }
    std::vector<Value> out = E.domain(q.var_type);
    std::set<Value> seen(out.begin(), out.end());
    auto add = [&](const Value& v) {
      if (value_has_type(v, q.var_type) && seen.insert(v).second) out.push_back(v);
    };
    for (const auto& [addr, c] : h.cells()) {
      add(Value::address(addr));
      add(c.value);
    }
    for (const auto& [name, v] : s.bindings()) add(v);
    return out;
  }

  // ---- evaluation ---------------------------------------------------------

  static bool eval(Engine& E, const AssertionPtr& a, const Stack& s, const PermHeap& h) {
    E.tick();
    switch (a->kind) {
      case AKind::Pure:
        try {
          Value v = eval_expr(a->expr, s);
          return v.is_bool() && v.as_bool();
        } catch (const EvalError&) {
          return false;
        }
      case AKind::And: return eval(E, a->parts[0], s, h) && eval(E, a->parts[1], s, h);
      case AKind::Not: return !eval(E, a->parts[0], s, h);
      case AKind::Forall:
      case AKind::Exists: {
        bool want = a->kind == AKind::Exists;
        for (const auto& v : candidates(E, *a, s, h)) {
          Stack s2 = s;
          s2.set(a->var, v);
          if (eval(E, a->parts[0], s2, h) == want) return want;
        }
        return !want;
      }
      case AKind::Emp: return h.empty();
      case AKind::PointsTo: {
        if (h.size() != 1) return false;
        try {
          Value addr = eval_expr(a->addr, s);
          if (!addr.is_addr()) return false;
          const auto& [cell_addr, cell] = *h.cells().begin();
          return cell_addr == addr.as_addr() && cell.perm == a->perm && cell.value == eval_expr(a->val, s);
        } catch (const EvalError&) {
          return false;
        }
      }
      case AKind::Sep:
      case AKind::IterSep: {
        std::vector<AssertionPtr> parts;
        flatten_sep(a, parts);
        return chain_eval(E, parts, s, h);
      }
      case AKind::Wand: {
        for (const auto& ext : E.extensions(h)) {
          if (!eval(E, a->parts[0], s, ext)) continue;
          auto sum = heap_add(h, ext);
          if (sum && !eval(E, a->parts[1], s, *sum)) return false;
        }
        return true;
      }
    }
    return false;
  }

  static bool chain_eval(Engine& E, std::vector<AssertionPtr> parts, const Stack& s, const PermHeap& h) {
    std::vector<AssertionPtr> spatial;
    bool open = false;
    for (const auto& p : parts) {
      if (is_fol(p)) {
        if (!eval(E, p, s, h)) return false;
        open = true;
      } else {
        spatial.push_back(p);
      }
    }
    std::stable_sort(spatial.begin(), spatial.end(),
                     [](const auto& x, const auto& y) { return part_rank(x) < part_rank(y); });
    if (spatial.empty()) return open || h.empty();
    return chain_match(E, spatial, 0, s, h, open);
  }

  static bool chain_match(Engine& E, const std::vector<AssertionPtr>& parts, std::size_t i, const Stack& s,
                          const PermHeap& rest, bool open) {
    if (i == parts.size()) return open || rest.empty();
    if (i + 1 == parts.size() && !open) return eval(E, parts[i], s, rest);
    for (const auto& h1 : subheaps(E, parts[i], s, rest)) {
      auto remaining = heap_subtract(rest, h1);
      if (remaining && chain_match(E, parts, i + 1, s, *remaining, open)) return true;
    }
    return false;
  }

  // ---- subheaps -----------------------------------------------------------

  static std::vector<Perm> share_options(Engine& E, Perm have) {
    std::set<Perm> opts = {Perm(0), have};
    for (const auto& f : E.fractions_) {
      if (f < have) {
        opts.insert(f);
        opts.insert(have - f);
      }
    }
    return {opts.begin(), opts.end()};
  }

  static std::vector<PermHeap> all_subheaps(Engine& E, const PermHeap& h) {
    std::vector<PermHeap> out = {PermHeap()};
    for (const auto& [addr, c] : h.cells()) {
      std::vector<PermHeap> next;
      for (const auto& base : out) {
        for (const auto& q : share_options(E, c.perm)) {
          E.tick();
          PermHeap copy = base;
          if (q > Perm(0)) copy.set(addr, q, c.value);
          next.push_back(std::move(copy));
        }
      }
      out = std::move(next);
    }
    return out;
  }

  static std::vector<PermHeap> dedup(std::vector<PermHeap> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  static std::vector<PermHeap> subheaps(Engine& E, const AssertionPtr& a, const Stack& s, const PermHeap& h) {
    E.tick();
    if (is_fol(a)) return eval(E, a, s, h) ? all_subheaps(E, h) : std::vector<PermHeap>{};
    switch (a->kind) {
      case AKind::Emp: return {PermHeap()};
      case AKind::PointsTo: {
        try {
          Value addr = eval_expr(a->addr, s);
          if (!addr.is_addr()) return {};
          const Cell* c = h.find(addr.as_addr());
          if (!c || c->perm < a->perm || c->value != eval_expr(a->val, s)) return {};
          PermHeap one;
          one.set(addr.as_addr(), a->perm, c->value);
          return {one};
        } catch (const EvalError&) {
          return {};
        }
      }
      case AKind::Sep:
      case AKind::IterSep: {
        std::vector<AssertionPtr> parts;
        flatten_sep(a, parts);
        std::vector<AssertionPtr> spatial;
        bool open = false;
        for (const auto& p : parts) {
          if (is_fol(p)) {
            if (!eval(E, p, s, h)) return {};
            open = true;
          } else {
            spatial.push_back(p);
          }
        }
        std::stable_sort(spatial.begin(), spatial.end(),
                         [](const auto& x, const auto& y) { return part_rank(x) < part_rank(y); });
        std::vector<PermHeap> out;
        chain_subheaps(E, spatial, 0, s, h, PermHeap(), open, out);
        return dedup(std::move(out));
      }
      case AKind::Exists: {
        std::vector<PermHeap> out;
        for (const auto& v : candidates(E, *a, s, h)) {
          Stack s2 = s;
          s2.set(a->var, v);
          auto sub = subheaps(E, a->parts[0], s2, h);
          out.insert(out.end(), sub.begin(), sub.end());
        }
        return dedup(std::move(out));
      }
      case AKind::And: {
        const auto& l = a->parts[0];
        const auto& r = a->parts[1];
        if (is_fol(r)) return eval(E, r, s, h) ? subheaps(E, l, s, h) : std::vector<PermHeap>{};
        if (is_fol(l)) return eval(E, l, s, h) ? subheaps(E, r, s, h) : std::vector<PermHeap>{};
        std::vector<PermHeap> out;
        for (const auto& h1 : subheaps(E, l, s, h)) {
          if (eval(E, r, s, h1)) out.push_back(h1);
        }
        return out;
      }
      default: {
        std::vector<PermHeap> out;
        for (const auto& h1 : all_subheaps(E, h)) {
          if (eval(E, a, s, h1)) out.push_back(h1);
        }
        return out;
      }
    }
  }

  static void chain_subheaps(Engine& E, const std::vector<AssertionPtr>& parts, std::size_t i, const Stack& s,
                             const PermHeap& avail, const PermHeap& acc, bool open, std::vector<PermHeap>& out) {
    if (i == parts.size()) {
      if (!open) {
        out.push_back(acc);
        return;
      }
      for (const auto& extra : all_subheaps(E, avail)) {
        if (auto sum = heap_add(acc, extra)) out.push_back(*sum);
      }
      return;
    }
    for (const auto& h1 : subheaps(E, parts[i], s, avail)) {
      auto rest = heap_subtract(avail, h1);
      auto sum = heap_add(acc, h1);
      if (rest && sum) chain_subheaps(E, parts, i + 1, s, *rest, *sum, open, out);
    }
  }

  // ---- model generation ---------------------------------------------------

  static std::vector<std::string> unbound(const std::set<std::string>& vars, const Env& env) {
    std::vector<std::string> out;
    for (const auto& v : vars) {
      if (!env.count(v)) out.push_back(v);
    }
    return out;
  }

  static bool fol_filter(Engine& E, const AssertionPtr& a, const Env& env, const ModelFn& k) {
    return E.enumerate_vars(unbound(free_vars(a), env), env, [&](const Env& env1) {
      if (!eval(E, a, env_to_stack(env1), PermHeap())) return true;
      return k(env1, PermHeap(), true);
    });
  }

  static bool gen(Engine& E, const AssertionPtr& a, const Env& env, const ModelFn& k) {
    E.tick();
    AssertionPtr l, r;
    if (match_or(a, &l, &r)) {
      if (!gen(E, l, env, k)) return false;
      return gen(E, r, env, k);
    }
    switch (a->kind) {
      case AKind::Pure: {
        const auto& e = a->expr;
        if (e->kind == ExprKind::Binary && e->op == Op::Eq) {
          for (int side = 0; side < 2; ++side) {
            const auto& var = e->args[static_cast<std::size_t>(side)];
            const auto& other = e->args[static_cast<std::size_t>(1 - side)];
            if (var->kind != ExprKind::Var || env.count(var->name)) continue;
            auto fv = expr_vars(other);
            if (fv.count(var->name) || !unbound(fv, env).empty()) continue;
            Value v;
            try {
              v = eval_expr(other, env_to_stack(env));
            } catch (const EvalError&) {
              return true;
            }
            Env env1 = env;
            env1[var->name] = v;
            return k(env1, PermHeap(), true);
          }
        }
        return fol_filter(E, a, env, k);
      }
      case AKind::Emp: return k(env, PermHeap(), false);
      case AKind::PointsTo: return gen_points_to(E, *a, env, k);
      case AKind::Sep:
      case AKind::IterSep: {
        std::vector<AssertionPtr> parts;
        flatten_sep(a, parts);
        // Binding-producing parts first, filters last.
        std::stable_sort(parts.begin(), parts.end(), [](const auto& x, const auto& y) {
          return (is_fol(x) ? 1 : 0) < (is_fol(y) ? 1 : 0);
        });
        return gen_chain(E, parts, 0, env, PermHeap(), false, k);
      }
      case AKind::And: {
        AssertionPtr first = a->parts[0];
        AssertionPtr second = a->parts[1];
        bool swap = (is_fol(first) && !is_fol(second)) || (!is_exact(first) && is_exact(second));
        if (swap) std::swap(first, second);
        return gen(E, first, env, [&](const Env& env1, const PermHeap& h1, bool o1) {
          if (is_fol(second)) {
            return gen(E, second, env1, [&](const Env& env2, const PermHeap&, bool) { return k(env2, h1, o1); });
          }
          return E.enumerate_vars(unbound(free_vars(second), env1), env1, [&](const Env& env2) {
            Stack s = env_to_stack(env2);
            if (!o1) return eval(E, second, s, h1) ? k(env2, h1, false) : true;
            for (const auto& ext : E.extensions(h1)) {
              auto hh = heap_add(h1, ext);
              if (hh && eval(E, second, s, *hh) && !k(env2, *hh, false)) return false;
            }
            return true;
          });
        });
      }
      case AKind::Exists: {
        std::set<std::string> avoid = all_vars(a);
        for (const auto& [x, v] : env) avoid.insert(x);
        std::string fresh = fresh_name(a->var + "#" + std::to_string(++E.fresh_counter_), avoid);
        E.note_type(fresh, a->var_type);
        AssertionPtr body = substitute(a->parts[0], a->var, e_var(fresh));
        return gen(E, body, env, k);
      }
      default:
        if (is_fol(a)) return fol_filter(E, a, env, k);
        return E.enumerate_vars(unbound(free_vars(a), env), env, [&](const Env& env1) {
          Stack s = env_to_stack(env1);
          for (const auto& h : E.extensions(PermHeap())) {
            if (eval(E, a, s, h) && !k(env1, h, false)) return false;
          }
          return true;
        });
    }
  }

  static bool gen_points_to(Engine& E, const Assertion& a, const Env& env, const ModelFn& k) {
    auto with_addr = [&](const Env& env1, const Value& addr) {
      if (!addr.is_addr()) return true;
      auto emit = [&](const Env& env2, const Value& v) {
        PermHeap h;
        h.set(addr.as_addr(), a.perm, v);
        return k(env2, h, false);
      };
      if (a.val->kind == ExprKind::Var && !env1.count(a.val->name)) {
        for (const auto& v : E.domain(E.type_of(a.val->name))) {
          Env env2 = env1;
          env2[a.val->name] = v;
          if (!emit(env2, v)) return false;
        }
        return true;
      }
      return E.enumerate_vars(unbound(expr_vars(a.val), env1), env1, [&](const Env& env2) {
        try {
          return emit(env2, eval_expr(a.val, env_to_stack(env2)));
        } catch (const EvalError&) {
          return true;
        }
      });
    };
    if (a.addr->kind == ExprKind::Var && !env.count(a.addr->name)) {
      for (const auto& addr : E.domain(Type::Addr)) {
        Env env1 = env;
        env1[a.addr->name] = addr;
        if (!with_addr(env1, addr)) return false;
      }
      return true;
    }
    return E.enumerate_vars(unbound(expr_vars(a.addr), env), env, [&](const Env& env1) {
      try {
        return with_addr(env1, eval_expr(a.addr, env_to_stack(env1)));
      } catch (const EvalError&) {
        return true;
      }
    });
  }

  static bool gen_chain(Engine& E, const std::vector<AssertionPtr>& parts, std::size_t i, const Env& env,
                        const PermHeap& acc, bool open, const ModelFn& k) {
    if (i == parts.size()) return k(env, acc, open);
    return gen(E, parts[i], env, [&](const Env& env1, const PermHeap& h1, bool o1) {
      auto sum = heap_add(acc, h1);
      if (!sum) return true;
      return gen_chain(E, parts, i + 1, env1, *sum, open || o1, k);
    });
  }
};

Engine::Engine(const Domains& d, const std::vector<AssertionPtr>& scope, TypeEnv types)
    : d_(d), types_(std::move(types)) {
  fractions_.insert(Perm(1));
  for (const auto& a : scope) {
    for (const auto& p : assertion_perms(a)) fractions_.insert(p);
    for (const auto& g : assertion_ghosts(a)) ghosts_.insert(g);
  }
}

void Engine::tick() {
  if (++steps_ > d_.budget) throw BudgetExceeded("search budget of " + std::to_string(d_.budget) + " nodes exhausted");
}

Type Engine::type_of(const std::string& var) const { return types_.var(var); }

std::vector<Value> Engine::domain(Type t) {
  int key = static_cast<int>(t);
  auto it = domain_cache_.find(key);
  if (it != domain_cache_.end()) return it->second;
  std::vector<Value> out;
  switch (t) {
    case Type::Int:
      for (auto i = d_.int_lo; i <= d_.int_hi; ++i) out.push_back(Value::integer(i));
      break;
    case Type::Bool:
      out = {Value::boolean(false), Value::boolean(true)};
      break;
    case Type::Addr:
      for (int i = 0; i < d_.addr_count; ++i) out.push_back(Value::address(Address::ordinary(i)));
      for (const auto& g : ghosts_) out.push_back(Value::address(Address::ghost_named(g)));
      break;
    case Type::Seq: {
      auto width = static_cast<std::uint64_t>(d_.int_hi - d_.int_lo + 1);
      std::uint64_t total = 1;
      std::uint64_t layer = 1;
      for (int len = 1; len <= d_.max_seq_len; ++len) {
        layer *= width;
        total += layer;
        if (total > 200'000) throw BudgetExceeded("sequence domain too large; lower maxSeqLen or intRange");
      }
      std::vector<ValueSeq> frontier = {ValueSeq{}};
      out.push_back(Value::sequence({}));
      for (int len = 1; len <= d_.max_seq_len; ++len) {
        std::vector<ValueSeq> next;
        for (const auto& prefix : frontier) {
          for (auto i = d_.int_lo; i <= d_.int_hi; ++i) {
            ValueSeq items = prefix;
            items.push_back(Value::integer(i));
            out.push_back(Value::sequence(items));
            next.push_back(std::move(items));
          }
        }
        frontier = std::move(next);
      }
      break;
    }
    case Type::Unknown: {
      out = domain(Type::Int);
      out.push_back(Value::boolean(false));
      out.push_back(Value::boolean(true));
      break;
    }
  }
  domain_cache_[key] = out;
  return out;
}

bool Engine::enumerate_vars(const std::vector<std::string>& vars, const Env& env,
                            const std::function<bool(const Env&)>& fn) {
  std::function<bool(std::size_t, Env&)> go = [&](std::size_t i, Env& cur) -> bool {
    if (i == vars.size()) return fn(cur);
    if (cur.count(vars[i])) return go(i + 1, cur);
    for (const auto& v : domain(type_of(vars[i]))) {
      tick();
      cur[vars[i]] = v;
      if (!go(i + 1, cur)) return false;
    }
    cur.erase(vars[i]);
    return true;
  };
  Env cur = env;
  return go(0, cur);
}

std::vector<PermHeap> Engine::extensions(const PermHeap& h) {
  std::vector<Address> universe;
  for (int i = 0; i < d_.addr_count; ++i) universe.push_back(Address::ordinary(i));
  for (const auto& g : ghosts_) universe.push_back(Address::ghost_named(g));

  auto cell_options = [&](const Address& a) {
    std::vector<Cell> opts;
    const Cell* have = h.find(a);
    Perm room = have ? Perm(1) - have->perm : Perm(1);
    std::vector<Value> values;
    if (have) {
      values = {have->value};
    } else if (a.is_ghost()) {
      auto it = types_.ghosts.find(a.ghost);
      values = domain(it == types_.ghosts.end() ? Type::Unknown : it->second);
    } else {
      values = domain(Type::Unknown);
    }
    for (const auto& f : fractions_) {
      if (f > room) continue;
      for (const auto& v : values) opts.push_back(Cell{f, v});
    }
    return opts;
  };

  std::vector<PermHeap> out = {PermHeap()};
  std::function<void(std::size_t, const PermHeap&, int)> go = [&](std::size_t i, const PermHeap& cur, int used) {
    if (i == universe.size() || used == d_.max_heap_cells) return;
    for (std::size_t j = i; j < universe.size(); ++j) {
      for (const auto& c : cell_options(universe[j])) {
        tick();
        PermHeap next = cur;
        next.set(universe[j], c.perm, c.value);
        out.push_back(next);
        go(j + 1, next, used + 1);
      }
    }
  };
  go(0, PermHeap(), 0);
  return out;
}

bool Engine::eval(const AssertionPtr& a, const Stack& s, const PermHeap& h) { return Impl::eval(*this, a, s, h); }

std::vector<PermHeap> Engine::subheaps(const AssertionPtr& a, const Stack& s, const PermHeap& h) {
  return Impl::subheaps(*this, a, s, h);
}

bool Engine::models(const AssertionPtr& a, const Env& fixed, const ModelFn& fn) {
  return Impl::gen(*this, a, fixed, fn);
}

bool eval_assertion(const Stack& s, const PermHeap& h, const AssertionPtr& a, const Domains& d,
                    const TypeEnv& types) {
  TypeEnv env = types;
  AssertionPtr annotated = a;
  try {
    annotated = annotate_assertion(a, env);
  } catch (const TypeCheckError&) {
  }
  Engine engine(d, {annotated}, env);
  return engine.eval(annotated, s, h);
}

const char* verdict_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::Valid: return "valid";
    case VerdictKind::Counterexample: return "counterexample";
    case VerdictKind::Inconclusive: return "inconclusive";
  }
  return "?";
}

nlohmann::json Verdict::to_json() const {
  nlohmann::json j = {{"verdict", verdict_name(kind)}};
  if (stack) j["stack"] = stack_to_json(*stack);
  if (heap) j["heap"] = heap_to_json(*heap);
  if (heap2) j["heap2"] = heap_to_json(*heap2);
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

namespace {

Stack restrict_env(const Env& env, const std::set<std::string>& keep) {
  Stack s;
  for (const auto& [x, v] : env) {
    if (keep.count(x)) s.set(x, v);
  }
  return s;
}

std::vector<AssertionPtr> prepare(const std::vector<AssertionPtr>& as, TypeEnv& env) {
  std::vector<AssertionPtr> lifted;
  for (const auto& a : as) lifted.push_back(lift_pure(a));
  try {
    return annotate_assertions(lifted, env);
  } catch (const TypeCheckError&) {
    return lifted;
  }
}

}  // namespace

Verdict check_entailment(const AssertionPtr& p, const AssertionPtr& q, const Domains& d, const TypeEnv& types) {
  Verdict verdict;
  if (alpha_equal(p, q)) {
    verdict.kind = VerdictKind::Valid;
    verdict.detail = "syntactically equal";
    return verdict;
  }
  TypeEnv env = types;
  auto prepared = prepare({p, q}, env);
  const AssertionPtr& P = prepared[0];
  const AssertionPtr& Q = prepared[1];
  std::set<std::string> fv = free_vars(P);
  auto fvq = free_vars(Q);
  fv.insert(fvq.begin(), fvq.end());
  std::vector<std::string> qvars(fvq.begin(), fvq.end());

  Engine engine(d, {P, Q}, env);
  verdict.kind = VerdictKind::Valid;
  try {
    engine.models(P, {}, [&](const Env& env1, const PermHeap& h, bool open) {
      return engine.enumerate_vars(qvars, env1, [&](const Env& env2) {
        Stack s = env_to_stack(env2);
        auto fail = [&](const PermHeap& witness) {
          verdict.kind = VerdictKind::Counterexample;
          verdict.stack = restrict_env(env2, fv);
          verdict.heap = witness;
          return false;
        };
        if (!open) return engine.eval(Q, s, h) ? true : fail(h);
        for (const auto& ext : engine.extensions(h)) {
          auto hh = heap_add(h, ext);
          if (hh && !engine.eval(Q, s, *hh)) return fail(*hh);
        }
        return true;
      });
    });
  } catch (const BudgetExceeded& e) {
    verdict = Verdict{};
    verdict.kind = VerdictKind::Inconclusive;
    verdict.detail = e.what();
  }
  return verdict;
}

Verdict check_validity(const AssertionPtr& a, const Domains& d, const TypeEnv& types) {
  return check_entailment(a_true(), a, d, types);
}

Verdict check_precise(const AssertionPtr& p, const Domains& d, const TypeEnv& types) {
  TypeEnv env = types;
  AssertionPtr P = prepare({p}, env).front();
  auto fv = free_vars(P);
  std::vector<std::string> vars(fv.begin(), fv.end());
  Engine engine(d, {P}, env);
  Verdict verdict;
  verdict.kind = VerdictKind::Valid;
  std::map<Stack, std::vector<PermHeap>> by_stack;
  auto witness = [&](const Stack& s, const PermHeap& a, const PermHeap& b) {
    verdict.kind = VerdictKind::Counterexample;
    verdict.stack = s;
    verdict.heap = a;
    verdict.heap2 = b;
    verdict.detail = "two distinct subheaps satisfy the assertion";
  };
  try {
    engine.models(P, {}, [&](const Env& env1, const PermHeap& h, bool open) {
      return engine.enumerate_vars(vars, env1, [&](const Env& env2) {
        Stack s = restrict_env(env2, fv);
        if (open) {
          for (const auto& ext : engine.extensions(h)) {
            if (ext.empty()) continue;
            if (auto hh = heap_add(h, ext)) {
              witness(s, h, *hh);
              return false;
            }
          }
        }
        by_stack[s].push_back(h);
        return true;
      });
    });
    if (verdict.kind == VerdictKind::Valid) {
      for (auto& [s, heaps] : by_stack) {
        std::sort(heaps.begin(), heaps.end());
        heaps.erase(std::unique(heaps.begin(), heaps.end()), heaps.end());
        for (std::size_t i = 0; i < heaps.size() && verdict.kind == VerdictKind::Valid; ++i) {
          for (std::size_t j = i + 1; j < heaps.size(); ++j) {
            bool compatible = true;
            for (const auto& [addr, c] : heaps[i].cells()) {
              const Cell* other = heaps[j].find(addr);
              if (other && other->value != c.value) {
                compatible = false;
                break;
              }
            }
            if (compatible) {
              witness(s, heaps[i], heaps[j]);
              break;
            }
          }
        }
        if (verdict.kind != VerdictKind::Valid) break;
      }
    }
  } catch (const BudgetExceeded& e) {
    verdict = Verdict{};
    verdict.kind = VerdictKind::Inconclusive;
    verdict.detail = e.what();
  }
  return verdict;
}

}  // namespace refine
