#include "refine/shape.hpp"

#include "refine/expr_eval.hpp"

#include <algorithm>
#include <map>

namespace refine {

namespace {

bool is_true(const AssertionPtr& a) {
  return a->kind == AKind::Pure && a->expr->kind == ExprKind::Const && a->expr->value == Value::boolean(true);
}

bool has_index(const ExprPtr& e) {
  if (e->kind == ExprKind::Binary && e->op == Op::Index) return true;
  return std::any_of(e->args.begin(), e->args.end(), [](const ExprPtr& x) { return has_index(x); });
}

// Pure atoms that hold on every stack: E == E for an E that cannot fail, and
// closed expressions evaluating to true.
bool trivially_true(const AssertionPtr& a) {
  if (a->kind != AKind::Pure) return false;
  const auto& e = a->expr;
  if (e->kind == ExprKind::Binary && e->op == Op::Eq && !has_index(e) && expr_equal(e->args[0], e->args[1])) {
    return true;
  }
  if (!expr_vars(e).empty()) return false;
  try {
    return eval_expr(e, Stack()) == Value::boolean(true);
  } catch (const EvalError&) {
    return false;
  }
}

// Binder names are masked in sort keys so that the order of parts does not
// depend on which temporary name a binder received.
std::string masked(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 1 < s.size() && s[i + 1] == 't') {
      out += '%';
      i += 2;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      --i;
      continue;
    }
    out += s[i];
  }
  return out;
}

void sort_parts(std::vector<AssertionPtr>& parts, bool dedupe) {
  std::vector<std::pair<std::pair<std::string, std::string>, AssertionPtr>> keyed;
  for (const auto& p : parts) {
    auto s = assertion_to_string(p);
    keyed.push_back({{masked(s), s}, p});
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  if (dedupe) {
    keyed.erase(std::unique(keyed.begin(), keyed.end(),
                            [](const auto& x, const auto& y) { return x.first.second == y.first.second; }),
                keyed.end());
  }
  parts.clear();
  for (auto& kp : keyed) parts.push_back(kp.second);
}

void disjuncts(const AssertionPtr& a, std::vector<AssertionPtr>& out) {
  AssertionPtr l, r;
  if (match_or(a, &l, &r)) {
    disjuncts(l, out);
    disjuncts(r, out);
  } else {
    out.push_back(a);
  }
}

AssertionPtr or_all(const std::vector<AssertionPtr>& ds) {
  AssertionPtr acc = ds.back();
  for (std::size_t i = ds.size() - 1; i-- > 0;) acc = a_or(ds[i], acc);
  return acc;
}

class Canon {
 public:
  AssertionPtr run(const AssertionPtr& a) { return name(pass(lift_pure(a)), 0); }

 private:
  int counter_ = 0;

  std::string temp() { return "%t" + std::to_string(counter_++); }

  // Splits a leading block of existentials off `a`.
  static AssertionPtr strip(const AssertionPtr& a, std::vector<std::string>& binders) {
    AssertionPtr cur = a;
    while (cur->kind == AKind::Exists) {
      binders.push_back(cur->var);
      cur = cur->parts[0];
    }
    return cur;
  }

  static AssertionPtr wrap(const std::vector<std::string>& binders, AssertionPtr body) {
    auto fv = free_vars(body);
    for (std::size_t i = binders.size(); i-- > 0;) {
      if (fv.count(binders[i])) body = a_exists(binders[i], body);
    }
    return body;
  }

  AssertionPtr pass(const AssertionPtr& a) {
    AssertionPtr l, r;
    if (match_or(a, &l, &r)) return disjunction(a);
    switch (a->kind) {
      case AKind::And: return conjunction(a);
      case AKind::Sep:
      case AKind::IterSep: return separation(a);
      case AKind::Not:
        if (a->parts[0]->kind == AKind::Not) return pass(a->parts[0]->parts[0]);
        return a_not(pass(a->parts[0]));
      case AKind::Exists: {
        std::string t = temp();
        auto body = pass(substitute(a->parts[0], a->var, e_var(t)));
        if (!free_vars(body).count(t)) return body;
        std::vector<AssertionPtr> ds;
        disjuncts(body, ds);
        if (ds.size() > 1) {
          for (auto& d : ds) d = wrap({t}, d);
          return or_all(ds);
        }
        return a_exists(t, body);
      }
      case AKind::Forall: {
        std::string t = temp();
        return a_forall(t, pass(substitute(a->parts[0], a->var, e_var(t))));
      }
      case AKind::Wand: return a_wand(pass(a->parts[0]), pass(a->parts[1]));
      default: return a;
    }
  }

  AssertionPtr disjunction(const AssertionPtr& a) {
    std::vector<AssertionPtr> raw, ds;
    disjuncts(a, raw);
    for (const auto& d : raw) {
      auto c = pass(d);
      if (is_true(c)) return a_true();
      disjuncts(c, ds);
    }
    sort_parts(ds, true);
    return or_all(ds);
  }

  // Collects conjuncts of an already normalized assertion; leading binders
  // are moved to `binders` when it is given.
  static void flatten_and(const AssertionPtr& a, std::vector<AssertionPtr>& out, std::vector<std::string>* binders) {
    auto body = binders ? strip(a, *binders) : a;
    if (body->kind == AKind::And) {
      for (const auto& p : body->parts) flatten_and(p, out, binders);
    } else {
      out.push_back(body);
    }
  }

  AssertionPtr conjunction(const AssertionPtr& a) {
    std::vector<AssertionPtr> raw, parts;
    std::vector<std::string> binders;
    for (const auto& p : a->parts) flatten_and(pass(p), raw, &binders);
    for (const auto& p : raw) {
      if (!is_true(p) && !trivially_true(p)) parts.push_back(p);
    }
    if (parts.empty()) return a_true();
    sort_parts(parts, true);
    return wrap(binders, a_and_all(parts));
  }

  void flatten_sep(const AssertionPtr& a, std::vector<AssertionPtr>& out) {
    if (a->kind == AKind::Sep || a->kind == AKind::IterSep) {
      for (const auto& p : a->parts) flatten_sep(p, out);
    } else {
      out.push_back(a);
    }
  }

  AssertionPtr separation(const AssertionPtr& a) {
    std::vector<AssertionPtr> raw, spatial, pure;
    std::vector<std::string> binders;
    flatten_sep(a, raw);
    for (const auto& p : raw) {
      auto c = strip(pass(p), binders);
      std::vector<AssertionPtr> sub;
      flatten_sep(c, sub);
      for (const auto& s : sub) {
        if (s->kind == AKind::Emp) continue;
        if (s->kind != AKind::And) {
          spatial.push_back(s);
          continue;
        }
        std::vector<AssertionPtr> conj, heapy;
        bool had_emp = false;
        flatten_and(s, conj, &binders);
        for (const auto& x : conj) {
          if (x->kind == AKind::Emp) {
            had_emp = true;
          } else if (!is_fol(x)) {
            heapy.push_back(x);
          }
        }
        if (heapy.empty() && !had_emp) {
          // A first-order part holds on any heap; it is not a unit of **.
          spatial.push_back(s);
          continue;
        }
        for (const auto& x : conj) {
          if (is_fol(x)) pure.push_back(x);
        }
        if (!heapy.empty()) spatial.push_back(heapy.size() == 1 ? heapy.front() : a_and_all(heapy));
      }
    }
    sort_parts(spatial, false);
    AssertionPtr body = spatial.empty() ? a_emp() : a_sep_all(spatial);
    if (!pure.empty()) {
      pure.push_back(body);
      body = conjunction(a_and_all(pure));
    }
    return wrap(binders, body);
  }

  // Final binder names depend only on the structure of the body.
  AssertionPtr name(const AssertionPtr& a, int depth) {
    AssertionPtr l, r;
    if (match_or(a, &l, &r)) {
      std::vector<AssertionPtr> ds;
      disjuncts(a, ds);
      for (auto& d : ds) d = name(d, depth);
      sort_parts(ds, true);
      return or_all(ds);
    }
    switch (a->kind) {
      case AKind::Exists: {
        std::vector<std::string> binders;
        auto body = strip(a, binders);
        auto text = assertion_to_string(body);
        std::vector<std::pair<std::string, std::string>> keyed;
        for (const auto& b : binders) {
          std::string marked;
          for (std::size_t i = 0; i < text.size();) {
            if (text.compare(i, b.size(), b) == 0 &&
                (i + b.size() >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i + b.size()])))) {
              marked += '#';
              i += b.size();
            } else {
              marked += text[i++];
            }
          }
          keyed.emplace_back(masked(marked), b);
        }
        std::stable_sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        std::map<std::string, ExprPtr> ren;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < keyed.size(); ++i) {
          names.push_back("%q" + std::to_string(depth + static_cast<int>(i)));
          ren[keyed[i].second] = e_var(names.back());
        }
        body = name(substitute_all(body, ren), depth + static_cast<int>(names.size()));
        for (std::size_t i = names.size(); i-- > 0;) body = a_exists(names[i], body);
        return body;
      }
      case AKind::Forall: {
        std::string n = "%q" + std::to_string(depth);
        return a_forall(n, name(substitute(a->parts[0], a->var, e_var(n)), depth + 1));
      }
      case AKind::And:
      case AKind::Sep:
      case AKind::IterSep: {
        std::vector<AssertionPtr> parts;
        std::vector<AssertionPtr> flat;
        if (a->kind == AKind::And) {
          flatten_and(a, flat, nullptr);
        } else {
          flatten_sep(a, flat);
        }
        for (const auto& p : flat) parts.push_back(name(p, depth));
        sort_parts(parts, a->kind == AKind::And);
        return a->kind == AKind::And ? a_and_all(parts) : a_sep_all(parts);
      }
      case AKind::Not: return a_not(name(a->parts[0], depth));
      case AKind::Wand: return a_wand(name(a->parts[0], depth), name(a->parts[1], depth));
      default: return a;
    }
  }
};

void conjuncts(const AssertionPtr& a, std::vector<AssertionPtr>& out) {
  if (a->kind == AKind::And) {
    for (const auto& p : a->parts) conjuncts(p, out);
  } else {
    out.push_back(a);
  }
}

void collect_points_to(const AssertionPtr& a, std::vector<AssertionPtr>& out) {
  if (a->kind == AKind::PointsTo) {
    out.push_back(a);
  } else if (a->kind == AKind::And || a->kind == AKind::Sep || a->kind == AKind::IterSep) {
    for (const auto& p : a->parts) collect_points_to(p, out);
  }
}

bool contains(const std::vector<AssertionPtr>& set, const AssertionPtr& x) {
  return std::any_of(set.begin(), set.end(), [&](const AssertionPtr& y) { return assertion_equal(x, y); });
}

// p and q canonical, p without leading existentials.
bool direct(const AssertionPtr& p, const AssertionPtr& q) {
  if (assertion_equal(p, q) || is_true(q)) return true;
  std::vector<AssertionPtr> cp, cq;
  conjuncts(p, cp);
  conjuncts(q, cq);
  return std::all_of(cq.begin(), cq.end(), [&](const AssertionPtr& x) { return contains(cp, x); });
}

bool entails_canon(const AssertionPtr& p, const AssertionPtr& q, int depth);

// Existential introduction: find witnesses for q's leading binders among the
// values p stores at the same addresses, then p's variables and stored values.
bool instance(const AssertionPtr& p, const AssertionPtr& q, int depth) {
  std::vector<std::string> ys;
  AssertionPtr body = q;
  while (body->kind == AKind::Exists) {
    ys.push_back(body->var);
    body = body->parts[0];
  }
  if (ys.empty()) return false;
  std::vector<AssertionPtr> pp, qp;
  collect_points_to(p, pp);
  collect_points_to(body, qp);
  std::vector<ExprPtr> general;
  for (const auto& v : free_vars(p)) general.push_back(e_var(v));
  for (const auto& a : pp) general.push_back(a->val);
  std::vector<std::vector<ExprPtr>> cands;
  std::size_t product = 1;
  for (const auto& y : ys) {
    std::vector<ExprPtr> c;
    for (const auto& qa : qp) {
      if (qa->val->kind != ExprKind::Var || qa->val->name != y) continue;
      for (const auto& pa : pp) {
        if (expr_equal(pa->addr, qa->addr) && pa->perm == qa->perm) c.push_back(pa->val);
      }
    }
    if (c.empty()) c = general;
    if (c.empty()) return false;
    product *= c.size();
    if (product > 512) return false;
    cands.push_back(std::move(c));
  }
  std::vector<std::size_t> idx(ys.size(), 0);
  for (;;) {
    std::map<std::string, ExprPtr> sub;
    for (std::size_t i = 0; i < ys.size(); ++i) sub[ys[i]] = cands[i][idx[i]];
    if (entails_canon(p, canon(substitute_all(body, sub)), depth + 1)) return true;
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == cands[i].size()) idx[i++] = 0;
    if (i == idx.size()) return false;
  }
}

bool entails_canon(const AssertionPtr& p, const AssertionPtr& q, int depth) {
  if (depth > 3) return false;
  std::vector<AssertionPtr> dp, dq;
  disjuncts(p, dp);
  if (dp.size() > 1) {
    return std::all_of(dp.begin(), dp.end(), [&](const AssertionPtr& d) { return entails_canon(d, q, depth + 1); });
  }
  // Skolemize p's binders; the fresh names cannot occur in q.
  if (p->kind == AKind::Exists) {
    AssertionPtr body = p;
    std::map<std::string, ExprPtr> sub;
    int k = 0;
    while (body->kind == AKind::Exists) {
      sub[body->var] = e_var("%s" + std::to_string(depth) + "_" + std::to_string(k++));
      body = body->parts[0];
    }
    return entails_canon(canon(substitute_all(body, sub)), q, depth + 1);
  }
  if (direct(p, q)) return true;
  disjuncts(q, dq);
  if (dq.size() > 1) {
    for (const auto& d : dq) {
      if (direct(p, d) || (d->kind == AKind::Exists && instance(p, d, depth))) return true;
    }
    return false;
  }
  return instance(p, q, depth);
}

}  // namespace

AssertionPtr canon(const AssertionPtr& a) { return Canon().run(a); }

bool syntactic_entails(const AssertionPtr& p, const AssertionPtr& q) { return entails_canon(canon(p), canon(q), 0); }

bool same_shape(const AssertionPtr& a, const AssertionPtr& b) {
  if (!a || !b) return a == b;
  return alpha_equal(a, b) || assertion_equal(canon(a), canon(b));
}

ExprPtr subst_ghost_reads(const ExprPtr& e, const std::map<std::string, ExprPtr>& cells) {
  if (e->kind == ExprKind::Ghost) {
    auto it = cells.find(e->name);
    return it == cells.end() ? e : it->second;
  }
  if (e->args.empty()) return e;
  std::vector<ExprPtr> args;
  for (const auto& a : e->args) args.push_back(subst_ghost_reads(a, cells));
  if (e->kind == ExprKind::SeqLit) return e_seq(std::move(args));
  if (e->kind == ExprKind::Unary) return e_unary(e->op, args[0]);
  return e_binary(e->op, args[0], args[1]);
}

}  // namespace refine
