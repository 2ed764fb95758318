#include "refine/proof.hpp"

#include "refine/ats.hpp"
#include "refine/expr_eval.hpp"
#include "refine/semantics.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace refine {

std::size_t Derivation::size() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c->size();
  return n;
}

const std::vector<std::string>& proof_rule_names() {
  static const std::vector<std::string> names = {
      "Skip", "Assign", "Write", "Read", "Alloc", "Free", "Seq",  "Cond",  "While", "Par",  "Lock",
      "With", "Frame",  "Cons",  "Ex",   "Conj",  "Disj", "Init", "Next",  "Print", "GhostAssign",
  };
  return names;
}

const char* reason_name(ProofReason r) {
  switch (r) {
    case ProofReason::None: return "None";
    case ProofReason::RuleShapeMismatch: return "RuleShapeMismatch";
    case ProofReason::SideConditionViolation: return "SideConditionViolation";
    case ProofReason::EntailmentFailed: return "EntailmentFailed";
    case ProofReason::EntailmentInconclusive: return "EntailmentInconclusive";
    case ProofReason::AtomicityViolation: return "AtomicityViolation";
    case ProofReason::PrecisionViolation: return "PrecisionViolation";
    case ProofReason::GhostLockMisuse: return "GhostLockMisuse";
  }
  return "?";
}

std::string CheckResult::path_string() const {
  std::string out = "root";
  for (auto i : path) out += "/" + std::to_string(i);
  return out;
}

nlohmann::json CheckResult::to_json() const {
  nlohmann::json j = {{"accepted", accepted}, {"nodes", nodes}, {"entailments", entailments}};
  if (!accepted) {
    j["path"] = path_string();
    j["rule"] = rule;
    j["reason"] = reason_name(reason);
    j["detail"] = detail;
    if (!counterexample.is_null()) j["counterexample"] = counterexample;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Rule instances
// ---------------------------------------------------------------------------

AssertionPtr ats_points_to(const AtsSpec& spec, const std::vector<ExprPtr>& vals, Perm rho) {
  std::vector<AssertionPtr> parts;
  for (std::size_t i = 0; i < spec.k(); ++i) parts.push_back(a_apt(ats_ghost(spec, i), rho, vals[i]));
  return a_sep_all(parts);
}

namespace {

std::vector<std::string> binder_names(const AtsSpec& spec, const std::set<std::string>& avoid) {
  std::set<std::string> used = avoid;
  for (const auto& x : spec.vars) {
    used.insert(x);
    used.insert(x + "'");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < spec.k(); ++i) {
    out.push_back(fresh_name("y" + std::to_string(i + 1), used));
    used.insert(out.back());
  }
  return out;
}

std::vector<ExprPtr> as_vars(const std::vector<std::string>& names) {
  std::vector<ExprPtr> out;
  for (const auto& n : names) out.push_back(e_var(n));
  return out;
}

AssertionPtr close_exists(const std::vector<std::string>& ys, const AtsSpec& spec, AssertionPtr body) {
  for (std::size_t i = ys.size(); i-- > 0;) body = a_exists(ys[i], body, spec.types[i]);
  return body;
}

}  // namespace

AssertionPtr init_rule_pre(const AtsSpec& spec, const AssertionPtr& g, Perm rho, const AssertionPtr& p) {
  auto avoid = free_vars(g);
  auto fp = free_vars(p);
  avoid.insert(fp.begin(), fp.end());
  auto ys = binder_names(spec, avoid);
  std::map<std::string, ExprPtr> sub;
  for (std::size_t i = 0; i < spec.k(); ++i) sub[spec.vars[i]] = e_var(ys[i]);
  auto body = a_and(a_and(ats_points_to(spec, as_vars(ys), rho), substitute_all(spec.init, sub)), g);
  return a_sep(close_exists(ys, spec, body), p);
}

AssertionPtr next_premise_pre(const AtsSpec& spec, const AssertionPtr& g, Perm rho,
                              const std::vector<std::string>& o, const AssertionPtr& p) {
  return a_sep(a_and(ats_points_to(spec, as_vars(o), rho), g), p);
}

AssertionPtr next_premise_post(const AtsSpec& spec, const AssertionPtr& g, Perm rho,
                               const std::vector<std::string>& o, const AssertionPtr& q) {
  auto avoid = free_vars(g);
  auto fq = free_vars(q);
  avoid.insert(fq.begin(), fq.end());
  avoid.insert(o.begin(), o.end());
  auto ys = binder_names(spec, avoid);
  std::map<std::string, ExprPtr> sub;
  for (std::size_t i = 0; i < spec.k(); ++i) {
    sub[spec.vars[i]] = e_var(o[i]);
    sub[spec.vars[i] + "'"] = e_var(ys[i]);
  }
  auto body = a_and(a_and(ats_points_to(spec, as_vars(ys), rho), substitute_all(spec.next, sub)), g);
  return a_sep(close_exists(ys, spec, body), q);
}

std::vector<std::string> next_fresh_names(std::size_t k, const std::set<std::string>& avoid) {
  std::set<std::string> used = avoid;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(fresh_name("o" + std::to_string(i + 1), used));
    used.insert(out.back());
  }
  return out;
}

std::set<std::string> next_avoid_set(const Derivation& n) {
  std::set<std::string> avoid = free_vars(n.pre);
  auto fq = free_vars(n.post);
  avoid.insert(fq.begin(), fq.end());
  auto fc = command_vars(n.cmd);
  avoid.insert(fc.begin(), fc.end());
  auto fe = fv_env(n.env);
  avoid.insert(fe.begin(), fe.end());
  return avoid;
}

// ---------------------------------------------------------------------------
// Checker
// ---------------------------------------------------------------------------

namespace {

struct Failure {
  ProofReason reason;
  std::string detail;
  nlohmann::json counterexample;
};

using MaybeFailure = std::optional<Failure>;

std::string str(const AssertionPtr& a) { return a ? assertion_to_string(a) : std::string("<missing>"); }

bool env_equal(const LockEnv& a, const LockEnv& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first || !same_shape(a[i].second, b[i].second)) return false;
  }
  return true;
}

LockEnv without(const LockEnv& env, const std::string& lock) {
  LockEnv out;
  for (const auto& b : env) {
    if (b.first != lock) out.push_back(b);
  }
  return out;
}

bool is_ghost_lock(const std::string& l) { return l == kGhostLock || l == kInitToken; }

std::string join(const std::set<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
  return out;
}

std::set<std::string> intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
  return out;
}

// Matches exists y. E |->1 y with y not free in E.
bool is_full_alloc(const AssertionPtr& a, const ExprPtr& addr) {
  if (a->kind != AKind::Exists) return false;
  const auto& body = a->parts[0];
  return body->kind == AKind::PointsTo && body->perm == Perm(1) && expr_equal(body->addr, addr) &&
         body->val->kind == ExprKind::Var && body->val->name == a->var && !expr_vars(addr).count(a->var);
}

void flatten_sep(const AssertionPtr& a, std::vector<AssertionPtr>& out) {
  if (a->kind == AKind::Sep || a->kind == AKind::IterSep) {
    for (const auto& p : a->parts) flatten_sep(p, out);
  } else {
    out.push_back(a);
  }
}

class Checker {
 public:
  explicit Checker(const ProofContext& ctx) : ctx_(ctx) {}

  MaybeFailure check(const Derivation& n) {
    if (!n.pre || !n.post || !n.cmd) return Failure{ProofReason::RuleShapeMismatch, "node lacks pre, post or command", {}};
    const auto& names = proof_rule_names();
    if (std::find(names.begin(), names.end(), n.rule) == names.end()) {
      return Failure{ProofReason::RuleShapeMismatch, "unknown rule '" + n.rule + "'", {}};
    }
    static const std::map<std::string, std::size_t> arity = {
        {"Seq", 2}, {"Cond", 2}, {"Par", 2},  {"Conj", 2}, {"Disj", 2},  {"While", 1}, {"Lock", 1},
        {"With", 1}, {"Frame", 1}, {"Cons", 1}, {"Ex", 1}, {"Init", 1}, {"Next", 1},
    };
    auto it = arity.find(n.rule);
    std::size_t want = it == arity.end() ? 0 : it->second;
    if (n.children.size() != want) {
      return Failure{ProofReason::RuleShapeMismatch,
                     n.rule + " takes " + std::to_string(want) + " premises, got " + std::to_string(n.children.size()), {}};
    }
    for (const auto& c : n.children) {
      if (!c || !c->pre || !c->post || !c->cmd) return Failure{ProofReason::RuleShapeMismatch, "malformed premise", {}};
    }
    return dispatch(n);
  }

  std::size_t entailments() const { return entailments_.load(); }

 private:
  static MaybeFailure shape(bool ok, const std::string& what) {
    if (ok) return std::nullopt;
    return Failure{ProofReason::RuleShapeMismatch, what, {}};
  }
  static MaybeFailure expect(const AssertionPtr& got, const AssertionPtr& want, const std::string& what) {
    if (same_shape(got, want)) return std::nullopt;
    return Failure{ProofReason::RuleShapeMismatch, what + ": expected " + str(want) + ", got " + str(got), {}};
  }
  static MaybeFailure expect_cmd(const CommandPtr& got, const CommandPtr& want, const std::string& what) {
    if (got && want && command_equal(got, want)) return std::nullopt;
    return Failure{ProofReason::RuleShapeMismatch, what + " does not match the conclusion's command", {}};
  }
  static MaybeFailure expect_env(const Derivation& child, const LockEnv& want) {
    if (env_equal(child.env, want)) return std::nullopt;
    return Failure{ProofReason::RuleShapeMismatch, "premise lock environment does not match the rule", {}};
  }
  static MaybeFailure side(const std::set<std::string>& clash, const std::string& what) {
    if (clash.empty()) return std::nullopt;
    return Failure{ProofReason::SideConditionViolation, what + " violated by {" + join(clash) + "}", {}};
  }

  MaybeFailure entails(const AssertionPtr& p, const AssertionPtr& q, const std::string& what) {
    if (syntactic_entails(p, q)) return std::nullopt;
    std::string key = str(p) + "\n|=\n" + str(q);
    Verdict v;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) v = it->second;
    }
    if (v.kind == VerdictKind::Inconclusive && v.detail.empty()) {
      ++entailments_;
      v = check_entailment(p, q, ctx_.domains, ctx_.types);
      if (v.kind == VerdictKind::Inconclusive && v.detail.empty()) v.detail = "inconclusive";
      std::lock_guard<std::mutex> lock(mu_);
      cache_[key] = v;
    }
    if (v.valid()) return std::nullopt;
    if (v.kind == VerdictKind::Inconclusive) {
      return Failure{ProofReason::EntailmentInconclusive, what + ": " + v.detail, {}};
    }
    return Failure{ProofReason::EntailmentFailed, what + ": " + str(p) + " does not entail " + str(q), v.to_json()};
  }

  // Smallest rho with g |= acc(x^, rho) for every ATS variable x; cached per invariant text.
  std::variant<Perm, Failure> assumption1(const AssertionPtr& g) {
    std::string key = str(g);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = rho_cache_.find(key);
      if (it != rho_cache_.end()) return it->second;
    }
    TypeEnv types = ctx_.types;
    for (std::size_t i = 0; i < ctx_.ats->k(); ++i) {
      const auto& var = ctx_.ats->vars[i];
      auto ga = ctx_.ats->ghost_addr.find(var);
      types.ghosts[ga == ctx_.ats->ghost_addr.end() ? var : ga->second] = ctx_.ats->types[i];
    }
    auto r = check_assumption1(g, *ctx_.ats, ctx_.domains, types);
    std::variant<Perm, Failure> out = r.rho ? std::variant<Perm, Failure>(*r.rho)
                                            : Failure{r.verdict.kind == VerdictKind::Inconclusive
                                                          ? ProofReason::EntailmentInconclusive
                                                          : ProofReason::SideConditionViolation,
                                                      "ghost-lock invariant " + key +
                                                          " does not hold permission for every ATS variable",
                                                      r.verdict.to_json()};
    std::lock_guard<std::mutex> lock(mu_);
    rho_cache_.emplace(key, out);
    return out;
  }

  MaybeFailure dispatch(const Derivation& n) {
    const auto& c = *n.cmd;
    const auto& kids = n.children;
    auto cmd_is = [&](CmdKind k) { return shape(c.kind == k, n.rule + " does not apply to " + cmd_kind_name(c.kind)); };
    const std::string& r = n.rule;

    if (r == "Skip") {
      if (auto f = cmd_is(CmdKind::Skip)) return f;
      return expect(n.post, n.pre, "postcondition");
    }
    if (r == "Assign") {
      if (auto f = cmd_is(CmdKind::Assign)) return f;
      if (auto f = expect(n.pre, substitute(n.post, c.name, c.e1), "precondition")) return f;
      return side(intersect({c.name}, fv_env(n.env)), "x not in FV(Gamma)");
    }
    if (r == "Write") {
      if (auto f = cmd_is(CmdKind::Write)) return f;
      if (auto f = shape(is_full_alloc(n.pre, c.e1), "precondition must be exists y. E |-> y")) return f;
      return expect(n.post, a_pts(c.e1, Perm(1), c.e2), "postcondition");
    }
    if (r == "Read") {
      if (auto f = cmd_is(CmdKind::Read)) return f;
      if (auto f = shape(n.pre->kind == AKind::PointsTo && expr_equal(n.pre->addr, c.e1),
                         "precondition must be a points-to on the read address")) {
        return f;
      }
      auto want = a_and(n.pre, a_pure(e_binary(Op::Eq, e_var(c.name), n.pre->val)));
      if (auto f = expect(n.post, want, "postcondition")) return f;
      std::set<std::string> fv = expr_vars(c.e1);
      auto fv2 = expr_vars(n.pre->val);
      fv.insert(fv2.begin(), fv2.end());
      auto fe = fv_env(n.env);
      fv.insert(fe.begin(), fe.end());
      return side(intersect({c.name}, fv), "x not in FV(E, E', Gamma)");
    }
    if (r == "Alloc") {
      if (auto f = cmd_is(CmdKind::Alloc)) return f;
      if (auto f = expect(n.pre, a_emp(), "precondition")) return f;
      if (auto f = expect(n.post, a_pts(e_var(c.name), Perm(1), c.e1), "postcondition")) return f;
      auto fv = fv_env(n.env);
      auto fe = expr_vars(c.e1);
      fv.insert(fe.begin(), fe.end());
      return side(intersect({c.name}, fv), "x not in FV(Gamma, E)");
    }
    if (r == "Free") {
      if (auto f = cmd_is(CmdKind::Free)) return f;
      if (auto f = shape(is_full_alloc(n.pre, c.e1), "precondition must be exists y. E |-> y")) return f;
      if (auto f = expect(n.post, a_emp(), "postcondition")) return f;
      if (c.e1->kind == ExprKind::Ghost) {
        return Failure{ProofReason::SideConditionViolation, "E not in GhostAddrs violated by " + expr_to_string(c.e1), {}};
      }
      return std::nullopt;
    }
    if (r == "Print") {
      if (auto f = cmd_is(CmdKind::Print)) return f;
      if (!lock_bound(n.env, kInitToken) || !same_shape(lock_invariant(n.env, kInitToken), a_emp())) {
        return Failure{ProofReason::GhostLockMisuse, "print requires the initialization token I : emp in Gamma", {}};
      }
      auto out = e_ghost(kStdOut);
      if (auto f = shape(n.pre->kind == AKind::PointsTo && n.pre->perm == Perm(1) && expr_equal(n.pre->addr, out),
                         "precondition must be stdOut |-> E'")) {
        return f;
      }
      return expect(n.post, a_pts(out, Perm(1), e_binary(Op::Append, c.e1, n.pre->val)), "postcondition");
    }
    if (r == "GhostAssign") return ghost_assign(n);
    if (r == "Seq") {
      if (auto f = cmd_is(CmdKind::Seq)) return f;
      if (auto f = expect_cmd(kids[0]->cmd, c.c1, "first premise")) return f;
      if (auto f = expect_cmd(kids[1]->cmd, c.c2, "second premise")) return f;
      for (const auto& k : kids) {
        if (auto f = expect_env(*k, n.env)) return f;
      }
      if (auto f = expect(kids[0]->pre, n.pre, "first premise precondition")) return f;
      if (auto f = expect(kids[1]->pre, kids[0]->post, "intermediate assertion")) return f;
      return expect(kids[1]->post, n.post, "second premise postcondition");
    }
    if (r == "Cond") {
      if (auto f = cmd_is(CmdKind::Ite)) return f;
      if (auto f = expect_cmd(kids[0]->cmd, c.c1, "then premise")) return f;
      if (auto f = expect_cmd(kids[1]->cmd, c.c2, "else premise")) return f;
      for (const auto& k : kids) {
        if (auto f = expect_env(*k, n.env)) return f;
        if (auto f = expect(k->post, n.post, "branch postcondition")) return f;
      }
      if (auto f = expect(kids[0]->pre, a_and(n.pre, a_pure(c.e1)), "then precondition")) return f;
      return expect(kids[1]->pre, a_and(n.pre, a_pure(e_unary(Op::Not, c.e1))), "else precondition");
    }
    if (r == "While") {
      if (auto f = cmd_is(CmdKind::While)) return f;
      if (auto f = expect_cmd(kids[0]->cmd, c.c1, "body premise")) return f;
      if (auto f = expect_env(*kids[0], n.env)) return f;
      if (auto f = expect(kids[0]->pre, a_and(n.pre, a_pure(c.e1)), "body precondition")) return f;
      if (auto f = expect(kids[0]->post, n.pre, "body postcondition")) return f;
      return expect(n.post, a_and(n.pre, a_pure(e_unary(Op::Not, c.e1))), "postcondition");
    }
    if (r == "Par") {
      if (auto f = cmd_is(CmdKind::Par)) return f;
      if (auto f = expect_cmd(kids[0]->cmd, c.c1, "left premise")) return f;
      if (auto f = expect_cmd(kids[1]->cmd, c.c2, "right premise")) return f;
      for (const auto& k : kids) {
        if (auto f = expect_env(*k, n.env)) return f;
      }
      if (auto f = expect(n.pre, a_sep(kids[0]->pre, kids[1]->pre), "precondition")) return f;
      if (auto f = expect(n.post, a_sep(kids[0]->post, kids[1]->post), "postcondition")) return f;
      for (int i = 0; i < 2; ++i) {
        const auto& k = *kids[static_cast<std::size_t>(i)];
        auto fv = free_vars(k.pre);
        auto fq = free_vars(k.post);
        auto fc = command_vars(k.cmd);
        fv.insert(fq.begin(), fq.end());
        fv.insert(fc.begin(), fc.end());
        auto other = mod_set(kids[static_cast<std::size_t>(1 - i)]->cmd);
        if (auto f = side(intersect(fv, other), i == 0 ? "FV(P1, C1, Q1) disjoint from Mod(C2)"
                                                       : "FV(P2, C2, Q2) disjoint from Mod(C1)")) {
          return f;
        }
      }
      return std::nullopt;
    }
    if (r == "Lock") {
      if (auto f = cmd_is(CmdKind::LockDecl)) return f;
      if (is_ghost_lock(c.name)) return Failure{ProofReason::GhostLockMisuse, "Lock cannot declare " + c.name, {}};
      auto inv = c.inv ? c.inv : a_emp();
      if (auto f = expect_cmd(kids[0]->cmd, c.c1, "body premise")) return f;
      if (auto f = expect_env(*kids[0], extend(n.env, c.name, inv))) return f;
      if (auto f = expect(n.pre, a_sep(inv, kids[0]->pre), "precondition")) return f;
      return expect(n.post, a_sep(inv, kids[0]->post), "postcondition");
    }
    if (r == "With") {
      if (auto f = cmd_is(CmdKind::With)) return f;
      if (is_ghost_lock(c.name)) return Failure{ProofReason::GhostLockMisuse, "With cannot acquire " + c.name, {}};
      if (auto f = shape(lock_bound(n.env, c.name), "lock " + c.name + " is not in Gamma")) return f;
      auto inv = lock_invariant(n.env, c.name);
      if (auto f = expect_cmd(kids[0]->cmd, c.c1, "body premise")) return f;
      if (auto f = expect_env(*kids[0], without(n.env, c.name))) return f;
      if (auto f = expect(kids[0]->pre, a_and(a_sep(n.pre, inv), a_pure(c.e1)), "body precondition")) return f;
      return expect(kids[0]->post, a_sep(n.post, inv), "body postcondition");
    }
    if (r == "Frame") {
      if (auto f = shape(n.frame != nullptr, "Frame needs a frame witness")) return f;
      if (auto f = expect_cmd(kids[0]->cmd, n.cmd, "premise")) return f;
      if (auto f = expect_env(*kids[0], n.env)) return f;
      if (auto f = expect(n.pre, a_sep(kids[0]->pre, n.frame), "precondition")) return f;
      if (auto f = expect(n.post, a_sep(kids[0]->post, n.frame), "postcondition")) return f;
      return side(intersect(free_vars(n.frame), mod_set(n.cmd)), "FV(R) disjoint from Mod(C)");
    }
    if (r == "Cons") {
      if (auto f = expect_cmd(kids[0]->cmd, n.cmd, "premise")) return f;
      if (auto f = expect_env(*kids[0], n.env)) return f;
      if (auto f = entails(n.pre, kids[0]->pre, "P' |= P")) return f;
      return entails(kids[0]->post, n.post, "Q |= Q'");
    }
    if (r == "Ex") {
      if (auto f = shape(!n.var.empty(), "Ex needs the quantified variable")) return f;
      if (auto f = expect_cmd(kids[0]->cmd, n.cmd, "premise")) return f;
      if (auto f = expect_env(*kids[0], n.env)) return f;
      if (auto f = expect(n.pre, a_exists(n.var, kids[0]->pre), "precondition")) return f;
      bool post_ok = same_shape(n.post, a_exists(n.var, kids[0]->post)) ||
                     (!free_vars(kids[0]->post).count(n.var) && same_shape(n.post, kids[0]->post));
      if (auto f = shape(post_ok, "postcondition must be exists " + n.var + ". Q")) return f;
      if (auto f = side(intersect({n.var}, command_vars(n.cmd)), "x not in FV(C)")) return f;
      return side(intersect({n.var}, fv_env(n.env)), "x not in FV(Gamma)");
    }
    if (r == "Conj" || r == "Disj") {
      for (const auto& k : kids) {
        if (auto f = expect_cmd(k->cmd, n.cmd, "premise")) return f;
        if (auto f = expect_env(*k, n.env)) return f;
      }
      auto join2 = [&](const AssertionPtr& a, const AssertionPtr& b) { return r == "Conj" ? a_and(a, b) : a_or(a, b); };
      if (auto f = expect(n.pre, join2(kids[0]->pre, kids[1]->pre), "precondition")) return f;
      if (auto f = expect(n.post, join2(kids[0]->post, kids[1]->post), "postcondition")) return f;
      if (r == "Disj") return std::nullopt;
      std::set<std::string> seen;
      for (auto b = n.env.rbegin(); b != n.env.rend(); ++b) {
        if (!seen.insert(b->first).second) continue;
        Verdict v = check_precise(b->second, ctx_.domains, ctx_.types);
        if (v.kind == VerdictKind::Inconclusive) {
          return Failure{ProofReason::EntailmentInconclusive, "precision of " + b->first + ": " + v.detail, {}};
        }
        if (!v.valid()) {
          return Failure{ProofReason::PrecisionViolation, "invariant of " + b->first + " is not precise", v.to_json()};
        }
      }
      return std::nullopt;
    }
    if (r == "Init") return init_rule(n);
    if (r == "Next") return next_rule(n);
    return Failure{ProofReason::RuleShapeMismatch, "unknown rule '" + r + "'", {}};
  }

  MaybeFailure ghost_assign(const Derivation& n) {
    const auto& c = *n.cmd;
    if (c.kind != CmdKind::GhostAssign) return shape(false, "GhostAssign does not apply to " + std::string(cmd_kind_name(c.kind)));
    std::vector<AssertionPtr> atoms;
    flatten_sep(lift_pure(n.pre), atoms);
    std::map<std::string, ExprPtr> values;
    std::vector<AssertionPtr> post_atoms;
    bool target_full = false;
    for (const auto& a : atoms) {
      if (a->kind != AKind::PointsTo || a->addr->kind != ExprKind::Ghost) {
        return shape(false, "precondition must consist of ghost points-to assertions");
      }
      if (!values.emplace(a->addr->name, a->val).second) return shape(false, "ghost " + a->addr->name + " occurs twice");
      if (a->addr->name == c.name) target_full = a->perm == Perm(1);
    }
    if (!target_full) return shape(false, "precondition must hold " + c.name + " |-> with permission 1");
    std::set<std::string> missing;
    for (const auto& g : expr_ghosts(c.e1)) {
      if (!values.count(g)) missing.insert(g);
    }
    if (auto f = side(missing, "every ghost read by E is owned")) return f;
    ExprPtr rhs = subst_ghost_reads(c.e1, values);
    for (const auto& a : atoms) {
      post_atoms.push_back(a->addr->name == c.name ? a_pts(a->addr, Perm(1), rhs) : a);
    }
    return expect(n.post, a_sep_all(post_atoms), "postcondition");
  }

  MaybeFailure init_rule(const Derivation& n) {
    const auto& c = *n.cmd;
    if (c.kind != CmdKind::Init) return shape(false, "Init does not apply to " + std::string(cmd_kind_name(c.kind)));
    if (lock_bound(n.env, kGhostLock) || lock_bound(n.env, kInitToken)) {
      return Failure{ProofReason::GhostLockMisuse, "Init inside an initialized region", {}};
    }
    if (!ctx_.ats) return shape(false, "Init needs an ATS");
    auto g = c.inv ? c.inv : a_emp();
    auto rho = assumption1(g);
    if (auto* f = std::get_if<Failure>(&rho)) return *f;
    const auto& kid = *n.children[0];
    if (auto f = expect_cmd(kid.cmd, c.c1, "body premise")) return f;
    if (auto f = expect_env(kid, extend(extend(n.env, kGhostLock, g), kInitToken, a_emp()))) return f;
    if (auto f = expect(n.pre, init_rule_pre(*ctx_.ats, g, std::get<Perm>(rho), kid.pre), "precondition")) return f;
    return expect(n.post, a_sep(g, kid.post), "postcondition");
  }

  MaybeFailure next_rule(const Derivation& n) {
    const auto& c = *n.cmd;
    if (c.kind != CmdKind::Next) return shape(false, "Next does not apply to " + std::string(cmd_kind_name(c.kind)));
    if (!lock_bound(n.env, kGhostLock)) {
      return Failure{ProofReason::GhostLockMisuse, "next requires the ghost lock G in Gamma", {}};
    }
    if (!ctx_.ats) return shape(false, "Next needs an ATS");
    if (!is_atomic(c.c1)) return Failure{ProofReason::AtomicityViolation, "next body is not atomic", {}};
    auto avoid = next_avoid_set(n);
    auto o = n.fresh.empty() ? next_fresh_names(ctx_.ats->k(), avoid) : n.fresh;
    if (auto f = shape(o.size() == ctx_.ats->k(), "Next needs one fresh name per ATS variable")) return f;
    std::set<std::string> distinct(o.begin(), o.end());
    if (distinct.size() != o.size()) return side({o.front()}, "fresh names are distinct");
    if (auto f = side(intersect(distinct, avoid), "o fresh for P, C, Q and Gamma")) return f;
    auto g = lock_invariant(n.env, kGhostLock);
    auto rho = assumption1(g);
    if (auto* f = std::get_if<Failure>(&rho)) return *f;
    Perm p = std::get<Perm>(rho);
    const auto& kid = *n.children[0];
    if (auto f = expect_cmd(kid.cmd, c.c1, "body premise")) return f;
    if (auto f = expect_env(kid, without(n.env, kGhostLock))) return f;
    if (auto f = expect(kid.pre, next_premise_pre(*ctx_.ats, g, p, o, n.pre), "body precondition")) return f;
    return expect(kid.post, next_premise_post(*ctx_.ats, g, p, o, n.post), "body postcondition");
  }

  const ProofContext& ctx_;
  std::mutex mu_;
  std::map<std::string, Verdict> cache_;
  std::map<std::string, std::variant<Perm, Failure>> rho_cache_;
  std::atomic<std::size_t> entailments_{0};
};

}  // namespace

CheckResult check_derivation(const Derivation& root, const ProofContext& ctx) {
  struct Item {
    const Derivation* node;
    std::vector<std::size_t> path;
  };
  std::vector<Item> order;
  std::vector<Item> stack{{&root, {}}};
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    for (std::size_t i = it.node->children.size(); i-- > 0;) {
      if (!it.node->children[i]) continue;
      auto p = it.path;
      p.push_back(i);
      stack.push_back({it.node->children[i].get(), std::move(p)});
    }
    order.push_back(std::move(it));
  }

  Checker checker(ctx);
  std::vector<MaybeFailure> results(order.size());
  std::atomic<std::size_t> cursor{0};
  // Sequential runs stop at the first failure; parallel runs check every node
  // and then pick the first failure in pre-order, so both report the same one.
  std::atomic<bool> stop{false};
  bool sequential = ctx.workers <= 1;
  auto work = [&] {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= order.size() || stop.load()) return;
      results[i] = checker.check(*order[i].node);
      if (results[i] && sequential) stop = true;
    }
  };
  if (sequential) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < ctx.workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  CheckResult out;
  out.nodes = order.size();
  out.entailments = checker.entailments();
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!results[i]) continue;
    out.accepted = false;
    out.path = order[i].path;
    out.rule = order[i].node->rule;
    out.reason = results[i]->reason;
    out.detail = results[i]->detail;
    out.counterexample = results[i]->counterexample;
    break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// rderiv files
// ---------------------------------------------------------------------------

nlohmann::json derivation_to_json(const Derivation& d) {
  nlohmann::json env = nlohmann::json::array();
  for (const auto& [lock, inv] : d.env) env.push_back({lock, assertion_to_string(inv)});
  nlohmann::json j = {
      {"rule", d.rule},
      {"env", env},
      {"pre", assertion_to_string(d.pre)},
      {"cmd", command_to_string(d.cmd)},
      {"post", assertion_to_string(d.post)},
  };
  nlohmann::json w = nlohmann::json::object();
  if (d.frame) w["frame"] = assertion_to_string(d.frame);
  if (!d.var.empty()) w["var"] = d.var;
  if (!d.fresh.empty()) w["fresh"] = d.fresh;
  if (!w.empty()) j["witnesses"] = w;
  nlohmann::json kids = nlohmann::json::array();
  for (const auto& c : d.children) kids.push_back(derivation_to_json(*c));
  j["children"] = kids;
  return j;
}

namespace {

AssertionPtr parse_lock_inv(const std::string& lock, const std::string& text, ParseContext ctx) {
  (void)lock;
  return parse_assertion(text, ctx);
}

}  // namespace

DerivationPtr derivation_from_json(const nlohmann::json& j, const ParseContext& base) {
  ParseContext ctx = base;
  ctx.allow_free_locks = true;
  auto d = std::make_shared<Derivation>();
  d->rule = j.at("rule").get<std::string>();
  for (const auto& b : j.at("env")) {
    auto lock = b.at(0).get<std::string>();
    d->env.emplace_back(lock, parse_lock_inv(lock, b.at(1).get<std::string>(), ctx));
  }
  d->pre = parse_assertion(j.at("pre").get<std::string>(), ctx);
  d->cmd = parse_command(j.at("cmd").get<std::string>(), ctx);
  d->post = parse_assertion(j.at("post").get<std::string>(), ctx);
  if (j.contains("witnesses")) {
    const auto& w = j["witnesses"];
    if (w.contains("frame")) d->frame = parse_assertion(w["frame"].get<std::string>(), ctx);
    if (w.contains("var")) d->var = w["var"].get<std::string>();
    if (w.contains("fresh")) d->fresh = w["fresh"].get<std::vector<std::string>>();
  }
  for (const auto& c : j.at("children")) d->children.push_back(derivation_from_json(c, base));
  return d;
}

nlohmann::json rderiv_to_json(const DerivationFile& f) {
  nlohmann::json ghosts = nlohmann::json::array();
  for (const auto& g : f.ghosts) {
    if (g.name != kStdOut) ghosts.push_back({{"name", g.name}, {"type", type_name(g.type)}});
  }
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [v, t] : f.types.vars) types[v] = type_name(t);
  return {
      {"format", "rderiv/1"}, {"ghosts", ghosts}, {"domains", f.domains.to_json()},
      {"types", types},       {"root", derivation_to_json(*f.root)},
  };
}

DerivationFile rderiv_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "rderiv/1") throw std::invalid_argument("not an rderiv/1 document");
  DerivationFile f;
  f.ghosts.push_back({kStdOut, Type::Seq});
  auto parse_type = [](const std::string& s) {
    for (Type t : {Type::Int, Type::Bool, Type::Seq, Type::Addr}) {
      if (type_name(t) == s) return t;
    }
    throw std::invalid_argument("unknown type '" + s + "'");
  };
  const auto ghosts = j.value("ghosts", nlohmann::json::array());
  for (const auto& g : ghosts) {
    f.ghosts.push_back({g.at("name").get<std::string>(), parse_type(g.at("type").get<std::string>())});
  }
  f.domains = Domains::from_json(j.value("domains", nlohmann::json::object()));
  const auto types = j.value("types", nlohmann::json::object());
  for (const auto& [v, t] : types.items()) {
    f.types.vars[v] = parse_type(t.get<std::string>());
  }
  for (const auto& g : f.ghosts) f.types.ghosts[g.name] = g.type;
  ParseContext ctx;
  for (const auto& g : f.ghosts) ctx.ghosts.insert(g.name);
  f.root = derivation_from_json(j.at("root"), ctx);
  return f;
}

}  // namespace refine
