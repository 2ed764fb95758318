#include "refine/ats.hpp"

#include <algorithm>
#include <map>

namespace refine {

TypeEnv ats_type_env(const AtsSpec& spec) {
  TypeEnv env;
  for (std::size_t i = 0; i < spec.k(); ++i) {
    env.vars[spec.vars[i]] = spec.types[i];
    env.vars[spec.vars[i] + "'"] = spec.types[i];
  }
  return env;
}

AtsSpec stutter_close(const AtsSpec& spec) {
  std::vector<AssertionPtr> same;
  for (const auto& x : spec.vars) same.push_back(a_pure(e_binary(Op::Eq, e_var(x + "'"), e_var(x))));
  AtsSpec out = spec;
  out.next = a_or(spec.next, a_and_all(same));
  return out;
}

namespace {

Env state_env(const AtsSpec& spec, const AtsState& s, const std::string& suffix) {
  Env env;
  for (std::size_t i = 0; i < spec.k(); ++i) env[spec.vars[i] + suffix] = s[i];
  return env;
}

std::vector<AtsState> solve(const AssertionPtr& formula, const Env& fixed, const AtsSpec& spec,
                            const std::string& suffix, const Domains& d) {
  Engine engine(d, {formula}, ats_type_env(spec));
  std::vector<std::string> targets;
  for (const auto& x : spec.vars) targets.push_back(x + suffix);
  std::set<AtsState> out;
  engine.models(formula, fixed, [&](const Env& env, const PermHeap&, bool) {
    // Components the formula leaves unconstrained range over their domain.
    return engine.enumerate_vars(targets, env, [&](const Env& full) {
      if (!engine.eval(formula, env_to_stack(full), PermHeap())) return true;
      AtsState s;
      for (const auto& t : targets) s.push_back(full.at(t));
      out.insert(std::move(s));
      return true;
    });
  });
  return {out.begin(), out.end()};
}

}  // namespace

bool is_initial(const AtsState& s, const AtsSpec& spec, const Domains& d) {
  if (s.size() != spec.k()) return false;
  Engine engine(d, {spec.init}, ats_type_env(spec));
  return engine.eval(spec.init, env_to_stack(state_env(spec, s, "")), PermHeap());
}

bool is_transition(const AtsState& from, const AtsState& to, const AtsSpec& spec, const Domains& d) {
  if (from.size() != spec.k() || to.size() != spec.k()) return false;
  Env env = state_env(spec, from, "");
  for (auto& [x, v] : state_env(spec, to, "'")) env[x] = v;
  Engine engine(d, {spec.next}, ats_type_env(spec));
  return engine.eval(spec.next, env_to_stack(env), PermHeap());
}

std::vector<AtsState> initial_states(const AtsSpec& spec, const Domains& d) {
  return solve(spec.init, {}, spec, "", d);
}

std::vector<AtsState> successors(const AtsState& from, const AtsSpec& spec, const Domains& d) {
  return solve(spec.next, state_env(spec, from, ""), spec, "'", d);
}

std::set<Trace> enumerate_traces(const AtsSpec& spec, int max_len, const Domains& d, std::size_t cap) {
  std::set<Trace> traces = {Trace{}};
  if (max_len <= 0) return traces;
  std::set<std::pair<AtsState, Trace>> layer;
  for (auto& s : initial_states(spec, d)) {
    Trace t = {s.front()};
    layer.emplace(std::move(s), std::move(t));
  }
  std::map<AtsState, std::vector<AtsState>> succ_cache;
  std::size_t seen = 0;
  for (int len = 1; len <= max_len && !layer.empty(); ++len) {
    seen += layer.size();
    if (seen > cap) throw BudgetExceeded("ATS trace enumeration exceeded " + std::to_string(cap) + " paths");
    for (const auto& [s, t] : layer) traces.insert(t);
    if (len == max_len) break;
    std::set<std::pair<AtsState, Trace>> next;
    for (const auto& [s, t] : layer) {
      auto it = succ_cache.find(s);
      if (it == succ_cache.end()) it = succ_cache.emplace(s, successors(s, spec, d)).first;
      for (const auto& s2 : it->second) {
        Trace t2 = t;
        t2.push_back(s2.front());
        next.emplace(s2, std::move(t2));
      }
    }
    layer = std::move(next);
  }
  return traces;
}

nlohmann::json traces_to_json(const std::set<Trace>& traces) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : traces) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& v : t) row.push_back(value_to_json(v));
    out.push_back(std::move(row));
  }
  return out;
}

std::string trace_to_string(const Trace& t) {
  std::string out = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ", ";
    out += t[i].to_string();
  }
  return out + ")";
}

ExprPtr ats_ghost(const AtsSpec& spec, std::size_t i) {
  auto it = spec.ghost_addr.find(spec.vars[i]);
  return e_ghost(it == spec.ghost_addr.end() ? spec.vars[i] : it->second);
}

Assumption1Result check_assumption1(const AssertionPtr& ghost_inv, const AtsSpec& spec, const Domains& d,
                                    const TypeEnv& types) {
  std::set<Perm> candidates = assertion_perms(ghost_inv);
  candidates.insert(Perm(1));
  Assumption1Result result;
  bool inconclusive = false;
  for (const auto& rho : candidates) {
    std::vector<AssertionPtr> parts;
    for (std::size_t i = 0; i < spec.k(); ++i) parts.push_back(a_acc(ats_ghost(spec, i), rho));
    Verdict v = check_entailment(ghost_inv, a_sep_all(parts), d, types);
    if (v.valid()) {
      result.verdict = v;
      result.rho = rho;
      return result;
    }
    if (v.kind == VerdictKind::Inconclusive) inconclusive = true;
    result.verdict = v;
  }
  if (inconclusive) result.verdict.kind = VerdictKind::Inconclusive;
  return result;
}

}  // namespace refine
