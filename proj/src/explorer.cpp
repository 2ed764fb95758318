#include "refine/explorer.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace refine {

namespace {

AssertionPtr prepared(const AssertionPtr& a, TypeEnv& env) {
  AssertionPtr lifted = lift_pure(a ? a : a_true());
  try {
    return annotate_assertion(lifted, env);
  } catch (const TypeCheckError&) {
    return lifted;
  }
}

Stack restrict(const Env& env, const std::set<std::string>& keep) {
  Stack s;
  for (const auto& [x, v] : env) {
    if (keep.count(x)) s.set(x, v);
  }
  return s;
}

const Value* std_out(const Config& c) {
  if (c.abort) return nullptr;
  const Cell* cell = c.heap.find(Address::ghost_named(kStdOut));
  return cell ? &cell->value : nullptr;
}

}  // namespace

InitialConfigs initial_configs(const CommandPtr& c, const AssertionPtr& p, const LockEnv& gamma,
                               const ExploreOptions& opt, const TypeEnv& types) {
  InitialConfigs result;
  TypeEnv env = types;
  AssertionPtr pre = prepared(p ? p : a_emp(), env);
  auto held = locked(c);
  std::vector<AssertionPtr> shared;
  std::set<std::string> seen_locks;
  for (auto it = gamma.rbegin(); it != gamma.rend(); ++it) {
    if (held.count(it->first) || !seen_locks.insert(it->first).second) continue;
    shared.push_back(it->second);
  }
  AssertionPtr resources = prepared(a_sep_all(shared), env);
  std::set<std::string> keep = free_vars(pre);
  auto fvr = free_vars(resources);
  keep.insert(fvr.begin(), fvr.end());
  std::vector<std::string> vars(keep.begin(), keep.end());

  Engine engine(opt.domains, {pre, resources}, env);
  std::set<std::pair<Stack, PermHeap>> out;
  engine.models(pre, {}, [&](const Env& e1, const PermHeap& h, bool) {
    return engine.models(resources, e1, [&](const Env& e2, const PermHeap& hs, bool) {
      return engine.enumerate_vars(vars, e2, [&](const Env& e3) {
        Stack s = env_to_stack(e3);
        if (!engine.eval(pre, s, h) || !engine.eval(resources, s, hs)) return true;
        auto base = heap_add(h, hs);
        if (!base) return true;
        for (const auto& frame : opt.frame_pool) {
          auto total = heap_add(*base, frame);
          if (total && is_normal(*total)) out.emplace(restrict(e3, keep), *total);
        }
        return true;
      });
    });
  });
  for (const auto& [s, h] : out) {
    Config cfg;
    cfg.cmd = c;
    cfg.stack = s;
    cfg.heap = h;
    result.configs.push_back(std::move(cfg));
  }
  if (result.configs.empty()) result.warnings.push_back("the precondition has no models within the domains");
  return result;
}

std::vector<int> ExecutionForest::path_to(int node) const {
  std::vector<int> path;
  for (int n = node; n >= 0; n = nodes[static_cast<std::size_t>(n)].parent) path.push_back(n);
  std::reverse(path.begin(), path.end());
  return path;
}

nlohmann::json ExecutionForest::path_json(int node) const {
  nlohmann::json steps = nlohmann::json::array();
  for (int n : path_to(node)) {
    const auto& nd = nodes[static_cast<std::size_t>(n)];
    nlohmann::json j = {{"config", config_to_json(nd.cfg)}};
    if (nd.parent_edge >= 0) j["via"] = edges[static_cast<std::size_t>(nd.parent_edge)].label.to_json();
    steps.push_back(std::move(j));
  }
  return steps;
}

nlohmann::json ExecutionForest::stats_json() const {
  std::size_t aborts = 0, stuck = 0;
  int depth = 0;
  for (const auto& n : nodes) {
    if (n.cfg.abort) ++aborts;
    if (n.stuck) ++stuck;
    depth = std::max(depth, n.depth);
  }
  return {{"states", nodes.size()}, {"edges", edges.size()},   {"roots", roots.size()},
          {"dedupHits", dedup_hits}, {"abortNodes", aborts},     {"stuckNodes", stuck},
          {"maxDepth", depth},      {"stateCapReached", capped}, {"depthBoundReached", truncated}};
}

namespace {

// Mutual exclusion: parallel branches never hold a common lock.
bool exclusive(const CommandPtr& c) {
  if (!c) return true;
  if (c->kind == CmdKind::Par) {
    auto l1 = locked(c->c1);
    for (const auto& l : locked(c->c2)) {
      if (l1.count(l)) return false;
    }
  }
  return exclusive(c->c1) && exclusive(c->c2);
}

}  // namespace

ExecutionForest explore(const std::vector<Config>& inits, const ExploreOptions& opt,
                        const std::set<std::string>& live) {
  ExecutionForest f;
  std::unordered_map<Config, int> index;

  auto normalize = [&](Config c) {
    if (c.abort) return c;
    auto keep = command_vars(c.cmd);
    keep.insert(live.begin(), live.end());
    c.stack = c.stack.restricted(keep);
    return c;
  };
  auto add = [&](Config c, int depth, int parent, int edge) -> std::pair<int, bool> {
    auto it = index.find(c);
    if (it != index.end()) {
      ++f.dedup_hits;
      return {it->second, false};
    }
    int id = static_cast<int>(f.nodes.size());
    ForestNode n;
    n.init = !c.abort && is_init(c.cmd);
    if (!c.abort && !exclusive(c.cmd)) {
      f.invariant_violations.push_back("node " + std::to_string(id) + ": parallel branches hold the same lock");
    }
    n.cfg = std::move(c);
    n.depth = depth;
    n.parent = parent;
    n.parent_edge = edge;
    index.emplace(n.cfg, id);
    f.nodes.push_back(std::move(n));
    f.out.emplace_back();
    return {id, true};
  };

  std::vector<int> frontier;
  for (const auto& c : inits) {
    auto [id, fresh] = add(normalize(c), 0, -1, -1);
    if (fresh) {
      f.roots.push_back(id);
      frontier.push_back(id);
    }
  }

  for (int depth = 0; depth < opt.max_steps && !frontier.empty() && !f.capped; ++depth) {
    std::vector<std::vector<Step>> succ(frontier.size());
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
      for (std::size_t i = cursor++; i < frontier.size(); i = cursor++) {
        const auto& node = f.nodes[static_cast<std::size_t>(frontier[i])];
        if (!node.cfg.abort) succ[i] = step(node.cfg, opt.semantics);
      }
    };
    unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(frontier.size())));
    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }

    // Sequential merge in frontier order keeps ids independent of scheduling.
    std::vector<int> next;
    for (std::size_t i = 0; i < frontier.size() && !f.capped; ++i) {
      int from = frontier[i];
      auto& node = f.nodes[static_cast<std::size_t>(from)];
      if (node.cfg.abort) continue;
      node.expanded = true;
      node.stuck = succ[i].empty() && node.cfg.cmd->kind != CmdKind::Skip;
      for (auto& st : succ[i]) {
        int edge = static_cast<int>(f.edges.size());
        auto [to, fresh] = add(normalize(std::move(st.next)), depth + 1, from, edge);
        f.edges.push_back({from, to, std::move(st.label)});
        f.out[static_cast<std::size_t>(from)].push_back(edge);
        if (fresh) next.push_back(to);
        if (f.nodes.size() >= opt.state_cap) {
          f.capped = true;
          break;
        }
      }
    }
    frontier = std::move(next);
  }
  for (const auto& n : f.nodes) {
    if (!n.expanded && !n.cfg.abort && n.cfg.cmd->kind != CmdKind::Skip) f.truncated = true;
  }
  return f;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::Inconclusive: return "inconclusive";
  }
  return "?";
}

nlohmann::json Obligation::to_json() const {
  nlohmann::json j = {{"name", name}, {"verdict", outcome_name(outcome)}};
  if (!reason.empty()) j["reason"] = reason;
  if (!detail.empty()) j["detail"] = detail;
  if (!counterexample.is_null()) j["counterexample"] = counterexample;
  return j;
}

namespace {

nlohmann::json state_json(const AtsState& s) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : s) j.push_back(value_to_json(v));
  return j;
}

nlohmann::json edge_counterexample(const ExecutionForest& f, int edge) {
  const auto& e = f.edges[static_cast<std::size_t>(edge)];
  nlohmann::json path = f.path_json(e.from);
  path.push_back({{"config", config_to_json(f.nodes[static_cast<std::size_t>(e.to)].cfg)}, {"via", e.label.to_json()}});
  return {{"path", path}, {"edge", e.label.to_json()}};
}

Obligation fail(std::string name, std::string reason, std::string detail, nlohmann::json cex) {
  Obligation o;
  o.name = std::move(name);
  o.outcome = Outcome::Fail;
  o.reason = std::move(reason);
  o.detail = std::move(detail);
  o.counterexample = std::move(cex);
  return o;
}

Obligation pass(std::string name, std::string detail = {}) {
  Obligation o;
  o.name = std::move(name);
  o.detail = std::move(detail);
  return o;
}

Obligation incomplete_if(const ExecutionForest& f, Obligation o) {
  if (o.outcome == Outcome::Pass && f.capped) {
    o.outcome = Outcome::Inconclusive;
    o.reason = "StateCapReached";
  }
  return o;
}

}  // namespace

Obligation check_refsucc(const ExecutionForest& f, const AtsSpec& ats, const Domains& d) {
  std::set<std::pair<AtsState, AtsState>> checked;
  std::set<AtsState> checked_init;
  for (std::size_t i = 0; i < f.edges.size(); ++i) {
    const auto& e = f.edges[i];
    const auto& from = f.nodes[static_cast<std::size_t>(e.from)];
    const auto& to = f.nodes[static_cast<std::size_t>(e.to)];
    if (to.cfg.abort || (!from.init && !to.init)) continue;
    auto cex = [&](const std::optional<AtsState>& a, const std::optional<AtsState>& b) {
      auto j = edge_counterexample(f, static_cast<int>(i));
      if (a) j["fromState"] = state_json(*a);
      if (b) j["toState"] = state_json(*b);
      return j;
    };
    auto sigma2 = get_state(to.cfg.heap, ats);
    if (from.init) {
      auto sigma = get_state(from.cfg.heap, ats);
      if (!sigma || !sigma2) {
        return fail("refsucc", "MissingGhostState", "ghost state undefined on an initialized step", cex(sigma, sigma2));
      }
      if (!checked.emplace(*sigma, *sigma2).second) continue;
      if (!is_transition(*sigma, *sigma2, ats, d)) {
        return fail("refsucc", "NextViolated", "step " + e.label.to_string() + " is not an abstract transition",
                    cex(sigma, sigma2));
      }
    } else {
      if (!sigma2) {
        return fail("refsucc", "MissingGhostState", "ghost state undefined when entering init", cex(std::nullopt, sigma2));
      }
      if (!checked_init.insert(*sigma2).second) continue;
      if (!is_initial(*sigma2, ats, d)) {
        return fail("refsucc", "InitViolated", "initializing step does not reach an abstract initial state",
                    cex(std::nullopt, sigma2));
      }
    }
  }
  return incomplete_if(f, pass("refsucc"));
}

namespace {

struct TraceRec {
  int node;
  int trace;
  int parent;  // record id
  int edge;    // edge into node, -1 for roots
};

struct TraceSearch {
  std::vector<Trace> traces;
  std::map<Trace, int> trace_ids;
  std::vector<TraceRec> recs;
  std::map<std::pair<int, int>, int> seen;
  std::map<int, int> first_rec;  // trace id -> first record reaching it

  int intern(const Trace& t) {
    auto [it, fresh] = trace_ids.emplace(t, static_cast<int>(traces.size()));
    if (fresh) traces.push_back(t);
    return it->second;
  }
};

TraceSearch trace_search(const ExecutionForest& f, int max_len) {
  TraceSearch ts;
  auto obs = [&](int node) -> const Value* {
    const auto& n = f.nodes[static_cast<std::size_t>(node)];
    return n.init ? std_out(n.cfg) : nullptr;
  };
  std::vector<int> work;
  auto push = [&](int node, const Trace& t, int parent, int edge) {
    int tid = ts.intern(t);
    if (!ts.seen.emplace(std::make_pair(node, tid), static_cast<int>(ts.recs.size())).second) return;
    ts.first_rec.emplace(tid, static_cast<int>(ts.recs.size()));
    ts.recs.push_back({node, tid, parent, edge});
    work.push_back(static_cast<int>(ts.recs.size()) - 1);
  };
  for (int r : f.roots) {
    Trace t;
    if (const Value* v = obs(r); v && max_len > 0) t.push_back(*v);
    push(r, t, -1, -1);
  }
  // Breadth-first over (node, trace) pairs; records are only appended.
  for (std::size_t w = 0; w < work.size(); ++w) {
    TraceRec rec = ts.recs[static_cast<std::size_t>(work[w])];
    for (int e : f.out[static_cast<std::size_t>(rec.node)]) {
      int to = f.edges[static_cast<std::size_t>(e)].to;
      Trace t = ts.traces[static_cast<std::size_t>(rec.trace)];
      if (const Value* v = obs(to)) {
        if (static_cast<int>(t.size()) >= max_len) continue;
        t.push_back(*v);
      }
      push(to, t, work[w], e);
    }
  }
  return ts;
}

nlohmann::json rec_path(const ExecutionForest& f, const TraceSearch& ts, int rec) {
  std::vector<int> chain;
  for (int r = rec; r >= 0; r = ts.recs[static_cast<std::size_t>(r)].parent) chain.push_back(r);
  std::reverse(chain.begin(), chain.end());
  nlohmann::json path = nlohmann::json::array();
  for (int r : chain) {
    const auto& R = ts.recs[static_cast<std::size_t>(r)];
    nlohmann::json j = {{"config", config_to_json(f.nodes[static_cast<std::size_t>(R.node)].cfg)}};
    if (R.edge >= 0) j["via"] = f.edges[static_cast<std::size_t>(R.edge)].label.to_json();
    path.push_back(std::move(j));
  }
  return path;
}

nlohmann::json trace_json(const Trace& t) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : t) j.push_back(value_to_json(v));
  return j;
}

}  // namespace

TraceSet program_traces(const ExecutionForest& f, int max_len) {
  TraceSet out = {Trace{}};
  auto ts = trace_search(f, max_len);
  out.insert(ts.traces.begin(), ts.traces.end());
  return out;
}

Obligation check_trace_inclusion(const ExecutionForest& f, const AtsSpec& ats, int max_len, const Domains& d) {
  std::set<Trace> abstract;
  try {
    abstract = enumerate_traces(ats, max_len, d);
  } catch (const BudgetExceeded& e) {
    Obligation o = pass("traceInclusion");
    o.outcome = Outcome::Inconclusive;
    o.reason = "BudgetExceeded";
    o.detail = e.what();
    return o;
  }
  auto ts = trace_search(f, max_len);
  // Shortest missing trace first, ties broken by value order.
  std::vector<int> order(ts.traces.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ta = ts.traces[static_cast<std::size_t>(a)];
    const auto& tb = ts.traces[static_cast<std::size_t>(b)];
    if (ta.size() != tb.size()) return ta.size() < tb.size();
    return ta < tb;
  });
  for (int tid : order) {
    const auto& t = ts.traces[static_cast<std::size_t>(tid)];
    if (abstract.count(t)) continue;
    nlohmann::json cex = {{"trace", trace_json(t)}, {"path", rec_path(f, ts, ts.first_rec.at(tid))}};
    return fail("traceInclusion", "TraceNotInAts", "program trace " + trace_to_string(t) + " is not an ATS trace",
                cex);
  }
  return incomplete_if(f, pass("traceInclusion", std::to_string(ts.traces.size()) + " program traces checked against " +
                                                     std::to_string(abstract.size()) + " ATS traces"));
}

std::vector<Obligation> audit_safety(const ExecutionForest& f, const AssertionPtr& q, const Domains& d,
                                     const TypeEnv& types) {
  std::vector<Obligation> out;
  Obligation access = pass("safety.accessInDomain");
  Obligation abort = pass("safety.noAbort");
  Obligation post = pass("safety.postcondition");
  TypeEnv env = types;
  AssertionPtr Q = prepared(q, env);
  Engine engine(d, {Q}, env);
  bool inconclusive = false;
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& n = f.nodes[i];
    int id = static_cast<int>(i);
    if (n.cfg.abort) {
      if (abort.outcome == Outcome::Pass) {
        abort = fail("safety.noAbort", "AbortReachable",
                     "abort via " + f.edges[static_cast<std::size_t>(n.parent_edge)].label.to_string(),
                     {{"path", f.path_json(id)}});
      }
      continue;
    }
    if (access.outcome == Outcome::Pass) {
      auto rs = reads(n.cfg.cmd, n.cfg.stack, n.cfg.heap);
      auto ws = writes(n.cfg.cmd, n.cfg.stack, n.cfg.heap);
      rs.insert(ws.begin(), ws.end());
      for (const auto& a : rs) {
        if (!n.cfg.heap.contains(a)) {
          access = fail("safety.accessInDomain", "UnallocatedAccess", a.to_string() + " is accessed but not allocated",
                        {{"path", f.path_json(id)}});
          break;
        }
      }
    }
    if (post.outcome == Outcome::Pass && n.cfg.cmd->kind == CmdKind::Skip) {
      try {
        if (engine.subheaps(Q, n.cfg.stack, n.cfg.heap).empty()) {
          post = fail("safety.postcondition", "PostconditionViolated", "terminal state does not satisfy the postcondition",
                      {{"path", f.path_json(id)}});
        }
      } catch (const BudgetExceeded&) {
        inconclusive = true;
      }
    }
  }
  if (inconclusive && post.outcome == Outcome::Pass) {
    post.outcome = Outcome::Inconclusive;
    post.reason = "BudgetExceeded";
  }
  out.push_back(incomplete_if(f, access));
  out.push_back(incomplete_if(f, abort));
  out.push_back(incomplete_if(f, post));
  return out;
}

Obligation audit_lock_invariants(const ExecutionForest& f, const LockEnv& gamma, const Domains& d, const AtsSpec* ats,
                                 const TypeEnv& types) {
  TypeEnv env = types;
  std::map<std::string, AssertionPtr> invs;
  std::vector<AssertionPtr> scope;
  for (const auto& [lock, inv] : gamma) {
    invs[lock] = prepared(inv, env);
  }
  for (const auto& [lock, inv] : invs) scope.push_back(inv);
  Engine engine(d, scope, env);
  bool inconclusive = false;
  std::size_t checks = 0;
  for (std::size_t i = 0; i < f.edges.size(); ++i) {
    const auto& e = f.edges[i];
    const auto& to = f.nodes[static_cast<std::size_t>(e.to)];
    if (to.cfg.abort) continue;
    std::string lock;
    const std::string& rule = e.label.rule();
    if (rule == "WithinS") {
      lock = e.label.detail;
    } else if (rule == "Init" || rule == "Next") {
      lock = kGhostLock;
    } else {
      continue;
    }
    auto it = invs.find(lock);
    if (it != invs.end()) {
      ++checks;
      try {
        if (engine.subheaps(it->second, to.cfg.stack, to.cfg.heap).empty()) {
          return fail("lockInvariants", "LockInvariantViolated",
                      "invariant of " + lock + " does not hold after " + e.label.to_string(),
                      edge_counterexample(f, static_cast<int>(i)));
        }
      } catch (const BudgetExceeded&) {
        inconclusive = true;
      }
    }
    if (rule == "Init" && ats) {
      auto sigma = get_state(to.cfg.heap, *ats);
      if (!sigma || !is_initial(*sigma, *ats, d)) {
        return fail("lockInvariants", "InitStateViolated", "ghost state is not an abstract initial state at init",
                    edge_counterexample(f, static_cast<int>(i)));
      }
    }
  }
  Obligation o = pass("lockInvariants", std::to_string(checks) + " release points checked");
  if (inconclusive) {
    o.outcome = Outcome::Inconclusive;
    o.reason = "BudgetExceeded";
  }
  return incomplete_if(f, o);
}

Obligation audit_print_before_init(const ExecutionForest& f) {
  for (std::size_t i = 0; i < f.edges.size(); ++i) {
    const auto& e = f.edges[i];
    const auto& from = f.nodes[static_cast<std::size_t>(e.from)];
    const auto& to = f.nodes[static_cast<std::size_t>(e.to)];
    if (from.init || to.cfg.abort) continue;
    const Value* a = std_out(from.cfg);
    const Value* b = std_out(to.cfg);
    if ((a == nullptr) != (b == nullptr) || (a && *a != *b)) {
      return fail("printBeforeInit", "PrintBeforeInit", "stdOut changes before the system is initialized",
                  edge_counterexample(f, static_cast<int>(i)));
    }
  }
  return incomplete_if(f, pass("printBeforeInit"));
}

namespace {

struct OutputSummary {
  std::set<Value> values;
  std::size_t complete_below = std::numeric_limits<std::size_t>::max();
};

// stdOut only grows, so every value shorter than the shortest stdOut on the
// unexplored frontier has been reached within the budget.
OutputSummary summarize(const ExecutionForest& f) {
  OutputSummary s;
  for (const auto& n : f.nodes) {
    const Value* v = std_out(n.cfg);
    if (v && v->is_seq()) s.values.insert(*v);
    if (!n.expanded && !n.cfg.abort && n.cfg.cmd->kind != CmdKind::Skip) {
      s.complete_below = std::min(s.complete_below, v && v->is_seq() ? v->as_seq().size() : 0);
    }
  }
  return s;
}

}  // namespace

Obligation audit_erasure(const Program& program, const std::vector<Config>& inits, const ExploreOptions& opt,
                         const std::set<std::string>& live) {
  for (const auto& w : program.warnings) {
    if (w.find("GhostFlowsToControl") != std::string::npos || w.find("GhostReadInNonGhostCode") != std::string::npos) {
      Obligation o = pass("erasure", "skipped: " + w);
      o.reason = "Skipped";
      return o;
    }
  }
  // Erased code never touches ghost cells other than stdOut, so dropping them
  // merges initial configurations that differ only in ghost state.
  std::vector<Config> erased;
  std::unordered_map<Config, int> seen;
  for (const auto& c : inits) {
    Config e = c;
    e.cmd = erase_ghost(c.cmd);
    for (const auto& [addr, cell] : c.heap.cells()) {
      if (addr.is_ghost() && addr.ghost != kStdOut) e.heap.erase(addr);
    }
    if (seen.emplace(e, 0).second) erased.push_back(std::move(e));
  }
  auto f1 = explore(inits, opt, live);
  auto f2 = explore(erased, opt, live);
  if (f1.capped || f2.capped) {
    Obligation o = pass("erasure");
    o.outcome = Outcome::Inconclusive;
    o.reason = "StateCapReached";
    return o;
  }
  auto s1 = summarize(f1);
  auto s2 = summarize(f2);
  std::size_t bound = std::min(s1.complete_below, s2.complete_below);
  auto below = [&](const Value& v) { return v.as_seq().size() < bound; };
  for (const auto& v : s1.values) {
    if (below(v) && !s2.values.count(v)) {
      return fail("erasure", "ErasureMismatch", "stdOut value " + v.to_string() + " is unreachable after erasure",
                  {{"value", value_to_json(v)}});
    }
  }
  for (const auto& v : s2.values) {
    if (below(v) && !s1.values.count(v)) {
      return fail("erasure", "ErasureMismatch", "erased program reaches stdOut value " + v.to_string(),
                  {{"value", value_to_json(v)}});
    }
  }
  std::string detail = std::to_string(s1.values.size()) + " stdOut values compared";
  if (bound != std::numeric_limits<std::size_t>::max()) detail += " up to length " + std::to_string(bound);
  return pass("erasure", detail);
}

Outcome Report::overall() const {
  Outcome out = Outcome::Pass;
  for (const auto& o : obligations) {
    if (o.outcome == Outcome::Fail) return Outcome::Fail;
    if (o.outcome == Outcome::Inconclusive) out = Outcome::Inconclusive;
  }
  return out;
}

nlohmann::json Report::to_json() const {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : obligations) obs.push_back(o.to_json());
  return {{"schema", "refine-report/1"},
          {"command", command},
          {"verdict", outcome_name(overall())},
          {"obligations", obs},
          {"warnings", warnings},
          {"statistics", statistics},
          {"scope",
           "bounded: executions up to the step bound from the enumerated initial configurations; "
           "frame-quantified safety clauses are checked only per execution"}};
}

std::string Report::to_text() const {
  std::ostringstream out;
  out << command << ": " << outcome_name(overall()) << "\n";
  for (const auto& o : obligations) {
    out << "  " << o.name << ": " << outcome_name(o.outcome);
    if (!o.reason.empty()) out << " (" << o.reason << ")";
    if (!o.detail.empty()) out << " - " << o.detail;
    out << "\n";
  }
  for (const auto& w : warnings) out << "  warning: " << w << "\n";
  if (!statistics.empty()) out << "  statistics: " << statistics.dump() << "\n";
  return out.str();
}

}  // namespace refine
