#include "oracles.hpp"

#include "refine/parser.hpp"

#include <deque>
#include <functional>
#include <map>
#include <optional>

namespace refine::testing {

void SuiteResult::fail(const std::string& msg) {
  ++failures;
  if (messages.size() < 8) messages.push_back(msg);
}

PermHeap random_heap(std::mt19937_64& rng, int addrs, const std::vector<Perm>& perms, int max_value) {
  PermHeap h;
  std::uniform_int_distribution<int> coin(0, 2);
  std::uniform_int_distribution<std::size_t> perm(0, perms.size() - 1);
  std::uniform_int_distribution<int> value(0, max_value);
  for (int a = 0; a <= addrs; ++a) {
    if (coin(rng) == 0) continue;
    Address addr = a == addrs ? Address::ghost_named("g") : Address::ordinary(a);
    h.set(addr, perms[perm(rng)], Value::integer(value(rng)));
  }
  return h;
}

namespace {

// Cell-by-cell reference for (+).
std::optional<PermHeap> reference_add(const PermHeap& h1, const PermHeap& h2) {
  std::map<Address, Cell> out(h1.cells().begin(), h1.cells().end());
  for (const auto& [a, c] : h2.cells()) {
    auto it = out.find(a);
    if (it == out.end()) {
      out.emplace(a, c);
      continue;
    }
    if (!(it->second.value == c.value) || it->second.perm + c.perm > Perm(1)) return std::nullopt;
    it->second.perm += c.perm;
  }
  PermHeap h;
  for (const auto& [a, c] : out) h.set(a, c.perm, c.value);
  return h;
}

std::string show(const std::optional<PermHeap>& h) { return h ? h->to_string() : "undefined"; }

// A heap that is often compatible with h: same values, permissions that fit.
PermHeap compatible_with(std::mt19937_64& rng, const PermHeap& h, const std::vector<Perm>& perms) {
  PermHeap out = random_heap(rng, 3, perms, 2);
  for (const auto& [a, c] : h.cells()) {
    if (rng() % 2 == 0) continue;
    Perm room = Perm(1) - c.perm;
    if (room > Perm(0)) out.set(a, room, c.value);
    else out.erase(a);
  }
  return out;
}

}  // namespace

SuiteResult heap_algebra_suite(std::size_t cases, std::uint64_t seed) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  const std::vector<Perm> perms = {Perm(1, 4), Perm(1, 3), Perm(1, 2), Perm(2, 3), Perm(3, 4), Perm(1)};
  for (std::size_t i = 0; i < cases; ++i) {
    ++r.cases;
    PermHeap h1 = random_heap(rng, 3, perms, 2);
    PermHeap h2 = rng() % 2 ? compatible_with(rng, h1, perms) : random_heap(rng, 3, perms, 2);
    PermHeap h3 = rng() % 2 ? compatible_with(rng, h2, perms) : random_heap(rng, 3, perms, 2);
    std::string ctx = " for " + h1.to_string() + ", " + h2.to_string() + ", " + h3.to_string();

    auto s12 = heap_add(h1, h2);
    if (s12 != reference_add(h1, h2)) r.fail("(+) disagrees with the reference" + ctx);
    if (s12 != heap_add(h2, h1)) r.fail("(+) is not commutative" + ctx);
    if (heap_add(h1, PermHeap()) != std::optional<PermHeap>(h1)) r.fail("emp is not an identity" + ctx);

    auto s23 = heap_add(h2, h3);
    std::optional<PermHeap> left = s12 ? heap_add(*s12, h3) : std::nullopt;
    std::optional<PermHeap> right = s23 ? heap_add(h1, *s23) : std::nullopt;
    if (left != right) r.fail("(+) is not associative: " + show(left) + " vs " + show(right) + ctx);

    if (s12) {
      std::set<Address> dom;
      for (const auto& c : h1.cells()) dom.insert(c.first);
      for (const auto& c : h2.cells()) dom.insert(c.first);
      std::set<Address> got;
      for (const auto& c : s12->cells()) got.insert(c.first);
      if (dom != got) r.fail("dom(h1 (+) h2) is not the union" + ctx);
      if (heap_subtract(*s12, h2) != std::optional<PermHeap>(h1)) r.fail("subtraction does not undo (+)" + ctx);
    }

    auto top = heap_add(h1, normal_completion(h1));
    if (!top || !is_normal(*top)) r.fail("normal completion does not complete" + ctx);
    bool all_full = true;
    for (const auto& c : h1.cells()) all_full = all_full && c.second.perm == Perm(1);
    if (is_normal(h1) != all_full) r.fail("is_normal disagrees with its definition" + ctx);
  }
  return r;
}

namespace {

const std::vector<std::string>& law_atoms() {
  static const std::vector<std::string> atoms = {
      "emp",         "true",        "x == 0",  "x > 0",        "a |-> x",           "a |-> 1",
      "a |->[1/2] 0", "b |-> x",    "a == b",  "acc(a, 1/2)",  "exists v. b |-> v", "b |->[1/2] x",
  };
  return atoms;
}

std::string random_assertion(std::mt19937_64& rng, int depth) {
  const auto& atoms = law_atoms();
  if (depth == 0 || rng() % 3 == 0) return atoms[rng() % atoms.size()];
  std::string l = random_assertion(rng, depth - 1), r = random_assertion(rng, depth - 1);
  switch (rng() % 3) {
    case 0: return "(" + l + " ** " + r + ")";
    case 1: return "(" + l + " && " + r + ")";
    default: return "(" + l + " || " + r + ")";
  }
}

TypeEnv law_types() {
  TypeEnv t;
  t.vars = {{"x", Type::Int}, {"a", Type::Addr}, {"b", Type::Addr}, {"v", Type::Int}};
  return t;
}

struct Laws {
  const Domains& d;
  TypeEnv types = law_types();
  SuiteResult& r;

  // Equivalence; inconclusive halves are counted, not failed.
  void equivalent(const AssertionPtr& p, const AssertionPtr& q, const std::string& law) {
    ++r.cases;
    auto one = check_entailment(p, q, d, types);
    auto two = check_entailment(q, p, d, types);
    if (one.kind == VerdictKind::Inconclusive || two.kind == VerdictKind::Inconclusive) {
      ++r.inconclusive;
      return;
    }
    if (!one.valid() || !two.valid()) r.fail(law + ": " + assertion_to_string(p) + " vs " + assertion_to_string(q));
  }

  void adjunction(const AssertionPtr& p, const AssertionPtr& q, const AssertionPtr& rr) {
    ++r.cases;
    auto lhs = check_entailment(a_sep(p, rr), q, d, types);
    auto rhs = check_entailment(rr, a_wand(p, q), d, types);
    if (lhs.kind == VerdictKind::Inconclusive || rhs.kind == VerdictKind::Inconclusive) {
      ++r.inconclusive;
      return;
    }
    if (lhs.valid() != rhs.valid()) {
      r.fail("wand adjunction for P = " + assertion_to_string(p) + ", Q = " + assertion_to_string(q) +
             ", R = " + assertion_to_string(rr));
    }
  }
};

Stack random_stack(std::mt19937_64& rng, const Domains& d) {
  Stack s;
  auto span = static_cast<std::uint64_t>(d.int_hi - d.int_lo + 1);
  s.set("x", Value::integer(d.int_lo + static_cast<std::int64_t>(rng() % span)));
  s.set("a", Value::address(Address::ordinary(static_cast<std::int64_t>(rng() % 2))));
  s.set("b", Value::address(Address::ordinary(static_cast<std::int64_t>(rng() % 2))));
  return s;
}

PermHeap random_small_heap(std::mt19937_64& rng, const Domains& d) {
  PermHeap h;
  for (int a = 0; a < 2; ++a) {
    if (rng() % 3 == 0) continue;
    auto span = static_cast<std::uint64_t>(d.int_hi - d.int_lo + 1);
    h.set(Address::ordinary(a), rng() % 2 ? Perm(1) : Perm(1, 2),
          Value::integer(d.int_lo + static_cast<std::int64_t>(rng() % span)));
  }
  return h;
}

}  // namespace

SuiteResult assertion_law_suite(std::size_t triples, std::uint64_t seed, const Domains& d) {
  SuiteResult r;
  Laws laws{d, law_types(), r};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < triples; ++i) {
    auto P = parse_assertion(random_assertion(rng, 2));
    auto Q = parse_assertion(random_assertion(rng, 2));
    auto R = parse_assertion(random_assertion(rng, 1));
    laws.equivalent(a_sep(P, a_emp()), P, "P ** emp == P");
    laws.equivalent(a_sep(P, Q), a_sep(Q, P), "P ** Q == Q ** P");
    laws.equivalent(a_sep(a_sep(P, Q), R), a_sep(P, a_sep(Q, R)), "(P ** Q) ** R == P ** (Q ** R)");
    laws.equivalent(a_iter_sep({P, Q, R}), a_sep(P, a_sep(Q, R)), "bigsep(P, Q, R) == P ** Q ** R");
    laws.adjunction(P, Q, R);
  }
  laws.equivalent(a_iter_sep({}), a_emp(), "bigsep() == emp");

  // Sugar forms against their meaning, evaluated on random states.
  auto types = law_types();
  auto ev = [&](const std::string& text, const Stack& s, const PermHeap& h) {
    return eval_assertion(s, h, parse_assertion(text), d, types);
  };
  for (std::size_t i = 0; i < triples * 10; ++i) {
    ++r.cases;
    Stack s = random_stack(rng, d);
    PermHeap h = random_small_heap(rng, d);
    const Cell* at_a = h.find(s.get("a").as_addr());
    bool acc = at_a && at_a->perm >= Perm(1, 2);
    bool apt = acc && at_a->value == s.get("x");
    bool only_a = h.size() == 1 && at_a && at_a->perm == Perm(1);
    auto P = "(" + random_assertion(rng, 1) + ")", Q = "(" + random_assertion(rng, 1) + ")";
    bool p = ev(P, s, h), q = ev(Q, s, h);
    std::string where = " at " + s.to_string() + ", " + h.to_string();
    if (ev("acc(a, 1/2)", s, h) != acc) r.fail("acc(a, 1/2)" + where);
    if (ev("apt(a, 1/2, x)", s, h) != apt) r.fail("apt(a, 1/2, x)" + where);
    if (ev("a |-> _", s, h) != only_a) r.fail("a |-> _" + where);
    if (ev(P + " || " + Q, s, h) != (p || q)) r.fail(P + " || " + Q + where);
    if (ev(P + " ==> " + Q, s, h) != (!p || q)) r.fail(P + " ==> " + Q + where);
    if (ev("forall v. v == x ==> a |-> v", s, h) != ev("a |-> x", s, h)) r.fail("forall sugar" + where);
  }
  return r;
}

std::set<Trace> counter_trace_oracle(std::int64_t lo, std::int64_t hi, int max_len, bool stutter) {
  struct Node {
    std::vector<std::int64_t> out;
    std::int64_t count;
    Trace trace;
  };
  auto observe = [](const std::vector<std::int64_t>& out) {
    ValueSeq items;
    for (auto v : out) items.push_back(Value::integer(v));
    return Value::sequence(std::move(items));
  };
  std::set<Trace> traces{Trace{}};
  std::deque<Node> queue;
  if (max_len >= 1) {
    for (auto c = lo; c <= hi; ++c) queue.push_back({{}, c, {observe({})}});
  }
  while (!queue.empty()) {
    Node n = std::move(queue.front());
    queue.pop_front();
    traces.insert(n.trace);
    if (static_cast<int>(n.trace.size()) == max_len) continue;
    Node step = n;
    step.out.push_back(n.count);
    step.count = n.count + 1;
    step.trace.push_back(observe(step.out));
    queue.push_back(std::move(step));
    if (stutter) {
      n.trace.push_back(observe(n.out));
      queue.push_back(std::move(n));
    }
  }
  return traces;
}

}  // namespace refine::testing
