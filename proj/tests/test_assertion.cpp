#include "oracles.hpp"

#include "refine/assertion.hpp"
#include "refine/parser.hpp"

#include <doctest.h>

using namespace refine;

namespace {

Domains small() {
  Domains d;
  d.int_lo = -2;
  d.int_hi = 2;
  d.addr_count = 2;
  d.max_heap_cells = 2;
  d.max_seq_len = 2;
  return d;
}

TypeEnv types() {
  TypeEnv t;
  t.vars = {{"x", Type::Int}, {"a", Type::Addr}, {"b", Type::Addr}};
  return t;
}

AssertionPtr A(const std::string& s) { return parse_assertion(s, ParseContext{{kStdOut, "count"}, false}); }

VerdictKind entails(const std::string& p, const std::string& q) {
  return check_entailment(A(p), A(q), small(), types()).kind;
}

}  // namespace

TEST_CASE("separation laws, wand adjunction and sugar on generated assertions") {
  auto r = testing::assertion_law_suite(120, 11, small());
  for (const auto& m : r.messages) INFO(m);
  CHECK(r.failures == 0);
  CHECK(r.inconclusive == 0);
  CHECK(r.cases > 1000);
}

TEST_CASE("points-to is exact, apt is intuitionistic") {
  CHECK(entails("a |-> 1 ** b |-> 2", "apt(a, 1, 1)") == VerdictKind::Valid);
  CHECK(entails("apt(a, 1, 1)", "a |-> 1") == VerdictKind::Counterexample);
  CHECK(entails("a |-> 1", "a |->[1/2] 1 ** a |->[1/2] 1") == VerdictKind::Valid);
  CHECK(entails("a |-> 1 ** b |-> 1", "a != b") == VerdictKind::Valid);
  CHECK(entails("a |-> x ** a |-> x", "false") == VerdictKind::Valid);
  CHECK(entails("a |->[1/2] 1 ** a |->[1/2] 2", "false") == VerdictKind::Valid);
}

TEST_CASE("counterexamples carry a state") {
  auto v = check_entailment(A("a |-> x"), A("a |-> 0"), small(), types());
  REQUIRE(v.kind == VerdictKind::Counterexample);
  REQUIRE(v.stack);
  REQUIRE(v.heap);
  CHECK_FALSE(eval_assertion(*v.stack, *v.heap, A("a |-> 0"), small(), types()));
  CHECK(eval_assertion(*v.stack, *v.heap, A("a |-> x"), small(), types()));
}

TEST_CASE("validity and quantifiers") {
  CHECK(check_validity(A("x == x"), small(), types()).valid());
  CHECK(check_validity(A("forall v: int. v <= 2"), small(), types()).valid());
  CHECK(check_validity(A("exists v: int. v == x + 1"), small(), types()).valid());
  CHECK(check_validity(A("x < 2"), small(), types()).kind == VerdictKind::Counterexample);
  CHECK(entails("bigsep()", "emp") == VerdictKind::Valid);
  CHECK(entails("emp", "bigsep()") == VerdictKind::Valid);
}

TEST_CASE("precision") {
  CHECK(check_precise(A("a |-> 1"), small(), types()).valid());
  CHECK(check_precise(A("exists v: int. a |-> v"), small(), types()).valid());
  CHECK(check_precise(A("emp"), small(), types()).valid());
  auto v = check_precise(A("true"), small(), types());
  CHECK(v.kind == VerdictKind::Counterexample);
  CHECK(v.heap2);
  CHECK(check_precise(A("a |-> 1 || emp"), small(), types()).kind == VerdictKind::Counterexample);
}

TEST_CASE("budget exhaustion is inconclusive") {
  Domains d = small();
  d.budget = 5;
  CHECK(check_entailment(A("a |-> x ** b |-> x"), A("a != b"), d, types()).kind == VerdictKind::Inconclusive);
}

TEST_CASE("ghost cells in assertions") {
  Stack s;
  PermHeap h;
  h.set(Address::ghost_named("count"), Perm(1, 2), Value::integer(3));
  CHECK(eval_assertion(s, h, A("count |->[1/2] 3"), small()));
  CHECK_FALSE(eval_assertion(s, h, A("count |-> 3"), small()));
  CHECK(eval_assertion(s, h, A("acc(count, 1/2)"), small()));
}

TEST_CASE("the smallest ghost share that pins the ATS variables") {
  AtsSpec spec = parse_ats("vars stdOut: seq, count: int; init: count == 0 && stdOut == []; "
                           "next: stdOut' == stdOut ++ [count] && count' == count + 1;");
  Domains d = small();
  auto r = check_assumption1(A("count |->[2/3] _ ** stdOut |-> _"), spec, d);
  REQUIRE(r.rho);
  CHECK(*r.rho == Perm(2, 3));
  auto missing = check_assumption1(A("stdOut |-> _"), spec, d);
  CHECK_FALSE(missing.rho);
}
