#include "oracles.hpp"

#include "refine/heap.hpp"
#include "refine/parser.hpp"

#include <doctest.h>

using namespace refine;

namespace {

PermHeap heap(std::initializer_list<std::tuple<Address, Perm, int>> cells) {
  PermHeap h;
  for (const auto& [a, p, v] : cells) h.set(a, p, Value::integer(v));
  return h;
}

const Address a0 = Address::ordinary(0);
const Address a1 = Address::ordinary(1);

}  // namespace

TEST_CASE("heap algebra properties on random heaps") {
  auto r = testing::heap_algebra_suite(10'000, 42);
  for (const auto& m : r.messages) INFO(m);
  CHECK(r.cases == 10'000);
  CHECK(r.failures == 0);
}

TEST_CASE("composition of fractions") {
  auto half = heap({{a0, Perm(1, 2), 5}});
  auto sum = heap_add(half, half);
  REQUIRE(sum);
  CHECK(sum->find(a0)->perm == Perm(1));
  CHECK(is_normal(*sum));
  CHECK_FALSE(heap_add(*sum, half));
  CHECK_FALSE(heap_add(half, heap({{a0, Perm(1, 2), 6}})));
  CHECK(heap_add(half, heap({{a1, Perm(1), 0}}))->size() == 2);
  CHECK(heap_add(heap({{a0, Perm(1, 3), 1}}), heap({{a0, Perm(2, 3), 1}}))->find(a0)->perm == Perm(1));
}

TEST_CASE("permissions outside (0, 1] are rejected") {
  PermHeap h;
  CHECK_THROWS_AS(h.set(a0, Perm(0), Value::integer(1)), std::invalid_argument);
  CHECK_THROWS_AS(h.set(a0, Perm(3, 2), Value::integer(1)), std::invalid_argument);
  CHECK_THROWS_AS(h.set(a0, Perm(-1, 2), Value::integer(1)), std::invalid_argument);
}

TEST_CASE("normal completion") {
  auto h = heap({{a0, Perm(1, 4), 1}, {a1, Perm(1), 2}, {Address::ghost_named("g"), Perm(2, 3), 0}});
  auto c = normal_completion(h);
  CHECK(c.find(a0)->perm == Perm(3, 4));
  CHECK_FALSE(c.contains(a1));
  CHECK(is_normal(*heap_add(h, c)));
  CHECK(normal_completion(PermHeap()).empty());
}

TEST_CASE("update, delete and subtraction") {
  auto h = heap({{a0, Perm(1), 1}, {a1, Perm(1, 2), 2}});
  CHECK(heap_update(h, a0, Value::integer(9)).find(a0)->value == Value::integer(9));
  CHECK(heap_update(h, a1, Value::integer(9)).find(a1)->perm == Perm(1));
  CHECK_FALSE(heap_delete(h, a0).contains(a0));
  CHECK(heap_subtract(h, heap({{a1, Perm(1, 4), 2}}))->find(a1)->perm == Perm(1, 4));
  CHECK_FALSE(heap_subtract(h, heap({{a1, Perm(1), 2}})));
  CHECK_FALSE(heap_subtract(h, heap({{a1, Perm(1, 4), 3}})));
}

TEST_CASE("ghost and ordinary addresses are disjoint") {
  Address g = Address::ghost_named("count");
  CHECK(g.is_ghost());
  CHECK_FALSE(a0.is_ghost());
  CHECK(g != Address::ghost_named("stdOut"));
  auto h = heap({{g, Perm(1), 0}, {a0, Perm(1), 0}});
  CHECK(h.size() == 2);
}

TEST_CASE("ATS state projection") {
  AtsSpec spec = parse_ats("vars stdOut: seq, count: int; init: true; next: true;");
  PermHeap h;
  h.set(Address::ghost_named(kStdOut), Perm(1), Value::sequence({}));
  CHECK_FALSE(get_state(h, spec));
  h.set(Address::ghost_named("count"), Perm(1, 2), Value::integer(3));
  auto s = get_state(h, spec);
  REQUIRE(s);
  CHECK((*s)[1] == Value::integer(3));
}

TEST_CASE("stacks are total with default zero") {
  Stack s;
  CHECK(s.get("unset") == Value::integer(0));
  s.set("x", Value::integer(0));
  CHECK(s == Stack());
  s.set("x", Value::integer(2));
  s.set("y", Value::integer(3));
  CHECK(s.restricted({"x"}).bindings().size() == 1);
}

TEST_CASE("heap JSON round trip") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    auto h = testing::random_heap(rng, 3, {Perm(1, 3), Perm(1)}, 4);
    CHECK(heap_from_json(heap_to_json(h)) == h);
  }
}
