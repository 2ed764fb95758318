#include "oracles.hpp"

#include "refine/ats.hpp"
#include "refine/parser.hpp"

#include <doctest.h>

using namespace refine;

namespace {

const char* kCounter =
    "vars stdOut: seq, count: int;\n"
    "init: 0 <= count && stdOut == [];\n"
    "next: stdOut' == stdOut ++ [count] && count' == count + 1;\n";

Domains range(std::int64_t lo, std::int64_t hi) {
  Domains d;
  d.int_lo = lo;
  d.int_hi = hi;
  return d;
}

Value seq(std::initializer_list<std::int64_t> xs) {
  ValueSeq items;
  for (auto x : xs) items.push_back(Value::integer(x));
  return Value::sequence(items);
}

}  // namespace

TEST_CASE("counter traces agree with the breadth-first oracle") {
  AtsSpec spec = parse_ats(kCounter);
  for (int len = 0; len <= 4; ++len) {
    CAPTURE(len);
    CHECK(enumerate_traces(spec, len, range(0, 3)) == testing::counter_trace_oracle(0, 3, len, false));
    CHECK(enumerate_traces(stutter_close(spec), len, range(0, 3)) == testing::counter_trace_oracle(0, 3, len, true));
  }
}

TEST_CASE("known counter traces") {
  auto traces = enumerate_traces(parse_ats(kCounter), 3, range(0, 3));
  CHECK(traces.count(Trace{}));
  CHECK(traces.count(Trace{seq({}), seq({0}), seq({0, 1})}));
  CHECK(traces.count(Trace{seq({}), seq({3}), seq({3, 4})}));
  CHECK_FALSE(traces.count(Trace{seq({}), seq({0}), seq({0, 2})}));
  CHECK_FALSE(traces.count(Trace{seq({0})}));
}

TEST_CASE("trace sets are prefix closed") {
  auto spec = stutter_close(parse_ats(kCounter));
  auto traces = enumerate_traces(spec, 4, range(-1, 2));
  for (const auto& t : traces) {
    if (t.empty()) continue;
    CHECK(traces.count(Trace(t.begin(), t.end() - 1)));
  }
}

TEST_CASE("stutter closure makes every state a transition to itself") {
  auto spec = parse_ats(kCounter);
  auto closed = stutter_close(spec);
  Domains d = range(-1, 2);
  d.max_seq_len = 2;
  for (std::int64_t c = -1; c <= 2; ++c) {
    for (const auto& out : {seq({}), seq({1}), seq({0, 2})}) {
      AtsState s{out, Value::integer(c)};
      CHECK(is_transition(s, s, closed, d));
      CHECK_FALSE(is_transition(s, s, spec, d));
    }
  }
}

TEST_CASE("initial states and successors") {
  auto spec = parse_ats(kCounter);
  auto inits = initial_states(spec, range(-2, 2));
  CHECK(inits.size() == 3);
  CHECK(is_initial(AtsState{seq({}), Value::integer(0)}, spec, range(-2, 2)));
  CHECK_FALSE(is_initial(AtsState{seq({1}), Value::integer(0)}, spec, range(-2, 2)));
  auto next = successors(AtsState{seq({}), Value::integer(2)}, spec, range(0, 2));
  REQUIRE(next.size() == 1);
  CHECK(next[0][1] == Value::integer(3));
}

TEST_CASE("trace enumeration respects its budget") {
  auto spec = stutter_close(parse_ats(kCounter));
  CHECK_THROWS_AS(enumerate_traces(spec, 6, range(0, 8), 50), BudgetExceeded);
}

TEST_CASE("ghost addresses of ATS variables") {
  auto spec = parse_ats(kCounter);
  CHECK(expr_to_string(ats_ghost(spec, 0)) == kStdOut);
  CHECK(ats_type_env(spec).var("count") == Type::Int);
}
