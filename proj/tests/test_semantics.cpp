#include "generators.hpp"

#include "refine/parser.hpp"
#include "refine/semantics.hpp"

#include <doctest.h>

#include <random>

using namespace refine;

namespace {

CommandPtr C(const std::string& s) { return parse_command(s, ParseContext{{kStdOut, "count"}, true}); }

Config config(CommandPtr c) {
  Config cfg;
  cfg.cmd = std::move(c);
  cfg.heap.set(Address::ghost_named(kStdOut), Perm(1), Value::sequence({}));
  cfg.heap.set(Address::ghost_named("count"), Perm(1), Value::integer(0));
  return cfg;
}

// Runs a program that has exactly one successor per step.
Config run_deterministic(Config c, int bound = 200) {
  for (int i = 0; i < bound && !c.abort && c.cmd->kind != CmdKind::Skip; ++i) {
    auto next = step(c);
    REQUIRE(next.size() == 1);
    c = next[0].next;
  }
  return c;
}

Value out_of(const Config& c) { return c.heap.find(Address::ghost_named(kStdOut))->value; }

Value seq(std::initializer_list<std::int64_t> xs) {
  ValueSeq items;
  for (auto x : xs) items.push_back(Value::integer(x));
  return Value::sequence(items);
}

bool has_rule(const std::vector<Step>& steps, const std::string& rule) {
  for (const auto& s : steps) {
    if (s.label.rule() == rule) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("sequential programs run to completion") {
  auto c = run_deterministic(config(C("x := 1; y := x + 2; while x < 4 { x := x + 1 }; print(y); print(x)")));
  CHECK(c.cmd->kind == CmdKind::Skip);
  CHECK(c.stack.get("x") == Value::integer(4));
  CHECK(out_of(c) == seq({3, 4}));
}

TEST_CASE("heap commands") {
  auto c = run_deterministic(config(C("new(p, 5); x := [p]; [p] := x + 1; y := [p]; free(p)")));
  CHECK(c.stack.get("y") == Value::integer(6));
  CHECK_FALSE(c.heap.contains(Address::ordinary(0)));

  auto bad = run_deterministic(config(C("new(p, 1); free(p); x := [p]")));
  CHECK(bad.abort);
  auto ghost = step(config(c_free(e_const(Value::address(Address::ghost_named("count"))))));
  REQUIRE(ghost.size() == 1);
  CHECK(ghost[0].label.rule() == "FreeA");
  CHECK(ghost[0].next.abort);
}

TEST_CASE("allocation picks the least unused address unless asked otherwise") {
  auto cfg = config(C("new(p, 0)"));
  cfg.heap.set(Address::ordinary(0), Perm(1), Value::integer(0));
  auto canon = step(cfg);
  REQUIRE(canon.size() == 1);
  CHECK(canon[0].next.stack.get("p") == Value::address(Address::ordinary(1)));
  SemanticsOptions full;
  full.full_alloc = true;
  full.addr_count = 4;
  CHECK(step(cfg, full).size() == 3);
}

TEST_CASE("re-entering a held lock aborts") {
  auto steps = step(config(c_within("L", c_within("L", c_skip()))));
  CHECK(has_rule(steps, "WithinL"));
  for (const auto& s : steps) {
    if (s.label.rule() == "WithinL") CHECK(s.next.abort);
  }
}

TEST_CASE("conflicting unprotected accesses race") {
  auto cfg = config(C("par { [p] := 1 } { x := [p] }"));
  cfg.stack.set("p", Value::address(Address::ordinary(0)));
  cfg.heap.set(Address::ordinary(0), Perm(1), Value::integer(0));
  auto steps = step(cfg);
  CHECK(has_rule(steps, "Race"));
  auto reads_only = config(C("par { y := [p] } { x := [p] }"));
  reads_only.stack = cfg.stack;
  reads_only.heap = cfg.heap;
  CHECK_FALSE(has_rule(step(reads_only), "Race"));
}

TEST_CASE("parallel branches never hold the same lock") {
  auto cfg = config(c_par(c_within("L", C("x := 1")), C("with L when true { y := 1 }")));
  for (const auto& s : step(cfg)) {
    CHECK(s.label.rules.front() == "Par1");
  }
}

TEST_CASE("next blocks take one step") {
  auto cfg = config(C("next { print(count); ghost count := count + 1 }"));
  auto steps = step(cfg);
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].label.rule() == "Next");
  CHECK(steps[0].next.cmd->kind == CmdKind::Skip);
  CHECK(out_of(steps[0].next) == seq({0}));
  CHECK(steps[0].next.heap.find(Address::ghost_named("count"))->value == Value::integer(1));

  CHECK(is_atomic(C("skip; ghost count := 1; print(1); ghost count := 2")));
  CHECK_FALSE(is_atomic(C("print(1); print(2)")));
  CHECK_FALSE(is_atomic(C("while false { skip }")));
  CHECK(step(config(C("next { while false { skip } }"))).empty());
}

TEST_CASE("init declares the ghost lock") {
  auto steps = step(config(C("init { print(1) }")));
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].next.cmd->kind == CmdKind::LockDecl);
  CHECK(steps[0].next.cmd->name == kGhostLock);
  CHECK(is_init(steps[0].next.cmd));
  CHECK(dlocks(steps[0].next.cmd).count(kGhostLock));
}

TEST_CASE("ghost erasure") {
  auto c = C("ghost count := 1; init { next { print(1); ghost count := 2 } }; x := 1");
  auto e = erase_ghost(c);
  CHECK_FALSE(command_any(e, [](const Command& k) {
    return k.kind == CmdKind::GhostAssign || k.kind == CmdKind::Next || k.kind == CmdKind::Init;
  }));
  CHECK(command_any(e, [](const Command& k) { return k.kind == CmdKind::Print; }));
}

TEST_CASE("reads and writes of the next step") {
  Stack s;
  s.set("p", Value::address(Address::ordinary(0)));
  PermHeap h;
  h.set(Address::ordinary(0), Perm(1), Value::integer(0));
  CHECK(writes(C("[p] := 1"), s, h).count(Address::ordinary(0)));
  CHECK(reads(C("x := [p]"), s, h).count(Address::ordinary(0)));
  CHECK(reads(c_within("L", C("x := [p]")), s, h).empty());
}

TEST_CASE("generated programs: determinism, normal heaps") {
  testing::ProgramGen gen(99);
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    auto cmd = gen.command(4);
    bool det = !command_any(cmd, [](const Command& k) { return k.kind == CmdKind::Par || k.kind == CmdKind::Alloc; });
    Config c = config(cmd);
    c.stack.set("p", Value::address(Address::ordinary(0)));
    c.heap.set(Address::ordinary(0), Perm(1), Value::integer(1));
    for (int k = 0; k < 40 && !c.abort && c.cmd->kind != CmdKind::Skip; ++k) {
      auto next = step(c);
      std::size_t proper = 0;
      for (const auto& s : next) {
        CHECK(is_normal(s.next.heap));
        if (s.label.rule() != "Race") ++proper;
      }
      if (det) CHECK(proper <= 1);
      if (next.empty()) break;
      c = next[rng() % next.size()].next;
      ++checked;
    }
  }
  CHECK(checked > 500);
}
