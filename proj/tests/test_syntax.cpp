#include "generators.hpp"

#include "refine/parser.hpp"
#include "refine/typing.hpp"

#include <doctest.h>

using namespace refine;

namespace {

std::string error_code(const std::string& text) {
  try {
    parse_program(text);
  } catch (const ParseError& e) {
    CHECK(e.line > 0);
    CHECK(e.col > 0);
    return e.code;
  }
  return "";
}

}  // namespace

TEST_CASE("pretty printing round trips through the parser") {
  testing::ProgramGen gen(20261014);
  for (int i = 0; i < 400; ++i) {
    Program p = gen.program(4);
    std::string text = program_to_string(p);
    Program q = parse_program(text);
    INFO(text);
    CHECK(command_equal(p.body, q.body, true));
    CHECK(bool(p.requires_) == bool(q.requires_));
    if (p.requires_ && q.requires_) CHECK(alpha_equal(p.requires_, q.requires_));
    // Parsing may add inferred binder types; after that printing is a fixed point.
    std::string once = program_to_string(q);
    CHECK(program_to_string(parse_program(once)) == once);
  }
}

TEST_CASE("parsed programs never contain within") {
  testing::ProgramGen gen(7);
  for (int i = 0; i < 100; ++i) {
    Program q = parse_program(program_to_string(gen.program(4)));
    CHECK_FALSE(command_any(q.body, [](const Command& c) { return c.kind == CmdKind::Within; }));
  }
  CHECK(error_code("within L { skip }") == "InternalFormInSource");
}

TEST_CASE("rejected sources carry a code and a position") {
  CHECK(error_code("x := ;") == "SyntaxError");
  CHECK(error_code("ghost count := 1") == "UnknownIdentifier");
  CHECK(error_code("ghost g: int, g: int; skip") == "RepeatedVar");
  CHECK(error_code("with L when true { skip }") == "UnknownIdentifier");
  try {
    parse_program("\n\n  x := (1 +");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("ATS files") {
  AtsSpec spec = parse_ats("vars stdOut: seq, count: int;\ninit: 0 <= count && stdOut == [];\n"
                           "next: stdOut' == stdOut ++ [count] && count' == count + 1;");
  CHECK(spec.k() == 2);
  CHECK(spec.observable() == kStdOut);
  CHECK(spec.types[1] == Type::Int);
  CHECK(parse_ats(ats_to_string(spec)).vars == spec.vars);

  auto code = [](const std::string& text) {
    try {
      parse_ats(text);
    } catch (const ParseError& e) {
      return e.code;
    }
    return std::string();
  };
  CHECK(code("vars a: int; init: a' == 0; next: a' == a;") == "PrimedInInit");
  CHECK(code("vars a: int; init: a == 0; next: emp;") == "NonFOLFormula");
  CHECK(code("vars a: int, a: int; init: true; next: true;") == "RepeatedVar");
}

TEST_CASE("ghost reads and annotations survive parsing") {
  Program p = parse_program("ghost count: int;\nrequires count |-> _;\n"
                            "while x < 3 inv (count |->[1/2] x) { x := x + 1; ghost count := count + 1 }");
  CHECK(p.is_ghost("count"));
  CHECK(p.is_ghost(kStdOut));
  const auto& loop = p.body;
  REQUIRE(loop->kind == CmdKind::While);
  REQUIRE(loop->inv);
  CHECK(assertion_ghosts(loop->inv) == std::set<std::string>{"count"});
  CHECK(command_ghosts(loop) == std::set<std::string>{"count"});
  TypeEnv types = infer_program_types(p);
  CHECK(types.var("x") == Type::Int);
}

TEST_CASE("continuously initialized shape") {
  CHECK(check_continuously_initialized(parse_program("skip").body).no_init);
  CHECK(check_continuously_initialized(parse_program("x := 1; init { skip }").body).ok);
  CHECK_FALSE(check_continuously_initialized(parse_program("init { skip }; x := 1").body).ok);
  CHECK_FALSE(check_continuously_initialized(parse_program("init { skip }; init { skip }").body).ok);
  // Only inits before the final one matter for the shape.
  CHECK(check_continuously_initialized(parse_program("x := 1; init { init { skip } }").body).ok);
}
