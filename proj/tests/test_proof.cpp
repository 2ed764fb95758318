#include "mutation.hpp"

#include "refine/workflow.hpp"

#include <doctest.h>

#include <map>

using namespace refine;

namespace {

const std::string kDir = REFINE_FIXTURE_DIR;

LoadedProgram fixture(const std::string& name) { return load_program(read_file(kDir + "/" + name + ".rimp")); }
AtsSpec counter() { return load_ats(read_file(kDir + "/counter.rats")); }
DerivationFile derivation(const std::string& name) {
  return rderiv_from_json(nlohmann::json::parse(read_file(kDir + "/" + name + ".rderiv")));
}

const testing::MutationSuite& suite() {
  static const testing::MutationSuite s = testing::build_mutation_suite(kDir);
  return s;
}

CheckResult elaborate_and_check(const std::string& name) {
  auto lp = fixture(name);
  auto f = elaborate_program(lp, counter(), proof_domains());
  return check_proof_file(f, counter(), std::nullopt, &lp, 1);
}

}  // namespace

TEST_CASE("bundled derivations are accepted") {
  for (const auto& name : {"alternating", "print_loop"}) {
    CAPTURE(name);
    auto lp = fixture(name);
    auto r = check_proof_file(derivation(name), counter(), std::nullopt, &lp, 1);
    INFO(r.to_json().dump());
    CHECK(r.accepted);
  }
}

TEST_CASE("every mutant is rejected with its reason code") {
  for (const auto& o : testing::run_mutants(suite().bases)) {
    CAPTURE(o.mutant.rule);
    INFO(o.result.to_json().dump());
    CHECK(o.result.accepted);
  }
  for (const auto& o : testing::run_mutants(suite().mutants)) {
    CAPTURE(o.mutant.rule);
    CAPTURE(o.mutant.condition);
    INFO(o.result.to_json().dump());
    CHECK(o.killed());
  }
}

TEST_CASE("every rule label has an accepted instance and a killed mutant") {
  std::map<std::string, int> accepted, killed;
  std::function<void(const Derivation&)> count = [&](const Derivation& d) {
    ++accepted[d.rule];
    for (const auto& k : d.children) count(*k);
  };
  for (const auto& b : suite().bases) count(*b.tree);
  for (const auto& o : testing::run_mutants(suite().mutants)) {
    if (o.killed()) ++killed[o.mutant.rule];
  }
  for (const auto& rule : proof_rule_names()) {
    CAPTURE(rule);
    CHECK(accepted[rule] > 0);
    CHECK(killed[rule] > 0);
  }
}

TEST_CASE("negative fixtures are rejected with the expected reasons") {
  auto before = elaborate_and_check("print_before_init");
  CHECK_FALSE(before.accepted);
  CHECK(before.reason == ProofReason::GhostLockMisuse);
  CHECK(before.rule == "Print");

  auto loop = elaborate_and_check("next_loop");
  CHECK_FALSE(loop.accepted);
  CHECK(loop.reason == ProofReason::AtomicityViolation);
  CHECK(loop.rule == "Next");

  auto wrong = elaborate_and_check("alternating_wrong_print");
  CHECK_FALSE(wrong.accepted);
  CHECK(wrong.reason == ProofReason::EntailmentFailed);
}

TEST_CASE("derivation files round trip") {
  auto f = derivation("alternating");
  auto j = rderiv_to_json(f);
  auto g = rderiv_from_json(j);
  CHECK(rderiv_to_json(g) == j);
  CHECK(g.root->size() == f.root->size());
  CHECK_THROWS(rderiv_from_json(nlohmann::json{{"format", "other"}}));
}

TEST_CASE("parallel checking reports the same first failure") {
  auto lp = fixture("alternating_wrong_print");
  auto f = elaborate_program(lp, counter(), proof_domains());
  auto one = check_proof_file(f, counter(), std::nullopt, &lp, 1);
  auto four = check_proof_file(f, counter(), std::nullopt, &lp, 4);
  CHECK(one.path == four.path);
  CHECK(one.reason == four.reason);
  CHECK(one.detail == four.detail);
}

TEST_CASE("the root must conclude the program's triple") {
  auto other = fixture("print_loop");
  auto r = check_proof_file(derivation("alternating"), counter(), std::nullopt, &other, 1);
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == ProofReason::RuleShapeMismatch);
  CHECK(r.path.empty());
}

TEST_CASE("elaboration needs loop invariants") {
  auto lp = load_program("ghost count: int;\nrequires stdOut |-> [] ** count |-> _;\nensures true;\n"
                         "x := 0; while x < 2 { x := x + 1 }");
  try {
    elaborate_program(lp, counter(), proof_domains());
    FAIL("expected an elaboration error");
  } catch (const ElaborationError& e) {
    CHECK(e.code == "MissingAnnotation");
    CHECK(e.pos.line == 4);
  }
}

TEST_CASE("fresh names for next") {
  auto o = next_fresh_names(2, {"o1", "x"});
  REQUIRE(o.size() == 2);
  CHECK(o[0] != "o1");
  CHECK(o[1] == "o2");
}
