#include "refine/explorer.hpp"
#include "refine/workflow.hpp"

#include <doctest.h>

using namespace refine;

namespace {

const std::string kDir = REFINE_FIXTURE_DIR;

LoadedProgram fixture(const std::string& name) { return load_program(read_file(kDir + "/" + name + ".rimp")); }
AtsSpec counter() { return load_ats(read_file(kDir + "/counter.rats")); }

RunConfig budget(int steps) {
  RunConfig cfg;
  cfg.domains.int_lo = -2;
  cfg.domains.int_hi = 8;
  cfg.max_steps = steps;
  cfg.max_trace_len = 6;
  return cfg;
}

const Obligation& find(const Report& r, const std::string& name) {
  for (const auto& o : r.obligations) {
    if (o.name == name) return o;
  }
  FAIL("missing obligation " << name);
  return r.obligations.front();
}

ExecutionForest forest_of(const LoadedProgram& lp, const RunConfig& cfg) {
  ExploreOptions opt;
  opt.domains = cfg.domains;
  opt.max_steps = cfg.max_steps;
  auto inits = initial_configs(lp.program.body, lp.program.requires_ ? lp.program.requires_ : a_emp(), {}, opt, lp.types);
  std::set<std::string> live = lp.program.requires_ ? free_vars(lp.program.requires_) : std::set<std::string>{};
  return explore(inits.configs, opt, live);
}

const std::vector<std::string> kFixtures = {"alternating", "alternating_wrong_print", "print_loop",
                                            "racy_counter", "print_before_init", "next_loop"};

}  // namespace

TEST_CASE("alternating refines the counter") {
  auto r = check_refinement(fixture("alternating"), counter(), budget(40));
  INFO(r.to_text());
  CHECK(r.overall() == Outcome::Pass);
  CHECK(r.statistics["abortNodes"] == 0);
  CHECK(r.statistics["stuckNodes"] == 0);
}

TEST_CASE("the print loop refines the counter") {
  auto r = check_refinement(fixture("print_loop"), counter(), budget(40));
  INFO(r.to_text());
  CHECK(r.overall() == Outcome::Pass);
}

TEST_CASE("a wrong print breaks refsucc at a next step") {
  auto r = check_refinement(fixture("alternating_wrong_print"), counter(), budget(40));
  const auto& o = find(r, "refsucc");
  CHECK(o.outcome == Outcome::Fail);
  CHECK(o.reason == "NextViolated");
  CHECK(o.counterexample["edge"]["rule"] == "Next");
  CHECK(find(r, "refsuccImpliesTraceInclusion").outcome == Outcome::Pass);
}

TEST_CASE("unsynchronized writes race") {
  auto lp = fixture("racy_counter");
  auto f = forest_of(lp, budget(20));
  bool race = false;
  for (const auto& e : f.edges) {
    if (e.label.rule() == "Race") {
      race = true;
      CHECK(f.nodes[static_cast<std::size_t>(e.to)].cfg.abort);
    }
  }
  CHECK(race);
  auto r = explore_program(lp, std::nullopt, budget(20));
  const auto& o = find(r, "safety.noAbort");
  CHECK(o.reason == "AbortReachable");
  CHECK(o.detail.find("Race") != std::string::npos);
}

TEST_CASE("printing before init is observable") {
  auto r = explore_program(fixture("print_before_init"), counter(), budget(20));
  CHECK(find(r, "printBeforeInit").reason == "PrintBeforeInit");
}

TEST_CASE("exploration is schedule complete and replayable") {
  for (const auto& name : {"alternating", "racy_counter", "print_loop"}) {
    CAPTURE(name);
    auto f = forest_of(fixture(name), budget(16));
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
      const auto& n = f.nodes[i];
      if (!n.expanded || n.cfg.abort) continue;
      auto steps = step(n.cfg);
      REQUIRE(steps.size() == f.out[i].size());
      for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto& e = f.edges[static_cast<std::size_t>(f.out[i][k])];
        CHECK(e.label == steps[k].label);
        const auto& to = f.nodes[static_cast<std::size_t>(e.to)].cfg;
        CHECK(to.abort == steps[k].next.abort);
        if (!to.abort) {
          CHECK(command_equal(to.cmd, steps[k].next.cmd));
          CHECK(to.heap == steps[k].next.heap);
        }
      }
    }
  }
}

TEST_CASE("counterexample paths replay through step") {
  auto lp = fixture("alternating_wrong_print");
  auto f = forest_of(lp, budget(40));
  auto o = check_refsucc(f, counter(), budget(40).domains);
  REQUIRE(o.outcome == Outcome::Fail);
  // The reported path is rooted, so each consecutive pair is an edge of step.
  const auto& path = o.counterexample["path"];
  REQUIRE(path.size() >= 2);
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    auto ids = f.path_to(static_cast<int>(i));
    for (std::size_t k = 1; k < ids.size(); ++k) {
      const auto& from = f.nodes[static_cast<std::size_t>(ids[k - 1])];
      const auto& to = f.nodes[static_cast<std::size_t>(ids[k])];
      const auto& label = f.edges[static_cast<std::size_t>(to.parent_edge)].label;
      bool found = false;
      for (const auto& s : step(from.cfg)) {
        found = found || (s.label == label && (s.next.abort ? to.cfg.abort : command_equal(s.next.cmd, to.cfg.cmd) &&
                                                                                  s.next.heap == to.cfg.heap));
      }
      CHECK(found);
    }
    if (i > 400) break;
  }
}

TEST_CASE("explore reports do not depend on the worker count") {
  for (const auto& name : kFixtures) {
    CAPTURE(name);
    auto cfg = budget(30);
    auto one = explore_program(fixture(name), counter(), cfg).to_json();
    cfg.workers = 8;
    auto eight = explore_program(fixture(name), counter(), cfg).to_json();
    CHECK(one.dump() == eight.dump());
  }
}

TEST_CASE("refsucc passing implies trace inclusion passing") {
  for (const auto& name : kFixtures) {
    CAPTURE(name);
    auto r = check_refinement(fixture(name), counter(), budget(30));
    CHECK(find(r, "refsuccImpliesTraceInclusion").outcome == Outcome::Pass);
  }
}

TEST_CASE("the state cap makes results inconclusive") {
  auto cfg = budget(40);
  cfg.state_cap = 50;
  auto r = check_refinement(fixture("alternating"), counter(), cfg);
  CHECK(r.statistics["stateCapReached"] == true);
  CHECK(r.overall() == Outcome::Inconclusive);
}

TEST_CASE("initial configurations satisfy the precondition exactly") {
  auto lp = fixture("alternating");
  ExploreOptions opt;
  opt.domains = budget(1).domains;
  auto inits = initial_configs(lp.program.body, lp.program.requires_, {}, opt, lp.types);
  REQUIRE_FALSE(inits.configs.empty());
  for (const auto& c : inits.configs) {
    CHECK(is_normal(c.heap));
    CHECK(c.heap.find(Address::ghost_named(kStdOut))->value == Value::sequence({}));
    CHECK(c.heap.size() == 4);
  }
}

TEST_CASE("program traces are ATS traces for the print loop") {
  auto lp = fixture("print_loop");
  auto f = forest_of(lp, budget(30));
  auto traces = program_traces(f, 4);
  auto ats = enumerate_traces(counter(), 4, budget(30).domains);
  CHECK(traces.size() > 1);
  for (const auto& t : traces) CHECK(ats.count(t));
}
