// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "mutation.hpp"
#include "oracles.hpp"

#include "refine/ats.hpp"
#include "refine/workflow.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>

using namespace refine;

namespace {

// Wall-clock limits per criterion, in seconds.
constexpr double kHeapLimit = 5;
constexpr double kLawLimit = 30;
constexpr double kOracleLimit = 5;
constexpr double kPositiveLimit = 120;
constexpr double kNegativeLimit = 60;
constexpr double kMutationLimit = 60;

constexpr std::size_t kHeapCases = 10'000;
constexpr std::size_t kLawTriples = 120;

const std::string kDir = REFINE_FIXTURE_DIR;

struct Criterion {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

LoadedProgram fixture(const std::string& name) { return load_program(read_file(kDir + "/" + name + ".rimp")); }
AtsSpec counter() { return load_ats(read_file(kDir + "/counter.rats")); }

RunConfig budget() {
  RunConfig cfg;
  cfg.domains.int_lo = -2;
  cfg.domains.int_hi = 8;
  cfg.max_steps = 40;
  cfg.max_trace_len = 6;
  return cfg;
}

const Obligation* find(const Report& r, const std::string& name) {
  for (const auto& o : r.obligations) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

bool obligation_is(const Report& r, const std::string& name, Outcome want, const std::string& reason = "") {
  const auto* o = find(r, name);
  return o && o->outcome == want && (reason.empty() || o->reason == reason);
}

int run(int id, const std::string& title, double limit, const std::function<Criterion()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Criterion v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit > 0) v.require(secs < limit, "over time limit of " + std::to_string(static_cast<int>(limit)) + " s");
  std::printf("criterion %d %s: %s (%.2f s)%s%s\n", id, v.ok ? "PASS" : "FAIL", title.c_str(), secs,
              v.detail.empty() ? "" : " -- ", v.detail.c_str());
  std::fflush(stdout);
  return v.ok ? 0 : 1;
}

}  // namespace

int main() {
  int failed = 0;

  failed += run(1, "heap algebra laws on random heaps", kHeapLimit, [] {
    Criterion v;
    auto r = testing::heap_algebra_suite(kHeapCases, 1);
    v.require(r.cases >= kHeapCases, "only " + std::to_string(r.cases) + " cases");
    v.require(r.ok(), std::to_string(r.failures) + " failures" + (r.messages.empty() ? "" : ": " + r.messages[0]));
    return v;
  });

  failed += run(2, "assertion laws by bounded validity", kLawLimit, [] {
    Criterion v;
    Domains d;
    d.int_lo = -2;
    d.int_hi = 2;
    d.addr_count = 2;
    d.max_heap_cells = 2;
    d.max_seq_len = 2;
    auto r = testing::assertion_law_suite(kLawTriples, 11, d);
    v.require(r.ok(), std::to_string(r.failures) + " failures" + (r.messages.empty() ? "" : ": " + r.messages[0]));
    v.require(r.inconclusive == 0, std::to_string(r.inconclusive) + " inconclusive");
    return v;
  });

  failed += run(3, "counter ATS traces equal the breadth-first oracle", kOracleLimit, [] {
    Criterion v;
    Domains d;
    d.int_lo = 0;
    d.int_hi = 3;
    auto spec = load_ats(read_file(kDir + "/counter.rats"), false);
    v.require(enumerate_traces(spec, 3, d) == testing::counter_trace_oracle(0, 3, 3, false), "raw traces differ");
    v.require(enumerate_traces(stutter_close(spec), 3, d) == testing::counter_trace_oracle(0, 3, 3, true),
              "stutter-closed traces differ");
    return v;
  });

  failed += run(4, "alternating refines the counter and its derivation checks", kPositiveLimit, [] {
    Criterion v;
    auto lp = fixture("alternating");
    auto r = check_refinement(lp, counter(), budget());
    for (const auto& name : {"refsucc", "traceInclusion", "safety.accessInDomain", "safety.noAbort",
                             "safety.postcondition", "lockInvariants", "erasure"}) {
      v.require(obligation_is(r, name, Outcome::Pass), std::string(name) + " did not pass");
    }
    v.require(r.overall() == Outcome::Pass, std::string("overall ") + outcome_name(r.overall()));
    auto f = rderiv_from_json(nlohmann::json::parse(read_file(kDir + "/alternating.rderiv")));
    auto p = check_proof_file(f, counter(), std::nullopt, &lp, 1);
    v.require(p.accepted, "derivation rejected: " + p.to_json().dump());
    return v;
  });

  failed += run(5, "negative fixtures fail with their reason codes", kNegativeLimit, [] {
    Criterion v;
    auto wrong = check_refinement(fixture("alternating_wrong_print"), counter(), budget());
    const auto* rs = find(wrong, "refsucc");
    v.require(rs && rs->outcome == Outcome::Fail && rs->reason == "NextViolated" &&
                  rs->counterexample["edge"]["rule"] == "Next",
              "(a) refsucc did not fail with NextViolated at a Next edge");

    auto racy = explore_program(fixture("racy_counter"), std::nullopt, budget());
    const auto* na = find(racy, "safety.noAbort");
    v.require(na && na->reason == "AbortReachable" && na->detail.find("Race") != std::string::npos,
              "(b) no Race abort reported");

    auto proof_of = [](const std::string& name) {
      auto lp = fixture(name);
      auto f = elaborate_program(lp, counter(), proof_domains());
      return check_proof_file(f, counter(), std::nullopt, &lp, 1);
    };
    auto before = proof_of("print_before_init");
    v.require(!before.accepted && before.reason == ProofReason::GhostLockMisuse,
              std::string("(c) got ") + reason_name(before.reason));
    auto loop = proof_of("next_loop");
    v.require(!loop.accepted && loop.reason == ProofReason::AtomicityViolation,
              std::string("(d) got ") + reason_name(loop.reason));
    return v;
  });

  failed += run(6, "refsucc passing implies trace inclusion on positive fixtures", 0, [] {
    Criterion v;
    for (const auto& name : {"alternating", "print_loop"}) {
      auto r = check_refinement(fixture(name), counter(), budget());
      v.require(obligation_is(r, "refsucc", Outcome::Pass), std::string(name) + ": refsucc did not pass");
      v.require(obligation_is(r, "traceInclusion", Outcome::Pass), std::string(name) + ": traceInclusion did not pass");
      v.require(obligation_is(r, "refsuccImpliesTraceInclusion", Outcome::Pass),
                std::string(name) + ": cross-check failed");
    }
    return v;
  });

  failed += run(7, "every proof-rule mutant is rejected with its reason", kMutationLimit, [] {
    Criterion v;
    auto suite = testing::build_mutation_suite(kDir);
    for (const auto& b : testing::run_mutants(suite.bases)) {
      v.require(b.result.accepted, "base " + b.mutant.rule + " rejected");
    }
    std::map<std::string, int> killed;
    std::size_t total = 0, dead = 0;
    for (const auto& o : testing::run_mutants(suite.mutants)) {
      ++total;
      if (o.killed()) {
        ++dead;
        ++killed[o.mutant.rule];
      } else {
        v.require(false, o.mutant.rule + "/" + o.mutant.condition + " survived");
      }
    }
    for (const auto& rule : proof_rule_names()) v.require(killed[rule] > 0, "no mutant kills " + rule);
    v.require(total > 0, "empty suite");
    v.detail = std::to_string(dead) + "/" + std::to_string(total) + " killed" + (v.detail.empty() ? "" : "; " + v.detail);
    return v;
  });

  failed += run(8, "explore reports agree for 1 and 8 workers", 0, [] {
    Criterion v;
    for (const auto& name : {"alternating", "alternating_wrong_print", "print_loop", "racy_counter",
                             "print_before_init", "next_loop"}) {
      auto cfg = budget();
      auto lp = fixture(name);
      auto one = explore_program(lp, counter(), cfg).to_json().dump();
      cfg.workers = 8;
      auto eight = explore_program(lp, counter(), cfg).to_json().dump();
      v.require(one == eight, std::string(name) + " differs");
    }
    return v;
  });

  return failed == 0 ? 0 : 1;
}
