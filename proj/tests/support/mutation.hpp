#pragma once

#include "refine/proof.hpp"

#include <string>
#include <vector>

namespace refine::testing {

struct Mutant {
  std::string rule;       // label of the mutated node
  std::string condition;  // the side condition or shape clause it violates
  ProofReason expected;
  DerivationPtr tree;     // the mutated node is the root
  ProofContext ctx;
};

struct MutantOutcome {
  Mutant mutant;
  CheckResult result;

  /// Rejected at the root with the expected reason.
  bool killed() const {
    return !result.accepted && result.path.empty() && result.reason == mutant.expected && result.rule == mutant.rule;
  }
};

struct MutationSuite {
  /// Unmutated derivations; each must be accepted.
  std::vector<Mutant> bases;
  std::vector<Mutant> mutants;
};

/// Builds bases and mutants from the bundled positive fixtures in
/// `fixture_dir` plus small hand-written derivations for rules the
/// fixtures do not exercise.
MutationSuite build_mutation_suite(const std::string& fixture_dir);

std::vector<MutantOutcome> run_mutants(const std::vector<Mutant>& ms);

}  // namespace refine::testing
