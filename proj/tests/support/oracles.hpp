#pragma once

#include "refine/assertion.hpp"
#include "refine/ats.hpp"
#include "refine/heap.hpp"

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace refine::testing {

struct SuiteResult {
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::size_t inconclusive = 0;
  std::vector<std::string> messages;  // first few failures

  bool ok() const { return failures == 0; }
  void fail(const std::string& msg);
};

/// Random heap over ordinary addresses 0..addrs-1 and the ghost cell g.
PermHeap random_heap(std::mt19937_64& rng, int addrs, const std::vector<Perm>& perms, int max_value);

/// Partial commutative monoid laws of (+), its domain, normality and the
/// normal completion, each against a reference computed cell by cell.
SuiteResult heap_algebra_suite(std::size_t cases, std::uint64_t seed);

/// Bounded validity of the separating-conjunction monoid laws, the wand
/// adjunction, agreement of sugar forms with direct semantic definitions and
/// the empty iterated conjunction, over generated assertions.
SuiteResult assertion_law_suite(std::size_t triples, std::uint64_t seed, const Domains& d);

/// Breadth-first reference for the counter ATS (count starts anywhere in
/// lo..hi, each step appends count to stdOut and increments it); with
/// `stutter`, steps may also leave the state alone.
std::set<Trace> counter_trace_oracle(std::int64_t lo, std::int64_t hi, int max_len, bool stutter);

}  // namespace refine::testing
