#pragma once

#include "refine/assertion.hpp"
#include "refine/ats.hpp"
#include "refine/lock_env.hpp"
#include "refine/semantics.hpp"
#include "refine/typing.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace refine {

struct ExploreOptions {
  Domains domains;
  SemanticsOptions semantics;
  int max_steps = 64;
  std::size_t state_cap = 1'000'000;
  unsigned workers = 1;
  /// Candidate frame heaps added to every initial configuration.
  std::vector<PermHeap> frame_pool = {PermHeap()};
};

struct InitialConfigs {
  std::vector<Config> configs;
  std::vector<std::string> warnings;
};

/// Configurations (c, s, h (+) hS (+) hF) with (s, h) |= p exactly, (s, hS) |= the
/// separating conjunction of gamma's invariants, hF from the frame pool, and a
/// normal total heap. Stack variables outside the assertions keep their default.
InitialConfigs initial_configs(const CommandPtr& c, const AssertionPtr& p, const LockEnv& gamma,
                               const ExploreOptions& opt, const TypeEnv& types = {});

struct ForestNode {
  Config cfg;
  int depth = 0;
  int parent = -1;       // BFS-tree predecessor
  int parent_edge = -1;
  bool init = false;
  bool expanded = false;
  bool stuck = false;    // expanded, not skip/abort, and no successor
};

struct ForestEdge {
  int from = 0;
  int to = 0;
  StepLabel label;
};

struct ExecutionForest {
  std::vector<ForestNode> nodes;
  std::vector<ForestEdge> edges;
  std::vector<int> roots;
  std::vector<std::vector<int>> out;  // node -> edge indices
  std::size_t dedup_hits = 0;
  bool capped = false;                // state cap reached
  bool truncated = false;             // some node at the depth bound was not expanded
  std::vector<std::string> invariant_violations;

  /// Node ids from a root to `node` along BFS-tree parents.
  std::vector<int> path_to(int node) const;
  /// Configs and labels of the rooted path ending in `node`.
  nlohmann::json path_json(int node) const;
  nlohmann::json stats_json() const;
};

/// Level-synchronous BFS up to opt.max_steps. Stacks are restricted to the
/// free variables of the node's command plus `live`. Deterministic for every
/// worker count.
ExecutionForest explore(const std::vector<Config>& inits, const ExploreOptions& opt,
                        const std::set<std::string>& live = {});

enum class Outcome { Pass, Fail, Inconclusive };
const char* outcome_name(Outcome o);

struct Obligation {
  std::string name;
  Outcome outcome = Outcome::Pass;
  std::string reason;  // stable code when failing
  std::string detail;
  nlohmann::json counterexample;  // null when passing

  nlohmann::json to_json() const;
};

Obligation check_refsucc(const ExecutionForest& f, const AtsSpec& ats, const Domains& d);

using TraceSet = std::set<Trace>;
/// Observable traces of rooted forest paths, up to max_len entries.
TraceSet program_traces(const ExecutionForest& f, int max_len);
Obligation check_trace_inclusion(const ExecutionForest& f, const AtsSpec& ats, int max_len, const Domains& d);

/// Consequences of safety per reachable node: unprotected accesses are
/// allocated, no abort is reachable, and terminal skip nodes satisfy q.
std::vector<Obligation> audit_safety(const ExecutionForest& f, const AssertionPtr& q, const Domains& d,
                                     const TypeEnv& types = {});

/// Invariants must hold on a subheap after each lock release, after the ghost
/// lock is declared, and after each next block. `ats` enables the Init-state check.
Obligation audit_lock_invariants(const ExecutionForest& f, const LockEnv& gamma, const Domains& d,
                                 const AtsSpec* ats = nullptr, const TypeEnv& types = {});

/// No step outside the initialized region changes stdOut.
Obligation audit_print_before_init(const ExecutionForest& f);

/// Compares the stdOut values reachable by the program and by its ghost
/// erasure from the same initial configurations.
Obligation audit_erasure(const Program& program, const std::vector<Config>& inits, const ExploreOptions& opt,
                         const std::set<std::string>& live = {});

struct Report {
  std::string command;
  std::vector<Obligation> obligations;
  std::vector<std::string> warnings;
  nlohmann::json statistics = nlohmann::json::object();

  Outcome overall() const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

}  // namespace refine
