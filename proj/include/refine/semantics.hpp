#pragma once

#include "refine/heap.hpp"
#include "refine/syntax.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

namespace refine {

/// (C, s, h) with a normal heap, or abort.
struct Config {
  CommandPtr cmd;
  Stack stack;
  PermHeap heap;
  bool abort = false;

  static Config aborted() {
    Config c;
    c.cmd = c_skip();
    c.abort = true;
    return c;
  }
  std::size_t hash() const;
  friend bool operator==(const Config& a, const Config& b);
};

/// Derivation of one step: `rules` lists the applied rules from the outermost
/// context rule down to the base rule.
struct StepLabel {
  std::vector<std::string> rules;
  std::string detail;

  const std::string& rule() const { return rules.back(); }
  std::string to_string() const;
  nlohmann::json to_json() const;
  friend bool operator<(const StepLabel& a, const StepLabel& b) { return a.to_string() < b.to_string(); }
  friend bool operator==(const StepLabel& a, const StepLabel& b) {
    return a.rules == b.rules && a.detail == b.detail;
  }
};

struct Step {
  StepLabel label;
  Config next;
};

struct SemanticsOptions {
  /// Alloc picks any unused ordinary address below addr_count instead of the
  /// least unused one.
  bool full_alloc = false;
  int addr_count = 4;
  /// Step bound for running the body of a next block to completion.
  std::size_t next_budget = 10'000;
};

/// All successors of a non-abort configuration, sorted by label.
std::vector<Step> step(const Config& cfg, const SemanticsOptions& opt = {});

/// Locks held: targets of `within` anywhere in c.
std::set<std::string> locked(const CommandPtr& c);
/// Locks declared: targets of lock declarations anywhere in c.
std::set<std::string> dlocks(const CommandPtr& c);
/// The ghost lock is declared, i.e. the init block has been entered.
bool is_init(const CommandPtr& c);

/// Unprotected addresses read and written by the next step of c.
std::set<Address> reads(const CommandPtr& c, const Stack& s, const PermHeap& h);
std::set<Address> writes(const CommandPtr& c, const Stack& s, const PermHeap& h);

/// A sequence of skips and ghost assignments with at most one base command or print.
bool is_atomic(const CommandPtr& c);

/// Drops ghost assignments and unwraps next and init blocks.
CommandPtr erase_ghost(const CommandPtr& c);

nlohmann::json config_to_json(const Config& c);

}  // namespace refine

template <>
struct std::hash<refine::Config> {
  std::size_t operator()(const refine::Config& c) const { return c.hash(); }
};
