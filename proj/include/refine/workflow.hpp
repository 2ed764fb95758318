#pragma once

#include "refine/ats.hpp"
#include "refine/explorer.hpp"
#include "refine/proof.hpp"
#include "refine/typing.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace refine {

/// Audit names accepted by RunConfig::audits.
const std::vector<std::string>& audit_names();

struct RunConfig {
  Domains domains;
  int max_steps = 64;
  int max_trace_len = 6;
  std::uint64_t seed = 0;
  bool stutter_close = true;
  std::set<std::string> audits{audit_names().begin(), audit_names().end()};
  unsigned workers = 1;
  std::size_t state_cap = 1'000'000;
};

/// Domains for proof checking; entailments are decided by enumeration, so the
/// defaults are smaller than the explorer's.
Domains proof_domains();

/// A parsed program with its inferred types and typed invariant binders.
struct LoadedProgram {
  Program program;
  TypeEnv types;
};

std::string read_file(const std::string& path);
LoadedProgram load_program(const std::string& text);
AtsSpec load_ats(const std::string& text, bool close_under_stutter = true);

/// Forest statistics and the selected audits.
Report explore_program(const LoadedProgram& lp, const std::optional<AtsSpec>& ats, const RunConfig& cfg);

/// refsucc, trace inclusion and the selected audits, plus the cross-check
/// that refsucc passing implies trace inclusion passing on the same forest.
Report check_refinement(const LoadedProgram& lp, const AtsSpec& ats, const RunConfig& cfg);

/// One execution chosen by a seeded scheduler. `first` always takes the
/// least successor by label; otherwise successors are drawn uniformly.
struct RunTranscript {
  std::string status;  // terminated, aborted, stuck or bound
  nlohmann::json steps = nlohmann::json::array();
  nlohmann::json final_config;
  std::optional<Value> std_out;

  nlohmann::json to_json() const;
  std::string to_text() const;
};
RunTranscript run_program(const LoadedProgram& lp, const RunConfig& cfg, bool first);

/// Checks a derivation file. With `program`, the root must also conclude
/// {requires} body {ensures} of that program.
CheckResult check_proof_file(const DerivationFile& f, const std::optional<AtsSpec>& ats,
                             const std::optional<Domains>& domains, const LoadedProgram* program, int workers);

DerivationFile elaborate_program(const LoadedProgram& lp, const AtsSpec& ats, const Domains& domains);

}  // namespace refine
