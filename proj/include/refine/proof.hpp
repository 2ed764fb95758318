#pragma once

#include "refine/assertion.hpp"
#include "refine/lock_env.hpp"
#include "refine/parser.hpp"
#include "refine/shape.hpp"
#include "refine/syntax.hpp"
#include "refine/typing.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace refine {

struct Derivation;
using DerivationPtr = std::shared_ptr<Derivation>;

/// One node Gamma |- {pre} cmd {post} of a derivation tree. The witness
/// fields carry rule parameters that the conclusion does not determine.
struct Derivation {
  std::string rule;
  LockEnv env;
  AssertionPtr pre;
  CommandPtr cmd;
  AssertionPtr post;
  std::vector<DerivationPtr> children;
  AssertionPtr frame;               // Frame
  std::string var;                  // Ex
  std::vector<std::string> fresh;   // Next; generated by the checker when empty

  std::size_t size() const;
};

/// Rule labels accepted by the checker: the inherited CSL rules, the rules for
/// init/next/print, and GhostAssign for `ghost g := E`.
const std::vector<std::string>& proof_rule_names();

enum class ProofReason {
  None,
  RuleShapeMismatch,
  SideConditionViolation,
  EntailmentFailed,
  EntailmentInconclusive,
  AtomicityViolation,
  PrecisionViolation,
  GhostLockMisuse,
};

const char* reason_name(ProofReason r);

struct CheckResult {
  bool accepted = true;
  /// Child indices from the root to the rejected node.
  std::vector<std::size_t> path;
  std::string rule;
  ProofReason reason = ProofReason::None;
  std::string detail;
  nlohmann::json counterexample;
  std::size_t nodes = 0;
  std::size_t entailments = 0;

  std::string path_string() const;
  nlohmann::json to_json() const;
};

struct ProofContext {
  Domains domains;
  TypeEnv types;
  /// Needed by Init and Next nodes; their absence is a shape mismatch.
  std::optional<AtsSpec> ats;
  int workers = 1;
};

/// Validates every node against its rule. The first rejected node in
/// pre-order is reported, independent of the worker count.
CheckResult check_derivation(const Derivation& root, const ProofContext& ctx);

// Instances of the init and next rules, shared by checker and elaborator.

/// x1^ |->rho v1 ** true ** ... ** xk^ |->rho vk ** true
AssertionPtr ats_points_to(const AtsSpec& spec, const std::vector<ExprPtr>& vals, Perm rho);
/// (exists y. x^ |->rho y && Init(y) && G) ** P
AssertionPtr init_rule_pre(const AtsSpec& spec, const AssertionPtr& g, Perm rho, const AssertionPtr& p);
/// (x^ |->rho o && G) ** P
AssertionPtr next_premise_pre(const AtsSpec& spec, const AssertionPtr& g, Perm rho,
                              const std::vector<std::string>& o, const AssertionPtr& p);
/// (exists y. x^ |->rho y && Next(o, y) && G) ** Q
AssertionPtr next_premise_post(const AtsSpec& spec, const AssertionPtr& g, Perm rho,
                               const std::vector<std::string>& o, const AssertionPtr& q);
/// The names o1..ok, primed away from `avoid`.
std::vector<std::string> next_fresh_names(std::size_t k, const std::set<std::string>& avoid);
/// The variables a Next node's fresh names must avoid.
std::set<std::string> next_avoid_set(const Derivation& n);

struct DerivationFile {
  std::vector<GhostDecl> ghosts;
  Domains domains;
  TypeEnv types;
  DerivationPtr root;
};

nlohmann::json derivation_to_json(const Derivation& d);
DerivationPtr derivation_from_json(const nlohmann::json& j, const ParseContext& ctx);
nlohmann::json rderiv_to_json(const DerivationFile& f);
/// Throws std::invalid_argument or ParseError on malformed input.
DerivationFile rderiv_from_json(const nlohmann::json& j);

class ElaborationError : public std::runtime_error {
 public:
  ElaborationError(std::string code, const std::string& msg, SourcePos pos)
      : std::runtime_error(msg), code(std::move(code)), pos(pos) {}
  std::string code;  // MissingAnnotation or Unsupported
  SourcePos pos;
};

/// Builds a candidate derivation of Gamma |- {requires} body {ensures} by
/// forward symbolic execution. Loops and locks need invariant annotations;
/// joins become Cons nodes whose entailments check_derivation decides.
/// `types` receives the types of the logical variables it introduces.
DerivationPtr elaborate_outline(const Program& p, const AtsSpec& spec, const LockEnv& gamma, TypeEnv& types);

}  // namespace refine
