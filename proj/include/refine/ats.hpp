#pragma once

#include "refine/assertion.hpp"
#include "refine/syntax.hpp"
#include "refine/typing.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <vector>

namespace refine {

/// Values of the ATS variables, in declaration order.
using AtsState = std::vector<Value>;
/// Sequence of observable (x1) projections.
using Trace = std::vector<Value>;

/// Types of the ATS variables and their primed copies.
TypeEnv ats_type_env(const AtsSpec& spec);

/// Next becomes Next || (x1' == x1 && ... && xk' == xk).
AtsSpec stutter_close(const AtsSpec& spec);

bool is_initial(const AtsState& s, const AtsSpec& spec, const Domains& d);
bool is_transition(const AtsState& from, const AtsState& to, const AtsSpec& spec, const Domains& d);

/// Initial states whose unconstrained components range over d. Sorted.
std::vector<AtsState> initial_states(const AtsSpec& spec, const Domains& d);

/// Successors of `from`. Components fixed by an equation are computed, so a
/// successor may lie outside the integer range of d. Sorted.
std::vector<AtsState> successors(const AtsState& from, const AtsSpec& spec, const Domains& d);

/// All observable traces of paths with at most max_len states, including the
/// empty trace. Throws BudgetExceeded beyond `cap` (state, trace) pairs.
std::set<Trace> enumerate_traces(const AtsSpec& spec, int max_len, const Domains& d, std::size_t cap = 1'000'000);

nlohmann::json traces_to_json(const std::set<Trace>& traces);
std::string trace_to_string(const Trace& t);

struct Assumption1Result {
  Verdict verdict;
  std::optional<Perm> rho;
};

/// Smallest candidate fraction rho with ghost_inv |= acc(x1^, rho) ** ... ** acc(xk^, rho).
/// Candidates are the fractions occurring in ghost_inv, plus 1.
Assumption1Result check_assumption1(const AssertionPtr& ghost_inv, const AtsSpec& spec, const Domains& d,
                                    const TypeEnv& types = {});

/// Ghost-address expression for the i-th ATS variable.
ExprPtr ats_ghost(const AtsSpec& spec, std::size_t i);

}  // namespace refine
