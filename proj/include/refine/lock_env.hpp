#pragma once

#include "refine/syntax.hpp"

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace refine {

/// Ordered lock bindings; the latest binding of a lock wins.
using LockEnv = std::vector<std::pair<std::string, AssertionPtr>>;

/// Gamma(L), or emp when L is unbound.
AssertionPtr lock_invariant(const LockEnv& env, const std::string& lock);
bool lock_bound(const LockEnv& env, const std::string& lock);
LockEnv extend(LockEnv env, const std::string& lock, AssertionPtr inv);

/// Union of the free variables of all bound invariants.
std::set<std::string> fv_env(const LockEnv& env);

/// Invariants of the lock declarations in c, and the init block's invariant
/// bound to the ghost lock. Missing annotations are emp.
LockEnv declared_locks(const CommandPtr& c);

}  // namespace refine
