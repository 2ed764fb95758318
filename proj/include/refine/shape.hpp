#pragma once

#include "refine/syntax.hpp"

#include <map>
#include <string>

namespace refine {

/// Normal form up to equivalences that hold in every model: alpha-renaming
/// and reordering of existential binders, prenexing through ** and &&,
/// associativity, commutativity and units of **, && and ||, pure conjuncts
/// floated out of separating parts, and trivially true pure atoms removed.
/// canon(a) is equivalent to a.
AssertionPtr canon(const AssertionPtr& a);

/// Equality of canonical forms; see canon.
bool same_shape(const AssertionPtr& a, const AssertionPtr& b);

/// Sound, incomplete entailment test: canonical equality, dropping
/// conjuncts, per-disjunct case analysis, and existential introduction with
/// witnesses read off matching points-to assertions.
bool syntactic_entails(const AssertionPtr& p, const AssertionPtr& q);

/// `e` with ghost reads replaced by the given cell contents.
ExprPtr subst_ghost_reads(const ExprPtr& e, const std::map<std::string, ExprPtr>& cells);

}  // namespace refine
