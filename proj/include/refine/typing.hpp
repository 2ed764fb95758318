#pragma once

#include "refine/syntax.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace refine {

class TypeCheckError : public std::runtime_error {
 public:
  TypeCheckError(const std::string& msg, SourcePos pos) : std::runtime_error(msg), pos(pos) {}
  SourcePos pos;
};

/// Monomorphic types of stack variables and ghost cells. Variables whose
/// type could not be determined are absent and default to int.
struct TypeEnv {
  std::map<std::string, Type> vars;
  std::map<std::string, Type> ghosts;

  Type var(const std::string& name) const;
};

TypeEnv ghost_env(const Program& p);

/// Infers stack-variable types for the whole program, including its
/// annotations. Throws TypeCheckError on a mismatch.
TypeEnv infer_program_types(const Program& p);

/// Infers types for the free variables of `as` (seeded by `seed`) and returns
/// copies whose quantifier binders carry their inferred type.
std::vector<AssertionPtr> annotate_assertions(const std::vector<AssertionPtr>& as, TypeEnv& env);
AssertionPtr annotate_assertion(const AssertionPtr& a, TypeEnv& env);

/// Copy of p whose loop, lock and init invariants carry typed binders.
Program annotate_program(const Program& p, const TypeEnv& types);

}  // namespace refine
