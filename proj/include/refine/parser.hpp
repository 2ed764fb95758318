#pragma once

#include "refine/syntax.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace refine {

/// Error codes: SyntaxError, UnknownIdentifier, InternalFormInSource,
/// RepeatedVar, PrimedInInit, NonFOLFormula, TypeError.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string code, const std::string& msg, int line, int col);
  std::string code;
  int line;
  int col;
};

Program parse_program(const std::string& text);
AtsSpec parse_ats(const std::string& text);

struct ParseContext {
  std::set<std::string> ghosts;
  /// Lock ids usable in `with` without an enclosing `lock` declaration.
  bool allow_free_locks = false;
};

AssertionPtr parse_assertion(const std::string& text, const ParseContext& ctx = {});
ExprPtr parse_expr(const std::string& text, const ParseContext& ctx = {});
CommandPtr parse_command(const std::string& text, const ParseContext& ctx = {});

ParseContext program_context(const Program& p);

struct InitShape {
  bool ok = false;
  /// True when the command contains no Init block at all (vacuous case).
  bool no_init = false;
};

/// C1 ; init{C2} with no Init inside C1, or no Init anywhere.
InitShape check_continuously_initialized(const CommandPtr& c);

}  // namespace refine
