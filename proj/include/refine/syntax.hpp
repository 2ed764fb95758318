#pragma once

#include "refine/value.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace refine {

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class ExprKind { Const, Var, Ghost, SeqLit, Unary, Binary };

enum class Op {
  Neg, Not, Len,
  Add, Sub, Mul,
  Eq, Ne, Lt, Le, Gt, Ge,
  And, Or, Implies,
  Append, Concat, Index,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// In program code a Ghost node reads the ghost cell's contents; in
/// assertions it denotes the ghost address itself.
struct Expr {
  ExprKind kind = ExprKind::Const;
  Value value;
  std::string name;
  Op op = Op::Add;
  std::vector<ExprPtr> args;
};

ExprPtr e_const(Value v);
ExprPtr e_int(std::int64_t v);
ExprPtr e_bool(bool v);
ExprPtr e_var(std::string name);
ExprPtr e_ghost(std::string name);
ExprPtr e_seq(std::vector<ExprPtr> items);
ExprPtr e_unary(Op op, ExprPtr a);
ExprPtr e_binary(Op op, ExprPtr a, ExprPtr b);

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
std::size_t expr_hash(const ExprPtr& e);
std::string expr_to_string(const ExprPtr& e);

std::set<std::string> expr_vars(const ExprPtr& e);
std::set<std::string> expr_ghosts(const ExprPtr& e);
ExprPtr expr_subst(const ExprPtr& e, const std::string& var, const ExprPtr& by);
ExprPtr expr_rename(const ExprPtr& e, const std::map<std::string, std::string>& ren);

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------

enum class AKind { Pure, And, Not, Forall, Exists, Emp, PointsTo, Sep, Wand, IterSep };

struct Assertion;
using AssertionPtr = std::shared_ptr<const Assertion>;

struct Assertion {
  AKind kind = AKind::Emp;
  ExprPtr expr;  // Pure
  ExprPtr addr;  // PointsTo
  ExprPtr val;   // PointsTo
  Perm perm{1};  // PointsTo
  std::string var;                   // quantifiers
  Type var_type = Type::Unknown;     // optional binder annotation
  std::vector<AssertionPtr> parts;   // And/Sep/Wand: 2, Not/quantifiers: 1, IterSep: n
};

AssertionPtr a_pure(ExprPtr e);
AssertionPtr a_true();
AssertionPtr a_false();
AssertionPtr a_emp();
AssertionPtr a_pts(ExprPtr addr, Perm perm, ExprPtr val);
AssertionPtr a_and(AssertionPtr a, AssertionPtr b);
AssertionPtr a_not(AssertionPtr a);
AssertionPtr a_or(AssertionPtr a, AssertionPtr b);
AssertionPtr a_implies(AssertionPtr a, AssertionPtr b);
AssertionPtr a_forall(std::string var, AssertionPtr body, Type t = Type::Unknown);
AssertionPtr a_exists(std::string var, AssertionPtr body, Type t = Type::Unknown);
AssertionPtr a_sep(AssertionPtr a, AssertionPtr b);
AssertionPtr a_wand(AssertionPtr a, AssertionPtr b);
AssertionPtr a_iter_sep(std::vector<AssertionPtr> parts);
/// E |->p E' ** true
AssertionPtr a_apt(ExprPtr addr, Perm perm, ExprPtr val);
/// exists y. E |->p y ** true, y chosen fresh w.r.t. E
AssertionPtr a_acc(ExprPtr addr, Perm perm);
AssertionPtr a_and_all(const std::vector<AssertionPtr>& parts);
AssertionPtr a_sep_all(const std::vector<AssertionPtr>& parts);

/// Recognizes the or/implies encodings produced by a_or/a_implies.
bool match_or(const AssertionPtr& a, AssertionPtr* l, AssertionPtr* r);
bool match_implies(const AssertionPtr& a, AssertionPtr* l, AssertionPtr* r);

bool assertion_equal(const AssertionPtr& a, const AssertionPtr& b);
/// Equality up to renaming of bound variables and lifting of boolean
/// connectives out of pure atoms.
bool alpha_equal(const AssertionPtr& a, const AssertionPtr& b);
std::string assertion_to_string(const AssertionPtr& a);

std::set<std::string> free_vars(const AssertionPtr& a);
std::set<std::string> all_vars(const AssertionPtr& a);
std::set<std::string> assertion_ghosts(const AssertionPtr& a);
std::set<Perm> assertion_perms(const AssertionPtr& a);
/// True when the assertion is in the heap-independent first-order fragment.
bool is_fol(const AssertionPtr& a);
/// Capture-avoiding substitution of `by` for free occurrences of `var`.
AssertionPtr substitute(const AssertionPtr& a, const std::string& var, const ExprPtr& by);
AssertionPtr substitute_all(const AssertionPtr& a, const std::map<std::string, ExprPtr>& subst);
/// Pure atoms whose expression is a boolean connective get split into
/// assertion-level connectives.
AssertionPtr lift_pure(const AssertionPtr& a);

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

enum class CmdKind {
  Skip, Assign, Write, Read, Free, Alloc,
  Seq, Ite, While, Par, LockDecl, With, Within,
  Print, Init, Next, GhostAssign,
};

const char* cmd_kind_name(CmdKind k);

struct Command;
using CommandPtr = std::shared_ptr<const Command>;

struct SourcePos {
  int line = 0;
  int col = 0;
};

struct Command {
  CmdKind kind = CmdKind::Skip;
  std::string name;  // assigned variable / lock id / ghost target
  ExprPtr e1;        // expression operand (rhs, address, guard, printed value)
  ExprPtr e2;        // written value for Write
  CommandPtr c1;
  CommandPtr c2;
  AssertionPtr inv;  // loop / lock / ghost-lock invariant annotation
  SourcePos pos;
  std::size_t hash = 0;
};

inline const std::string kGhostLock = "@G";
inline const std::string kInitToken = "@I";

CommandPtr c_skip();
CommandPtr c_assign(std::string x, ExprPtr e);
CommandPtr c_write(ExprPtr addr, ExprPtr val);
CommandPtr c_read(std::string x, ExprPtr addr);
CommandPtr c_free(ExprPtr addr);
CommandPtr c_alloc(std::string x, ExprPtr e);
CommandPtr c_seq(CommandPtr a, CommandPtr b);
CommandPtr c_ite(ExprPtr cond, CommandPtr a, CommandPtr b);
CommandPtr c_while(ExprPtr cond, CommandPtr body, AssertionPtr inv = nullptr);
CommandPtr c_par(CommandPtr a, CommandPtr b);
CommandPtr c_lock(std::string lock, CommandPtr body, AssertionPtr inv = nullptr);
CommandPtr c_with(std::string lock, ExprPtr cond, CommandPtr body);
CommandPtr c_within(std::string lock, CommandPtr body);
CommandPtr c_print(ExprPtr e);
CommandPtr c_init(CommandPtr body, AssertionPtr inv = nullptr);
CommandPtr c_next(CommandPtr body);
CommandPtr c_ghost_assign(std::string ghost, ExprPtr e);
CommandPtr with_pos(CommandPtr c, SourcePos pos);

/// Structural equality. Annotations are ignored unless `with_annotations`.
bool command_equal(const CommandPtr& a, const CommandPtr& b, bool with_annotations = false);
std::string command_to_string(const CommandPtr& c, int indent = 0);

struct CommandHash {
  std::size_t operator()(const CommandPtr& c) const { return c->hash; }
};
struct CommandEq {
  bool operator()(const CommandPtr& a, const CommandPtr& b) const { return command_equal(a, b); }
};

/// Variables read or written by the command (FV(C)).
std::set<std::string> command_vars(const CommandPtr& c);
/// Variables on the left-hand side of assignments, reads and allocations.
std::set<std::string> mod_set(const CommandPtr& c);
std::set<std::string> command_ghosts(const CommandPtr& c);
/// True if some sub-command (including c) satisfies pred.
template <typename Pred>
bool command_any(const CommandPtr& c, Pred pred) {
  if (!c) return false;
  if (pred(*c)) return true;
  return command_any(c->c1, pred) || command_any(c->c2, pred);
}

// ---------------------------------------------------------------------------
// Programs and ATS specifications
// ---------------------------------------------------------------------------

struct GhostDecl {
  std::string name;
  Type type = Type::Int;
};

struct Program {
  std::vector<GhostDecl> ghosts;  // always starts with stdOut
  AssertionPtr requires_;         // may be null
  AssertionPtr ensures_;          // may be null
  CommandPtr body;
  std::vector<std::string> warnings;

  bool is_ghost(const std::string& name) const;
  Type ghost_type(const std::string& name) const;
};

struct AtsSpec {
  std::vector<std::string> vars;
  std::vector<Type> types;
  AssertionPtr init;
  AssertionPtr next;
  std::map<std::string, std::string> ghost_addr;  // var -> ghost address name

  std::size_t k() const { return vars.size(); }
  const std::string& observable() const { return vars.front(); }
};

std::string program_to_string(const Program& p);
std::string ats_to_string(const AtsSpec& a);

}  // namespace refine
