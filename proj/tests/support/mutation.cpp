#include "mutation.hpp"

#include "refine/workflow.hpp"

#include <functional>
#include <stdexcept>

namespace refine::testing {

namespace {

const ParseContext& hand_ctx() {
  static const ParseContext ctx{{kStdOut, "count"}, true};
  return ctx;
}

AssertionPtr A(const std::string& s) { return parse_assertion(s, hand_ctx()); }
CommandPtr C(const std::string& s) { return parse_command(s, hand_ctx()); }

DerivationPtr node(std::string rule, const std::string& pre, const CommandPtr& cmd, const std::string& post,
                   std::vector<DerivationPtr> kids = {}, LockEnv env = {}) {
  auto d = std::make_shared<Derivation>();
  d->rule = std::move(rule);
  d->pre = A(pre);
  d->cmd = cmd;
  d->post = A(post);
  d->children = std::move(kids);
  d->env = std::move(env);
  return d;
}

DerivationPtr copy(const DerivationPtr& d) { return std::make_shared<Derivation>(*d); }

DerivationPtr find_rule(const DerivationPtr& d, const std::string& rule) {
  if (d->rule == rule) return d;
  for (const auto& k : d->children) {
    if (auto r = find_rule(k, rule)) return r;
  }
  return nullptr;
}

LockEnv without_lock(const LockEnv& env, const std::string& lock) {
  LockEnv out;
  for (const auto& b : env) {
    if (b.first != lock) out.push_back(b);
  }
  return out;
}

struct Source {
  DerivationFile file;
  ProofContext ctx;
};

Source load_fixture(const std::string& dir, const std::string& name, const AtsSpec& ats) {
  Source s;
  s.file = rderiv_from_json(nlohmann::json::parse(read_file(dir + "/" + name + ".rderiv")));
  s.ctx.domains = s.file.domains;
  s.ctx.types = s.file.types;
  s.ctx.ats = ats;
  return s;
}

ProofContext hand_context() {
  ProofContext ctx;
  ctx.domains = proof_domains();
  ctx.types.vars = {{"p", Type::Addr}, {"x", Type::Int}, {"y", Type::Int}, {"v", Type::Int}};
  return ctx;
}

}  // namespace

MutationSuite build_mutation_suite(const std::string& dir) {
  MutationSuite s;
  AtsSpec ats = load_ats(read_file(dir + "/counter.rats"));
  Source alt = load_fixture(dir, "alternating", ats);
  Source loop = load_fixture(dir, "print_loop", ats);
  ProofContext hand = hand_context();

  s.bases.push_back({"Seq", "fixture", ProofReason::None, alt.file.root, alt.ctx});
  s.bases.push_back({"Seq", "fixture", ProofReason::None, loop.file.root, loop.ctx});

  // Mutate a copy of the first `rule` node of `src`.
  auto from = [&](const Source& src, const std::string& rule, const std::string& cond, ProofReason want,
                  const std::function<void(Derivation&)>& edit) {
    auto base = find_rule(src.file.root, rule);
    if (!base) throw std::logic_error("fixture lacks a " + rule + " node");
    auto m = copy(base);
    edit(*m);
    s.mutants.push_back({rule, cond, want, m, src.ctx});
  };
  auto hand_base = [&](const DerivationPtr& d) { s.bases.push_back({d->rule, "hand", ProofReason::None, d, hand}); };
  auto hand_mut = [&](const DerivationPtr& d, const std::string& cond, ProofReason want,
                      const std::function<void(Derivation&)>& edit) {
    auto m = copy(d);
    edit(*m);
    s.mutants.push_back({m->rule, cond, want, m, hand});
  };
  const auto shape = ProofReason::RuleShapeMismatch;
  const auto side = ProofReason::SideConditionViolation;
  const auto ghost = ProofReason::GhostLockMisuse;

  from(alt, "Skip", "post equals pre", shape, [](Derivation& d) { d.post = a_false(); });
  from(alt, "Skip", "command is skip", shape, [](Derivation& d) { d.cmd = c_assign("zz", e_int(0)); });

  from(loop, "Assign", "pre is Q[E/x]", shape, [](Derivation& d) { d.pre = A("x == 0"); });
  from(loop, "Assign", "x not in FV(Gamma)", side,
       [](Derivation& d) { d.env = extend(d.env, "L", a_pts(e_var("p"), Perm(1), e_var(d.cmd->name))); });

  from(alt, "Write", "pre is exists y. E |-> y", shape,
       [](Derivation& d) { d.pre = a_exists("y", a_pts(d.cmd->e1, Perm(1, 2), e_var("y"))); });
  from(alt, "Write", "post is E |-> E'", shape, [](Derivation& d) { d.post = a_pts(d.cmd->e1, Perm(1), e_int(42)); });

  from(alt, "Read", "x not in FV(Gamma)", side,
       [](Derivation& d) { d.env = extend(d.env, "L2", a_pts(e_var("p"), Perm(1), e_var(d.cmd->name))); });
  from(alt, "Read", "pre is a points-to on E", shape, [](Derivation& d) { d.pre = a_emp(); });
  auto read = node("Read", "p |-> 3", C("x := [p]"), "p |-> 3 && x == 3");
  hand_base(read);
  hand_mut(read, "x not in FV(E')", side, [](Derivation& d) {
    d.pre = A("p |-> x");
    d.post = A("p |-> x && x == x");
  });
  hand_mut(read, "x not in FV(E)", side, [](Derivation& d) {
    d.cmd = C("x := [x]");
    d.pre = A("x |-> 3");
    d.post = A("x |-> 3 && x == 3");
  });

  from(alt, "Alloc", "x not in FV(Gamma)", side,
       [](Derivation& d) { d.env = extend(d.env, "L2", a_pure(e_binary(Op::Eq, e_var(d.cmd->name), e_int(0)))); });
  from(alt, "Alloc", "pre is emp", shape, [](Derivation& d) { d.pre = a_true(); });
  auto alloc = node("Alloc", "emp", C("new(x, 1)"), "x |-> 1");
  hand_base(alloc);
  hand_mut(alloc, "x not in FV(E)", side, [](Derivation& d) {
    d.cmd = C("new(x, x + 1)");
    d.post = A("x |-> x + 1");
  });

  auto free_ = node("Free", "exists y. p |-> y", C("free(p)"), "emp");
  hand_base(free_);
  hand_mut(free_, "E not a ghost address", side, [](Derivation& d) {
    d.cmd = c_free(e_ghost("count"));
    d.pre = A("exists y. count |-> y");
  });
  hand_mut(free_, "pre is exists y. E |-> y", shape, [](Derivation& d) { d.pre = A("exists y. p |->[1/2] y"); });

  from(loop, "Seq", "intermediate assertion", shape, [](Derivation& d) {
    auto k = copy(d.children[1]);
    k->pre = a_false();
    d.children[1] = k;
  });
  from(loop, "Seq", "premise environment", shape, [](Derivation& d) {
    auto k = copy(d.children[0]);
    k->env = extend(k->env, "L9", a_emp());
    d.children[0] = k;
  });

  from(alt, "Cond", "then premise assumes the guard", shape, [](Derivation& d) {
    auto k = copy(d.children[0]);
    k->pre = d.pre;
    d.children[0] = k;
  });
  from(alt, "Cond", "else premise assumes the negated guard", shape, [](Derivation& d) {
    auto k = copy(d.children[1]);
    k->pre = d.pre;
    d.children[1] = k;
  });

  from(loop, "While", "post is P && !E", shape, [](Derivation& d) { d.post = d.pre; });
  from(loop, "While", "body preserves P", shape, [](Derivation& d) {
    auto k = copy(d.children[0]);
    k->post = a_false();
    d.children[0] = k;
  });

  from(alt, "Par", "right premise starts from P2", shape, [](Derivation& d) {
    auto k = copy(d.children[1]);
    k->pre = d.children[0]->pre;
    d.children[1] = k;
  });
  auto par = node("Par", "(1 == 1) ** (1 == 1)", C("par { x := 1 } { y := 1 }"), "x == 1 ** y == 1",
                  {node("Assign", "1 == 1", C("x := 1"), "x == 1"), node("Assign", "1 == 1", C("y := 1"), "y == 1")});
  hand_base(par);
  hand_mut(par, "FV(P2, C2, Q2) disjoint from Mod(C1)", side, [](Derivation& d) {
    d.children[1] = node("Assign", "x == 1 && 1 == 1", C("y := 1"), "x == 1 && y == 1");
    d.pre = A("(1 == 1) ** (x == 1 && 1 == 1)");
    d.post = A("x == 1 ** (x == 1 && y == 1)");
  });
  hand_mut(par, "FV(P1, C1, Q1) disjoint from Mod(C2)", side, [](Derivation& d) {
    d.children[0] = node("Assign", "1 == 1 && y == 0", C("x := 1"), "x == 1 && y == 0");
    d.pre = A("(1 == 1 && y == 0) ** (1 == 1)");
    d.post = A("(x == 1 && y == 0) ** y == 1");
  });

  from(alt, "Lock", "the ghost lock is not declared by Lock", ghost,
       [](Derivation& d) { d.cmd = c_lock(kGhostLock, d.cmd->c1, d.cmd->inv); });
  from(alt, "Lock", "premise binds the lock", shape, [](Derivation& d) {
    auto k = copy(d.children[0]);
    k->env = d.env;
    d.children[0] = k;
  });

  from(alt, "With", "lock is in Gamma", shape, [](Derivation& d) { d.env = without_lock(d.env, d.cmd->name); });
  from(alt, "With", "the ghost lock is not acquired by With", ghost,
       [](Derivation& d) { d.cmd = c_with(kGhostLock, d.cmd->e1, d.cmd->c1); });
  from(alt, "With", "premise owns the invariant", shape, [](Derivation& d) {
    auto k = copy(d.children[0]);
    k->pre = a_and(d.pre, a_pure(d.cmd->e1));
    d.children[0] = k;
  });

  from(loop, "Frame", "frame witness present", shape, [](Derivation& d) { d.frame = nullptr; });
  auto frame = node("Frame", "(1 == 1) ** p |-> 0", C("x := 1"), "x == 1 ** p |-> 0",
                    {node("Assign", "1 == 1", C("x := 1"), "x == 1")});
  frame->frame = A("p |-> 0");
  hand_base(frame);
  hand_mut(frame, "FV(R) disjoint from Mod(C)", side, [](Derivation& d) {
    d.frame = A("x == 0");
    d.pre = A("(1 == 1) ** x == 0");
    d.post = A("x == 1 ** x == 0");
  });

  from(loop, "Cons", "P' |= P", ProofReason::EntailmentFailed, [](Derivation& d) { d.pre = a_true(); });
  auto cons = node("Cons", "x > 1", C("skip"), "x > 0", {node("Skip", "x > 0", C("skip"), "x > 0")});
  hand_base(cons);
  {
    auto m = copy(cons);
    ProofContext tight = hand;
    tight.domains.budget = 1;
    s.mutants.push_back({"Cons", "bounded entailment budget", ProofReason::EntailmentInconclusive, m, tight});
  }

  from(loop, "Ex", "quantified variable given", shape, [](Derivation& d) { d.var.clear(); });
  from(loop, "Ex", "x not in FV(Gamma)", side, [](Derivation& d) {
    d.env = extend(d.env, "L2", a_pure(e_binary(Op::Eq, e_var(d.var), e_int(0))));
    auto k = copy(d.children[0]);
    k->env = d.env;
    d.children[0] = k;
  });
  auto ex = node("Ex", "exists v. v == v", C("x := v"), "exists v. x == v", {node("Assign", "v == v", C("x := v"), "x == v")});
  ex->var = "v";
  hand_mut(ex, "x not in FV(C)", side, [](Derivation&) {});

  LockEnv precise{{"L", A("p |-> 0")}};
  auto conj = node("Conj", "x == 0 && y == 0", C("skip"), "x == 0 && y == 0",
                   {node("Skip", "x == 0", C("skip"), "x == 0", {}, precise),
                    node("Skip", "y == 0", C("skip"), "y == 0", {}, precise)},
                   precise);
  hand_base(conj);
  hand_mut(conj, "lock invariants are precise", ProofReason::PrecisionViolation, [](Derivation& d) {
    LockEnv loose{{"L", a_true()}};
    d.env = loose;
    for (auto& k : d.children) {
      k = copy(k);
      k->env = loose;
    }
  });
  hand_mut(conj, "pre is P1 && P2", shape, [](Derivation& d) { d.pre = A("x == 0"); });

  auto disj = node("Disj", "x == 0 || y == 0", C("skip"), "x == 0 || y == 0",
                   {node("Skip", "x == 0", C("skip"), "x == 0"), node("Skip", "y == 0", C("skip"), "y == 0")});
  hand_base(disj);
  hand_mut(disj, "pre is P1 || P2", shape, [](Derivation& d) { d.pre = A("x == 0 && y == 0"); });

  from(loop, "Init", "not inside an initialized region", ghost,
       [](Derivation& d) { d.env = extend(d.env, kGhostLock, a_emp()); });
  from(loop, "Init", "invariant owns every ATS variable", side,
       [](Derivation& d) { d.cmd = c_init(d.cmd->c1, A("exists s. stdOut |-> s")); });
  from(loop, "Init", "premise holds G and I", shape, [](Derivation& d) {
    auto k = copy(d.children[0]);
    k->env = without_lock(k->env, kInitToken);
    d.children[0] = k;
  });
  {
    auto m = copy(find_rule(loop.file.root, "Init"));
    ProofContext no_ats = loop.ctx;
    no_ats.ats.reset();
    s.mutants.push_back({"Init", "an ATS is given", shape, m, no_ats});
  }

  from(loop, "Next", "body is atomic", ProofReason::AtomicityViolation,
       [](Derivation& d) { d.cmd = c_next(c_seq(d.cmd->c1, c_while(e_bool(false), c_skip()))); });
  from(loop, "Next", "G in Gamma", ghost, [](Derivation& d) { d.env = without_lock(d.env, kGhostLock); });
  from(loop, "Next", "o fresh for the node", side, [](Derivation& d) { d.fresh = {"x", "o2"}; });
  from(loop, "Next", "fresh names distinct", side, [](Derivation& d) { d.fresh = {"o1", "o1"}; });
  from(loop, "Next", "one fresh name per ATS variable", shape, [](Derivation& d) { d.fresh = {"o1"}; });
  from(loop, "Next", "premise precondition", shape, [](Derivation& d) {
    auto k = copy(d.children[0]);
    k->pre = a_true();
    d.children[0] = k;
  });

  from(loop, "Print", "I in Gamma", ghost, [](Derivation& d) { d.env = without_lock(d.env, kInitToken); });
  from(loop, "Print", "pre is stdOut |-> E'", shape,
       [](Derivation& d) { d.pre = a_pts(e_ghost(kStdOut), Perm(1, 2), d.pre->val); });

  from(loop, "GhostAssign", "ghosts read by E are owned", side,
       [](Derivation& d) { d.cmd = c_ghost_assign(d.cmd->name, e_ghost("lastOdd")); });
  from(loop, "GhostAssign", "target held with permission 1", shape, [](Derivation& d) {
    d.pre = a_pts(e_ghost(d.cmd->name), Perm(1, 2), d.pre->val);
  });
  return s;
}

std::vector<MutantOutcome> run_mutants(const std::vector<Mutant>& ms) {
  std::vector<MutantOutcome> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back({m, check_derivation(*m.tree, m.ctx)});
  return out;
}

}  // namespace refine::testing
