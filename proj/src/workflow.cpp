#include "refine/workflow.hpp"

#include "refine/lock_env.hpp"
#include "refine/parser.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace refine {

const std::vector<std::string>& audit_names() {
  static const std::vector<std::string> names = {"safety", "lockInvariants", "printBeforeInit", "erasure"};
  return names;
}

Domains proof_domains() {
  Domains d;
  d.int_lo = -1;
  d.int_hi = 3;
  d.addr_count = 2;
  d.max_seq_len = 2;
  return d;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LoadedProgram load_program(const std::string& text) {
  LoadedProgram lp;
  lp.program = parse_program(text);
  lp.types = infer_program_types(lp.program);
  lp.program = annotate_program(lp.program, lp.types);
  for (const auto& [g, t] : ghost_env(lp.program).ghosts) lp.types.ghosts[g] = t;
  return lp;
}

AtsSpec load_ats(const std::string& text, bool close_under_stutter) {
  AtsSpec spec = parse_ats(text);
  return close_under_stutter ? stutter_close(spec) : spec;
}

namespace {

AssertionPtr requires_of(const Program& p) { return p.requires_ ? p.requires_ : a_emp(); }
AssertionPtr ensures_of(const Program& p) { return p.ensures_ ? p.ensures_ : a_true(); }

ExploreOptions explore_options(const RunConfig& cfg) {
  ExploreOptions opt;
  opt.domains = cfg.domains;
  opt.semantics.addr_count = cfg.domains.addr_count;
  opt.max_steps = cfg.max_steps;
  opt.state_cap = cfg.state_cap;
  opt.workers = cfg.workers;
  return opt;
}

// Stack variables that matter for the initial configurations.
std::set<std::string> live_vars(const Program& p) {
  std::set<std::string> live = free_vars(requires_of(p));
  for (const auto& v : fv_env(declared_locks(p.body))) live.insert(v);
  return live;
}

struct Explored {
  InitialConfigs inits;
  ExecutionForest forest;
};

Explored run_explorer(const LoadedProgram& lp, const ExploreOptions& opt) {
  Explored e;
  e.inits = initial_configs(lp.program.body, requires_of(lp.program), {}, opt, lp.types);
  e.forest = explore(e.inits.configs, opt, live_vars(lp.program));
  return e;
}

void add_audits(Report& r, const Explored& e, const LoadedProgram& lp, const std::optional<AtsSpec>& ats,
                const RunConfig& cfg, const ExploreOptions& opt) {
  const auto& p = lp.program;
  if (cfg.audits.count("safety")) {
    for (auto& o : audit_safety(e.forest, ensures_of(p), cfg.domains, lp.types)) r.obligations.push_back(o);
  }
  if (cfg.audits.count("lockInvariants")) {
    r.obligations.push_back(audit_lock_invariants(e.forest, declared_locks(p.body), cfg.domains,
                                                  ats ? &*ats : nullptr, lp.types));
  }
  if (cfg.audits.count("printBeforeInit")) r.obligations.push_back(audit_print_before_init(e.forest));
  if (cfg.audits.count("erasure")) {
    r.obligations.push_back(audit_erasure(p, e.inits.configs, opt, live_vars(p)));
  }
}

Report base_report(const std::string& command, const Explored& e) {
  Report r;
  r.command = command;
  r.warnings = e.inits.warnings;
  if (e.inits.configs.empty()) r.warnings.push_back("the precondition has no model within the domains");
  r.statistics = e.forest.stats_json();
  r.statistics["initialConfigs"] = e.inits.configs.size();
  return r;
}

}  // namespace

Report explore_program(const LoadedProgram& lp, const std::optional<AtsSpec>& ats, const RunConfig& cfg) {
  auto opt = explore_options(cfg);
  auto e = run_explorer(lp, opt);
  Report r = base_report("explore", e);
  add_audits(r, e, lp, ats, cfg, opt);
  return r;
}

Report check_refinement(const LoadedProgram& lp, const AtsSpec& ats, const RunConfig& cfg) {
  auto opt = explore_options(cfg);
  auto e = run_explorer(lp, opt);
  Report r = base_report("check-refinement", e);
  Obligation succ = check_refsucc(e.forest, ats, cfg.domains);
  Obligation traces = check_trace_inclusion(e.forest, ats, cfg.max_trace_len, cfg.domains);
  Obligation cross;
  cross.name = "refsuccImpliesTraceInclusion";
  if (succ.outcome != Outcome::Pass) {
    cross.detail = "vacuous: refsucc did not pass";
  } else if (traces.outcome == Outcome::Pass) {
    cross.detail = "both passed";
  } else {
    cross.outcome = traces.outcome;
    cross.reason = traces.outcome == Outcome::Fail ? "CrossCheckFailed" : traces.reason;
    cross.detail = "refsucc passed but trace inclusion did not";
    cross.counterexample = traces.counterexample;
  }
  r.obligations.push_back(std::move(succ));
  r.obligations.push_back(std::move(traces));
  r.obligations.push_back(std::move(cross));
  add_audits(r, e, lp, ats, cfg, opt);
  return r;
}

nlohmann::json RunTranscript::to_json() const {
  return {{"schema", "refine-run/1"},
          {"status", status},
          {"steps", steps},
          {"final", final_config},
          {"stdOut", std_out ? nlohmann::json(std_out->to_string()) : nlohmann::json()}};
}

std::string RunTranscript::to_text() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < steps.size(); ++i) out << i + 1 << ": " << steps[i]["label"].get<std::string>() << "\n";
  out << "status: " << status << "\n";
  if (std_out) out << "stdOut: " << std_out->to_string() << "\n";
  return out.str();
}

RunTranscript run_program(const LoadedProgram& lp, const RunConfig& cfg, bool first) {
  auto opt = explore_options(cfg);
  auto inits = initial_configs(lp.program.body, requires_of(lp.program), {}, opt, lp.types);
  RunTranscript t;
  if (inits.configs.empty()) {
    t.status = "stuck";
    return t;
  }
  std::mt19937_64 rng(cfg.seed);
  auto pick = [&](std::size_t n) -> std::size_t {
    if (first || n == 1) return 0;
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  Config c = inits.configs[pick(inits.configs.size())];
  t.status = "bound";
  for (int i = 0; i < cfg.max_steps; ++i) {
    if (c.abort) {
      t.status = "aborted";
      break;
    }
    if (c.cmd->kind == CmdKind::Skip) {
      t.status = "terminated";
      break;
    }
    auto next = step(c, opt.semantics);
    if (next.empty()) {
      t.status = "stuck";
      break;
    }
    Step& s = next[pick(next.size())];
    t.steps.push_back({{"label", s.label.to_string()}, {"config", config_to_json(s.next)}});
    c = std::move(s.next);
  }
  if (t.status == "bound") {
    if (c.abort) t.status = "aborted";
    else if (c.cmd->kind == CmdKind::Skip) t.status = "terminated";
  }
  t.final_config = config_to_json(c);
  if (!c.abort) {
    if (const Cell* out = c.heap.find(Address::ghost_named(kStdOut))) t.std_out = out->value;
  }
  return t;
}

CheckResult check_proof_file(const DerivationFile& f, const std::optional<AtsSpec>& ats,
                             const std::optional<Domains>& domains, const LoadedProgram* program, int workers) {
  ProofContext ctx;
  ctx.domains = domains ? *domains : f.domains;
  ctx.types = f.types;
  ctx.ats = ats;
  ctx.workers = workers;
  if (program) {
    const auto& p = program->program;
    const Derivation& root = *f.root;
    std::string mismatch;
    if (!command_equal(root.cmd, p.body)) mismatch = "the root command is not the program body";
    else if (!same_shape(root.pre, requires_of(p))) mismatch = "the root precondition is not the program's";
    else if (!same_shape(root.post, ensures_of(p))) mismatch = "the root postcondition is not the program's";
    else if (!root.env.empty()) mismatch = "the root lock environment is not empty";
    if (!mismatch.empty()) {
      CheckResult r;
      r.accepted = false;
      r.rule = root.rule;
      r.reason = ProofReason::RuleShapeMismatch;
      r.detail = mismatch;
      r.nodes = root.size();
      return r;
    }
  }
  return check_derivation(*f.root, ctx);
}

DerivationFile elaborate_program(const LoadedProgram& lp, const AtsSpec& ats, const Domains& domains) {
  DerivationFile f;
  f.ghosts = lp.program.ghosts;
  f.domains = domains;
  f.types = lp.types;
  f.root = elaborate_outline(lp.program, ats, {}, f.types);
  return f;
}

}  // namespace refine
