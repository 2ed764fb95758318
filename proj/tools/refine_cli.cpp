// Command-line front end. Exit codes: 0 pass or accepted, 1 fail or
// rejected, 2 inconclusive, 3 usage or input error.

#include "refine/parser.hpp"
#include "refine/workflow.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace refine;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kInconclusive = 2;
constexpr int kUsage = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string program;
  std::string ats;
  std::string derivation;
  std::string out;
  std::string int_range;
  int addr_count = -1;
  int max_seq_len = -1;
  int max_steps = 64;
  int max_trace_len = 6;
  int max_len = -1;
  std::uint64_t seed = 0;
  std::string format = "text";
  bool no_stutter_close = false;
  std::string audits = "all";
  unsigned workers = 1;
  std::string scheduler = "random";
  bool check = false;
};

int outcome_code(Outcome o) {
  switch (o) {
    case Outcome::Pass: return kPass;
    case Outcome::Fail: return kFail;
    case Outcome::Inconclusive: return kInconclusive;
  }
  return kFail;
}

bool domains_overridden(const Flags& f) { return !f.int_range.empty() || f.addr_count >= 0 || f.max_seq_len >= 0; }

Domains domains_from(const Flags& f, Domains base) {
  if (!f.int_range.empty()) {
    auto dots = f.int_range.find("..");
    if (dots == std::string::npos) throw UsageError("--int-range expects LO..HI");
    try {
      std::size_t used = 0;
      std::string lo = f.int_range.substr(0, dots), hi = f.int_range.substr(dots + 2);
      base.int_lo = std::stoll(lo, &used);
      if (used != lo.size()) throw UsageError("--int-range expects LO..HI");
      base.int_hi = std::stoll(hi, &used);
      if (used != hi.size()) throw UsageError("--int-range expects LO..HI");
    } catch (const std::logic_error&) {
      throw UsageError("--int-range expects LO..HI");
    }
    if (base.int_lo > base.int_hi) throw UsageError("--int-range is empty");
  }
  if (f.addr_count >= 0) base.addr_count = f.addr_count;
  if (f.max_seq_len >= 0) base.max_seq_len = f.max_seq_len;
  return base;
}

std::set<std::string> audits_from(const std::string& spec) {
  if (spec == "all") return {audit_names().begin(), audit_names().end()};
  if (spec == "none") return {};
  std::set<std::string> out;
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (std::find(audit_names().begin(), audit_names().end(), name) == audit_names().end()) {
      throw UsageError("unknown audit " + name);
    }
    out.insert(name);
  }
  return out;
}

RunConfig config_from(const Flags& f) {
  if (f.max_steps < 0 || f.max_trace_len < 0) throw UsageError("bounds must be non-negative");
  RunConfig cfg;
  cfg.domains = domains_from(f, Domains());
  cfg.max_steps = f.max_steps;
  cfg.max_trace_len = f.max_trace_len;
  cfg.seed = f.seed;
  cfg.stutter_close = !f.no_stutter_close;
  cfg.audits = audits_from(f.audits);
  cfg.workers = std::max(1u, f.workers);
  if (const char* cap = std::getenv("REFINE_STATE_CAP")) {
    try {
      cfg.state_cap = std::stoull(cap);
    } catch (const std::logic_error&) {
      throw UsageError("REFINE_STATE_CAP must be a number");
    }
  }
  return cfg;
}

const std::string& need(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  return path;
}

LoadedProgram program_of(const Flags& f) { return load_program(read_file(need(f.program, "--program"))); }
AtsSpec ats_of(const Flags& f) { return load_ats(read_file(need(f.ats, "--ats")), !f.no_stutter_close); }

void emit(const Flags& f, const nlohmann::json& j, const std::string& text) {
  if (f.format == "json") std::cout << j.dump(2) << "\n";
  else std::cout << text;
}

void print_derivation(std::ostream& out, const Derivation& d, int depth) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << d.rule << ": {" << assertion_to_string(d.pre)
      << "} " << command_to_string(d.cmd) << " {" << assertion_to_string(d.post) << "}\n";
  for (const auto& c : d.children) print_derivation(out, *c, depth + 1);
}

int cmd_parse(const Flags& f) {
  if (f.program.empty() && f.ats.empty() && f.derivation.empty()) {
    throw UsageError("parse needs --program, --ats or --derivation");
  }
  nlohmann::json j = {{"schema", "refine-parse/1"}};
  std::ostringstream text;
  if (!f.program.empty()) {
    auto lp = program_of(f);
    j["program"] = program_to_string(lp.program);
    text << j["program"].get<std::string>() << "\n";
  }
  if (!f.ats.empty()) {
    j["ats"] = ats_to_string(ats_of(f));
    text << j["ats"].get<std::string>() << "\n";
  }
  if (!f.derivation.empty()) {
    auto d = rderiv_from_json(nlohmann::json::parse(read_file(f.derivation)));
    j["derivation"] = {{"nodes", d.root->size()}, {"domains", d.domains.to_json()}};
    print_derivation(text, *d.root, 0);
  }
  emit(f, j, text.str());
  return kPass;
}

int cmd_run(const Flags& f) {
  if (f.scheduler != "random" && f.scheduler != "first") throw UsageError("--scheduler is random or first");
  auto t = run_program(program_of(f), config_from(f), f.scheduler == "first");
  auto j = t.to_json();
  j["seed"] = f.seed;
  emit(f, j, t.to_text());
  if (t.status == "terminated") return kPass;
  if (t.status == "bound") return kInconclusive;
  return kFail;
}

int report_code(const Flags& f, const Report& r) {
  emit(f, r.to_json(), r.to_text());
  return outcome_code(r.overall());
}

int cmd_explore(const Flags& f) {
  auto cfg = config_from(f);
  std::optional<AtsSpec> ats;
  if (!f.ats.empty()) ats = ats_of(f);
  return report_code(f, explore_program(program_of(f), ats, cfg));
}

int cmd_check_refinement(const Flags& f) {
  auto cfg = config_from(f);
  return report_code(f, check_refinement(program_of(f), ats_of(f), cfg));
}

int proof_code(const Flags& f, const CheckResult& r) {
  auto j = r.to_json();
  j["schema"] = "refine-proof/1";
  j["verdict"] = r.accepted ? "accepted" : "rejected";
  std::ostringstream text;
  text << "check-proof: " << (r.accepted ? "accepted" : "rejected") << " (" << r.nodes << " nodes, "
       << r.entailments << " bounded entailments)\n";
  if (!r.accepted) {
    text << "  at " << r.path_string() << " [" << r.rule << "] " << reason_name(r.reason);
    if (!r.detail.empty()) text << " - " << r.detail;
    text << "\n";
  }
  emit(f, j, text.str());
  return r.accepted ? kPass : kFail;
}

int cmd_check_proof(const Flags& f) {
  auto file = rderiv_from_json(nlohmann::json::parse(read_file(need(f.derivation, "--derivation"))));
  std::optional<AtsSpec> ats;
  if (!f.ats.empty()) ats = ats_of(f);
  std::optional<LoadedProgram> lp;
  if (!f.program.empty()) lp = program_of(f);
  std::optional<Domains> domains;
  if (domains_overridden(f)) domains = domains_from(f, file.domains);
  auto r = check_proof_file(file, ats, domains, lp ? &*lp : nullptr, static_cast<int>(std::max(1u, f.workers)));
  return proof_code(f, r);
}

int cmd_elaborate(const Flags& f) {
  auto lp = program_of(f);
  auto ats = ats_of(f);
  DerivationFile file;
  try {
    file = elaborate_program(lp, ats, domains_from(f, proof_domains()));
  } catch (const ElaborationError& e) {
    nlohmann::json j = {{"schema", "refine-elaborate/1"}, {"error", e.code}, {"detail", e.what()},
                        {"line", e.pos.line}, {"col", e.pos.col}};
    emit(f, j, "elaborate: " + e.code + " at " + std::to_string(e.pos.line) + ":" + std::to_string(e.pos.col) + " - " +
                   e.what() + "\n");
    return kFail;
  }
  std::string body = rderiv_to_json(file).dump(1) + "\n";
  if (f.out.empty()) {
    std::cout << body;
  } else {
    std::ofstream(f.out) << body;
    if (!f.check) std::cerr << "wrote " << f.out << " (" << file.root->size() << " nodes)\n";
  }
  if (!f.check) return kPass;
  auto r = check_proof_file(file, ats, std::nullopt, &lp, static_cast<int>(std::max(1u, f.workers)));
  if (f.out.empty()) return r.accepted ? kPass : kFail;
  return proof_code(f, r);
}

int cmd_enumerate_ats(const Flags& f) {
  auto cfg = config_from(f);
  auto spec = ats_of(f);
  int len = f.max_len >= 0 ? f.max_len : cfg.max_trace_len;
  std::set<Trace> traces;
  try {
    traces = enumerate_traces(spec, len, cfg.domains, cfg.state_cap);
  } catch (const BudgetExceeded& e) {
    std::cerr << "enumerate-ats: " << e.what() << "\n";
    return kInconclusive;
  }
  std::ostringstream text;
  for (const auto& t : traces) text << trace_to_string(t) << "\n";
  nlohmann::json j = {{"schema", "refine-traces/1"}, {"maxLen", len}, {"traces", traces_to_json(traces)}};
  emit(f, j, text.str());
  return kPass;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--program", f.program, "program file (.rimp)");
  sub->add_option("--ats", f.ats, "abstract transition system file (.rats)");
  sub->add_option("--format", f.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  sub->add_option("--int-range", f.int_range, "integer domain LO..HI");
  sub->add_option("--addr-count", f.addr_count, "ordinary addresses")->check(CLI::NonNegativeNumber);
  sub->add_option("--max-seq-len", f.max_seq_len, "longest enumerated sequence")->check(CLI::NonNegativeNumber);
  sub->add_flag("--no-stutter-close", f.no_stutter_close, "use the ATS transition relation as written");
  sub->add_option("--workers", f.workers, "worker threads");
}

void add_exploration(CLI::App* sub, Flags& f) {
  sub->add_option("--max-steps", f.max_steps, "step bound")->check(CLI::NonNegativeNumber);
  sub->add_option("--max-trace-len", f.max_trace_len, "trace length bound")->check(CLI::NonNegativeNumber);
  sub->add_option("--audits", f.audits, "all, none, or a comma list of safety,lockInvariants,printBeforeInit,erasure");
  sub->add_option("--seed", f.seed, "scheduler seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded verification workbench for refinement proofs in concurrent separation logic"};
  app.require_subcommand(1);
  Flags f;

  auto* parse = app.add_subcommand("parse", "parse and pretty-print inputs");
  add_common(parse, f);
  parse->add_option("--derivation", f.derivation, "derivation file (.rderiv)");

  auto* run = app.add_subcommand("run", "run one scheduled execution");
  add_common(run, f);
  add_exploration(run, f);
  run->add_option("--scheduler", f.scheduler, "random or first");

  auto* explore_cmd = app.add_subcommand("explore", "explore all interleavings and run the audits");
  add_common(explore_cmd, f);
  add_exploration(explore_cmd, f);

  auto* refinement = app.add_subcommand("check-refinement", "check refinement of the ATS by the program");
  add_common(refinement, f);
  add_exploration(refinement, f);

  auto* proof = app.add_subcommand("check-proof", "check a derivation file");
  add_common(proof, f);
  proof->add_option("--derivation", f.derivation, "derivation file (.rderiv)");

  auto* elaborate = app.add_subcommand("elaborate", "build a candidate derivation from the annotations");
  add_common(elaborate, f);
  elaborate->add_option("--out", f.out, "output .rderiv path; standard output when absent");
  elaborate->add_flag("--check", f.check, "check the result");

  auto* enumerate = app.add_subcommand("enumerate-ats", "list the observable traces of an ATS");
  add_common(enumerate, f);
  add_exploration(enumerate, f);
  enumerate->add_option("--max-len", f.max_len, "longest trace; defaults to --max-trace-len");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*parse) return cmd_parse(f);
    if (*run) return cmd_run(f);
    if (*explore_cmd) return cmd_explore(f);
    if (*refinement) return cmd_check_refinement(f);
    if (*proof) return cmd_check_proof(f);
    if (*elaborate) return cmd_elaborate(f);
    if (*enumerate) return cmd_enumerate_ats(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
  } catch (const ParseError& e) {
    std::cerr << e.code << " at " << e.line << ":" << e.col << ": " << e.what() << "\n";
  } catch (const TypeCheckError& e) {
    std::cerr << "TypeError at " << e.pos.line << ":" << e.pos.col << ": " << e.what() << "\n";
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "malformed derivation file: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
  }
  return kUsage;
}
