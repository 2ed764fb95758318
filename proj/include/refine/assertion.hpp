#pragma once

#include "refine/heap.hpp"
#include "refine/syntax.hpp"
#include "refine/typing.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace refine {

/// Bounds for quantifier, wand and heap enumeration.
struct Domains {
  std::int64_t int_lo = -4;
  std::int64_t int_hi = 8;
  int addr_count = 4;
  int max_seq_len = 6;
  int max_heap_cells = 2;
  /// Upper bound on search nodes per query before giving up.
  std::uint64_t budget = 20'000'000;

  nlohmann::json to_json() const;
  static Domains from_json(const nlohmann::json& j, Domains base);
  static Domains from_json(const nlohmann::json& j);
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A partial assignment of variables built up during model search.
using Env = std::map<std::string, Value>;

Stack env_to_stack(const Env& env);

/// Bounded evaluator and model generator for one family of assertions. The
/// permission fractions and ghost addresses that splits and enumerations may
/// use are fixed at construction.
class Engine {
 public:
  Engine(const Domains& d, const std::vector<AssertionPtr>& scope, TypeEnv types = {});

  /// s, h |= a. Quantifiers range over the bounded domains plus values that
  /// are active in s and h.
  bool eval(const AssertionPtr& a, const Stack& s, const PermHeap& h);

  /// All h1 with h1 (+) h2 == h for some h2 and s, h1 |= a.
  std::vector<PermHeap> subheaps(const AssertionPtr& a, const Stack& s, const PermHeap& h);

  /// Enumerates models (env, h) of a that extend `fixed`. `open` means every
  /// compatible extension of h is also a model. The callback returns false to
  /// stop the search; models returns false iff it was stopped.
  using ModelFn = std::function<bool(const Env&, const PermHeap&, bool open)>;
  bool models(const AssertionPtr& a, const Env& fixed, const ModelFn& fn);

  /// Heaps h' with at most max_heap_cells cells such that h (+) h' is defined.
  std::vector<PermHeap> extensions(const PermHeap& h);

  /// Binds every variable of `vars` missing from env to each domain value.
  bool enumerate_vars(const std::vector<std::string>& vars, const Env& env, const std::function<bool(const Env&)>& fn);

  std::vector<Value> domain(Type t);
  Type type_of(const std::string& var) const;
  void note_type(const std::string& var, Type t) { types_.vars[var] = t; }
  std::uint64_t steps() const { return steps_; }

 private:
  struct Impl;
  friend struct Impl;
  void tick();

  Domains d_;
  TypeEnv types_;
  std::set<Perm> fractions_;
  std::set<std::string> ghosts_;
  std::uint64_t steps_ = 0;
  std::map<int, std::vector<Value>> domain_cache_;
  int fresh_counter_ = 0;
};

bool eval_assertion(const Stack& s, const PermHeap& h, const AssertionPtr& a, const Domains& d,
                    const TypeEnv& types = {});

enum class VerdictKind { Valid, Counterexample, Inconclusive };

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::optional<Stack> stack;
  std::optional<PermHeap> heap;
  std::optional<PermHeap> heap2;  // second subheap for precision witnesses
  std::string detail;

  bool valid() const { return kind == VerdictKind::Valid; }
  nlohmann::json to_json() const;
};

const char* verdict_name(VerdictKind k);

Verdict check_validity(const AssertionPtr& a, const Domains& d, const TypeEnv& types = {});
Verdict check_entailment(const AssertionPtr& p, const AssertionPtr& q, const Domains& d, const TypeEnv& types = {});
Verdict check_precise(const AssertionPtr& p, const Domains& d, const TypeEnv& types = {});

}  // namespace refine
