#include "refine/semantics.hpp"

#include "refine/expr_eval.hpp"

#include <algorithm>
#include <deque>

namespace refine {

std::size_t Config::hash() const {
  if (abort) return 0x9e3779b9;
  std::size_t seed = cmd->hash;
  hash_combine(seed, stack.hash());
  hash_combine(seed, heap.hash());
  return seed;
}

bool operator==(const Config& a, const Config& b) {
  if (a.abort || b.abort) return a.abort == b.abort;
  return a.cmd->hash == b.cmd->hash && command_equal(a.cmd, b.cmd) && a.stack == b.stack && a.heap == b.heap;
}

std::string StepLabel::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (i) out += "/";
    out += rules[i];
  }
  if (!detail.empty()) out += "[" + detail + "]";
  return out;
}

nlohmann::json StepLabel::to_json() const {
  nlohmann::json j = {{"rule", rule()}, {"derivation", rules}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

nlohmann::json config_to_json(const Config& c) {
  if (c.abort) return {{"abort", true}};
  return {{"cmd", command_to_string(c.cmd)}, {"stack", stack_to_json(c.stack)}, {"heap", heap_to_json(c.heap)}};
}

namespace {

void collect_locks(const CommandPtr& c, CmdKind kind, std::set<std::string>& out) {
  if (!c) return;
  if (c->kind == kind) out.insert(c->name);
  collect_locks(c->c1, kind, out);
  collect_locks(c->c2, kind, out);
}

}  // namespace

std::set<std::string> locked(const CommandPtr& c) {
  std::set<std::string> out;
  collect_locks(c, CmdKind::Within, out);
  return out;
}

std::set<std::string> dlocks(const CommandPtr& c) {
  std::set<std::string> out;
  collect_locks(c, CmdKind::LockDecl, out);
  return out;
}

bool is_init(const CommandPtr& c) {
  return command_any(c, [](const Command& x) { return x.kind == CmdKind::LockDecl && x.name == kGhostLock; });
}

namespace {

struct Access {
  std::set<Address> reads;
  std::set<Address> writes;
};

void ghost_reads(const ExprPtr& e, Access& acc) {
  if (!e) return;
  for (const auto& g : expr_ghosts(e)) acc.reads.insert(Address::ghost_named(g));
}

void touch(const ExprPtr& addr, const Stack& s, const PermHeap& h, bool write, Access& acc) {
  try {
    Value a = eval_expr(addr, s, &h);
    if (!a.is_addr()) return;
    acc.reads.insert(a.as_addr());
    if (write) acc.writes.insert(a.as_addr());
  } catch (const EvalError&) {
    // The step itself aborts; no access happens.
  }
}

void accesses(const CommandPtr& c, const Stack& s, const PermHeap& h, Access& acc) {
  switch (c->kind) {
    case CmdKind::Assign:
    case CmdKind::Alloc: ghost_reads(c->e1, acc); break;
    case CmdKind::Ite: ghost_reads(c->e1, acc); break;
    case CmdKind::Read:
      ghost_reads(c->e1, acc);
      touch(c->e1, s, h, false, acc);
      break;
    case CmdKind::Write:
      ghost_reads(c->e1, acc);
      ghost_reads(c->e2, acc);
      touch(c->e1, s, h, true, acc);
      break;
    case CmdKind::Free:
      ghost_reads(c->e1, acc);
      touch(c->e1, s, h, true, acc);
      break;
    case CmdKind::Print: {
      ghost_reads(c->e1, acc);
      Address out = Address::ghost_named(kStdOut);
      acc.reads.insert(out);
      acc.writes.insert(out);
      break;
    }
    case CmdKind::GhostAssign: {
      ghost_reads(c->e1, acc);
      Address g = Address::ghost_named(c->name);
      acc.reads.insert(g);
      acc.writes.insert(g);
      break;
    }
    case CmdKind::Seq:
      if (c->c1->kind != CmdKind::Skip) accesses(c->c1, s, h, acc);
      break;
    case CmdKind::Par:
      accesses(c->c1, s, h, acc);
      accesses(c->c2, s, h, acc);
      break;
    case CmdKind::LockDecl: accesses(c->c1, s, h, acc); break;
    // Protected regions, pending critical sections and structural steps
    // access nothing unprotected.
    default: break;
  }
}

Access access_of(const CommandPtr& c, const Stack& s, const PermHeap& h) {
  Access acc;
  accesses(c, s, h, acc);
  return acc;
}

}  // namespace

std::set<Address> reads(const CommandPtr& c, const Stack& s, const PermHeap& h) { return access_of(c, s, h).reads; }
std::set<Address> writes(const CommandPtr& c, const Stack& s, const PermHeap& h) {
  return access_of(c, s, h).writes;
}

namespace {

void flatten_seq(const CommandPtr& c, std::vector<CommandPtr>& out) {
  if (c->kind == CmdKind::Seq) {
    flatten_seq(c->c1, out);
    flatten_seq(c->c2, out);
  } else {
    out.push_back(c);
  }
}

}  // namespace

bool is_atomic(const CommandPtr& c) {
  std::vector<CommandPtr> parts;
  flatten_seq(c, parts);
  int base = 0;
  for (const auto& p : parts) {
    switch (p->kind) {
      case CmdKind::Skip:
      case CmdKind::GhostAssign: break;
      case CmdKind::Assign:
      case CmdKind::Read:
      case CmdKind::Write:
      case CmdKind::Free:
      case CmdKind::Alloc:
      case CmdKind::Print: ++base; break;
      default: return false;
    }
  }
  return base <= 1;
}

CommandPtr erase_ghost(const CommandPtr& c) {
  switch (c->kind) {
    case CmdKind::GhostAssign: return c_skip();
    case CmdKind::Next:
    case CmdKind::Init: return erase_ghost(c->c1);
    case CmdKind::Seq: {
      auto a = erase_ghost(c->c1);
      auto b = erase_ghost(c->c2);
      if (a->kind == CmdKind::Skip) return b;
      if (b->kind == CmdKind::Skip) return a;
      return c_seq(a, b);
    }
    case CmdKind::Ite: return with_pos(c_ite(c->e1, erase_ghost(c->c1), erase_ghost(c->c2)), c->pos);
    case CmdKind::While: return with_pos(c_while(c->e1, erase_ghost(c->c1), c->inv), c->pos);
    case CmdKind::Par: return c_par(erase_ghost(c->c1), erase_ghost(c->c2));
    case CmdKind::LockDecl: return with_pos(c_lock(c->name, erase_ghost(c->c1), c->inv), c->pos);
    case CmdKind::With: return with_pos(c_with(c->name, c->e1, erase_ghost(c->c1)), c->pos);
    case CmdKind::Within: return c_within(c->name, erase_ghost(c->c1));
    default: return c;
  }
}

namespace {

// One step result before the label is finalized; cmd == nullptr means abort.
struct Outcome {
  std::vector<std::string> rules;
  std::string detail;
  CommandPtr cmd;
  Stack stack;
  PermHeap heap;
};

class Stepper {
 public:
  explicit Stepper(const SemanticsOptions& opt) : opt_(opt) {}

  void run(const CommandPtr& c, const Stack& s, const PermHeap& h, std::vector<Outcome>& out) {
    switch (c->kind) {
      case CmdKind::Skip: return;
      case CmdKind::Assign: {
        Value v;
        if (!eval(c->e1, s, h, "Assign", v, out)) return;
        Stack s2 = s;
        s2.set(c->name, v);
        ok(out, "Assign", s2, h);
        return;
      }
      case CmdKind::Read: {
        Value a;
        if (!eval(c->e1, s, h, "ReadA", a, out)) return;
        const Cell* cell = a.is_addr() ? h.find(a.as_addr()) : nullptr;
        if (!cell) return fail(out, "ReadA", a.to_string() + " not allocated");
        Stack s2 = s;
        s2.set(c->name, cell->value);
        ok(out, "Read", s2, h);
        return;
      }
      case CmdKind::Write: {
        Value a, v;
        if (!eval(c->e1, s, h, "WriteA", a, out) || !eval(c->e2, s, h, "WriteA", v, out)) return;
        if (!a.is_addr() || !h.contains(a.as_addr())) return fail(out, "WriteA", a.to_string() + " not allocated");
        ok(out, "Write", s, heap_update(h, a.as_addr(), v));
        return;
      }
      case CmdKind::Free: {
        Value a;
        if (!eval(c->e1, s, h, "FreeA", a, out)) return;
        if (!a.is_addr() || !h.contains(a.as_addr())) return fail(out, "FreeA", a.to_string() + " not allocated");
        if (a.as_addr().is_ghost()) return fail(out, "FreeA", "ghost address " + a.to_string());
        ok(out, "Free", s, heap_delete(h, a.as_addr()));
        return;
      }
      case CmdKind::Alloc: {
        Value v;
        if (!eval(c->e1, s, h, "Alloc", v, out)) return;
        std::vector<std::int64_t> fresh;
        std::int64_t i = 0;
        for (; opt_.full_alloc ? i < opt_.addr_count : fresh.empty(); ++i) {
          if (!h.contains(Address::ordinary(i))) fresh.push_back(i);
        }
        if (fresh.empty()) {
          while (h.contains(Address::ordinary(i))) ++i;
          fresh.push_back(i);
        }
        for (auto idx : fresh) {
          Address a = Address::ordinary(idx);
          Stack s2 = s;
          s2.set(c->name, Value::address(a));
          out.push_back({{"Alloc"}, a.to_string(), c_skip(), s2, heap_update(h, a, v)});
        }
        return;
      }
      case CmdKind::Print: {
        const Cell* cell = h.find(Address::ghost_named(kStdOut));
        if (!cell) return fail(out, "PrintA", "stdOut not allocated");
        Value v;
        if (!eval(c->e1, s, h, "PrintA", v, out)) return;
        if (!cell->value.is_seq()) return fail(out, "PrintA", "stdOut does not hold a sequence");
        ok(out, "Print", s, heap_update(h, Address::ghost_named(kStdOut), seq_append(v, cell->value)));
        return;
      }
      case CmdKind::GhostAssign: {
        Address g = Address::ghost_named(c->name);
        if (!h.contains(g)) return fail(out, "WriteA", "ghost " + c->name + " not allocated");
        Value v;
        if (!eval(c->e1, s, h, "WriteA", v, out)) return;
        out.push_back({{"Write"}, "ghost " + c->name, c_skip(), s, heap_update(h, g, v)});
        return;
      }
      case CmdKind::Ite: {
        Value g;
        if (!eval(c->e1, s, h, "Ite1", g, out)) return;
        if (!g.is_bool()) return fail(out, "Ite1", "guard is not boolean");
        out.push_back({{g.as_bool() ? "Ite1" : "Ite2"}, "", g.as_bool() ? c->c1 : c->c2, s, h});
        return;
      }
      case CmdKind::While:
        out.push_back({{"While"}, "", c_ite(c->e1, c_seq(c->c1, c), c_skip()), s, h});
        return;
      case CmdKind::Seq: {
        if (c->c1->kind == CmdKind::Skip) {
          out.push_back({{"SeqS"}, "", c->c2, s, h});
          return;
        }
        for (auto& o : sub(c->c1, s, h)) {
          if (o.cmd) o.cmd = c_seq(o.cmd, c->c2);
          wrap(o, o.cmd ? "Seq" : "SeqA");
          out.push_back(std::move(o));
        }
        return;
      }
      case CmdKind::Par: {
        if (c->c1->kind == CmdKind::Skip && c->c2->kind == CmdKind::Skip) {
          out.push_back({{"ParS"}, "", c_skip(), s, h});
          return;
        }
        Access a1 = access_of(c->c1, s, h);
        Access a2 = access_of(c->c2, s, h);
        std::set<Address> conflict;
        for (const auto& a : a1.reads) {
          if (a2.writes.count(a)) conflict.insert(a);
        }
        for (const auto& a : a1.writes) {
          if (a2.reads.count(a)) conflict.insert(a);
        }
        if (!conflict.empty()) fail(out, "Race", conflict.begin()->to_string());
        auto held2 = locked(c->c2);
        for (auto& o : sub(c->c1, s, h)) {
          if (o.cmd) {
            auto held1 = locked(o.cmd);
            if (std::any_of(held1.begin(), held1.end(), [&](const auto& l) { return held2.count(l) != 0; })) continue;
            o.cmd = c_par(o.cmd, c->c2);
          }
          wrap(o, o.cmd ? "Par1" : "Par1A");
          out.push_back(std::move(o));
        }
        auto held1 = locked(c->c1);
        for (auto& o : sub(c->c2, s, h)) {
          if (o.cmd) {
            auto held = locked(o.cmd);
            if (std::any_of(held.begin(), held.end(), [&](const auto& l) { return held1.count(l) != 0; })) continue;
            o.cmd = c_par(c->c1, o.cmd);
          }
          wrap(o, o.cmd ? "Par2" : "Par2A");
          out.push_back(std::move(o));
        }
        return;
      }
      case CmdKind::LockDecl: {
        if (c->c1->kind == CmdKind::Skip) {
          out.push_back({{"LockS"}, c->name, c_skip(), s, h});
          return;
        }
        for (auto& o : sub(c->c1, s, h)) {
          if (o.cmd) o.cmd = c_lock(c->name, o.cmd, c->inv);
          wrap(o, o.cmd ? "Lock" : "LockA");
          out.push_back(std::move(o));
        }
        return;
      }
      case CmdKind::With: {
        Value g;
        if (!eval(c->e1, s, h, "With", g, out)) return;
        if (!g.is_bool()) return fail(out, "With", "guard is not boolean");
        if (g.as_bool()) out.push_back({{"With"}, c->name, c_within(c->name, c->c1), s, h});
        return;
      }
      case CmdKind::Within: {
        if (locked(c->c1).count(c->name)) fail(out, "WithinL", c->name);
        if (c->c1->kind == CmdKind::Skip) {
          out.push_back({{"WithinS"}, c->name, c_skip(), s, h});
          return;
        }
        for (auto& o : sub(c->c1, s, h)) {
          if (o.cmd) o.cmd = c_within(c->name, o.cmd);
          wrap(o, o.cmd ? "Within" : "WithinA");
          out.push_back(std::move(o));
        }
        return;
      }
      case CmdKind::Init:
        out.push_back({{"Init"}, "", c_lock(kGhostLock, c->c1, c->inv), s, h});
        return;
      case CmdKind::Next:
        next_block(c, s, h, out);
        return;
    }
  }

 private:
  std::vector<Outcome> sub(const CommandPtr& c, const Stack& s, const PermHeap& h) {
    std::vector<Outcome> out;
    run(c, s, h, out);
    return out;
  }

  static void wrap(Outcome& o, const char* rule) { o.rules.insert(o.rules.begin(), rule); }

  static void ok(std::vector<Outcome>& out, const char* rule, const Stack& s, const PermHeap& h) {
    out.push_back({{rule}, "", c_skip(), s, h});
  }
  static void fail(std::vector<Outcome>& out, const char* rule, std::string detail) {
    out.push_back({{rule}, std::move(detail), nullptr, {}, {}});
  }

  // A runtime evaluation error aborts the step, labeled with `rule`.
  static bool eval(const ExprPtr& e, const Stack& s, const PermHeap& h, const char* rule, Value& v,
                   std::vector<Outcome>& out) {
    try {
      v = eval_expr(e, s, &h);
      return true;
    } catch (const EvalError& err) {
      fail(out, rule, std::string("error: ") + err.what());
      return false;
    }
  }

  // Runs an atomic body without interference until it terminates. Aborting or
  // diverging bodies contribute no successor.
  void next_block(const CommandPtr& c, const Stack& s, const PermHeap& h, std::vector<Outcome>& out) {
    if (!is_atomic(c->c1)) return;
    std::deque<Outcome> work;
    work.push_back({{}, "", c->c1, s, h});
    std::size_t steps = 0;
    while (!work.empty() && steps++ < opt_.next_budget) {
      Outcome cur = std::move(work.front());
      work.pop_front();
      if (cur.cmd->kind == CmdKind::Skip) {
        out.push_back({{"Next"}, cur.detail, c_skip(), cur.stack, cur.heap});
        continue;
      }
      for (auto& o : sub(cur.cmd, cur.stack, cur.heap)) {
        if (!o.cmd) continue;
        if (o.rules.back() == "Alloc") o.detail = cur.detail.empty() ? o.detail : cur.detail + "," + o.detail;
        else o.detail = cur.detail;
        work.push_back(std::move(o));
      }
    }
  }

  const SemanticsOptions& opt_;
};

}  // namespace

std::vector<Step> step(const Config& cfg, const SemanticsOptions& opt) {
  std::vector<Step> steps;
  if (cfg.abort) return steps;
  std::vector<Outcome> raw;
  Stepper(opt).run(cfg.cmd, cfg.stack, cfg.heap, raw);
  steps.reserve(raw.size());
  for (auto& o : raw) {
    Step st;
    st.label.rules = std::move(o.rules);
    st.label.detail = std::move(o.detail);
    if (o.cmd) {
      st.next.cmd = std::move(o.cmd);
      st.next.stack = std::move(o.stack);
      st.next.heap = std::move(o.heap);
    } else {
      st.next = Config::aborted();
    }
    steps.push_back(std::move(st));
  }
  std::stable_sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) { return a.label < b.label; });
  return steps;
}

}  // namespace refine
