#include "refine/lock_env.hpp"

namespace refine {

AssertionPtr lock_invariant(const LockEnv& env, const std::string& lock) {
  for (auto it = env.rbegin(); it != env.rend(); ++it) {
    if (it->first == lock) return it->second;
  }
  return a_emp();
}

bool lock_bound(const LockEnv& env, const std::string& lock) {
  for (const auto& [name, inv] : env) {
    if (name == lock) return true;
  }
  return false;
}

LockEnv extend(LockEnv env, const std::string& lock, AssertionPtr inv) {
  env.emplace_back(lock, std::move(inv));
  return env;
}

std::set<std::string> fv_env(const LockEnv& env) {
  std::set<std::string> out;
  for (const auto& [name, inv] : env) {
    auto fv = free_vars(inv);
    out.insert(fv.begin(), fv.end());
  }
  return out;
}

namespace {

void collect(const CommandPtr& c, LockEnv& out) {
  if (!c) return;
  if (c->kind == CmdKind::LockDecl) out.emplace_back(c->name, c->inv ? c->inv : a_emp());
  if (c->kind == CmdKind::Init) out.emplace_back(kGhostLock, c->inv ? c->inv : a_emp());
  collect(c->c1, out);
  collect(c->c2, out);
}

}  // namespace

LockEnv declared_locks(const CommandPtr& c) {
  LockEnv out;
  collect(c, out);
  return out;
}

}  // namespace refine
