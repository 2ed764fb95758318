#include "refine/heap.hpp"

#include <sstream>
#include <stdexcept>

namespace refine {

void PermHeap::set(const Address& a, Perm perm, Value v) {
  if (perm <= Perm(0) || perm > Perm(1)) {
    throw std::invalid_argument("stored permission must lie in (0, 1], got " + perm_to_string(perm));
  }
  cells_[a] = Cell{perm, std::move(v)};
}

const Cell* PermHeap::find(const Address& a) const {
  auto it = cells_.find(a);
  return it == cells_.end() ? nullptr : &it->second;
}

std::size_t PermHeap::hash() const {
  std::size_t seed = cells_.size();
  for (const auto& [a, c] : cells_) {
    hash_combine(seed, std::hash<std::string>{}(a.ghost));
    hash_combine(seed, std::hash<std::int64_t>{}(a.index));
    hash_combine(seed, std::hash<std::int64_t>{}(c.perm.numerator() * 131 + c.perm.denominator()));
    hash_combine(seed, c.value.hash());
  }
  return seed;
}

std::string PermHeap::to_string() const {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [a, c] : cells_) {
    if (!first) out << ", ";
    first = false;
    out << a.to_string() << " -> (" << perm_to_string(c.perm) << ", " << c.value.to_string() << ")";
  }
  out << "}";
  return out.str();
}

bool operator<(const PermHeap& a, const PermHeap& b) {
  auto ia = a.cells_.begin();
  auto ib = b.cells_.begin();
  for (; ia != a.cells_.end() && ib != b.cells_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return ia->first < ib->first;
    if (ia->second.perm != ib->second.perm) return ia->second.perm < ib->second.perm;
    if (ia->second.value != ib->second.value) return ia->second.value < ib->second.value;
  }
  return ia == a.cells_.end() && ib != b.cells_.end();
}

std::optional<PermHeap> heap_add(const PermHeap& h1, const PermHeap& h2) {
  PermHeap out = h1;
  for (const auto& [a, c] : h2.cells()) {
    const Cell* existing = out.find(a);
    if (!existing) {
      out.set(a, c.perm, c.value);
      continue;
    }
    if (existing->value != c.value) return std::nullopt;
    Perm sum = existing->perm + c.perm;
    if (sum > Perm(1)) return std::nullopt;
    out.set(a, sum, c.value);
  }
  return out;
}

std::optional<PermHeap> heap_subtract(const PermHeap& h1, const PermHeap& h2) {
  PermHeap out = h1;
  for (const auto& [a, c] : h2.cells()) {
    const Cell* existing = out.find(a);
    if (!existing || existing->value != c.value || existing->perm < c.perm) return std::nullopt;
    Perm rest = existing->perm - c.perm;
    if (rest == Perm(0)) {
      out.erase(a);
    } else {
      out.set(a, rest, c.value);
    }
  }
  return out;
}

PermHeap heap_update(const PermHeap& h, const Address& a, Value v) {
  PermHeap out = h;
  out.set(a, Perm(1), std::move(v));
  return out;
}

PermHeap heap_delete(const PermHeap& h, const Address& a) {
  PermHeap out = h;
  out.erase(a);
  return out;
}

bool is_normal(const PermHeap& h) {
  for (const auto& [a, c] : h.cells()) {
    if (c.perm != Perm(1)) return false;
  }
  return true;
}

PermHeap normal_completion(const PermHeap& h) {
  PermHeap out;
  for (const auto& [a, c] : h.cells()) {
    if (c.perm < Perm(1)) out.set(a, Perm(1) - c.perm, c.value);
  }
  return out;
}

std::optional<std::vector<Value>> get_state(const PermHeap& h, const AtsSpec& ats) {
  std::vector<Value> state;
  state.reserve(ats.k());
  for (const auto& var : ats.vars) {
    auto it = ats.ghost_addr.find(var);
    const std::string& ghost = it == ats.ghost_addr.end() ? var : it->second;
    const Cell* c = h.find(Address::ghost_named(ghost));
    if (!c) return std::nullopt;
    state.push_back(c->value);
  }
  return state;
}

const Value& Stack::get(const std::string& x) const {
  static const Value zero;
  auto it = vars_.find(x);
  return it == vars_.end() ? zero : it->second;
}

void Stack::set(const std::string& x, Value v) {
  if (v == Value()) {
    vars_.erase(x);
  } else {
    vars_[x] = std::move(v);
  }
}

Stack Stack::restricted(const std::set<std::string>& live) const {
  Stack out;
  for (const auto& [x, v] : vars_) {
    if (live.count(x)) out.vars_.emplace(x, v);
  }
  return out;
}

std::size_t Stack::hash() const {
  std::size_t seed = vars_.size();
  for (const auto& [x, v] : vars_) {
    hash_combine(seed, std::hash<std::string>{}(x));
    hash_combine(seed, v.hash());
  }
  return seed;
}

std::string Stack::to_string() const {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [x, v] : vars_) {
    if (!first) out << ", ";
    first = false;
    out << x << " = " << v.to_string();
  }
  out << "}";
  return out.str();
}

nlohmann::json value_to_json(const Value& v) {
  switch (v.type()) {
    case Type::Int: return v.as_int();
    case Type::Bool: return v.as_bool();
    case Type::Seq: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& x : v.as_seq()) arr.push_back(value_to_json(x));
      return arr;
    }
    default: return nlohmann::json{{"addr", v.as_addr().to_string()}};
  }
}

namespace {

Address address_from_string(const std::string& s) {
  if (s.rfind("ghost:", 0) == 0) return Address::ghost_named(s.substr(6));
  if (!s.empty() && s[0] == 'a') return Address::ordinary(std::stoll(s.substr(1)));
  throw std::invalid_argument("malformed address '" + s + "'");
}

}  // namespace

Value value_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_array()) {
    ValueSeq items;
    for (const auto& x : j) items.push_back(value_from_json(x));
    return Value::sequence(std::move(items));
  }
  if (j.is_object() && j.contains("addr")) return Value::address(address_from_string(j["addr"].get<std::string>()));
  throw std::invalid_argument("malformed value " + j.dump());
}

nlohmann::json heap_to_json(const PermHeap& h) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [a, c] : h.cells()) {
    out[a.to_string()] = {{"perm", perm_to_string(c.perm)}, {"value", value_to_json(c.value)}};
  }
  return out;
}

PermHeap heap_from_json(const nlohmann::json& j) {
  PermHeap h;
  for (const auto& [key, cell] : j.items()) {
    h.set(address_from_string(key), perm_from_string(cell.at("perm").get<std::string>()),
          value_from_json(cell.at("value")));
  }
  return h;
}

nlohmann::json stack_to_json(const Stack& s) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [x, v] : s.bindings()) out[x] = value_to_json(v);
  return out;
}

}  // namespace refine
