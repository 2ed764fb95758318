#pragma once

#include "refine/syntax.hpp"
#include "refine/value.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace refine {

struct Cell {
  Perm perm{1};
  Value value;

  friend bool operator==(const Cell& a, const Cell& b) { return a.perm == b.perm && a.value == b.value; }
};

/// Finite partial map from addresses to (permission, value). Every stored
/// permission lies in (0, 1].
class PermHeap {
 public:
  using Map = std::map<Address, Cell>;

  PermHeap() = default;

  /// Throws std::invalid_argument if perm is outside (0, 1].
  void set(const Address& a, Perm perm, Value v);
  void erase(const Address& a) { cells_.erase(a); }

  const Cell* find(const Address& a) const;
  bool contains(const Address& a) const { return cells_.count(a) != 0; }
  bool empty() const { return cells_.empty(); }
  std::size_t size() const { return cells_.size(); }
  const Map& cells() const { return cells_; }

  std::size_t hash() const;
  std::string to_string() const;

  friend bool operator==(const PermHeap& a, const PermHeap& b) { return a.cells_ == b.cells_; }
  friend bool operator<(const PermHeap& a, const PermHeap& b);

 private:
  Map cells_;
};

/// h1 (+) h2; nullopt when some shared address disagrees on its value or the
/// permissions sum above 1.
std::optional<PermHeap> heap_add(const PermHeap& h1, const PermHeap& h2);
/// h1 - h2 for h2 a subheap of h1 (h2 (+) result == h1). nullopt otherwise.
std::optional<PermHeap> heap_subtract(const PermHeap& h1, const PermHeap& h2);
PermHeap heap_update(const PermHeap& h, const Address& a, Value v);
PermHeap heap_delete(const PermHeap& h, const Address& a);
bool is_normal(const PermHeap& h);
/// The heap h' that tops every cell of h up to permission 1.
PermHeap normal_completion(const PermHeap& h);

/// Ghost state vector (v1..vk) of the ATS variables, or nullopt if some ghost
/// address is missing.
std::optional<std::vector<Value>> get_state(const PermHeap& h, const AtsSpec& ats);

/// Total stack with default value int 0. Bindings equal to the default are
/// not stored, so structurally equal stacks are semantically equal.
class Stack {
 public:
  const Value& get(const std::string& x) const;
  void set(const std::string& x, Value v);
  const std::map<std::string, Value>& bindings() const { return vars_; }
  Stack restricted(const std::set<std::string>& live) const;
  std::size_t hash() const;
  std::string to_string() const;

  friend bool operator==(const Stack& a, const Stack& b) { return a.vars_ == b.vars_; }
  friend bool operator<(const Stack& a, const Stack& b) { return a.vars_ < b.vars_; }

 private:
  std::map<std::string, Value> vars_;
};

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);
nlohmann::json heap_to_json(const PermHeap& h);
PermHeap heap_from_json(const nlohmann::json& j);
nlohmann::json stack_to_json(const Stack& s);

}  // namespace refine
