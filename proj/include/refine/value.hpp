#pragma once

#include <boost/rational.hpp>

#include <compare>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace refine {

/// Fractional permission. Exact rational so that 1/2 + 1/2 == 1 holds.
using Perm = boost::rational<std::int64_t>;

std::string perm_to_string(const Perm& p);
Perm perm_from_string(const std::string& text);

/// Heap address. Ordinary addresses are numbered; ghost addresses live in a
/// disjoint namespace keyed by the ghost variable name.
struct Address {
  std::int64_t index = 0;
  std::string ghost;

  static Address ordinary(std::int64_t i) { return Address{i, {}}; }
  static Address ghost_named(std::string name) { return Address{0, std::move(name)}; }

  bool is_ghost() const { return !ghost.empty(); }
  std::string to_string() const;

  friend bool operator==(const Address&, const Address&) = default;
  friend std::strong_ordering operator<=>(const Address& a, const Address& b) {
    if (auto c = a.ghost <=> b.ghost; c != 0) return c;
    return a.index <=> b.index;
  }
};

inline const std::string kStdOut = "stdOut";

enum class Type { Unknown, Int, Bool, Seq, Addr };
const char* type_name(Type t);

class Value;
using ValueSeq = std::vector<Value>;

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Value {
 public:
  Value() : data_(std::int64_t{0}) {}
  static Value integer(std::int64_t v) { return Value(Data(v)); }
  static Value boolean(bool v) { return Value(Data(v)); }
  static Value sequence(ValueSeq items) {
    return Value(Data(std::make_shared<const ValueSeq>(std::move(items))));
  }
  static Value address(Address a) { return Value(Data(std::move(a))); }

  Type type() const;
  bool is_int() const { return data_.index() == 0; }
  bool is_bool() const { return data_.index() == 1; }
  bool is_seq() const { return data_.index() == 2; }
  bool is_addr() const { return data_.index() == 3; }

  std::int64_t as_int() const;
  bool as_bool() const;
  const ValueSeq& as_seq() const;
  const Address& as_addr() const;

  std::string to_string() const;
  std::size_t hash() const;

  friend bool operator==(const Value& a, const Value& b);
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);

 private:
  using Data = std::variant<std::int64_t, bool, std::shared_ptr<const ValueSeq>, Address>;
  explicit Value(Data d) : data_(std::move(d)) {}
  Data data_;
};

/// Append(v, s): the sequence s extended by v at its end.
Value seq_append(const Value& elem, const Value& seq);

inline void hash_combine(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

}  // namespace refine

template <>
struct std::hash<refine::Value> {
  std::size_t operator()(const refine::Value& v) const { return v.hash(); }
};
