#include "refine/value.hpp"

#include <functional>
#include <sstream>

namespace refine {

std::string perm_to_string(const Perm& p) {
  return std::to_string(p.numerator()) + "/" + std::to_string(p.denominator());
}

Perm perm_from_string(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Perm(std::stoll(text));
    std::int64_t num = std::stoll(text.substr(0, slash));
    std::int64_t den = std::stoll(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Perm(num, den);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("malformed permission '" + text + "'");
  }
}

std::string Address::to_string() const {
  if (is_ghost()) return "ghost:" + ghost;
  return "a" + std::to_string(index);
}

const char* type_name(Type t) {
  switch (t) {
    case Type::Unknown: return "unknown";
    case Type::Int: return "int";
    case Type::Bool: return "bool";
    case Type::Seq: return "seq";
    case Type::Addr: return "addr";
  }
  return "?";
}

Type Value::type() const {
  switch (data_.index()) {
    case 0: return Type::Int;
    case 1: return Type::Bool;
    case 2: return Type::Seq;
    default: return Type::Addr;
  }
}

std::int64_t Value::as_int() const {
  if (!is_int()) throw EvalError("expected int, got " + to_string());
  return std::get<0>(data_);
}

bool Value::as_bool() const {
  if (!is_bool()) throw EvalError("expected bool, got " + to_string());
  return std::get<1>(data_);
}

const ValueSeq& Value::as_seq() const {
  if (!is_seq()) throw EvalError("expected seq, got " + to_string());
  return *std::get<2>(data_);
}

const Address& Value::as_addr() const {
  if (!is_addr()) throw EvalError("expected address, got " + to_string());
  return std::get<3>(data_);
}

std::string Value::to_string() const {
  switch (data_.index()) {
    case 0: return std::to_string(std::get<0>(data_));
    case 1: return std::get<1>(data_) ? "true" : "false";
    case 2: {
      std::string out = "[";
      const auto& items = *std::get<2>(data_);
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i].to_string();
      }
      return out + "]";
    }
    default: {
      const auto& a = std::get<3>(data_);
      if (a.is_ghost()) return a.ghost;
      return "addr(" + std::to_string(a.index) + ")";
    }
  }
}

std::size_t Value::hash() const {
  std::size_t seed = data_.index();
  switch (data_.index()) {
    case 0: hash_combine(seed, std::hash<std::int64_t>{}(std::get<0>(data_))); break;
    case 1: hash_combine(seed, std::get<1>(data_) ? 1 : 2); break;
    case 2:
      for (const auto& v : *std::get<2>(data_)) hash_combine(seed, v.hash());
      break;
    default: {
      const auto& a = std::get<3>(data_);
      hash_combine(seed, std::hash<std::string>{}(a.ghost));
      hash_combine(seed, std::hash<std::int64_t>{}(a.index));
    }
  }
  return seed;
}

bool operator==(const Value& a, const Value& b) { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  if (auto c = a.data_.index() <=> b.data_.index(); c != 0) return c;
  switch (a.data_.index()) {
    case 0: return std::get<0>(a.data_) <=> std::get<0>(b.data_);
    case 1: return std::get<1>(a.data_) <=> std::get<1>(b.data_);
    case 2: {
      const auto& x = *std::get<2>(a.data_);
      const auto& y = *std::get<2>(b.data_);
      if (&x == &y) return std::strong_ordering::equal;
      for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (auto c = x[i] <=> y[i]; c != 0) return c;
      }
      return x.size() <=> y.size();
    }
    default: return std::get<3>(a.data_) <=> std::get<3>(b.data_);
  }
}

Value seq_append(const Value& elem, const Value& seq) {
  ValueSeq items = seq.as_seq();
  items.push_back(elem);
  return Value::sequence(std::move(items));
}

}  // namespace refine
