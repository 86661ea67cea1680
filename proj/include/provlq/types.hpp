#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "provlq/error.hpp"

namespace provlq {

// Primitive types: the types a database cell can hold.
enum class Prim { Unit, Bool, Int, Str };

inline const char* prim_name(Prim p) {
  switch (p) {
    case Prim::Unit: return "()";
    case Prim::Bool: return "Bool";
    case Prim::Int: return "Int";
    case Prim::Str: return "String";
  }
  return "?";
}

// Key type of a table: a single primitive or a tuple of primitives.
class KeyType {
public:
  explicit KeyType(Prim scalar) : parts_{scalar} {}
  explicit KeyType(std::vector<Prim> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) fail(Errc::BadKeySpec, "key type must have at least one component");
  }

  bool is_scalar() const { return parts_.size() == 1; }
  const std::vector<Prim>& parts() const { return parts_; }

  bool operator==(const KeyType& other) const = default;

  std::string to_string() const {
    if (is_scalar()) return lower_name(parts_[0]);
    std::string out = "(";
    for (size_t i = 0; i < parts_.size(); ++i) {
      if (i) out += ", ";
      out += lower_name(parts_[i]);
    }
    return out + ")";
  }

  // Accepts the spelling used by the catalog format and the --key-type flag:
  // "int", "string", "bool", "unit", or "(int, string)".
  static std::optional<KeyType> parse(std::string_view text);

private:
  static std::string lower_name(Prim p) {
    switch (p) {
      case Prim::Unit: return "unit";
      case Prim::Bool: return "bool";
      case Prim::Int: return "int";
      case Prim::Str: return "string";
    }
    return "?";
  }

  std::vector<Prim> parts_;
};

inline std::optional<Prim> parse_prim_name(std::string_view s) {
  if (s == "int") return Prim::Int;
  if (s == "string") return Prim::Str;
  if (s == "bool") return Prim::Bool;
  if (s == "unit") return Prim::Unit;
  return std::nullopt;
}

inline std::optional<KeyType> KeyType::parse(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '(') {
    if (text.back() != ')') return std::nullopt;
    text = text.substr(1, text.size() - 2);
    std::vector<Prim> parts;
    size_t start = 0;
    while (start <= text.size()) {
      size_t comma = text.find(',', start);
      std::string_view piece =
          comma == std::string_view::npos ? text.substr(start) : text.substr(start, comma - start);
      auto p = parse_prim_name(trim(piece));
      if (!p) return std::nullopt;
      parts.push_back(*p);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (parts.size() < 2) return std::nullopt;
    return KeyType(std::move(parts));
  }
  auto p = parse_prim_name(text);
  if (!p) return std::nullopt;
  return KeyType(*p);
}

struct Type;
using TypeRef = std::shared_ptr<const Type>;

// Core calculus types. WhereProv annotates a primitive with a provenance cell
// type; Lineage annotates list elements; WhereProvAnnot is the type of a
// projected (possibly blank) where-provenance annotation itself.
struct Type {
  enum class Kind { Prim, List, Tuple, Arrow, WhereProv, Lineage, WhereProvAnnot };

  Kind kind;
  Prim prim = Prim::Unit;        // Kind::Prim
  TypeRef elem;                  // Kind::List
  std::vector<TypeRef> parts;    // Kind::Tuple
  TypeRef from, to;              // Kind::Arrow
  TypeRef base;                  // Kind::WhereProv / Kind::Lineage
  std::optional<KeyType> key;    // Kind::WhereProv / Lineage / WhereProvAnnot
};

inline bool is_primitive(const TypeRef& t) { return t && t->kind == Type::Kind::Prim; }

inline bool is_prim(const TypeRef& t, Prim p) { return is_primitive(t) && t->prim == p; }

inline bool contains_provenance(const TypeRef& t) {
  if (!t) return false;
  switch (t->kind) {
    case Type::Kind::Prim: return false;
    case Type::Kind::List: return contains_provenance(t->elem);
    case Type::Kind::Tuple: {
      for (const auto& p : t->parts)
        if (contains_provenance(p)) return true;
      return false;
    }
    case Type::Kind::Arrow: return contains_provenance(t->from) || contains_provenance(t->to);
    case Type::Kind::WhereProv:
    case Type::Kind::Lineage:
    case Type::Kind::WhereProvAnnot: return true;
  }
  return false;
}

inline TypeRef prim_type(Prim p) {
  auto t = std::make_shared<Type>();
  t->kind = Type::Kind::Prim;
  t->prim = p;
  return t;
}

inline TypeRef unit_type() {
  static const TypeRef t = prim_type(Prim::Unit);
  return t;
}
inline TypeRef bool_type() {
  static const TypeRef t = prim_type(Prim::Bool);
  return t;
}
inline TypeRef int_type() {
  static const TypeRef t = prim_type(Prim::Int);
  return t;
}
inline TypeRef str_type() {
  static const TypeRef t = prim_type(Prim::Str);
  return t;
}

inline TypeRef list_type(TypeRef elem) {
  if (!elem) throw std::logic_error("list_type: null element");
  if (elem->kind == Type::Kind::Arrow) throw std::logic_error("list_type: function element type");
  auto t = std::make_shared<Type>();
  t->kind = Type::Kind::List;
  t->elem = std::move(elem);
  return t;
}

inline TypeRef tuple_type(std::vector<TypeRef> parts) {
  if (parts.size() < 2 || parts.size() > 16)
    throw std::logic_error("tuple_type: arity must be between 2 and 16");
  for (const auto& p : parts) {
    if (!p) throw std::logic_error("tuple_type: null component");
    // Lineage-annotated components occur only transiently, in the pair type
    // the zip rule of the lineage transformation builds before restructuring.
    if (p->kind == Type::Kind::Arrow)
      throw std::logic_error("tuple_type: function component type");
  }
  auto t = std::make_shared<Type>();
  t->kind = Type::Kind::Tuple;
  t->parts = std::move(parts);
  return t;
}

inline TypeRef arrow_type(TypeRef from, TypeRef to) {
  auto t = std::make_shared<Type>();
  t->kind = Type::Kind::Arrow;
  t->from = std::move(from);
  t->to = std::move(to);
  return t;
}

inline TypeRef where_prov_type(TypeRef base, KeyType key) {
  if (!is_primitive(base))
    throw std::logic_error("where_prov_type: base must be a primitive type");
  auto t = std::make_shared<Type>();
  t->kind = Type::Kind::WhereProv;
  t->base = std::move(base);
  t->key = std::move(key);
  return t;
}

inline TypeRef lineage_annotated_type(TypeRef base, KeyType key) {
  if (!base) throw std::logic_error("lineage_annotated_type: null base");
  if (base->kind == Type::Kind::Lineage || base->kind == Type::Kind::Arrow ||
      base->kind == Type::Kind::WhereProv)
    throw std::logic_error("lineage_annotated_type: illegal base type");
  auto t = std::make_shared<Type>();
  t->kind = Type::Kind::Lineage;
  t->base = std::move(base);
  t->key = std::move(key);
  return t;
}

inline TypeRef where_prov_annot_type(KeyType key) {
  auto t = std::make_shared<Type>();
  t->kind = Type::Kind::WhereProvAnnot;
  t->key = std::move(key);
  return t;
}

inline bool type_equal(const TypeRef& a, const TypeRef& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Type::Kind::Prim: return a->prim == b->prim;
    case Type::Kind::List: return type_equal(a->elem, b->elem);
    case Type::Kind::Tuple: {
      if (a->parts.size() != b->parts.size()) return false;
      for (size_t i = 0; i < a->parts.size(); ++i)
        if (!type_equal(a->parts[i], b->parts[i])) return false;
      return true;
    }
    case Type::Kind::Arrow: return type_equal(a->from, b->from) && type_equal(a->to, b->to);
    case Type::Kind::WhereProv:
    case Type::Kind::Lineage: return type_equal(a->base, b->base) && a->key == b->key;
    case Type::Kind::WhereProvAnnot: return a->key == b->key;
  }
  return false;
}

// θ as a first-class type: a scalar key is its primitive, a compound key is a
// tuple of primitives.
inline TypeRef key_type_as_type(const KeyType& key) {
  if (key.is_scalar()) return prim_type(key.parts()[0]);
  std::vector<TypeRef> parts;
  parts.reserve(key.parts().size());
  for (Prim p : key.parts()) parts.push_back(prim_type(p));
  return tuple_type(std::move(parts));
}

inline std::optional<KeyType> key_type_from_type(const TypeRef& t) {
  if (!t) return std::nullopt;
  if (t->kind == Type::Kind::Prim) return KeyType(t->prim);
  if (t->kind == Type::Kind::Tuple) {
    std::vector<Prim> parts;
    for (const auto& p : t->parts) {
      if (!is_primitive(p)) return std::nullopt;
      parts.push_back(p->prim);
    }
    return KeyType(std::move(parts));
  }
  return std::nullopt;
}

inline std::string type_to_string(const TypeRef& t) {
  if (!t) return "?";
  auto atom = [](const TypeRef& x) {
    std::string s = type_to_string(x);
    if (x->kind == Type::Kind::Arrow || x->kind == Type::Kind::WhereProv ||
        x->kind == Type::Kind::Lineage || x->kind == Type::Kind::WhereProvAnnot)
      return "(" + s + ")";
    return s;
  };
  switch (t->kind) {
    case Type::Kind::Prim: return prim_name(t->prim);
    case Type::Kind::List: return "[" + type_to_string(t->elem) + "]";
    case Type::Kind::Tuple: {
      std::string out = "(";
      for (size_t i = 0; i < t->parts.size(); ++i) {
        if (i) out += ", ";
        out += type_to_string(t->parts[i]);
      }
      return out + ")";
    }
    case Type::Kind::Arrow: return atom(t->from) + " -> " + type_to_string(t->to);
    case Type::Kind::WhereProv:
      return "WhereProv " + atom(t->base) + " " + type_to_string(key_type_as_type(*t->key));
    case Type::Kind::Lineage:
      return "Lineage " + atom(t->base) + " " + type_to_string(key_type_as_type(*t->key));
    case Type::Kind::WhereProvAnnot:
      return "WhereProvAnnot " + type_to_string(key_type_as_type(*t->key));
  }
  return "?";
}

}  // namespace provlq
