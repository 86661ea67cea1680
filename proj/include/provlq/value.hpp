#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "provlq/error.hpp"

namespace provlq {

class Value;
struct WhereProvAnnot;
struct LineageEntry;
class LineageSet;

// Runtime values. Immutable and cheaply copyable (shared representation).
class Value {
public:
  enum class Kind { Unit, Bool, Int, Str, Tuple, List, WhereProv, Lineage, ProvAnnot };

  Value();  // unit

  static Value unit();
  static Value boolean(bool b);
  static Value integer(std::int64_t i);
  static Value str(std::string s);
  static Value tuple(std::vector<Value> parts);
  static Value list(std::vector<Value> elems);
  // A scalar carrying a where-provenance cell; nullopt is the blank annotation.
  static Value where_prov(Value data, std::optional<WhereProvAnnot> annot);
  // A row carrying a set of lineage entries.
  static Value lineage_row(Value data, LineageSet entries);
  // A projected where-provenance annotation on its own.
  static Value prov_annot(std::optional<WhereProvAnnot> annot);

  Kind kind() const;
  bool as_bool() const;
  std::int64_t as_int() const;
  const std::string& as_str() const;
  const std::vector<Value>& parts() const;  // tuple components or list elements
  const Value& data() const;                // WhereProv / Lineage payload
  const std::optional<WhereProvAnnot>& annot() const;
  const LineageSet& entries() const;

  bool is_scalar() const {
    Kind k = kind();
    return k == Kind::Unit || k == Kind::Bool || k == Kind::Int || k == Kind::Str;
  }

private:
  struct Rep;
  explicit Value(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

// Identifies the database cell a value was copied from.
struct WhereProvAnnot {
  std::string table;
  std::string column;
  Value key;
};

// Identifies one database row that contributed to an output row.
struct LineageEntry {
  std::string table;
  Value key;
};

int compare(const Value& a, const Value& b);

inline bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
inline bool operator<(const Value& a, const Value& b) { return compare(a, b) < 0; }

inline int compare(const WhereProvAnnot& a, const WhereProvAnnot& b) {
  if (int c = a.table.compare(b.table)) return c < 0 ? -1 : 1;
  if (int c = a.column.compare(b.column)) return c < 0 ? -1 : 1;
  return compare(a.key, b.key);
}

inline int compare(const LineageEntry& a, const LineageEntry& b) {
  if (int c = a.table.compare(b.table)) return c < 0 ? -1 : 1;
  return compare(a.key, b.key);
}

inline bool operator==(const LineageEntry& a, const LineageEntry& b) { return compare(a, b) == 0; }
inline bool operator==(const WhereProvAnnot& a, const WhereProvAnnot& b) {
  return compare(a, b) == 0;
}

// A set of lineage entries, kept sorted by (table, key). Union is the ⊕ of the
// calculus: associative, commutative, idempotent, with the empty set as identity.
class LineageSet {
public:
  LineageSet() = default;

  static LineageSet single(LineageEntry e) {
    LineageSet s;
    s.entries_.push_back(std::move(e));
    return s;
  }

  static LineageSet from(std::vector<LineageEntry> entries) {
    LineageSet s;
    s.entries_ = std::move(entries);
    s.normalize();
    return s;
  }

  LineageSet union_with(const LineageSet& other) const {
    LineageSet out;
    out.entries_.reserve(entries_.size() + other.entries_.size());
    out.entries_ = entries_;
    out.entries_.insert(out.entries_.end(), other.entries_.begin(), other.entries_.end());
    out.normalize();
    return out;
  }

  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }
  const std::vector<LineageEntry>& entries() const { return entries_; }

  bool operator==(const LineageSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (size_t i = 0; i < entries_.size(); ++i)
      if (!(entries_[i] == other.entries_[i])) return false;
    return true;
  }

private:
  void normalize() {
    std::sort(entries_.begin(), entries_.end(),
              [](const LineageEntry& a, const LineageEntry& b) { return compare(a, b) < 0; });
    entries_.erase(std::unique(entries_.begin(), entries_.end(),
                               [](const LineageEntry& a, const LineageEntry& b) {
                                 return compare(a, b) == 0;
                               }),
                   entries_.end());
  }

  std::vector<LineageEntry> entries_;
};

struct Value::Rep {
  Kind kind = Kind::Unit;
  bool b = false;
  std::int64_t i = 0;
  std::string s;
  std::vector<Value> seq;                 // tuple / list
  std::optional<Value> payload;           // WhereProv / Lineage data
  std::optional<WhereProvAnnot> annot;    // WhereProv / ProvAnnot
  LineageSet entries;                     // Lineage
};

inline Value::Value() : rep_(std::make_shared<Rep>()) {}

inline Value Value::unit() { return Value(); }

inline Value Value::boolean(bool b) {
  auto r = std::make_shared<Rep>();
  r->kind = Kind::Bool;
  r->b = b;
  return Value(std::move(r));
}

inline Value Value::integer(std::int64_t i) {
  auto r = std::make_shared<Rep>();
  r->kind = Kind::Int;
  r->i = i;
  return Value(std::move(r));
}

inline Value Value::str(std::string s) {
  auto r = std::make_shared<Rep>();
  r->kind = Kind::Str;
  r->s = std::move(s);
  return Value(std::move(r));
}

inline Value Value::tuple(std::vector<Value> parts) {
  auto r = std::make_shared<Rep>();
  r->kind = Kind::Tuple;
  r->seq = std::move(parts);
  return Value(std::move(r));
}

inline Value Value::list(std::vector<Value> elems) {
  auto r = std::make_shared<Rep>();
  r->kind = Kind::List;
  r->seq = std::move(elems);
  return Value(std::move(r));
}

inline Value Value::where_prov(Value data, std::optional<WhereProvAnnot> annot) {
  if (!data.is_scalar()) fail(Errc::EvalType, "where-provenance attaches to scalar values only");
  auto r = std::make_shared<Rep>();
  r->kind = Kind::WhereProv;
  r->payload = std::move(data);
  r->annot = std::move(annot);
  return Value(std::move(r));
}

inline Value Value::lineage_row(Value data, LineageSet entries) {
  auto r = std::make_shared<Rep>();
  r->kind = Kind::Lineage;
  r->payload = std::move(data);
  r->entries = std::move(entries);
  return Value(std::move(r));
}

inline Value Value::prov_annot(std::optional<WhereProvAnnot> annot) {
  auto r = std::make_shared<Rep>();
  r->kind = Kind::ProvAnnot;
  r->annot = std::move(annot);
  return Value(std::move(r));
}

inline Value::Kind Value::kind() const { return rep_->kind; }
inline bool Value::as_bool() const { return rep_->b; }
inline std::int64_t Value::as_int() const { return rep_->i; }
inline const std::string& Value::as_str() const { return rep_->s; }
inline const std::vector<Value>& Value::parts() const { return rep_->seq; }
inline const Value& Value::data() const { return *rep_->payload; }
inline const std::optional<WhereProvAnnot>& Value::annot() const { return rep_->annot; }
inline const LineageSet& Value::entries() const { return rep_->entries; }

inline int compare(const Value& a, const Value& b) {
  auto rank = [](Value::Kind k) { return static_cast<int>(k); };
  if (a.kind() != b.kind()) return rank(a.kind()) < rank(b.kind()) ? -1 : 1;
  switch (a.kind()) {
    case Value::Kind::Unit: return 0;
    case Value::Kind::Bool: return a.as_bool() == b.as_bool() ? 0 : (a.as_bool() ? 1 : -1);
    case Value::Kind::Int:
      return a.as_int() == b.as_int() ? 0 : (a.as_int() < b.as_int() ? -1 : 1);
    case Value::Kind::Str: {
      int c = a.as_str().compare(b.as_str());
      return c == 0 ? 0 : (c < 0 ? -1 : 1);
    }
    case Value::Kind::Tuple:
    case Value::Kind::List: {
      const auto& xs = a.parts();
      const auto& ys = b.parts();
      size_t n = std::min(xs.size(), ys.size());
      for (size_t i = 0; i < n; ++i)
        if (int c = compare(xs[i], ys[i])) return c;
      if (xs.size() == ys.size()) return 0;
      return xs.size() < ys.size() ? -1 : 1;
    }
    case Value::Kind::WhereProv: {
      if (int c = compare(a.data(), b.data())) return c;
      bool ha = a.annot().has_value(), hb = b.annot().has_value();
      if (ha != hb) return ha ? 1 : -1;
      if (!ha) return 0;
      return compare(*a.annot(), *b.annot());
    }
    case Value::Kind::Lineage: {
      if (int c = compare(a.data(), b.data())) return c;
      const auto& xs = a.entries().entries();
      const auto& ys = b.entries().entries();
      size_t n = std::min(xs.size(), ys.size());
      for (size_t i = 0; i < n; ++i)
        if (int c = compare(xs[i], ys[i])) return c;
      if (xs.size() == ys.size()) return 0;
      return xs.size() < ys.size() ? -1 : 1;
    }
    case Value::Kind::ProvAnnot: {
      bool ha = a.annot().has_value(), hb = b.annot().has_value();
      if (ha != hb) return ha ? 1 : -1;
      if (!ha) return 0;
      return compare(*a.annot(), *b.annot());
    }
  }
  return 0;
}

}  // namespace provlq
