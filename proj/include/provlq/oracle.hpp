#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "provlq/catalog.hpp"
#include "provlq/eval.hpp"
#include "provlq/surface.hpp"

namespace provlq::oracle {

// ---------------------------------------------------------------------------
// Independent annotation-propagation semantics, used to cross-check the
// query transformations without trusting them: every table row is born with a
// tag identifying it, every generator iteration unions the consumed element's
// tag into each produced element's tag, guards contribute nothing, and values
// created by the query itself are born untagged. Where-provenance cells are
// born on flagged columns and travel with the scalar.
//
// This evaluator interprets the surface comprehension directly; it shares the
// parser, catalog, and Value types with the rest of the library but none of
// the desugaring, rewriting, or core-evaluation code.
// ---------------------------------------------------------------------------

namespace detail {

struct OV;
using OVRef = std::shared_ptr<const OV>;

struct OElem {
  OVRef v;
  LineageSet tag;
};

struct OV {
  enum class Kind { Unit, Bool, Int, Str, Tuple, List, WPCell, WPAnnot };
  Kind kind = Kind::Unit;
  bool b = false;
  std::int64_t i = 0;
  std::string s;
  std::vector<OVRef> tuple;
  std::vector<OElem> list;
  OVRef cell;                           // WPCell payload (scalar)
  std::optional<WhereProvAnnot> annot;  // WPCell / WPAnnot
};

inline std::shared_ptr<OV> onew(OV::Kind k) {
  auto v = std::make_shared<OV>();
  v->kind = k;
  return v;
}

inline OVRef ounit() { return onew(OV::Kind::Unit); }
inline OVRef obool(bool b) {
  auto v = onew(OV::Kind::Bool);
  v->b = b;
  return v;
}
inline OVRef oint(std::int64_t i) {
  auto v = onew(OV::Kind::Int);
  v->i = i;
  return v;
}
inline OVRef ostr(std::string s) {
  auto v = onew(OV::Kind::Str);
  v->s = std::move(s);
  return v;
}

inline int ocompare(const OVRef& a, const OVRef& b) {
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  switch (a->kind) {
    case OV::Kind::Unit: return 0;
    case OV::Kind::Bool: return a->b == b->b ? 0 : (a->b ? 1 : -1);
    case OV::Kind::Int: return a->i == b->i ? 0 : (a->i < b->i ? -1 : 1);
    case OV::Kind::Str: {
      int c = a->s.compare(b->s);
      return c == 0 ? 0 : (c < 0 ? -1 : 1);
    }
    default: fail(Errc::EvalType, "oracle: == compares scalar values only");
  }
}

// Oracle result shaped like the pipeline output. In lineage mode every list
// element is wrapped with its accumulated tag.
inline Value to_value(const OVRef& v, bool lineage_mode) {
  switch (v->kind) {
    case OV::Kind::Unit: return Value::unit();
    case OV::Kind::Bool: return Value::boolean(v->b);
    case OV::Kind::Int: return Value::integer(v->i);
    case OV::Kind::Str: return Value::str(v->s);
    case OV::Kind::Tuple: {
      std::vector<Value> parts;
      parts.reserve(v->tuple.size());
      for (const auto& x : v->tuple) parts.push_back(to_value(x, lineage_mode));
      return Value::tuple(std::move(parts));
    }
    case OV::Kind::List: {
      std::vector<Value> elems;
      elems.reserve(v->list.size());
      for (const auto& e : v->list) {
        Value inner = to_value(e.v, lineage_mode);
        elems.push_back(lineage_mode ? Value::lineage_row(inner, e.tag) : inner);
      }
      return Value::list(std::move(elems));
    }
    case OV::Kind::WPCell: return Value::where_prov(to_value(v->cell, false), v->annot);
    case OV::Kind::WPAnnot: return Value::prov_annot(v->annot);
  }
  return Value::unit();
}

class OracleEval {
public:
  OracleEval(const Database& db, bool honor_whereprov) : db_(db), honor_wp_(honor_whereprov) {}

  OVRef eval_query(const surface::Query& q) {
    Scope scope;
    return eval(*q, scope).v;
  }

private:
  struct Entry {
    OVRef v;
    TableDeclRef schema;
  };
  using Scope = std::map<std::string, Entry>;

  struct Res {
    OVRef v;
    TableDeclRef value_schema;
    TableDeclRef elem_schema;
  };

  Res eval(const surface::SExpr& e, Scope& scope) {
    using K = surface::SExpr::Kind;
    Res out;
    switch (e.kind) {
      case K::Str: out.v = ostr(e.text); return out;
      case K::Int: out.v = oint(e.int_val); return out;
      case K::Bool: out.v = obool(e.bool_val); return out;
      case K::Unit: out.v = ounit(); return out;
      case K::Var: {
        auto it = scope.find(e.text);
        if (it == scope.end()) fail(Errc::EvalType, "oracle: unbound variable '" + e.text + "'");
        out.v = it->second.v;
        out.value_schema = it->second.schema;
        return out;
      }
      case K::Table: return table(e.decl);
      case K::Tuple: {
        auto v = onew(OV::Kind::Tuple);
        for (const auto& a : e.args) v->tuple.push_back(eval(*a, scope).v);
        out.v = v;
        return out;
      }
      case K::Field: {
        Res base = eval(*e.base, scope);
        if (!base.value_schema || base.v->kind != OV::Kind::Tuple)
          fail(Errc::UnknownField, "oracle: no field '" + e.text + "' on this value");
        int idx = base.value_schema->column_index(e.text);
        if (idx == 0)
          fail(Errc::UnknownField, "oracle: table '" + base.value_schema->name +
                                       "' has no column '" + e.text + "'");
        out.v = base.v->tuple[idx - 1];
        return out;
      }
      case K::Call: return call(e, scope);
      case K::Op: return op(e, scope);
      case K::Comp: {
        auto v = onew(OV::Kind::List);
        TableDeclRef elem_schema;
        comp(e, 0, scope, LineageSet{}, v->list, elem_schema);
        out.v = v;
        out.elem_schema = elem_schema;
        return out;
      }
    }
    fail(Errc::EvalType, "oracle: malformed expression");
  }

  Res table(const TableDeclRef& decl) {
    auto v = onew(OV::Kind::List);
    for (const Value& row : db_.rows(decl->name)) {
      Value key = key_projection(*decl, row);
      auto tuple = onew(OV::Kind::Tuple);
      for (size_t i = 0; i < row.parts().size(); ++i) {
        OVRef cell = from_scalar(row.parts()[i]);
        if (honor_wp_ && decl->is_flagged(decl->columns[i].first)) {
          auto wp = onew(OV::Kind::WPCell);
          wp->cell = cell;
          wp->annot = WhereProvAnnot{decl->name, decl->columns[i].first, key};
          cell = wp;
        }
        tuple->tuple.push_back(cell);
      }
      v->list.push_back(OElem{tuple, LineageSet::single(LineageEntry{decl->name, key})});
    }
    Res out;
    out.v = v;
    out.elem_schema = decl;
    return out;
  }

  static OVRef from_scalar(const Value& v) {
    switch (v.kind()) {
      case Value::Kind::Int: return oint(v.as_int());
      case Value::Kind::Str: return ostr(v.as_str());
      case Value::Kind::Bool: return obool(v.as_bool());
      case Value::Kind::Unit: return ounit();
      default: fail(Errc::EvalType, "oracle: table cell is not scalar");
    }
  }

  // Comprehension: qualifiers left to right; each generator iteration unions
  // the consumed element's tag into every element the rest produces.
  void comp(const surface::SExpr& c, size_t qual_index, Scope& scope, const LineageSet& acc,
            std::vector<OElem>& out, TableDeclRef& elem_schema) {
    if (qual_index == c.quals.size()) {
      Res h = eval(*c.head, scope);
      elem_schema = h.value_schema;
      out.push_back(OElem{h.v, acc});
      return;
    }
    const surface::Qual& q = c.quals[qual_index];
    if (q.is_generator) {
      Res src = eval(*q.expr, scope);
      if (src.v->kind != OV::Kind::List)
        fail(Errc::EvalType, "oracle: generator source is not a list");
      for (const OElem& elem : src.v->list) {
        auto saved = bind(scope, q.var, Entry{elem.v, src.elem_schema});
        comp(c, qual_index + 1, scope, acc.union_with(elem.tag), out, elem_schema);
        unbind(scope, q.var, saved);
      }
      return;
    }
    Res cond = eval(*q.expr, scope);
    if (cond.v->kind != OV::Kind::Bool) fail(Errc::EvalType, "oracle: guard is not boolean");
    if (cond.v->b) comp(c, qual_index + 1, scope, acc, out, elem_schema);
  }

  Res call(const surface::SExpr& e, Scope& scope) {
    using surface::CallFn;
    Res out;
    switch (e.call) {
      case CallFn::Append: {
        Res a = eval(*e.args[0], scope);
        Res b = eval(*e.args[1], scope);
        expect_list(a.v);
        expect_list(b.v);
        auto v = onew(OV::Kind::List);
        v->list = a.v->list;
        v->list.insert(v->list.end(), b.v->list.begin(), b.v->list.end());
        out.v = v;
        if (a.elem_schema && b.elem_schema && a.elem_schema->name == b.elem_schema->name)
          out.elem_schema = a.elem_schema;
        return out;
      }
      case CallFn::Reverse: {
        Res a = eval(*e.args[0], scope);
        expect_list(a.v);
        auto v = onew(OV::Kind::List);
        v->list.assign(a.v->list.rbegin(), a.v->list.rend());
        out.v = v;
        out.elem_schema = a.elem_schema;
        return out;
      }
      case CallFn::Zip: {
        Res a = eval(*e.args[0], scope);
        Res b = eval(*e.args[1], scope);
        expect_list(a.v);
        expect_list(b.v);
        auto v = onew(OV::Kind::List);
        size_t len = std::min(a.v->list.size(), b.v->list.size());
        for (size_t i = 0; i < len; ++i) {
          auto pair = onew(OV::Kind::Tuple);
          pair->tuple = {a.v->list[i].v, b.v->list[i].v};
          v->list.push_back(OElem{pair, a.v->list[i].tag.union_with(b.v->list[i].tag)});
        }
        out.v = v;
        return out;
      }
      case CallFn::Cons: {
        Res h = eval(*e.args[0], scope);
        Res t = eval(*e.args[1], scope);
        expect_list(t.v);
        auto v = onew(OV::Kind::List);
        v->list.push_back(OElem{h.v, LineageSet{}});  // created by the query: blank
        v->list.insert(v->list.end(), t.v->list.begin(), t.v->list.end());
        out.v = v;
        if (t.elem_schema && h.value_schema && h.value_schema->name == t.elem_schema->name)
          out.elem_schema = t.elem_schema;
        return out;
      }
      case CallFn::Data: {
        Res a = eval(*e.args[0], scope);
        if (a.v->kind != OV::Kind::WPCell)
          fail(Errc::EvalType, "oracle: data() on an unannotated value");
        out.v = a.v->cell;
        return out;
      }
      case CallFn::Prov: {
        Res a = eval(*e.args[0], scope);
        if (a.v->kind != OV::Kind::WPCell)
          fail(Errc::EvalType, "oracle: prov() on an unannotated value");
        auto v = onew(OV::Kind::WPAnnot);
        v->annot = a.v->annot;
        out.v = v;
        return out;
      }
      case CallFn::EmptyProv: {
        Res a = eval(*e.args[0], scope);
        auto v = onew(OV::Kind::WPCell);
        v->cell = a.v;
        out.v = v;
        return out;
      }
    }
    fail(Errc::EvalType, "oracle: malformed call");
  }

  Res op(const surface::SExpr& e, Scope& scope) {
    using surface::OpKind;
    Res out;
    switch (e.op) {
      case OpKind::Eq:
        out.v = obool(ocompare(eval(*e.args[0], scope).v, eval(*e.args[1], scope).v) == 0);
        return out;
      case OpKind::And: out.v = obool(truth(e, 0, scope) && truth(e, 1, scope)); return out;
      case OpKind::Or: out.v = obool(truth(e, 0, scope) || truth(e, 1, scope)); return out;
      case OpKind::Not: out.v = obool(!truth(e, 0, scope)); return out;
    }
    fail(Errc::EvalType, "oracle: malformed operator");
  }

  bool truth(const surface::SExpr& e, size_t i, Scope& scope) {
    OVRef v = eval(*e.args[i], scope).v;
    if (v->kind != OV::Kind::Bool) fail(Errc::EvalType, "oracle: expected a boolean");
    return v->b;
  }

  static void expect_list(const OVRef& v) {
    if (v->kind != OV::Kind::List) fail(Errc::EvalType, "oracle: expected a list");
  }

  static std::optional<Entry> bind(Scope& scope, const std::string& name, Entry e) {
    std::optional<Entry> old;
    if (auto it = scope.find(name); it != scope.end()) old = it->second;
    scope[name] = std::move(e);
    return old;
  }

  static void unbind(Scope& scope, const std::string& name, const std::optional<Entry>& old) {
    if (old)
      scope[name] = *old;
    else
      scope.erase(name);
  }

  const Database& db_;
  bool honor_wp_;
};

}  // namespace detail

inline Value oracle_eval_plain(const surface::Query& q, const Database& db) {
  detail::OracleEval ev(db, /*honor_whereprov=*/false);
  return detail::to_value(ev.eval_query(q), /*lineage_mode=*/false);
}

inline Value oracle_eval_whereprov(const surface::Query& q, const Database& db) {
  detail::OracleEval ev(db, /*honor_whereprov=*/true);
  return detail::to_value(ev.eval_query(q), /*lineage_mode=*/false);
}

inline Value oracle_eval_lineage(const surface::Query& q, const Database& db,
                                 const KeyType& key) {
  for (const auto& d : surface::tables_used(q)) {
    if (d->has_flags())
      fail(Errc::CompositionUnsupported,
           "oracle: lineage does not combine with where-provenance");
    if (!(d->key_type() == key))
      fail(Errc::KeyTypeMismatch,
           "Type of table key does not match type of lineage key: table '" + d->name + "'");
  }
  detail::OracleEval ev(db, /*honor_whereprov=*/false);
  return detail::to_value(ev.eval_query(q), /*lineage_mode=*/true);
}

// ---------------------------------------------------------------------------
// Random case generation for differential testing. Deterministic in the seed.
// ---------------------------------------------------------------------------

struct GenBounds {
  int max_tables = 3;
  int max_rows = 8;
  int max_depth = 3;
};

struct FuzzCase {
  std::uint64_t seed = 0;
  Catalog catalog;     // no where-provenance flags
  Catalog catalog_wp;  // same schemas with flags on some unguarded columns
  Database db;
  std::string query_text;
};

namespace detail {

class CaseGen {
public:
  CaseGen(std::uint64_t seed, const GenBounds& bounds) : rng_(seed), bounds_(bounds) {}

  FuzzCase run(std::uint64_t seed) {
    FuzzCase out;
    out.seed = seed;

    int n_tables = 1 + pick(bounds_.max_tables);
    std::vector<TableDecl> decls;
    for (int i = 0; i < n_tables; ++i) decls.push_back(make_decl(i));

    for (const auto& d : decls) out.catalog.add(d);
    for (const auto& d : decls) out.db.add_table(out.catalog.find(d.name), make_rows(d));

    table_names_.clear();
    for (const auto& d : decls) table_names_.push_back(d.name);
    catalog_ = &out.catalog;

    out.query_text = gen_comp(bounds_.max_depth, {}).first;

    // flag columns that no guard compares
    for (auto& d : decls) {
      for (const auto& [label, prim] : d.columns) {
        bool is_key = false;
        for (const auto& k : d.key_columns) is_key |= (k == label);
        if (is_key || guard_used_.count(d.name + "." + label)) continue;
        if (pick(2) == 0) d.where_prov_columns.push_back(label);
      }
      out.catalog_wp.add(d);
    }
    return out;
  }

private:
  using Scoped = std::vector<std::pair<std::string, TableDeclRef>>;

  std::uint64_t pick(std::uint64_t n) { return rng_() % n; }
  bool chance(int percent) { return pick(100) < static_cast<std::uint64_t>(percent); }

  TableDecl make_decl(int i) {
    TableDecl d;
    d.name = "t" + std::to_string(i);
    d.columns.emplace_back(d.name + "_id", Prim::Int);
    int n_cols = 1 + static_cast<int>(pick(3));
    for (int j = 0; j < n_cols; ++j) {
      Prim p = std::array{Prim::Int, Prim::Str, Prim::Bool}[pick(3)];
      d.columns.emplace_back(d.name + "_c" + std::to_string(j), p);
    }
    d.key_columns = {d.name + "_id"};
    return d;
  }

  std::vector<Value> make_rows(const TableDecl& d) {
    static const char* pool[] = {"a", "b", "c", "d", "e"};
    int n = static_cast<int>(pick(bounds_.max_rows + 1));
    std::vector<Value> rows;
    for (int r = 0; r < n; ++r) {
      std::vector<Value> cells;
      for (size_t c = 0; c < d.columns.size(); ++c) {
        if (c == 0) {
          cells.push_back(Value::integer(r));
        } else {
          switch (d.columns[c].second) {
            case Prim::Int: cells.push_back(Value::integer(static_cast<int>(pick(5)))); break;
            case Prim::Str: cells.push_back(Value::str(pool[pick(5)])); break;
            case Prim::Bool: cells.push_back(Value::boolean(pick(2) == 0)); break;
            case Prim::Unit: cells.push_back(Value::unit()); break;
          }
        }
      }
      rows.push_back(Value::tuple(std::move(cells)));
    }
    return rows;
  }

  TableDeclRef random_table() { return catalog_->find(table_names_[pick(table_names_.size())]); }

  // returns (source text, element schema)
  std::pair<std::string, TableDeclRef> gen_source(int depth, const Scoped& scope) {
    std::uint64_t roll = pick(100);
    TableDeclRef t = random_table();
    if (roll < 60 || depth <= 1) return {t->name, t};
    if (roll < 70) return {"append(" + t->name + ", " + t->name + ")", t};
    if (roll < 78) return {"reverse(" + t->name + ")", t};
    if (roll < 86) {
      TableDeclRef u = random_table();
      return {"zip(" + t->name + ", " + u->name + ")", nullptr};
    }
    if (roll < 94) {
      auto nested = gen_comp(depth - 1, scope);
      return nested;
    }
    for (const auto& [var, schema] : scope)
      if (schema) return {"cons(" + var + ", " + schema->name + ")", schema};
    return {t->name, t};
  }

  // (text, schema of elements when the head is a whole row variable)
  std::pair<std::string, TableDeclRef> gen_comp(int depth, Scoped scope) {
    int n_gens = 1 + static_cast<int>(pick(2));
    std::vector<std::string> quals;
    for (int g = 0; g < n_gens; ++g) {
      std::string var = "v" + std::to_string(var_counter_++);
      auto [src, schema] = gen_source(depth, scope);
      quals.push_back(var + " <- " + src);
      scope.emplace_back(var, schema);
    }
    int n_guards = static_cast<int>(pick(3));
    for (int g = 0; g < n_guards; ++g) {
      if (auto guard = gen_guard(scope)) quals.push_back(*guard);
    }
    auto [head, head_schema] = gen_head(depth, scope);
    std::string text = "[ " + head + " | ";
    for (size_t i = 0; i < quals.size(); ++i) {
      if (i) text += ", ";
      text += quals[i];
    }
    text += " ]";
    return {text, head_schema};
  }

  struct Projection {
    std::string text;
    TableDeclRef decl;
    std::string column;
    Prim type;
  };

  std::optional<Projection> random_projection(const Scoped& scope) {
    std::vector<Projection> options;
    for (const auto& [var, schema] : scope) {
      if (!schema) continue;
      for (const auto& [label, prim] : schema->columns)
        options.push_back(Projection{label + "(" + var + ")", schema, label, prim});
    }
    if (options.empty()) return std::nullopt;
    return options[pick(options.size())];
  }

  std::string random_literal(Prim p) {
    static const char* pool[] = {"a", "b", "c", "d", "e"};
    switch (p) {
      case Prim::Int: return std::to_string(pick(5));
      case Prim::Str: return std::string("\"") + pool[pick(5)] + "\"";
      case Prim::Bool: return pick(2) == 0 ? "true" : "false";
      case Prim::Unit: return "()";
    }
    return "0";
  }

  std::optional<std::string> gen_guard(const Scoped& scope) {
    auto lhs = random_projection(scope);
    if (!lhs) return std::nullopt;
    guard_used_.insert(lhs->decl->name + "." + lhs->column);
    std::string rhs;
    if (chance(50)) {
      rhs = random_literal(lhs->type);
    } else {
      // another projection of the same primitive type, if one exists
      std::optional<Projection> other;
      for (int attempt = 0; attempt < 4 && !other; ++attempt) {
        auto candidate = random_projection(scope);
        if (candidate && candidate->type == lhs->type) other = candidate;
      }
      if (other) {
        guard_used_.insert(other->decl->name + "." + other->column);
        rhs = other->text;
      } else {
        rhs = random_literal(lhs->type);
      }
    }
    std::string guard = lhs->text + " == " + rhs;
    if (chance(10)) guard = "not (" + guard + ")";
    return guard;
  }

  std::pair<std::string, TableDeclRef> gen_head(int depth, const Scoped& scope) {
    std::uint64_t roll = pick(100);
    if (roll < 15 && depth > 1) {
      return {gen_comp(depth - 1, scope).first, nullptr};
    }
    if (roll < 35) {  // whole variable: keeps row schema when it has one
      const auto& [var, schema] = scope[pick(scope.size())];
      return {var, schema};
    }
    if (roll < 55) {
      if (auto p = random_projection(scope)) return {p->text, nullptr};
      return {scope[pick(scope.size())].first, nullptr};
    }
    // tuple head
    int n = 2 + static_cast<int>(pick(2));
    std::string text = "(";
    for (int i = 0; i < n; ++i) {
      if (i) text += ", ";
      std::uint64_t kind = pick(10);
      if (kind < 7) {
        if (auto p = random_projection(scope)) {
          text += p->text;
          continue;
        }
      }
      if (kind < 9) {
        text += scope[pick(scope.size())].first;
      } else {
        text += random_literal(std::array{Prim::Int, Prim::Str, Prim::Bool}[pick(3)]);
      }
    }
    return {text + ")", nullptr};
  }

  std::mt19937_64 rng_;
  GenBounds bounds_;
  const Catalog* catalog_ = nullptr;
  std::vector<std::string> table_names_;
  std::set<std::string> guard_used_;
  int var_counter_ = 0;
};

}  // namespace detail

inline FuzzCase gen_random_case(std::uint64_t seed, const GenBounds& bounds = {}) {
  detail::CaseGen gen(seed, bounds);
  return gen.run(seed);
}

// ---------------------------------------------------------------------------
// Differential check: transform-then-evaluate against the oracle, plus the
// erasure and forgery-freedom properties, for one generated case.
// ---------------------------------------------------------------------------

struct Verdict {
  bool ok = true;
  std::string detail;
};

// First divergence between two values, as a dotted path; nullopt when equal.
inline std::optional<std::string> first_divergence(const Value& a, const Value& b,
                                                   const std::string& path = "$") {
  if (a.kind() != b.kind()) return path + ": value kinds differ";
  switch (a.kind()) {
    case Value::Kind::Tuple:
    case Value::Kind::List: {
      if (a.parts().size() != b.parts().size())
        return path + ": lengths differ (" + std::to_string(a.parts().size()) + " vs " +
               std::to_string(b.parts().size()) + ")";
      for (size_t i = 0; i < a.parts().size(); ++i)
        if (auto d = first_divergence(a.parts()[i], b.parts()[i],
                                      path + "[" + std::to_string(i) + "]"))
          return d;
      return std::nullopt;
    }
    case Value::Kind::WhereProv:
    case Value::Kind::Lineage: {
      if (auto d = first_divergence(a.data(), b.data(), path + ".data")) return d;
      if (a.kind() == Value::Kind::Lineage) {
        if (!(a.entries() == b.entries())) return path + ".lineage: entry sets differ";
        return std::nullopt;
      }
      if (!(a == b)) return path + ".prov: annotations differ";
      return std::nullopt;
    }
    default:
      if (!(a == b)) return path + ": " + render_result(a) + " vs " + render_result(b);
      return std::nullopt;
  }
}

inline Verdict differential_check(const FuzzCase& c) {
  auto fail_with = [](std::string detail) { return Verdict{false, std::move(detail)}; };
  try {
    surface::Query q = surface::parse(c.query_text, c.catalog);

    Value plain_pipeline = run_pipeline(q, c.db, Mode::Plain).value;
    Value plain_oracle = oracle_eval_plain(q, c.db);
    if (auto d = first_divergence(plain_pipeline, plain_oracle))
      return fail_with("plain evaluation diverges at " + *d);

    KeyType theta(Prim::Int);
    Value lineage_pipeline = run_pipeline(q, c.db, Mode::Lineage, theta).value;
    Value lineage_oracle = oracle_eval_lineage(q, c.db, theta);
    if (auto d = first_divergence(lineage_pipeline, lineage_oracle))
      return fail_with("lineage diverges at " + *d);

    if (auto d = first_divergence(strip_provenance(lineage_pipeline), plain_pipeline))
      return fail_with("lineage erasure diverges at " + *d);

    std::string why;
    if (!validate_provenance(lineage_pipeline, c.db, &why))
      return fail_with("lineage forgery check: " + why);

    surface::Query qw = surface::parse(c.query_text, c.catalog_wp);
    Value wp_pipeline = run_pipeline(qw, c.db, Mode::WhereProv).value;
    Value wp_oracle = oracle_eval_whereprov(qw, c.db);
    if (auto d = first_divergence(wp_pipeline, wp_oracle))
      return fail_with("where-provenance diverges at " + *d);

    if (auto d = first_divergence(strip_provenance(wp_pipeline), plain_pipeline))
      return fail_with("where-provenance erasure diverges at " + *d);

    if (!validate_provenance(wp_pipeline, c.db, &why))
      return fail_with("where-provenance forgery check: " + why);

    return Verdict{};
  } catch (const std::exception& e) {
    return fail_with(std::string("exception: ") + e.what());
  }
}

}  // namespace provlq::oracle
