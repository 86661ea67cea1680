#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "provlq/catalog.hpp"
#include "provlq/expr.hpp"
#include "provlq/lineage.hpp"
#include "provlq/surface.hpp"
#include "provlq/typecheck.hpp"
#include "provlq/whereprov.hpp"

namespace provlq {

using ValueEnv = std::map<std::string, Value>;

// ---------------------------------------------------------------------------
// Call-by-value list-semantics evaluator. Annotated values are constructed
// only by annotation and emptyProv nodes; table scans yield plain rows in
// file order.
// ---------------------------------------------------------------------------

namespace detail {

struct Frame {
  const Frame* parent = nullptr;
  const std::string* name = nullptr;
  const Value* value = nullptr;

  const Value* lookup(const std::string& n) const {
    for (const Frame* f = this; f; f = f->parent)
      if (f->name && *f->name == n) return f->value;
    return nullptr;
  }
};

class Evaluator {
public:
  explicit Evaluator(const Database& db) : db_(db) {}

  Value eval(const ExprRef& e, const Frame* env) {
    return std::visit([&](const auto& n) { return node(n, env); }, e->node);
  }

private:
  Value node(const ConstE& n, const Frame*) { return n.value; }

  Value node(const VarE& n, const Frame* env) {
    if (const Value* v = env ? env->lookup(n.name) : nullptr) return *v;
    fail(Errc::EvalType, "unbound variable '" + n.name + "' during evaluation");
  }

  Value node(const UnitE&, const Frame*) { return Value::unit(); }

  Value node(const ListE& n, const Frame* env) {
    std::vector<Value> elems;
    elems.reserve(n.elems.size());
    for (const auto& x : n.elems) elems.push_back(eval(x, env));
    return Value::list(std::move(elems));
  }

  Value node(const TupleE& n, const Frame* env) {
    std::vector<Value> parts;
    parts.reserve(n.elems.size());
    for (const auto& x : n.elems) parts.push_back(eval(x, env));
    return Value::tuple(std::move(parts));
  }

  Value node(const LamE&, const Frame*) {
    fail(Errc::EvalType, "a lambda can only appear as a map/concatMap argument");
  }

  Value node(const TableE& n, const Frame*) {
    if (contains_provenance(n.logical_row))
      fail(Errc::EvalType, "table '" + n.decl->name +
                               "' still has unmaterialized provenance annotations; run the "
                               "where-provenance transformation first");
    return Value::list(db_.rows(n.decl->name));
  }

  Value node(const AppE& n, const Frame* env) {
    switch (n.fn.kind) {
      case BuiltinFn::Kind::ConcatMap:
      case BuiltinFn::Kind::Map: {
        const auto* lam = get_node<LamE>(n.args[0]);
        if (!lam) fail(Errc::EvalType, "map/concatMap over a non-lambda");
        Value xs = eval(n.args[1], env);
        expect_list(xs);
        std::vector<Value> out;
        for (const Value& x : xs.parts()) {
          Frame frame{env, &lam->param, &x};
          Value r = eval(lam->body, &frame);
          if (n.fn.kind == BuiltinFn::Kind::Map) {
            out.push_back(std::move(r));
          } else {
            expect_list(r);
            for (const Value& y : r.parts()) out.push_back(y);
          }
        }
        return Value::list(std::move(out));
      }
      case BuiltinFn::Kind::Append: {
        Value a = eval(n.args[0], env);
        Value b = eval(n.args[1], env);
        expect_list(a);
        expect_list(b);
        std::vector<Value> out = a.parts();
        out.insert(out.end(), b.parts().begin(), b.parts().end());
        return Value::list(std::move(out));
      }
      case BuiltinFn::Kind::Reverse: {
        Value a = eval(n.args[0], env);
        expect_list(a);
        std::vector<Value> out(a.parts().rbegin(), a.parts().rend());
        return Value::list(std::move(out));
      }
      case BuiltinFn::Kind::Guard: {
        Value b = eval(n.args[0], env);
        if (b.kind() != Value::Kind::Bool) fail(Errc::EvalType, "guard on a non-boolean");
        if (b.as_bool()) return Value::list({Value::unit()});
        return Value::list({});
      }
      case BuiltinFn::Kind::Cons: {
        Value x = eval(n.args[0], env);
        Value xs = eval(n.args[1], env);
        expect_list(xs);
        std::vector<Value> out;
        out.reserve(xs.parts().size() + 1);
        out.push_back(std::move(x));
        out.insert(out.end(), xs.parts().begin(), xs.parts().end());
        return Value::list(std::move(out));
      }
      case BuiltinFn::Kind::Zip: {
        Value a = eval(n.args[0], env);
        Value b = eval(n.args[1], env);
        expect_list(a);
        expect_list(b);
        size_t len = std::min(a.parts().size(), b.parts().size());
        std::vector<Value> out;
        out.reserve(len);
        for (size_t i = 0; i < len; ++i)
          out.push_back(Value::tuple({a.parts()[i], b.parts()[i]}));
        return Value::list(std::move(out));
      }
      case BuiltinFn::Kind::TupleProj: {
        Value t = eval(n.args[0], env);
        if (t.kind() != Value::Kind::Tuple ||
            n.fn.index < 1 || static_cast<size_t>(n.fn.index) > t.parts().size())
          fail(Errc::EvalType, "bad component projection");
        return t.parts()[n.fn.index - 1];
      }
    }
    fail(Errc::EvalType, "unknown builtin");
  }

  Value node(const AnnotE& n, const Frame* env) {
    Value body = eval(n.body, env);
    return std::visit(
        [&](const auto& a) -> Value {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, BottomAnnot>) {
            return Value::lineage_row(body, LineageSet{});
          } else if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
            return Value::where_prov(body, WhereProvAnnot{a.table, a.column, eval(a.key, env)});
          } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
            return Value::lineage_row(body, entries(a, env));
          } else {
            return Value::lineage_row(body, operand(Annot{a}, env));
          }
        },
        n.annot.node);
  }

  LineageSet entries(const LineageAnnotExpr& a, const Frame* env) {
    Value v = eval(a.entries, env);
    expect_list(v);
    std::vector<LineageEntry> out;
    out.reserve(v.parts().size());
    for (const Value& pair : v.parts()) {
      if (pair.kind() != Value::Kind::Tuple || pair.parts().size() != 2 ||
          pair.parts()[0].kind() != Value::Kind::Str)
        fail(Errc::EvalType, "lineage entry must be a (table, key) pair");
      out.push_back(LineageEntry{pair.parts()[0].as_str(), pair.parts()[1]});
    }
    return LineageSet::from(std::move(out));
  }

  LineageSet operand(const Annot& a, const Frame* env) {
    return std::visit(
        [&](const auto& n) -> LineageSet {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BottomAnnot>) {
            return LineageSet{};
          } else if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
            fail(Errc::EvalType, "⊕ combines lineage annotations only");
          } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
            return entries(n, env);
          } else {
            return operand(*n.lhs, env).union_with(operand(*n.rhs, env));
          }
        },
        a.node);
  }

  Value node(const DataProjE& n, const Frame* env) {
    Value v = eval(n.body, env);
    if (v.kind() != Value::Kind::WhereProv && v.kind() != Value::Kind::Lineage)
      fail(Errc::EvalType, ".data on an unannotated value");
    return v.data();
  }

  Value node(const ProvProjE& n, const Frame* env) {
    Value v = eval(n.body, env);
    if (v.kind() == Value::Kind::WhereProv) return Value::prov_annot(v.annot());
    if (v.kind() == Value::Kind::Lineage) {
      std::vector<Value> pairs;
      for (const auto& e : v.entries().entries())
        pairs.push_back(Value::tuple({Value::str(e.table), e.key}));
      return Value::list(std::move(pairs));
    }
    fail(Errc::EvalType, ".prov on an unannotated value");
  }

  Value node(const EmptyProvE& n, const Frame* env) {
    return Value::where_prov(eval(n.body, env), std::nullopt);
  }

  Value node(const ScalarOpE& n, const Frame* env) {
    switch (n.op) {
      case ScalarOp::Eq: {
        Value a = eval(n.args[0], env);
        Value b = eval(n.args[1], env);
        if (!a.is_scalar() || !b.is_scalar())
          fail(Errc::EvalType, "== compares scalar values only");
        return Value::boolean(a == b);
      }
      case ScalarOp::And:
        return Value::boolean(truth(eval(n.args[0], env)) && truth(eval(n.args[1], env)));
      case ScalarOp::Or:
        return Value::boolean(truth(eval(n.args[0], env)) || truth(eval(n.args[1], env)));
      case ScalarOp::Not: return Value::boolean(!truth(eval(n.args[0], env)));
    }
    fail(Errc::EvalType, "unknown scalar operator");
  }

  static bool truth(const Value& v) {
    if (v.kind() != Value::Kind::Bool) fail(Errc::EvalType, "expected a boolean");
    return v.as_bool();
  }

  static void expect_list(const Value& v) {
    if (v.kind() != Value::Kind::List) fail(Errc::EvalType, "expected a list value");
  }

  const Database& db_;
};

}  // namespace detail

inline Value eval(const ExprRef& expr, const Database& db, const ValueEnv& env = {}) {
  detail::Evaluator ev(db);
  std::vector<detail::Frame> frames;
  frames.reserve(env.size());
  const detail::Frame* top = nullptr;
  for (const auto& [name, value] : env) {
    frames.push_back(detail::Frame{top, &name, &value});
    top = &frames.back();
  }
  return ev.eval(expr, top);
}

// ---------------------------------------------------------------------------
// Canonical JSON result format: scalars as JSON scalars, tuples and lists as
// arrays, annotated cells as {"data":..., "prov":...}, annotated rows as
// {"data":..., "lineage":[{"table":...,"key":...}...]} with entries sorted by
// (table, key). Compound keys render as arrays. The top-level list carries a
// 1-based "row" index per element.
// ---------------------------------------------------------------------------

using json = nlohmann::ordered_json;

inline json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Unit: return nullptr;
    case Value::Kind::Bool: return v.as_bool();
    case Value::Kind::Int: return v.as_int();
    case Value::Kind::Str: return v.as_str();
    case Value::Kind::Tuple:
    case Value::Kind::List: {
      json arr = json::array();
      for (const auto& x : v.parts()) arr.push_back(value_to_json(x));
      return arr;
    }
    case Value::Kind::WhereProv: {
      json obj;
      obj["data"] = value_to_json(v.data());
      if (v.annot()) {
        json prov;
        prov["table"] = v.annot()->table;
        prov["column"] = v.annot()->column;
        prov["key"] = value_to_json(v.annot()->key);
        obj["prov"] = prov;
      } else {
        obj["prov"] = nullptr;
      }
      return obj;
    }
    case Value::Kind::Lineage: {
      json obj;
      obj["data"] = value_to_json(v.data());
      json lin = json::array();
      for (const auto& e : v.entries().entries()) {
        json entry;
        entry["table"] = e.table;
        entry["key"] = value_to_json(e.key);
        lin.push_back(entry);
      }
      obj["lineage"] = lin;
      return obj;
    }
    case Value::Kind::ProvAnnot: {
      if (!v.annot()) return nullptr;
      json prov;
      prov["table"] = v.annot()->table;
      prov["column"] = v.annot()->column;
      prov["key"] = value_to_json(v.annot()->key);
      return prov;
    }
  }
  return nullptr;
}

inline json result_to_json(const Value& result) {
  if (result.kind() != Value::Kind::List) return value_to_json(result);
  json rows = json::array();
  int index = 1;
  for (const auto& elem : result.parts()) {
    json row;
    row["row"] = index++;
    row["value"] = value_to_json(elem);
    rows.push_back(row);
  }
  return rows;
}

inline std::string render_result(const Value& result) { return result_to_json(result).dump(2); }

// Replace every annotated value by its data component, recursively.
inline Value strip_provenance(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Tuple:
    case Value::Kind::List: {
      std::vector<Value> out;
      out.reserve(v.parts().size());
      for (const auto& x : v.parts()) out.push_back(strip_provenance(x));
      return v.kind() == Value::Kind::Tuple ? Value::tuple(std::move(out))
                                            : Value::list(std::move(out));
    }
    case Value::Kind::WhereProv:
    case Value::Kind::Lineage: return strip_provenance(v.data());
    default: return v;
  }
}

// Checks that every annotation in a result identifies real data: a
// where-provenance triple must name an existing cell holding exactly the
// annotated value, and every lineage entry must name an existing row.
inline bool validate_provenance(const Value& v, const Database& db, std::string* why = nullptr) {
  auto report = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  switch (v.kind()) {
    case Value::Kind::Tuple:
    case Value::Kind::List: {
      for (const auto& x : v.parts())
        if (!validate_provenance(x, db, why)) return false;
      return true;
    }
    case Value::Kind::WhereProv:
    case Value::Kind::ProvAnnot: {
      if (v.annot()) {
        const auto& a = *v.annot();
        auto row = db.find_row(a.table, a.key);
        if (!row) return report("no row in '" + a.table + "' for an annotation key");
        int idx = db.decl(a.table)->column_index(a.column);
        if (idx == 0) return report("annotation names unknown column '" + a.column + "'");
        if (v.kind() == Value::Kind::WhereProv && !(row->parts()[idx - 1] == v.data()))
          return report("annotated value differs from cell " + a.table + "." + a.column);
      }
      if (v.kind() == Value::Kind::WhereProv) return validate_provenance(v.data(), db, why);
      return true;
    }
    case Value::Kind::Lineage: {
      for (const auto& e : v.entries().entries())
        if (!db.find_row(e.table, e.key))
          return report("lineage entry names a missing row of '" + e.table + "'");
      return validate_provenance(v.data(), db, why);
    }
    default: return true;
  }
}

// ---------------------------------------------------------------------------
// Pipeline: parse -> desugar -> typecheck -> where-provenance transform ->
// (lineage transform) -> typecheck -> eval.
// ---------------------------------------------------------------------------

enum class Mode { Plain, WhereProv, Lineage };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Plain: return "plain";
    case Mode::WhereProv: return "whereprov";
    case Mode::Lineage: return "lineage";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "plain") return Mode::Plain;
  if (s == "whereprov") return Mode::WhereProv;
  if (s == "lineage") return Mode::Lineage;
  return std::nullopt;
}

struct CompiledQuery {
  surface::Query ast;
  ExprRef desugared;    // after desugaring, before any transformation
  ExprRef transformed;  // after where-prov (and lineage) transformation
  TypeRef type;         // type of `transformed`
  std::optional<KeyType> lineage_key;
};

// Resolves the lineage key type: an explicit choice must match every used
// table; otherwise the shared key type of the used tables is inferred.
inline KeyType resolve_lineage_key(const std::vector<TableDeclRef>& tables,
                                   const std::optional<KeyType>& requested) {
  if (requested) {
    for (const auto& d : tables)
      if (!(d->key_type() == *requested))
        fail(Errc::KeyTypeMismatch,
             "Type of table key does not match type of lineage key: table '" + d->name +
                 "' has key " + d->key_type().to_string() + ", lineage key is " +
                 requested->to_string());
    return *requested;
  }
  if (tables.empty())
    fail(Errc::KeyTypeMismatch,
         "cannot infer the lineage key type: the query uses no tables; pass --key-type");
  return uniform_key_type(tables);
}

inline CompiledQuery compile_query(const surface::Query& q, Mode mode,
                                   const std::optional<KeyType>& key, NameSupply& supply) {
  CompiledQuery out;
  out.ast = q;
  auto tables = surface::tables_used(q);

  if (mode == Mode::Lineage) {
    for (const auto& d : tables)
      if (d->has_flags())
        fail(Errc::CompositionUnsupported,
             "table '" + d->name + "' has where-provenance tracking; lineage cannot be combined "
             "with where-provenance in one query");
  }

  out.desugared = surface::desugar(q, supply, mode == Mode::WhereProv);
  TypeRef plain_ty = typecheck(out.desugared);

  out.transformed = whereprov_transform(out.desugared, supply);

  if (mode == Mode::Lineage) {
    KeyType theta = resolve_lineage_key(tables, key);
    out.lineage_key = theta;
    out.transformed = lineage_transform(out.transformed, theta, supply);
    TypeRef translated = lineage_type_translate(plain_ty, theta);
    out.type = typecheck(out.transformed);
    if (!type_equal(out.type, translated))
      throw std::logic_error("lineage transformation broke type preservation: " +
                             type_to_string(out.type) + " vs " + type_to_string(translated));
  } else {
    out.type = typecheck(out.transformed);
    if (!type_equal(out.type, plain_ty))
      throw std::logic_error("where-provenance transformation changed the query type");
  }
  return out;
}

inline CompiledQuery compile_query(std::string_view src, const Catalog& catalog, Mode mode,
                                   const std::optional<KeyType>& key, NameSupply& supply,
                                   const std::string& origin = "<query>") {
  return compile_query(surface::parse(src, catalog, origin), mode, key, supply);
}

struct PipelineResult {
  CompiledQuery query;
  Value value;
};

inline PipelineResult run_pipeline(const surface::Query& q, const Database& db, Mode mode,
                                   const std::optional<KeyType>& key = std::nullopt) {
  NameSupply supply;
  PipelineResult out{compile_query(q, mode, key, supply), Value()};
  out.value = eval(out.query.transformed, db);
  return out;
}

inline PipelineResult run_pipeline(std::string_view src, const Catalog& catalog,
                                   const Database& db, Mode mode,
                                   const std::optional<KeyType>& key = std::nullopt,
                                   const std::string& origin = "<query>") {
  return run_pipeline(surface::parse(src, catalog, origin), db, mode, key);
}

}  // namespace provlq
