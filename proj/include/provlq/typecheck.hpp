#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "provlq/expr.hpp"
#include "provlq/types.hpp"

namespace provlq {

using TypeEnv = std::map<std::string, TypeRef>;

namespace detail {

class TypeChecker {
public:
  explicit TypeChecker(TypeEnv env) : env_(std::move(env)) {}

  TypeRef check(const ExprRef& e) {
    if (!e) reject(Errc::TypeMismatch, "null expression");
    return std::visit([&](const auto& n) { return node(n); }, e->node);
  }

private:
  TypeRef node(const ConstE& n) {
    if (!is_primitive(n.type)) reject(Errc::TypeMismatch, "constant with non-primitive type");
    return n.type;
  }

  TypeRef node(const VarE& n) {
    auto it = env_.find(n.name);
    if (it == env_.end()) reject(Errc::UnboundVariable, "unbound variable '" + n.name + "'");
    if (n.type && !type_equal(n.type, it->second))
      reject(Errc::TypeMismatch, "variable '" + n.name + "' annotated " + type_to_string(n.type) +
                                     " but bound at " + type_to_string(it->second));
    return it->second;
  }

  TypeRef node(const UnitE&) { return unit_type(); }

  TypeRef node(const ListE& n) {
    if (n.elems.empty())
      reject(Errc::TypeMismatch, "cannot determine the element type of an empty list literal");
    TypeRef elem = at("[0]", [&] { return check(n.elems[0]); });
    for (size_t i = 1; i < n.elems.size(); ++i) {
      TypeRef t = at("[" + std::to_string(i) + "]", [&] { return check(n.elems[i]); });
      if (!type_equal(elem, t))
        reject(Errc::TypeMismatch, "list literal mixes " + type_to_string(elem) + " and " +
                                       type_to_string(t));
    }
    return list_type(elem);
  }

  TypeRef node(const TupleE& n) {
    if (n.elems.size() < 2 || n.elems.size() > 16)
      reject(Errc::TypeMismatch, "tuple arity must be between 2 and 16");
    std::vector<TypeRef> parts;
    for (size_t i = 0; i < n.elems.size(); ++i)
      parts.push_back(at("." + std::to_string(i + 1), [&] { return check(n.elems[i]); }));
    return tuple_type(std::move(parts));
  }

  TypeRef node(const LamE& n) {
    auto saved = bind(n.param, n.param_type);
    TypeRef body = at("lam(" + n.param + ")", [&] { return check(n.body); });
    unbind(n.param, saved);
    return arrow_type(n.param_type, body);
  }

  TypeRef node(const TableE& n) { return list_type(n.logical_row); }

  TypeRef node(const AppE& n) {
    switch (n.fn.kind) {
      case BuiltinFn::Kind::ConcatMap:
      case BuiltinFn::Kind::Map: {
        expect_arity(n, 2);
        TypeRef f = arg(n, 0);
        TypeRef xs = arg(n, 1);
        if (f->kind != Type::Kind::Arrow)
          reject(Errc::TypeMismatch, std::string(builtin_name(n.fn.kind)) + " expects a function");
        TypeRef elem = elem_of(xs, builtin_name(n.fn.kind));
        if (!type_equal(f->from, elem))
          reject(Errc::TypeMismatch, std::string(builtin_name(n.fn.kind)) + ": function takes " +
                                         type_to_string(f->from) + " but list holds " +
                                         type_to_string(elem));
        if (n.fn.kind == BuiltinFn::Kind::Map) return list_type(f->to);
        if (f->to->kind != Type::Kind::List)
          reject(Errc::TypeMismatch, "concatMap: function must return a list, got " +
                                         type_to_string(f->to));
        return f->to;
      }
      case BuiltinFn::Kind::Append: {
        expect_arity(n, 2);
        TypeRef xs = arg(n, 0);
        TypeRef ys = arg(n, 1);
        elem_of(xs, "append");
        if (!type_equal(xs, ys))
          reject(Errc::TypeMismatch, "append: " + type_to_string(xs) + " vs " + type_to_string(ys));
        return xs;
      }
      case BuiltinFn::Kind::Reverse: {
        expect_arity(n, 1);
        TypeRef xs = arg(n, 0);
        elem_of(xs, "reverse");
        return xs;
      }
      case BuiltinFn::Kind::Guard: {
        expect_arity(n, 1);
        TypeRef b = arg(n, 0);
        if (!is_prim(b, Prim::Bool))
          reject(Errc::TypeMismatch, "guard expects Bool, got " + type_to_string(b));
        return list_type(unit_type());
      }
      case BuiltinFn::Kind::Cons: {
        expect_arity(n, 2);
        TypeRef x = arg(n, 0);
        TypeRef xs = arg(n, 1);
        TypeRef elem = elem_of(xs, "cons");
        if (!type_equal(x, elem))
          reject(Errc::TypeMismatch,
                 "cons: element " + type_to_string(x) + " vs list of " + type_to_string(elem));
        return xs;
      }
      case BuiltinFn::Kind::Zip: {
        expect_arity(n, 2);
        TypeRef a = elem_of(arg(n, 0), "zip");
        TypeRef b = elem_of(arg(n, 1), "zip");
        return list_type(tuple_type({a, b}));
      }
      case BuiltinFn::Kind::TupleProj: {
        expect_arity(n, 1);
        TypeRef t = arg(n, 0);
        if (t->kind == Type::Kind::WhereProv || t->kind == Type::Kind::Lineage)
          reject(Errc::AnnotationMisuse,
                 "cannot project a component of an annotated value; project .data first");
        if (t->kind != Type::Kind::Tuple)
          reject(Errc::TypeMismatch, "component projection on " + type_to_string(t));
        if (n.fn.index < 1 || static_cast<size_t>(n.fn.index) > t->parts.size())
          reject(Errc::TypeMismatch, "component index " + std::to_string(n.fn.index) +
                                         " out of range for " + type_to_string(t));
        return t->parts[n.fn.index - 1];
      }
    }
    reject(Errc::TypeMismatch, "unknown builtin");
  }

  TypeRef node(const AnnotE& n) {
    TypeRef body = at("annot.body", [&] { return check(n.body); });
    return std::visit(
        [&](const auto& a) -> TypeRef {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, BottomAnnot>) {
            return lineage_result(body, n.key);
          } else if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
            if (!is_primitive(body))
              reject(Errc::AnnotationMisuse,
                     "where-provenance attaches to primitive values, not " + type_to_string(body));
            TypeRef k = at("annot.key", [&] { return check(a.key); });
            if (!type_equal(k, key_type_as_type(n.key)))
              reject(Errc::TypeMismatch, "annotation key has type " + type_to_string(k) +
                                             ", expected " + n.key.to_string());
            return where_prov_type(body, n.key);
          } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
            check_lineage_annot(a, n.key);
            return lineage_result(body, n.key);
          } else {
            check_lineage_operand(*a.lhs, n.key);
            check_lineage_operand(*a.rhs, n.key);
            return lineage_result(body, n.key);
          }
        },
        n.annot.node);
  }

  TypeRef node(const DataProjE& n) {
    TypeRef t = at(".data", [&] { return check(n.body); });
    if (t->kind == Type::Kind::WhereProv || t->kind == Type::Kind::Lineage) return t->base;
    reject(Errc::AnnotationMisuse, ".data projection on unannotated " + type_to_string(t));
  }

  TypeRef node(const ProvProjE& n) {
    TypeRef t = at(".prov", [&] { return check(n.body); });
    if (t->kind == Type::Kind::WhereProv) return where_prov_annot_type(*t->key);
    if (t->kind == Type::Kind::Lineage) return lineage_entries_type(*t->key);
    reject(Errc::AnnotationMisuse, ".prov projection on unannotated " + type_to_string(t));
  }

  TypeRef node(const EmptyProvE& n) {
    TypeRef t = at("emptyProv", [&] { return check(n.body); });
    if (!is_primitive(t))
      reject(Errc::AnnotationMisuse,
             "blank provenance attaches to primitive values, not " + type_to_string(t));
    return where_prov_type(t, n.key);
  }

  TypeRef node(const ScalarOpE& n) {
    switch (n.op) {
      case ScalarOp::Eq: {
        if (n.args.size() != 2) reject(Errc::TypeMismatch, "== takes two arguments");
        TypeRef a = at("==.lhs", [&] { return check(n.args[0]); });
        TypeRef b = at("==.rhs", [&] { return check(n.args[1]); });
        if (a->kind == Type::Kind::WhereProv || b->kind == Type::Kind::WhereProv)
          reject(Errc::AnnotationMisuse,
                 "cannot compare a provenance-annotated value; project data() first");
        if (!type_equal(a, b))
          reject(Errc::TypeMismatch, "==: " + type_to_string(a) + " vs " + type_to_string(b));
        if (!is_primitive(a))
          reject(Errc::TypeMismatch, "== is defined on primitive types, not " + type_to_string(a));
        return bool_type();
      }
      case ScalarOp::And:
      case ScalarOp::Or: {
        if (n.args.size() != 2) reject(Errc::TypeMismatch, "boolean operator takes two arguments");
        for (const auto& x : n.args) {
          TypeRef t = check(x);
          if (!is_prim(t, Prim::Bool))
            reject(Errc::TypeMismatch, "boolean operator on " + type_to_string(t));
        }
        return bool_type();
      }
      case ScalarOp::Not: {
        if (n.args.size() != 1) reject(Errc::TypeMismatch, "not takes one argument");
        TypeRef t = check(n.args[0]);
        if (!is_prim(t, Prim::Bool)) reject(Errc::TypeMismatch, "not on " + type_to_string(t));
        return bool_type();
      }
    }
    reject(Errc::TypeMismatch, "unknown scalar operator");
  }

  // --- helpers ---

  TypeRef lineage_result(const TypeRef& body, const KeyType& key) {
    if (body->kind == Type::Kind::WhereProv)
      reject(Errc::AnnotationMisuse, "cannot attach lineage to a where-provenance value");
    if (body->kind == Type::Kind::Lineage)
      reject(Errc::AnnotationMisuse, "value is already lineage-annotated");
    return lineage_annotated_type(body, key);
  }

  static TypeRef lineage_entries_type(const KeyType& key) {
    return list_type(tuple_type({str_type(), key_type_as_type(key)}));
  }

  void check_lineage_annot(const LineageAnnotExpr& a, const KeyType& key) {
    TypeRef t = at("annot.entries", [&] { return check(a.entries); });
    if (!type_equal(t, lineage_entries_type(key)))
      reject(Errc::TypeMismatch, "lineage entries have type " + type_to_string(t) + ", expected " +
                                     type_to_string(lineage_entries_type(key)));
  }

  void check_lineage_operand(const Annot& a, const KeyType& key) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BottomAnnot>) {
            // empty lineage
          } else if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
            reject(Errc::AnnotationMisuse, "⊕ combines lineage annotations only");
          } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
            check_lineage_annot(n, key);
          } else {
            check_lineage_operand(*n.lhs, key);
            check_lineage_operand(*n.rhs, key);
          }
        },
        a.node);
  }

  void expect_arity(const AppE& n, size_t k) {
    if (n.args.size() != k)
      reject(Errc::TypeMismatch, std::string(builtin_name(n.fn.kind)) + " takes " +
                                     std::to_string(k) + " arguments");
  }

  TypeRef arg(const AppE& n, size_t i) {
    return at(std::string(builtin_name(n.fn.kind)) + ".arg" + std::to_string(i + 1),
              [&] { return check(n.args[i]); });
  }

  TypeRef elem_of(const TypeRef& t, const char* what) {
    if (t->kind != Type::Kind::List)
      reject(Errc::TypeMismatch, std::string(what) + " expects a list, got " + type_to_string(t));
    return t->elem;
  }

  template <typename F>
  TypeRef at(std::string step, F f) {
    path_.push_back(std::move(step));
    TypeRef t = f();
    path_.pop_back();
    return t;
  }

  [[noreturn]] void reject(Errc code, const std::string& message) {
    std::string path;
    for (const auto& p : path_) {
      if (!path.empty()) path += ".";
      path += p;
    }
    fail(code, message, path);
  }

  std::optional<TypeRef> bind(const std::string& name, const TypeRef& ty) {
    std::optional<TypeRef> old;
    if (auto it = env_.find(name); it != env_.end()) old = it->second;
    env_[name] = ty;
    return old;
  }

  void unbind(const std::string& name, const std::optional<TypeRef>& old) {
    if (old)
      env_[name] = *old;
    else
      env_.erase(name);
  }

  TypeEnv env_;
  std::vector<std::string> path_;
};

}  // namespace detail

// Returns the unique type of `expr` under `env`. Deterministic; throws Error
// with a path into the expression on failure.
inline TypeRef typecheck(const ExprRef& expr, const TypeEnv& env = {}) {
  detail::TypeChecker checker(env);
  return checker.check(expr);
}

}  // namespace provlq
