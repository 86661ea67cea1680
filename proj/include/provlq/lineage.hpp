#pragma once

#include <variant>
#include <vector>

#include "provlq/catalog.hpp"
#include "provlq/expr.hpp"
#include "provlq/typecheck.hpp"

namespace provlq {

// ---------------------------------------------------------------------------
// Lineage transformation, parameterized by the key type θ shared by all
// tables of the query.
//
// Type translation: primitives map to themselves, tuples componentwise, and
// every list becomes a list of lineage-annotated elements.
// ---------------------------------------------------------------------------

inline TypeRef lineage_type_translate(const TypeRef& ty, const KeyType& key) {
  switch (ty->kind) {
    case Type::Kind::Prim: return ty;
    case Type::Kind::List:
      return list_type(lineage_annotated_type(lineage_type_translate(ty->elem, key), key));
    case Type::Kind::Tuple: {
      std::vector<TypeRef> parts;
      parts.reserve(ty->parts.size());
      for (const auto& p : ty->parts) parts.push_back(lineage_type_translate(p, key));
      return tuple_type(std::move(parts));
    }
    case Type::Kind::WhereProv:
    case Type::Kind::Lineage:
    case Type::Kind::WhereProvAnnot:
      fail(Errc::CompositionUnsupported,
           "lineage cannot be combined with provenance-annotated types: " + type_to_string(ty));
    case Type::Kind::Arrow:
      fail(Errc::UnsupportedConstruct, "lineage type translation applies to data types only");
  }
  fail(Errc::UnsupportedConstruct, "unknown type");
}

namespace detail {

// Term translation. The input must be a plain, well-typed query expression:
// no annotation nodes and no provenance types anywhere.
//
//   table t              => map (λx. x^(t, φ(x))) (table t)
//   concatMap (λf.M) xs  => concatMap (λx. map (λz. z.data^(z.prov ⊕ x.prov))
//                                             L(M)[f := x.data])
//                                     (L(xs))
//   map (λf.M) xs        => as concatMap, with M wrapped in a singleton list
//   zip xs ys            => map (λx. (x.1.data, x.2.data)^(x.1.prov ⊕ x.2.prov))
//                               (zip (L(xs)) (L(ys)))
//   [M1, ..., Mn]        => map (λx. x^⊥) [L(M1), ..., L(Mn)]
//   cons x xs            => cons (L(x)^⊥) (L(xs))
//   guard b              => map (λx. x^⊥) (guard b)
//
// Constants stay fixed; variables keep their name with a translated type;
// append/reverse, tuples, projections, and scalar operators map through
// componentwise. The body of a generator lambda is translated first and the
// fresh variable's data component substituted for the bound variable after,
// so every intermediate term is well-typed.
class LineageRewriter {
public:
  LineageRewriter(KeyType key, NameSupply& supply) : key_(std::move(key)), supply_(supply) {}

  ExprRef walk(const ExprRef& e) {
    return std::visit([&](const auto& n) { return node(e, n); }, e->node);
  }

private:
  ExprRef node(const ExprRef& e, const ConstE&) { return e; }
  ExprRef node(const ExprRef& e, const UnitE&) { return e; }

  ExprRef node(const ExprRef&, const VarE& n) {
    return make_var(n.name, lineage_type_translate(n.type, key_));
  }

  ExprRef node(const ExprRef&, const TableE& n) {
    if (contains_provenance(n.logical_row))
      fail(Errc::CompositionUnsupported,
           "table '" + n.decl->name + "' has where-provenance tracking; lineage cannot be "
           "combined with where-provenance in one query");
    if (!(n.decl->key_type() == key_))
      fail(Errc::KeyTypeMismatch,
           "Type of table key does not match type of lineage key: table '" + n.decl->name +
               "' has key " + n.decl->key_type().to_string() + ", lineage key is " +
               key_.to_string());
    std::string row = supply_.fresh();
    ExprRef row_var = make_var(row, n.logical_row);
    ExprRef annotated = make_annot(
        row_var, lineage_entry_annot(n.decl->name, key_projection_expr(*n.decl, row_var)), key_);
    return make_map(make_lam(row, n.logical_row, annotated),
                    make_table(n.decl, n.logical_row));
  }

  ExprRef node(const ExprRef& e, const AppE& n) {
    switch (n.fn.kind) {
      case BuiltinFn::Kind::ConcatMap: return generator(e, n, /*wrap_body=*/false);
      case BuiltinFn::Kind::Map: return generator(e, n, /*wrap_body=*/true);
      case BuiltinFn::Kind::Append:
        return make_app(n.fn, {walk(n.args[0]), walk(n.args[1])});
      case BuiltinFn::Kind::Reverse: return make_app(n.fn, {walk(n.args[0])});
      case BuiltinFn::Kind::Guard: {
        std::string u = supply_.fresh();
        ExprRef unit_var = make_var(u, unit_type());
        return make_map(make_lam(u, unit_type(), make_annot(unit_var, bottom_annot(), key_)),
                        make_guard(walk(n.args[0])));
      }
      case BuiltinFn::Kind::Cons: {
        ExprRef head = make_annot(walk(n.args[0]), bottom_annot(), key_);
        return make_app(n.fn, {head, walk(n.args[1])});
      }
      case BuiltinFn::Kind::Zip: {
        TypeRef a_ty = original_type(n.args[0]);
        TypeRef b_ty = original_type(n.args[1]);
        ExprRef zipped = make_app(n.fn, {walk(n.args[0]), walk(n.args[1])});
        TypeRef pair_ty =
            tuple_type({lineage_annotated_type(lineage_type_translate(a_ty->elem, key_), key_),
                        lineage_annotated_type(lineage_type_translate(b_ty->elem, key_), key_)});
        std::string p = supply_.fresh();
        ExprRef pv = make_var(p, pair_ty);
        ExprRef body = make_annot(
            make_tuple({make_data_proj(make_tuple_proj(1, pv)),
                        make_data_proj(make_tuple_proj(2, pv))}),
            lineage_append(lineage_annot(make_prov_proj(make_tuple_proj(1, pv))),
                           lineage_annot(make_prov_proj(make_tuple_proj(2, pv)))),
            key_);
        return make_map(make_lam(p, pair_ty, body), zipped);
      }
      case BuiltinFn::Kind::TupleProj:
        return make_tuple_proj(n.fn.index, walk(n.args[0]));
    }
    fail(Errc::UnsupportedConstruct, "unknown builtin");
  }

  ExprRef node(const ExprRef&, const ListE& n) {
    TypeRef elem_ty = lineage_type_translate(original_type(n.elems[0]), key_);
    std::vector<ExprRef> elems;
    elems.reserve(n.elems.size());
    for (const auto& x : n.elems) elems.push_back(walk(x));
    std::string u = supply_.fresh();
    ExprRef body = make_annot(make_var(u, elem_ty), bottom_annot(), key_);
    return make_map(make_lam(u, elem_ty, body), make_list(std::move(elems)));
  }

  ExprRef node(const ExprRef&, const TupleE& n) {
    std::vector<ExprRef> parts;
    parts.reserve(n.elems.size());
    for (const auto& x : n.elems) parts.push_back(walk(x));
    return make_tuple(std::move(parts));
  }

  ExprRef node(const ExprRef&, const ScalarOpE& n) {
    std::vector<ExprRef> args;
    args.reserve(n.args.size());
    for (const auto& x : n.args) args.push_back(walk(x));
    return make_scalar_op(n.op, std::move(args));
  }

  ExprRef node(const ExprRef&, const LamE&) {
    fail(Errc::UnsupportedConstruct,
         "a lambda outside a map/concatMap argument position has no lineage translation");
  }

  ExprRef node(const ExprRef&, const AnnotE&) { return composition_error(); }
  ExprRef node(const ExprRef&, const DataProjE&) { return composition_error(); }
  ExprRef node(const ExprRef&, const ProvProjE&) { return composition_error(); }
  ExprRef node(const ExprRef&, const EmptyProvE&) { return composition_error(); }

  [[noreturn]] ExprRef composition_error() {
    fail(Errc::CompositionUnsupported,
         "input to the lineage transformation must carry no provenance annotations");
  }

  // The shared shape of the concatMap and map rules. For map the lambda body
  // is first wrapped in a singleton list.
  ExprRef generator(const ExprRef&, const AppE& n, bool wrap_body) {
    const auto* lam = get_node<LamE>(n.args[0]);
    if (!lam)
      fail(Errc::UnsupportedConstruct,
           std::string(builtin_name(n.fn.kind)) + " over a non-lambda has no lineage translation");
    const ExprRef& xs = n.args[1];

    ExprRef body = wrap_body ? make_list({lam->body}) : lam->body;
    TypeRef body_ty = original_type_under(body, lam->param, lam->param_type);
    if (body_ty->kind != Type::Kind::List)
      fail(Errc::UnsupportedConstruct, "concatMap body must produce a list");

    ExprRef xs_translated = walk(xs);

    std::string x = supply_.fresh();
    std::string z = supply_.fresh();
    TypeRef x_ty = lineage_annotated_type(lineage_type_translate(lam->param_type, key_), key_);
    TypeRef z_ty = lineage_annotated_type(lineage_type_translate(body_ty->elem, key_), key_);

    ExprRef body_translated = walk_under(body, lam->param, lam->param_type);
    ExprRef body_substituted =
        substitute(body_translated, lam->param, make_data_proj(make_var(x, x_ty)));

    ExprRef x_var = make_var(x, x_ty);
    ExprRef z_var = make_var(z, z_ty);
    ExprRef combine = make_annot(make_data_proj(z_var),
                                 lineage_append(lineage_annot(make_prov_proj(z_var)),
                                                lineage_annot(make_prov_proj(x_var))),
                                 key_);
    ExprRef inner = make_map(make_lam(z, z_ty, combine), body_substituted);
    return make_concat_map(make_lam(x, x_ty, inner), xs_translated);
  }

  ExprRef walk_under(const ExprRef& body, const std::string& var, const TypeRef& ty) {
    auto saved = bind(var, ty);
    ExprRef out = walk(body);
    unbind(var, saved);
    return out;
  }

  TypeRef original_type(const ExprRef& e) { return typecheck(e, env_); }

  TypeRef original_type_under(const ExprRef& e, const std::string& var, const TypeRef& ty) {
    auto saved = bind(var, ty);
    TypeRef out = typecheck(e, env_);
    unbind(var, saved);
    return out;
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

  KeyType key_;
  NameSupply& supply_;
  TypeEnv env_;  // enclosing binders at their original (untranslated) types
};

}  // namespace detail

// Rewrites a plain, well-typed query so that evaluation carries lineage.
// Afterwards typecheck(result) equals lineage_type_translate(typecheck(expr), key).
inline ExprRef lineage_transform(const ExprRef& expr, const KeyType& key, NameSupply& supply) {
  detail::LineageRewriter rewriter(key, supply);
  return rewriter.walk(expr);
}

}  // namespace provlq
