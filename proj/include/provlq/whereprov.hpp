#pragma once

#include <variant>
#include <vector>

#include "provlq/catalog.hpp"
#include "provlq/expr.hpp"

namespace provlq {

// ---------------------------------------------------------------------------
// Where-provenance transformation. Rewrites each table reference whose row
// type carries pending annotations into a map over the raw table that attaches
// (table, column, key) to every flagged field:
//
//   table t  =>  map (λx. (x.1, ..., x.i^(t, "l_i", φ(x)), ..., x.n)) table t
//
// All other nodes pass through unchanged; on expressions with no flagged
// tables the transformation is the identity.
// ---------------------------------------------------------------------------

namespace detail {

class WhereProvRewriter {
public:
  explicit WhereProvRewriter(NameSupply& supply) : supply_(supply) {}

  ExprRef walk(const ExprRef& e) {
    return std::visit([&](const auto& n) { return node(e, n); }, e->node);
  }

private:
  ExprRef node(const ExprRef& e, const TableE& n) {
    if (!contains_provenance(n.logical_row)) return e;
    const TableDecl& decl = *n.decl;
    KeyType key = decl.key_type();
    TypeRef raw = raw_row_type(decl);
    std::string row_var = supply_.fresh();

    std::vector<ExprRef> fields;
    fields.reserve(decl.columns.size());
    for (size_t i = 0; i < decl.columns.size(); ++i) {
      ExprRef field = make_tuple_proj(static_cast<int>(i) + 1, make_var(row_var, raw));
      if (decl.is_flagged(decl.columns[i].first)) {
        ExprRef key_expr = key_projection_expr(decl, make_var(row_var, raw));
        field = make_annot(field, where_annot(decl.name, decl.columns[i].first, key_expr), key);
      }
      fields.push_back(std::move(field));
    }
    return make_map(make_lam(row_var, raw, make_tuple(std::move(fields))),
                    make_table(n.decl, raw));
  }

  ExprRef node(const ExprRef& e, const ConstE&) { return e; }
  ExprRef node(const ExprRef& e, const VarE&) { return e; }
  ExprRef node(const ExprRef& e, const UnitE&) { return e; }

  ExprRef node(const ExprRef&, const ListE& n) { return make_list(walk_all(n.elems)); }
  ExprRef node(const ExprRef&, const TupleE& n) { return make_tuple(walk_all(n.elems)); }
  ExprRef node(const ExprRef&, const LamE& n) {
    return make_lam(n.param, n.param_type, walk(n.body));
  }
  ExprRef node(const ExprRef&, const AppE& n) { return make_app(n.fn, walk_all(n.args)); }
  ExprRef node(const ExprRef&, const AnnotE& n) {
    return make_annot(walk(n.body), walk_annot(n.annot), n.key);
  }
  ExprRef node(const ExprRef&, const DataProjE& n) { return make_data_proj(walk(n.body)); }
  ExprRef node(const ExprRef&, const ProvProjE& n) { return make_prov_proj(walk(n.body)); }
  ExprRef node(const ExprRef&, const EmptyProvE& n) {
    return make_empty_prov(walk(n.body), n.key);
  }
  ExprRef node(const ExprRef&, const ScalarOpE& n) {
    return make_scalar_op(n.op, walk_all(n.args));
  }

  Annot walk_annot(const Annot& a) {
    return std::visit(
        [&](const auto& n) -> Annot {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BottomAnnot>) {
            return bottom_annot();
          } else if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
            return where_annot(n.table, n.column, walk(n.key));
          } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
            return lineage_annot(walk(n.entries));
          } else {
            return lineage_append(walk_annot(*n.lhs), walk_annot(*n.rhs));
          }
        },
        a.node);
  }

  std::vector<ExprRef> walk_all(const std::vector<ExprRef>& xs) {
    std::vector<ExprRef> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(walk(x));
    return out;
  }

  NameSupply& supply_;
};

}  // namespace detail

inline ExprRef whereprov_transform(const ExprRef& expr, NameSupply& supply) {
  detail::WhereProvRewriter w(supply);
  return w.walk(expr);
}

}  // namespace provlq
