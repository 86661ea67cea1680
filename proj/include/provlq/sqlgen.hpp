#pragma once

#include <string>
#include <variant>
#include <vector>

#include "provlq/catalog.hpp"
#include "provlq/expr.hpp"

namespace provlq {

// ---------------------------------------------------------------------------
// SQL emission for the flat conjunctive subset: a nest of concatMaps over bare
// table references, then concatMaps over guards whose conditions are
// conjunctions of equalities between column projections and string/int
// literals, ending in a singleton tuple of column projections.
//
// Tables are aliased a0, a1, ... in generator order; output columns are named
// i1, i2, ...; guard conjuncts are parenthesized and joined with AND in
// desugaring order. Anything outside the subset raises NotFlat.
// ---------------------------------------------------------------------------

namespace detail {

struct SqlGenerator {
  struct TableBinding {
    std::string var;
    TableDeclRef decl;
    int alias;
  };

  std::vector<TableBinding> tables;
  std::vector<std::string> conditions;
  std::vector<std::string> selects;

  [[noreturn]] static void not_flat(const std::string& reason, const std::string& path) {
    fail(Errc::NotFlat, reason, path);
  }

  const TableBinding* binding(const std::string& var) const {
    for (const auto& t : tables)
      if (t.var == var) return &t;
    return nullptr;
  }

  void walk(const ExprRef& e, const std::string& path, bool guards_seen) {
    const auto* app = get_node<AppE>(e);
    if (app && app->fn.kind == BuiltinFn::Kind::ConcatMap) {
      const auto* lam = get_node<LamE>(app->args[0]);
      if (!lam) not_flat("concatMap over a non-lambda", path);
      const ExprRef& source = app->args[1];
      if (const auto* table = get_node<TableE>(source)) {
        if (contains_provenance(table->logical_row))
          not_flat("provenance annotations present", path + ".source");
        if (guards_seen) not_flat("table generator after a guard", path + ".source");
        tables.push_back(
            TableBinding{lam->param, table->decl, static_cast<int>(tables.size())});
        walk(lam->body, path + ".body", guards_seen);
        return;
      }
      if (const auto* guard = get_node<AppE>(source);
          guard && guard->fn.kind == BuiltinFn::Kind::Guard) {
        condition(guard->args[0], path + ".guard");
        walk(lam->body, path + ".body", /*guards_seen=*/true);
        return;
      }
      not_flat("generator source is neither a table nor a guard", path + ".source");
    }
    head(e, path);
  }

  void head(const ExprRef& e, const std::string& path) {
    const auto* lst = get_node<ListE>(e);
    if (!lst || lst->elems.size() != 1)
      not_flat("query body is not a singleton result", path);
    const auto* tup = get_node<TupleE>(lst->elems[0]);
    if (!tup) not_flat("non-projection head", path + ".head");
    if (tables.empty()) not_flat("no table generators", path);
    for (size_t i = 0; i < tup->elems.size(); ++i) {
      std::string col = projection(tup->elems[i], path + ".head." + std::to_string(i + 1));
      selects.push_back(col + " AS i" + std::to_string(i + 1));
    }
  }

  std::string projection(const ExprRef& e, const std::string& path) {
    const auto* proj = get_node<AppE>(e);
    if (!proj || proj->fn.kind != BuiltinFn::Kind::TupleProj)
      not_flat("expected a column projection", path);
    const auto* var = get_node<VarE>(proj->args[0]);
    if (!var) not_flat("projection of a non-variable", path);
    const TableBinding* b = binding(var->name);
    if (!b) not_flat("projection of a non-generator variable '" + var->name + "'", path);
    if (proj->fn.index < 1 || static_cast<size_t>(proj->fn.index) > b->decl->columns.size())
      not_flat("projection index out of range", path);
    return "a" + std::to_string(b->alias) + "." + b->decl->columns[proj->fn.index - 1].first;
  }

  void condition(const ExprRef& e, const std::string& path) {
    if (const auto* op = get_node<ScalarOpE>(e)) {
      if (op->op == ScalarOp::And) {
        condition(op->args[0], path + ".lhs");
        condition(op->args[1], path + ".rhs");
        return;
      }
      if (op->op == ScalarOp::Eq) {
        std::string lhs = operand(op->args[0], path + ".lhs");
        std::string rhs = operand(op->args[1], path + ".rhs");
        conditions.push_back("(" + lhs + " = " + rhs + ")");
        return;
      }
    }
    not_flat("guard is not a conjunction of equalities", path);
  }

  std::string operand(const ExprRef& e, const std::string& path) {
    if (const auto* c = get_node<ConstE>(e)) {
      if (c->value.kind() == Value::Kind::Int) return std::to_string(c->value.as_int());
      if (c->value.kind() == Value::Kind::Str) return quote(c->value.as_str());
      not_flat("literal must be a string or an integer", path);
    }
    return projection(e, path);
  }

  static std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
      if (c == '\'') out += "''";
      else out += c;
    }
    return out + "'";
  }

  std::string statement() const {
    std::string sql = "SELECT ";
    for (size_t i = 0; i < selects.size(); ++i) {
      if (i) sql += ", ";
      sql += selects[i];
    }
    sql += "\nFROM ";
    for (size_t i = 0; i < tables.size(); ++i) {
      if (i) sql += ", ";
      sql += tables[i].decl->name + " AS a" + std::to_string(tables[i].alias);
    }
    if (!conditions.empty()) {
      sql += "\nWHERE ";
      for (size_t i = 0; i < conditions.size(); ++i) {
        if (i) sql += " AND ";
        sql += conditions[i];
      }
    }
    return sql;
  }
};

inline void reject_provenance_nodes(const ExprRef& e, const std::string& path) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AnnotE> || std::is_same_v<T, DataProjE> ||
                      std::is_same_v<T, ProvProjE> || std::is_same_v<T, EmptyProvE>) {
          SqlGenerator::not_flat("provenance annotations present", path);
        } else if constexpr (std::is_same_v<T, TableE>) {
          if (contains_provenance(n.logical_row))
            SqlGenerator::not_flat("provenance annotations present", path);
        } else if constexpr (std::is_same_v<T, ListE> || std::is_same_v<T, TupleE>) {
          for (size_t i = 0; i < n.elems.size(); ++i)
            reject_provenance_nodes(n.elems[i], path + "." + std::to_string(i));
        } else if constexpr (std::is_same_v<T, AppE> || std::is_same_v<T, ScalarOpE>) {
          for (size_t i = 0; i < n.args.size(); ++i)
            reject_provenance_nodes(n.args[i], path + "." + std::to_string(i));
        } else if constexpr (std::is_same_v<T, LamE>) {
          reject_provenance_nodes(n.body, path + ".body");
        }
      },
      e->node);
}

}  // namespace detail

inline std::string to_sql(const ExprRef& expr) {
  detail::reject_provenance_nodes(expr, "query");
  detail::SqlGenerator gen;
  gen.walk(expr, "query", false);
  return gen.statement();
}

}  // namespace provlq
