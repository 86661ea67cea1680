#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "provlq/catalog.hpp"
#include "provlq/types.hpp"
#include "provlq/value.hpp"

namespace provlq {

struct Expr;
using ExprRef = std::shared_ptr<const Expr>;

enum class ScalarOp { Eq, And, Or, Not };

// Built-in list functions plus tuple projection. Projection carries the
// 1-based component index.
struct BuiltinFn {
  enum class Kind { ConcatMap, Map, Append, Reverse, Guard, Cons, Zip, TupleProj };
  Kind kind;
  int index = 0;

  bool operator==(const BuiltinFn& other) const = default;
};

inline const char* builtin_name(BuiltinFn::Kind k) {
  switch (k) {
    case BuiltinFn::Kind::ConcatMap: return "concatMap";
    case BuiltinFn::Kind::Map: return "map";
    case BuiltinFn::Kind::Append: return "append";
    case BuiltinFn::Kind::Reverse: return "reverse";
    case BuiltinFn::Kind::Guard: return "guard";
    case BuiltinFn::Kind::Cons: return "cons";
    case BuiltinFn::Kind::Zip: return "zip";
    case BuiltinFn::Kind::TupleProj: return ".n";
  }
  return "?";
}

// Provenance annotations attached to expressions (the superscript of M^A).
// A lineage annotation holds an expression evaluating to a list of
// (table, key) entries; the single-entry form is a singleton list literal.
struct Annot;
using AnnotRef = std::shared_ptr<const Annot>;

struct BottomAnnot {};

struct WhereAnnotExpr {
  std::string table;
  std::string column;
  ExprRef key;
};

struct LineageAnnotExpr {
  ExprRef entries;  // : [(String, θ)]
};

struct LineageAppendExpr {
  AnnotRef lhs;
  AnnotRef rhs;
};

struct Annot {
  std::variant<BottomAnnot, WhereAnnotExpr, LineageAnnotExpr, LineageAppendExpr> node;
};

// --- Expression nodes -------------------------------------------------------

struct ConstE {
  Value value;   // scalar
  TypeRef type;  // primitive
};

struct VarE {
  std::string name;
  TypeRef type;
};

struct UnitE {};

struct ListE {
  std::vector<ExprRef> elems;
};

struct TupleE {
  std::vector<ExprRef> elems;
};

struct LamE {
  std::string param;
  TypeRef param_type;
  ExprRef body;
};

struct AppE {
  BuiltinFn fn;
  std::vector<ExprRef> args;
};

struct TableE {
  TableDeclRef decl;
  TypeRef logical_row;  // raw row tuple, or annotated row before materialization
};

struct AnnotE {
  ExprRef body;
  Annot annot;
  KeyType key;  // θ of the annotation
};

struct DataProjE {
  ExprRef body;
};

struct ProvProjE {
  ExprRef body;
};

struct EmptyProvE {
  ExprRef body;
  KeyType key;
};

struct ScalarOpE {
  ScalarOp op;
  std::vector<ExprRef> args;
};

struct Expr {
  std::variant<ConstE, VarE, UnitE, ListE, TupleE, LamE, AppE, TableE, AnnotE, DataProjE,
               ProvProjE, EmptyProvE, ScalarOpE>
      node;
};

template <typename Node>
ExprRef make_expr(Node node) {
  return std::make_shared<Expr>(Expr{std::move(node)});
}

template <typename Node>
const Node* get_node(const ExprRef& e) {
  return e ? std::get_if<Node>(&e->node) : nullptr;
}

inline ExprRef make_var(std::string name, TypeRef type) {
  return make_expr(VarE{std::move(name), std::move(type)});
}
inline ExprRef make_int(std::int64_t v) { return make_expr(ConstE{Value::integer(v), int_type()}); }
inline ExprRef make_str(std::string v) {
  return make_expr(ConstE{Value::str(std::move(v)), str_type()});
}
inline ExprRef make_bool(bool v) { return make_expr(ConstE{Value::boolean(v), bool_type()}); }
inline ExprRef make_unit() { return make_expr(UnitE{}); }
inline ExprRef make_list(std::vector<ExprRef> elems) { return make_expr(ListE{std::move(elems)}); }
inline ExprRef make_tuple(std::vector<ExprRef> elems) {
  return make_expr(TupleE{std::move(elems)});
}
inline ExprRef make_lam(std::string param, TypeRef param_type, ExprRef body) {
  return make_expr(LamE{std::move(param), std::move(param_type), std::move(body)});
}
inline ExprRef make_app(BuiltinFn fn, std::vector<ExprRef> args) {
  return make_expr(AppE{fn, std::move(args)});
}
inline ExprRef make_concat_map(ExprRef f, ExprRef xs) {
  return make_app({BuiltinFn::Kind::ConcatMap}, {std::move(f), std::move(xs)});
}
inline ExprRef make_map(ExprRef f, ExprRef xs) {
  return make_app({BuiltinFn::Kind::Map}, {std::move(f), std::move(xs)});
}
inline ExprRef make_guard(ExprRef b) { return make_app({BuiltinFn::Kind::Guard}, {std::move(b)}); }
inline ExprRef make_tuple_proj(int index, ExprRef e) {
  return make_app({BuiltinFn::Kind::TupleProj, index}, {std::move(e)});
}
inline ExprRef make_table(TableDeclRef decl, TypeRef logical_row) {
  return make_expr(TableE{std::move(decl), std::move(logical_row)});
}
inline ExprRef make_annot(ExprRef body, Annot annot, KeyType key) {
  return make_expr(AnnotE{std::move(body), std::move(annot), std::move(key)});
}
inline ExprRef make_data_proj(ExprRef body) { return make_expr(DataProjE{std::move(body)}); }
inline ExprRef make_prov_proj(ExprRef body) { return make_expr(ProvProjE{std::move(body)}); }
inline ExprRef make_empty_prov(ExprRef body, KeyType key) {
  return make_expr(EmptyProvE{std::move(body), std::move(key)});
}
inline ExprRef make_scalar_op(ScalarOp op, std::vector<ExprRef> args) {
  return make_expr(ScalarOpE{op, std::move(args)});
}
inline ExprRef make_eq(ExprRef a, ExprRef b) {
  return make_scalar_op(ScalarOp::Eq, {std::move(a), std::move(b)});
}

inline Annot bottom_annot() { return Annot{BottomAnnot{}}; }
inline Annot where_annot(std::string table, std::string column, ExprRef key) {
  return Annot{WhereAnnotExpr{std::move(table), std::move(column), std::move(key)}};
}
inline Annot lineage_annot(ExprRef entries) { return Annot{LineageAnnotExpr{std::move(entries)}}; }
inline Annot lineage_append(Annot lhs, Annot rhs) {
  return Annot{LineageAppendExpr{std::make_shared<const Annot>(std::move(lhs)),
                                 std::make_shared<const Annot>(std::move(rhs))}};
}

// Single lineage entry (t, k) as the annotation expression: a singleton list.
inline Annot lineage_entry_annot(const std::string& table, ExprRef key) {
  return lineage_annot(make_list({make_tuple({make_str(table), std::move(key)})}));
}

// The key projection φ applied to a row expression.
inline ExprRef key_projection_expr(const TableDecl& decl, const ExprRef& row) {
  if (decl.key_columns.size() == 1)
    return make_tuple_proj(decl.column_index(decl.key_columns[0]), row);
  std::vector<ExprRef> parts;
  for (const auto& k : decl.key_columns) parts.push_back(make_tuple_proj(decl.column_index(k), row));
  return make_tuple(std::move(parts));
}

// Deterministic fresh-name supply: x0, x1, ... One supply per pipeline run.
class NameSupply {
public:
  explicit NameSupply(std::string prefix = "x", int next = 0)
      : prefix_(std::move(prefix)), next_(next) {}

  std::string fresh() { return prefix_ + std::to_string(next_++); }

  int state() const { return next_; }
  const std::string& prefix() const { return prefix_; }

private:
  std::string prefix_;
  int next_ = 0;
};

// --- Free variables, substitution, alpha-equivalence ------------------------

namespace detail {

inline void free_vars_annot(const Annot& a, std::set<std::string>& out,
                            std::set<std::string>& bound);

inline void free_vars_into(const ExprRef& e, std::set<std::string>& out,
                           std::set<std::string>& bound) {
  if (!e) return;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, VarE>) {
          if (!bound.count(n.name)) out.insert(n.name);
        } else if constexpr (std::is_same_v<T, ListE> || std::is_same_v<T, TupleE>) {
          for (const auto& x : n.elems) free_vars_into(x, out, bound);
        } else if constexpr (std::is_same_v<T, LamE>) {
          bool was_bound = bound.count(n.param) > 0;
          bound.insert(n.param);
          free_vars_into(n.body, out, bound);
          if (!was_bound) bound.erase(n.param);
        } else if constexpr (std::is_same_v<T, AppE> || std::is_same_v<T, ScalarOpE>) {
          for (const auto& x : n.args) free_vars_into(x, out, bound);
        } else if constexpr (std::is_same_v<T, AnnotE>) {
          free_vars_into(n.body, out, bound);
          free_vars_annot(n.annot, out, bound);
        } else if constexpr (std::is_same_v<T, DataProjE> || std::is_same_v<T, ProvProjE> ||
                             std::is_same_v<T, EmptyProvE>) {
          free_vars_into(n.body, out, bound);
        }
      },
      e->node);
}

inline void free_vars_annot(const Annot& a, std::set<std::string>& out,
                            std::set<std::string>& bound) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
          free_vars_into(n.key, out, bound);
        } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
          free_vars_into(n.entries, out, bound);
        } else if constexpr (std::is_same_v<T, LineageAppendExpr>) {
          free_vars_annot(*n.lhs, out, bound);
          free_vars_annot(*n.rhs, out, bound);
        }
      },
      a.node);
}

}  // namespace detail

inline std::set<std::string> free_vars(const ExprRef& e) {
  std::set<std::string> out, bound;
  detail::free_vars_into(e, out, bound);
  return out;
}

namespace detail {

class Substituter {
public:
  Substituter(std::string var, ExprRef replacement)
      : var_(std::move(var)),
        replacement_(std::move(replacement)),
        replacement_free_(free_vars(replacement_)) {}

  ExprRef walk(const ExprRef& e) {
    if (!e) return e;
    return std::visit([&](const auto& n) { return walk_node(e, n); }, e->node);
  }

private:
  ExprRef walk_node(const ExprRef& e, const VarE& n) {
    return n.name == var_ ? replacement_ : e;
  }

  ExprRef walk_node(const ExprRef& e, const LamE& n) {
    if (n.param == var_) return e;  // shadowed
    if (replacement_free_.count(n.param)) {
      // Rename the binder to avoid capturing a free variable of the
      // replacement, then substitute in the renamed body.
      std::string renamed = pick_fresh(n.param, n.body);
      Substituter rename(n.param, make_var(renamed, n.param_type));
      ExprRef body = rename.walk(n.body);
      return make_lam(renamed, n.param_type, walk(body));
    }
    return make_lam(n.param, n.param_type, walk(n.body));
  }

  ExprRef walk_node(const ExprRef& e, const ConstE&) { return e; }
  ExprRef walk_node(const ExprRef& e, const UnitE&) { return e; }
  ExprRef walk_node(const ExprRef& e, const TableE&) { return e; }

  ExprRef walk_node(const ExprRef&, const ListE& n) { return make_list(walk_all(n.elems)); }
  ExprRef walk_node(const ExprRef&, const TupleE& n) { return make_tuple(walk_all(n.elems)); }
  ExprRef walk_node(const ExprRef&, const AppE& n) { return make_app(n.fn, walk_all(n.args)); }
  ExprRef walk_node(const ExprRef&, const ScalarOpE& n) {
    return make_scalar_op(n.op, walk_all(n.args));
  }
  ExprRef walk_node(const ExprRef&, const AnnotE& n) {
    return make_annot(walk(n.body), walk_annot(n.annot), n.key);
  }
  ExprRef walk_node(const ExprRef&, const DataProjE& n) { return make_data_proj(walk(n.body)); }
  ExprRef walk_node(const ExprRef&, const ProvProjE& n) { return make_prov_proj(walk(n.body)); }
  ExprRef walk_node(const ExprRef&, const EmptyProvE& n) {
    return make_empty_prov(walk(n.body), n.key);
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

  std::string pick_fresh(const std::string& base, const ExprRef& body) {
    std::set<std::string> avoid = replacement_free_;
    auto body_free = free_vars(body);
    avoid.insert(body_free.begin(), body_free.end());
    avoid.insert(var_);
    for (int i = 0;; ++i) {
      std::string candidate = base + "_" + std::to_string(i);
      if (!avoid.count(candidate)) return candidate;
    }
  }

  std::string var_;
  ExprRef replacement_;
  std::set<std::string> replacement_free_;
};

}  // namespace detail

// Capture-avoiding substitution of `replacement` for free occurrences of `var`.
inline ExprRef substitute(const ExprRef& expr, const std::string& var, const ExprRef& replacement) {
  detail::Substituter s(var, replacement);
  return s.walk(expr);
}

namespace detail {

// Alpha-equivalence compares structure, constants, builtins, table references,
// and annotations; bound variables up to consistent renaming. Type payloads on
// binders and variables are ignored (golden terms are written untyped).
class AlphaEq {
public:
  bool walk(const ExprRef& a, const ExprRef& b) {
    if (!a || !b) return a == b;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        [&](const auto& na) {
          const auto& nb = std::get<std::decay_t<decltype(na)>>(b->node);
          return node(na, nb);
        },
        a->node);
  }

private:
  bool node(const ConstE& a, const ConstE& b) { return a.value == b.value; }

  bool node(const VarE& a, const VarE& b) {
    auto ia = left_.find(a.name);
    auto ib = right_.find(b.name);
    if (ia == left_.end() && ib == right_.end()) return a.name == b.name;  // both free
    if (ia == left_.end() || ib == right_.end()) return false;
    return ia->second == ib->second;
  }

  bool node(const UnitE&, const UnitE&) { return true; }

  bool node(const ListE& a, const ListE& b) { return all(a.elems, b.elems); }
  bool node(const TupleE& a, const TupleE& b) { return all(a.elems, b.elems); }

  bool node(const LamE& a, const LamE& b) {
    int id = next_binder_++;
    auto olda = save(left_, a.param, id);
    auto oldb = save(right_, b.param, id);
    bool ok = walk(a.body, b.body);
    restore(left_, a.param, olda);
    restore(right_, b.param, oldb);
    return ok;
  }

  bool node(const AppE& a, const AppE& b) { return a.fn == b.fn && all(a.args, b.args); }

  bool node(const TableE& a, const TableE& b) {
    return a.decl->name == b.decl->name &&
           contains_provenance(a.logical_row) == contains_provenance(b.logical_row);
  }

  bool node(const AnnotE& a, const AnnotE& b) { return walk(a.body, b.body) && annot(a.annot, b.annot); }
  bool node(const DataProjE& a, const DataProjE& b) { return walk(a.body, b.body); }
  bool node(const ProvProjE& a, const ProvProjE& b) { return walk(a.body, b.body); }
  bool node(const EmptyProvE& a, const EmptyProvE& b) { return walk(a.body, b.body); }
  bool node(const ScalarOpE& a, const ScalarOpE& b) { return a.op == b.op && all(a.args, b.args); }

  bool annot(const Annot& a, const Annot& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& na) {
          using T = std::decay_t<decltype(na)>;
          const auto& nb = std::get<T>(b.node);
          if constexpr (std::is_same_v<T, BottomAnnot>) {
            return true;
          } else if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
            return na.table == nb.table && na.column == nb.column && walk(na.key, nb.key);
          } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
            return walk(na.entries, nb.entries);
          } else {
            return annot(*na.lhs, *nb.lhs) && annot(*na.rhs, *nb.rhs);
          }
        },
        a.node);
  }

  bool all(const std::vector<ExprRef>& xs, const std::vector<ExprRef>& ys) {
    if (xs.size() != ys.size()) return false;
    for (size_t i = 0; i < xs.size(); ++i)
      if (!walk(xs[i], ys[i])) return false;
    return true;
  }

  static std::optional<int> save(std::map<std::string, int>& m, const std::string& name, int id) {
    std::optional<int> old;
    if (auto it = m.find(name); it != m.end()) old = it->second;
    m[name] = id;
    return old;
  }

  static void restore(std::map<std::string, int>& m, const std::string& name,
                      const std::optional<int>& old) {
    if (old)
      m[name] = *old;
    else
      m.erase(name);
  }

  std::map<std::string, int> left_, right_;
  int next_binder_ = 0;
};

}  // namespace detail

inline bool alpha_eq(const ExprRef& a, const ExprRef& b) {
  detail::AlphaEq eq;
  return eq.walk(a, b);
}

}  // namespace provlq
