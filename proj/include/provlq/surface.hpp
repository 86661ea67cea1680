#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "provlq/catalog.hpp"
#include "provlq/expr.hpp"
#include "provlq/typecheck.hpp"

namespace provlq::surface {

// ---------------------------------------------------------------------------
// Surface query language: comprehension syntax over catalog tables.
//
//   [ (et_name(et), a_phone(a)) | a <- agencies, et <- externaltours,
//                                 a_name(a) == et_name(et), et_type(et) == "boat" ]
//
// Provenance can be inspected (data(e), prov(e)) and blanked (emptyProv(e))
// but there is no syntax that constructs or re-attaches an annotation.
// ---------------------------------------------------------------------------

struct SExpr;
using SRef = std::shared_ptr<const SExpr>;

enum class CallFn { Append, Reverse, Zip, Cons, Data, Prov, EmptyProv };
enum class OpKind { Eq, And, Or, Not };

struct Qual {
  bool is_generator = false;
  std::string var;  // generator variable
  SRef expr;        // generator source or guard condition
  int line = 0, col = 0;
};

struct SExpr {
  enum class Kind { Str, Int, Bool, Unit, Var, Table, Tuple, Field, Call, Op, Comp };
  Kind kind;
  int line = 0, col = 0;

  std::string text;        // Str value / Var name / Field label / Table name
  std::int64_t int_val = 0;
  bool bool_val = false;
  std::vector<SRef> args;  // Tuple / Call / Op arguments
  CallFn call = CallFn::Append;
  OpKind op = OpKind::Eq;
  TableDeclRef decl;       // Table (resolved against the catalog)
  SRef base;               // Field
  SRef head;               // Comp
  std::vector<Qual> quals; // Comp
};

using Query = SRef;

namespace detail {

inline std::shared_ptr<SExpr> snew(SExpr::Kind k, int line, int col) {
  auto e = std::make_shared<SExpr>();
  e->kind = k;
  e->line = line;
  e->col = col;
  return e;
}

struct STok {
  enum class K {
    Ident, Int, Str, LBrack, RBrack, LParen, RParen, Comma, Bar, Dot, Arrow, EqEq, AndAnd, OrOr,
    End
  };
  K k;
  std::string text;
  std::int64_t num = 0;
  int line = 1, col = 1;
};

class SLexer {
public:
  SLexer(std::string_view src, std::string origin) : src_(src), origin_(std::move(origin)) {
    next();
  }

  const STok& peek() const { return tok_; }
  STok take() {
    STok t = tok_;
    next();
    return t;
  }

  [[noreturn]] void error(const std::string& msg) const { error_at(tok_.line, tok_.col, msg); }

  [[noreturn]] void error_at(int line, int col, const std::string& msg) const {
    fail(Errc::SyntaxError,
         origin_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }

private:
  void next() {
    for (;;) {
      while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                    src_[pos_] == '\n' || src_[pos_] == '\r')) {
        advance();
      }
      if (pos_ < src_.size() && src_[pos_] == '#') {  // comment to end of line
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      break;
    }
    tok_ = STok{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.k = STok::K::End;
      return;
    }
    char c = src_[pos_];
    switch (c) {
      case '[': advance(); tok_.k = STok::K::LBrack; return;
      case ']': advance(); tok_.k = STok::K::RBrack; return;
      case '(': advance(); tok_.k = STok::K::LParen; return;
      case ')': advance(); tok_.k = STok::K::RParen; return;
      case ',': advance(); tok_.k = STok::K::Comma; return;
      case '.': advance(); tok_.k = STok::K::Dot; return;
      default: break;
    }
    if (c == '|') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '|') {
        advance();
        advance();
        tok_.k = STok::K::OrOr;
        return;
      }
      advance();
      tok_.k = STok::K::Bar;
      return;
    }
    if (c == '&' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '&') {
      advance();
      advance();
      tok_.k = STok::K::AndAnd;
      return;
    }
    if (c == '<' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
      advance();
      advance();
      tok_.k = STok::K::Arrow;
      return;
    }
    if (c == '=' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
      advance();
      advance();
      tok_.k = STok::K::EqEq;
      return;
    }
    if (c == '"') {
      advance();
      std::string out;
      while (pos_ < src_.size() && src_[pos_] != '"') {
        char d = src_[pos_];
        if (d == '\\' && pos_ + 1 < src_.size()) {
          advance();
          char esc = src_[pos_];
          if (esc == 'n') out += '\n';
          else if (esc == 't') out += '\t';
          else out += esc;
        } else {
          out += d;
        }
        advance();
      }
      if (pos_ >= src_.size()) error_at(tok_.line, tok_.col, "unterminated string literal");
      advance();
      tok_.k = STok::K::Str;
      tok_.text = std::move(out);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      std::string digits;
      if (c == '-') {
        digits += '-';
        advance();
      }
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits += src_[pos_];
        advance();
      }
      tok_.k = STok::K::Int;
      tok_.num = std::stoll(digits);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        name += src_[pos_];
        advance();
      }
      tok_.k = STok::K::Ident;
      tok_.text = std::move(name);
      return;
    }
    error_at(line_, col_, std::string("unexpected character '") + c + "'");
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  std::string origin_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  STok tok_;
};

class SParser {
public:
  SParser(std::string_view src, const Catalog& catalog, std::string origin)
      : lex_(src, std::move(origin)), catalog_(catalog) {}

  Query parse() {
    if (lex_.peek().k != STok::K::LBrack) lex_.error("a query is a comprehension: [ head | ... ]");
    auto q = comprehension();
    if (lex_.peek().k != STok::K::End) lex_.error("trailing input after query");
    resolve(q, {});
    return q;
  }

private:
  std::shared_ptr<SExpr> comprehension() {
    STok open = expect(STok::K::LBrack, "'['");
    auto comp = snew(SExpr::Kind::Comp, open.line, open.col);
    comp->head = expr();
    expect(STok::K::Bar, "'|' after comprehension head");
    comp->quals.push_back(qualifier());
    while (lex_.peek().k == STok::K::Comma) {
      lex_.take();
      comp->quals.push_back(qualifier());
    }
    expect(STok::K::RBrack, "']' closing comprehension");
    return comp;
  }

  Qual qualifier() {
    Qual q;
    q.line = lex_.peek().line;
    q.col = lex_.peek().col;
    // lookahead for "ident <-"
    if (lex_.peek().k == STok::K::Ident) {
      STok name = lex_.take();
      if (lex_.peek().k == STok::K::Arrow) {
        lex_.take();
        q.is_generator = true;
        q.var = name.text;
        q.expr = expr();
        return q;
      }
      q.expr = expr_continued(continue_expr_from_ident(name));
      return q;
    }
    q.expr = expr();
    return q;
  }

  // Continues operator parsing after a qualifier's leading identifier has
  // already been consumed as `base`.
  SRef expr_continued(SRef base) {
    base = postfix_tail(base);
    if (lex_.peek().k == STok::K::EqEq) {
      lex_.take();
      auto e = snew(SExpr::Kind::Op, base->line, base->col);
      e->op = OpKind::Eq;
      e->args = {base, postfix()};
      base = e;
    }
    while (lex_.peek().k == STok::K::AndAnd) {
      lex_.take();
      auto e = snew(SExpr::Kind::Op, base->line, base->col);
      e->op = OpKind::And;
      e->args = {base, eq_expr()};
      base = e;
    }
    while (lex_.peek().k == STok::K::OrOr) {
      lex_.take();
      auto e = snew(SExpr::Kind::Op, base->line, base->col);
      e->op = OpKind::Or;
      e->args = {base, and_expr()};
      base = e;
    }
    return base;
  }

  SRef expr() { return or_expr(); }

  SRef or_expr() {
    SRef lhs = and_expr();
    while (lex_.peek().k == STok::K::OrOr) {
      lex_.take();
      auto e = snew(SExpr::Kind::Op, lhs->line, lhs->col);
      e->op = OpKind::Or;
      e->args = {lhs, and_expr()};
      lhs = e;
    }
    return lhs;
  }

  SRef and_expr() {
    SRef lhs = eq_expr();
    while (lex_.peek().k == STok::K::AndAnd) {
      lex_.take();
      auto e = snew(SExpr::Kind::Op, lhs->line, lhs->col);
      e->op = OpKind::And;
      e->args = {lhs, eq_expr()};
      lhs = e;
    }
    return lhs;
  }

  SRef eq_expr() {
    SRef lhs = postfix();
    if (lex_.peek().k == STok::K::EqEq) {
      lex_.take();
      auto e = snew(SExpr::Kind::Op, lhs->line, lhs->col);
      e->op = OpKind::Eq;
      e->args = {lhs, postfix()};
      return e;
    }
    return lhs;
  }

  SRef postfix() { return postfix_tail(atom()); }

  SRef postfix_tail(SRef e) {
    while (lex_.peek().k == STok::K::Dot) {
      lex_.take();
      STok label = expect(STok::K::Ident, "field label after '.'");
      auto f = snew(SExpr::Kind::Field, label.line, label.col);
      f->text = label.text;
      f->base = e;
      e = f;
    }
    return e;
  }

  SRef atom() {
    const STok& t = lex_.peek();
    switch (t.k) {
      case STok::K::Str: {
        STok tok = lex_.take();
        auto e = snew(SExpr::Kind::Str, tok.line, tok.col);
        e->text = tok.text;
        return e;
      }
      case STok::K::Int: {
        STok tok = lex_.take();
        auto e = snew(SExpr::Kind::Int, tok.line, tok.col);
        e->int_val = tok.num;
        return e;
      }
      case STok::K::LBrack: return comprehension();
      case STok::K::LParen: {
        STok open = lex_.take();
        if (lex_.peek().k == STok::K::RParen) {
          lex_.take();
          return snew(SExpr::Kind::Unit, open.line, open.col);
        }
        std::vector<SRef> items;
        items.push_back(expr());
        while (lex_.peek().k == STok::K::Comma) {
          lex_.take();
          items.push_back(expr());
        }
        expect(STok::K::RParen, "')'");
        if (items.size() == 1) return items[0];
        if (items.size() > 16) lex_.error("tuples have at most 16 components");
        auto e = snew(SExpr::Kind::Tuple, open.line, open.col);
        e->args = std::move(items);
        return e;
      }
      case STok::K::Ident: {
        STok name = lex_.take();
        return continue_expr_from_ident(name);
      }
      default: lex_.error("expected an expression");
    }
  }

  // An identifier already consumed: literal keyword, call, field accessor, or
  // a bare variable/table reference.
  SRef continue_expr_from_ident(const STok& name) {
    if (name.text == "true" || name.text == "false") {
      auto e = snew(SExpr::Kind::Bool, name.line, name.col);
      e->bool_val = name.text == "true";
      return e;
    }
    if (name.text == "not") {
      SRef arg = postfix();
      auto e = snew(SExpr::Kind::Op, name.line, name.col);
      e->op = OpKind::Not;
      e->args = {arg};
      return e;
    }
    if (lex_.peek().k == STok::K::LParen) {
      lex_.take();
      std::vector<SRef> args;
      if (lex_.peek().k != STok::K::RParen) {
        args.push_back(expr());
        while (lex_.peek().k == STok::K::Comma) {
          lex_.take();
          args.push_back(expr());
        }
      }
      expect(STok::K::RParen, "')' closing call");
      return call_or_field(name, std::move(args));
    }
    auto e = snew(SExpr::Kind::Var, name.line, name.col);  // resolved later
    e->text = name.text;
    return e;
  }

  SRef call_or_field(const STok& name, std::vector<SRef> args) {
    auto builtin = [&](CallFn fn, size_t arity) -> SRef {
      if (args.size() != arity)
        lex_.error_at(name.line, name.col,
                      name.text + " takes " + std::to_string(arity) + " argument(s)");
      auto e = snew(SExpr::Kind::Call, name.line, name.col);
      e->call = fn;
      e->args = std::move(args);
      return e;
    };
    if (name.text == "append") return builtin(CallFn::Append, 2);
    if (name.text == "reverse") return builtin(CallFn::Reverse, 1);
    if (name.text == "zip") return builtin(CallFn::Zip, 2);
    if (name.text == "cons") return builtin(CallFn::Cons, 2);
    if (name.text == "data") return builtin(CallFn::Data, 1);
    if (name.text == "prov") return builtin(CallFn::Prov, 1);
    if (name.text == "emptyProv") return builtin(CallFn::EmptyProv, 1);
    // anything else is a field accessor: label(expr)
    if (args.size() != 1)
      lex_.error_at(name.line, name.col, "field accessor '" + name.text + "' takes one argument");
    auto e = snew(SExpr::Kind::Field, name.line, name.col);
    e->text = name.text;
    e->base = args[0];
    return e;
  }

  // Second pass: classify identifiers as generator variables or table
  // references. Generator variables shadow table names.
  void resolve(const SRef& e, std::vector<std::string> scope) {
    auto self = const_cast<SExpr*>(e.get());
    switch (e->kind) {
      case SExpr::Kind::Var: {
        for (const auto& v : scope)
          if (v == e->text) return;
        if (auto decl = catalog_.find(e->text)) {
          self->kind = SExpr::Kind::Table;
          self->decl = decl;
          return;
        }
        fail(Errc::UnknownTable, "unknown table or variable '" + e->text + "' at " +
                                     std::to_string(e->line) + ":" + std::to_string(e->col));
      }
      case SExpr::Kind::Comp: {
        std::vector<std::string> inner = scope;
        for (auto& q : self->quals) {
          resolve(q.expr, inner);
          if (q.is_generator) {
            for (const auto& v : inner)
              if (v == q.var)
                fail(Errc::SyntaxError, "duplicate generator variable '" + q.var + "' at " +
                                            std::to_string(q.line) + ":" + std::to_string(q.col));
            inner.push_back(q.var);
          }
        }
        resolve(e->head, inner);
        return;
      }
      case SExpr::Kind::Field: resolve(e->base, scope); return;
      case SExpr::Kind::Tuple:
      case SExpr::Kind::Call:
      case SExpr::Kind::Op:
        for (const auto& a : e->args) resolve(a, scope);
        return;
      default: return;
    }
  }

  STok expect(STok::K k, const std::string& what) {
    if (lex_.peek().k != k) lex_.error("expected " + what);
    return lex_.take();
  }

  SLexer lex_;
  const Catalog& catalog_;
};

}  // namespace detail

inline Query parse(std::string_view src, const Catalog& catalog,
                   const std::string& origin = "<query>") {
  detail::SParser p(src, catalog, origin);
  return p.parse();
}

inline std::string render_str_literal(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\\\"";
    else if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  return out + "\"";
}

// Renders a query back to source text; parse(render(q)) reproduces q.
inline std::string render(const SRef& e) {
  switch (e->kind) {
    case SExpr::Kind::Str: return render_str_literal(e->text);
    case SExpr::Kind::Int: return std::to_string(e->int_val);
    case SExpr::Kind::Bool: return e->bool_val ? "true" : "false";
    case SExpr::Kind::Unit: return "()";
    case SExpr::Kind::Var: return e->text;
    case SExpr::Kind::Table: return e->decl->name;
    case SExpr::Kind::Tuple: {
      std::string out = "(";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) out += ", ";
        out += render(e->args[i]);
      }
      return out + ")";
    }
    case SExpr::Kind::Field: return e->text + "(" + render(e->base) + ")";
    case SExpr::Kind::Call: {
      static const char* names[] = {"append", "reverse", "zip", "cons", "data", "prov",
                                    "emptyProv"};
      std::string out = names[static_cast<int>(e->call)];
      out += "(";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) out += ", ";
        out += render(e->args[i]);
      }
      return out + ")";
    }
    case SExpr::Kind::Op:
      switch (e->op) {
        case OpKind::Eq: return render(e->args[0]) + " == " + render(e->args[1]);
        case OpKind::And: return "(" + render(e->args[0]) + ") && (" + render(e->args[1]) + ")";
        case OpKind::Or: return "(" + render(e->args[0]) + ") || (" + render(e->args[1]) + ")";
        case OpKind::Not: return "not (" + render(e->args[0]) + ")";
      }
      return "?";
    case SExpr::Kind::Comp: {
      std::string out = "[ " + render(e->head) + " | ";
      for (size_t i = 0; i < e->quals.size(); ++i) {
        if (i) out += ", ";
        const Qual& q = e->quals[i];
        if (q.is_generator) out += q.var + " <- " + render(q.expr);
        else out += render(q.expr);
      }
      return out + " ]";
    }
  }
  return "?";
}

// Tables mentioned anywhere in a query.
inline void collect_tables(const SRef& e, std::vector<TableDeclRef>& out) {
  switch (e->kind) {
    case SExpr::Kind::Table: {
      for (const auto& d : out)
        if (d->name == e->decl->name) return;
      out.push_back(e->decl);
      return;
    }
    case SExpr::Kind::Field: collect_tables(e->base, out); return;
    case SExpr::Kind::Tuple:
    case SExpr::Kind::Call:
    case SExpr::Kind::Op:
      for (const auto& a : e->args) collect_tables(a, out);
      return;
    case SExpr::Kind::Comp:
      collect_tables(e->head, out);
      for (const auto& q : e->quals) collect_tables(q.expr, out);
      return;
    default: return;
  }
}

inline std::vector<TableDeclRef> tables_used(const Query& q) {
  std::vector<TableDeclRef> out;
  collect_tables(q, out);
  return out;
}

// ---------------------------------------------------------------------------
// Desugaring into the core calculus:
//
//   [h | x <- xs, rest]  =>  concatMap (λx. [h | rest]) xs
//   [h | g, rest]        =>  concatMap (λu. [h | rest]) (guard g)   u fresh, unused
//   [h | ]               =>  [h]
//
// Field access becomes positional projection in catalog column order.
// ---------------------------------------------------------------------------

namespace detail {

struct Binding {
  TypeRef type;
  TableDeclRef schema;  // set when the value is a row of a known table
};

class Desugarer {
public:
  Desugarer(NameSupply& supply, bool honor_whereprov)
      : supply_(supply), honor_wp_(honor_whereprov) {}

  ExprRef run(const Query& q) {
    // blank-provenance annotations take the tables' shared key type when one
    // exists; Int otherwise (never observable in results)
    auto tables = tables_used(q);
    if (!tables.empty()) {
      try {
        empty_prov_key_ = uniform_key_type(tables);
      } catch (const Error&) {
        empty_prov_key_ = KeyType(Prim::Int);
      }
    }
    ExprRef core = comp(*q, 0).core;
    typecheck(core);
    return core;
  }

private:
  struct DExpr {
    ExprRef core;
    TableDeclRef value_schema;  // row schema of this value, if known
    TableDeclRef elem_schema;   // row schema of list elements, if known
  };

  DExpr comp(const SExpr& c, size_t qual_index) {
    if (qual_index == c.quals.size()) {
      DExpr h = walk(*c.head);
      DExpr out;
      out.core = make_list({h.core});
      out.elem_schema = h.value_schema;
      return out;
    }
    const Qual& q = c.quals[qual_index];
    if (q.is_generator) {
      DExpr src = walk(*q.expr);
      TypeRef src_ty = typecheck(src.core, type_env_);
      if (src_ty->kind != Type::Kind::List)
        fail(Errc::TypeMismatch, "generator '" + q.var + "' ranges over " +
                                     type_to_string(src_ty) + ", expected a list");
      auto saved = bind(q.var, Binding{src_ty->elem, src.elem_schema});
      DExpr body = comp(c, qual_index + 1);
      unbind(q.var, saved);
      DExpr out;
      out.core = make_concat_map(make_lam(q.var, src_ty->elem, body.core), src.core);
      out.elem_schema = body.elem_schema;
      return out;
    }
    DExpr cond = walk(*q.expr);
    std::string unit_var = supply_.fresh();
    auto saved = bind(unit_var, Binding{unit_type(), nullptr});
    DExpr body = comp(c, qual_index + 1);
    unbind(unit_var, saved);
    DExpr out;
    out.core = make_concat_map(make_lam(unit_var, unit_type(), body.core),
                               make_guard(cond.core));
    out.elem_schema = body.elem_schema;
    return out;
  }

  DExpr walk(const SExpr& e) {
    DExpr out;
    switch (e.kind) {
      case SExpr::Kind::Str: out.core = make_str(e.text); return out;
      case SExpr::Kind::Int: out.core = make_int(e.int_val); return out;
      case SExpr::Kind::Bool: out.core = make_bool(e.bool_val); return out;
      case SExpr::Kind::Unit: out.core = make_unit(); return out;
      case SExpr::Kind::Var: {
        auto it = env_.find(e.text);
        if (it == env_.end())
          fail(Errc::UnboundVariable, "unbound variable '" + e.text + "'");
        out.core = make_var(e.text, it->second.type);
        out.value_schema = it->second.schema;
        return out;
      }
      case SExpr::Kind::Table: {
        out.core = make_table(e.decl, logical_row_type(*e.decl, honor_wp_));
        out.elem_schema = e.decl;
        return out;
      }
      case SExpr::Kind::Tuple: {
        std::vector<ExprRef> parts;
        for (const auto& a : e.args) parts.push_back(walk(*a).core);
        out.core = make_tuple(std::move(parts));
        return out;
      }
      case SExpr::Kind::Field: {
        DExpr base = walk(*e.base);
        if (!base.value_schema)
          fail(Errc::UnknownField, "no field '" + e.text + "': expression at " +
                                       std::to_string(e.line) + ":" + std::to_string(e.col) +
                                       " has no named row type");
        int idx = base.value_schema->column_index(e.text);
        if (idx == 0)
          fail(Errc::UnknownField, "table '" + base.value_schema->name + "' has no column '" +
                                       e.text + "'");
        out.core = make_tuple_proj(idx, base.core);
        return out;
      }
      case SExpr::Kind::Call: return call(e);
      case SExpr::Kind::Op: {
        std::vector<ExprRef> args;
        for (const auto& a : e.args) args.push_back(walk(*a).core);
        ScalarOp op = e.op == OpKind::Eq   ? ScalarOp::Eq
                      : e.op == OpKind::And ? ScalarOp::And
                      : e.op == OpKind::Or  ? ScalarOp::Or
                                            : ScalarOp::Not;
        out.core = make_scalar_op(op, std::move(args));
        return out;
      }
      case SExpr::Kind::Comp: return comp(e, 0);
    }
    fail(Errc::SyntaxError, "malformed query expression");
  }

  DExpr call(const SExpr& e) {
    DExpr out;
    switch (e.call) {
      case CallFn::Append: {
        DExpr a = walk(*e.args[0]);
        DExpr b = walk(*e.args[1]);
        out.core = make_app({BuiltinFn::Kind::Append}, {a.core, b.core});
        if (a.elem_schema && b.elem_schema && a.elem_schema->name == b.elem_schema->name)
          out.elem_schema = a.elem_schema;
        return out;
      }
      case CallFn::Reverse: {
        DExpr a = walk(*e.args[0]);
        out.core = make_app({BuiltinFn::Kind::Reverse}, {a.core});
        out.elem_schema = a.elem_schema;
        return out;
      }
      case CallFn::Zip: {
        DExpr a = walk(*e.args[0]);
        DExpr b = walk(*e.args[1]);
        out.core = make_app({BuiltinFn::Kind::Zip}, {a.core, b.core});
        return out;
      }
      case CallFn::Cons: {
        DExpr h = walk(*e.args[0]);
        DExpr t = walk(*e.args[1]);
        out.core = make_app({BuiltinFn::Kind::Cons}, {h.core, t.core});
        if (t.elem_schema && h.value_schema && h.value_schema->name == t.elem_schema->name)
          out.elem_schema = t.elem_schema;
        return out;
      }
      case CallFn::Data: {
        out.core = make_data_proj(walk(*e.args[0]).core);
        return out;
      }
      case CallFn::Prov: {
        out.core = make_prov_proj(walk(*e.args[0]).core);
        return out;
      }
      case CallFn::EmptyProv: {
        out.core = make_empty_prov(walk(*e.args[0]).core, empty_prov_key_);
        return out;
      }
    }
    fail(Errc::SyntaxError, "malformed call");
  }

  std::optional<Binding> bind(const std::string& name, Binding b) {
    std::optional<Binding> old;
    if (auto it = env_.find(name); it != env_.end()) old = it->second;
    env_[name] = b;
    type_env_[name] = b.type;
    return old;
  }

  void unbind(const std::string& name, const std::optional<Binding>& old) {
    if (old) {
      env_[name] = *old;
      type_env_[name] = old->type;
    } else {
      env_.erase(name);
      type_env_.erase(name);
    }
  }

  NameSupply& supply_;
  bool honor_wp_;
  KeyType empty_prov_key_{Prim::Int};
  std::map<std::string, Binding> env_;
  TypeEnv type_env_;
};

}  // namespace detail

// Desugars a parsed query. With honor_whereprov set, table references use the
// declared row type (flagged columns annotated); otherwise flags are ignored.
// The result typechecks; it contains no annotation nodes.
inline ExprRef desugar(const Query& q, NameSupply& supply, bool honor_whereprov = false) {
  detail::Desugarer d(supply, honor_whereprov);
  return d.run(q);
}

}  // namespace provlq::surface
