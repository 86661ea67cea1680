#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "provlq/catalog.hpp"
#include "provlq/expr.hpp"
#include "provlq/typecheck.hpp"

namespace provlq {

// ---------------------------------------------------------------------------
// Pretty printer. Produces the textual term notation documented in
// docs/grammar.md: concatMap, map, guard, M.n, M.data, M.prov, M^⊥,
// M^("t", k), M^("t", "c", k), M^(A ⊕ B). Output parses back through
// read_term and is alpha-equivalent to the printed term.
// ---------------------------------------------------------------------------

namespace detail {

// precedence levels, loosest to tightest
enum : int { kLam = 0, kOr = 1, kAnd = 2, kEq = 3, kApp = 4, kPostfix = 5, kAtom = 6 };

inline std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

class Printer {
public:
  std::string print(const ExprRef& e, int min_level) {
    auto [text, level] = render(e);
    if (level < min_level) return "(" + text + ")";
    return text;
  }

private:
  std::pair<std::string, int> render(const ExprRef& e) {
    return std::visit([&](const auto& n) { return node(n); }, e->node);
  }

  std::pair<std::string, int> node(const ConstE& n) {
    switch (n.value.kind()) {
      case Value::Kind::Int: return {std::to_string(n.value.as_int()), kAtom};
      case Value::Kind::Str: return {quote_string(n.value.as_str()), kAtom};
      case Value::Kind::Bool: return {n.value.as_bool() ? "true" : "false", kAtom};
      case Value::Kind::Unit: return {"()", kAtom};
      default: return {"<const>", kAtom};
    }
  }

  std::pair<std::string, int> node(const VarE& n) { return {n.name, kAtom}; }
  std::pair<std::string, int> node(const UnitE&) { return {"()", kAtom}; }

  std::pair<std::string, int> node(const ListE& n) {
    std::string out = "[";
    for (size_t i = 0; i < n.elems.size(); ++i) {
      if (i) out += ", ";
      out += print(n.elems[i], kLam);
    }
    return {out + "]", kAtom};
  }

  std::pair<std::string, int> node(const TupleE& n) {
    std::string out = "(";
    for (size_t i = 0; i < n.elems.size(); ++i) {
      if (i) out += ", ";
      out += print(n.elems[i], kLam);
    }
    return {out + ")", kAtom};
  }

  std::pair<std::string, int> node(const LamE& n) {
    return {"λ" + n.param + ". " + print(n.body, kLam), kLam};
  }

  std::pair<std::string, int> node(const AppE& n) {
    if (n.fn.kind == BuiltinFn::Kind::TupleProj)
      return {print(n.args[0], kPostfix) + "." + std::to_string(n.fn.index), kPostfix};
    std::string out = builtin_name(n.fn.kind);
    for (const auto& a : n.args) out += " " + print(a, kPostfix);
    return {out, kApp};
  }

  std::pair<std::string, int> node(const TableE& n) {
    if (contains_provenance(n.logical_row)) return {n.decl->name + "@wp", kAtom};
    return {n.decl->name, kAtom};
  }

  std::pair<std::string, int> node(const AnnotE& n) {
    return {print(n.body, kPostfix) + "^" + annot_text(n.annot), kPostfix};
  }

  std::pair<std::string, int> node(const DataProjE& n) {
    return {print(n.body, kPostfix) + ".data", kPostfix};
  }

  std::pair<std::string, int> node(const ProvProjE& n) {
    return {print(n.body, kPostfix) + ".prov", kPostfix};
  }

  std::pair<std::string, int> node(const EmptyProvE& n) {
    return {"emptyProv " + print(n.body, kPostfix), kApp};
  }

  std::pair<std::string, int> node(const ScalarOpE& n) {
    switch (n.op) {
      case ScalarOp::Eq: return {print(n.args[0], kApp) + " == " + print(n.args[1], kApp), kEq};
      case ScalarOp::And:
        return {print(n.args[0], kAnd) + " && " + print(n.args[1], kEq), kAnd};
      case ScalarOp::Or: return {print(n.args[0], kOr) + " || " + print(n.args[1], kAnd), kOr};
      case ScalarOp::Not: return {"not " + print(n.args[0], kPostfix), kApp};
    }
    return {"<op>", kAtom};
  }

  // Annotation payload. A lineage annotation holding a singleton entry list
  // prints in the paper's (t, k) form.
  std::string annot_text(const Annot& a) {
    if (std::holds_alternative<BottomAnnot>(a.node)) return "⊥";
    return "(" + annot_inner(a) + ")";
  }

  std::string annot_inner(const Annot& a) {
    return std::visit(
        [&](const auto& n) -> std::string {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BottomAnnot>) {
            return "⊥";
          } else if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
            return quote_string(n.table) + ", " + quote_string(n.column) + ", " +
                   print(n.key, kLam);
          } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
            return lineage_operand(n);
          } else {
            return append_operand(*n.lhs) + " ⊕ " + append_operand(*n.rhs);
          }
        },
        a.node);
  }

  std::string lineage_operand(const LineageAnnotExpr& n) {
    if (const auto* lst = get_node<ListE>(n.entries); lst && lst->elems.size() == 1) {
      if (const auto* tup = get_node<TupleE>(lst->elems[0]); tup && tup->elems.size() == 2) {
        if (const auto* c = get_node<ConstE>(tup->elems[0]);
            c && c->value.kind() == Value::Kind::Str)
          return quote_string(c->value.as_str()) + ", " + print(tup->elems[1], kLam);
      }
    }
    return print(n.entries, kPostfix);
  }

  std::string append_operand(const Annot& a) {
    return std::visit(
        [&](const auto& n) -> std::string {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BottomAnnot>) {
            return "⊥";
          } else if constexpr (std::is_same_v<T, WhereAnnotExpr>) {
            return "(" + annot_inner(a) + ")";
          } else if constexpr (std::is_same_v<T, LineageAnnotExpr>) {
            std::string inner = lineage_operand(n);
            // a (t, k) entry needs its own parentheses inside a chain
            if (!inner.empty() && inner.front() == '"') return "(" + inner + ")";
            return inner;
          } else {
            return append_operand(*n.lhs) + " ⊕ " + append_operand(*n.rhs);
          }
        },
        a.node);
  }
};

}  // namespace detail

inline std::string pretty(const ExprRef& e) {
  detail::Printer p;
  return p.print(e, detail::kLam);
}

// ---------------------------------------------------------------------------
// Golden-term reader: parses the pretty notation back into a typed core
// expression. Table names resolve against the catalog (a `@wp` suffix selects
// the declared row type with provenance flags honored); lambda parameter types
// are inferred from the list each map/concatMap traverses; ⊥ annotations and
// emptyProv take `default_key` as their key type.
// ---------------------------------------------------------------------------

namespace detail {

struct RTok {
  enum class K {
    Ident, Int, Str, LParen, RParen, LBrack, RBrack, Comma, Dot, Caret, Lambda,
    Bottom, OPlus, EqEq, AndAnd, OrOr, End
  };
  K k;
  std::string text;
  std::int64_t num = 0;
  int line = 1, col = 1;
};

class RLexer {
public:
  explicit RLexer(std::string_view src) : src_(src) { next(); }

  const RTok& peek() const { return tok_; }

  RTok take() {
    RTok t = tok_;
    next();
    return t;
  }

  [[noreturn]] void error(const std::string& msg) const {
    fail(Errc::SyntaxError,
         std::to_string(tok_.line) + ":" + std::to_string(tok_.col) + ": " + msg);
  }

private:
  void next() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r')) {
      advance();
    }
    tok_ = RTok{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.k = RTok::K::End;
      return;
    }
    char c = src_[pos_];
    if (match("λ") || c == '\\') {
      tok_.k = RTok::K::Lambda;
      return;
    }
    if (match("⊥")) {
      tok_.k = RTok::K::Bottom;
      return;
    }
    if (match("⊕")) {
      tok_.k = RTok::K::OPlus;
      return;
    }
    switch (c) {
      case '(': advance(); tok_.k = RTok::K::LParen; return;
      case ')': advance(); tok_.k = RTok::K::RParen; return;
      case '[': advance(); tok_.k = RTok::K::LBrack; return;
      case ']': advance(); tok_.k = RTok::K::RBrack; return;
      case ',': advance(); tok_.k = RTok::K::Comma; return;
      case '.': advance(); tok_.k = RTok::K::Dot; return;
      case '^': advance(); tok_.k = RTok::K::Caret; return;
      default: break;
    }
    if (c == '=' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
      advance();
      advance();
      tok_.k = RTok::K::EqEq;
      return;
    }
    if (c == '&' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '&') {
      advance();
      advance();
      tok_.k = RTok::K::AndAnd;
      return;
    }
    if (c == '|' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '|') {
      advance();
      advance();
      tok_.k = RTok::K::OrOr;
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
      if (pos_ >= src_.size())
        fail(Errc::SyntaxError, std::to_string(tok_.line) + ":" + std::to_string(tok_.col) +
                                    ": unterminated string literal");
      advance();
      tok_.k = RTok::K::Str;
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
      tok_.k = RTok::K::Int;
      tok_.num = std::stoll(digits);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_')) {
        name += src_[pos_];
        advance();
      }
      // "@wp" marks a table reference whose declared provenance flags apply
      if (pos_ + 2 < src_.size() && src_[pos_] == '@' && src_[pos_ + 1] == 'w' &&
          src_[pos_ + 2] == 'p') {
        advance();
        advance();
        advance();
        name += "@wp";
      }
      tok_.k = RTok::K::Ident;
      tok_.text = std::move(name);
      return;
    }
    fail(Errc::SyntaxError, std::to_string(line_) + ":" + std::to_string(col_) +
                                ": unexpected character '" + std::string(1, c) + "'");
  }

  bool match(std::string_view utf8) {
    if (src_.substr(pos_, utf8.size()) != utf8) return false;
    for (size_t i = 0; i < utf8.size(); ++i) advance();
    return true;
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
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  RTok tok_;
};

// Untyped parse tree; types are reconstructed in a second pass.
struct UExpr;
using URef = std::shared_ptr<UExpr>;

struct UAnnotOperand {
  enum class K { Bottom, Entry, Expr } k = K::Bottom;
  std::string table;
  URef key;
  URef expr;
};

struct UAnnot {
  enum class K { Bottom, Entry, Where, Chain } k = K::Bottom;
  std::string table, column;
  URef key;
  std::vector<UAnnotOperand> ops;
};

struct UExpr {
  enum class K {
    Int, Str, Bool, Unit, Ident, List, Tuple, App, Lam, Proj, Data, Prov, Annot, Eq, And, Or,
    Not, EmptyProv
  } k;
  std::int64_t num = 0;
  std::string text;  // ident / lam param / string literal / app head
  std::vector<URef> xs;
  URef sub;
  int proj = 0;
  UAnnot annot;
};

inline URef umake(UExpr::K k) {
  auto u = std::make_shared<UExpr>();
  u->k = k;
  return u;
}

class RParser {
public:
  explicit RParser(std::string_view src) : lex_(src) {}

  URef parse() {
    URef e = expr();
    if (lex_.peek().k != RTok::K::End) lex_.error("trailing input after term");
    return e;
  }

private:
  URef expr() {
    if (lex_.peek().k == RTok::K::Lambda) {
      lex_.take();
      RTok name = expect(RTok::K::Ident, "lambda parameter");
      expect(RTok::K::Dot, "'.' after lambda parameter");
      auto u = umake(UExpr::K::Lam);
      u->text = name.text;
      u->sub = expr();
      return u;
    }
    return or_expr();
  }

  URef or_expr() {
    URef lhs = and_expr();
    while (lex_.peek().k == RTok::K::OrOr) {
      lex_.take();
      auto u = umake(UExpr::K::Or);
      u->xs = {lhs, and_expr()};
      lhs = u;
    }
    return lhs;
  }

  URef and_expr() {
    URef lhs = eq_expr();
    while (lex_.peek().k == RTok::K::AndAnd) {
      lex_.take();
      auto u = umake(UExpr::K::And);
      u->xs = {lhs, eq_expr()};
      lhs = u;
    }
    return lhs;
  }

  URef eq_expr() {
    URef lhs = app_expr();
    if (lex_.peek().k == RTok::K::EqEq) {
      lex_.take();
      auto u = umake(UExpr::K::Eq);
      u->xs = {lhs, app_expr()};
      return u;
    }
    return lhs;
  }

  bool starts_postfix() {
    switch (lex_.peek().k) {
      case RTok::K::Ident:
      case RTok::K::Int:
      case RTok::K::Str:
      case RTok::K::LParen:
      case RTok::K::LBrack:
      case RTok::K::Lambda:
        return true;
      default:
        return false;
    }
  }

  URef app_expr() {
    URef head = postfix();
    if (!starts_postfix()) return head;
    std::vector<URef> args;
    while (starts_postfix()) args.push_back(postfix());
    if (head->k == UExpr::K::Ident && head->text == "not" && args.size() == 1) {
      auto u = umake(UExpr::K::Not);
      u->xs = {args[0]};
      return u;
    }
    if (head->k == UExpr::K::Ident && head->text == "emptyProv" && args.size() == 1) {
      auto u = umake(UExpr::K::EmptyProv);
      u->sub = args[0];
      return u;
    }
    if (head->k != UExpr::K::Ident) lex_.error("application head must be a built-in name");
    auto u = umake(UExpr::K::App);
    u->text = head->text;
    u->xs = std::move(args);
    return u;
  }

  URef postfix() {
    URef e = atom();
    for (;;) {
      if (lex_.peek().k == RTok::K::Dot) {
        lex_.take();
        RTok t = lex_.take();
        if (t.k == RTok::K::Int) {
          auto u = umake(UExpr::K::Proj);
          u->sub = e;
          u->proj = static_cast<int>(t.num);
          e = u;
        } else if (t.k == RTok::K::Ident && t.text == "data") {
          auto u = umake(UExpr::K::Data);
          u->sub = e;
          e = u;
        } else if (t.k == RTok::K::Ident && t.text == "prov") {
          auto u = umake(UExpr::K::Prov);
          u->sub = e;
          e = u;
        } else {
          lex_.error("expected component index, 'data', or 'prov' after '.'");
        }
      } else if (lex_.peek().k == RTok::K::Caret) {
        lex_.take();
        auto u = umake(UExpr::K::Annot);
        u->sub = e;
        u->annot = annotation();
        e = u;
      } else {
        break;
      }
    }
    return e;
  }

  UAnnot annotation() {
    UAnnot a;
    if (lex_.peek().k == RTok::K::Bottom) {
      lex_.take();
      a.k = UAnnot::K::Bottom;
      return a;
    }
    expect(RTok::K::LParen, "'(' or '⊥' after '^'");
    if (lex_.peek().k == RTok::K::Str) {
      // (t, k) lineage entry or (t, c, k) where-provenance annotation
      std::string table = lex_.take().text;
      expect(RTok::K::Comma, "',' in annotation");
      if (lex_.peek().k == RTok::K::Str) {
        RTok second = lex_.take();
        if (lex_.peek().k == RTok::K::Comma) {
          lex_.take();
          a.k = UAnnot::K::Where;
          a.table = table;
          a.column = second.text;
          a.key = expr();
          expect(RTok::K::RParen, "')' closing annotation");
          return a;
        }
        // (t, "literal-key") entry
        expect(RTok::K::RParen, "')' closing annotation");
        a.k = UAnnot::K::Entry;
        a.table = table;
        auto lit = umake(UExpr::K::Str);
        lit->text = second.text;
        a.key = lit;
        return a;
      }
      a.k = UAnnot::K::Entry;
      a.table = table;
      a.key = expr();
      expect(RTok::K::RParen, "')' closing annotation");
      return a;
    }
    // ⊕-chain of lineage operands
    a.k = UAnnot::K::Chain;
    a.ops.push_back(annot_operand());
    while (lex_.peek().k == RTok::K::OPlus) {
      lex_.take();
      a.ops.push_back(annot_operand());
    }
    expect(RTok::K::RParen, "')' closing annotation");
    return a;
  }

  UAnnotOperand annot_operand() {
    UAnnotOperand op;
    if (lex_.peek().k == RTok::K::Bottom) {
      lex_.take();
      op.k = UAnnotOperand::K::Bottom;
      return op;
    }
    if (lex_.peek().k == RTok::K::LParen) {
      // could be a parenthesized (t, k) entry or a parenthesized expression
      lex_.take();
      if (lex_.peek().k == RTok::K::Str) {
        op.k = UAnnotOperand::K::Entry;
        op.table = lex_.take().text;
        expect(RTok::K::Comma, "',' in lineage entry");
        op.key = expr();
        expect(RTok::K::RParen, "')' closing lineage entry");
        return op;
      }
      op.k = UAnnotOperand::K::Expr;
      op.expr = expr();
      expect(RTok::K::RParen, "')'");
      return op;
    }
    op.k = UAnnotOperand::K::Expr;
    op.expr = postfix();
    return op;
  }

  URef atom() {
    const RTok& t = lex_.peek();
    switch (t.k) {
      case RTok::K::Int: {
        auto u = umake(UExpr::K::Int);
        u->num = lex_.take().num;
        return u;
      }
      case RTok::K::Str: {
        auto u = umake(UExpr::K::Str);
        u->text = lex_.take().text;
        return u;
      }
      case RTok::K::Ident: {
        std::string name = lex_.take().text;
        if (name == "true" || name == "false") {
          auto u = umake(UExpr::K::Bool);
          u->num = (name == "true");
          return u;
        }
        auto u = umake(UExpr::K::Ident);
        u->text = std::move(name);
        return u;
      }
      case RTok::K::Lambda: return expr();
      case RTok::K::LParen: {
        lex_.take();
        if (lex_.peek().k == RTok::K::RParen) {
          lex_.take();
          return umake(UExpr::K::Unit);
        }
        std::vector<URef> items;
        items.push_back(expr());
        while (lex_.peek().k == RTok::K::Comma) {
          lex_.take();
          items.push_back(expr());
        }
        expect(RTok::K::RParen, "')'");
        if (items.size() == 1) return items[0];
        auto u = umake(UExpr::K::Tuple);
        u->xs = std::move(items);
        return u;
      }
      case RTok::K::LBrack: {
        lex_.take();
        auto u = umake(UExpr::K::List);
        if (lex_.peek().k != RTok::K::RBrack) {
          u->xs.push_back(expr());
          while (lex_.peek().k == RTok::K::Comma) {
            lex_.take();
            u->xs.push_back(expr());
          }
        }
        expect(RTok::K::RBrack, "']'");
        return u;
      }
      default: lex_.error("expected a term");
    }
  }

  RTok expect(RTok::K k, const std::string& what) {
    if (lex_.peek().k != k) lex_.error("expected " + what);
    return lex_.take();
  }

  RLexer lex_;
};

class TermReader {
public:
  TermReader(const Catalog& catalog, KeyType default_key)
      : catalog_(catalog), default_key_(std::move(default_key)) {}

  ExprRef infer(const URef& u) {
    switch (u->k) {
      case UExpr::K::Int: return make_int(u->num);
      case UExpr::K::Str: return make_str(u->text);
      case UExpr::K::Bool: return make_bool(u->num != 0);
      case UExpr::K::Unit: return make_unit();
      case UExpr::K::Ident: return ident(u->text);
      case UExpr::K::List: return make_list(infer_all(u->xs));
      case UExpr::K::Tuple: return make_tuple(infer_all(u->xs));
      case UExpr::K::Proj: return make_tuple_proj(u->proj, infer(u->sub));
      case UExpr::K::Data: return make_data_proj(infer(u->sub));
      case UExpr::K::Prov: return make_prov_proj(infer(u->sub));
      case UExpr::K::Eq: return make_eq(infer(u->xs[0]), infer(u->xs[1]));
      case UExpr::K::And: return make_scalar_op(ScalarOp::And, infer_all(u->xs));
      case UExpr::K::Or: return make_scalar_op(ScalarOp::Or, infer_all(u->xs));
      case UExpr::K::Not: return make_scalar_op(ScalarOp::Not, infer_all(u->xs));
      case UExpr::K::EmptyProv: return make_empty_prov(infer(u->sub), default_key_);
      case UExpr::K::Annot: return annot(u);
      case UExpr::K::App: return app(u);
      case UExpr::K::Lam:
        fail(Errc::SyntaxError, "cannot infer the parameter type of a standalone lambda");
    }
    fail(Errc::SyntaxError, "malformed term");
  }

private:
  ExprRef ident(const std::string& name) {
    if (auto it = env_.find(name); it != env_.end()) return make_var(name, it->second);
    bool wp = name.size() > 3 && name.substr(name.size() - 3) == "@wp";
    std::string table = wp ? name.substr(0, name.size() - 3) : name;
    if (auto decl = catalog_.find(table)) return make_table(decl, logical_row_type(*decl, wp));
    fail(Errc::UnboundVariable, "unknown variable or table '" + name + "'");
  }

  ExprRef app(const URef& u) {
    const std::string& head = u->text;
    if (head == "concatMap" || head == "map") {
      require_arity(u, 2);
      if (u->xs[0]->k != UExpr::K::Lam)
        fail(Errc::SyntaxError, head + " expects a lambda argument");
      ExprRef xs = infer(u->xs[1]);
      TypeRef xs_ty = typecheck(xs, env_);
      if (xs_ty->kind != Type::Kind::List)
        fail(Errc::TypeMismatch, head + " traverses a list, got " + type_to_string(xs_ty));
      ExprRef lam = lambda(u->xs[0], xs_ty->elem);
      BuiltinFn fn{head == "map" ? BuiltinFn::Kind::Map : BuiltinFn::Kind::ConcatMap};
      return make_app(fn, {lam, xs});
    }
    if (head == "append") return fixed(u, {BuiltinFn::Kind::Append}, 2);
    if (head == "reverse") return fixed(u, {BuiltinFn::Kind::Reverse}, 1);
    if (head == "guard") return fixed(u, {BuiltinFn::Kind::Guard}, 1);
    if (head == "cons") return fixed(u, {BuiltinFn::Kind::Cons}, 2);
    if (head == "zip") return fixed(u, {BuiltinFn::Kind::Zip}, 2);
    fail(Errc::SyntaxError, "unknown built-in '" + head + "'");
  }

  ExprRef fixed(const URef& u, BuiltinFn fn, size_t arity) {
    require_arity(u, arity);
    return make_app(fn, infer_all(u->xs));
  }

  ExprRef lambda(const URef& u, const TypeRef& param_ty) {
    auto saved = bind(u->text, param_ty);
    ExprRef body = infer(u->sub);
    unbind(u->text, saved);
    return make_lam(u->text, param_ty, body);
  }

  ExprRef annot(const URef& u) {
    ExprRef body = infer(u->sub);
    const UAnnot& a = u->annot;
    switch (a.k) {
      case UAnnot::K::Bottom: return make_annot(body, bottom_annot(), default_key_);
      case UAnnot::K::Entry: {
        ExprRef key = infer(a.key);
        return make_annot(body, lineage_entry_annot(a.table, key), key_of(key));
      }
      case UAnnot::K::Where: {
        ExprRef key = infer(a.key);
        return make_annot(body, where_annot(a.table, a.column, key), key_of(key));
      }
      case UAnnot::K::Chain: {
        std::vector<Annot> parts;
        std::optional<KeyType> theta;
        for (const auto& op : a.ops) {
          switch (op.k) {
            case UAnnotOperand::K::Bottom: parts.push_back(bottom_annot()); break;
            case UAnnotOperand::K::Entry: {
              ExprRef key = infer(op.key);
              theta = theta ? theta : std::optional<KeyType>(key_of(key));
              parts.push_back(lineage_entry_annot(op.table, key));
              break;
            }
            case UAnnotOperand::K::Expr: {
              ExprRef entries = infer(op.expr);
              TypeRef t = typecheck(entries, env_);
              auto k = entries_key(t);
              if (!k)
                fail(Errc::TypeMismatch,
                     "⊕ operand must be a lineage entry list, got " + type_to_string(t));
              theta = theta ? theta : k;
              parts.push_back(lineage_annot(entries));
              break;
            }
          }
        }
        Annot result = parts[0];
        for (size_t i = 1; i < parts.size(); ++i) result = lineage_append(result, parts[i]);
        return make_annot(body, result, theta.value_or(default_key_));
      }
    }
    fail(Errc::SyntaxError, "malformed annotation");
  }

  KeyType key_of(const ExprRef& key_expr) {
    TypeRef t = typecheck(key_expr, env_);
    auto k = key_type_from_type(t);
    if (!k) fail(Errc::TypeMismatch, "annotation key has non-key type " + type_to_string(t));
    return *k;
  }

  static std::optional<KeyType> entries_key(const TypeRef& t) {
    if (t->kind != Type::Kind::List || t->elem->kind != Type::Kind::Tuple ||
        t->elem->parts.size() != 2 || !is_prim(t->elem->parts[0], Prim::Str))
      return std::nullopt;
    return key_type_from_type(t->elem->parts[1]);
  }

  std::vector<ExprRef> infer_all(const std::vector<URef>& xs) {
    std::vector<ExprRef> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(infer(x));
    return out;
  }

  void require_arity(const URef& u, size_t n) {
    if (u->xs.size() != n)
      fail(Errc::SyntaxError, u->text + " takes " + std::to_string(n) + " arguments");
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

  const Catalog& catalog_;
  KeyType default_key_;
  TypeEnv env_;
};

}  // namespace detail

// Parses the pretty-printed term notation. The result is fully typed and has
// been typechecked.
inline ExprRef read_term(std::string_view text, const Catalog& catalog,
                         KeyType default_key = KeyType(Prim::Int)) {
  detail::RParser parser(text);
  detail::URef u = parser.parse();
  detail::TermReader reader(catalog, std::move(default_key));
  ExprRef e = reader.infer(u);
  typecheck(e);
  return e;
}

}  // namespace provlq
