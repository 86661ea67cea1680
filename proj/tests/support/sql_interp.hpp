#pragma once

// Test-only reference for emitted SQL: parses the statement text and executes
// it with textbook multiset SELECT-FROM-WHERE semantics (nested loops over
// the FROM tables, conjunctive WHERE, column projection). Deliberately
// independent of the query evaluator.

#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "provlq/provlq.hpp"

namespace sqlref {

struct ColumnRef {
  std::string alias;
  std::string column;
};

struct Operand {
  enum class Kind { Column, Str, Int } kind = Kind::Column;
  ColumnRef col;
  std::string str;
  long long num = 0;
};

struct Statement {
  std::vector<ColumnRef> select;                    // projected columns, in order
  std::vector<std::pair<std::string, std::string>> from;  // (table, alias)
  std::vector<std::pair<Operand, Operand>> where;   // conjunctive equalities
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

// splits on ", " outside single quotes
inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\'') quoted = !quoted;
    if (!quoted && c == ',') {
      out.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur += c;
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

inline ColumnRef parse_column(const std::string& s) {
  size_t dot = s.find('.');
  if (dot == std::string::npos) throw std::runtime_error("sqlref: expected alias.column: " + s);
  return ColumnRef{s.substr(0, dot), s.substr(dot + 1)};
}

inline Operand parse_operand(const std::string& text) {
  Operand op;
  if (!text.empty() && text.front() == '\'') {
    if (text.back() != '\'') throw std::runtime_error("sqlref: bad string literal " + text);
    op.kind = Operand::Kind::Str;
    std::string body = text.substr(1, text.size() - 2);
    std::string out;
    for (size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '\'' && i + 1 < body.size() && body[i + 1] == '\'') ++i;
      out += body[i];
    }
    op.str = out;
    return op;
  }
  if (!text.empty() && (std::isdigit(static_cast<unsigned char>(text[0])) || text[0] == '-')) {
    op.kind = Operand::Kind::Int;
    op.num = std::stoll(text);
    return op;
  }
  op.kind = Operand::Kind::Column;
  op.col = parse_column(text);
  return op;
}

}  // namespace detail

inline Statement parse_statement(const std::string& sql) {
  using detail::trim;
  size_t from_pos = sql.find("\nFROM ");
  if (from_pos == std::string::npos) throw std::runtime_error("sqlref: missing FROM");
  size_t where_pos = sql.find("\nWHERE ");

  std::string select_part = trim(sql.substr(7, from_pos - 7));
  std::string from_part =
      where_pos == std::string::npos
          ? trim(sql.substr(from_pos + 6))
          : trim(sql.substr(from_pos + 6, where_pos - (from_pos + 6)));
  std::string where_part = where_pos == std::string::npos ? "" : trim(sql.substr(where_pos + 7));

  Statement st;
  for (const auto& item : detail::split_commas(select_part)) {
    size_t as_pos = item.find(" AS ");
    if (as_pos == std::string::npos) throw std::runtime_error("sqlref: missing AS in " + item);
    st.select.push_back(detail::parse_column(detail::trim(item.substr(0, as_pos))));
  }
  for (const auto& item : detail::split_commas(from_part)) {
    size_t as_pos = item.find(" AS ");
    if (as_pos == std::string::npos) throw std::runtime_error("sqlref: missing AS in " + item);
    st.from.emplace_back(detail::trim(item.substr(0, as_pos)),
                         detail::trim(item.substr(as_pos + 4)));
  }
  if (!where_part.empty()) {
    size_t pos = 0;
    while (pos < where_part.size()) {
      size_t open = where_part.find('(', pos);
      if (open == std::string::npos) break;
      size_t close = where_part.find(')', open);
      if (close == std::string::npos) throw std::runtime_error("sqlref: unbalanced WHERE");
      std::string cond = where_part.substr(open + 1, close - open - 1);
      size_t eq = cond.find(" = ");
      if (eq == std::string::npos) throw std::runtime_error("sqlref: non-equality condition");
      st.where.emplace_back(detail::parse_operand(detail::trim(cond.substr(0, eq))),
                            detail::parse_operand(detail::trim(cond.substr(eq + 3))));
      pos = close + 1;
    }
  }
  return st;
}

// Multiset of projected rows, nested-loop evaluation.
inline std::vector<provlq::Value> execute(const Statement& st, const provlq::Database& db) {
  using provlq::Value;
  std::map<std::string, const provlq::TableDecl*> decls;
  for (const auto& [table, alias] : st.from) decls[alias] = db.decl(table).get();

  auto cell = [&](const std::map<std::string, const Value*>& env, const ColumnRef& c) -> Value {
    const provlq::TableDecl* decl = decls.at(c.alias);
    int idx = decl->column_index(c.column);
    if (idx == 0) throw std::runtime_error("sqlref: unknown column " + c.column);
    return env.at(c.alias)->parts()[idx - 1];
  };
  auto operand = [&](const std::map<std::string, const Value*>& env, const Operand& op) -> Value {
    switch (op.kind) {
      case Operand::Kind::Column: return cell(env, op.col);
      case Operand::Kind::Str: return Value::str(op.str);
      case Operand::Kind::Int: return Value::integer(op.num);
    }
    throw std::runtime_error("sqlref: bad operand");
  };

  std::vector<Value> out;
  std::map<std::string, const Value*> env;
  std::function<void(size_t)> loop = [&](size_t i) {
    if (i == st.from.size()) {
      for (const auto& [lhs, rhs] : st.where)
        if (!(operand(env, lhs) == operand(env, rhs))) return;
      std::vector<Value> row;
      for (const auto& c : st.select) row.push_back(cell(env, c));
      out.push_back(row.size() == 1 ? row[0] : Value::tuple(std::move(row)));
      return;
    }
    const auto& [table, alias] = st.from[i];
    for (const Value& r : db.rows(table)) {
      env[alias] = &r;
      loop(i + 1);
    }
    env.erase(alias);
  };
  loop(0);
  return out;
}

inline std::vector<provlq::Value> run_sql(const std::string& sql, const provlq::Database& db) {
  return execute(parse_statement(sql), db);
}

}  // namespace sqlref
