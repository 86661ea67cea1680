#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "provlq/error.hpp"
#include "provlq/types.hpp"
#include "provlq/value.hpp"

namespace provlq {

// A catalog entry: table schema, key columns (the key projection φ reads them
// in order), and the set of columns with where-provenance tracking enabled.
struct TableDecl {
  std::string name;
  std::vector<std::pair<std::string, Prim>> columns;  // label, cell type
  std::vector<std::string> key_columns;               // non-empty
  std::vector<std::string> where_prov_columns;        // possibly empty

  // 1-based column position, 0 if the label is unknown.
  int column_index(std::string_view label) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i].first == label) return static_cast<int>(i) + 1;
    return 0;
  }

  bool is_flagged(std::string_view label) const {
    for (const auto& c : where_prov_columns)
      if (c == label) return true;
    return false;
  }

  bool has_flags() const { return !where_prov_columns.empty(); }

  KeyType key_type() const {
    std::vector<Prim> parts;
    for (const auto& k : key_columns) parts.push_back(columns[column_index(k) - 1].second);
    return KeyType(std::move(parts));
  }
};

using TableDeclRef = std::shared_ptr<const TableDecl>;

class Catalog {
public:
  Catalog() = default;

  void add(TableDecl decl) {
    if (find(decl.name)) fail(Errc::DuplicateTable, "duplicate table declaration '" + decl.name + "'");
    tables_.push_back(std::make_shared<const TableDecl>(std::move(decl)));
  }

  TableDeclRef find(std::string_view name) const {
    for (const auto& t : tables_)
      if (t->name == name) return t;
    return nullptr;
  }

  TableDeclRef require(std::string_view name) const {
    if (auto t = find(name)) return t;
    fail(Errc::UnknownTable, "unknown table '" + std::string(name) + "'");
  }

  const std::vector<TableDeclRef>& tables() const { return tables_; }

private:
  std::vector<TableDeclRef> tables_;
};

// Row type with no provenance annotations; always a tuple of primitives.
inline TypeRef raw_row_type(const TableDecl& decl) {
  std::vector<TypeRef> parts;
  parts.reserve(decl.columns.size());
  for (const auto& [label, prim] : decl.columns) parts.push_back(prim_type(prim));
  return tuple_type(std::move(parts));
}

// Row type as declared: flagged columns carry a where-provenance type. With
// honor_whereprov false the flags are ignored and the raw row type is returned.
inline TypeRef logical_row_type(const TableDecl& decl, bool honor_whereprov) {
  if (!honor_whereprov || !decl.has_flags()) return raw_row_type(decl);
  KeyType key = decl.key_type();
  std::vector<TypeRef> parts;
  parts.reserve(decl.columns.size());
  for (const auto& [label, prim] : decl.columns) {
    if (decl.is_flagged(label))
      parts.push_back(where_prov_type(prim_type(prim), key));
    else
      parts.push_back(prim_type(prim));
  }
  return tuple_type(std::move(parts));
}

// φ: project the key value out of a row. A single scalar for one key column,
// a tuple of scalars in declaration order for compound keys.
inline Value key_projection(const TableDecl& decl, const Value& row) {
  if (row.kind() != Value::Kind::Tuple || row.parts().size() != decl.columns.size())
    fail(Errc::EvalType, "row does not conform to declaration of '" + decl.name + "'");
  if (decl.key_columns.size() == 1)
    return row.parts()[decl.column_index(decl.key_columns[0]) - 1];
  std::vector<Value> parts;
  for (const auto& k : decl.key_columns) parts.push_back(row.parts()[decl.column_index(k) - 1]);
  return Value::tuple(std::move(parts));
}

// All tables used by a query must share one key type for lineage tracking.
template <typename Decls>
KeyType uniform_key_type(const Decls& decls) {
  std::optional<KeyType> key;
  std::string first_table;
  for (const auto& d : decls) {
    KeyType k = d->key_type();
    if (!key) {
      key = k;
      first_table = d->name;
    } else if (!(*key == k)) {
      fail(Errc::KeyTypeMismatch,
           "Type of table key does not match type of lineage key: table '" + d->name +
               "' has key " + k.to_string() + " but '" + first_table + "' has key " +
               key->to_string());
    }
  }
  if (!key) fail(Errc::KeyTypeMismatch, "cannot determine key type: no tables given");
  return *key;
}

// ---------------------------------------------------------------------------
// Catalog file format (see docs/formats.md): line-based key/value sections.
//
//   table agencies
//   column a_id int
//   column a_name string
//   key a_id
//   whereprov a_name
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

inline void validate_decl(const TableDecl& decl, const std::string& where) {
  if (decl.columns.size() < 2 || decl.columns.size() > 16)
    fail(Errc::CatalogParse, where + ": table '" + decl.name +
                                 "' must declare between 2 and 16 columns (rows are tuples)");
  for (size_t i = 0; i < decl.columns.size(); ++i)
    for (size_t j = i + 1; j < decl.columns.size(); ++j)
      if (decl.columns[i].first == decl.columns[j].first)
        fail(Errc::CatalogParse,
             where + ": duplicate column '" + decl.columns[i].first + "' in '" + decl.name + "'");
  if (decl.key_columns.empty())
    fail(Errc::BadKeySpec, where + ": table '" + decl.name + "' declares no key columns");
  for (const auto& k : decl.key_columns) {
    if (decl.column_index(k) == 0)
      fail(Errc::BadKeySpec, where + ": key column '" + k + "' is not a column of '" + decl.name + "'");
    if (decl.is_flagged(k))
      fail(Errc::BadKeySpec, where + ": key column '" + k + "' of '" + decl.name +
                                 "' cannot have where-provenance tracking");
  }
  for (const auto& c : decl.where_prov_columns)
    if (decl.column_index(c) == 0)
      fail(Errc::CatalogParse,
           where + ": where-provenance column '" + c + "' is not a column of '" + decl.name + "'");
}

}  // namespace detail

inline Catalog parse_catalog(std::string_view text, const std::string& origin = "<catalog>") {
  Catalog catalog;
  std::optional<TableDecl> current;
  bool saw_key = false;
  int line_no = 0;

  auto finish = [&] {
    if (!current) return;
    std::string where = origin + ":" + std::to_string(line_no);
    if (!saw_key) fail(Errc::BadKeySpec, where + ": table '" + current->name + "' declares no key columns");
    detail::validate_decl(*current, where);
    catalog.add(std::move(*current));
    current.reset();
  };

  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line =
        eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
    ++line_no;
    std::string where = origin + ":" + std::to_string(line_no);
    auto words = detail::split_ws(line);
    if (!words.empty() && words[0][0] != '#') {
      const std::string& head = words[0];
      if (head == "table") {
        if (words.size() != 2) fail(Errc::CatalogParse, where + ": expected 'table <name>'");
        finish();
        current = TableDecl{};
        current->name = words[1];
        saw_key = false;
      } else if (!current) {
        fail(Errc::CatalogParse, where + ": '" + head + "' outside a table section");
      } else if (head == "column") {
        if (words.size() != 3) fail(Errc::CatalogParse, where + ": expected 'column <label> <type>'");
        auto prim = parse_prim_name(words[2]);
        if (!prim || *prim == Prim::Unit)
          fail(Errc::CatalogParse, where + ": column type must be int, string, or bool");
        current->columns.emplace_back(words[1], *prim);
      } else if (head == "key") {
        if (words.size() < 2) fail(Errc::BadKeySpec, where + ": expected 'key <label>...'");
        if (saw_key) fail(Errc::BadKeySpec, where + ": duplicate key line for '" + current->name + "'");
        current->key_columns.assign(words.begin() + 1, words.end());
        saw_key = true;
      } else if (head == "whereprov") {
        for (size_t i = 1; i < words.size(); ++i) current->where_prov_columns.push_back(words[i]);
      } else {
        fail(Errc::CatalogParse, where + ": unknown directive '" + head + "'");
      }
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  finish();
  return catalog;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::CatalogParse, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Catalog load_catalog(const std::filesystem::path& path) {
  return parse_catalog(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// CSV: comma-separated, first row is the header, double-quote escaping.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<std::string>> parse_csv_cells(std::string_view text,
                                                             const std::string& origin) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool in_quotes = false;
  bool cell_started = false;
  size_t i = 0;
  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell.clear();
    cell_started = false;
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"' && !cell_started) {
      in_quotes = true;
      cell_started = true;
    } else if (c == ',') {
      end_cell();
    } else if (c == '\n') {
      if (!cell.empty() || cell_started || !row.empty()) end_row();
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      cell += c;
      cell_started = true;
    }
    ++i;
  }
  if (in_quotes) fail(Errc::CellParse, origin + ": unterminated quoted cell");
  if (!cell.empty() || cell_started || !row.empty()) end_row();
  return rows;
}

inline Value parse_cell(const std::string& text, Prim type, const std::string& origin, size_t row,
                        size_t col) {
  auto where = origin + ": row " + std::to_string(row) + ", column " + std::to_string(col);
  switch (type) {
    case Prim::Int: {
      size_t idx = 0;
      try {
        std::int64_t v = std::stoll(text, &idx);
        if (idx != text.size() || text.empty()) throw std::invalid_argument("trailing");
        return Value::integer(v);
      } catch (const std::exception&) {
        fail(Errc::CellParse, where + ": '" + text + "' is not an integer");
      }
    }
    case Prim::Bool:
      if (text == "true") return Value::boolean(true);
      if (text == "false") return Value::boolean(false);
      fail(Errc::CellParse, where + ": '" + text + "' is not a boolean (true/false)");
    case Prim::Str: return Value::str(text);
    case Prim::Unit: break;
  }
  fail(Errc::CellParse, where + ": unsupported cell type");
}

}  // namespace detail

inline std::vector<Value> parse_csv(const TableDecl& decl, std::string_view text,
                                    const std::string& origin = "<csv>") {
  auto cells = detail::parse_csv_cells(text, origin);
  if (cells.empty()) fail(Errc::HeaderMismatch, origin + ": missing header row");
  const auto& header = cells[0];
  if (header.size() != decl.columns.size())
    fail(Errc::HeaderMismatch, origin + ": header has " + std::to_string(header.size()) +
                                   " columns, declaration has " +
                                   std::to_string(decl.columns.size()));
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] != decl.columns[i].first)
      fail(Errc::HeaderMismatch, origin + ": header column " + std::to_string(i + 1) + " is '" +
                                     header[i] + "', expected '" + decl.columns[i].first + "'");

  std::vector<Value> rows;
  std::vector<Value> seen_keys;
  for (size_t r = 1; r < cells.size(); ++r) {
    const auto& line = cells[r];
    if (line.size() != decl.columns.size())
      fail(Errc::CellParse, origin + ": row " + std::to_string(r + 1) + " has " +
                                std::to_string(line.size()) + " cells, expected " +
                                std::to_string(decl.columns.size()));
    std::vector<Value> parts;
    parts.reserve(line.size());
    for (size_t c = 0; c < line.size(); ++c)
      parts.push_back(detail::parse_cell(line[c], decl.columns[c].second, origin, r + 1, c + 1));
    Value row = Value::tuple(std::move(parts));
    Value key = key_projection(decl, row);
    for (const auto& k : seen_keys)
      if (k == key)
        fail(Errc::DuplicateKey,
             origin + ": row " + std::to_string(r + 1) + " duplicates key of table '" + decl.name + "'");
    seen_keys.push_back(key);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<Value> load_csv(const TableDecl& decl, const std::filesystem::path& path) {
  return parse_csv(decl, read_file(path), path.string());
}

inline std::string write_csv(const TableDecl& decl, const std::vector<Value>& rows) {
  auto quote = [](const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
      if (c == '"') out += "\"\"";
      else out += c;
    }
    return out + "\"";
  };
  std::string out;
  for (size_t i = 0; i < decl.columns.size(); ++i) {
    if (i) out += ',';
    out += quote(decl.columns[i].first);
  }
  out += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.parts().size(); ++i) {
      if (i) out += ',';
      const Value& v = row.parts()[i];
      switch (v.kind()) {
        case Value::Kind::Int: out += std::to_string(v.as_int()); break;
        case Value::Kind::Bool: out += v.as_bool() ? "true" : "false"; break;
        case Value::Kind::Str: out += quote(v.as_str()); break;
        default: fail(Errc::EvalType, "non-scalar cell in row of '" + decl.name + "'");
      }
    }
    out += '\n';
  }
  return out;
}

// In-memory database: per-table row lists in file order plus key lookup.
class Database {
public:
  void add_table(TableDeclRef decl, std::vector<Value> rows) {
    Table t;
    t.decl = std::move(decl);
    t.rows = std::move(rows);
    for (size_t i = 0; i < t.rows.size(); ++i)
      t.by_key.emplace(key_projection(*t.decl, t.rows[i]), i);
    tables_.emplace(t.decl->name, std::move(t));
  }

  bool has_table(std::string_view name) const { return tables_.count(std::string(name)) > 0; }

  const std::vector<Value>& rows(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) fail(Errc::UnknownTable, "no data loaded for table '" + name + "'");
    return it->second.rows;
  }

  TableDeclRef decl(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) fail(Errc::UnknownTable, "no data loaded for table '" + name + "'");
    return it->second.decl;
  }

  std::optional<Value> find_row(const std::string& table, const Value& key) const {
    auto it = tables_.find(table);
    if (it == tables_.end()) return std::nullopt;
    auto hit = it->second.by_key.find(key);
    if (hit == it->second.by_key.end()) return std::nullopt;
    return it->second.rows[hit->second];
  }

  std::vector<std::string> table_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : tables_) out.push_back(name);
    return out;
  }

private:
  struct Table {
    TableDeclRef decl;
    std::vector<Value> rows;
    std::map<Value, size_t> by_key;
  };
  std::map<std::string, Table> tables_;
};

// Loads <dir>/<table>.csv for every table in the catalog.
inline Database load_database(const Catalog& catalog, const std::filesystem::path& dir) {
  Database db;
  for (const auto& decl : catalog.tables())
    db.add_table(decl, load_csv(*decl, dir / (decl->name + ".csv")));
  return db;
}

}  // namespace provlq
