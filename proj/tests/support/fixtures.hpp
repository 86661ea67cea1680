#pragma once

#include <string>

#include "provlq/provlq.hpp"

namespace fixtures {

inline std::string sample_path(const std::string& name) {
  return std::string(PROVLQ_SAMPLE_DIR) + "/" + name;
}

inline std::string data_path(const std::string& name) {
  return std::string(PROVLQ_TEST_DATA_DIR) + "/" + name;
}

inline std::string golden(const std::string& name) {
  return provlq::read_file(data_path("golden/" + name));
}

inline const provlq::Catalog& tours_catalog() {
  static provlq::Catalog c = provlq::load_catalog(sample_path("catalog.txt"));
  return c;
}

inline const provlq::Catalog& tours_catalog_wp() {
  static provlq::Catalog c = provlq::load_catalog(sample_path("catalog_wp.txt"));
  return c;
}

inline const provlq::Database& tours_db() {
  static provlq::Database db = provlq::load_database(tours_catalog(), sample_path(""));
  return db;
}

inline std::string query_src(const std::string& name) {
  return provlq::read_file(sample_path(name));
}

inline provlq::ExprRef desugar_file(const std::string& name, const provlq::Catalog& catalog,
                                    bool honor_wp = false) {
  provlq::NameSupply supply;
  auto q = provlq::surface::parse(query_src(name), catalog);
  return provlq::surface::desugar(q, supply, honor_wp);
}

}  // namespace fixtures
