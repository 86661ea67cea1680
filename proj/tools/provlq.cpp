// provlq command-line front end: typecheck, desugar, transform, run, and
// emit SQL for comprehension queries over CSV-backed tables, plus the
// differential fuzzing harness. See README.md for usage.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "provlq/provlq.hpp"

namespace {

struct CommonArgs {
  std::string catalog_path;
  std::string query_path;
  std::string mode_name = "plain";
  std::string key_type_name;
  std::string data_dir;
};

void add_query_options(CLI::App* cmd, CommonArgs& args, bool with_mode = true) {
  cmd->add_option("--catalog", args.catalog_path, "catalog file")->required();
  cmd->add_option("--query", args.query_path, "query file")->required();
  if (with_mode) {
    cmd->add_option("--mode", args.mode_name, "plain, whereprov, or lineage")
        ->check(CLI::IsMember({"plain", "whereprov", "lineage"}));
    cmd->add_option("--key-type", args.key_type_name,
                    "lineage key type, e.g. int or (int, string)");
  }
}

provlq::Mode mode_of(const CommonArgs& args) {
  auto m = provlq::parse_mode(args.mode_name);
  if (!m) provlq::fail(provlq::Errc::SyntaxError, "unknown mode '" + args.mode_name + "'");
  return *m;
}

std::optional<provlq::KeyType> key_of(const CommonArgs& args) {
  if (args.key_type_name.empty()) return std::nullopt;
  auto k = provlq::KeyType::parse(args.key_type_name);
  if (!k)
    provlq::fail(provlq::Errc::SyntaxError,
                 "invalid --key-type '" + args.key_type_name + "'");
  return k;
}

provlq::CompiledQuery compile(const CommonArgs& args, provlq::Mode mode) {
  provlq::Catalog catalog = provlq::load_catalog(args.catalog_path);
  std::string src = provlq::read_file(args.query_path);
  provlq::NameSupply supply;
  return provlq::compile_query(src, catalog, mode, key_of(args), supply, args.query_path);
}

int run_fuzz(int seeds, std::uint64_t base_seed) {
  int failed = 0;
  std::optional<std::uint64_t> first_failure;
  std::string first_detail;
  for (int i = 0; i < seeds; ++i) {
    std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    provlq::oracle::FuzzCase c = provlq::oracle::gen_random_case(seed);
    provlq::oracle::Verdict v = provlq::oracle::differential_check(c);
    if (!v.ok) {
      ++failed;
      if (!first_failure) {
        first_failure = seed;
        first_detail = v.detail;
      }
    }
  }
  std::cout << "seeds " << base_seed << ".." << base_seed + seeds - 1 << ": "
            << (seeds - failed) << " passed, " << failed << " failed\n";
  if (first_failure)
    std::cout << "first failure: seed " << *first_failure << ": " << first_detail << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"language-integrated queries with where-provenance and lineage tracking"};
  app.require_subcommand(1);

  CommonArgs args;
  int fuzz_seeds = 1000;

  CLI::App* check = app.add_subcommand("check", "parse and typecheck a query, print its type");
  add_query_options(check, args);

  CLI::App* desugar = app.add_subcommand("desugar", "print the desugared core term");
  add_query_options(desugar, args);

  CLI::App* transform =
      app.add_subcommand("transform", "print the provenance-transformed core term");
  add_query_options(transform, args);

  CLI::App* run = app.add_subcommand("run", "execute a query, print canonical JSON");
  add_query_options(run, args);
  run->add_option("--data", args.data_dir, "directory with <table>.csv files")->required();

  CLI::App* sql = app.add_subcommand("sql", "emit SQL for the flat conjunctive subset");
  add_query_options(sql, args, /*with_mode=*/false);

  CLI::App* fuzz = app.add_subcommand("fuzz", "differential check against the oracle");
  fuzz->add_option("--seeds", fuzz_seeds, "number of seeds to run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      auto compiled = compile(args, mode_of(args));
      std::cout << provlq::type_to_string(compiled.type) << "\n";
      return 0;
    }
    if (desugar->parsed()) {
      auto compiled = compile(args, mode_of(args));
      std::cout << provlq::pretty(compiled.desugared) << "\n";
      return 0;
    }
    if (transform->parsed()) {
      provlq::Mode mode = mode_of(args);
      if (mode == provlq::Mode::Plain)
        provlq::fail(provlq::Errc::SyntaxError,
                     "transform needs --mode whereprov or --mode lineage");
      auto compiled = compile(args, mode);
      std::cout << provlq::pretty(compiled.transformed) << "\n";
      return 0;
    }
    if (run->parsed()) {
      provlq::Catalog catalog = provlq::load_catalog(args.catalog_path);
      provlq::Database db = provlq::load_database(catalog, args.data_dir);
      std::string src = provlq::read_file(args.query_path);
      auto result =
          provlq::run_pipeline(src, catalog, db, mode_of(args), key_of(args), args.query_path);
      std::cout << provlq::render_result(result.value) << "\n";
      return 0;
    }
    if (sql->parsed()) {
      auto compiled = compile(args, provlq::Mode::WhereProv);
      std::cout << provlq::to_sql(compiled.transformed) << "\n";
      return 0;
    }
    if (fuzz->parsed()) {
      std::uint64_t base_seed = 0;
      if (const char* env = std::getenv("PROVLQ_SEED")) base_seed = std::strtoull(env, nullptr, 10);
      return run_fuzz(fuzz_seeds, base_seed);
    }
  } catch (const provlq::Error& e) {
    if (e.code() == provlq::Errc::EvalType) {
      std::cerr << "internal error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
