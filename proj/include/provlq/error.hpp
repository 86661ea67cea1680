#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace provlq {

enum class Errc {
  // type checking
  TypeMismatch,
  UnboundVariable,
  AnnotationMisuse,
  // surface parsing
  SyntaxError,
  UnknownTable,
  UnknownField,
  // catalog and data loading
  CatalogParse,
  DuplicateTable,
  BadKeySpec,
  HeaderMismatch,
  CellParse,
  DuplicateKey,
  // transformations
  KeyTypeMismatch,
  CompositionUnsupported,
  UnsupportedConstruct,
  // SQL emission
  NotFlat,
  // evaluation (defensive; unreachable on typechecked input)
  EvalType,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::UnboundVariable: return "UnboundVariable";
    case Errc::AnnotationMisuse: return "AnnotationMisuse";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownTable: return "UnknownTable";
    case Errc::UnknownField: return "UnknownField";
    case Errc::CatalogParse: return "CatalogParse";
    case Errc::DuplicateTable: return "DuplicateTable";
    case Errc::BadKeySpec: return "BadKeySpec";
    case Errc::HeaderMismatch: return "HeaderMismatch";
    case Errc::CellParse: return "CellParse";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::KeyTypeMismatch: return "KeyTypeMismatch";
    case Errc::CompositionUnsupported: return "CompositionUnsupported";
    case Errc::UnsupportedConstruct: return "UnsupportedConstruct";
    case Errc::NotFlat: return "NotFlat";
    case Errc::EvalType: return "EvalType";
  }
  return "Error";
}

// All library failures are reported through this exception. `path()` carries a
// dotted location into the offending expression or file when one is known.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message, std::string path = {})
      : std::runtime_error(path.empty() ? message : message + " (at " + path + ")"),
        code_(code),
        path_(std::move(path)) {}

  Errc code() const { return code_; }
  const std::string& path() const { return path_; }

private:
  Errc code_;
  std::string path_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message, std::string path = {}) {
  throw Error(code, message, std::move(path));
}

}  // namespace provlq
