#include "provlog/error.hpp"

namespace provlog {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::KindConflict: return "kind-conflict";
    case ErrorCode::UnknownEntity: return "unknown-entity";
    case ErrorCode::UnknownPredicate: return "unknown-predicate";
    case ErrorCode::ArityMismatch: return "arity-mismatch";
    case ErrorCode::TypeMismatch: return "type-mismatch";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::InvalidProgram: return "invalid-program";
    case ErrorCode::Unstratifiable: return "unstratifiable";
    case ErrorCode::ResourceLimit: return "resource-limit";
    case ErrorCode::NotDerived: return "not-derived";
    case ErrorCode::InfeasibleSpec: return "infeasible-spec";
    case ErrorCode::Io: return "io-error";
  }
  return "unknown";
}

}  // namespace provlog
