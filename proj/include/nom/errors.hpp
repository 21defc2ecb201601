#pragma once

#include <stdexcept>
#include <string>

#include "nom/ast.hpp"

namespace nom {

// Stable error codes rendered as `file:line:col: code: message`.
namespace errc {
inline constexpr const char* parse_error = "parse-error";
inline constexpr const char* unknown_name = "unknown-name";
inline constexpr const char* duplicate_name = "duplicate-name";
inline constexpr const char* contractiveness = "contractiveness-violation";
inline constexpr const char* linearity = "linearity-violation";
inline constexpr const char* potential_mismatch = "potential-mismatch";
inline constexpr const char* mode_violation = "mode-violation";
inline constexpr const char* protocol_mismatch = "protocol-mismatch";
inline constexpr const char* unconsumed_context = "unconsumed-context";
inline constexpr const char* not_equi_sync = "not-equi-sync";
inline constexpr const char* not_pure = "not-pure";
inline constexpr const char* type_mismatch = "type-mismatch";
inline constexpr const char* infeasible = "infeasible";
inline constexpr const char* insufficient_potential = "insufficient-potential";
inline constexpr const char* ill_typed = "ill-typed-configuration";
inline constexpr const char* assertion_failure = "assertion-failure";
inline constexpr const char* stuck = "stuck";
inline constexpr const char* ledger_error = "ledger-error";
}  // namespace errc

struct Diagnostic {
  std::string code;
  std::string message;
  Span span;

  std::string render(const std::string& file) const {
    std::string out = file.empty() ? "<input>" : file;
    out += ":" + std::to_string(span.line) + ":" + std::to_string(span.col);
    out += ": " + code + ": " + message;
    return out;
  }
};

// Thrown by the checker/parser; callers convert to reports.
struct CheckFailure : std::runtime_error {
  Diagnostic diag;
  explicit CheckFailure(Diagnostic d)
      : std::runtime_error(d.code + ": " + d.message), diag(std::move(d)) {}
};

[[noreturn]] inline void fail(std::string code, std::string msg, Span sp) {
  throw CheckFailure{Diagnostic{std::move(code), std::move(msg), sp}};
}

}  // namespace nom
