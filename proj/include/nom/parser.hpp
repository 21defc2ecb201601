#pragma once

#include <string>

#include "nom/ast.hpp"

namespace nom {

// Parses a whole source file into declaration order. Throws
// CheckFailure(parse-error) with a source span on malformed input.
Program parse_program(const std::string& src, const std::string& file = "");

// Indexes a parsed program: rejects duplicate definition names and
// non-contractive type definitions (a named type must reach a structural
// constructor before referring back to itself).
Signature load_signature(const Program& p);
Signature load_signature_src(const std::string& src,
                             const std::string& file = "");

// Fragment parsers used by tests and tools. Each consumes the entire
// input.
STypePtr parse_stype_string(const std::string& src);
FTypePtr parse_ftype_string(const std::string& src);
ExprPtr parse_expr_string(const std::string& src);
ProcPtr parse_proc_string(const std::string& src);

}  // namespace nom
