#pragma once

#include <optional>
#include <set>
#include <string>

#include "nom/ast.hpp"

namespace nom {

// Raised by signature loading and structural utilities.
struct CoreError {
  std::string code;  // e.g. "unknown-type-name", "contractiveness-violation"
  std::string message;
  Span span;
};

// Equi-recursive one-step unfolding: a Named type is replaced by its
// definition body; all other nodes are returned unchanged. Idempotent on
// non-Named results for contractive signatures.
STypePtr unfold(const Signature& sig, const STypePtr& t);
FTypePtr unfold_f(const Signature& sig, const FTypePtr& t);

// Rejects definition chains of bare names (V = W = ... = V).
// Returns the offending name, or nullopt when every chain is guarded.
std::optional<std::string> find_noncontractive(const Signature& sig);

// Capture-avoiding channel renaming [to/from] over process terms,
// descending into monadic values. Binders shadow as in the source
// language; the caller guarantees `to` is fresh where that matters.
ProcPtr rename_channel(const ProcPtr& p, const std::string& from,
                       const std::string& to);
ExprPtr rename_channel_expr(const ExprPtr& e, const std::string& from,
                            const std::string& to);

// Free channel names of a process term (channels used but not bound).
std::set<std::string> free_channels(const ProcPtr& p);

// Structural equality on syntax (spans ignored).
bool struct_equal(const ProcPtr& a, const ProcPtr& b);
bool struct_equal(const ExprPtr& a, const ExprPtr& b);
bool struct_equal(const STypePtr& a, const STypePtr& b);
bool struct_equal(const FTypePtr& a, const FTypePtr& b);

// AST size (node count) for the linear-time checking bound.
std::size_t ast_size(const ProcPtr& p);
std::size_t ast_size(const ExprPtr& e);

}  // namespace nom
