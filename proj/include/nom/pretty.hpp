#pragma once

#include <string>

#include "nom/ast.hpp"

namespace nom {

// Canonical surface rendering. `parse(pretty(x))` is structurally equal
// to `x` for every parseable construct; layout is normalized.
std::string pretty(const Pot& q);
std::string pretty(const STypePtr& t);
std::string pretty(const FTypePtr& t);
std::string pretty(const ExprPtr& e);
std::string pretty(const ProcPtr& p, int indent = 4);
std::string pretty(const ProcDecl& d);
std::string pretty(const Program& p);

// "[R]" for concrete modes, "" otherwise.
std::string mode_bracket(Mode m);
// "$name[R]" / "#name[S]".
std::string pretty_chan(const ChanRef& c);

}  // namespace nom
