#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "nom/ast.hpp"

namespace nom {

struct InferOptions {
  // When set, the generated constraint system is written here (before
  // solving) as a minimization problem, one row per line, each prefixed
  // with a comment giving its origin.
  std::ostream* dump_lp = nullptr;
};

struct InferResult {
  Program program;  // fully elaborated: every potential and mode concrete
  std::map<int, std::int64_t> potentials;  // solved potential variables
  std::map<int, Mode> modes;               // solved mode variables
  std::size_t n_constraints = 0;
  std::size_t n_pot_vars = 0;
};

// Elaborates `*` potentials and omitted modes to variables, generates the
// constraint system by checking, resolves modes by unification and
// potentials by exact-rational minimization, and returns the annotated
// program (which is re-checked before being returned). Throws CheckFailure
// with code "infeasible" when no assignment exists.
InferResult infer(const Program& prog, const InferOptions& opts = {});

// Replaces every surface-expressible potential annotation with `*`
// (turnstiles, pay/get amounts in types and statements, list potentials,
// and braced work). Bare `work ;` keeps its implicit unit cost.
Program star_all(const Program& prog);

// Substitutes solved variables back into an elaborated program. Unsolved
// potentials default to zero, unsolved modes to the purely linear layer.
Program apply_solution(const Program& prog,
                       const std::map<int, std::int64_t>& pots,
                       const std::map<int, Mode>& modes);

}  // namespace nom
