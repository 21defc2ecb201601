#pragma once

#include <map>
#include <set>
#include <vector>

#include "nom/ast.hpp"
#include "nom/core.hpp"
#include "nom/errors.hpp"
#include "nom/linexpr.hpp"

namespace nom {

// Unification over mode annotations. Concrete modes compare directly;
// mode variables (from elaboration) are unioned and carry a domain of
// admissible concrete modes. All operations throw CheckFailure with code
// mode-violation on conflict.
class ModeSolver {
 public:
  void set_domain(int id, std::set<ModeTag> dom);
  void eq(Mode a, Mode b, Span sp, const char* rule);
  void require_in(Mode m, std::set<ModeTag> allowed, Span sp, const char* rule,
                  const char* code = nullptr);
  // Follows unions; returns a concrete mode if the variable is pinned
  // (domain of size one), otherwise the class representative.
  Mode resolve(Mode m);
  // Pins every remaining variable to its preferred admissible mode
  // (R, then L, then T, then S) and returns the full assignment.
  std::map<int, Mode> solve();

 private:
  struct VarState {
    int parent = -1;  // union-find; -1 = root
    std::set<ModeTag> domain{ModeTag::R, ModeTag::S, ModeTag::L, ModeTag::T};
  };
  int find(int id);
  VarState& state(int id);
  std::map<int, VarState> vars_;
};

struct CheckOptions {
  // When false every potential and mode annotation must be concrete and
  // violations throw immediately. When true, star-elaborated variables are
  // admitted and non-constant potential conditions are collected as
  // constraints for the solver.
  bool collect = false;
  // Mode variables that stand for `$`-channel annotations: never shared.
  std::set<int> linear_mode_vars;
};

struct CheckStats {
  std::size_t rule_applications = 0;
  std::size_t ast_nodes = 0;
};

struct CheckResult {
  std::vector<Constraint> constraints;  // empty when fully concrete
  std::set<int> pot_vars;               // potential variables encountered
  std::map<int, Mode> mode_solution;    // filled when collecting
  CheckStats stats;
};

// Checks every process declaration in the signature (and the
// equi-synchronization of every contract interface). Throws CheckFailure
// on the first violation.
CheckResult check_signature(const Signature& sig, const CheckOptions& opts = {});

// Coinductive session-type equality up to unfolding of named types.
// Potential and mode annotations must match exactly.
bool type_equal(const Signature& sig, const STypePtr& a, const STypePtr& b);

// Equi-synchronization: the type must open with an accept and every
// session path must either recur or detach back to the full shared
// interface. Throws CheckFailure (not-equi-sync) when violated.
void check_esync(const Signature& sig, const STypePtr& t, Span where);
bool is_esync(const Signature& sig, const STypePtr& t);

// Mid-session variant: every path below `t` (which need not start with an
// accept) must detach back to `shared` or recur. Used when re-checking a
// configuration whose critical sections are partway through a protocol.
void check_esync_against(const Signature& sig, const STypePtr& t,
                         const STypePtr& shared, Span where);

// A channel binding as seen by the configuration re-checker.
struct BodyChan {
  STypePtr type;
  Mode mode;
};

// Explicit typing environment for checking one continuation body — a
// running process or an in-flight message — outside any declaration.
struct BodyEnv {
  std::map<std::string, FTypePtr> psi;     // value variables
  std::map<std::string, BodyChan> delta;   // owned linear channels
  std::map<std::string, BodyChan> gamma;   // visible shared channels
  std::string off_name;
  BodyChan off;
  std::string shared_self;  // shared channel to restore; "" outside a
                            // critical section
  std::int64_t potential = 0;
};

// Fully concrete check of a single body against the environment. Throws
// CheckFailure on the first violation.
void check_body(const Signature& sig, const BodyEnv& env, const ProcPtr& body);

// Type of an expression under a value environment, all annotations
// concrete. Throws CheckFailure if the expression is ill-typed.
FTypePtr synth_expr_type(const Signature& sig,
                         const std::map<std::string, FTypePtr>& psi,
                         const ExprPtr& e);

// Checks `e` against `expected` under Ψ = psi and returns its static
// cost (ticks plus stored-potential flows), which must be a concrete
// constant.
std::int64_t check_expr_cost(const Signature& sig,
                             const std::map<std::string, FTypePtr>& psi,
                             const ExprPtr& e, const FTypePtr& expected);

}  // namespace nom
