#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nom/ast.hpp"
#include "nom/typecheck.hpp"

namespace nom {

// Runtime values of the functional layer. Cons cells carry the potential
// paid at construction (`stored`, the element potential of their list
// type); matching refunds it into the owner's budget and zeroes the cell,
// so stored potential is spent at most once.
struct RtVal {
  enum class K : std::uint8_t { Int, Bool, Pair, Inl, Inr, Nil, Cons, Closure };
  K k = K::Int;
  std::int64_t i = 0;                      // Int
  bool b = false;                          // Bool
  std::shared_ptr<std::int64_t> stored;    // Cons: constructor potential
                                           // (shared so copies alias it)
  std::shared_ptr<RtVal> a, d;             // Pair fst/snd, Cons head/tail,
                                           // Inl/Inr payload (in `a`)
  ExprPtr lam;                             // Closure body (a Lambda)
  std::shared_ptr<std::map<std::string, RtVal>> captured;  // Closure env
  std::shared_ptr<std::map<std::string, FTypePtr>> captured_t;

  static RtVal of_int(std::int64_t v) {
    RtVal r;
    r.k = K::Int;
    r.i = v;
    return r;
  }
  static RtVal of_bool(bool v) {
    RtVal r;
    r.k = K::Bool;
    r.b = v;
    return r;
  }
};

std::string show_val(const RtVal& v);

// One semantic object: a running process or an in-flight message.
// `pot` mirrors the static potential of the object's typing judgment;
// `slack` accumulates potential discarded by braced `work {n}`.
struct SemObject {
  enum class Kind : std::uint8_t { Proc, Msg };
  Kind kind = Kind::Proc;
  std::string chan;  // provided channel
  Mode mode;         // mode of the provided channel
  std::int64_t work = 0;
  std::int64_t pot = 0;
  std::int64_t slack = 0;
  ProcPtr body;
  std::map<std::string, RtVal> env;       // value bindings
  std::map<std::string, FTypePtr> env_t;  // their types, for re-checking
  std::string sess_root;  // L-mode provider: the shared channel it serves
  bool dead = false;      // tombstone within a step
};

// Directory entry for a deployed shared channel.
struct SharedEntry {
  STypePtr type;        // interface at rest (accept-headed)
  bool busy = false;    // true while acquired
  std::string session;  // current linear session channel while busy
};

struct Configuration {
  std::shared_ptr<const Signature> sig;
  std::vector<SemObject> objects;
  std::map<std::string, STypePtr> type_of;  // current type per live channel
  std::map<std::string, Mode> mode_of;
  std::map<std::string, SharedEntry> shared;
  std::int64_t fresh = 0;
  std::int64_t step_idx = 0;
  int rr_start = 0;        // round-robin cursor
  std::uint64_t seed = 0;  // 0 = plain round-robin, else seeded shuffle
};

struct StepResult {
  enum class K : std::uint8_t { Stepped, Poised, Blocked, StuckIllTyped };
  K k = K::Poised;
  std::string rule;
  std::vector<std::string> subjects;
  std::vector<std::string> blocked;  // channels of blocked acquirers
};

struct RunOptions {
  bool assert_checks = false;  // re-typecheck + energy after every step
  std::ostream* trace = nullptr;
  // Called after each successful step (after assertion checks).
  std::function<void(const Configuration&, const StepResult&)> on_step;
};

struct RunResult {
  enum class K : std::uint8_t { Poised, Blocked, FuelExhausted, StuckIllTyped };
  K k = K::Poised;
  std::int64_t steps = 0;
  std::vector<std::string> blocked;
};

// Fresh configuration over a resolved program.
Configuration make_config(std::shared_ptr<const Signature> sig);

// Spawns a declared process. Value arguments bind the declared parameters
// in order; `chans` name existing channels for the channel parameters.
// potential -1 means the declared turnstile. Returns the fresh channel.
std::string spawn_proc(Configuration& c, const std::string& proc,
                       const std::vector<RtVal>& vals,
                       const std::vector<std::string>& chans,
                       std::int64_t potential = -1);

// Boots a transaction: `proc` must be declared at mode T; channel
// parameters must all be shared references (no linear context). Throws
// CheckFailure(insufficient-potential) when supplied is below the
// declared turnstile; the process is booted carrying exactly the
// turnstile (callers refund any excess). Returns the root channel.
std::string boot_tx(Configuration& c, const std::string& proc,
                    const std::vector<RtVal>& vals,
                    const std::vector<std::string>& shared_chans,
                    std::int64_t supplied);

// Applies exactly one semantics rule chosen by the deterministic
// scheduler (round-robin, or a seeded shuffle when c.seed != 0).
StepResult step(Configuration& c);

// Iterates step up to `fuel` times, optionally re-typechecking and
// asserting energy conservation after every step. Throws
// CheckFailure(assertion-failure) on a violation when asserting.
RunResult run(Configuration& c, std::int64_t fuel,
              const RunOptions& opts = {});

// Sum over live objects of potential + work + slack, plus the potential
// stored inside values (each cons cell counted once across the whole
// configuration).
std::int64_t energy(const Configuration& c);
// Sum of accumulated work / of discarded slack over live objects.
std::int64_t total_work(const Configuration& c);
std::int64_t total_slack(const Configuration& c);

// Re-derives the typing of every object in the configuration. Throws
// CheckFailure(ill-typed-configuration) on the first violation.
void typecheck_config(const Configuration& c);

// The receive-ready forms: a process trying to receive on its own
// channel (case/recv/get/accept/detach/fwd), or any message.
bool is_poised(const Configuration& c, const SemObject& o);

// Structural value equality; cons cells compare their remaining stored
// potential, closures their code and captured bindings.
bool rt_val_equal(const RtVal& a, const RtVal& b);

// Deep snapshot: an independent copy whose stored-potential cells and
// captured environments are cloned (preserving internal sharing), so later
// mutation of either configuration leaves the other untouched.
Configuration clone_config(const Configuration& c);

// Structural equality of whole configurations: objects in order, channel
// records, shared directory, and counters.
bool config_equal(const Configuration& a, const Configuration& b);

}  // namespace nom
