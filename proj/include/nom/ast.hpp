#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace nom {

// Source location of a syntactic element, 1-based.
struct Span {
  int line = 0;
  int col = 0;
  bool valid() const { return line > 0; }
};

// Channel classification. R offers purely linear sessions, S shared
// contract interfaces, L a contract's exclusive critical section, T the
// top-level transaction layer. Unknown marks an omitted annotation prior
// to elaboration; Var is a unification variable introduced by inference.
enum class ModeTag : std::uint8_t { R, S, L, T, Unknown, Var };

struct Mode {
  ModeTag tag = ModeTag::Unknown;
  int var = -1;  // meaningful only when tag == Var

  static Mode R() { return {ModeTag::R, -1}; }
  static Mode S() { return {ModeTag::S, -1}; }
  static Mode L() { return {ModeTag::L, -1}; }
  static Mode T() { return {ModeTag::T, -1}; }
  static Mode unknown() { return {ModeTag::Unknown, -1}; }
  static Mode mvar(int id) { return {ModeTag::Var, id}; }
  bool concrete() const {
    return tag == ModeTag::R || tag == ModeTag::S || tag == ModeTag::L ||
           tag == ModeTag::T;
  }
  friend bool operator==(const Mode& a, const Mode& b) {
    return a.tag == b.tag && (a.tag != ModeTag::Var || a.var == b.var);
  }
  friend bool operator!=(const Mode& a, const Mode& b) { return !(a == b); }
};

const char* mode_name(Mode m);

// A potential (gas) annotation: a nonnegative integer, the surface
// wildcard `*`, or an inference variable.
enum class PotKind : std::uint8_t { Const, Star, Var };

struct Pot {
  PotKind kind = PotKind::Const;
  std::int64_t value = 0;  // Const
  int var = -1;            // Var

  static Pot zero() { return {PotKind::Const, 0, -1}; }
  static Pot constant(std::int64_t n) { return {PotKind::Const, n, -1}; }
  static Pot star() { return {PotKind::Star, 0, -1}; }
  static Pot pvar(int id) { return {PotKind::Var, 0, id}; }
  bool concrete() const { return kind == PotKind::Const; }
  friend bool operator==(const Pot& a, const Pot& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == PotKind::Const) return a.value == b.value;
    if (a.kind == PotKind::Var) return a.var == b.var;
    return true;
  }
  friend bool operator!=(const Pot& a, const Pot& b) { return !(a == b); }
};

struct SType;
struct FType;
struct Expr;
struct Proc;
using STypePtr = std::shared_ptr<const SType>;
using FTypePtr = std::shared_ptr<const FType>;
using ExprPtr = std::shared_ptr<const Expr>;
using ProcPtr = std::shared_ptr<const Proc>;

// Session types. Choices keep declaration order for deterministic
// printing and checking.
struct SType {
  enum class K : std::uint8_t {
    Plus,     // internal choice +{l : A}
    With,     // external choice &{l : A}
    Tensor,   // A *[m] B   (send channel of mode m)
    Lolli,    // A -o[m] B  (receive channel of mode m)
    One,      // 1
    SendVal,  // tau ^ A
    RecvVal,  // tau -> A
    Pay,      // |{q}> A    (provider pays q)
    Get,      // <{q}| A    (provider gets q)
    Up,       // /\ A       (shared interface over linear body)
    Down,     // \/ A       (return to shared interface)
    Named,    // type reference
  };
  K k;
  std::vector<std::pair<std::string, STypePtr>> branches;  // Plus, With
  STypePtr carried;                                        // Tensor, Lolli
  Mode carried_mode;                                       // Tensor, Lolli
  FTypePtr vtype;                                          // SendVal, RecvVal
  Pot pot;                                                 // Pay, Get
  STypePtr cont;  // Tensor, Lolli, SendVal, RecvVal, Pay, Get, Up, Down
  std::string name;                                        // Named
  Span span;
};

// Functional-layer types. Lists carry a per-element potential; Monad is
// the contextual process type {A <- shared ; linear}.
struct FType {
  enum class K : std::uint8_t {
    Int,
    Bool,
    Arrow,  // tau -> sigma
    Sum,    // tau + sigma
    Prod,   // tau * sigma
    List,   // list tau {q}
    Monad,  // {A[m] <- uses}
    Named,  // functional type alias reference
  };
  K k;
  FTypePtr a, b;       // Arrow (arg/res), Sum, Prod
  Pot call_pot;        // Arrow: potential consumed on application
  Pot ret_pot;         // Arrow: potential returned with the result
  FTypePtr elem;       // List
  Pot elem_pot;        // List
  STypePtr offered;    // Monad
  Mode offered_mode;   // Monad
  std::vector<std::pair<STypePtr, Mode>> uses;  // Monad: context types
  std::string name;    // Named
  Span span;
};

// Functional expressions. Tick is the only cost-bearing node.
struct Expr {
  enum class K : std::uint8_t {
    Var,
    IntLit,
    BoolLit,
    Binop,    // + - * = < > <= >= <> && ||
    Not,
    IfE,
    LetE,
    Lambda,
    App,
    Pair,
    LetPair,  // let (x, y) = e1 in e2
    Inl,
    Inr,
    CaseSum,  // case e (inl x => e1 | inr y => e2)
    Nil,
    Cons,
    MatchList,  // match e ( nil => e1 | cons x xs => e2 )
    Tick,       // (tick ; e), cost 1 per wrapper
    MonadVal,   // { P } or { $c <- P <- args } packaged process
  };
  K k;
  std::string var;              // Var, LetE, Lambda binder, case binders
  std::string var2;             // LetPair/CaseSum/MatchList second binder
  std::int64_t int_val = 0;     // IntLit
  bool bool_val = false;        // BoolLit
  std::string op;               // Binop
  ExprPtr e1, e2, e3;           // children
  FTypePtr ann;                 // Lambda argument annotation (optional)
  ProcPtr proc;                 // MonadVal body
  std::vector<std::string> monad_chans;  // MonadVal channel parameters
  std::string monad_offer;      // MonadVal offered channel name
  Mode monad_offer_mode;        // MonadVal offered channel mode
  Span span;
};

// A channel reference as written: name plus the mode annotation at this
// occurrence. The # / $ sigil is derivable from the mode when printing.
struct ChanRef {
  std::string name;
  Mode mode;
  Span span;
};

// Process-layer terms.
struct Proc {
  enum class K : std::uint8_t {
    SendLabel,  // c.l ;
    Case,       // case c ( l => P | ... )
    SendChan,   // send c d ;
    RecvChan,   // d <- recv c ;
    SendVal,    // send c (M) ;
    RecvVal,    // x = recv c ;
    Close,      // close c
    Wait,       // wait c ;
    Fwd,        // c <- d
    Spawn,      // x <- f <- args ;  (with continuation)
    TailCall,   // c <- f <- args    (no continuation; c is the offered chan)
    Work,       // work / work {n} ;
    Pay,        // pay c {n} ;
    Get,        // get c {n} ;
    Acquire,    // l <- acquire s ;
    Accept,     // l <- accept s ;
    Release,    // s <- release l ;
    Detach,     // s <- detach l ;
    LetE,       // let x = M ;
    IfE,        // if M then P else Q
  };
  K k;
  ChanRef chan;    // primary subject; binder for Spawn/Acquire/Accept
                   // (fresh linear) and Release/Detach (restored shared)
  ChanRef chan2;   // SendChan payload, RecvChan binder, Fwd source,
                   // Acquire/Accept shared operand, Release/Detach linear
                   // operand
  std::string label;                                  // SendLabel
  std::vector<std::pair<std::string, ProcPtr>> branches;  // Case
  ExprPtr expr;                                       // SendVal, LetE, IfE
  std::string var;                                    // RecvVal, LetE binder
  std::string callee;                                 // Spawn, TailCall
  std::vector<ExprPtr> val_args;      // Spawn/TailCall functional args
  std::vector<ChanRef> chan_args;     // Spawn/TailCall channel args
  Pot pot;                                            // Work, Pay, Get
  bool braced = false;  // Work: wrote `work {n}` (slack) vs bare `work`
  ProcPtr cont;    // continuation (absent for Close, Fwd, TailCall)
  ProcPtr cont2;   // IfE else-branch
  Span span;
};

// Declarations. A type definition binds either a session type or a
// functional type; process definitions carry their full declared
// interface.
struct TypeDecl {
  std::string name;
  STypePtr stype;  // exactly one of stype/ftype is set
  FTypePtr ftype;
  Span span;
};

struct ProcDecl {
  std::string name;
  Mode mode;  // offered-channel mode from the asset/contract/transaction word
  std::vector<std::pair<std::string, FTypePtr>> fun_args;
  std::vector<ChanRef> chan_args;  // declared context channels in order
  std::vector<STypePtr> chan_arg_types;
  Pot potential;  // turnstile annotation
  ChanRef offered;
  STypePtr offered_type;
  ProcPtr body;
  Span span;
};

struct Program {
  std::string file;
  std::vector<TypeDecl> types;   // in declaration order
  std::vector<ProcDecl> procs;   // in declaration order
};

// A name-resolved program: definitions keyed by name, declaration order
// retained for iteration.
struct Signature {
  std::string file;
  std::map<std::string, TypeDecl> type_defs;
  std::map<std::string, ProcDecl> proc_defs;
  std::vector<std::string> type_order;
  std::vector<std::string> proc_order;

  const TypeDecl* find_type(const std::string& n) const {
    auto it = type_defs.find(n);
    return it == type_defs.end() ? nullptr : &it->second;
  }
  const ProcDecl* find_proc(const std::string& n) const {
    auto it = proc_defs.find(n);
    return it == proc_defs.end() ? nullptr : &it->second;
  }
};

// Node constructors (shared-pointer helpers).
STypePtr mk_stype(SType s);
FTypePtr mk_ftype(FType f);
ExprPtr mk_expr(Expr e);
ProcPtr mk_proc(Proc p);

}  // namespace nom
