#include "nom/runtime.hpp"

#include <algorithm>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nom/core.hpp"
#include "nom/errors.hpp"

namespace nom {

namespace {

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

std::int64_t pot_value(const Pot& p, Span sp) {
  if (p.kind != PotKind::Const)
    fail(errc::stuck, "potential annotation is not a concrete constant", sp);
  return p.value;
}

bool pot_is_zero(const Pot& p) {
  return p.kind == PotKind::Const && p.value == 0;
}

STypePtr head_s(const Signature& sig, STypePtr t, Span sp) {
  int guard = 0;
  while (t && t->k == SType::K::Named) {
    if (++guard > 100000)
      fail(errc::stuck, "session type does not unfold to a structure", sp);
    try {
      t = unfold(sig, t);
    } catch (const CoreError& e) {
      fail(errc::stuck, e.message, e.span);
    }
  }
  if (!t) fail(errc::stuck, "missing session type", sp);
  return t;
}

FTypePtr head_f(const Signature& sig, FTypePtr t, Span sp) {
  int guard = 0;
  while (t && t->k == FType::K::Named) {
    if (++guard > 100000)
      fail(errc::stuck, "value type does not unfold to a structure", sp);
    try {
      t = unfold_f(sig, t);
    } catch (const CoreError& e) {
      fail(errc::stuck, e.message, e.span);
    }
  }
  if (!t) fail(errc::stuck, "missing value type", sp);
  return t;
}

FTypePtr t_int() {
  static const FTypePtr t = [] {
    FType f;
    f.k = FType::K::Int;
    return mk_ftype(std::move(f));
  }();
  return t;
}

FTypePtr t_bool() {
  static const FTypePtr t = [] {
    FType f;
    f.k = FType::K::Bool;
    return mk_ftype(std::move(f));
  }();
  return t;
}

const STypePtr& type_at(const Configuration& c, const std::string& x, Span sp) {
  auto it = c.type_of.find(x);
  if (it == c.type_of.end())
    fail(errc::stuck, "no type recorded for channel " + x, sp);
  return it->second;
}

Mode mode_at(const Configuration& c, const std::string& x, Span sp) {
  auto it = c.mode_of.find(x);
  if (it == c.mode_of.end())
    fail(errc::stuck, "no mode recorded for channel " + x, sp);
  return it->second;
}

// Runtime channels are `base%n`; fresh names reuse the base so traces stay
// readable across continuations of the same source channel.
std::string fresh_name(Configuration& c, const std::string& base) {
  auto cut = base.find('%');
  std::string b = cut == std::string::npos ? base : base.substr(0, cut);
  return b + "%" + std::to_string(++c.fresh);
}

// Simultaneous renaming via a collision-free intermediate pass.
ProcPtr rename_many(ProcPtr body,
                    const std::vector<std::pair<std::string, std::string>>& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    body = rename_channel(body, m[i].first, "%%r" + std::to_string(i));
  for (std::size_t i = 0; i < m.size(); ++i)
    body = rename_channel(body, "%%r" + std::to_string(i), m[i].second);
  return body;
}

// ---------------------------------------------------------------------------
// Stored potential inside values
// ---------------------------------------------------------------------------

void mark_cells(const RtVal& v, std::set<const void*>& seen) {
  if (v.stored) seen.insert(v.stored.get());
  if (v.a) mark_cells(*v.a, seen);
  if (v.d) mark_cells(*v.d, seen);
  if (v.captured)
    for (const auto& [k, w] : *v.captured) mark_cells(w, seen);
}

std::int64_t sum_unmarked(const RtVal& v, std::set<const void*>& seen) {
  std::int64_t e = 0;
  if (v.stored && seen.insert(v.stored.get()).second) e += *v.stored;
  if (v.a) e += sum_unmarked(*v.a, seen);
  if (v.d) e += sum_unmarked(*v.d, seen);
  if (v.captured)
    for (const auto& [k, w] : *v.captured) e += sum_unmarked(w, seen);
  return e;
}

std::int64_t phi_local(const RtVal& v) {
  std::set<const void*> seen;
  return sum_unmarked(v, seen);
}

// Potential stored in values that just became unreachable. Keepers are the
// environments of every live object; whatever the dropped values hold beyond
// that is credited to slack so the energy balance stays exact.
std::int64_t collect_orphans(const Configuration& c, std::vector<RtVal>& bin) {
  if (bin.empty()) return 0;
  std::set<const void*> seen;
  for (const SemObject& o : c.objects) {
    if (o.dead) continue;
    for (const auto& [k, w] : o.env) mark_cells(w, seen);
  }
  std::int64_t e = 0;
  for (const RtVal& v : bin) e += sum_unmarked(v, seen);
  bin.clear();
  return e;
}

// Turns a closed value back into a literal for message bodies, so in-flight
// messages remain well-formed syntax.
ExprPtr val_to_expr(const RtVal& v, Span sp) {
  if (v.k == RtVal::K::Closure) {
    if (v.captured && !v.captured->empty())
      fail(errc::stuck, "cannot send a closure with captured bindings", sp);
    return v.lam;
  }
  Expr e;
  e.k = Expr::K::IntLit;
  e.span = sp;
  switch (v.k) {
    case RtVal::K::Int:
      e.k = Expr::K::IntLit;
      e.int_val = v.i;
      break;
    case RtVal::K::Bool:
      e.k = Expr::K::BoolLit;
      e.bool_val = v.b;
      break;
    case RtVal::K::Pair:
      e.k = Expr::K::Pair;
      e.e1 = val_to_expr(*v.a, sp);
      e.e2 = val_to_expr(*v.d, sp);
      break;
    case RtVal::K::Inl:
      e.k = Expr::K::Inl;
      e.e1 = val_to_expr(*v.a, sp);
      break;
    case RtVal::K::Inr:
      e.k = Expr::K::Inr;
      e.e1 = val_to_expr(*v.a, sp);
      break;
    case RtVal::K::Nil:
      e.k = Expr::K::Nil;
      break;
    case RtVal::K::Cons:
      e.k = Expr::K::Cons;
      e.e1 = val_to_expr(*v.a, sp);
      e.e2 = val_to_expr(*v.d, sp);
      break;
    case RtVal::K::Closure:
      break;  // handled above
  }
  return mk_expr(std::move(e));
}

// ---------------------------------------------------------------------------
// The functional evaluator
//
// Mirrors the static cost/type discipline exactly: variable uses of lists
// deplete the element potential recorded in env_t (affine use), constructors
// charge it into the cell, matches refund it, and the branches not taken
// deplete whatever they would have used. `ticks` is real work, `flow` the
// net potential moved into (positive) or out of (negative) value cells;
// the caller charges both against the object's potential.
// ---------------------------------------------------------------------------

struct VT {
  RtVal v;
  FTypePtr t;
};

struct Evaluator {
  const Signature& sig;
  std::map<std::string, RtVal>& env;
  std::map<std::string, FTypePtr>& psi;
  std::int64_t ticks = 0;
  std::int64_t flow = 0;
  std::vector<RtVal> dropped;  // values discarded at scope exit

  Evaluator(const Signature& s, std::map<std::string, RtVal>& e,
            std::map<std::string, FTypePtr>& p)
      : sig(s), env(e), psi(p) {}

  FTypePtr head(const FTypePtr& t, Span sp) { return head_f(sig, t, sp); }

  struct Saved {
    std::optional<RtVal> v;
    std::optional<FTypePtr> t;
  };

  Saved save(const std::string& x) {
    Saved s;
    if (auto it = env.find(x); it != env.end()) s.v = it->second;
    if (auto it = psi.find(x); it != psi.end()) s.t = it->second;
    return s;
  }

  void bind(const std::string& x, RtVal v, FTypePtr t) {
    env[x] = std::move(v);
    psi[x] = std::move(t);
  }

  void restore(const std::string& x, Saved& s) {
    if (auto it = env.find(x); it != env.end())
      dropped.push_back(std::move(it->second));
    if (s.v)
      env[x] = std::move(*s.v);
    else
      env.erase(x);
    if (s.t)
      psi[x] = *s.t;
    else
      psi.erase(x);
  }

  void deplete_var(const std::string& x) {
    auto it = psi.find(x);
    if (it == psi.end()) return;
    FTypePtr h = it->second;
    int guard = 0;
    while (h && h->k == FType::K::Named) {
      if (++guard > 100000) return;
      try {
        h = unfold_f(sig, h);
      } catch (const CoreError&) {
        return;
      }
    }
    if (h && h->k == FType::K::List && !pot_is_zero(h->elem_pot)) {
      FType z = *h;
      z.elem_pot = Pot::zero();
      it->second = mk_ftype(std::move(z));
    }
  }

  // The branch not taken still counts as using its free variables: any
  // list potential it would have consumed is depleted, exactly as the
  // static branch merge does. Lambda bodies are opaque (they deplete
  // nothing until applied).
  void deplete_uses(const ExprPtr& e, std::set<std::string> sh) {
    if (!e) return;
    switch (e->k) {
      case Expr::K::Var:
        if (!sh.count(e->var)) deplete_var(e->var);
        return;
      case Expr::K::IntLit:
      case Expr::K::BoolLit:
      case Expr::K::Nil:
      case Expr::K::MonadVal:
        return;
      case Expr::K::Binop:
      case Expr::K::App:
      case Expr::K::Pair:
      case Expr::K::Cons:
        deplete_uses(e->e1, sh);
        deplete_uses(e->e2, std::move(sh));
        return;
      case Expr::K::Not:
      case Expr::K::Inl:
      case Expr::K::Inr:
      case Expr::K::Tick:
        deplete_uses(e->e1, std::move(sh));
        return;
      case Expr::K::IfE:
        deplete_uses(e->e1, sh);
        deplete_uses(e->e2, sh);
        deplete_uses(e->e3, std::move(sh));
        return;
      case Expr::K::LetE: {
        deplete_uses(e->e1, sh);
        sh.insert(e->var);
        deplete_uses(e->e2, std::move(sh));
        return;
      }
      case Expr::K::Lambda:
        return;
      case Expr::K::LetPair: {
        deplete_uses(e->e1, sh);
        sh.insert(e->var);
        sh.insert(e->var2);
        deplete_uses(e->e2, std::move(sh));
        return;
      }
      case Expr::K::CaseSum: {
        deplete_uses(e->e1, sh);
        auto sl = sh;
        sl.insert(e->var);
        deplete_uses(e->e2, std::move(sl));
        sh.insert(e->var2);
        deplete_uses(e->e3, std::move(sh));
        return;
      }
      case Expr::K::MatchList: {
        deplete_uses(e->e1, sh);
        deplete_uses(e->e2, sh);
        sh.insert(e->var);
        sh.insert(e->var2);
        deplete_uses(e->e3, std::move(sh));
        return;
      }
    }
  }

  // Type of an expression under the current Psi without evaluating it
  // (used when the branch not taken determines the result type).
  FTypePtr type_only(const ExprPtr& e) {
    try {
      return synth_expr_type(sig, psi, e);
    } catch (const CheckFailure& f) {
      fail(errc::stuck, "expression no longer types: " + f.diag.message,
           e->span);
    }
  }

  VT synth(const ExprPtr& e) {
    switch (e->k) {
      case Expr::K::Var: {
        auto tv = psi.find(e->var);
        auto vv = env.find(e->var);
        if (tv == psi.end() || vv == env.end())
          fail(errc::stuck, "unbound variable " + e->var, e->span);
        FTypePtr h = head(tv->second, e->span);
        if (h->k == FType::K::List && !pot_is_zero(h->elem_pot)) {
          FType z = *h;
          z.elem_pot = Pot::zero();
          tv->second = mk_ftype(std::move(z));
        }
        return {vv->second, h};
      }
      case Expr::K::IntLit:
        return {RtVal::of_int(e->int_val), t_int()};
      case Expr::K::BoolLit:
        return {RtVal::of_bool(e->bool_val), t_bool()};
      case Expr::K::Binop: {
        const bool logic = e->op == "&&" || e->op == "||";
        FTypePtr ot = logic ? t_bool() : t_int();
        RtVal v1 = check(e->e1, ot);
        RtVal v2 = check(e->e2, ot);
        if (e->op == "+") return {RtVal::of_int(v1.i + v2.i), t_int()};
        if (e->op == "-") return {RtVal::of_int(v1.i - v2.i), t_int()};
        if (e->op == "*") return {RtVal::of_int(v1.i * v2.i), t_int()};
        if (e->op == "=") return {RtVal::of_bool(v1.i == v2.i), t_bool()};
        if (e->op == "<>") return {RtVal::of_bool(v1.i != v2.i), t_bool()};
        if (e->op == "<") return {RtVal::of_bool(v1.i < v2.i), t_bool()};
        if (e->op == ">") return {RtVal::of_bool(v1.i > v2.i), t_bool()};
        if (e->op == "<=") return {RtVal::of_bool(v1.i <= v2.i), t_bool()};
        if (e->op == ">=") return {RtVal::of_bool(v1.i >= v2.i), t_bool()};
        if (e->op == "&&") return {RtVal::of_bool(v1.b && v2.b), t_bool()};
        if (e->op == "||") return {RtVal::of_bool(v1.b || v2.b), t_bool()};
        fail(errc::stuck, "unknown operator " + e->op, e->span);
      }
      case Expr::K::Not: {
        RtVal v = check(e->e1, t_bool());
        return {RtVal::of_bool(!v.b), t_bool()};
      }
      case Expr::K::IfE: {
        RtVal cv = check(e->e1, t_bool());
        if (cv.b) {
          VT r = synth(e->e2);
          deplete_uses(e->e3, {});
          return r;
        }
        FTypePtr t1 = type_only(e->e2);
        RtVal v = check(e->e3, t1);
        deplete_uses(e->e2, {});
        return {std::move(v), t1};
      }
      case Expr::K::LetE: {
        VT b = synth(e->e1);
        Saved sv = save(e->var);
        bind(e->var, std::move(b.v), b.t);
        VT r = synth(e->e2);
        restore(e->var, sv);
        return r;
      }
      case Expr::K::Lambda: {
        if (!e->ann)
          fail(errc::stuck, "lambda without an argument annotation", e->span);
        RtVal cl;
        cl.k = RtVal::K::Closure;
        cl.lam = e;
        cl.captured = std::make_shared<std::map<std::string, RtVal>>(env);
        cl.captured_t =
            std::make_shared<std::map<std::string, FTypePtr>>(psi);
        std::map<std::string, FTypePtr> p2 = psi;
        p2[e->var] = e->ann;
        FTypePtr bt;
        try {
          bt = synth_expr_type(sig, p2, e->e1);
        } catch (const CheckFailure& f) {
          fail(errc::stuck, "lambda body no longer types: " + f.diag.message,
               e->span);
        }
        FType ar;
        ar.k = FType::K::Arrow;
        ar.a = e->ann;
        ar.b = bt;
        ar.call_pot = Pot::zero();
        ar.ret_pot = Pot::zero();
        ar.span = e->span;
        return {std::move(cl), mk_ftype(std::move(ar))};
      }
      case Expr::K::App: {
        VT f = synth(e->e1);
        FTypePtr tf = head(f.t, e->span);
        if (tf->k != FType::K::Arrow)
          fail(errc::stuck, "application of a non-function", e->span);
        RtVal arg = check(e->e2, tf->a);
        if (f.v.k != RtVal::K::Closure || !f.v.lam)
          fail(errc::stuck, "application of a non-closure value", e->span);
        std::map<std::string, RtVal> cenv =
            f.v.captured ? *f.v.captured : std::map<std::string, RtVal>{};
        std::map<std::string, FTypePtr> cpsi =
            f.v.captured_t ? *f.v.captured_t
                           : std::map<std::string, FTypePtr>{};
        cenv[f.v.lam->var] = std::move(arg);
        cpsi[f.v.lam->var] = tf->a;
        Evaluator sub(sig, cenv, cpsi);
        RtVal rv = sub.check(f.v.lam->e1, tf->b);
        ticks += sub.ticks;
        flow += sub.flow;
        for (RtVal& w : sub.dropped) dropped.push_back(std::move(w));
        for (auto& [k, w] : cenv) dropped.push_back(std::move(w));
        return {std::move(rv), tf->b};
      }
      case Expr::K::Pair: {
        VT x = synth(e->e1);
        VT y = synth(e->e2);
        RtVal p;
        p.k = RtVal::K::Pair;
        p.a = std::make_shared<RtVal>(std::move(x.v));
        p.d = std::make_shared<RtVal>(std::move(y.v));
        FType pt;
        pt.k = FType::K::Prod;
        pt.a = x.t;
        pt.b = y.t;
        pt.span = e->span;
        return {std::move(p), mk_ftype(std::move(pt))};
      }
      case Expr::K::LetPair: {
        VT s = synth(e->e1);
        FTypePtr t = head(s.t, e->span);
        if (t->k != FType::K::Prod || s.v.k != RtVal::K::Pair)
          fail(errc::stuck, "splitting a non-pair", e->span);
        Saved s1 = save(e->var);
        Saved s2 = save(e->var2);
        bind(e->var, *s.v.a, t->a);
        bind(e->var2, *s.v.d, t->b);
        VT r = synth(e->e2);
        restore(e->var2, s2);
        restore(e->var, s1);
        return r;
      }
      case Expr::K::Inl:
      case Expr::K::Inr:
        fail(errc::stuck, "cannot infer the type of a bare injection",
             e->span);
      case Expr::K::Nil:
        fail(errc::stuck, "cannot infer the type of an empty list", e->span);
      case Expr::K::CaseSum: {
        VT s = synth(e->e1);
        FTypePtr t = head(s.t, e->span);
        if (t->k != FType::K::Sum)
          fail(errc::stuck, "case on a non-sum", e->span);
        if (s.v.k == RtVal::K::Inl) {
          Saved sv = save(e->var);
          bind(e->var, *s.v.a, t->a);
          VT r = synth(e->e2);
          restore(e->var, sv);
          deplete_uses(e->e3, {e->var2});
          return r;
        }
        if (s.v.k != RtVal::K::Inr)
          fail(errc::stuck, "case subject is not an injection", e->span);
        std::map<std::string, FTypePtr> p2 = psi;
        p2[e->var] = t->a;
        FTypePtr t1;
        try {
          t1 = synth_expr_type(sig, p2, e->e2);
        } catch (const CheckFailure& f) {
          fail(errc::stuck, "branch no longer types: " + f.diag.message,
               e->span);
        }
        Saved sv = save(e->var2);
        bind(e->var2, *s.v.a, t->b);
        RtVal v = check(e->e3, t1);
        restore(e->var2, sv);
        deplete_uses(e->e2, {e->var});
        return {std::move(v), t1};
      }
      case Expr::K::Cons: {
        VT h = synth(e->e1);
        VT tl = synth(e->e2);
        FTypePtr lt = head(tl.t, e->span);
        if (lt->k != FType::K::List)
          fail(errc::stuck, "cons onto a non-list", e->span);
        std::int64_t ep = pot_value(lt->elem_pot, e->span);
        RtVal cell;
        cell.k = RtVal::K::Cons;
        cell.a = std::make_shared<RtVal>(std::move(h.v));
        cell.d = std::make_shared<RtVal>(std::move(tl.v));
        cell.stored = std::make_shared<std::int64_t>(ep);
        flow += ep;
        return {std::move(cell), lt};
      }
      case Expr::K::MatchList: {
        VT s = synth(e->e1);
        FTypePtr t = head(s.t, e->span);
        if (t->k != FType::K::List)
          fail(errc::stuck, "match on a non-list", e->span);
        if (s.v.k == RtVal::K::Nil) {
          VT r = synth(e->e2);
          deplete_uses(e->e3, {e->var, e->var2});
          return r;
        }
        if (s.v.k != RtVal::K::Cons)
          fail(errc::stuck, "match subject is not a list value", e->span);
        FTypePtr t1 = type_only(e->e2);
        refund_cell(s.v, t, e->span);
        Saved s1 = save(e->var);
        Saved s2 = save(e->var2);
        bind(e->var, *s.v.a, t->elem);
        bind(e->var2, *s.v.d, t);
        RtVal v = check(e->e3, t1);
        restore(e->var2, s2);
        restore(e->var, s1);
        deplete_uses(e->e2, {});
        return {std::move(v), t1};
      }
      case Expr::K::Tick:
        ticks += e->int_val;
        return synth(e->e1);
      case Expr::K::MonadVal:
        fail(errc::stuck, "process value in expression position", e->span);
    }
    fail(errc::stuck, "unhandled expression form", e->span);
  }

  void refund_cell(const RtVal& cell, const FTypePtr& list_t, Span sp) {
    std::int64_t ep = pot_value(list_t->elem_pot, sp);
    if (ep == 0) return;
    std::int64_t have = cell.stored ? *cell.stored : 0;
    if (have < ep)
      fail(errc::stuck, "list cell potential already spent", sp);
    *cell.stored -= ep;
    flow -= ep;
  }

  RtVal check(const ExprPtr& e, const FTypePtr& expected) {
    FTypePtr exp = head(expected, e->span);
    switch (e->k) {
      case Expr::K::Inl: {
        if (exp->k != FType::K::Sum)
          fail(errc::stuck, "injection into a non-sum", e->span);
        RtVal v;
        v.k = RtVal::K::Inl;
        v.a = std::make_shared<RtVal>(check(e->e1, exp->a));
        return v;
      }
      case Expr::K::Inr: {
        if (exp->k != FType::K::Sum)
          fail(errc::stuck, "injection into a non-sum", e->span);
        RtVal v;
        v.k = RtVal::K::Inr;
        v.a = std::make_shared<RtVal>(check(e->e1, exp->b));
        return v;
      }
      case Expr::K::Nil: {
        if (exp->k != FType::K::List)
          fail(errc::stuck, "empty list at a non-list type", e->span);
        RtVal v;
        v.k = RtVal::K::Nil;
        return v;
      }
      case Expr::K::Cons: {
        if (exp->k != FType::K::List)
          fail(errc::stuck, "cons at a non-list type", e->span);
        RtVal h = check(e->e1, exp->elem);
        RtVal tl = check(e->e2, expected);
        std::int64_t ep = pot_value(exp->elem_pot, e->span);
        RtVal cell;
        cell.k = RtVal::K::Cons;
        cell.a = std::make_shared<RtVal>(std::move(h));
        cell.d = std::make_shared<RtVal>(std::move(tl));
        cell.stored = std::make_shared<std::int64_t>(ep);
        flow += ep;
        return cell;
      }
      case Expr::K::Pair: {
        if (exp->k != FType::K::Prod)
          fail(errc::stuck, "pair at a non-product type", e->span);
        RtVal a = check(e->e1, exp->a);
        RtVal d = check(e->e2, exp->b);
        RtVal p;
        p.k = RtVal::K::Pair;
        p.a = std::make_shared<RtVal>(std::move(a));
        p.d = std::make_shared<RtVal>(std::move(d));
        return p;
      }
      case Expr::K::Lambda: {
        if (exp->k != FType::K::Arrow)
          fail(errc::stuck, "lambda at a non-function type", e->span);
        RtVal cl;
        cl.k = RtVal::K::Closure;
        cl.lam = e;
        cl.captured = std::make_shared<std::map<std::string, RtVal>>(env);
        cl.captured_t =
            std::make_shared<std::map<std::string, FTypePtr>>(psi);
        return cl;
      }
      case Expr::K::IfE: {
        RtVal cv = check(e->e1, t_bool());
        if (cv.b) {
          RtVal v = check(e->e2, expected);
          deplete_uses(e->e3, {});
          return v;
        }
        RtVal v = check(e->e3, expected);
        deplete_uses(e->e2, {});
        return v;
      }
      case Expr::K::LetE: {
        VT b = synth(e->e1);
        Saved sv = save(e->var);
        bind(e->var, std::move(b.v), b.t);
        RtVal v = check(e->e2, expected);
        restore(e->var, sv);
        return v;
      }
      case Expr::K::LetPair: {
        VT s = synth(e->e1);
        FTypePtr t = head(s.t, e->span);
        if (t->k != FType::K::Prod || s.v.k != RtVal::K::Pair)
          fail(errc::stuck, "splitting a non-pair", e->span);
        Saved s1 = save(e->var);
        Saved s2 = save(e->var2);
        bind(e->var, *s.v.a, t->a);
        bind(e->var2, *s.v.d, t->b);
        RtVal v = check(e->e2, expected);
        restore(e->var2, s2);
        restore(e->var, s1);
        return v;
      }
      case Expr::K::CaseSum: {
        VT s = synth(e->e1);
        FTypePtr t = head(s.t, e->span);
        if (t->k != FType::K::Sum)
          fail(errc::stuck, "case on a non-sum", e->span);
        if (s.v.k == RtVal::K::Inl) {
          Saved sv = save(e->var);
          bind(e->var, *s.v.a, t->a);
          RtVal v = check(e->e2, expected);
          restore(e->var, sv);
          deplete_uses(e->e3, {e->var2});
          return v;
        }
        if (s.v.k != RtVal::K::Inr)
          fail(errc::stuck, "case subject is not an injection", e->span);
        Saved sv = save(e->var2);
        bind(e->var2, *s.v.a, t->b);
        RtVal v = check(e->e3, expected);
        restore(e->var2, sv);
        deplete_uses(e->e2, {e->var});
        return v;
      }
      case Expr::K::MatchList: {
        VT s = synth(e->e1);
        FTypePtr t = head(s.t, e->span);
        if (t->k != FType::K::List)
          fail(errc::stuck, "match on a non-list", e->span);
        if (s.v.k == RtVal::K::Nil) {
          RtVal v = check(e->e2, expected);
          deplete_uses(e->e3, {e->var, e->var2});
          return v;
        }
        if (s.v.k != RtVal::K::Cons)
          fail(errc::stuck, "match subject is not a list value", e->span);
        refund_cell(s.v, t, e->span);
        Saved s1 = save(e->var);
        Saved s2 = save(e->var2);
        bind(e->var, *s.v.a, t->elem);
        bind(e->var2, *s.v.d, t);
        RtVal v = check(e->e3, expected);
        restore(e->var2, s2);
        restore(e->var, s1);
        deplete_uses(e->e2, {});
        return v;
      }
      case Expr::K::Tick:
        ticks += e->int_val;
        return check(e->e1, expected);
      default: {
        VT r = synth(e);
        return std::move(r.v);
      }
    }
  }
};

// Charge the evaluation's cost against the object: ticks become recorded
// work, and ticks plus stored-potential flow come out of the potential.
void charge(SemObject& o, const Evaluator& ev, Span sp) {
  o.work += ev.ticks;
  o.pot -= ev.ticks + ev.flow;
  if (o.pot < 0)
    fail(errc::stuck, "object potential went negative", sp);
}

// Bind a value into an object's environment; a shadowed previous value is
// handed back so the caller can sweep any potential it strands.
std::optional<RtVal> bind_value(SemObject& o, const std::string& var, RtVal v,
                                const FTypePtr& t) {
  std::optional<RtVal> old;
  if (auto it = o.env.find(var); it != o.env.end())
    old = std::move(it->second);
  o.env[var] = std::move(v);
  o.env_t[var] = t;
  return old;
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

SemObject make_instance(Configuration& c, const ProcDecl& d,
                        std::vector<RtVal> vals,
                        const std::vector<std::string>& chans,
                        std::int64_t pot, std::string& chan_out) {
  if (vals.size() != d.fun_args.size())
    fail(errc::stuck,
         "process " + d.name + " expects " +
             std::to_string(d.fun_args.size()) + " value arguments",
         d.span);
  if (chans.size() != d.chan_args.size())
    fail(errc::stuck,
         "process " + d.name + " expects " +
             std::to_string(d.chan_args.size()) + " channel arguments",
         d.span);
  std::string cc = fresh_name(c, d.offered.name);
  std::vector<std::pair<std::string, std::string>> renames;
  renames.emplace_back(d.offered.name, cc);
  for (std::size_t k = 0; k < chans.size(); ++k)
    renames.emplace_back(d.chan_args[k].name, chans[k]);
  SemObject o;
  o.kind = SemObject::Kind::Proc;
  o.chan = cc;
  o.mode = d.mode;
  o.pot = pot;
  o.body = rename_many(d.body, renames);
  for (std::size_t k = 0; k < vals.size(); ++k) {
    o.env[d.fun_args[k].first] = std::move(vals[k]);
    o.env_t[d.fun_args[k].first] = d.fun_args[k].second;
  }
  c.type_of[cc] = d.offered_type;
  c.mode_of[cc] = d.mode;
  if (d.mode == Mode::S())
    c.shared[cc] = SharedEntry{d.offered_type, false, ""};
  chan_out = cc;
  return o;
}

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

// A message is a tiny process: the sent action followed by a forward that
// splices the continuation channel. Provider-sent messages provide the old
// channel X and hand over the fresh cp; client-sent messages provide cp
// and consume X.
SemObject make_msg(Proc payload, const std::string& X, const std::string& cp,
                   bool provider_sent, Mode m, Span sp) {
  Proc fw;
  fw.k = Proc::K::Fwd;
  fw.span = sp;
  fw.chan = ChanRef{provider_sent ? X : cp, m, sp};
  fw.chan2 = ChanRef{provider_sent ? cp : X, m, sp};
  payload.cont = mk_proc(std::move(fw));
  SemObject msg;
  msg.kind = SemObject::Kind::Msg;
  msg.chan = provider_sent ? X : cp;
  msg.mode = m;
  msg.body = mk_proc(std::move(payload));
  return msg;
}

// The channel a non-closing message consumes (the second operand of its
// terminal forward); empty for closing messages.
std::string msg_consumed(const SemObject& m) {
  if (!m.body || m.body->k == Proc::K::Close) return "";
  const Proc* fw = m.body->cont.get();
  if (!fw || fw->k != Proc::K::Fwd) return "";
  return fw->chan.name == m.chan ? fw->chan2.name : fw->chan.name;
}

// ---------------------------------------------------------------------------
// Firing rules. Each returns true if it applied, false if the object
// cannot act right now; genuine violations throw.
// ---------------------------------------------------------------------------

bool fire_receipt(Configuration& c, std::size_t mi, StepResult& out) {
  const Signature& sig = *c.sig;
  SemObject& m = c.objects[mi];
  const ProcPtr mbp = m.body;
  const Proc& mb = *mbp;

  if (mb.k == Proc::K::Close) {
    const std::string X = mb.chan.name;
    for (std::size_t j = 0; j < c.objects.size(); ++j) {
      SemObject& r = c.objects[j];
      if (r.dead || r.kind != SemObject::Kind::Proc || !r.body) continue;
      if (r.body->k != Proc::K::Wait || r.body->chan.name != X) continue;
      r.work += m.work;
      r.slack += m.slack;
      r.body = r.body->cont;
      c.type_of.erase(X);
      c.mode_of.erase(X);
      m.dead = true;
      out.rule = "wait";
      out.subjects = {X};
      return true;
    }
    return false;
  }

  const Proc* fw = mb.cont.get();
  if (!fw || fw->k != Proc::K::Fwd)
    fail(errc::stuck, "malformed message continuation", mb.span);
  const std::string X = mb.chan.name;
  const bool prov = (m.chan == X);
  const std::string to = prov ? fw->chan2.name : m.chan;

  std::size_t rj = c.objects.size();
  for (std::size_t j = 0; j < c.objects.size(); ++j) {
    const SemObject& r = c.objects[j];
    if (r.dead || r.kind != SemObject::Kind::Proc || !r.body) continue;
    const Proc::K k = r.body->k;
    if (k != Proc::K::Case && k != Proc::K::RecvChan &&
        k != Proc::K::RecvVal && k != Proc::K::Get)
      continue;
    if (r.body->chan.name != X) continue;
    if (prov ? (r.chan == X) : (r.chan != X)) continue;
    rj = j;
    break;
  }
  if (rj == c.objects.size()) return false;

  SemObject& r = c.objects[rj];
  const ProcPtr rbp = r.body;
  const Proc& rb = *rbp;
  std::vector<RtVal> bin;

  switch (mb.k) {
    case Proc::K::SendLabel: {
      if (rb.k != Proc::K::Case) return false;
      ProcPtr branch;
      for (const auto& [l, p2] : rb.branches)
        if (l == mb.label) {
          branch = p2;
          break;
        }
      if (!branch)
        fail(errc::stuck,
             "received label " + mb.label + " without a matching branch",
             rb.span);
      r.body = rename_channel(branch, X, to);
      out.rule = prov ? "oplus_r" : "amp_r";
      break;
    }
    case Proc::K::SendChan: {
      if (rb.k != Proc::K::RecvChan) return false;
      const std::string y = rb.chan2.name;
      const std::string D = mb.chan2.name;
      r.body = rename_channel(rename_channel(rb.cont, y, D), X, to);
      out.rule = prov ? "tensor_r" : "lolli_r";
      break;
    }
    case Proc::K::SendVal: {
      if (rb.k != Proc::K::RecvVal) return false;
      STypePtr h = head_s(sig, type_at(c, X, rb.span), rb.span);
      if (!h->vtype)
        fail(errc::stuck, "value message at a non-value type", rb.span);
      auto pv = m.env.find("%v");
      if (pv == m.env.end())
        fail(errc::stuck, "value message without a payload", rb.span);
      if (auto old = bind_value(r, rb.var, pv->second, h->vtype))
        bin.push_back(std::move(*old));
      r.body = rename_channel(rb.cont, X, to);
      out.rule = prov ? "times_r" : "arrow_r";
      break;
    }
    case Proc::K::Pay: {
      if (rb.k != Proc::K::Get) return false;
      if (pot_value(rb.pot, rb.span) != m.pot)
        fail(errc::stuck, "payment amount does not match the receiver",
             rb.span);
      r.pot += m.pot;
      r.body = rename_channel(rb.cont, X, to);
      out.rule = prov ? "paypot_r" : "getpot_r";
      break;
    }
    default:
      fail(errc::stuck, "unrecognized message form", mb.span);
  }

  r.work += m.work;
  r.slack += m.slack;
  if (!prov) r.chan = m.chan;
  c.type_of.erase(X);
  c.mode_of.erase(X);
  m.dead = true;
  out.subjects = {X, to};
  if (!bin.empty()) c.objects[rj].slack += collect_orphans(c, bin);
  return true;
}

bool fire_fwd(Configuration& c, std::size_t i, StepResult& out) {
  SemObject& o = c.objects[i];
  const ProcPtr bp = o.body;
  const std::string X = o.chan;
  const std::string D = bp->chan2.name;
  if (bp->chan.name != X)
    fail(errc::stuck, "forward does not provide its own channel", bp->span);

  // A message providing D: the forwarder splices it onto X.
  for (std::size_t j = 0; j < c.objects.size(); ++j) {
    SemObject& m = c.objects[j];
    if (m.dead || m.kind != SemObject::Kind::Msg || m.chan != D) continue;
    m.body = rename_channel(m.body, D, X);
    m.chan = X;
    m.work += o.work;
    std::vector<RtVal> bin;
    for (auto& [k, w] : o.env) bin.push_back(std::move(w));
    o.dead = true;
    m.slack += o.slack + collect_orphans(c, bin);
    c.type_of.erase(D);
    c.mode_of.erase(D);
    out.rule = "fwd_p";
    out.subjects = {X, D};
    return true;
  }
  // A message consuming X: the forwarder redirects it to D.
  for (std::size_t j = 0; j < c.objects.size(); ++j) {
    SemObject& m = c.objects[j];
    if (m.dead || m.kind != SemObject::Kind::Msg) continue;
    if (msg_consumed(m) != X) continue;
    m.body = rename_channel(m.body, X, D);
    m.work += o.work;
    std::vector<RtVal> bin;
    for (auto& [k, w] : o.env) bin.push_back(std::move(w));
    o.dead = true;
    m.slack += o.slack + collect_orphans(c, bin);
    c.type_of.erase(X);
    c.mode_of.erase(X);
    out.rule = "fwd_m";
    out.subjects = {X, D};
    return true;
  }
  return false;
}

bool fire_acquire(Configuration& c, std::size_t i, StepResult& out) {
  const Signature& sig = *c.sig;
  SemObject& o = c.objects[i];
  const ProcPtr bp = o.body;
  const std::string tgt = bp->chan2.name;
  auto se = c.shared.find(tgt);
  if (se == c.shared.end())
    fail(errc::stuck, "acquire on an unknown shared channel " + tgt,
         bp->span);
  if (se->second.busy) return false;
  // Fairness: only the first pending acquirer in configuration order may
  // take the channel.
  for (std::size_t j = 0; j < c.objects.size(); ++j) {
    const SemObject& q = c.objects[j];
    if (q.dead || q.kind != SemObject::Kind::Proc || !q.body) continue;
    if (q.body->k == Proc::K::Acquire && q.body->chan2.name == tgt) {
      if (j != i) return false;
      break;
    }
  }
  std::size_t pj = c.objects.size();
  for (std::size_t j = 0; j < c.objects.size(); ++j) {
    const SemObject& q = c.objects[j];
    if (!q.dead && q.kind == SemObject::Kind::Proc && q.chan == tgt) {
      pj = j;
      break;
    }
  }
  if (pj == c.objects.size()) return false;
  SemObject& P = c.objects[pj];
  if (!P.body || P.body->k != Proc::K::Accept) return false;
  if (P.body->chan2.name != tgt)
    fail(errc::stuck, "accept names a foreign channel", P.body->span);
  STypePtr h = head_s(sig, se->second.type, bp->span);
  if (h->k != SType::K::Up)
    fail(errc::stuck, "shared channel " + tgt + " is not at an acquire point",
         bp->span);
  std::string aL = fresh_name(c, bp->chan.name);
  c.type_of[aL] = h->cont;
  c.mode_of[aL] = Mode::L();
  const ProcPtr pb = P.body;
  P.body = rename_channel(pb->cont, pb->chan.name, aL);
  P.chan = aL;
  P.mode = Mode::L();
  P.sess_root = tgt;
  o.body = rename_channel(bp->cont, bp->chan.name, aL);
  se->second.busy = true;
  se->second.session = aL;
  out.rule = "up";
  out.subjects = {tgt, aL};
  return true;
}

bool fire_release(Configuration& c, std::size_t i, StepResult& out) {
  SemObject& o = c.objects[i];
  const ProcPtr bp = o.body;
  const std::string Y = bp->chan2.name;
  std::size_t pj = c.objects.size();
  for (std::size_t j = 0; j < c.objects.size(); ++j) {
    const SemObject& q = c.objects[j];
    if (!q.dead && q.kind == SemObject::Kind::Proc && q.chan == Y) {
      pj = j;
      break;
    }
  }
  if (pj == c.objects.size()) return false;
  SemObject& P = c.objects[pj];
  if (!P.body || P.body->k != Proc::K::Detach) return false;
  if (P.body->chan2.name != Y)
    fail(errc::stuck, "detach names a foreign channel", P.body->span);
  const std::string root = P.sess_root;
  auto se = c.shared.find(root);
  if (root.empty() || se == c.shared.end())
    fail(errc::stuck, "session provider has no shared root", P.body->span);
  const ProcPtr pb = P.body;
  P.body = rename_channel(pb->cont, pb->chan.name, root);
  P.chan = root;
  P.mode = Mode::S();
  P.sess_root.clear();
  o.body = rename_channel(bp->cont, bp->chan.name, root);
  se->second.busy = false;
  se->second.session.clear();
  c.type_of.erase(Y);
  c.mode_of.erase(Y);
  out.rule = "down";
  out.subjects = {Y, root};
  return true;
}

bool fire_spawn(Configuration& c, std::size_t i, StepResult& out) {
  const Signature& sig = *c.sig;
  SemObject& o = c.objects[i];
  const ProcPtr bp = o.body;
  const ProcDecl* callee = sig.find_proc(bp->callee);
  if (!callee)
    fail(errc::stuck, "spawn of an unknown process " + bp->callee, bp->span);
  if (bp->val_args.size() != callee->fun_args.size() ||
      bp->chan_args.size() != callee->chan_args.size())
    fail(errc::stuck, "spawn arity mismatch for " + bp->callee, bp->span);
  Evaluator ev(sig, o.env, o.env_t);
  std::vector<RtVal> vals;
  for (std::size_t k = 0; k < bp->val_args.size(); ++k)
    vals.push_back(ev.check(bp->val_args[k], callee->fun_args[k].second));
  charge(o, ev, bp->span);
  std::int64_t tp = pot_value(callee->potential, bp->span);
  o.pot -= tp;
  if (o.pot < 0)
    fail(errc::stuck, "insufficient potential to spawn " + bp->callee,
         bp->span);
  std::vector<std::string> actuals;
  for (const ChanRef& cr : bp->chan_args) actuals.push_back(cr.name);
  std::string cc;
  SemObject child = make_instance(c, *callee, std::move(vals), actuals, tp, cc);
  const std::string parent = o.chan;
  o.body = rename_channel(bp->cont, bp->chan.name, cc);
  out.rule = "spawn";
  out.subjects = {parent, cc};
  c.objects.push_back(std::move(child));
  c.objects[i].slack += collect_orphans(c, ev.dropped);
  return true;
}

bool fire_defn(Configuration& c, std::size_t i, StepResult& out) {
  const Signature& sig = *c.sig;
  SemObject& o = c.objects[i];
  const ProcPtr bp = o.body;
  const ProcDecl* callee = sig.find_proc(bp->callee);
  if (!callee)
    fail(errc::stuck, "call of an unknown process " + bp->callee, bp->span);
  if (bp->val_args.size() != callee->fun_args.size() ||
      bp->chan_args.size() != callee->chan_args.size())
    fail(errc::stuck, "call arity mismatch for " + bp->callee, bp->span);
  if (!(callee->mode == o.mode))
    fail(errc::stuck, "tail call changes the offered mode", bp->span);
  Evaluator ev(sig, o.env, o.env_t);
  std::vector<RtVal> vals;
  for (std::size_t k = 0; k < bp->val_args.size(); ++k)
    vals.push_back(ev.check(bp->val_args[k], callee->fun_args[k].second));
  charge(o, ev, bp->span);
  std::int64_t tp = pot_value(callee->potential, bp->span);
  if (o.pot != tp)
    fail(errc::stuck,
         "tail call of " + bp->callee + " with mismatched potential (" +
             std::to_string(o.pot) + " held, " + std::to_string(tp) +
             " declared)",
         bp->span);
  std::vector<std::pair<std::string, std::string>> renames;
  renames.emplace_back(callee->offered.name, o.chan);
  for (std::size_t k = 0; k < bp->chan_args.size(); ++k)
    renames.emplace_back(callee->chan_args[k].name, bp->chan_args[k].name);
  std::vector<RtVal> bin = std::move(ev.dropped);
  for (auto& [k, w] : o.env) bin.push_back(std::move(w));
  o.env.clear();
  o.env_t.clear();
  for (std::size_t k = 0; k < vals.size(); ++k) {
    o.env[callee->fun_args[k].first] = std::move(vals[k]);
    o.env_t[callee->fun_args[k].first] = callee->fun_args[k].second;
  }
  o.body = rename_many(callee->body, renames);
  o.slack += collect_orphans(c, bin);
  out.rule = "defn";
  out.subjects = {o.chan};
  return true;
}

bool try_fire(Configuration& c, std::size_t i, StepResult& out) {
  {
    SemObject& o = c.objects[i];
    if (o.kind == SemObject::Kind::Msg) return fire_receipt(c, i, out);
    if (!o.body) fail(errc::stuck, "process without a body", Span{});
  }
  const Signature& sig = *c.sig;
  SemObject& o = c.objects[i];
  const ProcPtr bp = o.body;
  const Proc& b = *bp;
  switch (b.k) {
    case Proc::K::SendLabel: {
      const std::string X = b.chan.name;
      const bool prov = (X == o.chan);
      Mode m = mode_at(c, X, b.span);
      STypePtr h = head_s(sig, type_at(c, X, b.span), b.span);
      if (h->k != (prov ? SType::K::Plus : SType::K::With))
        fail(errc::stuck, "label sent at a non-choice type on " + X, b.span);
      STypePtr cont_t;
      for (const auto& [l, t] : h->branches)
        if (l == b.label) {
          cont_t = t;
          break;
        }
      if (!cont_t)
        fail(errc::stuck,
             "label " + b.label + " is not offered by the type of " + X,
             b.span);
      std::string cp = fresh_name(c, X);
      c.type_of[cp] = cont_t;
      c.mode_of[cp] = m;
      Proc sl;
      sl.k = Proc::K::SendLabel;
      sl.span = b.span;
      sl.chan = ChanRef{X, m, b.span};
      sl.label = b.label;
      SemObject msg = make_msg(std::move(sl), X, cp, prov, m, b.span);
      o.body = rename_channel(b.cont, X, cp);
      if (prov) o.chan = cp;
      out.rule = prov ? "oplus_s" : "amp_s";
      out.subjects = {X, cp};
      c.objects.push_back(std::move(msg));
      return true;
    }
    case Proc::K::SendChan: {
      const std::string X = b.chan.name;
      const bool prov = (X == o.chan);
      Mode m = mode_at(c, X, b.span);
      STypePtr h = head_s(sig, type_at(c, X, b.span), b.span);
      if (h->k != (prov ? SType::K::Tensor : SType::K::Lolli))
        fail(errc::stuck, "channel sent at a non-channel-passing type on " + X,
             b.span);
      std::string cp = fresh_name(c, X);
      c.type_of[cp] = h->cont;
      c.mode_of[cp] = m;
      Proc sc;
      sc.k = Proc::K::SendChan;
      sc.span = b.span;
      sc.chan = ChanRef{X, m, b.span};
      sc.chan2 = b.chan2;
      SemObject msg = make_msg(std::move(sc), X, cp, prov, m, b.span);
      o.body = rename_channel(b.cont, X, cp);
      if (prov) o.chan = cp;
      out.rule = prov ? "tensor_s" : "lolli_s";
      out.subjects = {X, cp};
      c.objects.push_back(std::move(msg));
      return true;
    }
    case Proc::K::SendVal: {
      const std::string X = b.chan.name;
      const bool prov = (X == o.chan);
      Mode m = mode_at(c, X, b.span);
      STypePtr h = head_s(sig, type_at(c, X, b.span), b.span);
      if (h->k != (prov ? SType::K::SendVal : SType::K::RecvVal) || !h->vtype)
        fail(errc::stuck, "value sent at a non-value type on " + X, b.span);
      Evaluator ev(sig, o.env, o.env_t);
      RtVal v = ev.check(b.expr, h->vtype);
      charge(o, ev, b.span);
      std::string cp = fresh_name(c, X);
      c.type_of[cp] = h->cont;
      c.mode_of[cp] = m;
      Proc sv;
      sv.k = Proc::K::SendVal;
      sv.span = b.span;
      sv.chan = ChanRef{X, m, b.span};
      sv.expr = val_to_expr(v, b.span);
      SemObject msg = make_msg(std::move(sv), X, cp, prov, m, b.span);
      msg.env["%v"] = std::move(v);
      o.body = rename_channel(b.cont, X, cp);
      if (prov) o.chan = cp;
      out.rule = prov ? "times_s" : "arrow_s";
      out.subjects = {X, cp};
      c.objects.push_back(std::move(msg));
      c.objects[i].slack += collect_orphans(c, ev.dropped);
      return true;
    }
    case Proc::K::Pay: {
      const std::string X = b.chan.name;
      const bool prov = (X == o.chan);
      Mode m = mode_at(c, X, b.span);
      STypePtr h = head_s(sig, type_at(c, X, b.span), b.span);
      if (h->k != (prov ? SType::K::Pay : SType::K::Get))
        fail(errc::stuck, "payment at a non-payment type on " + X, b.span);
      std::int64_t r = pot_value(b.pot, b.span);
      if (pot_value(h->pot, b.span) != r)
        fail(errc::stuck, "payment amount differs from the type of " + X,
             b.span);
      o.pot -= r;
      if (o.pot < 0)
        fail(errc::stuck, "insufficient potential for the payment on " + X,
             b.span);
      std::string cp = fresh_name(c, X);
      c.type_of[cp] = h->cont;
      c.mode_of[cp] = m;
      Proc pp;
      pp.k = Proc::K::Pay;
      pp.span = b.span;
      pp.chan = ChanRef{X, m, b.span};
      pp.pot = b.pot;
      SemObject msg = make_msg(std::move(pp), X, cp, prov, m, b.span);
      msg.pot = r;
      o.body = rename_channel(b.cont, X, cp);
      if (prov) o.chan = cp;
      out.rule = prov ? "paypot_s" : "getpot_s";
      out.subjects = {X, cp};
      c.objects.push_back(std::move(msg));
      return true;
    }
    case Proc::K::Work: {
      std::int64_t n = pot_value(b.pot, b.span);
      o.pot -= n;
      if (o.pot < 0)
        fail(errc::stuck, "insufficient potential for work", b.span);
      if (b.braced)
        o.slack += n;
      else
        o.work += n;
      o.body = b.cont;
      out.rule = "tick";
      out.subjects = {o.chan};
      return true;
    }
    case Proc::K::Close: {
      if (b.chan.name != o.chan)
        fail(errc::stuck, "close on a channel the process does not provide",
             b.span);
      if (o.pot != 0)
        fail(errc::stuck, "close with leftover potential", b.span);
      Proc cl;
      cl.k = Proc::K::Close;
      cl.span = b.span;
      cl.chan = ChanRef{o.chan, o.mode, b.span};
      SemObject msg;
      msg.kind = SemObject::Kind::Msg;
      msg.chan = o.chan;
      msg.mode = o.mode;
      msg.work = o.work;
      msg.slack = o.slack;
      msg.body = mk_proc(std::move(cl));
      std::vector<RtVal> bin;
      for (auto& [k, w] : o.env) bin.push_back(std::move(w));
      o.dead = true;
      const std::string X = o.chan;
      out.rule = "close";
      out.subjects = {X};
      c.objects.push_back(std::move(msg));
      c.objects.back().slack += collect_orphans(c, bin);
      return true;
    }
    case Proc::K::LetE: {
      Evaluator ev(sig, o.env, o.env_t);
      VT v = ev.synth(b.expr);
      charge(o, ev, b.span);
      if (auto old = bind_value(o, b.var, std::move(v.v), v.t))
        ev.dropped.push_back(std::move(*old));
      o.body = b.cont;
      out.rule = "internal";
      out.subjects = {o.chan};
      o.slack += collect_orphans(c, ev.dropped);
      return true;
    }
    case Proc::K::IfE: {
      Evaluator ev(sig, o.env, o.env_t);
      RtVal v = ev.check(b.expr, t_bool());
      charge(o, ev, b.span);
      o.body = v.b ? b.cont : b.cont2;
      out.rule = "internal";
      out.subjects = {o.chan};
      o.slack += collect_orphans(c, ev.dropped);
      return true;
    }
    case Proc::K::Fwd:
      return fire_fwd(c, i, out);
    case Proc::K::Spawn:
      return fire_spawn(c, i, out);
    case Proc::K::TailCall:
      return fire_defn(c, i, out);
    case Proc::K::Acquire:
      return fire_acquire(c, i, out);
    case Proc::K::Release:
      return fire_release(c, i, out);
    case Proc::K::Case:
    case Proc::K::RecvChan:
    case Proc::K::RecvVal:
    case Proc::K::Get:
    case Proc::K::Wait:
    case Proc::K::Accept:
    case Proc::K::Detach:
      return false;  // receives fire when their message (or partner) acts
  }
  return false;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Configuration re-checking
// ---------------------------------------------------------------------------

void check_msg_object(const Configuration& c, const Signature& sig,
                      const SemObject& o) {
  const Proc& b = *o.body;
  Span sp = b.span;
  if (b.k == Proc::K::Close) {
    if (b.chan.name != o.chan)
      fail(errc::stuck, "closing message misnames its channel", sp);
    STypePtr h = head_s(sig, type_at(c, o.chan, sp), sp);
    if (h->k != SType::K::One)
      fail(errc::stuck, "closing message at a non-terminal type", sp);
    if (o.pot != 0)
      fail(errc::stuck, "closing message carries potential", sp);
    return;
  }
  const Proc* fw = b.cont.get();
  if (!fw || fw->k != Proc::K::Fwd)
    fail(errc::stuck, "message body does not end in a forward", sp);
  const std::string X = b.chan.name;
  const bool prov = (o.chan == X);
  const std::string cp = prov ? fw->chan2.name : o.chan;
  if (prov ? (fw->chan.name != X)
           : (fw->chan.name != o.chan || fw->chan2.name != X))
    fail(errc::stuck, "message forward misnames its channels", sp);
  STypePtr before = head_s(sig, type_at(c, X, sp), sp);
  STypePtr after = type_at(c, cp, sp);
  switch (b.k) {
    case Proc::K::SendLabel: {
      if (before->k != (prov ? SType::K::Plus : SType::K::With))
        fail(errc::stuck, "label message at a non-choice type", sp);
      STypePtr bt;
      for (const auto& [l, t] : before->branches)
        if (l == b.label) {
          bt = t;
          break;
        }
      if (!bt)
        fail(errc::stuck, "label " + b.label + " is not offered", sp);
      if (!type_equal(sig, bt, after))
        fail(errc::stuck, "label continuation type mismatch", sp);
      if (o.pot != 0)
        fail(errc::stuck, "label message carries potential", sp);
      break;
    }
    case Proc::K::SendChan: {
      if (before->k != (prov ? SType::K::Tensor : SType::K::Lolli))
        fail(errc::stuck, "channel message at a non-channel-passing type", sp);
      const std::string D = b.chan2.name;
      if (!type_equal(sig, before->carried, type_at(c, D, sp)))
        fail(errc::stuck, "carried channel type mismatch", sp);
      if (!(before->carried_mode == mode_at(c, D, sp)))
        fail(errc::stuck, "carried channel mode mismatch", sp);
      if (!type_equal(sig, before->cont, after))
        fail(errc::stuck, "channel message continuation type mismatch", sp);
      if (o.pot != 0)
        fail(errc::stuck, "channel message carries potential", sp);
      break;
    }
    case Proc::K::SendVal: {
      if (before->k != (prov ? SType::K::SendVal : SType::K::RecvVal) ||
          !before->vtype)
        fail(errc::stuck, "value message at a non-value type", sp);
      auto pv = o.env.find("%v");
      if (pv == o.env.end())
        fail(errc::stuck, "value message without a payload", sp);
      std::int64_t cost = check_expr_cost(sig, {}, b.expr, before->vtype);
      if (cost != phi_local(pv->second))
        fail(errc::stuck, "value message potential mismatch", sp);
      if (!type_equal(sig, before->cont, after))
        fail(errc::stuck, "value message continuation type mismatch", sp);
      if (o.pot != 0)
        fail(errc::stuck, "value message carries stray potential", sp);
      break;
    }
    case Proc::K::Pay: {
      if (before->k != (prov ? SType::K::Pay : SType::K::Get))
        fail(errc::stuck, "payment message at a non-payment type", sp);
      if (o.pot != pot_value(before->pot, sp))
        fail(errc::stuck, "payment message amount mismatch", sp);
      if (!type_equal(sig, before->cont, after))
        fail(errc::stuck, "payment message continuation type mismatch", sp);
      break;
    }
    default:
      fail(errc::stuck, "unrecognized message form", sp);
  }
}

void check_proc_object(const Configuration& c, const Signature& sig,
                       const SemObject& o) {
  if (!o.body) fail(errc::stuck, "process without a body", Span{});
  Span sp = o.body->span;
  BodyEnv be;
  be.off_name = o.chan;
  be.off.type = type_at(c, o.chan, sp);
  be.off.mode = o.mode;
  be.potential = o.pot;
  be.psi = o.env_t;
  for (const auto& [k, v] : o.env)
    if (!o.env_t.count(k))
      fail(errc::stuck, "value binding " + k + " has no recorded type", sp);
  for (const std::string& x : free_channels(o.body)) {
    if (x == o.chan) continue;
    if (auto s = c.shared.find(x); s != c.shared.end()) {
      be.gamma[x] = BodyChan{s->second.type, Mode::S()};
      continue;
    }
    auto t = c.type_of.find(x);
    auto mm = c.mode_of.find(x);
    if (t == c.type_of.end() || mm == c.mode_of.end())
      fail(errc::stuck, "free channel " + x + " has no provider record", sp);
    be.delta[x] = BodyChan{t->second, mm->second};
  }
  if (o.mode == Mode::L()) {
    if (o.sess_root.empty() || !c.shared.count(o.sess_root))
      fail(errc::stuck, "session provider " + o.chan + " has no shared root",
           sp);
    be.shared_self = o.sess_root;
    check_esync_against(sig, be.off.type, c.shared.at(o.sess_root).type, sp);
  }
  if (o.mode == Mode::S()) check_esync(sig, be.off.type, sp);
  check_body(sig, be, o.body);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public interface
// ---------------------------------------------------------------------------

std::string show_val(const RtVal& v) {
  switch (v.k) {
    case RtVal::K::Int:
      return std::to_string(v.i);
    case RtVal::K::Bool:
      return v.b ? "true" : "false";
    case RtVal::K::Pair:
      return "(" + show_val(*v.a) + ", " + show_val(*v.d) + ")";
    case RtVal::K::Inl:
      return "inl " + show_val(*v.a);
    case RtVal::K::Inr:
      return "inr " + show_val(*v.a);
    case RtVal::K::Nil:
    case RtVal::K::Cons: {
      std::string s = "[";
      const RtVal* p = &v;
      bool first = true;
      while (p->k == RtVal::K::Cons) {
        if (!first) s += ", ";
        s += show_val(*p->a);
        first = false;
        p = p->d.get();
      }
      return s + "]";
    }
    case RtVal::K::Closure:
      return "<fun>";
  }
  return "?";
}

Configuration make_config(std::shared_ptr<const Signature> sig) {
  Configuration c;
  c.sig = std::move(sig);
  return c;
}

bool rt_val_equal(const RtVal& a, const RtVal& b) {
  if (a.k != b.k) return false;
  switch (a.k) {
    case RtVal::K::Int:
      return a.i == b.i;
    case RtVal::K::Bool:
      return a.b == b.b;
    case RtVal::K::Pair:
      return rt_val_equal(*a.a, *b.a) && rt_val_equal(*a.d, *b.d);
    case RtVal::K::Cons: {
      std::int64_t sa = a.stored ? *a.stored : 0;
      std::int64_t sb = b.stored ? *b.stored : 0;
      return sa == sb && rt_val_equal(*a.a, *b.a) && rt_val_equal(*a.d, *b.d);
    }
    case RtVal::K::Inl:
    case RtVal::K::Inr:
      return rt_val_equal(*a.a, *b.a);
    case RtVal::K::Nil:
      return true;
    case RtVal::K::Closure: {
      if (!struct_equal(a.lam, b.lam)) return false;
      std::size_t na = a.captured ? a.captured->size() : 0;
      std::size_t nb = b.captured ? b.captured->size() : 0;
      if (na != nb) return false;
      if (!na) return true;
      auto it = b.captured->begin();
      for (const auto& [k, v] : *a.captured) {
        if (it->first != k || !rt_val_equal(v, it->second)) return false;
        ++it;
      }
      return true;
    }
  }
  return false;
}

namespace {

struct CloneMemo {
  std::map<const void*, std::shared_ptr<std::int64_t>> boxes;
  std::map<const void*, std::shared_ptr<std::map<std::string, RtVal>>> envs;
};

RtVal clone_val(const RtVal& v, CloneMemo& memo) {
  RtVal n = v;
  if (v.stored) {
    auto& slot = memo.boxes[v.stored.get()];
    if (!slot) slot = std::make_shared<std::int64_t>(*v.stored);
    n.stored = slot;
  }
  if (v.a) n.a = std::make_shared<RtVal>(clone_val(*v.a, memo));
  if (v.d) n.d = std::make_shared<RtVal>(clone_val(*v.d, memo));
  if (v.captured) {
    auto& slot = memo.envs[v.captured.get()];
    if (!slot) {
      slot = std::make_shared<std::map<std::string, RtVal>>();
      for (const auto& [k, w] : *v.captured)
        slot->emplace(k, clone_val(w, memo));
    }
    n.captured = slot;
  }
  return n;
}

}  // namespace

Configuration clone_config(const Configuration& c) {
  Configuration n = c;
  CloneMemo memo;
  for (SemObject& o : n.objects)
    for (auto& [k, v] : o.env) v = clone_val(v, memo);
  return n;
}

bool config_equal(const Configuration& a, const Configuration& b) {
  if (a.objects.size() != b.objects.size()) return false;
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    const SemObject& x = a.objects[i];
    const SemObject& y = b.objects[i];
    if (x.kind != y.kind || x.chan != y.chan || !(x.mode == y.mode) ||
        x.work != y.work || x.pot != y.pot || x.slack != y.slack ||
        x.dead != y.dead || x.sess_root != y.sess_root)
      return false;
    if (!struct_equal(x.body, y.body)) return false;
    if (x.env.size() != y.env.size() || x.env_t.size() != y.env_t.size())
      return false;
    for (auto ix = x.env.begin(), iy = y.env.begin(); ix != x.env.end();
         ++ix, ++iy)
      if (ix->first != iy->first || !rt_val_equal(ix->second, iy->second))
        return false;
    for (auto ix = x.env_t.begin(), iy = y.env_t.begin(); ix != x.env_t.end();
         ++ix, ++iy)
      if (ix->first != iy->first || !struct_equal(ix->second, iy->second))
        return false;
  }
  if (a.type_of.size() != b.type_of.size() ||
      a.mode_of.size() != b.mode_of.size() ||
      a.shared.size() != b.shared.size())
    return false;
  for (auto ix = a.type_of.begin(), iy = b.type_of.begin();
       ix != a.type_of.end(); ++ix, ++iy)
    if (ix->first != iy->first || !struct_equal(ix->second, iy->second))
      return false;
  for (auto ix = a.mode_of.begin(), iy = b.mode_of.begin();
       ix != a.mode_of.end(); ++ix, ++iy)
    if (ix->first != iy->first || !(ix->second == iy->second)) return false;
  for (auto ix = a.shared.begin(), iy = b.shared.begin(); ix != a.shared.end();
       ++ix, ++iy) {
    if (ix->first != iy->first || ix->second.busy != iy->second.busy ||
        ix->second.session != iy->second.session)
      return false;
    if (!struct_equal(ix->second.type, iy->second.type)) return false;
  }
  return a.fresh == b.fresh && a.step_idx == b.step_idx &&
         a.rr_start == b.rr_start && a.seed == b.seed;
}

std::string spawn_proc(Configuration& c, const std::string& proc,
                       const std::vector<RtVal>& vals,
                       const std::vector<std::string>& chans,
                       std::int64_t potential) {
  if (!c.sig) fail(errc::stuck, "configuration has no signature", Span{});
  const ProcDecl* d = c.sig->find_proc(proc);
  if (!d) fail(errc::unknown_name, "unknown process " + proc, Span{});
  std::int64_t pot =
      potential < 0 ? pot_value(d->potential, d->span) : potential;
  std::string cc;
  SemObject o = make_instance(c, *d, vals, chans, pot, cc);
  c.objects.push_back(std::move(o));
  return cc;
}

std::string boot_tx(Configuration& c, const std::string& proc,
                    const std::vector<RtVal>& vals,
                    const std::vector<std::string>& shared_chans,
                    std::int64_t supplied) {
  if (!c.sig) fail(errc::stuck, "configuration has no signature", Span{});
  const ProcDecl* d = c.sig->find_proc(proc);
  if (!d) fail(errc::unknown_name, "unknown process " + proc, Span{});
  if (!(d->mode == Mode::T()))
    fail(errc::mode_violation,
         "process " + proc + " is not declared as a transaction", d->span);
  for (const ChanRef& cr : d->chan_args)
    if (!(cr.mode == Mode::S()))
      fail(errc::mode_violation,
           "transaction " + proc + " takes a linear channel parameter",
           d->span);
  for (const std::string& s : shared_chans)
    if (!c.shared.count(s))
      fail(errc::unknown_name, "unknown shared channel " + s, d->span);
  std::int64_t need = pot_value(d->potential, d->span);
  if (supplied < need)
    fail(errc::insufficient_potential,
         "transaction " + proc + " needs " + std::to_string(need) +
             " gas but only " + std::to_string(supplied) + " was supplied",
         d->span);
  std::string cc;
  SemObject o = make_instance(c, *d, vals, shared_chans, need, cc);
  c.objects.push_back(std::move(o));
  return cc;
}

bool is_poised(const Configuration& c, const SemObject& o) {
  (void)c;
  if (o.kind == SemObject::Kind::Msg) return true;
  if (!o.body) return false;
  switch (o.body->k) {
    case Proc::K::Fwd:
    case Proc::K::Accept:
    case Proc::K::Detach:
      return true;
    case Proc::K::Case:
    case Proc::K::RecvChan:
    case Proc::K::RecvVal:
    case Proc::K::Get:
      return o.body->chan.name == o.chan;
    default:
      return false;
  }
}

StepResult step(Configuration& c) {
  StepResult out;
  const std::size_t n = c.objects.size();
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t j = 0; j < n; ++j) order.push_back(j);
  if (n != 0) {
    if (c.seed != 0) {
      std::uint64_t s =
          c.seed ^ mix64(static_cast<std::uint64_t>(c.step_idx));
      for (std::size_t j = n; j > 1; --j) {
        s = mix64(s);
        std::swap(order[j - 1], order[static_cast<std::size_t>(s % j)]);
      }
    } else {
      std::rotate(order.begin(),
                  order.begin() + (static_cast<std::size_t>(c.rr_start) % n),
                  order.end());
    }
  }
  for (std::size_t idx : order) {
    if (c.objects[idx].dead) continue;
    if (!try_fire(c, idx, out)) continue;
    out.k = StepResult::K::Stepped;
    ++c.step_idx;
    std::size_t pos = 0;
    for (std::size_t j = 0; j <= idx && j < c.objects.size(); ++j)
      if (!c.objects[j].dead) ++pos;
    std::erase_if(c.objects, [](const SemObject& x) { return x.dead; });
    c.rr_start = c.objects.empty()
                     ? 0
                     : static_cast<int>(pos % c.objects.size());
    return out;
  }
  bool all_poised = true;
  bool only_acquires = true;
  std::vector<std::string> blocked;
  for (const SemObject& o : c.objects) {
    if (o.dead) continue;
    if (is_poised(c, o)) continue;
    all_poised = false;
    if (o.kind == SemObject::Kind::Proc && o.body &&
        o.body->k == Proc::K::Acquire)
      blocked.push_back(o.body->chan2.name);
    else
      only_acquires = false;
  }
  if (all_poised) {
    out.k = StepResult::K::Poised;
    return out;
  }
  if (only_acquires && !blocked.empty()) {
    out.k = StepResult::K::Blocked;
    out.blocked = std::move(blocked);
    return out;
  }
  out.k = StepResult::K::StuckIllTyped;
  return out;
}

std::int64_t energy(const Configuration& c) {
  std::int64_t e = 0;
  std::set<const void*> seen;
  for (const SemObject& o : c.objects) {
    if (o.dead) continue;
    e += o.pot + o.work + o.slack;
    for (const auto& [k, v] : o.env) e += sum_unmarked(v, seen);
  }
  return e;
}

std::int64_t total_work(const Configuration& c) {
  std::int64_t w = 0;
  for (const SemObject& o : c.objects)
    if (!o.dead) w += o.work;
  return w;
}

std::int64_t total_slack(const Configuration& c) {
  std::int64_t s = 0;
  for (const SemObject& o : c.objects)
    if (!o.dead) s += o.slack;
  return s;
}

void typecheck_config(const Configuration& c) {
  if (!c.sig) fail(errc::ill_typed, "configuration has no signature", Span{});
  const Signature& sig = *c.sig;
  std::map<std::string, int> providers;
  for (const SemObject& o : c.objects) {
    if (o.dead) continue;
    if (++providers[o.chan] > 1)
      fail(errc::ill_typed, "channel " + o.chan + " has two providers",
           Span{});
  }
  for (const SemObject& o : c.objects) {
    if (o.dead) continue;
    try {
      if (o.kind == SemObject::Kind::Msg)
        check_msg_object(c, sig, o);
      else
        check_proc_object(c, sig, o);
    } catch (const CheckFailure& e) {
      if (e.diag.code == errc::ill_typed) throw;
      fail(errc::ill_typed,
           "object providing " + o.chan + ": " + e.diag.message, e.diag.span);
    } catch (const CoreError& e) {
      fail(errc::ill_typed, "object providing " + o.chan + ": " + e.message,
           e.span);
    }
  }
}

RunResult run(Configuration& c, std::int64_t fuel, const RunOptions& opts) {
  RunResult res;
  const std::int64_t e0 = energy(c);
  for (std::int64_t k = 0; k < fuel; ++k) {
    const std::int64_t at = c.step_idx;
    StepResult st = step(c);
    if (st.k != StepResult::K::Stepped) {
      switch (st.k) {
        case StepResult::K::Poised:
          res.k = RunResult::K::Poised;
          break;
        case StepResult::K::Blocked:
          res.k = RunResult::K::Blocked;
          res.blocked = std::move(st.blocked);
          break;
        default:
          res.k = RunResult::K::StuckIllTyped;
          break;
      }
      return res;
    }
    ++res.steps;
    if (opts.assert_checks) {
      try {
        typecheck_config(c);
      } catch (const CheckFailure& e) {
        fail(errc::assertion_failure,
             "configuration ill-typed after step " + std::to_string(at) +
                 " (" + st.rule + "): " + e.diag.message,
             e.diag.span);
      }
      const std::int64_t e1 = energy(c);
      if (e1 != e0)
        fail(errc::assertion_failure,
             "energy not conserved after step " + std::to_string(at) + " (" +
                 st.rule + "): " + std::to_string(e0) + " -> " +
                 std::to_string(e1),
             Span{});
    }
    if (opts.trace) {
      std::ostream& ts = *opts.trace;
      ts << at << ' ' << st.rule << ' ';
      if (st.subjects.empty()) {
        ts << '-';
      } else {
        for (std::size_t j = 0; j < st.subjects.size(); ++j) {
          if (j) ts << ',';
          ts << st.subjects[j];
        }
      }
      ts << ' ' << total_work(c) << ' ' << energy(c) << '\n';
    }
    if (opts.on_step) opts.on_step(c, st);
  }
  res.k = RunResult::K::FuelExhausted;
  return res;
}

}  // namespace nom
