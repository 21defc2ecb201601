#include "nom/core.hpp"

#include <functional>

namespace nom {

STypePtr mk_stype(SType s) { return std::make_shared<const SType>(std::move(s)); }
FTypePtr mk_ftype(FType f) { return std::make_shared<const FType>(std::move(f)); }
ExprPtr mk_expr(Expr e) { return std::make_shared<const Expr>(std::move(e)); }
ProcPtr mk_proc(Proc p) { return std::make_shared<const Proc>(std::move(p)); }

const char* mode_name(Mode m) {
  switch (m.tag) {
    case ModeTag::R: return "R";
    case ModeTag::S: return "S";
    case ModeTag::L: return "L";
    case ModeTag::T: return "T";
    case ModeTag::Var: return "?var";
    default: return "?";
  }
}

STypePtr unfold(const Signature& sig, const STypePtr& t) {
  if (!t || t->k != SType::K::Named) return t;
  const TypeDecl* d = sig.find_type(t->name);
  if (!d || !d->stype)
    throw CoreError{"unknown-type-name",
                    "undefined session type '" + t->name + "'", t->span};
  return d->stype;
}

FTypePtr unfold_f(const Signature& sig, const FTypePtr& t) {
  if (!t || t->k != FType::K::Named) return t;
  const TypeDecl* d = sig.find_type(t->name);
  if (!d || !d->ftype)
    throw CoreError{"unknown-type-name",
                    "undefined functional type '" + t->name + "'", t->span};
  return d->ftype;
}

std::optional<std::string> find_noncontractive(const Signature& sig) {
  // A definition is non-contractive iff following bare-name bodies from it
  // revisits a name before reaching a structural constructor.
  for (const auto& name : sig.type_order) {
    const TypeDecl& d = sig.type_defs.at(name);
    std::set<std::string> seen{name};
    const SType* cur = d.stype ? d.stype.get() : nullptr;
    const FType* curf = d.ftype ? d.ftype.get() : nullptr;
    while (cur && cur->k == SType::K::Named) {
      if (!seen.insert(cur->name).second) return name;
      const TypeDecl* next = sig.find_type(cur->name);
      if (!next) break;  // unknown names are reported by resolution
      cur = next->stype ? next->stype.get() : nullptr;
      curf = next->ftype ? next->ftype.get() : nullptr;
    }
    while (curf && curf->k == FType::K::Named) {
      if (!seen.insert(curf->name).second) return name;
      const TypeDecl* next = sig.find_type(curf->name);
      if (!next) break;
      curf = next->ftype ? next->ftype.get() : nullptr;
      cur = next->stype ? next->stype.get() : nullptr;
      if (cur) break;  // crossed into session namespace; guarded enough
    }
  }
  return std::nullopt;
}

namespace {



}  // namespace

ExprPtr rename_channel_expr(const ExprPtr& e, const std::string& from,
                            const std::string& to) {
  if (!e) return e;
  Expr n = *e;
  bool changed = false;
  auto rec = [&](const ExprPtr& c) { return rename_channel_expr(c, from, to); };
  if (e->e1) { n.e1 = rec(e->e1); changed |= n.e1 != e->e1; }
  if (e->e2) { n.e2 = rec(e->e2); changed |= n.e2 != e->e2; }
  if (e->e3) { n.e3 = rec(e->e3); changed |= n.e3 != e->e3; }
  if (e->k == Expr::K::MonadVal) {
    // The offered channel and channel parameters are binders.
    bool bound = e->monad_offer == from;
    for (const auto& c : e->monad_chans) bound |= c == from;
    if (!bound && e->proc) {
      ProcPtr p = rename_channel(e->proc, from, to);
      if (p != e->proc) { n.proc = p; changed = true; }
    }
  }
  return changed ? mk_expr(std::move(n)) : e;
}

ProcPtr rename_channel(const ProcPtr& p, const std::string& from,
                       const std::string& to) {
  if (!p) return p;
  Proc n = *p;
  bool changed = false;
  auto rec = [&](const ProcPtr& c) { return rename_channel(c, from, to); };
  auto rchan = [&](ChanRef& c) {
    if (c.name == from) { c.name = to; changed = true; }
  };
  auto rexpr = [&](ExprPtr& e) {
    if (!e) return;
    ExprPtr r = rename_channel_expr(e, from, to);
    if (r != e) { e = r; changed = true; }
  };
  auto rcont = [&](ProcPtr& c) {
    if (!c) return;
    ProcPtr r = rec(c);
    if (r != c) { c = r; changed = true; }
  };

  switch (p->k) {
    case Proc::K::SendLabel:
      rchan(n.chan); rcont(n.cont); break;
    case Proc::K::Case: {
      rchan(n.chan);
      for (auto& [lab, body] : n.branches) {
        ProcPtr r = rec(body);
        if (r != body) { body = r; changed = true; }
      }
      break;
    }
    case Proc::K::SendChan:
      rchan(n.chan); rchan(n.chan2); rcont(n.cont); break;
    case Proc::K::RecvChan:
      // chan2 is the binder for the received channel.
      rchan(n.chan);
      if (p->chan2.name != from) rcont(n.cont);
      break;
    case Proc::K::SendVal:
      rchan(n.chan); rexpr(n.expr); rcont(n.cont); break;
    case Proc::K::RecvVal:
      rchan(n.chan); rcont(n.cont); break;
    case Proc::K::Close:
      rchan(n.chan); break;
    case Proc::K::Wait:
      rchan(n.chan); rcont(n.cont); break;
    case Proc::K::Fwd:
      rchan(n.chan); rchan(n.chan2); break;
    case Proc::K::Spawn: {
      for (auto& e : n.val_args) rexpr(e);
      for (auto& c : n.chan_args) rchan(c);
      // chan is the binder for the spawned channel.
      if (p->chan.name != from) rcont(n.cont);
      break;
    }
    case Proc::K::TailCall: {
      rchan(n.chan);
      for (auto& e : n.val_args) rexpr(e);
      for (auto& c : n.chan_args) rchan(c);
      break;
    }
    case Proc::K::Work:
      rcont(n.cont); break;
    case Proc::K::Pay:
    case Proc::K::Get:
      rchan(n.chan); rcont(n.cont); break;
    case Proc::K::Acquire:
    case Proc::K::Accept:
      // chan is the linear binder; chan2 the shared channel operand.
      rchan(n.chan2);
      if (p->chan.name != from) rcont(n.cont);
      break;
    case Proc::K::Release:
    case Proc::K::Detach:
      // chan is pinned to the shared channel being restored (a reference,
      // not a fresh binder); chan2 is the linear channel operand.
      rchan(n.chan);
      rchan(n.chan2);
      rcont(n.cont);
      break;
    case Proc::K::LetE:
      rexpr(n.expr); rcont(n.cont); break;
    case Proc::K::IfE: {
      rexpr(n.expr);
      rcont(n.cont);
      if (n.cont2) {
        ProcPtr r = rec(n.cont2);
        if (r != n.cont2) { n.cont2 = r; changed = true; }
      }
      break;
    }
  }
  return changed ? mk_proc(std::move(n)) : p;
}

namespace {

void free_chans_expr(const ExprPtr& e, std::set<std::string>& bound,
                     std::set<std::string>& out);

void free_chans(const ProcPtr& p, std::set<std::string> bound,
                std::set<std::string>& out) {
  if (!p) return;
  auto use = [&](const ChanRef& c) {
    if (!bound.count(c.name)) out.insert(c.name);
  };
  switch (p->k) {
    case Proc::K::SendLabel: use(p->chan); free_chans(p->cont, bound, out); break;
    case Proc::K::Case:
      use(p->chan);
      for (const auto& [lab, body] : p->branches) free_chans(body, bound, out);
      break;
    case Proc::K::SendChan:
      use(p->chan); use(p->chan2); free_chans(p->cont, bound, out); break;
    case Proc::K::RecvChan: {
      use(p->chan);
      bound.insert(p->chan2.name);
      free_chans(p->cont, bound, out);
      break;
    }
    case Proc::K::SendVal:
      use(p->chan);
      free_chans_expr(p->expr, bound, out);
      free_chans(p->cont, bound, out);
      break;
    case Proc::K::RecvVal: use(p->chan); free_chans(p->cont, bound, out); break;
    case Proc::K::Close: use(p->chan); break;
    case Proc::K::Wait: use(p->chan); free_chans(p->cont, bound, out); break;
    case Proc::K::Fwd: use(p->chan); use(p->chan2); break;
    case Proc::K::Spawn: {
      for (const auto& e : p->val_args) free_chans_expr(e, bound, out);
      for (const auto& c : p->chan_args) use(c);
      bound.insert(p->chan.name);
      free_chans(p->cont, bound, out);
      break;
    }
    case Proc::K::TailCall: {
      use(p->chan);
      for (const auto& e : p->val_args) free_chans_expr(e, bound, out);
      for (const auto& c : p->chan_args) use(c);
      break;
    }
    case Proc::K::Work: free_chans(p->cont, bound, out); break;
    case Proc::K::Pay:
    case Proc::K::Get: use(p->chan); free_chans(p->cont, bound, out); break;
    case Proc::K::Acquire:
    case Proc::K::Accept: {
      use(p->chan2);
      bound.insert(p->chan.name);
      free_chans(p->cont, bound, out);
      break;
    }
    case Proc::K::Release:
    case Proc::K::Detach: {
      // chan is pinned to the shared channel being restored, so it is a
      // reference, not a fresh binder.
      use(p->chan);
      use(p->chan2);
      free_chans(p->cont, bound, out);
      break;
    }
    case Proc::K::LetE:
      free_chans_expr(p->expr, bound, out);
      free_chans(p->cont, bound, out);
      break;
    case Proc::K::IfE:
      free_chans_expr(p->expr, bound, out);
      free_chans(p->cont, bound, out);
      free_chans(p->cont2, bound, out);
      break;
  }
}

void free_chans_expr(const ExprPtr& e, std::set<std::string>& bound,
                     std::set<std::string>& out) {
  if (!e) return;
  if (e->k == Expr::K::MonadVal) {
    std::set<std::string> b = bound;
    b.insert(e->monad_offer);
    for (const auto& c : e->monad_chans) b.insert(c);
    free_chans(e->proc, b, out);
    return;
  }
  free_chans_expr(e->e1, bound, out);
  free_chans_expr(e->e2, bound, out);
  free_chans_expr(e->e3, bound, out);
}

}  // namespace

std::set<std::string> free_channels(const ProcPtr& p) {
  std::set<std::string> out;
  free_chans(p, {}, out);
  return out;
}

bool struct_equal(const FTypePtr& a, const FTypePtr& b) {
  if (a == b) return true;
  if (!a || !b || a->k != b->k) return false;
  switch (a->k) {
    case FType::K::Int:
    case FType::K::Bool: return true;
    case FType::K::Arrow:
      return a->call_pot == b->call_pot && a->ret_pot == b->ret_pot &&
             struct_equal(a->a, b->a) && struct_equal(a->b, b->b);
    case FType::K::Sum:
    case FType::K::Prod:
      return struct_equal(a->a, b->a) && struct_equal(a->b, b->b);
    case FType::K::List:
      return a->elem_pot == b->elem_pot && struct_equal(a->elem, b->elem);
    case FType::K::Monad: {
      if (!(a->offered_mode == b->offered_mode) ||
          a->uses.size() != b->uses.size() ||
          !struct_equal(a->offered, b->offered))
        return false;
      for (std::size_t i = 0; i < a->uses.size(); ++i)
        if (!(a->uses[i].second == b->uses[i].second) ||
            !struct_equal(a->uses[i].first, b->uses[i].first))
          return false;
      return true;
    }
    case FType::K::Named: return a->name == b->name;
  }
  return false;
}

bool struct_equal(const STypePtr& a, const STypePtr& b) {
  if (a == b) return true;
  if (!a || !b || a->k != b->k) return false;
  switch (a->k) {
    case SType::K::Plus:
    case SType::K::With: {
      if (a->branches.size() != b->branches.size()) return false;
      for (std::size_t i = 0; i < a->branches.size(); ++i)
        if (a->branches[i].first != b->branches[i].first ||
            !struct_equal(a->branches[i].second, b->branches[i].second))
          return false;
      return true;
    }
    case SType::K::Tensor:
    case SType::K::Lolli:
      return a->carried_mode == b->carried_mode &&
             struct_equal(a->carried, b->carried) &&
             struct_equal(a->cont, b->cont);
    case SType::K::One: return true;
    case SType::K::SendVal:
    case SType::K::RecvVal:
      return struct_equal(a->vtype, b->vtype) && struct_equal(a->cont, b->cont);
    case SType::K::Pay:
    case SType::K::Get:
      return a->pot == b->pot && struct_equal(a->cont, b->cont);
    case SType::K::Up:
    case SType::K::Down:
      return struct_equal(a->cont, b->cont);
    case SType::K::Named: return a->name == b->name;
  }
  return false;
}

bool struct_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->k != b->k) return false;
  if (a->var != b->var || a->var2 != b->var2 || a->int_val != b->int_val ||
      a->bool_val != b->bool_val || a->op != b->op)
    return false;
  if (a->k == Expr::K::MonadVal) {
    return a->monad_offer == b->monad_offer &&
           a->monad_chans == b->monad_chans && struct_equal(a->proc, b->proc);
  }
  return struct_equal(a->e1, b->e1) && struct_equal(a->e2, b->e2) &&
         struct_equal(a->e3, b->e3);
}

bool struct_equal(const ProcPtr& a, const ProcPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->k != b->k) return false;
  auto chan_eq = [](const ChanRef& x, const ChanRef& y) {
    return x.name == y.name;  // occurrence modes may differ in elaboration
  };
  if (!chan_eq(a->chan, b->chan) || !chan_eq(a->chan2, b->chan2) ||
      a->label != b->label || a->var != b->var || a->callee != b->callee ||
      !(a->pot == b->pot) || a->braced != b->braced)
    return false;
  if (a->branches.size() != b->branches.size() ||
      a->val_args.size() != b->val_args.size() ||
      a->chan_args.size() != b->chan_args.size())
    return false;
  for (std::size_t i = 0; i < a->branches.size(); ++i)
    if (a->branches[i].first != b->branches[i].first ||
        !struct_equal(a->branches[i].second, b->branches[i].second))
      return false;
  for (std::size_t i = 0; i < a->val_args.size(); ++i)
    if (!struct_equal(a->val_args[i], b->val_args[i])) return false;
  for (std::size_t i = 0; i < a->chan_args.size(); ++i)
    if (!chan_eq(a->chan_args[i], b->chan_args[i])) return false;
  return struct_equal(a->expr, b->expr) && struct_equal(a->cont, b->cont) &&
         struct_equal(a->cont2, b->cont2);
}

std::size_t ast_size(const ExprPtr& e) {
  if (!e) return 0;
  std::size_t n = 1 + ast_size(e->e1) + ast_size(e->e2) + ast_size(e->e3);
  if (e->k == Expr::K::MonadVal) n += ast_size(e->proc);
  return n;
}

std::size_t ast_size(const ProcPtr& p) {
  if (!p) return 0;
  std::size_t n = 1;
  for (const auto& [lab, body] : p->branches) n += ast_size(body);
  for (const auto& e : p->val_args) n += ast_size(e);
  n += ast_size(p->expr);
  n += ast_size(p->cont);
  n += ast_size(p->cont2);
  return n;
}

}  // namespace nom
