#include "nom/infer.hpp"

#include <functional>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include "nom/errors.hpp"
#include "nom/linexpr.hpp"
#include "nom/parser.hpp"
#include "nom/simplex.hpp"
#include "nom/typecheck.hpp"

namespace nom {
namespace {

// Structure-preserving rewrite of every potential and mode annotation in a
// program. The bare-work statement keeps its implicit unit cost: only
// braced amounts are annotations.
struct Rewriter {
  std::function<Pot(const Pot&)> pot;
  std::function<Mode(const Mode&)> mode_chan;  // channel occurrences ($/#)
  std::function<Mode(const Mode&)> mode_type;  // modes inside types

  STypePtr st(const STypePtr& t) {
    if (!t) return t;
    SType s = *t;
    switch (s.k) {
      case SType::K::Plus:
      case SType::K::With:
        for (auto& [lab, cont] : s.branches) cont = st(cont);
        break;
      case SType::K::Tensor:
      case SType::K::Lolli:
        s.carried = st(s.carried);
        s.carried_mode = mode_type(s.carried_mode);
        s.cont = st(s.cont);
        break;
      case SType::K::One:
      case SType::K::Named:
        break;
      case SType::K::SendVal:
      case SType::K::RecvVal:
        s.vtype = ft(s.vtype);
        s.cont = st(s.cont);
        break;
      case SType::K::Pay:
      case SType::K::Get:
        s.pot = pot(s.pot);
        s.cont = st(s.cont);
        break;
      case SType::K::Up:
      case SType::K::Down:
        s.cont = st(s.cont);
        break;
    }
    return mk_stype(std::move(s));
  }

  FTypePtr ft(const FTypePtr& t) {
    if (!t) return t;
    FType f = *t;
    switch (f.k) {
      case FType::K::Int:
      case FType::K::Bool:
      case FType::K::Named:
        break;
      case FType::K::Arrow:
        f.a = ft(f.a);
        f.b = ft(f.b);
        f.call_pot = pot(f.call_pot);
        f.ret_pot = pot(f.ret_pot);
        break;
      case FType::K::Sum:
      case FType::K::Prod:
        f.a = ft(f.a);
        f.b = ft(f.b);
        break;
      case FType::K::List:
        f.elem = ft(f.elem);
        f.elem_pot = pot(f.elem_pot);
        break;
      case FType::K::Monad:
        f.offered = st(f.offered);
        f.offered_mode = mode_type(f.offered_mode);
        for (auto& [u, m] : f.uses) {
          u = st(u);
          m = mode_type(m);
        }
        break;
    }
    return mk_ftype(std::move(f));
  }

  ExprPtr ex(const ExprPtr& e) {
    if (!e) return e;
    Expr x = *e;
    x.e1 = ex(x.e1);
    x.e2 = ex(x.e2);
    x.e3 = ex(x.e3);
    x.ann = ft(x.ann);
    x.proc = pr(x.proc);
    x.monad_offer_mode = mode_chan(x.monad_offer_mode);
    return mk_expr(std::move(x));
  }

  ChanRef cr(const ChanRef& r) { return {r.name, mode_chan(r.mode), r.span}; }

  ProcPtr pr(const ProcPtr& p) {
    if (!p) return p;
    Proc q = *p;
    q.chan = cr(q.chan);
    q.chan2 = cr(q.chan2);
    for (auto& [lab, body] : q.branches) body = pr(body);
    q.expr = ex(q.expr);
    for (auto& a : q.val_args) a = ex(a);
    for (auto& c : q.chan_args) c = cr(c);
    if (!(q.k == Proc::K::Work && !q.braced)) q.pot = pot(q.pot);
    q.cont = pr(q.cont);
    q.cont2 = pr(q.cont2);
    return mk_proc(std::move(q));
  }

  Program run(const Program& prog) {
    Program out;
    out.file = prog.file;
    for (const TypeDecl& d : prog.types) {
      TypeDecl t = d;
      t.stype = st(t.stype);
      t.ftype = ft(t.ftype);
      out.types.push_back(std::move(t));
    }
    for (const ProcDecl& d : prog.procs) {
      ProcDecl pd = d;
      for (auto& [n, t] : pd.fun_args) t = ft(t);
      for (auto& c : pd.chan_args) c = cr(c);
      for (auto& t : pd.chan_arg_types) t = st(t);
      pd.potential = pot(pd.potential);
      pd.offered = cr(pd.offered);
      pd.offered_type = st(pd.offered_type);
      pd.body = pr(pd.body);
      out.procs.push_back(std::move(pd));
    }
    return out;
  }
};

struct Elaborated {
  Program program;
  int n_pot = 0;
  int n_mode = 0;
  std::set<int> linear_vars;
};

Elaborated elaborate(const Program& prog) {
  Elaborated out;
  Rewriter rw;
  rw.pot = [&](const Pot& p) {
    if (p.kind == PotKind::Star) return Pot::pvar(out.n_pot++);
    return p;
  };
  rw.mode_chan = [&](const Mode& m) {
    if (m.tag == ModeTag::Unknown) {
      int id = out.n_mode++;
      out.linear_vars.insert(id);
      return Mode::mvar(id);
    }
    return m;
  };
  rw.mode_type = [&](const Mode& m) {
    if (m.tag == ModeTag::Unknown) return Mode::mvar(out.n_mode++);
    return m;
  };
  out.program = rw.run(prog);
  return out;
}

void dump_lp(std::ostream& os, const std::string& file, int n_pot,
             const std::vector<Constraint>& cons) {
  auto namer = [](int v) { return "p" + std::to_string(v); };
  os << "min";
  if (n_pot == 0) os << " 0";
  for (int v = 0; v < n_pot; ++v) os << (v ? " + " : " ") << namer(v);
  os << "\n";
  for (const Constraint& c : cons) {
    os << "# ";
    if (c.span.valid())
      os << (file.empty() ? "<input>" : file) << ":" << c.span.line << ":"
         << c.span.col << " ";
    os << c.rule << "\n";
    os << c.e.render(namer) << (c.k == Constraint::K::Eq ? " = 0" : " >= 0")
       << "\n";
  }
}

}  // namespace

Program star_all(const Program& prog) {
  Rewriter rw;
  rw.pot = [](const Pot& p) {
    if (p.kind == PotKind::Const) return Pot::star();
    return p;
  };
  rw.mode_chan = [](const Mode& m) { return m; };
  rw.mode_type = [](const Mode& m) { return m; };
  return rw.run(prog);
}

Program apply_solution(const Program& prog,
                       const std::map<int, std::int64_t>& pots,
                       const std::map<int, Mode>& modes) {
  Rewriter rw;
  rw.pot = [&](const Pot& p) {
    if (p.kind == PotKind::Var) {
      auto it = pots.find(p.var);
      return Pot::constant(it == pots.end() ? 0 : it->second);
    }
    return p;
  };
  auto solve_mode = [&](const Mode& m) {
    if (m.tag == ModeTag::Var) {
      auto it = modes.find(m.var);
      return it == modes.end() ? Mode::R() : it->second;
    }
    return m;
  };
  rw.mode_chan = solve_mode;
  rw.mode_type = solve_mode;
  return rw.run(prog);
}

InferResult infer(const Program& prog, const InferOptions& opts) {
  Elaborated es = elaborate(prog);
  Signature sig = load_signature(es.program);
  CheckOptions co;
  co.collect = true;
  co.linear_mode_vars = es.linear_vars;
  CheckResult res = check_signature(sig, co);

  if (opts.dump_lp)
    dump_lp(*opts.dump_lp, prog.file, es.n_pot, res.constraints);

  std::vector<LPRow> rows;
  rows.reserve(res.constraints.size());
  for (const Constraint& c : res.constraints) {
    LPRow r;
    r.coef = c.e.coef;
    r.rhs = -c.e.cst;
    r.eq = c.k == Constraint::K::Eq;
    rows.push_back(std::move(r));
  }
  std::map<int, Rat> obj;
  for (int v = 0; v < es.n_pot; ++v) obj[v] = Rat(1);

  LPResult lp = solve_lp(rows, obj);
  if (lp.status == LPStatus::Infeasible)
    fail(errc::infeasible,
         "no potential assignment satisfies the generated constraints",
         Span{});
  if (lp.status == LPStatus::Unbounded)
    fail(errc::infeasible, "potential constraint system is unbounded",
         Span{});

  InferResult out;
  for (const auto& [v, val] : lp.solution) {
    if (!val.is_integer() || val.sign() < 0)
      fail(errc::infeasible,
           "solver produced a non-integral potential " + val.str(), Span{});
    out.potentials[v] = val.num;
  }
  out.modes = res.mode_solution;
  out.n_constraints = res.constraints.size();
  out.n_pot_vars = (std::size_t)es.n_pot;
  out.program = apply_solution(es.program, out.potentials, out.modes);
  // The elaborated program must stand on its own; re-check it fully
  // annotated before handing it back.
  check_signature(load_signature(out.program));
  return out;
}

}  // namespace nom
