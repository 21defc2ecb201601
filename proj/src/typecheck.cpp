#include "nom/typecheck.hpp"

#include <algorithm>
#include <optional>
#include <utility>

#include "nom/ast.hpp"
#include "nom/core.hpp"

namespace nom {

// ---------------------------------------------------------------------------
// ModeSolver

ModeSolver::VarState& ModeSolver::state(int id) { return vars_[id]; }

int ModeSolver::find(int id) {
  VarState& st = state(id);
  if (st.parent < 0) return id;
  int root = find(st.parent);
  st.parent = root;
  return root;
}

void ModeSolver::set_domain(int id, std::set<ModeTag> dom) {
  int r = find(id);
  VarState& st = state(r);
  std::set<ModeTag> meet;
  std::set_intersection(st.domain.begin(), st.domain.end(), dom.begin(),
                        dom.end(), std::inserter(meet, meet.begin()));
  st.domain = std::move(meet);
}

static std::string domain_str(const std::set<ModeTag>& d) {
  std::string s = "{";
  for (ModeTag t : d) {
    if (s.size() > 1) s += ",";
    s += mode_name(Mode{t, -1});
  }
  return s + "}";
}

void ModeSolver::eq(Mode a, Mode b, Span sp, const char* rule) {
  if (a.tag == ModeTag::Unknown || b.tag == ModeTag::Unknown)
    fail(errc::mode_violation,
         std::string("missing mode annotation (") + rule + ")", sp);
  if (a.concrete() && b.concrete()) {
    if (a != b)
      fail(errc::mode_violation, std::string("mode mismatch: ") + mode_name(a) +
                                     " vs " + mode_name(b) + " (" + rule + ")",
           sp);
    return;
  }
  if (a.concrete()) std::swap(a, b);
  // a is a variable
  int ra = find(a.var);
  if (b.concrete()) {
    VarState& st = state(ra);
    if (!st.domain.count(b.tag))
      fail(errc::mode_violation,
           std::string("mode ") + mode_name(b) + " not admissible here, needs " +
               domain_str(st.domain) + " (" + rule + ")",
           sp);
    st.domain = {b.tag};
    return;
  }
  int rb = find(b.var);
  if (ra == rb) return;
  VarState& sa = state(ra);
  VarState& sb = state(rb);
  std::set<ModeTag> meet;
  std::set_intersection(sa.domain.begin(), sa.domain.end(), sb.domain.begin(),
                        sb.domain.end(), std::inserter(meet, meet.begin()));
  if (meet.empty())
    fail(errc::mode_violation,
         std::string("incompatible mode domains ") + domain_str(sa.domain) +
             " vs " + domain_str(sb.domain) + " (" + rule + ")",
         sp);
  sa.domain = std::move(meet);
  sb.parent = ra;
}

void ModeSolver::require_in(Mode m, std::set<ModeTag> allowed, Span sp,
                            const char* rule, const char* code) {
  const char* c = code ? code : errc::mode_violation;
  if (m.tag == ModeTag::Unknown)
    fail(c, std::string("missing mode annotation (") + rule + ")", sp);
  if (m.concrete()) {
    if (!allowed.count(m.tag))
      fail(c, std::string("mode ") + mode_name(m) + " not allowed: " + rule,
           sp);
    return;
  }
  int r = find(m.var);
  VarState& st = state(r);
  std::set<ModeTag> meet;
  std::set_intersection(st.domain.begin(), st.domain.end(), allowed.begin(),
                        allowed.end(), std::inserter(meet, meet.begin()));
  if (meet.empty())
    fail(c, std::string("no admissible mode: needs one of ") +
                domain_str(allowed) + ", has " + domain_str(st.domain) + " (" +
                rule + ")",
         sp);
  st.domain = std::move(meet);
}

Mode ModeSolver::resolve(Mode m) {
  if (m.tag != ModeTag::Var) return m;
  int r = find(m.var);
  const VarState& st = state(r);
  if (st.domain.size() == 1) return Mode{*st.domain.begin(), -1};
  return Mode::mvar(r);
}

std::map<int, Mode> ModeSolver::solve() {
  // Preference order for underdetermined modes: purely linear first, then
  // the critical-section and transaction layers, shared last.
  const ModeTag pref[] = {ModeTag::R, ModeTag::L, ModeTag::T, ModeTag::S};
  std::map<int, Mode> out;
  std::vector<int> ids;
  ids.reserve(vars_.size());
  for (const auto& [id, st] : vars_) ids.push_back(id);
  for (int id : ids) {
    int r = find(id);
    VarState& st = state(r);
    if (st.domain.empty())
      fail(errc::mode_violation, "over-constrained mode variable", Span{});
    if (st.domain.size() > 1) {
      for (ModeTag t : pref) {
        if (st.domain.count(t)) {
          st.domain = {t};
          break;
        }
      }
    }
    out[id] = Mode{*st.domain.begin(), -1};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checker

namespace {

const char* stype_kind_name(SType::K k) {
  switch (k) {
    case SType::K::Plus: return "internal choice +{...}";
    case SType::K::With: return "external choice &{...}";
    case SType::K::Tensor: return "channel send *";
    case SType::K::Lolli: return "channel receive -o";
    case SType::K::One: return "terminated session 1";
    case SType::K::SendVal: return "value send ^";
    case SType::K::RecvVal: return "value receive ->";
    case SType::K::Pay: return "pay |{q}>";
    case SType::K::Get: return "get <{q}|";
    case SType::K::Up: return "accept point /\\";
    case SType::K::Down: return "detach point \\/";
    case SType::K::Named: return "type reference";
  }
  return "?";
}

const char* ftype_kind_name(FType::K k) {
  switch (k) {
    case FType::K::Int: return "int";
    case FType::K::Bool: return "bool";
    case FType::K::Arrow: return "function";
    case FType::K::Sum: return "sum";
    case FType::K::Prod: return "pair";
    case FType::K::List: return "list";
    case FType::K::Monad: return "process";
    case FType::K::Named: return "type reference";
  }
  return "?";
}

FTypePtr make_base(FType::K k) {
  FType f;
  f.k = k;
  return mk_ftype(std::move(f));
}
FTypePtr t_int() {
  static FTypePtr t = make_base(FType::K::Int);
  return t;
}
FTypePtr t_bool() {
  static FTypePtr t = make_base(FType::K::Bool);
  return t;
}

struct ChanInfo {
  STypePtr type;
  Mode mode;
};

class Checker {
 public:
  Checker(const Signature& sig, const CheckOptions& opt, CheckResult& out)
      : sig_(sig), opt_(opt), out_(out) {}

  void run() {
    for (int id : opt_.linear_mode_vars)
      modes_.set_domain(id, {ModeTag::R, ModeTag::L, ModeTag::T});
    for (const std::string& name : sig_.proc_order) {
      const ProcDecl& d = sig_.proc_defs.at(name);
      if (d.mode == Mode::S()) check_esync(sig_, d.offered_type, d.span);
      check_proc(d);
    }
    out_.mode_solution = modes_.solve();
    out_.stats.rule_applications = rules_;
  }

  ModeSolver& modes() { return modes_; }

  void require_stype_equal(const STypePtr& a, const STypePtr& b, Span sp) {
    Assumed as;
    teq(a, b, sp, as);
  }

  // Checks one bare continuation body against an explicit environment
  // (configuration re-checking; concrete annotations only).
  void run_body(const BodyEnv& be, const ProcPtr& body) {
    Env env;
    env.psi = be.psi;
    for (const auto& [n, c] : be.delta) env.delta[n] = {c.type, c.mode};
    for (const auto& [n, c] : be.gamma) env.gamma[n] = {c.type, c.mode};
    env.off_name = be.off_name;
    env.off = {be.off.type, be.off.mode};
    env.shared_self = be.shared_self;
    stmt(body, env, LinExpr::constant(Rat(be.potential)));
  }

  FTypePtr run_synth(const std::map<std::string, FTypePtr>& psi,
                     const ExprPtr& e) {
    Env env;
    env.psi = psi;
    LinExpr cost = LinExpr::constant(Rat(0));
    return synth(e, env, cost);
  }

  std::int64_t run_check_cost(const std::map<std::string, FTypePtr>& psi,
                              const ExprPtr& e, const FTypePtr& expected) {
    Env env;
    env.psi = psi;
    LinExpr cost = LinExpr::constant(Rat(0));
    check_expr(e, expected, env, cost);
    if (!cost.is_constant() || !cost.cst.is_integer())
      fail(errc::ill_typed, "expression cost is not a concrete integer",
           e->span);
    return cost.cst.num;
  }

 private:
  using Assumed = std::set<std::pair<std::string, std::string>>;

  struct Env {
    std::map<std::string, FTypePtr> psi;     // value variables
    std::map<std::string, ChanInfo> delta;   // linear channels
    std::map<std::string, ChanInfo> gamma;   // shared channels
    std::string off_name;
    ChanInfo off;
    std::string shared_self;  // set while inside an accepted critical section
  };

  const Signature& sig_;
  CheckOptions opt_;
  CheckResult& out_;
  ModeSolver modes_;
  std::size_t rules_ = 0;
  const ProcDecl* cur_ = nullptr;

  void bump() { ++rules_; }

  // ---- potential plumbing -------------------------------------------------

  LinExpr from_pot(const Pot& p, Span sp) {
    switch (p.kind) {
      case PotKind::Const:
        return LinExpr::constant(Rat(p.value));
      case PotKind::Star:
        fail(errc::potential_mismatch,
             "potential `*` has not been elaborated; run inference first", sp);
      case PotKind::Var:
        if (!opt_.collect)
          fail(errc::potential_mismatch,
               "potential variable in a fully-annotated check", sp);
        out_.pot_vars.insert(p.var);
        return LinExpr::var(p.var);
    }
    fail(errc::potential_mismatch, "malformed potential annotation", sp);
  }

  void require_geq0(const LinExpr& e, const char* rule, Span sp) {
    if (e.is_constant()) {
      if (e.cst.sign() < 0)
        fail(errc::potential_mismatch,
             std::string("insufficient potential: balance would be ") +
                 e.cst.str() + " (" + rule + ")",
             sp);
      return;
    }
    out_.constraints.push_back(Constraint{Constraint::K::Geq, e, rule, sp});
  }

  void require_eq0(const LinExpr& e, const char* rule, Span sp,
                   const char* code = nullptr) {
    if (e.is_constant()) {
      if (!e.cst.is_zero())
        fail(code ? code : errc::potential_mismatch,
             std::string("potential mismatch: off by ") + e.cst.str() + " (" +
                 rule + ")",
             sp);
      return;
    }
    out_.constraints.push_back(Constraint{Constraint::K::Eq, e, rule, sp});
  }

  void pot_eq(const Pot& a, const Pot& b, Span sp, const char* rule) {
    require_eq0(from_pot(a, sp) - from_pot(b, sp), rule, sp,
                errc::type_mismatch);
  }

  // ---- unfolding ----------------------------------------------------------

  STypePtr head(STypePtr t, Span sp) {
    int guard = 0;
    while (t->k == SType::K::Named) {
      try {
        t = unfold(sig_, t);
      } catch (const CoreError& e) {
        fail(errc::unknown_name, e.message, sp.valid() ? sp : e.span);
      }
      if (++guard > 100000)
        fail(errc::contractiveness, "type unfolding does not terminate", sp);
    }
    return t;
  }

  FTypePtr head_f(FTypePtr t, Span sp) {
    int guard = 0;
    while (t->k == FType::K::Named) {
      try {
        t = unfold_f(sig_, t);
      } catch (const CoreError& e) {
        fail(errc::unknown_name, e.message, sp.valid() ? sp : e.span);
      }
      if (++guard > 100000)
        fail(errc::contractiveness, "type unfolding does not terminate", sp);
    }
    return t;
  }

  // ---- type equality (emitting potential equations when collecting) -------

  void teq(STypePtr a, STypePtr b, Span sp, Assumed& as) {
    bump();
    for (;;) {
      if (a->k == SType::K::Named && b->k == SType::K::Named) {
        if (!as.insert({"S:" + a->name, b->name}).second) return;
      }
      if (a->k == SType::K::Named) {
        a = head_once(a, sp);
        continue;
      }
      if (b->k == SType::K::Named) {
        b = head_once(b, sp);
        continue;
      }
      break;
    }
    if (a->k != b->k)
      fail(errc::type_mismatch,
           std::string("session types differ: ") + stype_kind_name(a->k) +
               " vs " + stype_kind_name(b->k),
           sp);
    switch (a->k) {
      case SType::K::One:
        return;
      case SType::K::Plus:
      case SType::K::With: {
        if (a->branches.size() != b->branches.size())
          fail(errc::type_mismatch, "choice types have different label sets",
               sp);
        for (const auto& [lab, cont] : a->branches) {
          auto it = std::find_if(b->branches.begin(), b->branches.end(),
                                 [&](const auto& p) { return p.first == lab; });
          if (it == b->branches.end())
            fail(errc::type_mismatch, "label " + lab + " missing on one side",
                 sp);
          teq(cont, it->second, sp, as);
        }
        return;
      }
      case SType::K::Tensor:
      case SType::K::Lolli:
        modes_.eq(a->carried_mode, b->carried_mode, sp, "carried channel");
        teq(a->carried, b->carried, sp, as);
        teq(a->cont, b->cont, sp, as);
        return;
      case SType::K::SendVal:
      case SType::K::RecvVal:
        teq_f(a->vtype, b->vtype, sp, as);
        teq(a->cont, b->cont, sp, as);
        return;
      case SType::K::Pay:
      case SType::K::Get:
        pot_eq(a->pot, b->pot, sp, "type-potential");
        teq(a->cont, b->cont, sp, as);
        return;
      case SType::K::Up:
      case SType::K::Down:
        teq(a->cont, b->cont, sp, as);
        return;
      case SType::K::Named:
        break;
    }
    fail(errc::type_mismatch, "malformed session type", sp);
  }

  STypePtr head_once(const STypePtr& t, Span sp) {
    try {
      return unfold(sig_, t);
    } catch (const CoreError& e) {
      fail(errc::unknown_name, e.message, sp.valid() ? sp : e.span);
    }
  }

  void teq_f(FTypePtr a, FTypePtr b, Span sp, Assumed& as) {
    bump();
    for (;;) {
      if (a->k == FType::K::Named && b->k == FType::K::Named) {
        if (!as.insert({"F:" + a->name, b->name}).second) return;
      }
      if (a->k == FType::K::Named) {
        a = head_f_once(a, sp);
        continue;
      }
      if (b->k == FType::K::Named) {
        b = head_f_once(b, sp);
        continue;
      }
      break;
    }
    if (a->k != b->k)
      fail(errc::type_mismatch,
           std::string("value types differ: ") + ftype_kind_name(a->k) +
               " vs " + ftype_kind_name(b->k),
           sp);
    switch (a->k) {
      case FType::K::Int:
      case FType::K::Bool:
        return;
      case FType::K::Arrow:
        teq_f(a->a, b->a, sp, as);
        teq_f(a->b, b->b, sp, as);
        pot_eq(a->call_pot, b->call_pot, sp, "function-potential");
        pot_eq(a->ret_pot, b->ret_pot, sp, "function-potential");
        return;
      case FType::K::Sum:
      case FType::K::Prod:
        teq_f(a->a, b->a, sp, as);
        teq_f(a->b, b->b, sp, as);
        return;
      case FType::K::List:
        teq_f(a->elem, b->elem, sp, as);
        pot_eq(a->elem_pot, b->elem_pot, sp, "list-potential");
        return;
      case FType::K::Monad: {
        teq(a->offered, b->offered, sp, as);
        modes_.eq(a->offered_mode, b->offered_mode, sp, "process type");
        if (a->uses.size() != b->uses.size())
          fail(errc::type_mismatch, "process types use different contexts",
               sp);
        for (std::size_t i = 0; i < a->uses.size(); ++i) {
          teq(a->uses[i].first, b->uses[i].first, sp, as);
          modes_.eq(a->uses[i].second, b->uses[i].second, sp, "process type");
        }
        return;
      }
      case FType::K::Named:
        break;
    }
    fail(errc::type_mismatch, "malformed value type", sp);
  }

  FTypePtr head_f_once(const FTypePtr& t, Span sp) {
    try {
      return unfold_f(sig_, t);
    } catch (const CoreError& e) {
      fail(errc::unknown_name, e.message, sp.valid() ? sp : e.span);
    }
  }

  void require_ftype_equal(const FTypePtr& a, const FTypePtr& b, Span sp) {
    Assumed as;
    teq_f(a, b, sp, as);
  }

  // ---- channel occurrences ------------------------------------------------

  void occ(const ChanRef& r, Mode entry, const char* rule) {
    if (r.mode.tag == ModeTag::Unknown) return;  // annotation omitted
    modes_.eq(r.mode, entry, r.span, rule);
  }

  bool shared_mode(Mode m) { return modes_.resolve(m) == Mode::S(); }

  enum class Side { Provider, Client };

  struct Subject {
    Side side;
    ChanInfo* info;
  };

  Subject resolve_subject(Env& env, const ChanRef& r) {
    if (r.name == env.off_name) {
      occ(r, env.off.mode, "offered channel");
      return {Side::Provider, &env.off};
    }
    auto it = env.delta.find(r.name);
    if (it != env.delta.end()) {
      occ(r, it->second.mode, "channel use");
      return {Side::Client, &it->second};
    }
    if (env.gamma.count(r.name))
      fail(errc::mode_violation,
           "channel " + r.name + " is shared; acquire it before use", r.span);
    fail(errc::linearity,
         "channel " + r.name + " is not available here (unbound or already consumed)",
         r.span);
  }

  // Provider acts on the right of its offered type, a client on the left:
  // the applicable session constructor differs per side.
  STypePtr expect(const Subject& s, SType::K prov, SType::K cli, Span sp,
                  const char* what) {
    STypePtr h = head(s.info->type, sp);
    SType::K want = s.side == Side::Provider ? prov : cli;
    if (h->k != want)
      fail(errc::protocol_mismatch,
           std::string(what) + ": session type is " + stype_kind_name(h->k) +
               ", not " + stype_kind_name(want),
           sp);
    return h;
  }

  void bind_chan(Env& env, const ChanRef& r, const STypePtr& t, Mode m,
                 const char* rule) {
    if (r.name == env.off_name || env.delta.count(r.name) ||
        env.gamma.count(r.name))
      fail(errc::duplicate_name,
           "channel name " + r.name + " is already bound", r.span);
    occ(r, m, rule);
    if (shared_mode(m))
      env.gamma[r.name] = {t, m};
    else
      env.delta[r.name] = {t, m};
  }

  // ---- expressions --------------------------------------------------------

  void merge_branch_psi(Env& env, const Env& b1, const Env& b2) {
    for (auto& [k, t] : env.psi) {
      auto i1 = b1.psi.find(k);
      auto i2 = b2.psi.find(k);
      if (i1 == b1.psi.end() || i2 == b2.psi.end()) continue;
      if (struct_equal(i1->second, i2->second)) {
        t = i1->second;
        continue;
      }
      // Branches consumed different list potential: keep the depleted view.
      FTypePtr h = i1->second;
      if (h->k == FType::K::List) {
        FType z = *h;
        z.elem_pot = Pot::zero();
        t = mk_ftype(std::move(z));
      } else {
        t = i1->second;
      }
    }
  }

  FTypePtr synth(const ExprPtr& e, Env& env, LinExpr& cost) {
    bump();
    switch (e->k) {
      case Expr::K::Var: {
        auto it = env.psi.find(e->var);
        if (it == env.psi.end())
          fail(errc::unknown_name, "unbound variable " + e->var, e->span);
        FTypePtr t = it->second;
        FTypePtr h = t->k == FType::K::Named ? head_f(t, e->span) : t;
        if (h->k == FType::K::List && !(h->elem_pot == Pot::zero())) {
          // A use takes the stored potential with it; later uses of the
          // same variable see a depleted annotation.
          FType z = *h;
          z.elem_pot = Pot::zero();
          it->second = mk_ftype(std::move(z));
          return h;
        }
        return t;
      }
      case Expr::K::IntLit:
        return t_int();
      case Expr::K::BoolLit:
        return t_bool();
      case Expr::K::Binop: {
        const std::string& op = e->op;
        bool arith = op == "+" || op == "-" || op == "*";
        bool cmp = op == "=" || op == "<" || op == ">" || op == "<=" ||
                   op == ">=" || op == "<>";
        bool logic = op == "&&" || op == "||";
        FTypePtr operand = logic ? t_bool() : t_int();
        check_expr(e->e1, operand, env, cost);
        check_expr(e->e2, operand, env, cost);
        if (arith) return t_int();
        if (cmp || logic) return t_bool();
        fail(errc::type_mismatch, "unknown operator " + op, e->span);
      }
      case Expr::K::Not:
        check_expr(e->e1, t_bool(), env, cost);
        return t_bool();
      case Expr::K::IfE: {
        check_expr(e->e1, t_bool(), env, cost);
        Env env1 = env, env2 = env;
        LinExpr c1, c2;
        FTypePtr t1 = synth(e->e2, env1, c1);
        check_expr(e->e3, t1, env2, c2);
        require_eq0(c1 - c2, "if-branches-cost", e->span);
        cost += c1;
        merge_branch_psi(env, env1, env2);
        return t1;
      }
      case Expr::K::LetE: {
        FTypePtr t1 = synth(e->e1, env, cost);
        auto saved = env.psi.find(e->var) != env.psi.end()
                         ? std::optional<FTypePtr>(env.psi[e->var])
                         : std::nullopt;
        env.psi[e->var] = t1;
        FTypePtr t = synth(e->e2, env, cost);
        if (saved)
          env.psi[e->var] = *saved;
        else
          env.psi.erase(e->var);
        return t;
      }
      case Expr::K::Lambda: {
        if (!e->ann)
          fail(errc::type_mismatch,
               "cannot infer the argument type of a bare lambda; annotate it",
               e->span);
        Env env2 = env;
        env2.psi[e->var] = e->ann;
        LinExpr bc;
        FTypePtr t = synth(e->e1, env2, bc);
        require_eq0(bc, "lambda-body-cost", e->span);
        FType arrow;
        arrow.k = FType::K::Arrow;
        arrow.a = e->ann;
        arrow.b = t;
        arrow.call_pot = Pot::zero();
        arrow.ret_pot = Pot::zero();
        return mk_ftype(std::move(arrow));
      }
      case Expr::K::App: {
        FTypePtr tf = head_f(synth(e->e1, env, cost), e->span);
        if (tf->k != FType::K::Arrow)
          fail(errc::type_mismatch, "applying a non-function", e->span);
        check_expr(e->e2, tf->a, env, cost);
        cost += from_pot(tf->call_pot, e->span);
        cost -= from_pot(tf->ret_pot, e->span);
        return tf->b;
      }
      case Expr::K::Pair: {
        FType p;
        p.k = FType::K::Prod;
        p.a = synth(e->e1, env, cost);
        p.b = synth(e->e2, env, cost);
        return mk_ftype(std::move(p));
      }
      case Expr::K::LetPair: {
        FTypePtr t = head_f(synth(e->e1, env, cost), e->span);
        if (t->k != FType::K::Prod)
          fail(errc::type_mismatch, "destructuring a non-pair", e->span);
        auto s1 = env.psi.count(e->var) ? std::optional(env.psi[e->var])
                                        : std::nullopt;
        auto s2 = env.psi.count(e->var2) ? std::optional(env.psi[e->var2])
                                         : std::nullopt;
        env.psi[e->var] = t->a;
        env.psi[e->var2] = t->b;
        FTypePtr r = synth(e->e2, env, cost);
        if (s1) env.psi[e->var] = *s1; else env.psi.erase(e->var);
        if (s2) env.psi[e->var2] = *s2; else env.psi.erase(e->var2);
        return r;
      }
      case Expr::K::Inl:
      case Expr::K::Inr:
        fail(errc::type_mismatch,
             "cannot infer a sum type for an injection here", e->span);
      case Expr::K::CaseSum: {
        FTypePtr t = head_f(synth(e->e1, env, cost), e->span);
        if (t->k != FType::K::Sum)
          fail(errc::type_mismatch, "case subject is not a sum", e->span);
        Env env1 = env, env2 = env;
        env1.psi[e->var] = t->a;
        env2.psi[e->var2] = t->b;
        LinExpr c1, c2;
        FTypePtr t1 = synth(e->e2, env1, c1);
        check_expr(e->e3, t1, env2, c2);
        require_eq0(c1 - c2, "case-branches-cost", e->span);
        cost += c1;
        merge_branch_psi(env, env1, env2);
        return t1;
      }
      case Expr::K::Nil:
        fail(errc::type_mismatch,
             "cannot infer the element type of [] here", e->span);
      case Expr::K::Cons: {
        FTypePtr th = synth(e->e1, env, cost);
        FTypePtr tt = head_f(synth(e->e2, env, cost), e->span);
        if (tt->k != FType::K::List)
          fail(errc::type_mismatch, "cons onto a non-list", e->span);
        require_ftype_equal(th, tt->elem, e->span);
        cost += from_pot(tt->elem_pot, e->span);
        return tt;
      }
      case Expr::K::MatchList: {
        FTypePtr t = head_f(synth(e->e1, env, cost), e->span);
        if (t->k != FType::K::List)
          fail(errc::type_mismatch, "match subject is not a list", e->span);
        Env env1 = env, env2 = env;
        LinExpr c1, c2;
        FTypePtr t1 = synth(e->e2, env1, c1);
        env2.psi[e->var] = t->elem;
        env2.psi[e->var2] = t;
        check_expr(e->e3, t1, env2, c2);
        // The cons branch is funded by the matched element's potential.
        require_eq0(c1 - c2 + from_pot(t->elem_pot, e->span), "match-cost",
                    e->span);
        cost += c1;
        merge_branch_psi(env, env1, env2);
        return t1;
      }
      case Expr::K::Tick:
        cost += LinExpr::constant(Rat(e->int_val));
        return synth(e->e1, env, cost);
      case Expr::K::MonadVal:
        fail(errc::type_mismatch,
             "process values are not supported in expression position",
             e->span);
    }
    fail(errc::type_mismatch, "malformed expression", e->span);
  }

  void check_expr(const ExprPtr& e, const FTypePtr& expected, Env& env,
                  LinExpr& cost) {
    bump();
    FTypePtr exp = expected->k == FType::K::Named ? head_f(expected, e->span)
                                                  : expected;
    switch (e->k) {
      case Expr::K::Inl:
        if (exp->k != FType::K::Sum)
          fail(errc::type_mismatch, "injection into a non-sum", e->span);
        check_expr(e->e1, exp->a, env, cost);
        return;
      case Expr::K::Inr:
        if (exp->k != FType::K::Sum)
          fail(errc::type_mismatch, "injection into a non-sum", e->span);
        check_expr(e->e1, exp->b, env, cost);
        return;
      case Expr::K::Nil:
        if (exp->k != FType::K::List)
          fail(errc::type_mismatch, "[] where a non-list is expected",
               e->span);
        return;
      case Expr::K::Cons:
        if (exp->k != FType::K::List)
          fail(errc::type_mismatch, "cons where a non-list is expected",
               e->span);
        check_expr(e->e1, exp->elem, env, cost);
        check_expr(e->e2, exp, env, cost);
        cost += from_pot(exp->elem_pot, e->span);
        return;
      case Expr::K::Pair:
        if (exp->k != FType::K::Prod)
          fail(errc::type_mismatch, "pair where a non-pair is expected",
               e->span);
        check_expr(e->e1, exp->a, env, cost);
        check_expr(e->e2, exp->b, env, cost);
        return;
      case Expr::K::Lambda: {
        if (exp->k != FType::K::Arrow)
          fail(errc::type_mismatch, "lambda where a non-function is expected",
               e->span);
        if (e->ann) require_ftype_equal(e->ann, exp->a, e->span);
        Env env2 = env;
        env2.psi[e->var] = exp->a;
        LinExpr bc;
        check_expr(e->e1, exp->b, env2, bc);
        require_eq0(bc - from_pot(exp->call_pot, e->span) +
                        from_pot(exp->ret_pot, e->span),
                    "lambda-body-cost", e->span);
        return;
      }
      case Expr::K::IfE: {
        check_expr(e->e1, t_bool(), env, cost);
        Env env1 = env, env2 = env;
        LinExpr c1, c2;
        check_expr(e->e2, exp, env1, c1);
        check_expr(e->e3, exp, env2, c2);
        require_eq0(c1 - c2, "if-branches-cost", e->span);
        cost += c1;
        merge_branch_psi(env, env1, env2);
        return;
      }
      case Expr::K::LetE: {
        FTypePtr t1 = synth(e->e1, env, cost);
        auto saved = env.psi.count(e->var) ? std::optional(env.psi[e->var])
                                           : std::nullopt;
        env.psi[e->var] = t1;
        check_expr(e->e2, exp, env, cost);
        if (saved) env.psi[e->var] = *saved; else env.psi.erase(e->var);
        return;
      }
      case Expr::K::LetPair: {
        FTypePtr t = head_f(synth(e->e1, env, cost), e->span);
        if (t->k != FType::K::Prod)
          fail(errc::type_mismatch, "destructuring a non-pair", e->span);
        auto s1 = env.psi.count(e->var) ? std::optional(env.psi[e->var])
                                        : std::nullopt;
        auto s2 = env.psi.count(e->var2) ? std::optional(env.psi[e->var2])
                                         : std::nullopt;
        env.psi[e->var] = t->a;
        env.psi[e->var2] = t->b;
        check_expr(e->e2, exp, env, cost);
        if (s1) env.psi[e->var] = *s1; else env.psi.erase(e->var);
        if (s2) env.psi[e->var2] = *s2; else env.psi.erase(e->var2);
        return;
      }
      case Expr::K::CaseSum: {
        FTypePtr t = head_f(synth(e->e1, env, cost), e->span);
        if (t->k != FType::K::Sum)
          fail(errc::type_mismatch, "case subject is not a sum", e->span);
        Env env1 = env, env2 = env;
        env1.psi[e->var] = t->a;
        env2.psi[e->var2] = t->b;
        LinExpr c1, c2;
        check_expr(e->e2, exp, env1, c1);
        check_expr(e->e3, exp, env2, c2);
        require_eq0(c1 - c2, "case-branches-cost", e->span);
        cost += c1;
        merge_branch_psi(env, env1, env2);
        return;
      }
      case Expr::K::MatchList: {
        FTypePtr t = head_f(synth(e->e1, env, cost), e->span);
        if (t->k != FType::K::List)
          fail(errc::type_mismatch, "match subject is not a list", e->span);
        Env env1 = env, env2 = env;
        LinExpr c1, c2;
        check_expr(e->e2, exp, env1, c1);
        env2.psi[e->var] = t->elem;
        env2.psi[e->var2] = t;
        check_expr(e->e3, exp, env2, c2);
        require_eq0(c1 - c2 + from_pot(t->elem_pot, e->span), "match-cost",
                    e->span);
        cost += c1;
        merge_branch_psi(env, env1, env2);
        return;
      }
      case Expr::K::Tick:
        cost += LinExpr::constant(Rat(e->int_val));
        check_expr(e->e1, exp, env, cost);
        return;
      default: {
        FTypePtr t = synth(e, env, cost);
        require_ftype_equal(t, exp, e->span);
        return;
      }
    }
  }

  // ---- statements ---------------------------------------------------------

  void spend(LinExpr& q, const LinExpr& amount, const char* rule, Span sp) {
    if (amount.is_constant() && amount.cst.is_zero()) return;
    q -= amount;
    require_geq0(q, rule, sp);
  }

  void stmt(const ProcPtr& p, Env& env, LinExpr q) {
    bump();
    switch (p->k) {
      case Proc::K::SendLabel: {
        Subject s = resolve_subject(env, p->chan);
        STypePtr h =
            expect(s, SType::K::Plus, SType::K::With, p->span, "label send");
        const STypePtr* cont = nullptr;
        for (const auto& [lab, c] : h->branches)
          if (lab == p->label) cont = &c;
        if (!cont)
          fail(errc::protocol_mismatch,
               "label " + p->label + " is not offered by this choice",
               p->span);
        s.info->type = *cont;
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Case: {
        Subject s = resolve_subject(env, p->chan);
        STypePtr h =
            expect(s, SType::K::With, SType::K::Plus, p->span, "case");
        std::set<std::string> seen;
        for (const auto& [lab, body] : p->branches) {
          if (!seen.insert(lab).second)
            fail(errc::duplicate_name, "duplicate case branch " + lab,
                 p->span);
          bool known = false;
          for (const auto& [tl, tc] : h->branches) known = known || tl == lab;
          if (!known)
            fail(errc::protocol_mismatch,
                 "branch " + lab + " does not appear in the choice type",
                 p->span);
        }
        for (const auto& [tl, tc] : h->branches) {
          auto it = std::find_if(p->branches.begin(), p->branches.end(),
                                 [&](const auto& b) { return b.first == tl; });
          if (it == p->branches.end())
            fail(errc::protocol_mismatch, "label " + tl + " is not covered",
                 p->span);
          Env benv = env;
          if (s.side == Side::Provider)
            benv.off.type = tc;
          else
            benv.delta[p->chan.name].type = tc;
          stmt(it->second, benv, q);
        }
        return;
      }
      case Proc::K::SendChan: {
        Subject s = resolve_subject(env, p->chan);
        STypePtr h = expect(s, SType::K::Tensor, SType::K::Lolli, p->span,
                            "channel send");
        if (p->chan2.name == env.off_name)
          fail(errc::linearity, "cannot send the offered channel itself",
               p->span);
        Mode cm = h->carried_mode;
        if (shared_mode(cm)) {
          auto it = env.gamma.find(p->chan2.name);
          if (it == env.gamma.end())
            fail(errc::linearity,
                 "shared channel " + p->chan2.name + " is not in scope",
                 p->chan2.span);
          occ(p->chan2, it->second.mode, "channel send");
          require_stype_equal(it->second.type, h->carried, p->span);
        } else {
          auto it = env.delta.find(p->chan2.name);
          if (it == env.delta.end())
            fail(errc::linearity,
                 "channel " + p->chan2.name +
                     " is not available here (unbound or already consumed)",
                 p->chan2.span);
          occ(p->chan2, it->second.mode, "channel send");
          modes_.eq(it->second.mode, cm, p->span, "carried channel");
          require_stype_equal(it->second.type, h->carried, p->span);
          env.delta.erase(it);
        }
        s.info->type = h->cont;
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::RecvChan: {
        Subject s = resolve_subject(env, p->chan);
        STypePtr h = expect(s, SType::K::Lolli, SType::K::Tensor, p->span,
                            "channel receive");
        s.info->type = h->cont;
        bind_chan(env, p->chan2, h->carried, h->carried_mode,
                  "received channel");
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::SendVal: {
        Subject s = resolve_subject(env, p->chan);
        STypePtr h = expect(s, SType::K::SendVal, SType::K::RecvVal, p->span,
                            "value send");
        LinExpr c0;
        check_expr(p->expr, h->vtype, env, c0);
        spend(q, c0, "sent-value-cost", p->span);
        s.info->type = h->cont;
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::RecvVal: {
        Subject s = resolve_subject(env, p->chan);
        STypePtr h = expect(s, SType::K::RecvVal, SType::K::SendVal, p->span,
                            "value receive");
        env.psi[p->var] = h->vtype;
        s.info->type = h->cont;
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Close: {
        Subject s = resolve_subject(env, p->chan);
        if (s.side != Side::Provider)
          fail(errc::protocol_mismatch,
               "a client finishes a session with wait, not close", p->span);
        STypePtr h = head(s.info->type, p->span);
        if (h->k != SType::K::One)
          fail(errc::protocol_mismatch,
               std::string("close: session type is ") + stype_kind_name(h->k) +
                   ", not 1",
               p->span);
        if (!env.delta.empty())
          fail(errc::unconsumed_context,
               "channel " + env.delta.begin()->first +
                   " is still open at close",
               p->span);
        require_eq0(q, "close-leaf", p->span);
        return;
      }
      case Proc::K::Wait: {
        Subject s = resolve_subject(env, p->chan);
        if (s.side != Side::Client)
          fail(errc::protocol_mismatch, "cannot wait on the offered channel",
               p->span);
        STypePtr h = head(s.info->type, p->span);
        if (h->k != SType::K::One)
          fail(errc::protocol_mismatch,
               std::string("wait: session type is ") + stype_kind_name(h->k) +
                   ", not 1",
               p->span);
        env.delta.erase(p->chan.name);
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Fwd: {
        if (p->chan.name != env.off_name)
          fail(errc::protocol_mismatch,
               "forward must be offered on the provided channel", p->span);
        occ(p->chan, env.off.mode, "forward");
        auto it = env.delta.find(p->chan2.name);
        if (it == env.delta.end())
          fail(errc::linearity,
               "channel " + p->chan2.name +
                   " is not available here (unbound or already consumed)",
               p->chan2.span);
        occ(p->chan2, it->second.mode, "forward");
        modes_.eq(env.off.mode, it->second.mode, p->span, "forward");
        modes_.require_in(env.off.mode, {ModeTag::R, ModeTag::T}, p->span,
                          "forwarding is confined to the purely linear and "
                          "transaction layers");
        require_stype_equal(env.off.type, it->second.type, p->span);
        env.delta.erase(it);
        if (!env.delta.empty())
          fail(errc::unconsumed_context,
               "channel " + env.delta.begin()->first +
                   " is still open at a forward",
               p->span);
        require_eq0(q, "fwd-leaf", p->span);
        return;
      }
      case Proc::K::Work: {
        LinExpr c = from_pot(p->pot, p->span);
        q -= c;
        require_geq0(q, "work", p->span);
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Pay: {
        Subject s = resolve_subject(env, p->chan);
        STypePtr h = expect(s, SType::K::Pay, SType::K::Get, p->span, "pay");
        pot_eq(p->pot, h->pot, p->span, "pay-annotation");
        q -= from_pot(p->pot, p->span);
        require_geq0(q, "pay", p->span);
        s.info->type = h->cont;
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Get: {
        Subject s = resolve_subject(env, p->chan);
        STypePtr h = expect(s, SType::K::Get, SType::K::Pay, p->span, "get");
        pot_eq(p->pot, h->pot, p->span, "get-annotation");
        q += from_pot(p->pot, p->span);
        s.info->type = h->cont;
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Acquire: {
        auto it = env.gamma.find(p->chan2.name);
        if (it == env.gamma.end()) {
          if (env.delta.count(p->chan2.name) || p->chan2.name == env.off_name)
            fail(errc::mode_violation,
                 "acquire needs a shared channel, and " + p->chan2.name +
                     " is linear",
                 p->chan2.span);
          fail(errc::unknown_name,
               "unknown shared channel " + p->chan2.name, p->chan2.span);
        }
        occ(p->chan2, it->second.mode, "acquire");
        STypePtr h = head(it->second.type, p->span);
        if (h->k != SType::K::Up)
          fail(errc::protocol_mismatch,
               "acquire: shared type must start with /\\", p->span);
        modes_.require_in(env.off.mode, {ModeTag::L, ModeTag::T}, p->span,
                          "only a transaction or an acquired contract may "
                          "acquire");
        bind_chan(env, p->chan, h->cont, Mode::L(), "acquired channel");
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Accept: {
        if (p->chan2.name != env.off_name)
          fail(errc::protocol_mismatch,
               "accept must name the offered shared channel", p->span);
        occ(p->chan2, env.off.mode, "accept");
        if (!(modes_.resolve(env.off.mode) == Mode::S()))
          fail(errc::mode_violation,
               "accept is only available to a shared provider", p->span);
        STypePtr h = head(env.off.type, p->span);
        if (h->k != SType::K::Up)
          fail(errc::protocol_mismatch,
               "accept: offered type must start with /\\", p->span);
        for (const auto& [n, ci] : env.delta)
          modes_.require_in(ci.mode, {ModeTag::R}, p->span,
                            "context must be purely linear at accept",
                            errc::not_pure);
        env.shared_self = env.off_name;
        env.off_name = p->chan.name;
        env.off = {h->cont, Mode::L()};
        occ(p->chan, Mode::L(), "accepted channel");
        if (env.delta.count(p->chan.name) || env.gamma.count(p->chan.name))
          fail(errc::duplicate_name,
               "channel name " + p->chan.name + " is already bound",
               p->chan.span);
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Release: {
        auto it = env.delta.find(p->chan2.name);
        if (it == env.delta.end())
          fail(errc::linearity,
               "channel " + p->chan2.name +
                   " is not available here (unbound or already consumed)",
               p->chan2.span);
        occ(p->chan2, it->second.mode, "release");
        modes_.eq(it->second.mode, Mode::L(), p->span, "release");
        STypePtr h = head(it->second.type, p->span);
        if (h->k != SType::K::Down)
          fail(errc::protocol_mismatch,
               "release: session type must start with \\/", p->span);
        auto git = env.gamma.find(p->chan.name);
        if (git == env.gamma.end())
          fail(errc::unknown_name,
               "release restores an unknown shared channel " + p->chan.name,
               p->chan.span);
        occ(p->chan, git->second.mode, "release");
        require_stype_equal(h->cont, git->second.type, p->span);
        env.delta.erase(it);
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::Detach: {
        if (p->chan2.name != env.off_name)
          fail(errc::protocol_mismatch,
               "detach must name the accepted channel", p->span);
        occ(p->chan2, env.off.mode, "detach");
        if (!(modes_.resolve(env.off.mode) == Mode::L()))
          fail(errc::mode_violation,
               "detach is only available inside a critical section", p->span);
        STypePtr h = head(env.off.type, p->span);
        if (h->k != SType::K::Down)
          fail(errc::protocol_mismatch,
               "detach: offered type must start with \\/", p->span);
        if (p->chan.name != env.shared_self)
          fail(errc::protocol_mismatch,
               "detach must restore the accepted shared channel " +
                   env.shared_self,
               p->chan.span);
        occ(p->chan, Mode::S(), "detach");
        env.off_name = env.shared_self;
        env.off = {h->cont, Mode::S()};
        env.shared_self.clear();
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::LetE: {
        LinExpr c0;
        FTypePtr t = synth(p->expr, env, c0);
        spend(q, c0, "let-cost", p->span);
        env.psi[p->var] = t;
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::IfE: {
        LinExpr c0;
        check_expr(p->expr, t_bool(), env, c0);
        spend(q, c0, "condition-cost", p->span);
        Env env2 = env;
        stmt(p->cont, env, q);
        stmt(p->cont2, env2, q);
        return;
      }
      case Proc::K::Spawn: {
        const ProcDecl* callee = sig_.find_proc(p->callee);
        if (!callee)
          fail(errc::unknown_name, "unknown process " + p->callee, p->span);
        check_call_modes(env, *callee, p->span);
        LinExpr c0 = check_call_args(env, *callee, p, p->span);
        c0 += from_pot(callee->potential, p->span);
        q -= c0;
        require_geq0(q, "spawn", p->span);
        bind_chan(env, p->chan, callee->offered_type, callee->mode,
                  "spawned channel");
        stmt(p->cont, env, std::move(q));
        return;
      }
      case Proc::K::TailCall: {
        const ProcDecl* callee = sig_.find_proc(p->callee);
        if (!callee)
          fail(errc::unknown_name, "unknown process " + p->callee, p->span);
        if (p->chan.name != env.off_name)
          fail(errc::protocol_mismatch,
               "a tail call must continue on the offered channel", p->span);
        occ(p->chan, env.off.mode, "tail call");
        modes_.eq(env.off.mode, callee->mode, p->span, "tail call");
        require_stype_equal(env.off.type, callee->offered_type, p->span);
        LinExpr c0 = check_call_args(env, *callee, p, p->span);
        if (!env.delta.empty())
          fail(errc::unconsumed_context,
               "channel " + env.delta.begin()->first +
                   " is still open at a tail call",
               p->span);
        require_eq0(q - c0 - from_pot(callee->potential, p->span),
                    "tail-residual", p->span);
        return;
      }
    }
    fail(errc::protocol_mismatch, "malformed statement", p->span);
  }

  // Mode discipline for instantiation: purely linear providers may be
  // spawned from anywhere; shared providers from the shared, contract, and
  // transaction layers (never from a purely linear asset); transaction
  // providers only from the contract or transaction layers.
  void check_call_modes(Env& env, const ProcDecl& callee, Span sp) {
    if (callee.mode == Mode::R()) return;
    if (callee.mode == Mode::S()) {
      modes_.require_in(env.off.mode, {ModeTag::S, ModeTag::L, ModeTag::T}, sp,
                        "a purely linear asset cannot instantiate a shared "
                        "contract");
      check_esync(sig_, callee.offered_type, sp);
      return;
    }
    modes_.require_in(env.off.mode, {ModeTag::L, ModeTag::T}, sp,
                      "a transaction process can only be instantiated from "
                      "the contract or transaction layers");
  }

  LinExpr check_call_args(Env& env, const ProcDecl& callee, const ProcPtr& p,
                          Span sp) {
    LinExpr c0;
    if (p->val_args.size() != callee.fun_args.size())
      fail(errc::protocol_mismatch,
           p->callee + " takes " + std::to_string(callee.fun_args.size()) +
               " value arguments, got " + std::to_string(p->val_args.size()),
           sp);
    for (std::size_t i = 0; i < p->val_args.size(); ++i)
      check_expr(p->val_args[i], callee.fun_args[i].second, env, c0);
    if (p->chan_args.size() != callee.chan_args.size())
      fail(errc::protocol_mismatch,
           p->callee + " takes " + std::to_string(callee.chan_args.size()) +
               " channel arguments, got " + std::to_string(p->chan_args.size()),
           sp);
    for (std::size_t i = 0; i < p->chan_args.size(); ++i) {
      const ChanRef& arg = p->chan_args[i];
      Mode pm = callee.chan_args[i].mode;
      const STypePtr& pt = callee.chan_arg_types[i];
      if (arg.name == env.off_name)
        fail(errc::linearity, "cannot pass the offered channel as an argument",
             arg.span);
      if (shared_mode(pm)) {
        auto it = env.gamma.find(arg.name);
        if (it == env.gamma.end())
          fail(errc::linearity,
               "shared channel " + arg.name + " is not in scope", arg.span);
        occ(arg, it->second.mode, "call argument");
        require_stype_equal(it->second.type, pt, arg.span);
      } else {
        auto it = env.delta.find(arg.name);
        if (it == env.delta.end())
          fail(errc::linearity,
               "channel " + arg.name +
                   " is not available here (unbound or already consumed)",
               arg.span);
        occ(arg, it->second.mode, "call argument");
        modes_.eq(it->second.mode, pm, arg.span, "call argument");
        require_stype_equal(it->second.type, pt, arg.span);
        env.delta.erase(it);
      }
    }
    return c0;
  }

  // ---- declarations -------------------------------------------------------

  void check_proc(const ProcDecl& d) {
    cur_ = &d;
    Env env;
    for (const auto& [name, t] : d.fun_args) {
      if (env.psi.count(name))
        fail(errc::duplicate_name, "duplicate value parameter " + name,
             d.span);
      env.psi[name] = t;
    }
    for (std::size_t i = 0; i < d.chan_args.size(); ++i) {
      const ChanRef& r = d.chan_args[i];
      if (r.mode.tag == ModeTag::Unknown)
        fail(errc::mode_violation,
             "parameter " + r.name + " needs a mode annotation (run "
             "inference to elaborate)",
             r.span);
      modes_.require_in(r.mode, {ModeTag::R, ModeTag::S}, r.span,
                        "parameters must be purely linear or shared");
      if (r.name == d.offered.name || env.delta.count(r.name) ||
          env.gamma.count(r.name))
        fail(errc::duplicate_name, "duplicate channel parameter " + r.name,
             r.span);
      if (shared_mode(r.mode))
        env.gamma[r.name] = {d.chan_arg_types[i], r.mode};
      else
        env.delta[r.name] = {d.chan_arg_types[i], r.mode};
    }
    env.off_name = d.offered.name;
    env.off = {d.offered_type, d.mode};
    out_.stats.ast_nodes += ast_size(d.body);
    LinExpr q = from_pot(d.potential, d.span);
    stmt(d.body, env, std::move(q));
  }
};

// Strict coinductive equality: annotations compare by identity (equal
// constants, or the same variable). Usable on both fully concrete types
// and elaborated ones, where shared named definitions share variables.
struct StrictEq {
  const Signature& sig;
  std::set<std::pair<std::string, std::string>> assumed;

  bool st(STypePtr a, STypePtr b) {
    for (;;) {
      if (a->k == SType::K::Named && b->k == SType::K::Named) {
        if (!assumed.insert({"S:" + a->name, b->name}).second) return true;
      }
      if (a->k == SType::K::Named) {
        a = step(a);
        if (!a) return false;
        continue;
      }
      if (b->k == SType::K::Named) {
        b = step(b);
        if (!b) return false;
        continue;
      }
      break;
    }
    if (a->k != b->k) return false;
    switch (a->k) {
      case SType::K::One:
        return true;
      case SType::K::Plus:
      case SType::K::With: {
        if (a->branches.size() != b->branches.size()) return false;
        for (const auto& [lab, cont] : a->branches) {
          auto it = std::find_if(b->branches.begin(), b->branches.end(),
                                 [&](const auto& p) { return p.first == lab; });
          if (it == b->branches.end() || !st(cont, it->second)) return false;
        }
        return true;
      }
      case SType::K::Tensor:
      case SType::K::Lolli:
        return a->carried_mode == b->carried_mode &&
               st(a->carried, b->carried) && st(a->cont, b->cont);
      case SType::K::SendVal:
      case SType::K::RecvVal:
        return ft(a->vtype, b->vtype) && st(a->cont, b->cont);
      case SType::K::Pay:
      case SType::K::Get:
        return a->pot == b->pot && st(a->cont, b->cont);
      case SType::K::Up:
      case SType::K::Down:
        return st(a->cont, b->cont);
      case SType::K::Named:
        break;
    }
    return false;
  }

  bool ft(FTypePtr a, FTypePtr b) {
    for (;;) {
      if (a->k == FType::K::Named && b->k == FType::K::Named) {
        if (!assumed.insert({"F:" + a->name, b->name}).second) return true;
      }
      if (a->k == FType::K::Named) {
        a = step_f(a);
        if (!a) return false;
        continue;
      }
      if (b->k == FType::K::Named) {
        b = step_f(b);
        if (!b) return false;
        continue;
      }
      break;
    }
    if (a->k != b->k) return false;
    switch (a->k) {
      case FType::K::Int:
      case FType::K::Bool:
        return true;
      case FType::K::Arrow:
        return ft(a->a, b->a) && ft(a->b, b->b) &&
               a->call_pot == b->call_pot && a->ret_pot == b->ret_pot;
      case FType::K::Sum:
      case FType::K::Prod:
        return ft(a->a, b->a) && ft(a->b, b->b);
      case FType::K::List:
        return ft(a->elem, b->elem) && a->elem_pot == b->elem_pot;
      case FType::K::Monad: {
        if (!st(a->offered, b->offered) ||
            !(a->offered_mode == b->offered_mode) ||
            a->uses.size() != b->uses.size())
          return false;
        for (std::size_t i = 0; i < a->uses.size(); ++i)
          if (!st(a->uses[i].first, b->uses[i].first) ||
              !(a->uses[i].second == b->uses[i].second))
            return false;
        return true;
      }
      case FType::K::Named:
        break;
    }
    return false;
  }

  STypePtr step(const STypePtr& t) {
    try {
      return unfold(sig, t);
    } catch (const CoreError&) {
      return nullptr;
    }
  }
  FTypePtr step_f(const FTypePtr& t) {
    try {
      return unfold_f(sig, t);
    } catch (const CoreError&) {
      return nullptr;
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Entry points

CheckResult check_signature(const Signature& sig, const CheckOptions& opts) {
  CheckResult out;
  Checker ck(sig, opts, out);
  ck.run();
  return out;
}

bool type_equal(const Signature& sig, const STypePtr& a, const STypePtr& b) {
  StrictEq eq{sig, {}};
  return eq.st(a, b);
}

namespace {

// Walks every session path from `start`; each path must detach back to
// `shared` (or recur) and may never terminate.
void esync_walk(const Signature& sig, const STypePtr& start,
                const STypePtr& shared, Span where) {
  std::set<const SType*> visited;
  auto walk = [&](auto&& self, STypePtr c) -> void {
    if (!visited.insert(c.get()).second) return;
    switch (c->k) {
      case SType::K::Named: {
        STypePtr u;
        try {
          u = unfold(sig, c);
        } catch (const CoreError& e) {
          fail(errc::unknown_name, e.message, where.valid() ? where : e.span);
        }
        self(self, u);
        return;
      }
      case SType::K::One:
        fail(errc::not_equi_sync,
             "session terminates without returning to the shared interface",
             c->span.valid() ? c->span : where);
      case SType::K::Down:
        if (!type_equal(sig, c->cont, shared))
          fail(errc::not_equi_sync,
               "detach point does not restore the shared interface",
               c->span.valid() ? c->span : where);
        return;
      case SType::K::Up:
        if (!type_equal(sig, c, shared))
          fail(errc::not_equi_sync,
               "nested accept point differs from the shared interface",
               c->span.valid() ? c->span : where);
        self(self, c->cont);
        return;
      case SType::K::Plus:
      case SType::K::With:
        for (const auto& [lab, cont] : c->branches) self(self, cont);
        return;
      case SType::K::Tensor:
      case SType::K::Lolli:
      case SType::K::SendVal:
      case SType::K::RecvVal:
      case SType::K::Pay:
      case SType::K::Get:
        self(self, c->cont);
        return;
    }
  };
  walk(walk, start);
}

}  // namespace

void check_esync(const Signature& sig, const STypePtr& t, Span where) {
  STypePtr s = t;
  int guard = 0;
  while (s->k == SType::K::Named) {
    try {
      s = unfold(sig, s);
    } catch (const CoreError& e) {
      fail(errc::unknown_name, e.message, where.valid() ? where : e.span);
    }
    if (++guard > 100000)
      fail(errc::contractiveness, "type unfolding does not terminate", where);
  }
  if (s->k != SType::K::Up)
    fail(errc::not_equi_sync,
         "a shared interface must begin with an accept point /\\", where);
  esync_walk(sig, s->cont, t, where);
}

void check_esync_against(const Signature& sig, const STypePtr& t,
                         const STypePtr& shared, Span where) {
  esync_walk(sig, t, shared, where);
}

bool is_esync(const Signature& sig, const STypePtr& t) {
  try {
    check_esync(sig, t, Span{});
    return true;
  } catch (const CheckFailure&) {
    return false;
  }
}

void check_body(const Signature& sig, const BodyEnv& env, const ProcPtr& body) {
  CheckResult out;
  Checker ck(sig, CheckOptions{}, out);
  ck.run_body(env, body);
}

FTypePtr synth_expr_type(const Signature& sig,
                         const std::map<std::string, FTypePtr>& psi,
                         const ExprPtr& e) {
  CheckResult out;
  Checker ck(sig, CheckOptions{}, out);
  return ck.run_synth(psi, e);
}

std::int64_t check_expr_cost(const Signature& sig,
                             const std::map<std::string, FTypePtr>& psi,
                             const ExprPtr& e, const FTypePtr& expected) {
  CheckResult out;
  Checker ck(sig, CheckOptions{}, out);
  return ck.run_check_cost(psi, e, expected);
}

}  // namespace nom
