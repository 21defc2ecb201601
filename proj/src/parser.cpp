#include "nom/parser.hpp"

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nom/core.hpp"
#include "nom/errors.hpp"
#include "nom/lexer.hpp"

namespace nom {

namespace {

const std::set<std::string>& keywords() {
  static const std::set<std::string> kw = {
      "type",    "stype",   "proc",   "asset",  "contract", "transaction",
      "case",    "send",    "recv",   "close",  "wait",     "work",
      "pay",     "get",     "acquire", "accept", "release",  "detach",
      "let",     "if",      "then",   "else",   "tick",     "true",
      "false",   "in",      "match",  "inl",    "inr",      "not",
      "fst",     "snd",     "int",    "bool",   "list"};
  // `cons` and `nil` are contextual (match patterns) rather than
  // reserved: they are legitimate process and label names.
  return kw;
}

bool is_keyword(const std::string& s) { return keywords().count(s) > 0; }

struct Parser {
  std::vector<Token> toks;
  std::size_t pos = 0;

  const Token& cur() const { return toks[pos]; }
  const Token& peek(std::size_t k = 1) const {
    std::size_t i = pos + k;
    return i < toks.size() ? toks[i] : toks.back();
  }
  void advance() {
    if (pos + 1 < toks.size()) ++pos;
  }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_kw(const char* s) const {
    return cur().kind == Tok::Ident && cur().text == s;
  }
  [[noreturn]] void err(const std::string& msg) const {
    fail(errc::parse_error, msg, cur().span);
  }
  Token expect(Tok k, const char* what) {
    if (!at(k))
      err(std::string("expected ") + what + ", found " + tok_name(cur().kind) +
          (cur().kind == Tok::Ident ? " '" + cur().text + "'" : ""));
    Token t = cur();
    advance();
    return t;
  }
  void expect_kw(const char* s) {
    if (!at_kw(s)) err(std::string("expected '") + s + "'");
    advance();
  }

  // Any word token is acceptable as a branch/choice label (labels such
  // as `cons` or `nil` coincide with expression keywords).
  std::string label_name() {
    Token t = expect(Tok::Ident, "label");
    return t.text;
  }

  std::string fresh_name() {
    Token t = expect(Tok::Ident, "name");
    if (is_keyword(t.text)) fail(errc::parse_error, "'" + t.text + "' is a reserved word", t.span);
    return t.text;
  }

  // ---- modes and potentials ------------------------------------------

  Mode mode_bracket_opt(bool shared_sigil) {
    if (!at(Tok::LBracket)) return shared_sigil ? Mode::S() : Mode::unknown();
    advance();
    Token m = expect(Tok::Ident, "mode letter");
    Mode out;
    if (m.text == "R" || m.text == "P") out = Mode::R();
    else if (m.text == "S") out = Mode::S();
    else if (m.text == "L") out = Mode::L();
    else if (m.text == "T") out = Mode::T();
    else fail(errc::parse_error, "unknown mode '" + m.text + "'", m.span);
    expect(Tok::RBracket, "']'");
    if (shared_sigil && !(out == Mode::S()))
      fail(errc::parse_error, "'#' channels carry mode S", m.span);
    return out;
  }

  ChanRef chanref() {
    if (!at(Tok::ChanLin) && !at(Tok::ChanShared)) err("expected a channel");
    Token t = cur();
    advance();
    bool shared = t.kind == Tok::ChanShared;
    Mode m = mode_bracket_opt(shared);
    return ChanRef{t.text, m, t.span};
  }

  // The `n` or `*` inside {...} annotations.
  Pot pot_body() {
    if (at(Tok::Star)) {
      advance();
      return Pot::star();
    }
    Token t = expect(Tok::IntLit, "potential");
    return Pot::constant(t.value);
  }

  Pot pot_braces_opt() {
    if (!at(Tok::LBrace)) return Pot::zero();
    advance();
    Pot q = pot_body();
    expect(Tok::RBrace, "'}'");
    return q;
  }

  // ---- types ----------------------------------------------------------

  bool at_ftype_start() const {
    return at_kw("int") || at_kw("bool") || at_kw("list") || at(Tok::LParen) ||
           at(Tok::LBrace);
  }

  FTypePtr ftype() {
    Span sp = cur().span;
    FTypePtr a = ftype_sum();
    if (at(Tok::RArrow)) {
      advance();
      FTypePtr b = ftype();
      FType f;
      f.k = FType::K::Arrow;
      f.a = a;
      f.b = b;
      f.span = sp;
      return mk_ftype(std::move(f));
    }
    return a;
  }

  FTypePtr ftype_sum() {
    Span sp = cur().span;
    FTypePtr a = ftype_prod();
    while (at(Tok::Plus)) {
      advance();
      FTypePtr b = ftype_prod();
      FType f;
      f.k = FType::K::Sum;
      f.a = a;
      f.b = b;
      f.span = sp;
      a = mk_ftype(std::move(f));
    }
    return a;
  }

  FTypePtr ftype_prod() {
    Span sp = cur().span;
    FTypePtr a = ftype_atom();
    while (at(Tok::Star)) {
      advance();
      FTypePtr b = ftype_atom();
      FType f;
      f.k = FType::K::Prod;
      f.a = a;
      f.b = b;
      f.span = sp;
      a = mk_ftype(std::move(f));
    }
    return a;
  }

  FTypePtr ftype_atom() {
    Span sp = cur().span;
    FType f;
    f.span = sp;
    if (at_kw("int")) {
      advance();
      f.k = FType::K::Int;
      return mk_ftype(std::move(f));
    }
    if (at_kw("bool")) {
      advance();
      f.k = FType::K::Bool;
      return mk_ftype(std::move(f));
    }
    if (at_kw("list")) {
      advance();
      f.k = FType::K::List;
      f.elem = ftype_atom();
      f.elem_pot = pot_braces_opt();
      return mk_ftype(std::move(f));
    }
    if (at(Tok::LParen)) {
      advance();
      FTypePtr inner = ftype();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (at(Tok::LBrace)) {
      // Packaged-process type { A } (offered session type only).
      advance();
      f.k = FType::K::Monad;
      f.offered = stype();
      f.offered_mode = Mode::unknown();
      expect(Tok::RBrace, "'}'");
      return mk_ftype(std::move(f));
    }
    if (at(Tok::Ident) && !is_keyword(cur().text)) {
      f.k = FType::K::Named;
      f.name = cur().text;
      advance();
      return mk_ftype(std::move(f));
    }
    err("expected a value type");
  }

  std::vector<std::pair<std::string, STypePtr>> choice_branches() {
    expect(Tok::LBrace, "'{'");
    std::vector<std::pair<std::string, STypePtr>> out;
    std::set<std::string> seen;
    while (true) {
      Token lt = cur();
      std::string l = label_name();
      if (!seen.insert(l).second)
        fail(errc::parse_error, "duplicate label '" + l + "'", lt.span);
      expect(Tok::Colon, "':'");
      out.emplace_back(std::move(l), stype());
      if (at(Tok::Comma)) {
        advance();
        continue;
      }
      break;
    }
    expect(Tok::RBrace, "'}'");
    return out;
  }

  STypePtr stype() {
    Span sp = cur().span;
    SType s;
    s.span = sp;
    switch (cur().kind) {
      case Tok::Plus: {
        advance();
        s.k = SType::K::Plus;
        s.branches = choice_branches();
        return stype_infix(mk_stype(std::move(s)));
      }
      case Tok::Amp: {
        advance();
        s.k = SType::K::With;
        s.branches = choice_branches();
        return stype_infix(mk_stype(std::move(s)));
      }
      case Tok::IntLit: {
        if (cur().value != 1) err("the only numeric session type is 1");
        advance();
        s.k = SType::K::One;
        return stype_infix(mk_stype(std::move(s)));
      }
      case Tok::Up: {
        advance();
        s.k = SType::K::Up;
        s.cont = stype();
        return mk_stype(std::move(s));
      }
      case Tok::Down: {
        advance();
        s.k = SType::K::Down;
        s.cont = stype();
        return mk_stype(std::move(s));
      }
      case Tok::GetOpen: {
        advance();
        s.k = SType::K::Get;
        s.pot = pot_body();
        expect(Tok::GetClose, "'}|'");
        s.cont = stype();
        return mk_stype(std::move(s));
      }
      case Tok::GetBare: {
        advance();
        s.k = SType::K::Get;
        s.pot = Pot::zero();
        s.cont = stype();
        return mk_stype(std::move(s));
      }
      case Tok::PayOpen: {
        advance();
        s.k = SType::K::Pay;
        s.pot = pot_body();
        expect(Tok::PayClose, "'}>'");
        s.cont = stype();
        return mk_stype(std::move(s));
      }
      case Tok::PayBare: {
        advance();
        s.k = SType::K::Pay;
        s.pot = Pot::zero();
        s.cont = stype();
        return mk_stype(std::move(s));
      }
      default: break;
    }
    if (at(Tok::LParen)) {
      // `(tau) ^ A` / `(tau) -> A` value prefix, or a parenthesized
      // session type `(A) *[m] B`. Try the value reading first and fall
      // back on failure.
      std::size_t save = pos;
      try {
        return stype_value_prefix(sp);
      } catch (const CheckFailure&) {
        pos = save;
      }
      advance();
      STypePtr inner = stype();
      expect(Tok::RParen, "')'");
      return stype_infix(std::move(inner));
    }
    if (at_ftype_start()) return stype_value_prefix(sp);
    if (at(Tok::Ident) && !is_keyword(cur().text)) {
      // A name is a functional type when a value-send/receive operator
      // follows, otherwise a session type reference.
      if (peek().kind == Tok::Caret || peek().kind == Tok::RArrow)
        return stype_value_prefix(sp);
      s.k = SType::K::Named;
      s.name = cur().text;
      advance();
      return stype_infix(mk_stype(std::move(s)));
    }
    err("expected a session type");
  }

  STypePtr stype_value_prefix(Span sp) {
    FTypePtr tau = ftype_atom();
    SType s;
    s.span = sp;
    s.vtype = tau;
    if (at(Tok::Caret)) {
      advance();
      s.k = SType::K::SendVal;
    } else if (at(Tok::RArrow)) {
      advance();
      s.k = SType::K::RecvVal;
    } else {
      err("expected '^' or '->' after a value type");
    }
    s.cont = stype();
    return mk_stype(std::move(s));
  }

  STypePtr stype_infix(STypePtr base) {
    if (at(Tok::Star) || at(Tok::Lolli)) {
      bool tensor = at(Tok::Star);
      Span sp = cur().span;
      advance();
      Mode m = Mode::unknown();
      if (at(Tok::LBracket)) m = mode_bracket_opt(false);
      SType s;
      s.span = sp;
      s.k = tensor ? SType::K::Tensor : SType::K::Lolli;
      s.carried = std::move(base);
      s.carried_mode = m;
      s.cont = stype();
      return mk_stype(std::move(s));
    }
    return base;
  }

  // ---- expressions ----------------------------------------------------

  bool at_expr_atom_start() const {
    if (at(Tok::IntLit) || at(Tok::LParen) || at(Tok::LBracket)) return true;
    if (at(Tok::Ident))
      return !is_keyword(cur().text) || cur().text == "true" ||
             cur().text == "false";
    return false;
  }

  ExprPtr expr() {
    Span sp = cur().span;
    if (at(Tok::Backslash)) {
      advance();
      Expr e;
      e.span = sp;
      e.k = Expr::K::Lambda;
      e.var = fresh_name();
      if (at(Tok::Colon)) {
        advance();
        e.ann = ftype();
      }
      expect(Tok::Dot, "'.'");
      e.e1 = expr();
      return mk_expr(std::move(e));
    }
    if (at_kw("let")) {
      advance();
      Expr e;
      e.span = sp;
      if (at(Tok::LParen)) {
        advance();
        e.k = Expr::K::LetPair;
        e.var = fresh_name();
        expect(Tok::Comma, "','");
        e.var2 = fresh_name();
        expect(Tok::RParen, "')'");
      } else {
        e.k = Expr::K::LetE;
        e.var = fresh_name();
      }
      expect(Tok::Eq, "'='");
      e.e1 = expr();
      expect_kw("in");
      e.e2 = expr();
      return mk_expr(std::move(e));
    }
    if (at_kw("if")) {
      advance();
      Expr e;
      e.span = sp;
      e.k = Expr::K::IfE;
      e.e1 = expr();
      expect_kw("then");
      e.e2 = expr();
      expect_kw("else");
      e.e3 = expr();
      return mk_expr(std::move(e));
    }
    if (at_kw("case")) {
      advance();
      Expr e;
      e.span = sp;
      e.k = Expr::K::CaseSum;
      e.e1 = expr_prefix();
      expect(Tok::LParen, "'('");
      expect_kw("inl");
      e.var = fresh_name();
      expect(Tok::FatArrow, "'=>'");
      e.e2 = expr();
      expect(Tok::Pipe, "'|'");
      expect_kw("inr");
      e.var2 = fresh_name();
      expect(Tok::FatArrow, "'=>'");
      e.e3 = expr();
      expect(Tok::RParen, "')'");
      return mk_expr(std::move(e));
    }
    if (at_kw("match")) {
      advance();
      Expr e;
      e.span = sp;
      e.k = Expr::K::MatchList;
      e.e1 = expr_prefix();
      expect(Tok::LParen, "'('");
      expect_kw("nil");
      expect(Tok::FatArrow, "'=>'");
      e.e2 = expr();
      expect(Tok::Pipe, "'|'");
      expect_kw("cons");
      e.var = fresh_name();
      e.var2 = fresh_name();
      expect(Tok::FatArrow, "'=>'");
      e.e3 = expr();
      expect(Tok::RParen, "')'");
      return mk_expr(std::move(e));
    }
    return expr_or();
  }

  ExprPtr binop_chain(ExprPtr lhs, const char* op, ExprPtr rhs, Span sp) {
    Expr e;
    e.span = sp;
    e.k = Expr::K::Binop;
    e.op = op;
    e.e1 = std::move(lhs);
    e.e2 = std::move(rhs);
    return mk_expr(std::move(e));
  }

  ExprPtr expr_or() {
    Span sp = cur().span;
    ExprPtr a = expr_and();
    while (at(Tok::OrOr)) {
      advance();
      a = binop_chain(std::move(a), "||", expr_and(), sp);
    }
    return a;
  }

  ExprPtr expr_and() {
    Span sp = cur().span;
    ExprPtr a = expr_cmp();
    while (at(Tok::AndAnd)) {
      advance();
      a = binop_chain(std::move(a), "&&", expr_cmp(), sp);
    }
    return a;
  }

  ExprPtr expr_cmp() {
    Span sp = cur().span;
    ExprPtr a = expr_cons();
    const char* op = nullptr;
    switch (cur().kind) {
      case Tok::Eq: op = "="; break;
      case Tok::Lt: op = "<"; break;
      case Tok::Gt: op = ">"; break;
      case Tok::Le: op = "<="; break;
      case Tok::Ge: op = ">="; break;
      case Tok::Ne: op = "<>"; break;
      default: return a;
    }
    advance();
    return binop_chain(std::move(a), op, expr_cons(), sp);
  }

  ExprPtr expr_cons() {
    Span sp = cur().span;
    ExprPtr a = expr_add();
    if (at(Tok::ColonColon)) {
      advance();
      Expr e;
      e.span = sp;
      e.k = Expr::K::Cons;
      e.e1 = std::move(a);
      e.e2 = expr_cons();
      return mk_expr(std::move(e));
    }
    return a;
  }

  ExprPtr expr_add() {
    Span sp = cur().span;
    ExprPtr a = expr_mul();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      const char* op = at(Tok::Plus) ? "+" : "-";
      advance();
      a = binop_chain(std::move(a), op, expr_mul(), sp);
    }
    return a;
  }

  ExprPtr expr_mul() {
    Span sp = cur().span;
    ExprPtr a = expr_app();
    while (at(Tok::Star)) {
      advance();
      a = binop_chain(std::move(a), "*", expr_app(), sp);
    }
    return a;
  }

  ExprPtr expr_app() {
    Span sp = cur().span;
    ExprPtr f = expr_prefix();
    while (at_expr_atom_start()) {
      Expr e;
      e.span = sp;
      e.k = Expr::K::App;
      e.e1 = std::move(f);
      e.e2 = expr_prefix();
      f = mk_expr(std::move(e));
    }
    return f;
  }

  ExprPtr expr_prefix() {
    Span sp = cur().span;
    auto unary = [&](Expr::K k) {
      advance();
      Expr e;
      e.span = sp;
      e.k = k;
      e.e1 = expr_prefix();
      return mk_expr(std::move(e));
    };
    if (at_kw("not")) return unary(Expr::K::Not);
    if (at_kw("inl")) return unary(Expr::K::Inl);
    if (at_kw("inr")) return unary(Expr::K::Inr);
    if (at_kw("fst") || at_kw("snd")) {
      bool first = at_kw("fst");
      advance();
      Expr e;
      e.span = sp;
      e.k = Expr::K::LetPair;
      e.var = "_l";
      e.var2 = "_r";
      e.e1 = expr_prefix();
      Expr v;
      v.span = sp;
      v.k = Expr::K::Var;
      v.var = first ? "_l" : "_r";
      e.e2 = mk_expr(std::move(v));
      return mk_expr(std::move(e));
    }
    return expr_atom();
  }

  ExprPtr expr_atom() {
    Span sp = cur().span;
    Expr e;
    e.span = sp;
    if (at(Tok::IntLit)) {
      e.k = Expr::K::IntLit;
      e.int_val = cur().value;
      advance();
      return mk_expr(std::move(e));
    }
    if (at_kw("true") || at_kw("false")) {
      e.k = Expr::K::BoolLit;
      e.bool_val = at_kw("true");
      advance();
      return mk_expr(std::move(e));
    }
    if (at(Tok::Ident) && !is_keyword(cur().text)) {
      e.k = Expr::K::Var;
      e.var = cur().text;
      advance();
      return mk_expr(std::move(e));
    }
    if (at(Tok::LBracket)) {
      advance();
      expect(Tok::RBracket, "']'");
      e.k = Expr::K::Nil;
      return mk_expr(std::move(e));
    }
    if (at(Tok::LParen)) {
      advance();
      if (at_kw("tick")) {
        advance();
        expect(Tok::Semi, "';'");
        e.k = Expr::K::Tick;
        e.int_val = 1;
        e.e1 = expr();
        expect(Tok::RParen, "')'");
        return mk_expr(std::move(e));
      }
      ExprPtr inner = expr();
      if (at(Tok::Comma)) {
        advance();
        e.k = Expr::K::Pair;
        e.e1 = std::move(inner);
        e.e2 = expr();
        expect(Tok::RParen, "')'");
        return mk_expr(std::move(e));
      }
      expect(Tok::RParen, "')'");
      return inner;
    }
    err("expected an expression");
  }

  // ---- processes ------------------------------------------------------

  bool at_call_arg_start() const {
    if (at(Tok::IntLit) || at(Tok::LParen) || at(Tok::ChanLin) ||
        at(Tok::ChanShared))
      return true;
    if (at(Tok::Ident))
      return !is_keyword(cur().text) || cur().text == "true" ||
             cur().text == "false";
    return false;
  }

  void call_args(std::vector<ExprPtr>& vals, std::vector<ChanRef>& chans) {
    // Value and channel arguments may interleave, mirroring declared
    // contexts; both are matched positionally per kind.
    while (at_call_arg_start()) {
      if (at(Tok::ChanLin) || at(Tok::ChanShared)) {
        chans.push_back(chanref());
        continue;
      }
      vals.push_back(expr_prefix());
    }
  }

  ProcPtr proc() {
    Span sp = cur().span;
    Proc p;
    p.span = sp;

    if (at(Tok::ChanLin) || at(Tok::ChanShared)) {
      ChanRef c = chanref();
      if (at(Tok::Dot)) {
        advance();
        p.k = Proc::K::SendLabel;
        p.chan = c;
        p.label = label_name();
        expect(Tok::Semi, "';'");
        p.cont = proc();
        return mk_proc(std::move(p));
      }
      expect(Tok::LArrow, "'<-'");
      if (at_kw("recv")) {
        advance();
        p.k = Proc::K::RecvChan;
        p.chan2 = c;  // binder
        p.chan = chanref();
        expect(Tok::Semi, "';'");
        p.cont = proc();
        return mk_proc(std::move(p));
      }
      if (at_kw("acquire") || at_kw("accept")) {
        p.k = at_kw("acquire") ? Proc::K::Acquire : Proc::K::Accept;
        advance();
        p.chan = c;  // linear binder
        if (!at(Tok::ChanShared)) err("expected a '#' channel");
        p.chan2 = chanref();
        expect(Tok::Semi, "';'");
        p.cont = proc();
        return mk_proc(std::move(p));
      }
      if (at_kw("release") || at_kw("detach")) {
        p.k = at_kw("release") ? Proc::K::Release : Proc::K::Detach;
        advance();
        p.chan = c;  // shared binder
        if (c.mode != Mode::S())
          fail(errc::parse_error, "the left side of release/detach is a '#' channel", c.span);
        if (!at(Tok::ChanLin)) err("expected a '$' channel");
        p.chan2 = chanref();
        expect(Tok::Semi, "';'");
        p.cont = proc();
        return mk_proc(std::move(p));
      }
      if (at(Tok::ChanLin) || at(Tok::ChanShared)) {
        p.k = Proc::K::Fwd;
        p.chan = c;
        p.chan2 = chanref();
        return mk_proc(std::move(p));
      }
      if (at(Tok::Ident) && !is_keyword(cur().text)) {
        p.callee = cur().text;
        advance();
        expect(Tok::LArrow, "'<-'");
        call_args(p.val_args, p.chan_args);
        p.chan = c;
        if (at(Tok::Semi)) {
          advance();
          p.k = Proc::K::Spawn;  // chan is the fresh binder
          p.cont = proc();
        } else {
          p.k = Proc::K::TailCall;  // chan is the offered channel
        }
        return mk_proc(std::move(p));
      }
      err("expected a process statement after '<-'");
    }

    if (at_kw("case")) {
      advance();
      p.k = Proc::K::Case;
      p.chan = chanref();
      expect(Tok::LParen, "'('");
      std::set<std::string> seen;
      while (true) {
        Token lt = cur();
        std::string l = label_name();
        if (!seen.insert(l).second)
          fail(errc::parse_error, "duplicate label '" + l + "'", lt.span);
        expect(Tok::FatArrow, "'=>'");
        p.branches.emplace_back(std::move(l), proc());
        if (at(Tok::Pipe)) {
          advance();
          continue;
        }
        break;
      }
      expect(Tok::RParen, "')'");
      return mk_proc(std::move(p));
    }

    if (at_kw("send")) {
      advance();
      p.chan = chanref();
      if (at(Tok::ChanLin) || at(Tok::ChanShared)) {
        p.k = Proc::K::SendChan;
        p.chan2 = chanref();
      } else {
        p.k = Proc::K::SendVal;
        p.expr = expr();
      }
      expect(Tok::Semi, "';'");
      p.cont = proc();
      return mk_proc(std::move(p));
    }

    if (at_kw("close")) {
      advance();
      p.k = Proc::K::Close;
      p.chan = chanref();
      return mk_proc(std::move(p));
    }

    if (at_kw("wait")) {
      advance();
      p.k = Proc::K::Wait;
      p.chan = chanref();
      expect(Tok::Semi, "';'");
      p.cont = proc();
      return mk_proc(std::move(p));
    }

    if (at_kw("work")) {
      advance();
      p.k = Proc::K::Work;
      if (at(Tok::LBrace)) {
        advance();
        p.pot = pot_body();
        expect(Tok::RBrace, "'}'");
        p.braced = true;
      } else {
        p.pot = Pot::constant(1);
        p.braced = false;
      }
      expect(Tok::Semi, "';'");
      p.cont = proc();
      return mk_proc(std::move(p));
    }

    if (at_kw("pay") || at_kw("get")) {
      p.k = at_kw("pay") ? Proc::K::Pay : Proc::K::Get;
      advance();
      p.chan = chanref();
      p.pot = pot_braces_opt();
      expect(Tok::Semi, "';'");
      p.cont = proc();
      return mk_proc(std::move(p));
    }

    if (at_kw("let")) {
      advance();
      p.k = Proc::K::LetE;
      p.var = fresh_name();
      expect(Tok::Eq, "'='");
      p.expr = expr();
      expect(Tok::Semi, "';'");
      p.cont = proc();
      return mk_proc(std::move(p));
    }

    if (at_kw("if")) {
      advance();
      p.k = Proc::K::IfE;
      p.expr = expr();
      expect_kw("then");
      p.cont = proc();
      expect_kw("else");
      p.cont2 = proc();
      return mk_proc(std::move(p));
    }

    // `x = recv c ;`
    if (at(Tok::Ident) && !is_keyword(cur().text) && peek().kind == Tok::Eq &&
        peek(2).kind == Tok::Ident && peek(2).text == "recv") {
      p.k = Proc::K::RecvVal;
      p.var = cur().text;
      advance();
      advance();  // '='
      advance();  // 'recv'
      p.chan = chanref();
      expect(Tok::Semi, "';'");
      p.cont = proc();
      return mk_proc(std::move(p));
    }

    err("expected a process statement");
  }

  // ---- declarations ---------------------------------------------------

  void decl_context(ProcDecl& d) {
    if (at(Tok::Dot)) {
      advance();
      return;
    }
    while (true) {
      expect(Tok::LParen, "'('");
      if (at(Tok::ChanLin) || at(Tok::ChanShared)) {
        ChanRef c = chanref();
        expect(Tok::Colon, "':'");
        d.chan_args.push_back(c);
        d.chan_arg_types.push_back(stype());
      } else {
        // Value and channel parameters may interleave in a declared
        // context; arguments are matched positionally per kind.
        std::string x = fresh_name();
        expect(Tok::Colon, "':'");
        d.fun_args.emplace_back(std::move(x), ftype());
      }
      expect(Tok::RParen, "')'");
      if (at(Tok::Comma)) {
        advance();
        continue;
      }
      break;
    }
  }

  ProcDecl proc_decl(Span sp) {
    ProcDecl d;
    d.span = sp;
    if (at_kw("asset")) d.mode = Mode::R();
    else if (at_kw("contract")) d.mode = Mode::S();
    else if (at_kw("transaction")) d.mode = Mode::T();
    else err("expected 'asset', 'contract', or 'transaction'");
    bool shared = at_kw("contract");
    advance();
    d.name = fresh_name();
    expect(Tok::Colon, "':'");
    decl_context(d);
    if (at(Tok::Turnstile)) {
      advance();
      d.potential = Pot::zero();
    } else if (at(Tok::PayOpen)) {
      advance();
      d.potential = pot_body();
      expect(Tok::TurnClose, "'}-'");
    } else {
      err("expected '|-' or '|{q}-'");
    }
    expect(Tok::LParen, "'('");
    if (shared && !at(Tok::ChanShared))
      err("a contract offers a '#' channel");
    if (!shared && !at(Tok::ChanLin))
      err("an asset or transaction offers a '$' channel");
    d.offered = chanref();
    if (d.offered.mode.concrete() && d.offered.mode != d.mode)
      fail(errc::parse_error,
           "offered channel mode conflicts with the declaration kind",
           d.offered.span);
    d.offered.mode = d.mode;
    expect(Tok::Colon, "':'");
    d.offered_type = stype();
    expect(Tok::RParen, "')'");
    expect(Tok::Eq, "'='");
    expect(Tok::LBrace, "'{'");
    d.body = proc();
    expect(Tok::RBrace, "'}'");
    return d;
  }

  Program program(const std::string& file) {
    Program p;
    p.file = file;
    while (!at(Tok::End)) {
      Span sp = cur().span;
      if (at_kw("type") || at_kw("stype")) {
        advance();
        TypeDecl t;
        t.span = sp;
        t.name = fresh_name();
        expect(Tok::Eq, "'='");
        t.stype = stype();
        p.types.push_back(std::move(t));
        continue;
      }
      if (at_kw("proc")) {
        advance();
        p.procs.push_back(proc_decl(sp));
        continue;
      }
      err("expected a 'type' or 'proc' declaration");
    }
    return p;
  }
};

Parser make_parser(const std::string& src) { return Parser{lex(src), 0}; }

}  // namespace

Program parse_program(const std::string& src, const std::string& file) {
  Parser p = make_parser(src);
  return p.program(file);
}

Signature load_signature(const Program& p) {
  Signature sig;
  sig.file = p.file;
  for (const auto& t : p.types) {
    if (!sig.type_defs.emplace(t.name, t).second)
      fail(errc::duplicate_name, "type '" + t.name + "' is defined twice",
           t.span);
    sig.type_order.push_back(t.name);
  }
  for (const auto& d : p.procs) {
    if (!sig.proc_defs.emplace(d.name, d).second)
      fail(errc::duplicate_name, "process '" + d.name + "' is defined twice",
           d.span);
    sig.proc_order.push_back(d.name);
  }
  try {
    if (auto bad = find_noncontractive(sig))
      fail(errc::contractiveness,
           "type '" + *bad + "' never reaches a structural constructor",
           sig.find_type(*bad)->span);
  } catch (const CoreError& e) {
    fail(e.code == "unknown-type-name" ? errc::unknown_name
                                       : errc::contractiveness,
         e.message, e.span);
  }
  return sig;
}

Signature load_signature_src(const std::string& src, const std::string& file) {
  return load_signature(parse_program(src, file));
}

STypePtr parse_stype_string(const std::string& src) {
  Parser p = make_parser(src);
  STypePtr t = p.stype();
  p.expect(Tok::End, "end of input");
  return t;
}

FTypePtr parse_ftype_string(const std::string& src) {
  Parser p = make_parser(src);
  FTypePtr t = p.ftype();
  p.expect(Tok::End, "end of input");
  return t;
}

ExprPtr parse_expr_string(const std::string& src) {
  Parser p = make_parser(src);
  ExprPtr e = p.expr();
  p.expect(Tok::End, "end of input");
  return e;
}

ProcPtr parse_proc_string(const std::string& src) {
  Parser p = make_parser(src);
  ProcPtr q = p.proc();
  p.expect(Tok::End, "end of input");
  return q;
}

}  // namespace nom
