#include "nom/pretty.hpp"

#include <string>

namespace nom {

namespace {

std::string ind(int n) { return std::string(static_cast<std::size_t>(n), ' '); }

bool ftype_atomic(const FTypePtr& t) {
  switch (t->k) {
    case FType::K::Arrow:
    case FType::K::Sum:
    case FType::K::Prod: return false;
    default: return true;
  }
}

bool stype_atomic(const STypePtr& t) {
  switch (t->k) {
    case SType::K::Plus:
    case SType::K::With:
    case SType::K::One:
    case SType::K::Named: return true;
    default: return false;
  }
}

std::string ftype_atom_str(const FTypePtr& t) {
  if (ftype_atomic(t)) return pretty(t);
  return "(" + pretty(t) + ")";
}

std::string stype_atom_str(const STypePtr& t) {
  if (stype_atomic(t)) return pretty(t);
  return "(" + pretty(t) + ")";
}

bool expr_atomic(const ExprPtr& e) {
  switch (e->k) {
    case Expr::K::Var:
    case Expr::K::IntLit:
    case Expr::K::BoolLit:
    case Expr::K::Nil: return true;
    default: return false;
  }
}

// Atom-or-parenthesized form, suitable for application arguments, call
// arguments, and case/match subjects.
std::string pexpr(const ExprPtr& e) {
  std::string s = pretty(e);
  if (expr_atomic(e)) return s;
  // Compound expressions already render inside their own parentheses.
  if (!s.empty() && s.front() == '(') return s;
  return "(" + s + ")";
}

}  // namespace

std::string pretty(const Pot& q) {
  switch (q.kind) {
    case PotKind::Const: return std::to_string(q.value);
    case PotKind::Star:
    case PotKind::Var: return "*";
  }
  return "0";
}

std::string mode_bracket(Mode m) {
  if (!m.concrete()) return "";
  return std::string("[") + mode_name(m) + "]";
}

std::string pretty_chan(const ChanRef& c) {
  const char* sigil = (c.mode == Mode::S()) ? "#" : "$";
  return sigil + c.name + mode_bracket(c.mode);
}

std::string pretty(const FTypePtr& t) {
  switch (t->k) {
    case FType::K::Int: return "int";
    case FType::K::Bool: return "bool";
    case FType::K::Arrow: {
      std::string a = ftype_atomic(t->a) && t->a->k != FType::K::Arrow
                          ? pretty(t->a)
                          : "(" + pretty(t->a) + ")";
      return a + " -> " + pretty(t->b);
    }
    case FType::K::Sum: return ftype_atom_str(t->a) + " + " + ftype_atom_str(t->b);
    case FType::K::Prod: return ftype_atom_str(t->a) + " * " + ftype_atom_str(t->b);
    case FType::K::List:
      return "list " + ftype_atom_str(t->elem) + " {" + pretty(t->elem_pot) + "}";
    case FType::K::Monad: return "{ " + pretty(t->offered) + " }";
    case FType::K::Named: return t->name;
  }
  return "?";
}

std::string pretty(const STypePtr& t) {
  switch (t->k) {
    case SType::K::Plus:
    case SType::K::With: {
      std::string out = t->k == SType::K::Plus ? "+{ " : "&{ ";
      bool first = true;
      for (const auto& [l, a] : t->branches) {
        if (!first) out += ", ";
        first = false;
        out += l + " : " + pretty(a);
      }
      return out + " }";
    }
    case SType::K::Tensor:
      return stype_atom_str(t->carried) + " *" + mode_bracket(t->carried_mode) +
             " " + pretty(t->cont);
    case SType::K::Lolli:
      return stype_atom_str(t->carried) + " -o" + mode_bracket(t->carried_mode) +
             " " + pretty(t->cont);
    case SType::K::One: return "1";
    case SType::K::SendVal:
      return ftype_atom_str(t->vtype) + " ^ " + pretty(t->cont);
    case SType::K::RecvVal:
      return ftype_atom_str(t->vtype) + " -> " + pretty(t->cont);
    case SType::K::Pay: return "|{" + pretty(t->pot) + "}> " + pretty(t->cont);
    case SType::K::Get: return "<{" + pretty(t->pot) + "}| " + pretty(t->cont);
    case SType::K::Up: return "/\\ " + pretty(t->cont);
    case SType::K::Down: return "\\/ " + pretty(t->cont);
    case SType::K::Named: return t->name;
  }
  return "?";
}

std::string pretty(const ExprPtr& e) {
  switch (e->k) {
    case Expr::K::Var: return e->var;
    case Expr::K::IntLit: return std::to_string(e->int_val);
    case Expr::K::BoolLit: return e->bool_val ? "true" : "false";
    case Expr::K::Binop:
      return "(" + pretty(e->e1) + " " + e->op + " " + pretty(e->e2) + ")";
    case Expr::K::Not: return "(not " + pexpr(e->e1) + ")";
    case Expr::K::IfE:
      return "(if " + pretty(e->e1) + " then " + pretty(e->e2) + " else " +
             pretty(e->e3) + ")";
    case Expr::K::LetE:
      return "(let " + e->var + " = " + pretty(e->e1) + " in " + pretty(e->e2) +
             ")";
    case Expr::K::Lambda: {
      std::string a = e->ann ? " : " + pretty(e->ann) : "";
      return "(\\" + e->var + a + ". " + pretty(e->e1) + ")";
    }
    case Expr::K::App: return "(" + pexpr(e->e1) + " " + pexpr(e->e2) + ")";
    case Expr::K::Pair: return "(" + pretty(e->e1) + ", " + pretty(e->e2) + ")";
    case Expr::K::LetPair:
      return "(let (" + e->var + ", " + e->var2 + ") = " + pretty(e->e1) +
             " in " + pretty(e->e2) + ")";
    case Expr::K::Inl: return "(inl " + pexpr(e->e1) + ")";
    case Expr::K::Inr: return "(inr " + pexpr(e->e1) + ")";
    case Expr::K::CaseSum:
      return "(case " + pexpr(e->e1) + " ( inl " + e->var + " => " +
             pretty(e->e2) + " | inr " + e->var2 + " => " + pretty(e->e3) +
             " ))";
    case Expr::K::Nil: return "[]";
    case Expr::K::Cons: return "(" + pretty(e->e1) + " :: " + pretty(e->e2) + ")";
    case Expr::K::MatchList:
      return "(match " + pexpr(e->e1) + " ( nil => " + pretty(e->e2) +
             " | cons " + e->var + " " + e->var2 + " => " + pretty(e->e3) +
             " ))";
    case Expr::K::Tick: return "(tick  ; " + pretty(e->e1) + ")";
    case Expr::K::MonadVal: return "{ " + pretty(e->proc, 0) + " }";
  }
  return "?";
}

std::string pretty(const ProcPtr& p, int indent) {
  std::string pad = ind(indent);
  switch (p->k) {
    case Proc::K::SendLabel:
      return pad + pretty_chan(p->chan) + "." + p->label + " ;\n" +
             pretty(p->cont, indent);
    case Proc::K::Case: {
      std::string out = pad + "case " + pretty_chan(p->chan) + " (";
      bool first = true;
      for (const auto& [l, body] : p->branches) {
        out += first ? " " : pad + "| ";
        first = false;
        out += l + " =>\n" + pretty(body, indent + 4);
        if (!out.empty() && out.back() == '\n') out.pop_back();
        out += "\n";
      }
      out += pad + ")";
      return out + "\n";
    }
    case Proc::K::SendChan:
      return pad + "send " + pretty_chan(p->chan) + " " + pretty_chan(p->chan2) +
             " ;\n" + pretty(p->cont, indent);
    case Proc::K::RecvChan:
      return pad + pretty_chan(p->chan2) + " <- recv " + pretty_chan(p->chan) +
             " ;\n" + pretty(p->cont, indent);
    case Proc::K::SendVal:
      return pad + "send " + pretty_chan(p->chan) + " " + pexpr(p->expr) +
             " ;\n" + pretty(p->cont, indent);
    case Proc::K::RecvVal:
      return pad + p->var + " = recv " + pretty_chan(p->chan) + " ;\n" +
             pretty(p->cont, indent);
    case Proc::K::Close: return pad + "close " + pretty_chan(p->chan) + "\n";
    case Proc::K::Wait:
      return pad + "wait " + pretty_chan(p->chan) + " ;\n" +
             pretty(p->cont, indent);
    case Proc::K::Fwd:
      return pad + pretty_chan(p->chan) + " <- " + pretty_chan(p->chan2) + "\n";
    case Proc::K::Spawn:
    case Proc::K::TailCall: {
      std::string out = pad + pretty_chan(p->chan) + " <- " + p->callee + " <-";
      for (const auto& a : p->val_args) out += " " + pexpr(a);
      for (const auto& c : p->chan_args) out += " " + pretty_chan(c);
      if (p->k == Proc::K::Spawn)
        return out + " ;\n" + pretty(p->cont, indent);
      return out + "\n";
    }
    case Proc::K::Work: {
      std::string ann = p->braced ? " {" + pretty(p->pot) + "}" : " ";
      return pad + "work" + ann + ";\n" + pretty(p->cont, indent);
    }
    case Proc::K::Pay:
    case Proc::K::Get: {
      const char* kw = p->k == Proc::K::Pay ? "pay " : "get ";
      return pad + kw + pretty_chan(p->chan) + " {" + pretty(p->pot) + "};\n" +
             pretty(p->cont, indent);
    }
    case Proc::K::Acquire:
    case Proc::K::Accept: {
      const char* kw = p->k == Proc::K::Acquire ? " <- acquire " : " <- accept ";
      return pad + pretty_chan(p->chan) + kw + pretty_chan(p->chan2) + " ;\n" +
             pretty(p->cont, indent);
    }
    case Proc::K::Release:
    case Proc::K::Detach: {
      const char* kw = p->k == Proc::K::Release ? " <- release " : " <- detach ";
      return pad + pretty_chan(p->chan) + kw + pretty_chan(p->chan2) + " ;\n" +
             pretty(p->cont, indent);
    }
    case Proc::K::LetE:
      return pad + "let " + p->var + " = " + pexpr(p->expr) + " ;\n" +
             pretty(p->cont, indent);
    case Proc::K::IfE:
      return pad + "if " + pexpr(p->expr) + "\n" + pad + "then\n" +
             pretty(p->cont, indent + 4) + pad + "else\n" +
             pretty(p->cont2, indent + 4);
  }
  return pad + "?\n";
}

std::string pretty(const ProcDecl& d) {
  std::string out = "proc ";
  if (d.mode == Mode::R()) out += "asset ";
  else if (d.mode == Mode::S()) out += "contract ";
  else out += "transaction ";
  out += d.name + " : ";
  bool first = true;
  if (d.fun_args.empty() && d.chan_args.empty()) {
    out += ". ";
  } else {
    for (const auto& [x, tau] : d.fun_args) {
      if (!first) out += ", ";
      first = false;
      out += "(" + x + " : " + pretty(tau) + ")";
    }
    for (std::size_t i = 0; i < d.chan_args.size(); ++i) {
      if (!first) out += ", ";
      first = false;
      out += "(" + pretty_chan(d.chan_args[i]) + " : " +
             pretty(d.chan_arg_types[i]) + ")";
    }
    out += " ";
  }
  out += "|{" + pretty(d.potential) + "}- ";
  out += "(" + pretty_chan(d.offered) + " : " + pretty(d.offered_type) + ") = \n";
  out += "  {\n";
  out += pretty(d.body, 4);
  out += "  }\n";
  return out;
}

std::string pretty(const Program& p) {
  std::string out;
  for (const auto& t : p.types)
    out += "type " + t.name + " = " +
           (t.stype ? pretty(t.stype) : pretty(t.ftype)) + "\n";
  for (const auto& d : p.procs) out += pretty(d) + "\n";
  return out;
}

}  // namespace nom
