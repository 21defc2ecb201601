#pragma once

#include <functional>
#include <map>
#include <string>

#include "nom/ast.hpp"
#include "nom/rational.hpp"

namespace nom {

// A linear expression over potential variables: sum of coef[v] * x_v plus
// a constant. Used both for threading potential through a process body and
// as the left-hand side of emitted constraints.
struct LinExpr {
  std::map<int, Rat> coef;
  Rat cst;

  static LinExpr constant(Rat c) {
    LinExpr e;
    e.cst = c;
    return e;
  }
  static LinExpr var(int id, Rat c = Rat(1)) {
    LinExpr e;
    e.coef[id] = c;
    return e;
  }

  bool is_constant() const { return coef.empty(); }

  LinExpr& operator+=(const LinExpr& o) {
    for (const auto& [v, c] : o.coef) add_term(v, c);
    cst += o.cst;
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    for (const auto& [v, c] : o.coef) add_term(v, -c);
    cst -= o.cst;
    return *this;
  }
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(const Rat& s, const LinExpr& e) {
    LinExpr r;
    if (s.is_zero()) return r;
    for (const auto& [v, c] : e.coef) r.coef[v] = s * c;
    r.cst = s * e.cst;
    return r;
  }

  void add_term(int v, const Rat& c) {
    auto it = coef.find(v);
    if (it == coef.end()) {
      if (!c.is_zero()) coef[v] = c;
      return;
    }
    it->second += c;
    if (it->second.is_zero()) coef.erase(it);
  }

  friend bool operator==(const LinExpr& a, const LinExpr& b) {
    return a.cst == b.cst && a.coef == b.coef;
  }

  // Render as e.g. "3 + p1 - 2*p4" using the given variable namer.
  std::string render(const std::function<std::string(int)>& name) const {
    std::string out;
    bool first = true;
    if (!cst.is_zero() || coef.empty()) {
      out += cst.str();
      first = false;
    }
    for (const auto& [v, c] : coef) {
      Rat a = c;
      if (first) {
        if (a.sign() < 0) {
          out += "-";
          a = -a;
        }
        first = false;
      } else {
        out += a.sign() < 0 ? " - " : " + ";
        if (a.sign() < 0) a = -a;
      }
      if (!(a == Rat(1))) out += a.str() + "*";
      out += name(v);
    }
    return out;
  }
};

// One constraint produced by checking: expr == 0 or expr >= 0, together
// with the rule that generated it and the source position it came from.
struct Constraint {
  enum class K : unsigned char { Eq, Geq };
  K k;
  LinExpr e;
  std::string rule;
  Span span;
};

}  // namespace nom
