#include "nom/lexer.hpp"

#include <cctype>

#include "nom/errors.hpp"

namespace nom {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Cursor {
  const std::string& s;
  std::size_t i = 0;
  int line = 1;
  int col = 1;

  bool done() const { return i >= s.size(); }
  char peek(std::size_t k = 0) const { return i + k < s.size() ? s[i + k] : '\0'; }
  char bump() {
    char c = s[i++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }
  Span span() const { return Span{line, col}; }
};

}  // namespace

std::vector<Token> lex(const std::string& src) {
  Cursor c{src};
  std::vector<Token> out;

  auto push = [&](Tok k, Span sp, std::string text = "", long long v = 0) {
    out.push_back(Token{k, std::move(text), v, sp});
  };

  while (!c.done()) {
    char ch = c.peek();
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      c.bump();
      continue;
    }
    Span sp = c.span();
    // Comments.
    if (ch == '%') {
      while (!c.done() && c.peek() != '\n') c.bump();
      continue;
    }
    if (ch == '(' && c.peek(1) == '*') {
      c.bump();
      c.bump();
      int depth = 1;
      while (depth > 0) {
        if (c.done()) fail(errc::parse_error, "unterminated block comment", sp);
        if (c.peek() == '(' && c.peek(1) == '*') {
          c.bump();
          c.bump();
          ++depth;
        } else if (c.peek() == '*' && c.peek(1) == ')') {
          c.bump();
          c.bump();
          --depth;
        } else {
          c.bump();
        }
      }
      continue;
    }
    // Channel references.
    if (ch == '$' || ch == '#') {
      c.bump();
      if (!ident_start(c.peek()))
        fail(errc::parse_error, std::string("expected channel name after '") + ch + "'", sp);
      std::string name;
      while (ident_char(c.peek())) name += c.bump();
      push(ch == '$' ? Tok::ChanLin : Tok::ChanShared, sp, std::move(name));
      continue;
    }
    // Numbers.
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::string digits;
      while (std::isdigit(static_cast<unsigned char>(c.peek()))) digits += c.bump();
      long long v = 0;
      try {
        v = std::stoll(digits);
      } catch (const std::exception&) {
        fail(errc::parse_error, "integer literal out of range: " + digits, sp);
      }
      push(Tok::IntLit, sp, std::move(digits), v);
      continue;
    }
    // Identifiers / keywords / mode letters.
    if (ident_start(ch)) {
      std::string name;
      while (ident_char(c.peek())) name += c.bump();
      push(Tok::Ident, sp, std::move(name));
      continue;
    }
    // Fixed symbols, longest match first.
    auto two = [&](char a, char b) { return ch == a && c.peek(1) == b; };
    if (two('<', '{')) { c.bump(); c.bump(); push(Tok::GetOpen, sp); continue; }
    if (two('}', '|')) { c.bump(); c.bump(); push(Tok::GetClose, sp); continue; }
    if (two('|', '{')) { c.bump(); c.bump(); push(Tok::PayOpen, sp); continue; }
    if (two('}', '>')) { c.bump(); c.bump(); push(Tok::PayClose, sp); continue; }
    if (two('}', '-')) { c.bump(); c.bump(); push(Tok::TurnClose, sp); continue; }
    if (two('|', '-')) { c.bump(); c.bump(); push(Tok::Turnstile, sp); continue; }
    if (two('<', '|')) { c.bump(); c.bump(); push(Tok::GetBare, sp); continue; }
    if (two('|', '>')) { c.bump(); c.bump(); push(Tok::PayBare, sp); continue; }
    if (two('/', '\\')) { c.bump(); c.bump(); push(Tok::Up, sp); continue; }
    if (two('\\', '/')) { c.bump(); c.bump(); push(Tok::Down, sp); continue; }
    if (two('-', 'o')) { c.bump(); c.bump(); push(Tok::Lolli, sp); continue; }
    if (two('<', '-')) { c.bump(); c.bump(); push(Tok::LArrow, sp); continue; }
    if (two('-', '>')) { c.bump(); c.bump(); push(Tok::RArrow, sp); continue; }
    if (two('=', '>')) { c.bump(); c.bump(); push(Tok::FatArrow, sp); continue; }
    if (two('<', '=')) { c.bump(); c.bump(); push(Tok::Le, sp); continue; }
    if (two('>', '=')) { c.bump(); c.bump(); push(Tok::Ge, sp); continue; }
    if (two('<', '>')) { c.bump(); c.bump(); push(Tok::Ne, sp); continue; }
    if (two('&', '&')) { c.bump(); c.bump(); push(Tok::AndAnd, sp); continue; }
    if (two('|', '|')) { c.bump(); c.bump(); push(Tok::OrOr, sp); continue; }
    if (two(':', ':')) { c.bump(); c.bump(); push(Tok::ColonColon, sp); continue; }
    Tok k;
    switch (ch) {
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case '[': k = Tok::LBracket; break;
      case ']': k = Tok::RBracket; break;
      case '.': k = Tok::Dot; break;
      case ',': k = Tok::Comma; break;
      case ':': k = Tok::Colon; break;
      case ';': k = Tok::Semi; break;
      case '=': k = Tok::Eq; break;
      case '<': k = Tok::Lt; break;
      case '>': k = Tok::Gt; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '^': k = Tok::Caret; break;
      case '\\': k = Tok::Backslash; break;
      case '|': k = Tok::Pipe; break;
      case '&': k = Tok::Amp; break;
      default:
        fail(errc::parse_error, std::string("unexpected character '") + ch + "'", sp);
    }
    c.bump();
    push(k, sp);
  }
  out.push_back(Token{Tok::End, "", 0, c.span()});
  return out;
}

std::string tok_name(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::IntLit: return "integer";
    case Tok::ChanLin: return "'$' channel";
    case Tok::ChanShared: return "'#' channel";
    case Tok::GetOpen: return "'<{'";
    case Tok::GetClose: return "'}|'";
    case Tok::PayOpen: return "'|{'";
    case Tok::PayClose: return "'}>'";
    case Tok::TurnClose: return "'}-'";
    case Tok::Turnstile: return "'|-'";
    case Tok::GetBare: return "'<|'";
    case Tok::PayBare: return "'|>'";
    case Tok::Up: return "'/\\'";
    case Tok::Down: return "'\\/'";
    case Tok::Lolli: return "'-o'";
    case Tok::LArrow: return "'<-'";
    case Tok::RArrow: return "'->'";
    case Tok::FatArrow: return "'=>'";
    case Tok::Le: return "'<='";
    case Tok::Ge: return "'>='";
    case Tok::Ne: return "'<>'";
    case Tok::AndAnd: return "'&&'";
    case Tok::OrOr: return "'||'";
    case Tok::ColonColon: return "'::'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Dot: return "'.'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Semi: return "';'";
    case Tok::Eq: return "'='";
    case Tok::Lt: return "'<'";
    case Tok::Gt: return "'>'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Caret: return "'^'";
    case Tok::Backslash: return "'\\'";
    case Tok::Pipe: return "'|'";
    case Tok::Amp: return "'&'";
    case Tok::End: return "end of input";
  }
  return "?";
}

}  // namespace nom
