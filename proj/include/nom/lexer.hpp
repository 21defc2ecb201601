#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nom/ast.hpp"

namespace nom {

// Token kinds. Fixed symbols are lexed longest-match-first; identifiers
// carry their text and the parser decides which ones are keywords.
enum class Tok : std::uint8_t {
  Ident,       // name, keyword, mode letter
  IntLit,      // nonnegative integer
  ChanLin,     // $name
  ChanShared,  // #name
  // multi-char symbols
  GetOpen,     // <{
  GetClose,    // }|
  PayOpen,     // |{
  PayClose,    // }>
  TurnClose,   // }-
  Turnstile,   // |-
  GetBare,     // <|
  PayBare,     // |>
  Up,          // /\ .
  Down,        // \/
  Lolli,       // -o
  LArrow,      // <-
  RArrow,      // ->
  FatArrow,    // =>
  Le,          // <=
  Ge,          // >=
  Ne,          // <>
  AndAnd,      // &&
  OrOr,        // ||
  ColonColon,  // ::
  // single-char symbols
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Dot,
  Comma,
  Colon,
  Semi,
  Eq,
  Lt,
  Gt,
  Plus,
  Minus,
  Star,
  Caret,
  Backslash,
  Pipe,
  Amp,
  End,  // end of input
};

struct Token {
  Tok kind;
  std::string text;  // Ident/ChanLin/ChanShared name, or digits for IntLit
  long long value = 0;
  Span span;
};

// Lexes the whole input. `%` starts a line comment; `(*` ... `*)` is a
// nestable block comment. Throws CheckFailure(parse-error) on bad input.
std::vector<Token> lex(const std::string& src);

// Human-readable token name for diagnostics.
std::string tok_name(Tok t);

}  // namespace nom
