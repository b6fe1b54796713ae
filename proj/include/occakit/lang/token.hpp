#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace occakit::lang {

struct SourcePos {
  int line = 1;
  int col = 1;

  friend bool operator==(const SourcePos&, const SourcePos&) = default;
  friend auto operator<=>(const SourcePos&, const SourcePos&) = default;
};

enum class TokenKind {
  Keyword,
  Identifier,
  IntegerLiteral,
  FloatLiteral,
  Punctuation,
  Operator,
  // Only produced when lexing expansion-table text (e.g. `extern "C"`);
  // kernel sources reject string literals.
  StringLiteral,
};

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::Identifier;
  std::string lexeme;
  SourcePos pos;
  // Set on tokens created by keyword expansion rather than copied from the
  // input stream.
  bool synthetic = false;

  bool is(TokenKind k, std::string_view text) const { return kind == k && lexeme == text; }
  bool is_punct(std::string_view text) const { return is(TokenKind::Punctuation, text); }
  bool is_op(std::string_view text) const { return is(TokenKind::Operator, text); }
  bool is_ident(std::string_view text) const { return is(TokenKind::Identifier, text); }
  bool is_keyword(std::string_view text) const { return is(TokenKind::Keyword, text); }
};

struct TokenStream {
  std::vector<Token> tokens;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
};

// Re-serializes tokens as C-like text. Layout: single spaces between tokens
// (tightened around brackets, member access and unary operators), a newline
// after `{`, `}` and `;` outside parentheses, two-space indentation per brace
// level. Output is deterministic for a given token sequence.
std::string print_tokens(const std::vector<Token>& tokens);

// Collapses whitespace for layout-insensitive comparison: whitespace is kept
// (as one space) only where it separates two word characters.
std::string normalize_whitespace(std::string_view text);

}  // namespace occakit::lang
