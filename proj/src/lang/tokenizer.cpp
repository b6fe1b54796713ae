#include "occakit/lang/tokenizer.hpp"

#include <array>
#include <cctype>
#include <stdexcept>
#include <string>

#include "occakit/lang/keywords.hpp"

namespace occakit::lang {
namespace {

constexpr std::array<std::string_view, 15> kTwoCharOps = {
    "++", "--", "+=", "-=", "*=", "/=", "%=", "<=", ">=", "==", "!=", "&&", "||", "<<", ">>"};
constexpr std::string_view kOneCharOps = "+-*/%=<>!&|^~?:";
constexpr std::string_view kPunct = "(){}[],;.";

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

class Lexer {
 public:
  enum class Mode { Kernel, Fragment };

  Lexer(std::string_view src, const DefineSet* defines, Mode mode)
      : src_(src), defines_(defines), mode_(mode) {}

  LexResult run() {
    LexResult out;
    while (true) {
      skip_space_and_comments(out);
      if (failed_ || at_end()) break;
      lex_one(out);
      if (failed_) break;
    }
    return out;
  }

 private:
  bool at_end() const { return i_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0';
  }

  void advance() {
    if (src_[i_] == '\n') {
      ++pos_.line;
      pos_.col = 1;
    } else {
      ++pos_.col;
    }
    ++i_;
  }

  void fail(LexResult& out, SourcePos at, std::string code, std::string msg) {
    out.diagnostics.push_back({Severity::Error, std::move(code), std::move(msg), at});
    failed_ = true;
  }

  void skip_space_and_comments(LexResult& out) {
    while (!at_end()) {
      const char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        const SourcePos start = pos_;
        advance();
        advance();
        bool closed = false;
        while (!at_end()) {
          if (peek() == '*' && peek(1) == '/') {
            advance();
            advance();
            closed = true;
            break;
          }
          advance();
        }
        if (!closed) return fail(out, start, "L1", "unterminated comment");
      } else {
        return;
      }
    }
  }

  void push(LexResult& out, TokenKind kind, std::size_t begin, SourcePos at) {
    out.stream.tokens.push_back({kind, std::string(src_.substr(begin, i_ - begin)), at});
  }

  void lex_one(LexResult& out) {
    const SourcePos at = pos_;
    const std::size_t begin = i_;
    const char c = peek();

    if (is_ident_start(c)) {
      while (!at_end() && is_ident_char(peek())) advance();
      return identifier(out, src_.substr(begin, i_ - begin), at);
    }
    if (is_digit(c) || (c == '.' && is_digit(peek(1)))) return number(out, begin, at);
    if (c == '"' || c == '\'') return quoted(out, begin, at);
    if (c == '#') {
      return fail(out, at, "L1", "preprocessor directives are not supported");
    }
    for (auto op : kTwoCharOps) {
      if (c == op[0] && peek(1) == op[1]) {
        advance();
        advance();
        return push(out, TokenKind::Operator, begin, at);
      }
    }
    if (kOneCharOps.find(c) != std::string_view::npos) {
      advance();
      return push(out, TokenKind::Operator, begin, at);
    }
    if (kPunct.find(c) != std::string_view::npos) {
      advance();
      return push(out, TokenKind::Punctuation, begin, at);
    }
    fail(out, at, "L1", std::string("unexpected character '") + c + "'");
  }

  void identifier(LexResult& out, std::string_view name, SourcePos at) {
    if (mode_ == Mode::Kernel && defines_ != nullptr) {
      if (const auto* def = defines_->find(name)) {
        for (Token t : def->replacement) {
          t.pos = at;
          out.stream.tokens.push_back(std::move(t));
        }
        return;
      }
    }
    if (is_keyword(name)) {
      out.stream.tokens.push_back({TokenKind::Keyword, std::string(name), at});
      return;
    }
    if (mode_ == Mode::Kernel && is_occa_prefixed(name)) {
      return fail(out, at, "L2", "unknown occa keyword '" + std::string(name) + "'");
    }
    out.stream.tokens.push_back({TokenKind::Identifier, std::string(name), at});
  }

  void number(LexResult& out, std::size_t begin, SourcePos at) {
    bool is_float = false;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      advance();
      advance();
      if (!std::isxdigit(static_cast<unsigned char>(peek()))) {
        return fail(out, at, "L1", "malformed hexadecimal literal");
      }
      while (std::isxdigit(static_cast<unsigned char>(peek()))) advance();
    } else {
      while (is_digit(peek())) advance();
      if (peek() == '.') {
        is_float = true;
        advance();
        while (is_digit(peek())) advance();
      }
      if (peek() == 'e' || peek() == 'E') {
        is_float = true;
        advance();
        if (peek() == '+' || peek() == '-') advance();
        if (!is_digit(peek())) return fail(out, at, "L1", "malformed exponent in numeric literal");
        while (is_digit(peek())) advance();
      }
      if (is_float && (peek() == 'f' || peek() == 'F')) advance();
    }
    if (is_ident_char(peek())) return fail(out, at, "L1", "malformed numeric literal");
    push(out, is_float ? TokenKind::FloatLiteral : TokenKind::IntegerLiteral, begin, at);
  }

  void quoted(LexResult& out, std::size_t begin, SourcePos at) {
    const char quote = peek();
    advance();
    while (!at_end() && peek() != quote && peek() != '\n') {
      if (peek() == '\\' && i_ + 1 < src_.size()) advance();
      advance();
    }
    if (at_end() || peek() != quote) return fail(out, at, "L1", "unterminated literal");
    advance();
    push(out, TokenKind::StringLiteral, begin, at);
  }

  std::string_view src_;
  const DefineSet* defines_;
  Mode mode_;
  std::size_t i_ = 0;
  SourcePos pos_;
  bool failed_ = false;
};

}  // namespace

LexResult tokenize(std::string_view source, const DefineSet& defines) {
  return Lexer(source, &defines, Lexer::Mode::Kernel).run();
}

std::vector<Token> lex_fragment(std::string_view text) {
  auto result = Lexer(text, nullptr, Lexer::Mode::Fragment).run();
  if (!result.ok()) {
    throw std::logic_error("malformed fragment '" + std::string(text) +
                           "': " + result.diagnostics.front().message);
  }
  return std::move(result.stream.tokens);
}

}  // namespace occakit::lang
