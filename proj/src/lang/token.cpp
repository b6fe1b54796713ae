#include "occakit/lang/token.hpp"

#include <cctype>

#include "occakit/lang/diagnostic.hpp"

namespace occakit::lang {

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::IntegerLiteral: return "integer-literal";
    case TokenKind::FloatLiteral: return "float-literal";
    case TokenKind::Punctuation: return "punctuation";
    case TokenKind::Operator: return "operator";
    case TokenKind::StringLiteral: return "string-literal";
  }
  return "?";
}

namespace {

bool is_type_name(const Token& t) {
  return t.kind == TokenKind::Identifier &&
         (t.lexeme == "int" || t.lexeme == "float" || t.lexeme == "double" ||
          t.lexeme == "void");
}

// Tokens after which a `-`/`!`/`*` can only be a prefix operator.
bool ends_operand(const Token& t) {
  switch (t.kind) {
    case TokenKind::Identifier:
    case TokenKind::Keyword:
    case TokenKind::IntegerLiteral:
    case TokenKind::FloatLiteral:
    case TokenKind::StringLiteral:
      return !is_type_name(t) && t.lexeme != "return";
    case TokenKind::Punctuation:
      return t.lexeme == ")" || t.lexeme == "]";
    case TokenKind::Operator:
      return t.lexeme == "++" || t.lexeme == "--";
  }
  return false;
}

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Adjacent characters that would lex differently without a separating space.
bool would_merge(char left, char right) {
  if (word_char(left) && word_char(right)) return true;
  static constexpr std::string_view kJoinable[] = {"++", "--", "+=", "-=", "*=", "/=", "%=",
                                                   "<=", ">=", "==", "!=", "&&", "||", "<<",
                                                   ">>", "//", "/*"};
  const char pair[2] = {left, right};
  for (auto op : kJoinable) {
    if (op == std::string_view(pair, 2)) return true;
  }
  return false;
}

}  // namespace

std::string print_tokens(const std::vector<Token>& tokens) {
  std::string out;
  int depth = 0;
  int parens = 0;
  int angle = 0;  // inside occaPrivateClass<...>
  bool line_start = true;
  bool tight_next = false;

  auto newline = [&] {
    out += '\n';
    line_start = true;
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    const Token* prev = i > 0 ? &tokens[i - 1] : nullptr;

    if (t.is_punct("}")) {
      if (!line_start) newline();
      depth = depth > 0 ? depth - 1 : 0;
    }

    if (line_start) {
      out.append(static_cast<std::size_t>(depth) * 2, ' ');
    } else {
      bool space = !tight_next;
      if (t.kind == TokenKind::Punctuation &&
          (t.lexeme == ")" || t.lexeme == "]" || t.lexeme == "," || t.lexeme == ";" ||
           t.lexeme == ".")) {
        space = false;
      }
      if (prev != nullptr && (prev->is_punct("(") || prev->is_punct("[") || prev->is_punct("."))) {
        space = false;
      }
      if ((t.is_punct("(") || t.is_punct("[")) && prev != nullptr &&
          (prev->kind == TokenKind::Identifier || prev->kind == TokenKind::Keyword ||
           prev->is_punct("]") || prev->is_punct(")"))) {
        space = t.is_punct("(") && prev->is_punct(")");
      }
      if ((t.is_op("++") || t.is_op("--")) && prev != nullptr && ends_operand(*prev)) space = false;
      if (angle > 0 || (t.is_op("<") && prev != nullptr && prev->lexeme == "occaPrivateClass")) {
        space = false;
      }
      if (angle > 0 && t.is_op(">")) space = false;
      if (!space && !out.empty() && !t.lexeme.empty() && would_merge(out.back(), t.lexeme.front())) {
        space = true;
      }
      if (space) out += ' ';
    }
    tight_next = false;

    out += t.lexeme;
    line_start = false;

    if (t.is_op("<") && prev != nullptr && prev->lexeme == "occaPrivateClass") ++angle;
    if (angle > 0 && t.is_op(">")) --angle;

    const bool prefix = prev == nullptr || !ends_operand(*prev);
    if ((t.is_op("-") || t.is_op("!") || t.is_op("+") || t.is_op("++") || t.is_op("--")) &&
        prefix) {
      tight_next = true;
    }
    if (t.is_op("*") && prev != nullptr && is_type_name(*prev)) tight_next = true;

    if (t.is_punct("(")) ++parens;
    if (t.is_punct(")")) {
      parens = parens > 0 ? parens - 1 : 0;
      if (parens == 0 && i >= 3 && tokens[i - 3].lexeme == "_Pragma") newline();
    }
    if (t.is_punct("{")) {
      ++depth;
      newline();
    } else if (t.is_punct("}")) {
      newline();
    } else if (t.is_punct(";") && parens == 0) {
      newline();
    }
  }
  if (!line_start) out += '\n';
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  auto word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '"' || c == '\'';
  };
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty() && word(out.back()) && word(c)) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string format_diagnostic(const Diagnostic& d, std::string_view file) {
  std::string out(file);
  out += ':' + std::to_string(d.pos.line) + ':' + std::to_string(d.pos.col) + ": ";
  out += d.severity == Severity::Error ? "error" : "warning";
  out += '[' + d.code + "]: " + d.message;
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) {
    if (d.severity == Severity::Error) return true;
  }
  return false;
}

}  // namespace occakit::lang
