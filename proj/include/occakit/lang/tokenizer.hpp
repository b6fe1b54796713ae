#pragma once

#include <string_view>
#include <vector>

#include "occakit/lang/defines.hpp"
#include "occakit/lang/diagnostic.hpp"
#include "occakit/lang/token.hpp"

namespace occakit::lang {

struct LexResult {
  TokenStream stream;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
};

// Strips comments, substitutes defines (one pass, substituted tokens are not
// rescanned) and classifies occa keywords. Lexing stops at the first
// lexical error.
LexResult tokenize(std::string_view source, const DefineSet& defines = {});

// Lexes expansion-table text. Accepts string literals, never substitutes and
// never reports unknown occa-prefixed names. Throws std::logic_error on
// malformed input since table text is a compile-time constant.
std::vector<Token> lex_fragment(std::string_view text);

}  // namespace occakit::lang
