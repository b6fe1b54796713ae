#pragma once

#include <string>
#include <vector>

#include "occakit/lang/defines.hpp"
#include "occakit/lang/token.hpp"
#include "occakit/translate/backend.hpp"

namespace occakit::translate {

// Replaces every keyword by its table entry, re-expanding keywords that the
// entry itself mentions (a keyword is never re-expanded inside its own
// replacement, so OpenMP's pass-through ids stay plain identifiers).
// Multi-term id and size expressions are parenthesized so they keep their
// meaning inside larger expressions. Tokens produced by expansion, including
// arguments consumed by function-like keywords, are marked synthetic.
//
// Throws std::logic_error on a keyword without a table entry or a malformed
// function-like keyword invocation.
std::vector<lang::Token> expand(const lang::TokenStream& tokens, Backend backend);

struct EmittedUnit {
  Backend backend = Backend::OpenMP;
  std::string defines;   // one `#define NAME VALUE` line per define, in order
  std::string preamble;  // OpenMP/Serial: occaPrivateClass; GPU: empty
  std::string kernel;    // expanded kernel text

  std::string text() const;
};

// OpenMP/Serial kernels additionally declare occaInnerId0..2 and
// occaOuterId0..2 right after their opening brace.
EmittedUnit emit_kernel_unit(const lang::TokenStream& tokens, Backend backend,
                             const lang::DefineSet& defines);

}  // namespace occakit::translate
