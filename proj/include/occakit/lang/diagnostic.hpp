#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "occakit/lang/token.hpp"

namespace occakit::lang {

enum class Severity { Error, Warning };

// Codes in use:
//   L1 lexical error, L2 unknown occa keyword, P1 syntax error,
//   P2 non-literal array size, K0 no kernel found,
//   V1..V6 work-group scoping rules, N1 loop-nest ordering,
//   S1 undeclared name, S2 redeclaration, S3 bad call, S4 misplaced return,
//   T1 type error (engine lowering), W1 degenerate outer axis 2.
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  SourcePos pos;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

// `file:line:col: severity[code]: message`
std::string format_diagnostic(const Diagnostic& d, std::string_view file);

bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace occakit::lang
