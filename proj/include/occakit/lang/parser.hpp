#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "occakit/lang/ast.hpp"
#include "occakit/lang/diagnostic.hpp"
#include "occakit/lang/token.hpp"

namespace occakit::lang {

// Every kernel and helper found in one source. Kernels share the helper list.
struct ParsedSource {
  std::vector<std::shared_ptr<const KernelAST>> kernels;
  std::vector<std::shared_ptr<const FunctionDef>> helpers;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
  std::shared_ptr<const KernelAST> find_kernel(std::string_view name) const;
};

// Parsing stops at the first syntax error; the partial result is discarded.
ParsedSource parse_kernel(const TokenStream& tokens);

}  // namespace occakit::lang
