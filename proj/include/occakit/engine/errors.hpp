#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "occakit/lang/diagnostic.hpp"

namespace occakit::engine {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid device, work-size or argument configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Kernel source rejected by the lexer, parser, validator or lowering pass.
class BuildError : public Error {
 public:
  BuildError(std::string message, std::vector<lang::Diagnostic> diagnostics)
      : Error(std::move(message)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<lang::Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<lang::Diagnostic> diagnostics_;
};

// Fault trapped while a kernel runs: out-of-range access, division by zero.
class ExecutionError : public Error {
 public:
  using Error::Error;
};

}  // namespace occakit::engine
