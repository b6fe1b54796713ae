#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace occakit::cli {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

struct TranslateOptions {
  std::string file;
  std::string backend;
  std::vector<std::string> defines;  // NAME=VALUE
  std::string output;                // file, or directory for <stem><suffix>; empty = stdout
};

struct CheckOptions {
  std::string file;
  std::vector<std::string> defines;
};

struct RunOptions {
  std::string file;
  std::string kernel;
  std::vector<std::size_t> global;
  std::vector<std::size_t> local;
  std::vector<std::string> buffers;  // name=zeros:TYPE:N | name=range:TYPE:N | name=file:PATH:TYPE
  std::vector<std::string> scalars;  // name=TYPE:VALUE
  int threads = 1;
  std::string dump;  // directory receiving <buffer>.bin
  std::vector<std::string> defines;
};

struct BenchOptions {
  int width = 256;
  int height = 256;
  int radius = 3;
  int steps = 100;
  std::vector<int> threads{1};
  std::string csv;  // appended to; header written when the file is new or empty
};

int cmd_translate(const TranslateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_check(const CheckOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

// Parses `args` (without the program name) and dispatches to a subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace occakit::cli
