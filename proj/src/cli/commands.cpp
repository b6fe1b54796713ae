#include "occakit/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "occakit/apps/fd.hpp"
#include "occakit/engine/device.hpp"
#include "occakit/engine/errors.hpp"
#include "occakit/lang/parser.hpp"
#include "occakit/lang/tokenizer.hpp"
#include "occakit/lang/validate.hpp"
#include "occakit/translate/emit.hpp"

namespace occakit::cli {

namespace fs = std::filesystem;

namespace {

// Raised for bad flags or flag values; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || s.empty()) return std::nullopt;
  return v;
}

lang::DefineSet parse_defines(const std::vector<std::string>& specs) {
  lang::DefineSet defs;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("define '" + spec + "' must have the form NAME=VALUE");
    }
    const std::string name = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    try {
      if (auto i = parse_number<std::int64_t>(value)) {
        defs.add(name, *i);
      } else if (auto d = parse_number<double>(value)) {
        defs.add(name, *d);
      } else {
        defs.add_text(name, value);
      }
    } catch (const std::invalid_argument& e) {
      throw UsageError("bad define '" + spec + "': " + e.what());
    }
  }
  return defs;
}

void print_diagnostics(const std::vector<lang::Diagnostic>& diags, const std::string& file,
                       std::ostream& err) {
  for (const auto& d : diags) err << lang::format_diagnostic(d, file) << '\n';
}

struct Checked {
  lang::LexResult lexed;
  lang::ParsedSource parsed;
  std::vector<lang::Diagnostic> diagnostics;
  bool ok = false;
};

// Lex, parse and validate every kernel in the file.
Checked check_source(const std::string& source, const lang::DefineSet& defines) {
  Checked c;
  c.lexed = lang::tokenize(source, defines);
  if (!c.lexed.ok()) {
    c.diagnostics = c.lexed.diagnostics;
    return c;
  }
  c.parsed = lang::parse_kernel(c.lexed.stream);
  c.diagnostics = c.parsed.diagnostics;
  if (!c.parsed.ok()) return c;
  if (c.parsed.kernels.empty()) {
    c.diagnostics.push_back({lang::Severity::Error, "K0", "no kernel found", {1, 1}});
    return c;
  }
  for (const auto& k : c.parsed.kernels) {
    auto d = lang::validate(*k);
    c.diagnostics.insert(c.diagnostics.end(), d.begin(), d.end());
  }
  c.ok = !lang::has_errors(c.diagnostics);
  return c;
}

engine::ElemType parse_elem_type(const std::string& s) {
  if (s == "i32") return engine::ElemType::Int32;
  if (s == "f32") return engine::ElemType::Float32;
  if (s == "f64") return engine::ElemType::Float64;
  throw UsageError("unknown element type '" + s + "' (expected i32, f32 or f64)");
}

std::size_t parse_count(const std::string& s, const std::string& spec) {
  auto n = parse_number<std::size_t>(s);
  if (!n || *n == 0) throw UsageError("bad element count in '" + spec + "'");
  return *n;
}

engine::Buffer make_range(engine::Device& dev, engine::ElemType t, std::size_t n) {
  switch (t) {
    case engine::ElemType::Int32: {
      std::vector<std::int32_t> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::int32_t>(i);
      return dev.create_buffer(v);
    }
    case engine::ElemType::Float32: {
      std::vector<float> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(i);
      return dev.create_buffer(v);
    }
    case engine::ElemType::Float64: {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
      return dev.create_buffer(v);
    }
  }
  throw UsageError("unsupported element type");
}

template <class T>
engine::Buffer buffer_from_bytes(engine::Device& dev, const std::string& bytes) {
  std::vector<T> v(bytes.size() / sizeof(T));
  std::memcpy(v.data(), bytes.data(), v.size() * sizeof(T));
  return dev.create_buffer(v);
}

std::pair<std::string, engine::Buffer> parse_buffer(engine::Device& dev, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("buffer '" + spec + "' needs NAME=...");
  const std::string name = spec.substr(0, eq);
  const std::string rest = spec.substr(eq + 1);
  const auto colon = rest.find(':');
  const std::string kind = rest.substr(0, colon);
  if (colon == std::string::npos) throw UsageError("bad buffer spec '" + spec + "'");
  const std::string args = rest.substr(colon + 1);
  if (kind == "zeros" || kind == "range") {
    const auto c = args.find(':');
    if (c == std::string::npos) throw UsageError("bad buffer spec '" + spec + "'");
    const auto type = parse_elem_type(args.substr(0, c));
    const auto n = parse_count(args.substr(c + 1), spec);
    return {name, kind == "zeros" ? dev.create_buffer(type, n) : make_range(dev, type, n)};
  }
  if (kind == "file") {
    const auto c = args.rfind(':');
    if (c == std::string::npos) throw UsageError("bad buffer spec '" + spec + "'");
    const std::string path = args.substr(0, c);
    const auto type = parse_elem_type(args.substr(c + 1));
    const std::string bytes = read_source(path);
    const auto size = engine::element_size(type);
    if (bytes.empty() || bytes.size() % size != 0) {
      throw UsageError("'" + path + "' does not hold a whole number of " +
                       std::string(engine::to_string(type)) + " elements");
    }
    switch (type) {
      case engine::ElemType::Int32: return {name, buffer_from_bytes<std::int32_t>(dev, bytes)};
      case engine::ElemType::Float32: return {name, buffer_from_bytes<float>(dev, bytes)};
      case engine::ElemType::Float64: return {name, buffer_from_bytes<double>(dev, bytes)};
    }
  }
  throw UsageError("unknown buffer kind '" + kind + "' in '" + spec + "'");
}

std::pair<std::string, engine::KernelArg> parse_scalar(const std::string& spec) {
  const auto eq = spec.find('=');
  const auto colon = spec.find(':', eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || eq == 0 || colon == std::string::npos) {
    throw UsageError("scalar '" + spec + "' must have the form NAME=TYPE:VALUE");
  }
  const std::string name = spec.substr(0, eq);
  const auto type = parse_elem_type(spec.substr(eq + 1, colon - eq - 1));
  const std::string value = spec.substr(colon + 1);
  switch (type) {
    case engine::ElemType::Int32:
      if (auto v = parse_number<std::int32_t>(value)) return {name, *v};
      break;
    case engine::ElemType::Float32:
      if (auto v = parse_number<float>(value)) return {name, *v};
      break;
    case engine::ElemType::Float64:
      if (auto v = parse_number<double>(value)) return {name, *v};
      break;
  }
  throw UsageError("bad value in scalar '" + spec + "'");
}

}  // namespace

int cmd_translate(const TranslateOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto backend = translate::parse_backend(opts.backend);
    if (!backend) {
      throw UsageError("unknown backend '" + opts.backend +
                       "' (expected openmp, opencl, cuda or serial)");
    }
    const auto defines = parse_defines(opts.defines);
    const std::string source = read_source(opts.file);
    Checked c = check_source(source, defines);
    print_diagnostics(c.diagnostics, opts.file, err);
    if (!c.ok) return kExitFailure;

    const std::string text = translate::emit_kernel_unit(c.lexed.stream, *backend, defines).text();
    if (opts.output.empty()) {
      out << text;
      return kExitOk;
    }
    fs::path target = opts.output;
    if (fs::is_directory(target)) {
      target /= fs::path(opts.file).stem().string() + std::string(translate::file_suffix(*backend));
    }
    std::ofstream file(target, std::ios::binary);
    file << text;
    if (!file.flush()) {
      err << "error: cannot write '" << target.string() << "'\n";
      return kExitFailure;
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_check(const CheckOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto defines = parse_defines(opts.defines);
    const std::string source = read_source(opts.file);
    Checked c = check_source(source, defines);
    print_diagnostics(c.diagnostics, opts.file, err);
    if (!c.ok) return kExitFailure;
    out << opts.file << ": ok, " << c.parsed.kernels.size() << " kernel(s)\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.threads < 1) throw UsageError("--threads must be at least 1");
    if (opts.global.empty() || opts.global.size() > 3) {
      throw UsageError("--global needs 1 to 3 extents");
    }
    if (opts.local.size() != opts.global.size()) {
      throw UsageError("--local needs as many extents as --global");
    }
    const auto defines = parse_defines(opts.defines);
    const std::string source = read_source(opts.file);

    engine::Device dev(opts.threads == 1 ? engine::ExecMode::serial()
                                         : engine::ExecMode::parallel_with(opts.threads));
    engine::Kernel kernel;
    try {
      kernel = dev.build_kernel(source, opts.kernel, defines);
    } catch (const engine::BuildError& e) {
      print_diagnostics(e.diagnostics(), opts.file, err);
      return kExitFailure;
    }
    print_diagnostics(kernel.warnings(), opts.file, err);
    kernel.set_thread_array(opts.global, opts.local, static_cast<int>(opts.global.size()));

    std::map<std::string, engine::Buffer> buffers;
    for (const auto& spec : opts.buffers) {
      auto [name, buf] = parse_buffer(dev, spec);
      if (!buffers.emplace(name, buf).second) throw UsageError("buffer '" + name + "' given twice");
    }
    std::map<std::string, engine::KernelArg> scalars;
    for (const auto& spec : opts.scalars) {
      auto [name, value] = parse_scalar(spec);
      if (!scalars.emplace(name, value).second) throw UsageError("scalar '" + name + "' given twice");
    }

    const auto& params = kernel.ast().params;
    std::vector<engine::KernelArg> args;
    std::size_t used_buffers = 0, used_scalars = 0;
    for (const auto& p : params) {
      if (p.is_array_ref) {
        auto it = buffers.find(p.name);
        if (it == buffers.end()) throw UsageError("no --buffer given for parameter '" + p.name + "'");
        args.emplace_back(it->second);
        ++used_buffers;
      } else {
        auto it = scalars.find(p.name);
        if (it == scalars.end()) throw UsageError("no --scalar given for parameter '" + p.name + "'");
        args.push_back(it->second);
        ++used_scalars;
      }
    }
    if (used_buffers != buffers.size() || used_scalars != scalars.size()) {
      throw UsageError("kernel '" + opts.kernel + "' takes " + std::to_string(params.size()) +
                       " argument(s); unmatched --buffer or --scalar given");
    }

    try {
      kernel.invoke(args);
    } catch (const engine::ExecutionError& e) {
      err << "error: " << e.what() << '\n';
      return kExitFailure;
    }

    if (!opts.dump.empty()) fs::create_directories(opts.dump);
    for (const auto& p : params) {
      if (!p.is_array_ref) continue;
      const auto& buf = buffers.at(p.name);
      std::ostringstream sum;
      sum.precision(17);
      sum << buf.abs_sum();
      out << p.name << ' ' << engine::to_string(buf.type()) << ' ' << buf.size() << ' '
          << sum.str() << '\n';
      if (!opts.dump.empty()) {
        const auto bytes = buf.to_bytes();
        const fs::path path = fs::path(opts.dump) / (p.name + ".bin");
        std::ofstream f(path, std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f.flush()) {
          err << "error: cannot write '" << path.string() << "'\n";
          return kExitFailure;
        }
      }
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const engine::ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  apps::FdConfig config;
  try {
    if (opts.radius < 1) throw UsageError("--radius must be at least 1");
    if (opts.steps < 1) throw UsageError("--steps must be at least 1");
    if (opts.threads.empty()) throw UsageError("--threads needs at least one count");
    for (int t : opts.threads) {
      if (t < 1) throw UsageError("--threads values must be at least 1");
    }
    const int stencil = 2 * opts.radius + 1;
    if (opts.width < stencil || opts.height < stencil) {
      throw UsageError("grid must be at least " + std::to_string(stencil) + " nodes per side for radius " +
                       std::to_string(opts.radius));
    }
    config = apps::FdConfig::make(opts.width, opts.height, opts.radius, opts.steps);
    config.validate();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::ofstream csv;
  bool need_header = true;
  if (!opts.csv.empty()) {
    std::error_code ec;
    need_header = !fs::exists(opts.csv, ec) || fs::file_size(opts.csv, ec) == 0;
    csv.open(opts.csv, std::ios::app);
    if (!csv) {
      err << "error: cannot write '" << opts.csv << "'\n";
      return kExitFailure;
    }
  }

  try {
    out << apps::bench_csv_header() << '\n';
    if (csv.is_open() && need_header) csv << apps::bench_csv_header() << '\n';
    for (int t : opts.threads) {
      const auto mode = t == 1 ? engine::ExecMode::serial() : engine::ExecMode::parallel_with(t);
      const auto row = apps::bench_csv_row(apps::bench(config, mode));
      out << row << '\n';
      if (csv.is_open()) csv << row << '\n';
    }
    if (csv.is_open() && !csv.flush()) {
      err << "error: cannot write '" << opts.csv << "'\n";
      return kExitFailure;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Translate occa-dialect kernels and run them on a CPU work-group engine", "occakit"};
  app.require_subcommand(1);

  TranslateOptions t;
  auto* tr = app.add_subcommand("translate", "Expand a kernel file into backend source");
  tr->add_option("file", t.file, "Kernel source (.occa)")->required();
  tr->add_option("-b,--backend", t.backend, "openmp, opencl, cuda or serial")->required();
  tr->add_option("-D,--define", t.defines, "Compile-time define NAME=VALUE");
  tr->add_option("-o,--output", t.output, "Output file or directory");

  CheckOptions c;
  auto* ck = app.add_subcommand("check", "Validate a kernel file and print diagnostics");
  ck->add_option("file", c.file, "Kernel source (.occa)")->required();
  ck->add_option("-D,--define", c.defines, "Compile-time define NAME=VALUE");

  RunOptions r;
  auto* rn = app.add_subcommand("run", "Build a kernel and invoke it once");
  rn->add_option("file", r.file, "Kernel source (.occa)")->required();
  rn->add_option("-k,--kernel", r.kernel, "Kernel name")->required();
  rn->add_option("--global", r.global, "Global extents, comma separated")->required()->delimiter(',');
  rn->add_option("--local", r.local, "Work-group extents, comma separated")->required()->delimiter(',');
  rn->add_option("--buffer", r.buffers,
                 "name=zeros:TYPE:N, name=range:TYPE:N or name=file:PATH:TYPE (TYPE: i32, f32, f64)");
  rn->add_option("--scalar", r.scalars, "Scalar argument name=TYPE:VALUE");
  rn->add_option("-t,--threads", r.threads, "Worker threads (1 = serial)");
  rn->add_option("--dump", r.dump, "Directory receiving <buffer>.bin after the run");
  rn->add_option("-D,--define", r.defines, "Compile-time define NAME=VALUE");

  BenchOptions b;
  auto* bn = app.add_subcommand("bench", "Time the finite-difference solver");
  bn->add_option("--width", b.width, "Grid nodes in x");
  bn->add_option("--height", b.height, "Grid nodes in y");
  bn->add_option("--radius", b.radius, "Stencil radius");
  bn->add_option("--steps", b.steps, "Time steps");
  bn->add_option("--threads", b.threads, "Thread counts, comma separated")->delimiter(',');
  bn->add_option("--csv", b.csv, "CSV file to append rows to");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (tr->parsed()) return cmd_translate(t, out, err);
  if (ck->parsed()) return cmd_check(c, out, err);
  if (rn->parsed()) return cmd_run(r, out, err);
  return cmd_bench(b, out, err);
}

}  // namespace occakit::cli
