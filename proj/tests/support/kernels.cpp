#include "support/kernels.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <random>
#include <sstream>

#include "occakit/apps/fd.hpp"
#include "occakit/cli/commands.hpp"
#include "occakit/engine/device.hpp"
#include "occakit/engine/errors.hpp"
#include "occakit/lang/parser.hpp"
#include "occakit/lang/tokenizer.hpp"
#include "occakit/lang/validate.hpp"
#include "occakit/translate/emit.hpp"
#include "support/reference_tables.hpp"

namespace occakit::testing {

const std::string_view kPrivateIsolationSource = R"(
occaKernel void isolate(occaKernelInfoArg, occaPointer int *out){
  occaOuterFor1{
    occaOuterFor0{
      occaPrivate(int, mine);
      occaPrivateArray(int, pair, 2);

      occaInnerFor2{
        occaInnerFor1{
          occaInnerFor0{
            const int item = occaInnerId0 + occaInnerDim0*(occaInnerId1 + occaInnerDim1*occaInnerId2);
            mine = item;
            pair[0] = 1000 + item;
            pair[1] = 2000 + item;
          }
        }
      }

      occaBarrier(occaLocalMemFence);

      occaInnerFor2{
        occaInnerFor1{
          occaInnerFor0{
            const int items = occaInnerDim0*occaInnerDim1*occaInnerDim2;
            const int item = occaInnerId0 + occaInnerDim0*(occaInnerId1 + occaInnerDim1*occaInnerId2);
            const int group = occaOuterId0 + occaOuterDim0*occaOuterId1;
            const int base = 4*(group*items + item);
            out[base + 0] = mine;
            out[base + 1] = pair[0];
            out[base + 2] = pair[1];
            out[base + 3] = out[base + 3] + 1;
          }
        }
      }
    }
  }
}
)";

const std::string_view kSharedReversalSource = R"(
occaKernel void reverse(occaKernelInfoArg,
                        occaPointer occaConst int *in,
                        occaPointer int *out){
  occaOuterFor0{
    occaShared int s[32];

    occaInnerFor0{
      s[occaInnerId0] = in[occaGlobalId0];
    }

    occaBarrier(occaLocalMemFence);

    occaInnerFor0{
      out[occaGlobalId0] = s[occaInnerDim0 - 1 - occaInnerId0];
    }
  }
}
)";

const std::string_view kInnerReturnSource = R"(
occaKernel void lanes(occaKernelInfoArg, occaPointer int *out, occaPointer int *after){
  occaOuterFor0{
    occaInnerFor0{
      if(occaInnerId0 == 0)
        occaInnerReturn;
      out[occaGlobalId0] = 1;
    }

    occaBarrier(occaLocalMemFence);

    occaInnerFor0{
      after[occaGlobalId0] = 1;
    }
  }
}
)";

const std::string_view kIdProbeSource = R"(
occaKernel void probe(occaKernelInfoArg, occaPointer int *out){
  occaOuterFor1{
    occaOuterFor0{
      occaInnerFor2{
        occaInnerFor1{
          occaInnerFor0{
            const int g = occaGlobalId0 + occaGlobalDim0*(occaGlobalId1 + occaGlobalDim1*occaGlobalId2);
            const int b = 16*g;
            out[b + 0] = occaInnerId0;
            out[b + 1] = occaInnerId1;
            out[b + 2] = occaInnerId2;
            out[b + 3] = occaOuterId0;
            out[b + 4] = occaOuterId1;
            out[b + 5] = occaOuterId2;
            out[b + 6] = occaGlobalId0;
            out[b + 7] = occaGlobalId1;
            out[b + 8] = occaGlobalId2;
            out[b + 9] = occaInnerDim0;
            out[b + 10] = occaInnerDim1;
            out[b + 11] = occaInnerDim2;
            out[b + 12] = occaOuterDim0;
            out[b + 13] = occaOuterDim1;
            out[b + 14] = occaOuterDim2;
            out[b + 15] += 1;
          }
        }
      }
    }
  }
}
)";

const std::string_view kMemoryTypesSource = R"(
occaKernel void kernelExample(occaKernelInfoArg, occaPointer int *outI, occaPointer int *outD){
  occaOuterFor0{
    occaPrivate(int, reg);
    occaPrivateArray(int, regArray, 2);

    occaInnerFor0{
      reg = occaGlobalId0;
      regArray[0] = 0;
      regArray[1] = 1;
    }

    occaBarrier(occaLocalMemFence);

    occaInnerFor0{
      int i = reg;
      int d = regArray[0];
      outI[occaGlobalId0] = i;
      outD[occaGlobalId0] = d + regArray[1];
    }
  }
}
)";

const std::string_view kSkeletonSource = R"(occaKernel void skeleton(occaKernelInfoArg){
occaOuterFor2{
  occaOuterFor1{
    occaOuterFor0{
      occaInnerFor2{
        occaInnerFor1{
          occaInnerFor0{
      }}}
}}}
}
)";

std::filesystem::path source_dir() { return OCCAKIT_SOURCE_DIR; }
std::filesystem::path golden_dir() { return std::filesystem::path(OCCAKIT_TEST_DIR) / "golden"; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

engine::ExecMode mode_for(int threads) {
  return threads <= 1 ? engine::ExecMode::serial() : engine::ExecMode::parallel_with(threads);
}

std::string shape(int a, int b, int c) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + ")";
}

}  // namespace

CheckResult check_private_isolation(int max_items, int threads) {
  CheckResult res;
  engine::Device dev(mode_for(threads));
  auto k = dev.build_kernel(kPrivateIsolationSource, "isolate");
  int shapes = 0;
  for (int d2 = 1; d2 <= max_items; ++d2) {
    for (int d1 = 1; d1 * d2 <= max_items; ++d1) {
      for (int d0 = 1; d0 * d1 * d2 <= max_items; ++d0) {
        const int items = d0 * d1 * d2;
        const int groups = 4;
        const std::array<std::size_t, 3> global{2u * d0, 2u * d1, static_cast<std::size_t>(d2)};
        const std::array<std::size_t, 3> local{static_cast<std::size_t>(d0),
                                               static_cast<std::size_t>(d1),
                                               static_cast<std::size_t>(d2)};
        k.set_thread_array(global, local, 3);
        auto out = dev.create_buffer(engine::ElemType::Int32,
                                     static_cast<std::size_t>(4 * groups * items));
        k(out);
        const auto v = out.read<std::int32_t>();
        for (int g = 0; g < groups && res.ok; ++g) {
          for (int i = 0; i < items; ++i) {
            const auto* e = &v[static_cast<std::size_t>(4 * (g * items + i))];
            if (e[0] != i || e[1] != 1000 + i || e[2] != 2000 + i || e[3] != 1) {
              res.fail("inner " + shape(d0, d1, d2) + " group " + std::to_string(g) + " item " +
                       std::to_string(i) + " read " + std::to_string(e[0]) + "," +
                       std::to_string(e[1]) + "," + std::to_string(e[2]) + " visits " +
                       std::to_string(e[3]));
              break;
            }
          }
        }
        ++shapes;
      }
    }
  }
  if (res.ok) res.detail = std::to_string(shapes) + " inner shapes";
  return res;
}

CheckResult check_shared_reversal(int max_d0, int threads) {
  CheckResult res;
  engine::Device dev(mode_for(threads));
  auto k = dev.build_kernel(kSharedReversalSource, "reverse");
  constexpr int kGroups = 3;
  for (int d0 = 1; d0 <= max_d0; ++d0) {
    const int n = d0 * kGroups;
    std::vector<std::int32_t> in(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = 7 * i + 3;
    auto bin = dev.create_buffer(in);
    auto bout = dev.create_buffer(engine::ElemType::Int32, static_cast<std::size_t>(n));
    const std::array<std::size_t, 1> global{static_cast<std::size_t>(n)};
    const std::array<std::size_t, 1> local{static_cast<std::size_t>(d0)};
    k.set_thread_array(global, local, 1);
    k(bin, bout);
    const auto out = bout.read<std::int32_t>();
    for (int g = 0; g < kGroups; ++g) {
      for (int t = 0; t < d0; ++t) {
        const auto want = in[static_cast<std::size_t>(g * d0 + (d0 - 1 - t))];
        const auto got = out[static_cast<std::size_t>(g * d0 + t)];
        if (got != want) {
          res.fail("d0=" + std::to_string(d0) + " group " + std::to_string(g) + " lane " +
                   std::to_string(t) + ": " + std::to_string(got) + " != " + std::to_string(want));
        }
      }
    }
  }
  if (res.ok) res.detail = "d0=1.." + std::to_string(max_d0);
  return res;
}

CheckResult check_inner_return(int threads) {
  CheckResult res;
  engine::Device dev(mode_for(threads));
  auto k = dev.build_kernel(kInnerReturnSource, "lanes");
  for (int d0 : {1, 2, 5, 16}) {
    constexpr int kGroups = 4;
    const int n = d0 * kGroups;
    auto out = dev.create_buffer(engine::ElemType::Int32, static_cast<std::size_t>(n));
    auto after = dev.create_buffer(engine::ElemType::Int32, static_cast<std::size_t>(n));
    const std::array<std::size_t, 1> global{static_cast<std::size_t>(n)};
    const std::array<std::size_t, 1> local{static_cast<std::size_t>(d0)};
    k.set_thread_array(global, local, 1);
    k(out, after);
    const auto o = out.read<std::int32_t>();
    const auto a = after.read<std::int32_t>();
    for (int g = 0; g < kGroups; ++g) {
      int zeros = 0;
      for (int t = 0; t < d0; ++t) {
        const auto idx = static_cast<std::size_t>(g * d0 + t);
        if (o[idx] == 0) {
          ++zeros;
          if (t != 0) res.fail("d0=" + std::to_string(d0) + ": lane " + std::to_string(t) + " masked");
        }
        if (a[idx] != 1) res.fail("d0=" + std::to_string(d0) + ": second nest skipped a lane");
      }
      if (zeros != 1) {
        res.fail("d0=" + std::to_string(d0) + " group " + std::to_string(g) + ": " +
                 std::to_string(zeros) + " masked lanes");
      }
    }
  }
  if (res.ok) res.detail = "one masked lane per group";
  return res;
}

CheckResult check_id_probe(int threads) {
  CheckResult res;
  engine::Device dev(mode_for(threads));
  auto k = dev.build_kernel(kIdProbeSource, "probe");
  const std::array<std::size_t, 3> global{24, 12, 2};
  const std::array<std::size_t, 3> local{4, 3, 2};
  k.set_thread_array(global, local, 3);
  const int gx = 24, gy = 12, gz = 2;
  const int n = gx * gy * gz;
  auto out = dev.create_buffer(engine::ElemType::Int32, static_cast<std::size_t>(kProbeStride * n));
  k(out);
  const auto v = out.read<std::int32_t>();
  const int inner[3] = {4, 3, 2};
  const int outer[3] = {6, 4, 1};
  for (int z = 0; z < gz; ++z) {
    for (int y = 0; y < gy; ++y) {
      for (int x = 0; x < gx; ++x) {
        const int g = x + gx * (y + gy * z);
        const auto* e = &v[static_cast<std::size_t>(kProbeStride * g)];
        const int gid[3] = {x, y, z};
        std::string where = "global " + shape(x, y, z);
        if (e[15] != 1) res.fail(where + " visited " + std::to_string(e[15]) + " times");
        for (int a = 0; a < 3; ++a) {
          const int in = e[a], out_id = e[3 + a], glob = e[6 + a];
          if (glob != gid[a]) res.fail(where + ": globalId" + std::to_string(a) + " wrong");
          if (glob != in + e[9 + a] * out_id) res.fail(where + ": id algebra broken on axis " + std::to_string(a));
          if (in < 0 || in >= e[9 + a]) res.fail(where + ": innerId out of range");
          if (out_id < 0 || out_id >= e[12 + a]) res.fail(where + ": outerId out of range");
          if (e[9 + a] != inner[a] || e[12 + a] != outer[a]) res.fail(where + ": sizes wrong");
        }
      }
    }
  }
  if (res.ok) res.detail = std::to_string(n) + " items";
  return res;
}

CheckResult check_skeleton_goldens() {
  CheckResult res;
  auto lex = lang::tokenize(kSkeletonSource);
  if (!lex.ok()) {
    res.fail("skeleton does not tokenize");
    return res;
  }
  for (translate::Backend b : translate::kAllBackends) {
    const auto unit = translate::emit_kernel_unit(lex.stream, b, {});
    const auto golden = golden_dir() / ("skeleton" + std::string(translate::file_suffix(b)));
    std::string want;
    try {
      want = read_file(golden);
    } catch (const std::exception& e) {
      res.fail(e.what());
      continue;
    }
    if (lang::normalize_whitespace(unit.kernel) != lang::normalize_whitespace(want)) {
      res.fail(std::string(translate::to_string(b)) + " expansion differs from " +
               golden.filename().string() + ":\n" + unit.kernel);
    }
  }
  if (res.ok) res.detail = "4 backends";
  return res;
}

CheckResult check_table_exhaustive() {
  CheckResult res;
  const auto bad = table_mismatches();
  for (const auto& m : bad) res.fail(m);
  if (!bad.empty()) res.detail += " (+" + std::to_string(bad.size() - 1) + " more)";
  if (res.ok) {
    res.detail = std::to_string(reference_rows().size()) + " keywords x " +
                 std::to_string(std::size(translate::kAllBackends)) + " backends";
  }
  return res;
}

namespace {

struct RulePair {
  std::string_view code;
  std::string_view failing;
  std::string_view passing;
};

constexpr RulePair kRulePairs[] = {
    {"V1",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerFor0{ "
     "occaBarrier(occaLocalMemFence); } } }",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerFor0{ } "
     "occaBarrier(occaLocalMemFence); occaInnerFor0{ } } }"},
    {"V2",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerFor0{ occaShared int s[4]; "
     "} } }",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaShared int s[4]; occaInnerFor0{ "
     "s[occaInnerId0] = 0; } } }"},
    {"V3",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaPrivate(int, reg); reg = 1; "
     "occaInnerFor0{ } } }",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaPrivate(int, reg); "
     "occaInnerFor0{ reg = 1; } } }"},
    {"V4",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerReturn; occaInnerFor0{ } } }",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerFor0{ occaInnerReturn; } } }"},
    {"V5",
     "occaKernel void k(occaKernelInfoArg, occaPointer int *o){ occaOuterFor0{ int g = "
     "occaGlobalId0; occaInnerFor0{ } } }",
     "occaKernel void k(occaKernelInfoArg, occaPointer int *o){ occaOuterFor0{ occaInnerFor0{ "
     "int g = occaGlobalId0; o[g] = g; } } }"},
    {"V6",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerFor0{ occaInnerDim0 = 2; } } "
     "}",
     "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerFor0{ int d = occaInnerDim0; "
     "} } }"},
};

std::vector<lang::Diagnostic> diagnose(std::string_view source) {
  auto lex = lang::tokenize(source);
  if (!lex.ok()) return lex.diagnostics;
  auto parsed = lang::parse_kernel(lex.stream);
  if (!parsed.ok() || parsed.kernels.empty()) return parsed.diagnostics;
  return lang::validate(*parsed.kernels.front());
}

}  // namespace

CheckResult check_validator_pairs() {
  CheckResult res;
  for (const RulePair& p : kRulePairs) {
    const auto bad = diagnose(p.failing);
    bool found = false;
    for (const auto& d : bad) {
      if (d.severity == lang::Severity::Error && d.code == p.code) found = true;
    }
    if (!found) {
      std::string got;
      for (const auto& d : bad) got += " " + d.code;
      res.fail(std::string(p.code) + " not reported for its failing kernel (got:" + got + ")");
    }
    const auto good = diagnose(p.passing);
    if (lang::has_errors(good)) {
      res.fail(std::string(p.code) + " twin rejected: " + lang::format_diagnostic(good.front(), "twin"));
    }
  }
  if (res.ok) res.detail = std::to_string(std::size(kRulePairs)) + " rule pairs";
  return res;
}

CheckResult check_fd_equivalence(const std::vector<std::uint64_t>& seeds, int threads) {
  CheckResult res;
  constexpr int kSteps = 10;
  const std::array<std::array<int, 2>, 3> grids{{{17, 17}, {32, 32}, {64, 48}}};
  int cases = 0;
  for (const auto& [w, h] : grids) {
    for (int r : {1, 3, 7}) {
      for (std::uint64_t seed : seeds) {
        const auto c = apps::FdConfig::make(w, h, r, kSteps);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> u1(static_cast<std::size_t>(w * h)), u2(u1.size());
        for (double& x : u1) x = dist(rng);
        for (double& x : u2) x = dist(rng);

        apps::FdSolver solver(c, mode_for(threads), u1, u2);
        solver.run(kSteps);
        const auto ref = apps::fd_reference_run(u1, u2, c, kSteps);
        const std::array<std::pair<std::vector<double>, const std::vector<double>*>, 3> pairs{
            {{solver.u1(), &ref.u1}, {solver.u2(), &ref.u2}, {solver.u3(), &ref.u3}}};
        for (std::size_t b = 0; b < pairs.size(); ++b) {
          const auto& got = pairs[b].first;
          const auto& want = *pairs[b].second;
          for (std::size_t i = 0; i < got.size(); ++i) {
            if (std::bit_cast<std::uint64_t>(got[i]) != std::bit_cast<std::uint64_t>(want[i])) {
              std::ostringstream m;
              m.precision(17);
              m << w << "x" << h << " r=" << r << " seed=" << seed << " u" << b + 1 << "[" << i
                << "]: " << got[i] << " != " << want[i];
              res.fail(m.str());
              break;
            }
          }
        }
        ++cases;
      }
    }
  }
  if (res.ok) res.detail = std::to_string(cases) + " cases bit-exact";
  return res;
}

CheckResult check_schedule_independence(const std::vector<int>& threads, int w, int h, int steps) {
  CheckResult res;
  const auto c = apps::FdConfig::make(w, h, 3, steps);
  std::ostringstream sums;
  sums.precision(17);
  double first = 0.0;
  std::vector<double> first_field;
  for (std::size_t i = 0; i < threads.size(); ++i) {
    apps::FdSolver solver(c, engine::ExecMode::parallel_with(threads[i]), apps::fd_impulse(w, h),
                          apps::fd_impulse(w, h));
    solver.run(steps);
    const double sum = solver.checksum();
    auto field = solver.u2();
    sums << (i ? " " : "") << "T" << threads[i] << "=" << sum;
    if (i == 0) {
      first = sum;
      first_field = std::move(field);
      continue;
    }
    if (sum != first) res.fail("checksum differs at threads=" + std::to_string(threads[i]));
    if (field != first_field) res.fail("field differs at threads=" + std::to_string(threads[i]));
  }
  if (res.ok) res.detail = sums.str();
  return res;
}

namespace {

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int rc = cli::run_cli(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

}  // namespace

CheckResult check_cli_contract(const std::filesystem::path& scratch) {
  CheckResult res;
  const std::string fd = (source_dir() / "kernels" / "fd2d.occa").string();
  const std::pair<std::string, std::string_view> markers[] = {
      {"cuda", "extern \"C\" __global__"},
      {"opencl", "__kernel"},
      {"openmp", "const int *occaDims"},
      {"serial", "const int *occaDims"},
  };
  for (const auto& [backend, marker] : markers) {
    std::string a, b;
    const int rc1 = cli({"translate", fd, "--backend", backend}, &a);
    const int rc2 = cli({"translate", fd, "--backend", backend}, &b);
    if (rc1 != 0 || rc2 != 0) res.fail("translate " + backend + " exited " + std::to_string(rc1));
    if (a != b) res.fail("translate " + backend + " output is not byte-stable");
    if (a.find(marker) == std::string::npos) {
      res.fail("translate " + backend + " output lacks '" + std::string(marker) + "'");
    }
  }

  std::filesystem::create_directories(scratch);
  const auto empty = scratch / "empty.occa";
  std::ofstream(empty).close();
  const auto barrier = scratch / "barrier.occa";
  std::ofstream(barrier) << kRulePairs[0].failing << "\n";

  struct Expect {
    std::vector<std::string> args;
    int rc;
  };
  const Expect cases[] = {
      {{"translate", fd, "--backend", "fortran"}, 2},
      {{"translate", (scratch / "missing.occa").string(), "--backend", "cuda"}, 2},
      {{"translate", barrier.string(), "--backend", "cuda"}, 1},
      {{"check", fd}, 0},
      {{"check", empty.string()}, 1},
      {{"check", barrier.string()}, 1},
      {{"frobnicate"}, 2},
      {{"bench", "--width", "6", "--radius", "3"}, 2},
      {{"bench", "--width", "16", "--height", "16", "--radius", "1", "--steps", "1", "--threads",
        "0"},
       2},
  };
  for (const auto& c : cases) {
    const int rc = cli(c.args);
    if (rc != c.rc) {
      std::string line;
      for (const auto& a : c.args) line += " " + a;
      res.fail("occakit" + line + " exited " + std::to_string(rc) + ", want " +
               std::to_string(c.rc));
    }
  }
  if (res.ok) {
    res.detail = "4 stable translations, " + std::to_string(std::size(cases)) + " exit codes";
  }
  return res;
}

}  // namespace occakit::testing
