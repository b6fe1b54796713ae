#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "doctest.h"
#include "occakit/engine/device.hpp"
#include "occakit/engine/errors.hpp"
#include "occakit/engine/kernel.hpp"
#include "occakit/engine/work_size.hpp"
#include "support/kernels.hpp"

using namespace occakit;
using engine::Buffer;
using engine::ConfigError;
using engine::Device;
using engine::ElemType;
using engine::ExecMode;
using engine::ExecutionError;

namespace {

template <std::size_t N>
void launch(engine::Kernel& k, std::array<std::size_t, N> global, std::array<std::size_t, N> local) {
  k.set_thread_array(global, local, static_cast<int>(N));
}

constexpr std::string_view kGidSource = R"(
occaKernel void gid(occaKernelInfoArg, occaPointer float *outF, occaPointer int *outI){
  occaOuterFor0{
    occaInnerFor0{
      outF[occaGlobalId0] = occaGlobalId0;
      outI[occaGlobalId0] = occaGlobalId0;
    }
  }
}
)";

// Evaluates `expr` (ints a, b) once into out[0].
std::string int_expr_kernel(std::string_view expr) {
  return "occaKernel void e(occaKernelInfoArg, occaConst int a, occaConst int b, occaPointer int "
         "*out){ occaOuterFor0{ occaInnerFor0{ out[0] = " +
         std::string(expr) + "; } } }";
}

std::string float_expr_kernel(std::string_view type, std::string_view expr) {
  return "occaKernel void e(occaKernelInfoArg, occaConst " + std::string(type) + " a, occaConst " +
         std::string(type) + " b, occaPointer " + std::string(type) +
         " *out){ occaOuterFor0{ occaInnerFor0{ out[0] = " + std::string(expr) + "; } } }";
}

std::int32_t eval_int(std::string_view expr, std::int32_t a, std::int32_t b) {
  Device dev;
  auto k = dev.build_kernel(int_expr_kernel(expr), "e");
  launch<1>(k, {1}, {1});
  auto out = dev.create_buffer(ElemType::Int32, 1);
  k(a, b, out);
  return out.read<std::int32_t>()[0];
}

}  // namespace

TEST_CASE("devices") {
  CHECK(Device(ExecMode::serial()).worker_count() == 1);
  CHECK(Device(ExecMode::parallel_with(4)).worker_count() == 4);
  CHECK_THROWS_AS(Device(ExecMode::parallel_with(0)), ConfigError);
  CHECK_THROWS_AS(Device(ExecMode{false, 3}), ConfigError);
  CHECK(ExecMode::serial().describe() == "serial");
}

TEST_CASE("buffers round trip and copy host data") {
  Device dev;
  std::vector<double> host{1.0, 2.0};
  auto b = dev.create_buffer(host);
  host[0] = 99.0;
  CHECK(b.read<double>() == std::vector<double>{1.0, 2.0});
  CHECK(b.type() == ElemType::Float64);
  CHECK(b.size() == 2);

  b.write(std::vector<double>{3.0, 4.0});
  CHECK(b.read<double>() == std::vector<double>{3.0, 4.0});
  CHECK_THROWS_AS(b.write(std::vector<double>{1.0}), engine::Error);
  CHECK_THROWS_AS(b.read<float>(), engine::Error);

  auto zeros = dev.create_buffer(ElemType::Float64, 256 * 256);
  const auto z = zeros.read<double>();
  CHECK(z.size() == 65536);
  CHECK(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }));

  CHECK_THROWS_AS(dev.create_buffer(std::vector<double>{}), ConfigError);
}

TEST_CASE("little-endian byte export") {
  Device dev;
  auto b = dev.create_buffer(std::vector<std::int32_t>{1, 0x01020304});
  const auto bytes = b.to_bytes();
  REQUIRE(bytes.size() == 8);
  CHECK(bytes[0] == 1);
  CHECK(bytes[4] == 0x04);
  CHECK(bytes[7] == 0x01);
}

TEST_CASE("swap exchanges storage") {
  Device dev;
  auto a = dev.create_buffer(std::vector<double>{1.0});
  auto b = dev.create_buffer(std::vector<double>{2.0});
  Buffer alias = a;
  a.swap(b);
  CHECK(a.read<double>()[0] == 2.0);
  CHECK(b.read<double>()[0] == 1.0);
  CHECK(alias.read<double>()[0] == 2.0);
  a.swap(a);
  CHECK(a.read<double>()[0] == 2.0);

  auto c = dev.create_buffer(std::vector<double>{1.0, 2.0});
  auto i = dev.create_buffer(std::vector<std::int32_t>{1});
  CHECK_THROWS_AS(a.swap(c), engine::Error);
  CHECK_THROWS_AS(a.swap(i), engine::Error);
}

TEST_CASE("three-buffer rotation by two swaps") {
  Device dev;
  auto u1 = dev.create_buffer(std::vector<double>{1.0});
  auto u2 = dev.create_buffer(std::vector<double>{2.0});
  auto u3 = dev.create_buffer(std::vector<double>{3.0});
  u1.swap(u2);
  u2.swap(u3);
  CHECK(u1.read<double>()[0] == 2.0);
  CHECK(u2.read<double>()[0] == 3.0);
  CHECK(u3.read<double>()[0] == 1.0);
}

TEST_CASE("thread arrays") {
  using engine::WorkSize;
  const std::array<std::size_t, 2> g{32, 32}, l{16, 16};
  const auto ws = WorkSize::from_thread_array(g, l, 2);
  CHECK(ws.inner == std::array<int, 3>{16, 16, 1});
  CHECK(ws.outer == std::array<int, 3>{2, 2, 1});

  const std::array<std::size_t, 1> g1{16}, l1{16};
  const auto one = WorkSize::from_thread_array(g1, l1, 1);
  CHECK(one.inner == std::array<int, 3>{16, 1, 1});
  CHECK(one.outer == std::array<int, 3>{1, 1, 1});

  const std::array<std::size_t, 1> g30{30};
  CHECK_THROWS_AS(WorkSize::from_thread_array(g30, l1, 1), ConfigError);
  const std::array<std::size_t, 3> g3{4, 4, 4}, l3{2, 2, 2};
  CHECK_THROWS_AS(WorkSize::from_thread_array(g3, l3, 3), ConfigError);
  CHECK_THROWS_AS(WorkSize::from_thread_array(g1, l1, 0), ConfigError);
  CHECK_THROWS_AS(WorkSize::from_thread_array(g1, l1, 4), ConfigError);
  const std::array<std::size_t, 1> zero{0};
  CHECK_THROWS_AS(WorkSize::from_thread_array(zero, l1, 1), ConfigError);
}

TEST_CASE("build errors") {
  Device dev;
  CHECK_THROWS_AS(dev.build_kernel(testing::kIdProbeSource, "nope"), engine::BuildError);
  try {
    dev.build_kernel(
        "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerFor0{ "
        "occaBarrier(occaLocalMemFence); } } }",
        "k");
    FAIL("expected a build error");
  } catch (const engine::BuildError& e) {
    REQUIRE_FALSE(e.diagnostics().empty());
    CHECK(e.diagnostics().front().code == "V1");
  }
  try {
    dev.build_kernel(
        "occaKernel void k(occaKernelInfoArg, occaPointer int *o){ occaOuterFor0{ occaInnerFor0{ "
        "o[0] = missing; } } }",
        "k");
    FAIL("expected a build error");
  } catch (const engine::BuildError& e) {
    CHECK(e.diagnostics().front().code == "S1");
  }
}

TEST_CASE("global ids enumerate in order") {
  Device dev;
  auto k = dev.build_kernel(kGidSource, "gid");
  launch<1>(k, {8}, {4});
  auto f = dev.create_buffer(ElemType::Float32, 8);
  auto i = dev.create_buffer(ElemType::Int32, 8);
  k(f, i);
  CHECK(f.read<float>() == std::vector<float>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(i.read<std::int32_t>() == std::vector<std::int32_t>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("invocation checks") {
  Device dev;
  auto k = dev.build_kernel(kGidSource, "gid");
  auto f = dev.create_buffer(ElemType::Float32, 8);
  auto i = dev.create_buffer(ElemType::Int32, 8);
  CHECK_THROWS_AS(k(f, i), ConfigError);  // no work size yet
  launch<1>(k, {8}, {4});
  CHECK_THROWS_AS(k(f), ConfigError);
  CHECK_THROWS_AS(k(i, f), ConfigError);
  CHECK_THROWS_AS(k(f, 3), ConfigError);
  Device other;
  auto foreign = other.create_buffer(ElemType::Int32, 8);
  CHECK_THROWS_AS(k(f, foreign), ConfigError);
}

TEST_CASE("semantics: private isolation") {
  const auto res = testing::check_private_isolation(24);
  INFO(res.detail);
  CHECK(res.ok);
}

TEST_CASE("semantics: shared reversal") {
  const auto res = testing::check_shared_reversal(32, 2);
  INFO(res.detail);
  CHECK(res.ok);
}

TEST_CASE("semantics: inner return masks one lane per group") {
  const auto res = testing::check_inner_return(3);
  INFO(res.detail);
  CHECK(res.ok);
}

TEST_CASE("semantics: id algebra") {
  const auto res = testing::check_id_probe();
  INFO(res.detail);
  CHECK(res.ok);
}

TEST_CASE("memory types example keeps per-item registers across the barrier") {
  Device dev(ExecMode::parallel_with(2));
  auto k = dev.build_kernel(testing::kMemoryTypesSource, "kernelExample");
  launch<1>(k, {24}, {8});
  auto oi = dev.create_buffer(ElemType::Int32, 24);
  auto od = dev.create_buffer(ElemType::Int32, 24);
  k(oi, od);
  const auto vi = oi.read<std::int32_t>();
  const auto vd = od.read<std::int32_t>();
  for (int g = 0; g < 24; ++g) {
    CHECK(vi[static_cast<std::size_t>(g)] == g);
    CHECK(vd[static_cast<std::size_t>(g)] == 1);
  }
}

TEST_CASE("shared arrays are fresh per group") {
  Device dev;
  auto k = dev.build_kernel(R"(
occaKernel void k(occaKernelInfoArg, occaPointer int *out){
  occaOuterFor0{
    occaShared int s[4];
    occaInnerFor0{ s[occaInnerId0] = s[occaInnerId0] + occaOuterId0 + 1; }
    occaBarrier(occaLocalMemFence);
    occaInnerFor0{ out[occaGlobalId0] = s[occaInnerId0]; }
  }
}
)",
                            "k");
  launch<1>(k, {16}, {4});
  auto out = dev.create_buffer(ElemType::Int32, 16);
  k(out);
  const auto v = out.read<std::int32_t>();
  for (int i = 0; i < 16; ++i) CHECK(v[static_cast<std::size_t>(i)] == i / 4 + 1);
}

TEST_CASE("platform flags and helpers") {
  Device dev;
  auto k = dev.build_kernel(R"(
occaFunction int twice(occaFunctionInfoArg, int x){
  return 2*x;
}

occaKernel void k(occaKernelInfoArg, occaPointer int *out){
  occaOuterFor0{
    occaInnerFor0{
      out[0] = occaCPU + 2*occaGPU + 4*occaOpenMP + 8*occaOpenCL + 16*occaCUDA;
      out[1] = twice(occaFunctionInfo, 21);
      if(occaGPU){
        out[2] = 1;
      } else {
        out[2] = 2;
      }
      out[3] = min(3, 9) + max(1.5, 2.5);
      out[4] = sqrt(16.0) + fabs(-2.0) + exp(0.0);
    }
  }
}
)",
                            "k");
  launch<1>(k, {1}, {1});
  auto out = dev.create_buffer(ElemType::Int32, 5);
  k(out);
  CHECK(out.read<std::int32_t>() == std::vector<std::int32_t>{5, 42, 2, 5, 7});
}

TEST_CASE("integer arithmetic follows C") {
  CHECK(eval_int("a / b", 7, 2) == 3);
  CHECK(eval_int("a / b", -7, 2) == -3);
  CHECK(eval_int("a % b", -7, 2) == -1);
  CHECK(eval_int("(a < b) + (a == b)*2 + (a != b)*4", 1, 2) == 5);
  CHECK(eval_int("!a || b && a", 0, 0) == 1);
  CHECK(eval_int("-a + b*3 - (a - b)", 4, 5) == 12);
}

TEST_CASE("scalar argument types must match") {
  Device dev;
  auto k = dev.build_kernel(int_expr_kernel("a + b"), "e");
  launch<1>(k, {1}, {1});
  auto out = dev.create_buffer(ElemType::Int32, 1);
  CHECK_THROWS_AS(k(1.0, 2, out), ConfigError);
  auto f = dev.build_kernel(float_expr_kernel("float", "a * b"), "e");
  launch<1>(f, {1}, {1});
  auto fo = dev.create_buffer(ElemType::Float32, 1);
  f(1.5f, 2.0f, fo);
  CHECK(fo.read<float>()[0] == 3.0f);
}

TEST_CASE("traps") {
  Device dev(ExecMode::parallel_with(2));
  SUBCASE("buffer index out of range names kernel, buffer and index") {
    auto k = dev.build_kernel(kGidSource, "gid");
    launch<1>(k, {16}, {4});
    auto f = dev.create_buffer(ElemType::Float32, 16);
    auto i = dev.create_buffer(ElemType::Int32, 15);
    try {
      k(f, i);
      FAIL("expected a trap");
    } catch (const ExecutionError& e) {
      const std::string m = e.what();
      CHECK(m.find("gid") != std::string::npos);
      CHECK(m.find("outI") != std::string::npos);
      CHECK(m.find("15") != std::string::npos);
    }
    // the buffers are released after a trap
    CHECK_NOTHROW(i.read<std::int32_t>());
  }
  SUBCASE("negative index") {
    auto bad = dev.build_kernel(
        "occaKernel void e(occaKernelInfoArg, occaPointer int *out){ occaOuterFor0{ "
        "occaInnerFor0{ out[occaGlobalId0 - 1] = 1; } } }",
        "e");
    launch<1>(bad, {4}, {4});
    auto out = dev.create_buffer(ElemType::Int32, 4);
    CHECK_THROWS_AS(bad(out), ExecutionError);
  }
  SUBCASE("integer division by zero") {
    CHECK_THROWS_AS(eval_int("a / b", 1, 0), ExecutionError);
    CHECK_THROWS_AS(eval_int("a % b", 1, 0), ExecutionError);
    CHECK_THROWS_AS(eval_int("a / b", std::numeric_limits<std::int32_t>::min(), -1),
                    ExecutionError);
  }
  SUBCASE("floating division by zero") {
    auto k = dev.build_kernel(float_expr_kernel("double", "a / b"), "e");
    launch<1>(k, {1}, {1});
    auto out = dev.create_buffer(ElemType::Float64, 1);
    CHECK_THROWS_AS(k(1.0, 0.0, out), ExecutionError);
  }
  SUBCASE("shared array index out of range") {
    auto k = dev.build_kernel(R"(
occaKernel void k(occaKernelInfoArg, occaPointer int *out){
  occaOuterFor0{
    occaShared int s[4];
    occaInnerFor0{ s[occaInnerId0] = 1; }
  }
}
)",
                              "k");
    launch<1>(k, {8}, {8});
    auto out = dev.create_buffer(ElemType::Int32, 1);
    CHECK_THROWS_AS(k(out), ExecutionError);
  }
}

TEST_CASE("schedule independence for the semantics kernels") {
  for (int t : {1, 2, 4, 8}) {
    CAPTURE(t);
    CHECK(testing::check_id_probe(t).ok);
    CHECK(testing::check_private_isolation(8, t).ok);
    CHECK(testing::check_shared_reversal(8, t).ok);
  }
}

TEST_CASE("host access to a running kernel's buffer is rejected") {
  Device dev(ExecMode::parallel_with(2));
  auto k = dev.build_kernel(R"(
occaKernel void spin(occaKernelInfoArg, occaPointer int *out, occaConst int n){
  occaOuterFor0{
    occaInnerFor0{
      int acc = 0;
      for(int i = 0; i < n; i++){
        acc += i % 7;
      }
      out[occaGlobalId0] = acc;
    }
  }
}
)",
                            "spin");
  launch<1>(k, {2}, {1});
  auto out = dev.create_buffer(ElemType::Int32, 2);
  std::atomic<bool> started{false};
  std::thread runner([&] {
    started = true;
    k(out, 10000000);
  });
  while (!started) std::this_thread::yield();
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  bool rejected = false;
  try {
    (void)out.read<std::int32_t>();
  } catch (const engine::Error&) {
    rejected = true;
  }
  runner.join();
  CHECK(rejected);
  CHECK_NOTHROW(out.read<std::int32_t>());
}

TEST_CASE("registry") {
  Device dev;
  {
    auto a = dev.create_buffer(ElemType::Int32, 4);
    CHECK(dev.live_buffer_count() == 1);
  }
  CHECK(dev.live_buffer_count() == 0);
  auto k = dev.build_kernel(kGidSource, "gid");
  CHECK(dev.kernel_names() == std::vector<std::string>{"gid"});
  CHECK(k.name() == "gid");
}
