#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "occakit/cli/commands.hpp"
#include "support/kernels.hpp"

using namespace occakit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int rc;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int rc = cli::run_cli(args, o, e);
  return {rc, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("occakit_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string fd_path() { return (testing::source_dir() / "kernels" / "fd2d.occa").string(); }

void write(const fs::path& p, std::string_view text) { std::ofstream(p, std::ios::binary) << text; }

const std::string_view kProbe = R"(
occaKernel void probe(occaKernelInfoArg, occaPointer float *outF, occaPointer int *outI){
  occaOuterFor0{
    occaInnerFor0{
      outF[occaGlobalId0] = occaGlobalId0;
      outI[occaGlobalId0] = occaGlobalId0;
    }
  }
}
)";

}  // namespace

TEST_CASE("contract") {
  const auto res = testing::check_cli_contract(scratch("contract"));
  INFO(res.detail);
  CHECK(res.ok);
}

TEST_CASE("translate writes to a file or a directory") {
  const auto dir = scratch("translate");
  auto r = invoke({"translate", fd_path(), "-b", "cuda", "-o", dir.string()});
  REQUIRE(r.rc == 0);
  const auto text = testing::read_file(dir / "fd2d.cu");
  CHECK(text.find("extern \"C\" __global__") != std::string::npos);

  r = invoke({"translate", fd_path(), "-b", "opencl", "-o", (dir / "x.cl").string(), "-D", "r=3",
           "-D", "w=64", "-D", "dx=0.5"});
  REQUIRE(r.rc == 0);
  const auto cl = testing::read_file(dir / "x.cl");
  CHECK(cl.rfind("#define r 3\n#define w 64\n#define dx 0.5\n", 0) == 0);
  CHECK(cl.find("__kernel") != std::string::npos);
}

TEST_CASE("translate reports diagnostics with exit 1") {
  const auto dir = scratch("diag");
  write(dir / "bad.occa", "occaKernel void k(occaKernelInfoArg){ occaOuterFor0{ occaInnerFor0{ "
                          "occaBarrier(occaLocalMemFence); } } }");
  const auto r = invoke({"translate", (dir / "bad.occa").string(), "-b", "opencl"});
  CHECK(r.rc == 1);
  CHECK(r.err.find("error[V1]") != std::string::npos);
  CHECK(r.out.empty());
  CHECK(invoke({"translate", fd_path(), "-b", "cuda", "-D", "9x=1"}).rc == 2);
}

TEST_CASE("check") {
  const auto dir = scratch("check");
  auto r = invoke({"check", fd_path()});
  CHECK(r.rc == 0);
  CHECK(r.out.find("ok, 1 kernel(s)") != std::string::npos);
  write(dir / "empty.occa", "");
  r = invoke({"check", (dir / "empty.occa").string()});
  CHECK(r.rc == 1);
  CHECK(r.err.find("no kernel found") != std::string::npos);
  CHECK(invoke({"check", (dir / "absent.occa").string()}).rc == 2);
}

TEST_CASE("run dumps little-endian buffers") {
  const auto dir = scratch("run");
  write(dir / "probe.occa", kProbe);
  const auto r = invoke({"run", (dir / "probe.occa").string(), "-k", "probe", "--global", "8",
                      "--local", "4", "--buffer", "outF=zeros:f32:8", "--buffer",
                      "outI=zeros:i32:8", "--dump", dir.string()});
  INFO(r.err);
  REQUIRE(r.rc == 0);
  CHECK(r.out.find("outF f32 8 28") != std::string::npos);
  const auto f = testing::read_file(dir / "outF.bin");
  const auto i = testing::read_file(dir / "outI.bin");
  REQUIRE(f.size() == 32);
  REQUIRE(i.size() == 32);
  for (int k = 0; k < 8; ++k) {
    float fv;
    std::int32_t iv;
    std::memcpy(&fv, f.data() + 4 * k, 4);
    std::memcpy(&iv, i.data() + 4 * k, 4);
    CHECK(fv == static_cast<float>(k));
    CHECK(iv == k);
    CHECK(static_cast<unsigned char>(i[static_cast<std::size_t>(4 * k)]) == k);
  }
}

TEST_CASE("run reads buffers from files and scalars from flags") {
  const auto dir = scratch("runfile");
  write(dir / "scale.occa", R"(
occaKernel void scale(occaKernelInfoArg, occaPointer double *x, occaConst double s){
  occaOuterFor0{ occaInnerFor0{ x[occaGlobalId0] = s*x[occaGlobalId0]; } }
}
)");
  const double data[4] = {1.0, -2.0, 3.0, 0.5};
  std::ofstream(dir / "x.bin", std::ios::binary)
      .write(reinterpret_cast<const char*>(data), sizeof data);
  const auto r = invoke({"run", (dir / "scale.occa").string(), "-k", "scale", "--global", "4",
                      "--local", "2", "--buffer", "x=file:" + (dir / "x.bin").string() + ":f64",
                      "--scalar", "s=f64:2", "--threads", "2"});
  INFO(r.err);
  REQUIRE(r.rc == 0);
  CHECK(r.out.find("x f64 4 13") != std::string::npos);
}

TEST_CASE("run exit codes") {
  const auto dir = scratch("runcodes");
  write(dir / "probe.occa", kProbe);
  const std::string file = (dir / "probe.occa").string();
  // missing buffer
  CHECK(invoke({"run", file, "-k", "probe", "--global", "8", "--local", "4", "--buffer",
             "outF=zeros:f32:8"})
            .rc == 2);
  CHECK(invoke({"run", file, "-k", "probe", "--global", "8", "--local", "4", "--buffer",
             "outF=zeros:f32:8", "--buffer", "outI=zeros:i32:8", "--threads", "0"})
            .rc == 2);
  CHECK(invoke({"run", file, "-k", "probe", "--global", "8", "--local", "3", "--buffer",
             "outF=zeros:f32:8", "--buffer", "outI=zeros:i32:8"})
            .rc == 2);
  // trapped out-of-range write
  const auto r = invoke({"run", file, "-k", "probe", "--global", "8", "--local", "4", "--buffer",
                      "outF=zeros:f32:8", "--buffer", "outI=zeros:i32:7"});
  CHECK(r.rc == 1);
  CHECK(r.err.find("outI") != std::string::npos);
  CHECK(invoke({"run", file, "-k", "nope", "--global", "8", "--local", "4"}).rc == 1);
}

TEST_CASE("bench writes CSV rows with equal checksums") {
  const auto dir = scratch("bench");
  const auto csv = dir / "bench.csv";
  auto r = invoke({"bench", "--width", "32", "--height", "32", "--radius", "3", "--steps", "3",
                "--threads", "1,4", "--csv", csv.string()});
  REQUIRE(r.rc == 0);
  r = invoke({"bench", "--width", "32", "--height", "32", "--radius", "3", "--steps", "3",
           "--threads", "2", "--csv", csv.string()});
  REQUIRE(r.rc == 0);

  std::ifstream in(csv);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "backend,threads,w,h,r,steps,mnodes_per_s,checksum");
  auto checksum = [](const std::string& l) { return l.substr(l.rfind(',') + 1); };
  CHECK(checksum(lines[1]) == checksum(lines[2]));
  CHECK(checksum(lines[1]) == checksum(lines[3]));
  CHECK(lines[1].rfind("serial,1,32,32,3,3,", 0) == 0);
  CHECK(lines[2].rfind("parallel,4,", 0) == 0);

  CHECK(invoke({"bench", "--width", "6", "--radius", "3"}).rc == 2);
  CHECK(invoke({"bench", "--steps", "1", "--width", "16", "--height", "16", "--csv",
             (dir / "no" / "such" / "dir.csv").string()})
            .rc == 1);
}

TEST_CASE("usage errors and help") {
  CHECK(invoke({}).rc == 2);
  CHECK(invoke({"--help"}).rc == 0);
  CHECK(invoke({"translate", fd_path()}).rc == 2);
  CHECK(invoke({"run", fd_path(), "-k", "fd2d", "--global", "x", "--local", "4"}).rc == 2);
}
