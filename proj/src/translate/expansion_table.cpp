#include "occakit/translate/expansion_table.hpp"

#include <stdexcept>
#include <string>

namespace occakit::translate {

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::OpenMP: return "openmp";
    case Backend::OpenCL: return "opencl";
    case Backend::CUDA: return "cuda";
    case Backend::Serial: return "serial";
  }
  return "?";
}

std::optional<Backend> parse_backend(std::string_view name) {
  for (Backend b : kAllBackends) {
    if (to_string(b) == name) return b;
  }
  return std::nullopt;
}

std::string_view file_suffix(Backend b) {
  switch (b) {
    case Backend::OpenMP: return ".omp.cpp";
    case Backend::OpenCL: return ".cl";
    case Backend::CUDA: return ".cu";
    case Backend::Serial: return ".serial.cpp";
  }
  return "";
}

const Expansion& ExpansionTable::at(std::string_view keyword) const {
  auto it = entries.find(keyword);
  if (it == entries.end()) {
    throw std::logic_error("no " + std::string(to_string(backend)) + " expansion for keyword '" +
                           std::string(keyword) + "'");
  }
  return it->second;
}

namespace {

// Columns: OpenMP, OpenCL, CUDA. A blank OpenMP cell for a thread id means
// the id is a plain loop variable in that mode, so it maps to itself.
struct Row {
  std::string_view keyword;
  std::string_view openmp;
  std::string_view opencl;
  std::string_view cuda;
};

constexpr Row kRows[] = {
    // work-group / work-item ids
    {"occaInnerId0", "occaInnerId0", "get_local_id(0)", "threadIdx.x"},
    {"occaInnerId1", "occaInnerId1", "get_local_id(1)", "threadIdx.y"},
    {"occaInnerId2", "occaInnerId2", "get_local_id(2)", "threadIdx.z"},
    {"occaOuterId0", "occaOuterId0", "get_group_id(0)", "blockIdx.x"},
    {"occaOuterId1", "occaOuterId1", "get_group_id(1)", "blockIdx.y"},
    {"occaOuterId2", "occaOuterId2", "get_group_id(2)", "blockIdx.z"},
    {"occaGlobalId0", "occaInnerId0 + occaInnerDim0*occaOuterId0", "get_global_id(0)",
     "threadIdx.x + blockIdx.x*blockDim.x"},
    {"occaGlobalId1", "occaInnerId1 + occaInnerDim1*occaOuterId1", "get_global_id(1)",
     "threadIdx.y + blockIdx.y*blockDim.y"},
    {"occaGlobalId2", "occaInnerId2", "get_global_id(2)", "threadIdx.z"},

    // work sizes
    {"occaInnerDim0", "occaDims[0]", "get_local_size(0)", "blockDim.x"},
    {"occaInnerDim1", "occaDims[1]", "get_local_size(1)", "blockDim.y"},
    {"occaInnerDim2", "occaDims[2]", "get_local_size(2)", "blockDim.z"},
    {"occaOuterDim0", "occaDims[3]", "get_num_groups(0)", "gridDim.x"},
    {"occaOuterDim1", "occaDims[4]", "get_num_groups(1)", "gridDim.y"},
    {"occaOuterDim2", "occaDims[5]", "get_num_groups(2)", "gridDim.z"},
    {"occaGlobalDim0", "occaInnerDim0*occaOuterDim0", "get_global_size(0)",
     "occaInnerDim0*occaOuterDim0"},
    {"occaGlobalDim1", "occaInnerDim1*occaOuterDim1", "get_global_size(1)",
     "occaInnerDim1*occaOuterDim1"},
    {"occaGlobalDim2", "occaInnerDim2*occaOuterDim2", "get_global_size(2)", "occaInnerDim2"},

    // loop scopes; GPU backends erase them
    {"occaInnerFor", "occaInnerFor2 occaInnerFor1 occaInnerFor0", "", ""},
    {"occaInnerFor0", "for(occaInnerId0 = 0; occaInnerId0 < occaInnerDim0; ++occaInnerId0)", "",
     ""},
    {"occaInnerFor1", "for(occaInnerId1 = 0; occaInnerId1 < occaInnerDim1; ++occaInnerId1)", "",
     ""},
    {"occaInnerFor2", "for(occaInnerId2 = 0; occaInnerId2 < occaInnerDim2; ++occaInnerId2)", "",
     ""},
    {"occaOuterFor0", "for(occaOuterId0 = 0; occaOuterId0 < occaOuterDim0; ++occaOuterId0)", "",
     ""},
    {"occaOuterFor1", "for(occaOuterId1 = 0; occaOuterId1 < occaOuterDim1; ++occaOuterId1)", "",
     ""},
    {"occaOuterFor2", "", "", ""},
    {"occaGlobalFor0", "occaOuterFor0 occaInnerFor0", "", ""},
    {"occaGlobalFor1", "occaOuterFor1 occaInnerFor1", "", ""},
    {"occaGlobalFor2", "occaInnerFor2", "", ""},

    // variable attributes
    {"occaShared", "", "__local", "__shared__"},
    {"occaPointer", "", "__global", ""},
    {"occaConstant", "", "__constant", "__constant__"},
    {"occaVariable", "", "", ""},
    {"occaRestrict", "__restrict__", "restrict", "__restrict__"},
    {"occaVolatile", "", "volatile", "__volatile__"},
    {"occaConst", "const", "const", "const"},
    {"occaAligned", "__attribute__ ((aligned (__BIGGEST_ALIGNMENT__)))", "", ""},

    // kernel prototypes and setup
    {"occaKernelInfoArg", "const int *occaDims", "__global int *dims", "int *dims"},
    {"occaFunctionInfoArg",
     "const int *occaDims, int occaInnerId0, int occaInnerId1, int occaInnerId2", "int _dummy",
     "int dummy"},
    {"occaFunctionInfo", "occaDims, occaInnerId0, occaInnerId1, occaInnerId2", "999", "1"},
    {"occaKernel", "extern \"C\"", "__kernel", "extern \"C\" __global__"},
    {"occaFunction", "", "", "__device__"},
    {"occaFunctionShared", "", "__local", ""},
    {"occaInnerReturn", "{continue;}", "{return;}", "{return;}"},

    // barriers
    {"occaLocalMemFence", "", "CLK_LOCAL_MEM_FENCE", ""},
    {"occaGlobalMemFence", "", "CLK_GLOBAL_MEM_FENCE", ""},
    {"occaBarrier", "", "barrier(Fence)", "__syncthreads();"},

    // private memory
    {"occaPrivateArray", "occaPrivateClass<type,sz> name", "type name[n]", "type name[n]"},
    {"occaPrivate", "occaPrivateClass<type,1> name", "type name", "type name"},

    // platform flags
    {"occaCPU", "1", "0", "0"},
    {"occaGPU", "0", "1", "1"},
    {"occaOpenMP", "1", "0", "0"},
    {"occaOpenCL", "0", "1", "0"},
    {"occaCUDA", "0", "0", "1"},
};

std::vector<std::string> params_for(std::string_view keyword, Backend backend) {
  if (keyword == "occaBarrier") return {"Fence"};
  if (keyword == "occaPrivate") return {"type", "name"};
  if (keyword == "occaPrivateArray") {
    return is_gpu(backend) ? std::vector<std::string>{"type", "name", "n"}
                           : std::vector<std::string>{"type", "name", "sz"};
  }
  return {};
}

ExpansionTable build(Backend backend) {
  ExpansionTable table;
  table.backend = backend;
  for (const Row& row : kRows) {
    std::string_view text = backend == Backend::OpenCL ? row.opencl
                            : backend == Backend::CUDA ? row.cuda
                                                       : row.openmp;
    table.entries.emplace(std::string(row.keyword),
                          Expansion{std::string(text), params_for(row.keyword, backend)});
  }
  return table;
}

}  // namespace

const ExpansionTable& expansion_table(Backend backend) {
  static const ExpansionTable kOpenMP = build(Backend::OpenMP);
  static const ExpansionTable kOpenCL = build(Backend::OpenCL);
  static const ExpansionTable kCUDA = build(Backend::CUDA);
  static const ExpansionTable kSerial = build(Backend::Serial);
  switch (backend) {
    case Backend::OpenMP: return kOpenMP;
    case Backend::OpenCL: return kOpenCL;
    case Backend::CUDA: return kCUDA;
    case Backend::Serial: return kSerial;
  }
  throw std::logic_error("unknown backend");
}

}  // namespace occakit::translate
