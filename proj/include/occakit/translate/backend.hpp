#pragma once

#include <optional>
#include <string_view>

namespace occakit::translate {

// Serial shares the OpenMP table but never emits the parallel pragma.
enum class Backend { OpenMP, OpenCL, CUDA, Serial };

inline constexpr Backend kAllBackends[] = {Backend::OpenMP, Backend::OpenCL, Backend::CUDA,
                                           Backend::Serial};

std::string_view to_string(Backend b);

// Accepts the CLI spellings: openmp, opencl, cuda, serial.
std::optional<Backend> parse_backend(std::string_view name);

// ".omp.cpp", ".cl", ".cu", ".serial.cpp"
std::string_view file_suffix(Backend b);

inline bool is_gpu(Backend b) { return b == Backend::OpenCL || b == Backend::CUDA; }

}  // namespace occakit::translate
