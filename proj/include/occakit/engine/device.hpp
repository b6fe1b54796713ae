#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occakit/engine/buffer.hpp"
#include "occakit/engine/kernel.hpp"
#include "occakit/lang/defines.hpp"

namespace occakit::engine {

namespace detail {
struct DeviceState;
}

struct ExecMode {
  bool parallel = false;
  int threads = 1;

  static ExecMode serial() { return {false, 1}; }
  static ExecMode parallel_with(int threads) { return {true, threads}; }

  std::string describe() const;
};

// Owns the worker pool. Work-groups of one invocation run concurrently in
// parallel mode and in flattened-index order in serial mode.
class Device {
 public:
  // Throws ConfigError when threads < 1.
  explicit Device(ExecMode mode = ExecMode::serial());

  ExecMode mode() const;
  int worker_count() const;

  // Copies host data; throws ConfigError for empty input.
  template <BufferElement T>
  Buffer create_buffer(std::span<const T> host);
  template <BufferElement T>
  Buffer create_buffer(const std::vector<T>& host) {
    return create_buffer(std::span<const T>(host));
  }
  // Zero-filled buffer.
  Buffer create_buffer(ElemType type, std::size_t length);

  // Tokenizes, parses, validates and lowers the named kernel. Throws
  // BuildError carrying every diagnostic when any of them is an error.
  Kernel build_kernel(std::string_view source, std::string_view name,
                      const lang::DefineSet& defines = {});
  Kernel build_kernel_file(const std::filesystem::path& path, std::string_view name,
                           const lang::DefineSet& defines = {});

  std::size_t live_buffer_count() const;
  std::vector<std::string> kernel_names() const;

 private:
  std::shared_ptr<detail::DeviceState> state_;
};

}  // namespace occakit::engine
