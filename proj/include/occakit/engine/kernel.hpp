#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "occakit/engine/buffer.hpp"
#include "occakit/engine/work_size.hpp"
#include "occakit/lang/ast.hpp"
#include "occakit/lang/defines.hpp"
#include "occakit/lang/diagnostic.hpp"

namespace occakit::engine {

namespace detail {
struct KernelState;
}

// One argument per kernel parameter, after the implicit info argument.
using KernelArg = std::variant<Buffer, std::int32_t, float, double>;

class Kernel {
 public:
  Kernel() = default;

  explicit operator bool() const { return state_ != nullptr; }
  const std::string& name() const;
  const lang::KernelAST& ast() const;
  const lang::DefineSet& defines() const;
  const std::vector<lang::Diagnostic>& warnings() const;

  // Throws ConfigError; see WorkSize::from_thread_array.
  void set_thread_array(std::span<const std::size_t> global, std::span<const std::size_t> local,
                        int dims);
  void set_work_size(const WorkSize& ws);
  std::optional<WorkSize> work_size() const;

  // Runs every work-group and returns when all have finished. Throws
  // ConfigError for a missing work size or mismatched arguments and
  // ExecutionError for faults trapped while running.
  void invoke(std::span<const KernelArg> args) const;

  template <class... Args>
  void operator()(const Args&... args) const {
    const std::array<KernelArg, sizeof...(Args)> packed{KernelArg(args)...};
    invoke(packed);
  }

 private:
  friend class Device;
  explicit Kernel(std::shared_ptr<detail::KernelState> state) : state_(std::move(state)) {}

  std::shared_ptr<detail::KernelState> state_;
};

}  // namespace occakit::engine
