#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "occakit/engine/buffer.hpp"
#include "occakit/engine/device.hpp"
#include "occakit/engine/work_size.hpp"
#include "occakit/lang/ast.hpp"
#include "occakit/lang/defines.hpp"
#include "program.hpp"

namespace occakit::engine::detail {

struct Storage {
  ElemType type = ElemType::Float64;
  std::size_t length = 0;
  std::vector<double> words;  // 8-byte aligned backing for any element type

  Storage(ElemType t, std::size_t n)
      : type(t), length(n), words((n * element_size(t) + sizeof(double) - 1) / sizeof(double)) {}

  void* data() { return words.data(); }
  const void* data() const { return words.data(); }
};

struct DeviceState;

struct BufferSlot {
  std::shared_ptr<Storage> storage;
  const DeviceState* device = nullptr;
  std::atomic<int> in_use{0};
};

// Fixed set of threads that drain a shared task counter. The caller blocks
// until every task has run; the first exception thrown by a task is
// rethrown after the remaining tasks are cancelled.
class WorkerPool {
 public:
  explicit WorkerPool(int threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()); }
  void run(std::size_t tasks, const std::function<void(int, std::size_t)>& fn);

 private:
  void loop(int worker);

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_;
  std::condition_variable done_;
  const std::function<void(int, std::size_t)>* job_ = nullptr;
  std::size_t tasks_ = 0;
  std::atomic<std::size_t> next_{0};
  std::uint64_t generation_ = 0;
  int busy_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

struct DeviceState {
  ExecMode mode;
  std::unique_ptr<WorkerPool> pool;  // null in serial mode
  std::mutex invoke_mutex;

  mutable std::mutex registry_mutex;
  std::vector<std::weak_ptr<BufferSlot>> buffers;
  std::vector<std::string> kernels;
};

struct KernelState {
  std::shared_ptr<DeviceState> device;
  std::shared_ptr<const lang::KernelAST> ast;
  lang::DefineSet defines;
  std::vector<lang::Diagnostic> warnings;
  std::unique_ptr<Program> program;

  mutable std::mutex work_size_mutex;
  std::optional<WorkSize> work_size;
  mutable std::atomic<int> running{0};
};

}  // namespace occakit::engine::detail
