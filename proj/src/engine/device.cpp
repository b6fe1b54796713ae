#include "occakit/engine/device.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "occakit/engine/errors.hpp"
#include "occakit/lang/parser.hpp"
#include "occakit/lang/tokenizer.hpp"
#include "occakit/lang/validate.hpp"
#include "state.hpp"

namespace occakit::engine {

namespace detail {

WorkerPool::WorkerPool(int threads) {
  threads_.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) threads_.emplace_back([this, w] { loop(w); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  start_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::run(std::size_t tasks, const std::function<void(int, std::size_t)>& fn) {
  if (tasks == 0) return;
  std::unique_lock lock(mutex_);
  job_ = &fn;
  tasks_ = tasks;
  next_.store(0, std::memory_order_relaxed);
  error_ = nullptr;
  busy_ = size();
  ++generation_;
  start_.notify_all();
  done_.wait(lock, [this] { return busy_ == 0; });
  job_ = nullptr;
  if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
}

void WorkerPool::loop(int worker) {
  std::uint64_t seen = 0;
  while (true) {
    const std::function<void(int, std::size_t)>* job = nullptr;
    std::size_t tasks = 0;
    {
      std::unique_lock lock(mutex_);
      start_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      tasks = tasks_;
    }
    for (std::size_t t; (t = next_.fetch_add(1, std::memory_order_relaxed)) < tasks;) {
      try {
        (*job)(worker, t);
      } catch (...) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = std::current_exception();
        next_.store(tasks, std::memory_order_relaxed);
      }
    }
    std::lock_guard lock(mutex_);
    if (--busy_ == 0) done_.notify_one();
  }
}

}  // namespace detail

std::string ExecMode::describe() const {
  return parallel ? "parallel(" + std::to_string(threads) + ")" : "serial";
}

Device::Device(ExecMode mode) {
  if (mode.threads < 1) {
    throw ConfigError("thread count must be at least 1, got " + std::to_string(mode.threads));
  }
  if (!mode.parallel && mode.threads != 1) throw ConfigError("serial mode runs exactly one thread");
  state_ = std::make_shared<detail::DeviceState>();
  state_->mode = mode;
  if (mode.parallel) state_->pool = std::make_unique<detail::WorkerPool>(mode.threads);
}

ExecMode Device::mode() const { return state_->mode; }

int Device::worker_count() const { return state_->mode.threads; }

Buffer Device::create_buffer(ElemType type, std::size_t length) {
  if (length == 0) throw ConfigError("buffers must hold at least one element");
  auto slot = std::make_shared<detail::BufferSlot>();
  slot->storage = std::make_shared<detail::Storage>(type, length);
  slot->device = state_.get();
  std::lock_guard lock(state_->registry_mutex);
  auto& reg = state_->buffers;
  reg.erase(std::remove_if(reg.begin(), reg.end(), [](const auto& w) { return w.expired(); }),
            reg.end());
  reg.push_back(slot);
  return Buffer(std::move(slot));
}

template <BufferElement T>
Buffer Device::create_buffer(std::span<const T> host) {
  if (host.empty()) throw ConfigError("buffers must hold at least one element");
  Buffer b = create_buffer(elem_type_of<T>, host.size());
  std::memcpy(b.slot_->storage->data(), host.data(), host.size() * sizeof(T));
  return b;
}

template Buffer Device::create_buffer<std::int32_t>(std::span<const std::int32_t>);
template Buffer Device::create_buffer<float>(std::span<const float>);
template Buffer Device::create_buffer<double>(std::span<const double>);

namespace {

[[noreturn]] void fail_build(std::vector<lang::Diagnostic> diags) {
  std::string message = "kernel build failed";
  for (const auto& d : diags) {
    if (d.severity == lang::Severity::Error) {
      message += ": " + lang::format_diagnostic(d, "<kernel>");
      break;
    }
  }
  throw BuildError(std::move(message), std::move(diags));
}

}  // namespace

Kernel Device::build_kernel(std::string_view source, std::string_view name,
                            const lang::DefineSet& defines) {
  auto lexed = lang::tokenize(source, defines);
  if (!lexed.ok()) fail_build(std::move(lexed.diagnostics));

  auto parsed = lang::parse_kernel(lexed.stream);
  if (!parsed.ok()) fail_build(std::move(parsed.diagnostics));

  auto ast = parsed.find_kernel(name);
  if (!ast) {
    throw BuildError("kernel '" + std::string(name) + "' not found in source",
                     {{lang::Severity::Error, "K0",
                       "kernel '" + std::string(name) + "' not found", {1, 1}}});
  }

  auto diags = lang::validate(*ast);
  // Defines are already substituted here, so an unresolved name is fatal.
  for (auto& d : diags) {
    if (d.code == "S1") d.severity = lang::Severity::Error;
  }
  if (lang::has_errors(diags)) fail_build(std::move(diags));

  auto program = detail::lower(*ast, diags);
  if (!program) fail_build(std::move(diags));

  auto state = std::make_shared<detail::KernelState>();
  state->device = state_;
  state->ast = std::move(ast);
  state->defines = defines;
  state->warnings = std::move(diags);
  state->program = std::move(program);
  {
    std::lock_guard lock(state_->registry_mutex);
    state_->kernels.emplace_back(name);
  }
  return Kernel(std::move(state));
}

Kernel Device::build_kernel_file(const std::filesystem::path& path, std::string_view name,
                                 const lang::DefineSet& defines) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open kernel source " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return build_kernel(text.str(), name, defines);
}

std::size_t Device::live_buffer_count() const {
  std::lock_guard lock(state_->registry_mutex);
  return static_cast<std::size_t>(std::count_if(state_->buffers.begin(), state_->buffers.end(),
                                                [](const auto& w) { return !w.expired(); }));
}

std::vector<std::string> Device::kernel_names() const {
  std::lock_guard lock(state_->registry_mutex);
  return state_->kernels;
}

}  // namespace occakit::engine
