#include "occakit/engine/kernel.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "occakit/engine/errors.hpp"
#include "state.hpp"

namespace occakit::engine {

namespace {

detail::KernelState& live(const std::shared_ptr<detail::KernelState>& s) {
  if (!s) throw Error("operation on an empty kernel handle");
  return *s;
}

ElemType elem_for(lang::BaseType t) {
  switch (t) {
    case lang::BaseType::Int: return ElemType::Int32;
    case lang::BaseType::Float: return ElemType::Float32;
    default: return ElemType::Float64;
  }
}

// Per-worker storage reused across the groups that worker runs.
struct Frame {
  std::vector<detail::Slot> locals;
  std::vector<detail::Slot> arena;
  std::vector<detail::Slot> privates;
};

class BusyGuard {
 public:
  void hold(detail::BufferSlot* slot) {
    if (std::find(held_.begin(), held_.end(), slot) != held_.end()) return;
    slot->in_use.fetch_add(1, std::memory_order_acq_rel);
    held_.push_back(slot);
  }
  ~BusyGuard() {
    for (auto* s : held_) s->in_use.fetch_sub(1, std::memory_order_acq_rel);
  }

 private:
  std::vector<detail::BufferSlot*> held_;
};

struct RunningGuard {
  std::atomic<int>& counter;
  explicit RunningGuard(std::atomic<int>& c) : counter(c) { counter.fetch_add(1); }
  ~RunningGuard() { counter.fetch_sub(1); }
};

}  // namespace

const std::string& Kernel::name() const { return live(state_).ast->name; }

const lang::KernelAST& Kernel::ast() const { return *live(state_).ast; }

const lang::DefineSet& Kernel::defines() const { return live(state_).defines; }

const std::vector<lang::Diagnostic>& Kernel::warnings() const { return live(state_).warnings; }

void Kernel::set_thread_array(std::span<const std::size_t> global,
                              std::span<const std::size_t> local, int dims) {
  set_work_size(WorkSize::from_thread_array(global, local, dims));
}

void Kernel::set_work_size(const WorkSize& ws) {
  auto& st = live(state_);
  for (int a = 0; a < 3; ++a) {
    if (ws.inner[static_cast<std::size_t>(a)] < 1 || ws.outer[static_cast<std::size_t>(a)] < 1) {
      throw ConfigError("work-size extents must be at least 1");
    }
  }
  if (ws.outer[2] != 1) throw ConfigError("outer axis 2 must have extent 1");
  std::lock_guard lock(st.work_size_mutex);
  if (st.running.load() > 0) throw ConfigError("work size changed while the kernel is running");
  st.work_size = ws;
}

std::optional<WorkSize> Kernel::work_size() const {
  auto& st = live(state_);
  std::lock_guard lock(st.work_size_mutex);
  return st.work_size;
}

void Kernel::invoke(std::span<const KernelArg> args) const {
  auto& st = live(state_);
  const auto& prog = *st.program;
  auto& device = *st.device;

  std::unique_lock device_lock(device.invoke_mutex);
  WorkSize ws;
  {
    std::lock_guard lock(st.work_size_mutex);
    if (!st.work_size) throw ConfigError("kernel '" + prog.kernel_name + "' has no work size set");
    ws = *st.work_size;
  }
  RunningGuard running(st.running);

  if (args.size() != prog.params.size()) {
    throw ConfigError("kernel '" + prog.kernel_name + "' takes " +
                      std::to_string(prog.params.size()) + " argument(s), got " +
                      std::to_string(args.size()));
  }

  BusyGuard busy;
  std::vector<detail::BufferView> views(prog.buffer_count);
  std::vector<std::pair<std::size_t, detail::Slot>> scalars;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& p = prog.params[i];
    const std::string where = "argument " + std::to_string(i + 1) + " ('" + p.name + "')";
    if (p.is_buffer) {
      const Buffer* b = std::get_if<Buffer>(&args[i]);
      if (!b || !*b) throw ConfigError(where + " must be a buffer");
      auto* slot = b->slot_.get();
      if (slot->device != st.device.get()) {
        throw ConfigError(where + " belongs to a different device");
      }
      if (slot->storage->type != elem_for(p.type)) {
        throw ConfigError(where + " must hold " + std::string(to_string(elem_for(p.type))) +
                          ", got " + std::string(to_string(slot->storage->type)));
      }
      busy.hold(slot);
      views[static_cast<std::size_t>(p.index)] = {
          slot->storage->data(), static_cast<std::int64_t>(slot->storage->length), &p.name};
      continue;
    }
    detail::Slot v{};
    const bool ok = std::visit(
        [&](const auto& a) {
          using A = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<A, Buffer>) {
            return false;
          } else {
            switch (p.type) {
              case lang::BaseType::Int:
                if constexpr (!std::is_same_v<A, std::int32_t>) return false;
                v.i = static_cast<std::int32_t>(a);
                return true;
              case lang::BaseType::Float: v.f = static_cast<float>(a); return true;
              default: v.d = static_cast<double>(a); return true;
            }
          }
        },
        args[i]);
    if (!ok) {
      throw ConfigError(where + " must be a scalar of type " +
                        std::string(lang::to_string(p.type)));
    }
    scalars.emplace_back(static_cast<std::size_t>(p.index), v);
  }

  const int items = ws.items_per_group();
  const std::size_t groups = ws.group_count();
  const int workers = device.pool ? device.pool->size() : 1;
  std::vector<Frame> frames(static_cast<std::size_t>(workers));
  for (auto& f : frames) {
    f.locals.resize(std::max<std::size_t>(prog.local_slots, 1));
    f.arena.resize(std::max<std::size_t>(prog.arena_slots, 1));
    f.privates.resize(std::max<std::size_t>(prog.private_stride * static_cast<std::size_t>(items), 1));
  }

  auto run_group = [&](int worker, std::size_t g) {
    Frame& f = frames[static_cast<std::size_t>(worker)];
    std::memset(f.locals.data(), 0, f.locals.size() * sizeof(detail::Slot));
    std::memset(f.arena.data(), 0, f.arena.size() * sizeof(detail::Slot));
    std::memset(f.privates.data(), 0, f.privates.size() * sizeof(detail::Slot));
    for (const auto& [slot, v] : scalars) f.locals[slot] = v;

    detail::ExecContext ctx;
    ctx.locals = f.locals.data();
    ctx.arena = f.arena.data();
    ctx.privates = f.privates.data();
    ctx.buffers = views.data();
    ctx.program = &prog;
    for (int a = 0; a < 3; ++a) {
      ctx.inner_dim[a] = ws.inner[static_cast<std::size_t>(a)];
      ctx.outer_dim[a] = ws.outer[static_cast<std::size_t>(a)];
    }
    const auto d0 = static_cast<std::size_t>(ws.outer[0]);
    const auto d1 = static_cast<std::size_t>(ws.outer[1]);
    ctx.outer_id[0] = static_cast<int>(g % d0);
    ctx.outer_id[1] = static_cast<int>((g / d0) % d1);
    ctx.outer_id[2] = static_cast<int>(g / (d0 * d1));
    prog.run_group(ctx);
  };

  if (device.pool) {
    device.pool->run(groups, run_group);
  } else {
    for (std::size_t g = 0; g < groups; ++g) run_group(0, g);
  }
}

}  // namespace occakit::engine
