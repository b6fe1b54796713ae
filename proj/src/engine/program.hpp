#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "occakit/lang/ast.hpp"
#include "occakit/lang/diagnostic.hpp"

namespace occakit::engine::detail {

union Slot {
  std::int32_t i;
  float f;
  double d;
};

template <class T>
inline T& slot_as(Slot& s) {
  if constexpr (std::is_same_v<T, std::int32_t>) {
    return s.i;
  } else if constexpr (std::is_same_v<T, float>) {
    return s.f;
  } else {
    return s.d;
  }
}

struct BufferView {
  void* data = nullptr;
  std::int64_t length = 0;
  const std::string* name = nullptr;
};

class Program;

// Execution state of one work-group on one worker.
struct ExecContext {
  Slot* locals = nullptr;
  Slot* arena = nullptr;     // arrays, including shared ones
  Slot* privates = nullptr;  // private_stride slots per work-item
  const BufferView* buffers = nullptr;
  int inner_id[3] = {0, 0, 0};
  int outer_id[3] = {0, 0, 0};
  int inner_dim[3] = {1, 1, 1};
  int outer_dim[3] = {1, 1, 1};
  int inner_depth = 0;
  Slot ret{};
  const Program* program = nullptr;
};

enum class Flow { Normal, InnerReturn, Return };

struct StmtNode {
  virtual ~StmtNode() = default;
  virtual Flow exec(ExecContext& ctx) const = 0;
};

struct ParamBinding {
  bool is_buffer = false;
  lang::BaseType type = lang::BaseType::Int;
  int index = 0;  // buffer view index or local slot
  std::string name;
};

struct HelperFn;

// A kernel lowered to a tree of typed closures.
class Program {
 public:
  std::string kernel_name;
  std::vector<ParamBinding> params;
  std::size_t buffer_count = 0;
  std::size_t local_slots = 0;
  std::size_t arena_slots = 0;
  std::size_t private_stride = 0;
  std::unique_ptr<StmtNode> body;
  std::vector<std::unique_ptr<HelperFn>> helpers;

  Program();
  ~Program();

  // Runs the kernel body once for the group whose ids are already in ctx.
  void run_group(ExecContext& ctx) const { body->exec(ctx); }
};

// Type-checks and lowers a validated kernel. Type errors are reported as T1
// diagnostics and yield a null program.
std::unique_ptr<Program> lower(const lang::KernelAST& kernel, std::vector<lang::Diagnostic>& diags);

}  // namespace occakit::engine::detail
