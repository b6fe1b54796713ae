#include <algorithm>
#include <climits>
#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <type_traits>
#include <utility>

#include "occakit/engine/errors.hpp"
#include "program.hpp"

namespace occakit::engine::detail {

using lang::BaseType;
using lang::BinaryOp;
using lang::SourcePos;

namespace {

[[noreturn]] void trap(const ExecContext& ctx, const std::string& message) {
  throw ExecutionError("kernel '" + ctx.program->kernel_name + "': " + message);
}

template <class T>
inline constexpr BaseType base_of = std::is_same_v<T, std::int32_t> ? BaseType::Int
                                    : std::is_same_v<T, float>      ? BaseType::Float
                                                                    : BaseType::Double;

template <class F>
decltype(auto) dispatch(BaseType t, F&& f) {
  switch (t) {
    case BaseType::Int: return f(std::type_identity<std::int32_t>{});
    case BaseType::Float: return f(std::type_identity<float>{});
    default: return f(std::type_identity<double>{});
  }
}

// ------------------------------------------------------------------ nodes

struct AnyExpr {
  virtual ~AnyExpr() = default;
};

template <class T>
struct Expr : AnyExpr {
  virtual T eval(ExecContext& ctx) const = 0;
};

template <class T>
using ExprP = std::unique_ptr<Expr<T>>;

struct AnyPlace {
  virtual ~AnyPlace() = default;
};

template <class T>
struct Place : AnyPlace {
  virtual T& ref(ExecContext& ctx) const = 0;
};

template <class T>
using PlaceP = std::unique_ptr<Place<T>>;

using StmtP = std::unique_ptr<StmtNode>;

template <class T>
struct Const final : Expr<T> {
  T value;
  explicit Const(T v) : value(v) {}
  T eval(ExecContext&) const override { return value; }
};

template <class To, class From>
To convert_value(const ExecContext& ctx, From v) {
  if constexpr (std::is_same_v<To, std::int32_t> && std::is_floating_point_v<From>) {
    if (!(v > -2147483649.0 && v < 2147483648.0)) {
      trap(ctx, "floating-point value " + std::to_string(static_cast<double>(v)) +
                    " does not fit in int");
    }
  }
  return static_cast<To>(v);
}

template <class To, class From>
struct Convert final : Expr<To> {
  ExprP<From> a;
  explicit Convert(ExprP<From> x) : a(std::move(x)) {}
  To eval(ExecContext& ctx) const override { return convert_value<To>(ctx, a->eval(ctx)); }
};

struct OpAdd {
  template <class T>
  static T apply(const ExecContext&, T a, T b) {
    if constexpr (std::is_integral_v<T>) {
      return static_cast<T>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
    } else {
      return a + b;
    }
  }
};

struct OpSub {
  template <class T>
  static T apply(const ExecContext&, T a, T b) {
    if constexpr (std::is_integral_v<T>) {
      return static_cast<T>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
    } else {
      return a - b;
    }
  }
};

struct OpMul {
  template <class T>
  static T apply(const ExecContext&, T a, T b) {
    if constexpr (std::is_integral_v<T>) {
      return static_cast<T>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
    } else {
      return a * b;
    }
  }
};

struct OpDiv {
  template <class T>
  static T apply(const ExecContext& ctx, T a, T b) {
    if (b == 0) trap(ctx, "division by zero");
    if constexpr (std::is_integral_v<T>) {
      if (a == INT32_MIN && b == -1) trap(ctx, "integer overflow in division");
    }
    return a / b;
  }
};

struct OpMod {
  template <class T>
  static T apply(const ExecContext& ctx, T a, T b) {
    if constexpr (std::is_integral_v<T>) {
      if (b == 0) trap(ctx, "modulo by zero");
      if (b == -1) return 0;
      return a % b;
    } else {
      return a;  // rejected during lowering
    }
  }
};

template <class T, class Op>
struct Arith final : Expr<T> {
  ExprP<T> a, b;
  Arith(ExprP<T> x, ExprP<T> y) : a(std::move(x)), b(std::move(y)) {}
  T eval(ExecContext& ctx) const override {
    const T x = a->eval(ctx);
    const T y = b->eval(ctx);
    return Op::apply(ctx, x, y);
  }
};

// Right operand folded to a constant, as in `k + w` or `j*w`.
template <class T, class Op>
struct ArithConst final : Expr<T> {
  ExprP<T> a;
  T c;
  ArithConst(ExprP<T> x, T y) : a(std::move(x)), c(y) {}
  T eval(ExecContext& ctx) const override { return Op::apply(ctx, a->eval(ctx), c); }
};

struct CmpLt { template <class T> static bool apply(T a, T b) { return a < b; } };
struct CmpLe { template <class T> static bool apply(T a, T b) { return a <= b; } };
struct CmpGt { template <class T> static bool apply(T a, T b) { return a > b; } };
struct CmpGe { template <class T> static bool apply(T a, T b) { return a >= b; } };
struct CmpEq { template <class T> static bool apply(T a, T b) { return a == b; } };
struct CmpNe { template <class T> static bool apply(T a, T b) { return a != b; } };

template <class T, class Op>
struct Compare final : Expr<std::int32_t> {
  ExprP<T> a, b;
  Compare(ExprP<T> x, ExprP<T> y) : a(std::move(x)), b(std::move(y)) {}
  std::int32_t eval(ExecContext& ctx) const override {
    const T x = a->eval(ctx);
    const T y = b->eval(ctx);
    return Op::apply(x, y) ? 1 : 0;
  }
};

template <class T>
struct Negate final : Expr<T> {
  ExprP<T> a;
  explicit Negate(ExprP<T> x) : a(std::move(x)) {}
  T eval(ExecContext& ctx) const override {
    if constexpr (std::is_integral_v<T>) {
      return static_cast<T>(0u - static_cast<std::uint32_t>(a->eval(ctx)));
    } else {
      return -a->eval(ctx);
    }
  }
};

template <class T>
struct Truth final : Expr<std::int32_t> {
  ExprP<T> a;
  bool negate;
  Truth(ExprP<T> x, bool neg) : a(std::move(x)), negate(neg) {}
  std::int32_t eval(ExecContext& ctx) const override {
    return ((a->eval(ctx) != T{0}) != negate) ? 1 : 0;
  }
};

struct LogicalAnd final : Expr<std::int32_t> {
  ExprP<std::int32_t> a, b;
  LogicalAnd(ExprP<std::int32_t> x, ExprP<std::int32_t> y) : a(std::move(x)), b(std::move(y)) {}
  std::int32_t eval(ExecContext& ctx) const override {
    return (a->eval(ctx) != 0 && b->eval(ctx) != 0) ? 1 : 0;
  }
};

struct LogicalOr final : Expr<std::int32_t> {
  ExprP<std::int32_t> a, b;
  LogicalOr(ExprP<std::int32_t> x, ExprP<std::int32_t> y) : a(std::move(x)), b(std::move(y)) {}
  std::int32_t eval(ExecContext& ctx) const override {
    return (a->eval(ctx) != 0 || b->eval(ctx) != 0) ? 1 : 0;
  }
};

enum class IdKind { Inner, Outer, Global, InnerDim, OuterDim, GlobalDim };

template <IdKind K>
struct WorkId final : Expr<std::int32_t> {
  int axis;
  explicit WorkId(int a) : axis(a) {}
  std::int32_t eval(ExecContext& ctx) const override {
    if constexpr (K == IdKind::Inner) return ctx.inner_id[axis];
    if constexpr (K == IdKind::Outer) return ctx.outer_id[axis];
    if constexpr (K == IdKind::Global) {
      return ctx.inner_id[axis] + ctx.inner_dim[axis] * ctx.outer_id[axis];
    }
    if constexpr (K == IdKind::InnerDim) return ctx.inner_dim[axis];
    if constexpr (K == IdKind::OuterDim) return ctx.outer_dim[axis];
    if constexpr (K == IdKind::GlobalDim) return ctx.inner_dim[axis] * ctx.outer_dim[axis];
  }
};

template <class T>
struct LoadLocal final : Expr<T> {
  int slot;
  explicit LoadLocal(int s) : slot(s) {}
  T eval(ExecContext& ctx) const override { return slot_as<T>(ctx.locals[slot]); }
};

template <class T>
struct LoadPlace final : Expr<T> {
  PlaceP<T> place;
  explicit LoadPlace(PlaceP<T> p) : place(std::move(p)) {}
  T eval(ExecContext& ctx) const override { return place->ref(ctx); }
};

template <class T>
struct LocalPlace final : Place<T> {
  int slot;
  explicit LocalPlace(int s) : slot(s) {}
  T& ref(ExecContext& ctx) const override { return slot_as<T>(ctx.locals[slot]); }
};

template <class T>
T& buffer_element(ExecContext& ctx, int buffer, std::int32_t i) {
  const BufferView& v = ctx.buffers[buffer];
  if (i < 0 || i >= v.length) {
    trap(ctx, "index " + std::to_string(i) + " out of range for buffer '" + *v.name +
                  "' (length " + std::to_string(v.length) + ")");
  }
  return static_cast<T*>(v.data)[i];
}

template <class T>
struct BufferPlace final : Place<T> {
  int buffer;
  ExprP<std::int32_t> index;
  BufferPlace(int b, ExprP<std::int32_t> i) : buffer(b), index(std::move(i)) {}
  T& ref(ExecContext& ctx) const override {
    return buffer_element<T>(ctx, buffer, index->eval(ctx));
  }
};

template <class T>
struct BufferLoad final : Expr<T> {
  int buffer;
  ExprP<std::int32_t> index;
  BufferLoad(int b, ExprP<std::int32_t> i) : buffer(b), index(std::move(i)) {}
  T eval(ExecContext& ctx) const override {
    return buffer_element<T>(ctx, buffer, index->eval(ctx));
  }
};

// Fused forms for the shapes that dominate stencil loops: operands that are
// plain locals or constants skip one virtual call each.
template <class T, class Op>
struct LocalOpConst final : Expr<T> {
  int slot;
  T c;
  LocalOpConst(int s, T y) : slot(s), c(y) {}
  T eval(ExecContext& ctx) const override {
    return Op::apply(ctx, slot_as<T>(ctx.locals[slot]), c);
  }
};

template <class T, class Op>
struct LocalOpLocal final : Expr<T> {
  int a, b;
  LocalOpLocal(int x, int y) : a(x), b(y) {}
  T eval(ExecContext& ctx) const override {
    return Op::apply(ctx, slot_as<T>(ctx.locals[a]), slot_as<T>(ctx.locals[b]));
  }
};

template <class T, class Op>
struct ExprOpLocal final : Expr<T> {
  ExprP<T> a;
  int b;
  ExprOpLocal(ExprP<T> x, int y) : a(std::move(x)), b(y) {}
  T eval(ExecContext& ctx) const override {
    const T x = a->eval(ctx);
    return Op::apply(ctx, x, slot_as<T>(ctx.locals[b]));
  }
};

template <class T, class Op>
struct LocalOpExpr final : Expr<T> {
  int a;
  ExprP<T> b;
  LocalOpExpr(int x, ExprP<T> y) : a(x), b(std::move(y)) {}
  T eval(ExecContext& ctx) const override {
    const T x = slot_as<T>(ctx.locals[a]);
    return Op::apply(ctx, x, b->eval(ctx));
  }
};

template <class T, class Op>
struct CompareLocalConst final : Expr<std::int32_t> {
  int slot;
  T c;
  CompareLocalConst(int s, T y) : slot(s), c(y) {}
  std::int32_t eval(ExecContext& ctx) const override {
    return Op::apply(slot_as<T>(ctx.locals[slot]), c) ? 1 : 0;
  }
};

template <class T>
struct BufferLoadLocal final : Expr<T> {
  int buffer;
  int slot;
  BufferLoadLocal(int b, int s) : buffer(b), slot(s) {}
  T eval(ExecContext& ctx) const override {
    return buffer_element<T>(ctx, buffer, ctx.locals[slot].i);
  }
};

// Arrays (shared or not) and shared scalars live in the per-group arena.
template <class T>
struct ArenaPlace final : Place<T> {
  int offset;
  std::vector<int> extents;
  std::vector<ExprP<std::int32_t>> indices;
  std::string name;
  T& ref(ExecContext& ctx) const override {
    std::int64_t flat = 0;
    for (std::size_t d = 0; d < indices.size(); ++d) {
      const std::int32_t i = indices[d]->eval(ctx);
      if (i < 0 || i >= extents[d]) {
        trap(ctx, "index " + std::to_string(i) + " out of range for array '" + name +
                      "' (extent " + std::to_string(extents[d]) + ")");
      }
      flat = flat * extents[d] + i;
    }
    return slot_as<T>(ctx.arena[offset + flat]);
  }
};

template <class T>
struct PrivatePlace final : Place<T> {
  int offset;
  int size;
  ExprP<std::int32_t> index;  // null for occaPrivate
  std::string name;
  T& ref(ExecContext& ctx) const override {
    if (ctx.inner_depth == 0) {
      trap(ctx, "private variable '" + name + "' accessed outside an inner loop nest");
    }
    std::int32_t elem = 0;
    if (index) {
      elem = index->eval(ctx);
      if (elem < 0 || elem >= size) {
        trap(ctx, "index " + std::to_string(elem) + " out of range for private array '" + name +
                      "' (size " + std::to_string(size) + ")");
      }
    }
    const std::int64_t item =
        ctx.inner_id[0] +
        static_cast<std::int64_t>(ctx.inner_dim[0]) *
            (ctx.inner_id[1] + static_cast<std::int64_t>(ctx.inner_dim[1]) * ctx.inner_id[2]);
    const auto stride = static_cast<std::int64_t>(ctx.program->private_stride);
    return slot_as<T>(ctx.privates[item * stride + offset + elem]);
  }
};

struct UnaryMath final : Expr<double> {
  double (*fn)(double);
  ExprP<double> a;
  UnaryMath(double (*f)(double), ExprP<double> x) : fn(f), a(std::move(x)) {}
  double eval(ExecContext& ctx) const override { return fn(a->eval(ctx)); }
};

template <class T, bool IsMax>
struct MinMax final : Expr<T> {
  ExprP<T> a, b;
  MinMax(ExprP<T> x, ExprP<T> y) : a(std::move(x)), b(std::move(y)) {}
  T eval(ExecContext& ctx) const override {
    const T x = a->eval(ctx);
    const T y = b->eval(ctx);
    if constexpr (IsMax) {
      return x < y ? y : x;
    } else {
      return y < x ? y : x;
    }
  }
};

// ------------------------------------------------------------- statements

struct Block final : StmtNode {
  std::vector<StmtP> stmts;
  Flow exec(ExecContext& ctx) const override {
    for (const auto& s : stmts) {
      const Flow f = s->exec(ctx);
      if (f != Flow::Normal) return f;
    }
    return Flow::Normal;
  }
};

template <class T>
struct AssignLocal final : StmtNode {
  int slot;
  ExprP<T> value;
  AssignLocal(int s, ExprP<T> v) : slot(s), value(std::move(v)) {}
  Flow exec(ExecContext& ctx) const override {
    slot_as<T>(ctx.locals[slot]) = value->eval(ctx);
    return Flow::Normal;
  }
};

template <class T>
struct AssignPlace final : StmtNode {
  PlaceP<T> place;
  ExprP<T> value;
  AssignPlace(PlaceP<T> p, ExprP<T> v) : place(std::move(p)), value(std::move(v)) {}
  Flow exec(ExecContext& ctx) const override {
    const T v = value->eval(ctx);
    place->ref(ctx) = v;
    return Flow::Normal;
  }
};

struct ZeroArena final : StmtNode {
  int offset;
  int count;
  ZeroArena(int o, int c) : offset(o), count(c) {}
  Flow exec(ExecContext& ctx) const override {
    std::memset(ctx.arena + offset, 0, static_cast<std::size_t>(count) * sizeof(Slot));
    return Flow::Normal;
  }
};

struct IfNode final : StmtNode {
  ExprP<std::int32_t> cond;
  StmtP then_branch;
  StmtP else_branch;
  Flow exec(ExecContext& ctx) const override {
    if (cond->eval(ctx) != 0) return then_branch ? then_branch->exec(ctx) : Flow::Normal;
    return else_branch ? else_branch->exec(ctx) : Flow::Normal;
  }
};

struct ForNode final : StmtNode {
  StmtP init;
  ExprP<std::int32_t> cond;
  StmtP update;
  StmtP body;
  Flow exec(ExecContext& ctx) const override {
    if (init) init->exec(ctx);
    while (!cond || cond->eval(ctx) != 0) {
      if (body) {
        const Flow f = body->exec(ctx);
        if (f != Flow::Normal) return f;
      }
      if (update) update->exec(ctx);
    }
    return Flow::Normal;
  }
};

// `x op= value` on a local scalar.
template <class T, class Op>
struct AccumulateLocal final : StmtNode {
  int slot;
  ExprP<T> value;
  AccumulateLocal(int s, ExprP<T> v) : slot(s), value(std::move(v)) {}
  Flow exec(ExecContext& ctx) const override {
    T& x = slot_as<T>(ctx.locals[slot]);
    x = Op::apply(ctx, x, value->eval(ctx));
    return Flow::Normal;
  }
};

// `for(init; i < limit; i++)` (or `<=`) over an int local. The counter is
// re-read every iteration, so bodies that assign it behave as in C.
struct CountedFor final : StmtNode {
  StmtP init;
  int slot;
  std::int32_t limit;
  bool inclusive;
  StmtP body;
  Flow exec(ExecContext& ctx) const override {
    if (init) init->exec(ctx);
    std::int32_t& i = ctx.locals[slot].i;
    while (inclusive ? i <= limit : i < limit) {
      if (body) {
        const Flow f = body->exec(ctx);
        if (f != Flow::Normal) return f;
      }
      i = static_cast<std::int32_t>(static_cast<std::uint32_t>(i) + 1u);
    }
    return Flow::Normal;
  }
};

// One inner axis: the body runs once per work-item id on that axis.
struct InnerNest final : StmtNode {
  int axis;
  StmtP body;
  Flow exec(ExecContext& ctx) const override {
    const int n = ctx.inner_dim[axis];
    ++ctx.inner_depth;
    for (int id = 0; id < n; ++id) {
      ctx.inner_id[axis] = id;
      if (!body) continue;
      const Flow f = body->exec(ctx);
      if (f == Flow::Return) {
        ctx.inner_id[axis] = 0;
        --ctx.inner_depth;
        return f;
      }
    }
    ctx.inner_id[axis] = 0;
    --ctx.inner_depth;
    return Flow::Normal;
  }
};

struct InnerReturnNode final : StmtNode {
  Flow exec(ExecContext&) const override { return Flow::InnerReturn; }
};

template <class T>
struct ReturnValue final : StmtNode {
  ExprP<T> value;
  explicit ReturnValue(ExprP<T> v) : value(std::move(v)) {}
  Flow exec(ExecContext& ctx) const override {
    slot_as<T>(ctx.ret) = value->eval(ctx);
    return Flow::Return;
  }
};

struct ReturnVoid final : StmtNode {
  Flow exec(ExecContext&) const override { return Flow::Return; }
};

template <class T>
struct EvalStmt final : StmtNode {
  ExprP<T> value;
  explicit EvalStmt(ExprP<T> v) : value(std::move(v)) {}
  Flow exec(ExecContext& ctx) const override {
    (void)value->eval(ctx);
    return Flow::Normal;
  }
};

}  // namespace

// -------------------------------------------------------------- helpers

constexpr std::size_t kMaxHelperArgs = 16;

struct ArgStore {
  virtual ~ArgStore() = default;
  virtual void store(ExecContext& ctx, Slot& out) const = 0;
};

template <class T>
struct TypedArg final : ArgStore {
  ExprP<T> value;
  explicit TypedArg(ExprP<T> v) : value(std::move(v)) {}
  void store(ExecContext& ctx, Slot& out) const override { slot_as<T>(out) = value->eval(ctx); }
};

struct HelperFn {
  std::string name;
  BaseType ret = BaseType::Void;
  std::vector<int> param_slots;
  std::vector<BaseType> param_types;
  StmtP body;
  bool lowering = false;

  void call(ExecContext& ctx, const std::vector<std::unique_ptr<ArgStore>>& args) const {
    Slot tmp[kMaxHelperArgs];
    for (std::size_t i = 0; i < args.size(); ++i) args[i]->store(ctx, tmp[i]);
    for (std::size_t i = 0; i < args.size(); ++i) ctx.locals[param_slots[i]] = tmp[i];
    std::memset(&ctx.ret, 0, sizeof ctx.ret);
    if (body) body->exec(ctx);
  }
};

namespace {

template <class T>
struct HelperCall final : Expr<T> {
  const HelperFn* fn;
  std::vector<std::unique_ptr<ArgStore>> args;
  T eval(ExecContext& ctx) const override {
    fn->call(ctx, args);
    return slot_as<T>(ctx.ret);
  }
};

struct HelperCallStmt final : StmtNode {
  const HelperFn* fn;
  std::vector<std::unique_ptr<ArgStore>> args;
  Flow exec(ExecContext& ctx) const override {
    fn->call(ctx, args);
    return Flow::Normal;
  }
};

// --------------------------------------------------------------- lowering

struct TypeError {
  std::string message;
  SourcePos pos;
};

struct Value {
  BaseType type = BaseType::Void;
  std::unique_ptr<AnyExpr> node;
  bool constant = false;
};

struct PlaceValue {
  BaseType type = BaseType::Int;
  std::unique_ptr<AnyPlace> place;
  int local_slot = -1;  // set for plain scalar locals
  bool is_const = false;
  std::string name;
};

struct Sym {
  enum Kind { Scalar, SharedScalar, Array, Buffer, Private } kind = Scalar;
  BaseType type = BaseType::Int;
  bool is_const = false;
  int index = 0;
  std::vector<int> extents;
  int size = 1;
  bool is_array = false;
};

template <class T>
ExprP<T> take(Value& v) {
  return ExprP<T>(static_cast<Expr<T>*>(v.node.release()));
}

template <class T>
PlaceP<T> take_place(PlaceValue& p) {
  return PlaceP<T>(static_cast<Place<T>*>(p.place.release()));
}

template <class T>
Value make_value(ExprP<T> e, bool constant) {
  return Value{base_of<T>, std::move(e), constant};
}

BaseType common_type(BaseType a, BaseType b) {
  if (a == BaseType::Double || b == BaseType::Double) return BaseType::Double;
  if (a == BaseType::Float || b == BaseType::Float) return BaseType::Float;
  return BaseType::Int;
}

class Lowerer {
 public:
  Lowerer(const lang::KernelAST& kernel, Program& prog) : kernel_(kernel), prog_(prog) {
    fold_ctx_.program = &prog_;
  }

  void run() {
    prog_.kernel_name = kernel_.name;
    scopes_.emplace_back();
    int buffers = 0;
    for (const auto& p : kernel_.params) {
      if (p.type == BaseType::Void) fail("parameter '" + p.name + "' has type void", p.pos);
      Sym s;
      s.type = p.type;
      s.is_const = (p.quals & lang::kQualConst) != 0;
      ParamBinding b;
      b.type = p.type;
      b.name = p.name;
      if (p.is_array_ref) {
        s.kind = Sym::Buffer;
        s.index = buffers++;
        b.is_buffer = true;
      } else {
        s.kind = Sym::Scalar;
        s.index = new_local();
      }
      b.index = s.index;
      prog_.params.push_back(b);
      scopes_.back()[p.name] = s;
    }
    prog_.buffer_count = static_cast<std::size_t>(buffers);
    prog_.body = kernel_.body ? lower_stmt(*kernel_.body) : std::make_unique<Block>();
    if (!prog_.body) prog_.body = std::make_unique<Block>();
  }

 private:
  [[noreturn]] void fail(std::string message, SourcePos pos) {
    throw TypeError{std::move(message), pos};
  }

  int new_local() { return static_cast<int>(prog_.local_slots++); }

  const Sym* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  struct ScopeGuard {
    Lowerer& l;
    explicit ScopeGuard(Lowerer& x) : l(x) { l.scopes_.emplace_back(); }
    ~ScopeGuard() { l.scopes_.pop_back(); }
  };

  // ----------------------------------------------------------- conversions

  template <class T>
  ExprP<T> coerce(Value v, SourcePos pos) {
    if (v.type == BaseType::Void) fail("void value used in an expression", pos);
    if (v.type == base_of<T>) return take<T>(v);
    const bool constant = v.constant;
    ExprP<T> out = dispatch(v.type, [&](auto tag) -> ExprP<T> {
      using From = typename decltype(tag)::type;
      return std::make_unique<Convert<T, From>>(take<From>(v));
    });
    return fold<T>(std::move(out), constant);
  }

  template <class T>
  ExprP<T> fold(ExprP<T> e, bool constant) {
    if (!constant) return e;
    try {
      return std::make_unique<Const<T>>(e->eval(fold_ctx_));
    } catch (const ExecutionError&) {
      return e;  // the fault is reported if the expression ever runs
    }
  }

  template <class T>
  Value folded(ExprP<T> e, bool constant) {
    return make_value<T>(fold<T>(std::move(e), constant), constant);
  }

  ExprP<std::int32_t> truth(Value v, SourcePos pos, bool negate = false) {
    if (v.type == BaseType::Void) fail("void value used as a condition", pos);
    const bool constant = v.constant;
    if (v.type == BaseType::Int && !negate) return take<std::int32_t>(v);
    ExprP<std::int32_t> out = dispatch(v.type, [&](auto tag) -> ExprP<std::int32_t> {
      using T = typename decltype(tag)::type;
      return std::make_unique<Truth<T>>(take<T>(v), negate);
    });
    return fold<std::int32_t>(std::move(out), constant);
  }

  template <class T>
  static const Const<T>* as_const(const ExprP<T>& e) {
    return dynamic_cast<const Const<T>*>(e.get());
  }

  // ----------------------------------------------------------- expressions

  Value lower_expr(const lang::Expr& e) {
    return std::visit(
        [&](const auto& n) -> Value {
          if constexpr (std::is_same_v<std::decay_t<decltype(n)>, lang::IndexExpr>) {
            return lower_index(e);
          } else {
            return lower_node(n, e.pos);
          }
        },
        e.node);
  }

  Value lower_node(const lang::NameExpr& n, SourcePos pos) {
    const Sym* s = lookup(n.name);
    if (!s) fail("'" + n.name + "' is not declared", pos);
    if (s->kind == Sym::Scalar) {
      return dispatch(s->type, [&](auto tag) {
        using T = typename decltype(tag)::type;
        return make_value<T>(std::make_unique<LoadLocal<T>>(s->index), false);
      });
    }
    PlaceValue p = place_for_name(n.name, pos);
    return load(std::move(p));
  }

  Value lower_node(const lang::IntLiteral& n, SourcePos) {
    return make_value<std::int32_t>(std::make_unique<Const<std::int32_t>>(n.value), true);
  }

  Value lower_node(const lang::FloatLiteral& n, SourcePos) {
    if (n.single) {
      return make_value<float>(std::make_unique<Const<float>>(static_cast<float>(n.value)), true);
    }
    return make_value<double>(std::make_unique<Const<double>>(n.value), true);
  }

  Value lower_node(const lang::BuiltinExpr& n, SourcePos) {
    using lang::Builtin;
    const int b = static_cast<int>(n.id);
    auto id = [&](auto node) { return make_value<std::int32_t>(std::move(node), false); };
    auto flag = [&](int v) {
      return make_value<std::int32_t>(std::make_unique<Const<std::int32_t>>(v), true);
    };
    switch (n.id) {
      case Builtin::InnerId0: case Builtin::InnerId1: case Builtin::InnerId2:
        return id(std::make_unique<WorkId<IdKind::Inner>>(b - static_cast<int>(Builtin::InnerId0)));
      case Builtin::OuterId0: case Builtin::OuterId1: case Builtin::OuterId2:
        return id(std::make_unique<WorkId<IdKind::Outer>>(b - static_cast<int>(Builtin::OuterId0)));
      case Builtin::GlobalId0: case Builtin::GlobalId1: case Builtin::GlobalId2:
        return id(
            std::make_unique<WorkId<IdKind::Global>>(b - static_cast<int>(Builtin::GlobalId0)));
      case Builtin::InnerDim0: case Builtin::InnerDim1: case Builtin::InnerDim2:
        return id(
            std::make_unique<WorkId<IdKind::InnerDim>>(b - static_cast<int>(Builtin::InnerDim0)));
      case Builtin::OuterDim0: case Builtin::OuterDim1: case Builtin::OuterDim2:
        return id(
            std::make_unique<WorkId<IdKind::OuterDim>>(b - static_cast<int>(Builtin::OuterDim0)));
      case Builtin::GlobalDim0: case Builtin::GlobalDim1: case Builtin::GlobalDim2:
        return id(std::make_unique<WorkId<IdKind::GlobalDim>>(
            b - static_cast<int>(Builtin::GlobalDim0)));
      case Builtin::Cpu: return flag(1);
      case Builtin::Gpu: return flag(0);
      case Builtin::OpenMP: return flag(1);
      case Builtin::OpenCL: return flag(0);
      case Builtin::Cuda: return flag(0);
    }
    return flag(0);
  }

  Value lower_index(const lang::Expr& e) {
    auto [name, indices] = index_chain(e);
    const Sym* s = lookup(name);
    if (s && s->kind == Sym::Buffer) {
      if (indices.size() != 1) fail("buffer '" + name + "' takes exactly one index", e.pos);
      auto idx = index_expr(*indices[0]);
      return dispatch(s->type, [&](auto tag) {
        using T = typename decltype(tag)::type;
        if (const auto* l = as_local<std::int32_t>(idx)) {
          return make_value<T>(std::make_unique<BufferLoadLocal<T>>(s->index, l->slot), false);
        }
        return make_value<T>(std::make_unique<BufferLoad<T>>(s->index, std::move(idx)), false);
      });
    }
    return load(place_for_index(e));
  }

  Value lower_node(const lang::UnaryExpr& n, SourcePos pos) {
    Value v = lower_expr(*n.operand);
    if (v.type == BaseType::Void) fail("void value used in an expression", pos);
    switch (n.op) {
      case lang::UnaryOp::Plus: return v;
      case lang::UnaryOp::Not: {
        const bool c = v.constant;
        return make_value<std::int32_t>(truth(std::move(v), pos, true), c);
      }
      case lang::UnaryOp::Neg: {
        const bool c = v.constant;
        return dispatch(v.type, [&](auto tag) {
          using T = typename decltype(tag)::type;
          return folded<T>(std::make_unique<Negate<T>>(take<T>(v)), c);
        });
      }
    }
    return v;
  }

  template <class T>
  static const LoadLocal<T>* as_local(const ExprP<T>& e) {
    return dynamic_cast<const LoadLocal<T>*>(e.get());
  }

  template <class T, class Op>
  ExprP<T> make_arith(ExprP<T> x, ExprP<T> y) {
    constexpr bool commutative = std::is_same_v<Op, OpAdd> || std::is_same_v<Op, OpMul>;
    if constexpr (commutative) {
      if (as_const<T>(x) && !as_const<T>(y)) std::swap(x, y);
    }
    if (const auto* k = as_const<T>(y)) {
      if (const auto* l = as_local<T>(x)) return std::make_unique<LocalOpConst<T, Op>>(l->slot, k->value);
      return std::make_unique<ArithConst<T, Op>>(std::move(x), k->value);
    }
    const auto* lx = as_local<T>(x);
    const auto* ly = as_local<T>(y);
    if (lx && ly) return std::make_unique<LocalOpLocal<T, Op>>(lx->slot, ly->slot);
    if (lx) return std::make_unique<LocalOpExpr<T, Op>>(lx->slot, std::move(y));
    if (ly) return std::make_unique<ExprOpLocal<T, Op>>(std::move(x), ly->slot);
    return std::make_unique<Arith<T, Op>>(std::move(x), std::move(y));
  }

  template <class Op>
  Value arith(Value a, Value b, BaseType t, SourcePos pos) {
    const bool c = a.constant && b.constant;
    return dispatch(t, [&](auto tag) {
      using T = typename decltype(tag)::type;
      auto x = coerce<T>(std::move(a), pos);
      auto y = coerce<T>(std::move(b), pos);
      if (c) return folded<T>(std::make_unique<Arith<T, Op>>(std::move(x), std::move(y)), true);
      return make_value<T>(make_arith<T, Op>(std::move(x), std::move(y)), false);
    });
  }

  template <class Op>
  Value compare(Value a, Value b, BaseType t, SourcePos pos) {
    const bool c = a.constant && b.constant;
    return dispatch(t, [&](auto tag) {
      using T = typename decltype(tag)::type;
      auto x = coerce<T>(std::move(a), pos);
      auto y = coerce<T>(std::move(b), pos);
      if (!c) {
        const auto* l = as_local<T>(x);
        const auto* k = as_const<T>(y);
        if (l && k) {
          return make_value<std::int32_t>(
              std::make_unique<CompareLocalConst<T, Op>>(l->slot, k->value), false);
        }
      }
      return folded<std::int32_t>(std::make_unique<Compare<T, Op>>(std::move(x), std::move(y)), c);
    });
  }

  Value binary(BinaryOp op, Value a, Value b, SourcePos pos) {
    if (a.type == BaseType::Void || b.type == BaseType::Void) {
      fail("void value used in an expression", pos);
    }
    const BaseType t = common_type(a.type, b.type);
    switch (op) {
      case BinaryOp::Add: return arith<OpAdd>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Sub: return arith<OpSub>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Mul: return arith<OpMul>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Div: return arith<OpDiv>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Mod:
        if (t != BaseType::Int) fail("operands of '%' must be int", pos);
        return arith<OpMod>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Lt: return compare<CmpLt>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Le: return compare<CmpLe>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Gt: return compare<CmpGt>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Ge: return compare<CmpGe>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Eq: return compare<CmpEq>(std::move(a), std::move(b), t, pos);
      case BinaryOp::Ne: return compare<CmpNe>(std::move(a), std::move(b), t, pos);
      case BinaryOp::And:
      case BinaryOp::Or: {
        const bool c = a.constant && b.constant;
        auto x = truth(std::move(a), pos);
        auto y = truth(std::move(b), pos);
        if (op == BinaryOp::And) {
          return folded<std::int32_t>(std::make_unique<LogicalAnd>(std::move(x), std::move(y)), c);
        }
        return folded<std::int32_t>(std::make_unique<LogicalOr>(std::move(x), std::move(y)), c);
      }
    }
    fail("unsupported operator", pos);
  }

  Value lower_node(const lang::BinaryExpr& n, SourcePos pos) {
    Value a = lower_expr(*n.lhs);
    Value b = lower_expr(*n.rhs);
    return binary(n.op, std::move(a), std::move(b), pos);
  }

  std::vector<std::unique_ptr<ArgStore>> helper_args(const HelperFn& fn,
                                                     const lang::CallExpr& n, SourcePos pos) {
    if (n.args.size() != fn.param_types.size()) {
      fail("'" + n.callee + "' expects " + std::to_string(fn.param_types.size()) +
               " argument(s)",
           pos);
    }
    std::vector<std::unique_ptr<ArgStore>> args;
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      Value v = lower_expr(*n.args[i]);
      args.push_back(dispatch(fn.param_types[i], [&](auto tag) -> std::unique_ptr<ArgStore> {
        using T = typename decltype(tag)::type;
        return std::make_unique<TypedArg<T>>(coerce<T>(std::move(v), n.args[i]->pos));
      }));
    }
    return args;
  }

  Value lower_node(const lang::CallExpr& n, SourcePos pos) {
    if (const HelperFn* fn = helper(n.callee, pos)) {
      if (fn->ret == BaseType::Void) {
        fail("'" + n.callee + "' returns void and cannot be used as a value", pos);
      }
      auto args = helper_args(*fn, n, pos);
      return dispatch(fn->ret, [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto call = std::make_unique<HelperCall<T>>();
        call->fn = fn;
        call->args = std::move(args);
        return make_value<T>(std::move(call), false);
      });
    }
    return intrinsic(n, pos);
  }

  Value intrinsic(const lang::CallExpr& n, SourcePos pos) {
    const std::string& f = n.callee;
    auto arity = [&](std::size_t k) {
      if (n.args.size() != k) {
        fail("'" + f + "' expects " + std::to_string(k) + " argument(s)", pos);
      }
    };
    if (f == "sqrt" || f == "fabs" || f == "exp") {
      arity(1);
      Value v = lower_expr(*n.args[0]);
      const bool c = v.constant;
      double (*fn)(double) = f == "sqrt"   ? static_cast<double (*)(double)>(std::sqrt)
                             : f == "fabs" ? static_cast<double (*)(double)>(std::fabs)
                                           : static_cast<double (*)(double)>(std::exp);
      return folded<double>(std::make_unique<UnaryMath>(fn, coerce<double>(std::move(v), pos)), c);
    }
    if (f == "min" || f == "max") {
      arity(2);
      Value a = lower_expr(*n.args[0]);
      Value b = lower_expr(*n.args[1]);
      if (a.type == BaseType::Void || b.type == BaseType::Void) {
        fail("void value used in an expression", pos);
      }
      const bool c = a.constant && b.constant;
      const bool is_max = f == "max";
      return dispatch(common_type(a.type, b.type), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto x = coerce<T>(std::move(a), pos);
        auto y = coerce<T>(std::move(b), pos);
        if (is_max) return folded<T>(std::make_unique<MinMax<T, true>>(std::move(x), std::move(y)), c);
        return folded<T>(std::make_unique<MinMax<T, false>>(std::move(x), std::move(y)), c);
      });
    }
    fail("unknown function '" + f + "'", pos);
  }

  // ------------------------------------------------------------------ places

  std::pair<std::string, std::vector<const lang::Expr*>> index_chain(const lang::Expr& e) {
    std::vector<const lang::Expr*> indices;
    const lang::Expr* cur = &e;
    while (const auto* ix = std::get_if<lang::IndexExpr>(&cur->node)) {
      indices.push_back(ix->index.get());
      cur = ix->base.get();
    }
    const auto* name = std::get_if<lang::NameExpr>(&cur->node);
    if (!name) fail("only named arrays and buffers can be indexed", e.pos);
    std::reverse(indices.begin(), indices.end());
    return {name->name, std::move(indices)};
  }

  ExprP<std::int32_t> index_expr(const lang::Expr& e) {
    Value v = lower_expr(e);
    if (v.type != BaseType::Int) fail("array index must be an int", e.pos);
    return take<std::int32_t>(v);
  }

  Value load(PlaceValue p) {
    return dispatch(p.type, [&](auto tag) {
      using T = typename decltype(tag)::type;
      return make_value<T>(std::make_unique<LoadPlace<T>>(take_place<T>(p)), false);
    });
  }

  PlaceValue place_for_name(const std::string& name, SourcePos pos) {
    const Sym* s = lookup(name);
    if (!s) fail("'" + name + "' is not declared", pos);
    PlaceValue p;
    p.type = s->type;
    p.is_const = s->is_const;
    p.name = name;
    switch (s->kind) {
      case Sym::Scalar:
        p.local_slot = s->index;
        p.place = dispatch(s->type, [&](auto tag) -> std::unique_ptr<AnyPlace> {
          using T = typename decltype(tag)::type;
          return std::make_unique<LocalPlace<T>>(s->index);
        });
        return p;
      case Sym::SharedScalar:
        p.place = dispatch(s->type, [&](auto tag) -> std::unique_ptr<AnyPlace> {
          using T = typename decltype(tag)::type;
          auto a = std::make_unique<ArenaPlace<T>>();
          a->offset = s->index;
          a->name = name;
          return a;
        });
        return p;
      case Sym::Private:
        if (s->is_array) fail("private array '" + name + "' must be indexed", pos);
        p.place = dispatch(s->type, [&](auto tag) -> std::unique_ptr<AnyPlace> {
          using T = typename decltype(tag)::type;
          auto a = std::make_unique<PrivatePlace<T>>();
          a->offset = s->index;
          a->size = s->size;
          a->name = name;
          return a;
        });
        return p;
      case Sym::Array:
      case Sym::Buffer: fail("'" + name + "' is an array and must be indexed", pos);
    }
    fail("'" + name + "' cannot be used here", pos);
  }

  PlaceValue place_for_index(const lang::Expr& e) {
    auto [name, indices] = index_chain(e);
    const Sym* s = lookup(name);
    if (!s) fail("'" + name + "' is not declared", e.pos);
    PlaceValue p;
    p.type = s->type;
    p.is_const = s->is_const;
    p.name = name;
    switch (s->kind) {
      case Sym::Buffer: {
        if (indices.size() != 1) fail("buffer '" + name + "' takes exactly one index", e.pos);
        auto idx = index_expr(*indices[0]);
        p.place = dispatch(s->type, [&](auto tag) -> std::unique_ptr<AnyPlace> {
          using T = typename decltype(tag)::type;
          return std::make_unique<BufferPlace<T>>(s->index, std::move(idx));
        });
        return p;
      }
      case Sym::Array: {
        if (indices.size() != s->extents.size()) {
          fail("array '" + name + "' takes " + std::to_string(s->extents.size()) + " index(es)",
               e.pos);
        }
        std::vector<ExprP<std::int32_t>> idx;
        for (const auto* i : indices) idx.push_back(index_expr(*i));
        p.place = dispatch(s->type, [&](auto tag) -> std::unique_ptr<AnyPlace> {
          using T = typename decltype(tag)::type;
          auto a = std::make_unique<ArenaPlace<T>>();
          a->offset = s->index;
          a->extents = s->extents;
          a->indices = std::move(idx);
          a->name = name;
          return a;
        });
        return p;
      }
      case Sym::Private: {
        if (!s->is_array || indices.size() != 1) {
          fail("'" + name + "' takes " + std::string(s->is_array ? "exactly one index" : "no index"),
               e.pos);
        }
        auto idx = index_expr(*indices[0]);
        p.place = dispatch(s->type, [&](auto tag) -> std::unique_ptr<AnyPlace> {
          using T = typename decltype(tag)::type;
          auto a = std::make_unique<PrivatePlace<T>>();
          a->offset = s->index;
          a->size = s->size;
          a->index = std::move(idx);
          a->name = name;
          return a;
        });
        return p;
      }
      case Sym::Scalar:
      case Sym::SharedScalar: fail("'" + name + "' is not an array", e.pos);
    }
    fail("'" + name + "' cannot be indexed", e.pos);
  }

  PlaceValue lower_place(const lang::Expr& e) {
    if (const auto* n = std::get_if<lang::NameExpr>(&e.node)) return place_for_name(n->name, e.pos);
    if (std::holds_alternative<lang::IndexExpr>(e.node)) return place_for_index(e);
    fail("expression is not assignable", e.pos);
  }

  StmtP assign(PlaceValue target, Value v, SourcePos pos) {
    return dispatch(target.type, [&](auto tag) -> StmtP {
      using T = typename decltype(tag)::type;
      auto value = coerce<T>(std::move(v), pos);
      if (target.local_slot >= 0) {
        return std::make_unique<AssignLocal<T>>(target.local_slot, std::move(value));
      }
      return std::make_unique<AssignPlace<T>>(take_place<T>(target), std::move(value));
    });
  }

  // --------------------------------------------------------------- helpers

  const HelperFn* helper(const std::string& name, SourcePos pos) {
    auto it = helpers_.find(name);
    if (it != helpers_.end()) {
      if (it->second->lowering) fail("recursive call to '" + name + "'", pos);
      return it->second;
    }
    const lang::FunctionDef* def = nullptr;
    for (const auto& h : kernel_.helpers) {
      if (h->name == name) def = h.get();
    }
    if (!def) return nullptr;

    prog_.helpers.push_back(std::make_unique<HelperFn>());
    HelperFn* fn = prog_.helpers.back().get();
    helpers_[name] = fn;
    fn->name = name;
    fn->ret = def->return_type;
    fn->lowering = true;
    if (def->params.size() > kMaxHelperArgs) {
      fail("'" + name + "' has more than " + std::to_string(kMaxHelperArgs) + " parameters",
           def->pos);
    }

    auto saved_scopes = std::exchange(scopes_, {});
    const HelperFn* saved_fn = std::exchange(current_fn_, fn);
    scopes_.emplace_back();
    for (const auto& p : def->params) {
      if (p.is_array_ref) fail("helper parameters must be scalars", p.pos);
      if (p.type == BaseType::Void) fail("parameter '" + p.name + "' has type void", p.pos);
      Sym s;
      s.kind = Sym::Scalar;
      s.type = p.type;
      s.is_const = (p.quals & lang::kQualConst) != 0;
      s.index = new_local();
      fn->param_slots.push_back(s.index);
      fn->param_types.push_back(p.type);
      scopes_.back()[p.name] = s;
    }
    if (def->body) fn->body = lower_stmt(*def->body);
    scopes_ = std::move(saved_scopes);
    current_fn_ = saved_fn;
    fn->lowering = false;
    return fn;
  }

  // ------------------------------------------------------------ statements

  StmtP lower_stmt(const lang::Stmt& s) {
    return std::visit([&](const auto& n) { return lower_stmt_node(n, s.pos); }, s.node);
  }

  StmtP lower_scoped(const lang::Stmt* s) {
    if (!s) return nullptr;
    ScopeGuard scope(*this);
    return lower_stmt(*s);
  }

  StmtP lower_stmt_node(const lang::DeclStmt& d, SourcePos pos) {
    if (d.type == BaseType::Void) fail("variables cannot have type void", pos);
    auto block = std::make_unique<Block>();
    const bool shared = (d.quals & lang::kQualShared) != 0;
    for (const auto& v : d.vars) {
      Sym s;
      s.type = d.type;
      s.is_const = (d.quals & lang::kQualConst) != 0;
      if (!v.extents.empty()) {
        std::int64_t count = 1;
        for (int e : v.extents) {
          count *= e;
          if (count > (1 << 24)) fail("array '" + v.name + "' is too large", v.pos);
        }
        if (v.init) fail("array '" + v.name + "' cannot have an initializer", v.pos);
        s.kind = Sym::Array;
        s.extents = v.extents;
        s.index = static_cast<int>(prog_.arena_slots);
        prog_.arena_slots += static_cast<std::size_t>(count);
        if (!shared) block->stmts.push_back(std::make_unique<ZeroArena>(s.index, static_cast<int>(count)));
      } else if (shared) {
        if (v.init) fail("shared variable '" + v.name + "' cannot have an initializer", v.pos);
        s.kind = Sym::SharedScalar;
        s.index = static_cast<int>(prog_.arena_slots++);
      } else {
        if (s.is_const && !v.init) fail("const '" + v.name + "' must be initialized", v.pos);
        s.kind = Sym::Scalar;
        s.index = new_local();
        Value init = v.init ? lower_expr(*v.init)
                            : make_value<std::int32_t>(std::make_unique<Const<std::int32_t>>(0), true);
        PlaceValue target;
        target.type = s.type;
        target.local_slot = s.index;
        block->stmts.push_back(assign(std::move(target), std::move(init), v.pos));
      }
      scopes_.back()[v.name] = s;
    }
    if (block->stmts.empty()) return nullptr;
    if (block->stmts.size() == 1) return std::move(block->stmts.front());
    return block;
  }

  StmtP lower_stmt_node(const lang::PrivateDeclStmt& d, SourcePos pos) {
    if (d.type == BaseType::Void) fail("private variables cannot have type void", pos);
    Sym s;
    s.kind = Sym::Private;
    s.type = d.type;
    s.size = d.size;
    s.is_array = d.is_array;
    s.index = static_cast<int>(prog_.private_stride);
    prog_.private_stride += static_cast<std::size_t>(d.size);
    scopes_.back()[d.name] = s;
    return nullptr;
  }

  static const char* assign_op_text(lang::AssignOp op) {
    switch (op) {
      case lang::AssignOp::Set: return "=";
      case lang::AssignOp::Add: return "+=";
      case lang::AssignOp::Sub: return "-=";
      case lang::AssignOp::Mul: return "*=";
      case lang::AssignOp::Div: return "/=";
      case lang::AssignOp::Mod: return "%=";
    }
    return "=";
  }

  StmtP compound(const lang::Expr& target_expr, BinaryOp op, Value rhs, const char* what,
                 SourcePos pos) {
    PlaceValue target = lower_place(target_expr);
    if (target.is_const) fail("cannot assign to const '" + target.name + "'", pos);
    if (op == BinaryOp::Mod && (target.type != BaseType::Int || rhs.type != BaseType::Int)) {
      fail(std::string("operands of '") + what + "' must be int", pos);
    }
    if (target.local_slot >= 0 && rhs.type != BaseType::Void &&
        common_type(target.type, rhs.type) == target.type) {
      const int slot = target.local_slot;
      return dispatch(target.type, [&](auto tag) -> StmtP {
        using T = typename decltype(tag)::type;
        auto v = coerce<T>(std::move(rhs), pos);
        switch (op) {
          case BinaryOp::Add: return std::make_unique<AccumulateLocal<T, OpAdd>>(slot, std::move(v));
          case BinaryOp::Sub: return std::make_unique<AccumulateLocal<T, OpSub>>(slot, std::move(v));
          case BinaryOp::Mul: return std::make_unique<AccumulateLocal<T, OpMul>>(slot, std::move(v));
          case BinaryOp::Div: return std::make_unique<AccumulateLocal<T, OpDiv>>(slot, std::move(v));
          default: return std::make_unique<AccumulateLocal<T, OpMod>>(slot, std::move(v));
        }
      });
    }
    Value current = target.local_slot >= 0
                        ? dispatch(target.type,
                                   [&](auto tag) {
                                     using T = typename decltype(tag)::type;
                                     return make_value<T>(
                                         std::make_unique<LoadLocal<T>>(target.local_slot), false);
                                   })
                        : load(lower_place(target_expr));
    Value combined = binary(op, std::move(current), std::move(rhs), pos);
    return assign(std::move(target), std::move(combined), pos);
  }

  StmtP lower_stmt_node(const lang::AssignStmt& a, SourcePos pos) {
    Value rhs = lower_expr(*a.value);
    if (a.op == lang::AssignOp::Set) {
      PlaceValue target = lower_place(*a.target);
      if (target.is_const) fail("cannot assign to const '" + target.name + "'", pos);
      return assign(std::move(target), std::move(rhs), pos);
    }
    BinaryOp op = BinaryOp::Add;
    switch (a.op) {
      case lang::AssignOp::Add: op = BinaryOp::Add; break;
      case lang::AssignOp::Sub: op = BinaryOp::Sub; break;
      case lang::AssignOp::Mul: op = BinaryOp::Mul; break;
      case lang::AssignOp::Div: op = BinaryOp::Div; break;
      case lang::AssignOp::Mod: op = BinaryOp::Mod; break;
      case lang::AssignOp::Set: break;
    }
    return compound(*a.target, op, std::move(rhs), assign_op_text(a.op), pos);
  }

  StmtP lower_stmt_node(const lang::IncDecStmt& s, SourcePos pos) {
    Value one = make_value<std::int32_t>(std::make_unique<Const<std::int32_t>>(1), true);
    return compound(*s.target, s.increment ? BinaryOp::Add : BinaryOp::Sub, std::move(one),
                    s.increment ? "++" : "--", pos);
  }

  StmtP lower_stmt_node(const lang::BlockStmt& b, SourcePos) {
    ScopeGuard scope(*this);
    auto block = std::make_unique<Block>();
    for (const auto& s : b.stmts) {
      if (auto node = lower_stmt(*s)) block->stmts.push_back(std::move(node));
    }
    return block;
  }

  StmtP lower_stmt_node(const lang::IfStmt& s, SourcePos pos) {
    auto node = std::make_unique<IfNode>();
    node->cond = truth(lower_expr(*s.cond), pos);
    node->then_branch = lower_scoped(s.then_branch.get());
    node->else_branch = lower_scoped(s.else_branch.get());
    // Constant conditions such as `if(occaCPU)` keep only the taken branch.
    if (const auto* k = as_const<std::int32_t>(node->cond)) {
      return k->value != 0 ? std::move(node->then_branch) : std::move(node->else_branch);
    }
    return node;
  }

  // Recognizes `i < K` / `i <= K` with `i++` / `i += 1` on an int local and
  // a constant K.
  StmtP counted_for(const lang::ForStmt& f, StmtP& init, SourcePos) {
    if (!f.cond || !f.update) return nullptr;
    const lang::Expr* counter = nullptr;
    if (const auto* inc = std::get_if<lang::IncDecStmt>(&f.update->node)) {
      if (inc->increment) counter = inc->target.get();
    } else if (const auto* as = std::get_if<lang::AssignStmt>(&f.update->node)) {
      const auto* one = std::get_if<lang::IntLiteral>(&as->value->node);
      if (as->op == lang::AssignOp::Add && one && one->value == 1) counter = as->target.get();
    }
    const auto* name = counter ? std::get_if<lang::NameExpr>(&counter->node) : nullptr;
    const auto* cmp = std::get_if<lang::BinaryExpr>(&f.cond->node);
    if (!name || !cmp || (cmp->op != BinaryOp::Lt && cmp->op != BinaryOp::Le)) return nullptr;
    const auto* lhs = std::get_if<lang::NameExpr>(&cmp->lhs->node);
    if (!lhs || lhs->name != name->name) return nullptr;
    const Sym* sym = lookup(name->name);
    if (!sym || sym->kind != Sym::Scalar || sym->type != BaseType::Int || sym->is_const) {
      return nullptr;
    }
    Value limit = lower_expr(*cmp->rhs);
    if (!limit.constant || limit.type != BaseType::Int) return nullptr;
    auto k = take<std::int32_t>(limit);
    const auto* kc = as_const<std::int32_t>(k);
    if (!kc) return nullptr;
    auto node = std::make_unique<CountedFor>();
    node->init = std::move(init);
    node->slot = sym->index;
    node->limit = kc->value;
    node->inclusive = cmp->op == BinaryOp::Le;
    node->body = lower_scoped(f.body.get());
    return node;
  }

  StmtP lower_stmt_node(const lang::ForStmt& f, SourcePos pos) {
    ScopeGuard scope(*this);
    StmtP init = f.init ? lower_stmt(*f.init) : nullptr;
    if (auto counted = counted_for(f, init, pos)) return counted;
    auto node = std::make_unique<ForNode>();
    node->init = std::move(init);
    if (f.cond) node->cond = truth(lower_expr(*f.cond), pos);
    if (f.update) node->update = lower_stmt(*f.update);
    node->body = lower_scoped(f.body.get());
    return node;
  }

  StmtP lower_stmt_node(const lang::LoopNestStmt& n, SourcePos) {
    if (n.level == lang::NestLevel::Outer) return lower_scoped(n.body.get());
    auto node = std::make_unique<InnerNest>();
    node->axis = n.axis;
    node->body = lower_scoped(n.body.get());
    return node;
  }

  StmtP lower_stmt_node(const lang::BarrierStmt&, SourcePos) { return nullptr; }

  StmtP lower_stmt_node(const lang::InnerReturnStmt&, SourcePos) {
    return std::make_unique<InnerReturnNode>();
  }

  StmtP lower_stmt_node(const lang::ReturnStmt& r, SourcePos pos) {
    if (!current_fn_) fail("return is only allowed inside a helper function", pos);
    if (current_fn_->ret == BaseType::Void) {
      if (r.value) fail("void function '" + current_fn_->name + "' cannot return a value", pos);
      return std::make_unique<ReturnVoid>();
    }
    if (!r.value) fail("function '" + current_fn_->name + "' must return a value", pos);
    Value v = lower_expr(*r.value);
    return dispatch(current_fn_->ret, [&](auto tag) -> StmtP {
      using T = typename decltype(tag)::type;
      return std::make_unique<ReturnValue<T>>(coerce<T>(std::move(v), pos));
    });
  }

  StmtP lower_stmt_node(const lang::ExprStmt& s, SourcePos pos) {
    const auto* call = std::get_if<lang::CallExpr>(&s.expr->node);
    if (!call) fail("expression statement has no effect", pos);
    if (const HelperFn* fn = helper(call->callee, pos)) {
      auto node = std::make_unique<HelperCallStmt>();
      node->fn = fn;
      node->args = helper_args(*fn, *call, pos);
      return node;
    }
    Value v = intrinsic(*call, pos);
    return dispatch(v.type, [&](auto tag) -> StmtP {
      using T = typename decltype(tag)::type;
      return std::make_unique<EvalStmt<T>>(take<T>(v));
    });
  }

  StmtP lower_stmt_node(const lang::EmptyStmt&, SourcePos) { return nullptr; }

  const lang::KernelAST& kernel_;
  Program& prog_;
  ExecContext fold_ctx_;
  std::vector<std::map<std::string, Sym>> scopes_;
  std::map<std::string, HelperFn*> helpers_;
  const HelperFn* current_fn_ = nullptr;
};

}  // namespace

Program::Program() = default;
Program::~Program() = default;

std::unique_ptr<Program> lower(const lang::KernelAST& kernel, std::vector<lang::Diagnostic>& diags) {
  auto prog = std::make_unique<Program>();
  try {
    Lowerer(kernel, *prog).run();
  } catch (const TypeError& e) {
    diags.push_back({lang::Severity::Error, "T1", e.message, e.pos});
    return nullptr;
  }
  return prog;
}

}  // namespace occakit::engine::detail
