#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "occakit/lang/token.hpp"

namespace occakit::lang {

enum class BaseType { Int, Float, Double, Void };

std::string_view to_string(BaseType t);

// Variable attributes. `Const` covers both `const` and occaConst.
enum Qualifier : unsigned {
  kQualNone = 0,
  kQualShared = 1u << 0,
  kQualPointer = 1u << 1,
  kQualConstant = 1u << 2,
  kQualVariable = 1u << 3,
  kQualRestrict = 1u << 4,
  kQualVolatile = 1u << 5,
  kQualConst = 1u << 6,
  kQualAligned = 1u << 7,
  kQualFunctionShared = 1u << 8,
};

enum class Builtin {
  InnerId0, InnerId1, InnerId2,
  OuterId0, OuterId1, OuterId2,
  GlobalId0, GlobalId1, GlobalId2,
  InnerDim0, InnerDim1, InnerDim2,
  OuterDim0, OuterDim1, OuterDim2,
  GlobalDim0, GlobalDim1, GlobalDim2,
  Cpu, Gpu, OpenMP, OpenCL, Cuda,
};

std::optional<Builtin> builtin_from_keyword(std::string_view keyword);
std::string_view builtin_name(Builtin b);

inline bool is_inner_or_global_id(Builtin b) {
  return (b >= Builtin::InnerId0 && b <= Builtin::InnerId2) ||
         (b >= Builtin::GlobalId0 && b <= Builtin::GlobalId2);
}

// ---------------------------------------------------------------- expressions

enum class UnaryOp { Neg, Not, Plus };
enum class BinaryOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

std::string_view to_string(BinaryOp op);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct NameExpr {
  std::string name;
};
struct IntLiteral {
  std::int32_t value = 0;
};
struct FloatLiteral {
  double value = 0.0;
  bool single = false;  // `1.5f`
};
struct BuiltinExpr {
  Builtin id;
};
struct IndexExpr {
  ExprPtr base;
  ExprPtr index;
};
struct UnaryExpr {
  UnaryOp op;
  ExprPtr operand;
};
struct BinaryExpr {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct CallExpr {
  std::string callee;
  std::vector<ExprPtr> args;
  bool passes_info = false;  // leading occaFunctionInfo argument
};

struct Expr {
  SourcePos pos;
  std::variant<NameExpr, IntLiteral, FloatLiteral, BuiltinExpr, IndexExpr, UnaryExpr, BinaryExpr,
               CallExpr>
      node;
};

// ----------------------------------------------------------------- statements

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Declarator {
  std::string name;
  std::vector<int> extents;  // array extents, outermost first
  ExprPtr init;
  SourcePos pos;
};

struct DeclStmt {
  unsigned quals = kQualNone;
  BaseType type = BaseType::Int;
  std::vector<Declarator> vars;
};

// occaPrivate(type, name) / occaPrivateArray(type, name, size)
struct PrivateDeclStmt {
  BaseType type = BaseType::Int;
  std::string name;
  int size = 1;
  bool is_array = false;
};

enum class AssignOp { Set, Add, Sub, Mul, Div, Mod };

struct AssignStmt {
  AssignOp op = AssignOp::Set;
  ExprPtr target;
  ExprPtr value;
};

struct IncDecStmt {
  ExprPtr target;
  bool increment = true;
};

struct BlockStmt {
  std::vector<StmtPtr> stmts;
};

struct IfStmt {
  ExprPtr cond;
  StmtPtr then_branch;
  StmtPtr else_branch;  // may be null
};

struct ForStmt {
  StmtPtr init;    // DeclStmt, AssignStmt or null
  ExprPtr cond;    // null means "forever"
  StmtPtr update;  // AssignStmt, IncDecStmt or null
  StmtPtr body;
};

enum class NestLevel { Outer, Inner };

// One axis of the explicit work-group (outer) or work-item (inner) loops.
// Composite keywords such as occaGlobalFor0 are desugared into chains.
struct LoopNestStmt {
  NestLevel level = NestLevel::Outer;
  int axis = 0;
  StmtPtr body;
};

enum class Fence { Local, Global };

struct BarrierStmt {
  Fence fence = Fence::Local;
};

struct InnerReturnStmt {};

struct ReturnStmt {
  ExprPtr value;  // may be null
};

struct ExprStmt {
  ExprPtr expr;
};

struct EmptyStmt {};

struct Stmt {
  SourcePos pos;
  std::variant<DeclStmt, PrivateDeclStmt, AssignStmt, IncDecStmt, BlockStmt, IfStmt, ForStmt,
               LoopNestStmt, BarrierStmt, InnerReturnStmt, ReturnStmt, ExprStmt, EmptyStmt>
      node;
};

// ------------------------------------------------------------------ functions

struct Param {
  unsigned quals = kQualNone;
  BaseType type = BaseType::Int;
  bool is_array_ref = false;  // declared with `*`
  std::string name;
  SourcePos pos;
};

// occaFunction helper.
struct FunctionDef {
  std::string name;
  BaseType return_type = BaseType::Void;
  bool takes_info = false;  // leading occaFunctionInfoArg
  std::vector<Param> params;
  StmtPtr body;
  SourcePos pos;
};

struct KernelAST {
  std::string name;
  // Excludes the occaKernelInfoArg placeholder, which must come first in the
  // source and is supplied by the runtime.
  std::vector<Param> params;
  StmtPtr body;
  std::vector<std::shared_ptr<const FunctionDef>> helpers;
  SourcePos pos;
};

}  // namespace occakit::lang
