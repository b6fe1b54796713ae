#include "occakit/lang/validate.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

namespace occakit::lang {
namespace {

struct Intrinsic {
  std::string_view name;
  std::size_t arity;
};

constexpr Intrinsic kIntrinsics[] = {
    {"sqrt", 1}, {"fabs", 1}, {"exp", 1}, {"min", 2}, {"max", 2}};

const Intrinsic* find_intrinsic(std::string_view name) {
  for (const auto& i : kIntrinsics) {
    if (i.name == name) return &i;
  }
  return nullptr;
}

enum class VarKind { Scalar, Array, Private, Pointer };

class Validator {
 public:
  explicit Validator(const KernelAST& kernel) : kernel_(kernel) {
    for (const auto& h : kernel.helpers) helpers_[h->name] = h.get();
  }

  std::vector<Diagnostic> run() {
    check_helpers_acyclic();
    for (const auto& h : kernel_.helpers) check_function(*h);

    in_helper_ = false;
    push_scope();
    for (const auto& p : kernel_.params) declare(p.name, param_kind(p), p.pos);
    // The kernel body braces share the parameter scope.
    if (const auto* block = std::get_if<BlockStmt>(&kernel_.body->node)) {
      for (const auto& s : block->stmts) stmt(*s);
    } else {
      stmt(*kernel_.body);
    }
    pop_scope();
    return std::move(diags_);
  }

 private:
  // -------------------------------------------------------------- reporting
  void error(SourcePos pos, std::string code, std::string message) {
    diags_.push_back({Severity::Error, std::move(code), std::move(message), pos});
  }

  // ----------------------------------------------------------------- scopes
  static VarKind param_kind(const Param& p) {
    return p.is_array_ref ? VarKind::Pointer : VarKind::Scalar;
  }

  void push_scope() { scopes_.emplace_back(); }
  void pop_scope() { scopes_.pop_back(); }

  void declare(const std::string& name, VarKind kind, SourcePos pos) {
    auto& scope = scopes_.back();
    if (scope.contains(name)) {
      error(pos, "S2", "'" + name + "' is already declared in this scope");
      return;
    }
    if (helpers_.contains(name) || find_intrinsic(name) != nullptr) {
      error(pos, "S2", "'" + name + "' shadows a function");
      return;
    }
    scope.emplace(name, kind);
  }

  const VarKind* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (auto f = it->find(name); f != it->end()) return &f->second;
    }
    return nullptr;
  }

  bool in_inner() const { return inner_depth_ > 0; }
  // Inside at least one work-group loop but not inside a work-item loop.
  bool at_outer_scope() const { return outer_depth_ > 0 && inner_depth_ == 0; }

  // ------------------------------------------------------------- functions
  void check_function(const FunctionDef& fn) {
    in_helper_ = true;
    push_scope();
    for (const auto& p : fn.params) {
      if (p.is_array_ref) {
        error(p.pos, "S3", "helper '" + fn.name + "' takes an array; only scalar parameters are supported");
      }
      declare(p.name, param_kind(p), p.pos);
    }
    if (const auto* block = std::get_if<BlockStmt>(&fn.body->node)) {
      for (const auto& s : block->stmts) stmt(*s);
    }
    pop_scope();
    in_helper_ = false;
  }

  void collect_calls(const Stmt& s, std::set<std::string>& out) const;
  void collect_calls(const Expr& e, std::set<std::string>& out) const;

  void check_helpers_acyclic() {
    std::map<std::string, std::set<std::string>> calls;
    for (const auto& h : kernel_.helpers) collect_calls(*h->body, calls[h->name]);
    // Depth-first search with colouring; report each helper on a cycle once.
    std::map<std::string, int> colour;
    std::set<std::string> reported;
    auto visit = [&](auto&& self, const std::string& name) -> void {
      colour[name] = 1;
      for (const auto& callee : calls[name]) {
        if (!helpers_.contains(callee)) continue;
        if (colour[callee] == 1) {
          if (reported.insert(callee).second) {
            error(helpers_.at(callee)->pos, "S3",
                  "helper '" + callee + "' is recursive; recursion is not supported");
          }
        } else if (colour[callee] == 0) {
          self(self, callee);
        }
      }
      colour[name] = 2;
    };
    for (const auto& h : kernel_.helpers) {
      if (colour[h->name] == 0) visit(visit, h->name);
    }
  }

  // ------------------------------------------------------------ statements
  void stmt(const Stmt& s) {
    std::visit([&](const auto& node) { visit_stmt(s, node); }, s.node);
  }

  void visit_stmt(const Stmt& s, const DeclStmt& d) {
    if ((d.quals & kQualShared) && !at_outer_scope()) {
      error(s.pos, "V2", "occaShared declarations must appear at outer-loop scope");
    }
    for (const auto& v : d.vars) {
      if (v.init) expr(*v.init);
      declare(v.name, v.extents.empty() ? VarKind::Scalar : VarKind::Array, v.pos);
    }
  }

  void visit_stmt(const Stmt& s, const PrivateDeclStmt& d) {
    if (in_helper_ || !at_outer_scope()) {
      error(s.pos, "V2", "occaPrivate declarations must appear at outer-loop scope");
    }
    declare(d.name, VarKind::Private, s.pos);
  }

  void visit_stmt(const Stmt&, const AssignStmt& a) {
    target(*a.target);
    expr(*a.value);
  }

  void visit_stmt(const Stmt&, const IncDecStmt& a) { target(*a.target); }

  void visit_stmt(const Stmt&, const BlockStmt& b) {
    push_scope();
    for (const auto& s : b.stmts) stmt(*s);
    pop_scope();
  }

  void visit_stmt(const Stmt&, const IfStmt& s) {
    expr(*s.cond);
    scoped(*s.then_branch);
    if (s.else_branch) scoped(*s.else_branch);
  }

  void visit_stmt(const Stmt&, const ForStmt& f) {
    push_scope();
    if (f.init) stmt(*f.init);
    if (f.cond) expr(*f.cond);
    if (f.update) stmt(*f.update);
    scoped(*f.body);
    pop_scope();
  }

  void visit_stmt(const Stmt& s, const LoopNestStmt& n) {
    if (in_helper_) {
      error(s.pos, "N1", "loop nests are not allowed in helper functions");
    } else if (n.level == NestLevel::Outer) {
      if (in_inner()) {
        error(s.pos, "N1", "outer loop nested inside an inner loop");
      } else if (n.axis >= outer_axis_) {
        error(s.pos, "N1", "outer loop axes must strictly descend");
      }
      if (n.axis == 2) {
        diags_.push_back({Severity::Warning, "W1",
                          "outer axis 2 is degenerate and always has extent 1", s.pos});
      }
    } else {
      if (outer_depth_ == 0) {
        error(s.pos, "N1", "inner loop outside of any outer loop");
      } else if (n.axis >= inner_axis_) {
        error(s.pos, "N1", "inner loop axes must strictly descend");
      }
    }

    int& depth = n.level == NestLevel::Outer ? outer_depth_ : inner_depth_;
    int& axis = n.level == NestLevel::Outer ? outer_axis_ : inner_axis_;
    const int saved_axis = axis;
    ++depth;
    axis = n.axis;
    scoped(*n.body);
    axis = saved_axis;
    --depth;
  }

  void visit_stmt(const Stmt& s, const BarrierStmt&) {
    if (in_inner()) {
      error(s.pos, "V1", "barrier inside an inner loop; split the inner loop at the barrier");
    } else if (!at_outer_scope()) {
      error(s.pos, "V1", "barrier must appear inside an outer loop");
    }
  }

  void visit_stmt(const Stmt& s, const InnerReturnStmt&) {
    if (!in_inner()) error(s.pos, "V4", "occaInnerReturn outside of an inner loop");
  }

  void visit_stmt(const Stmt& s, const ReturnStmt& r) {
    if (!in_helper_) error(s.pos, "S4", "return is only allowed in helper functions");
    if (r.value) expr(*r.value);
  }

  void visit_stmt(const Stmt&, const ExprStmt& e) { expr(*e.expr); }
  void visit_stmt(const Stmt&, const EmptyStmt&) {}

  void scoped(const Stmt& s) {
    push_scope();
    stmt(s);
    pop_scope();
  }

  // ----------------------------------------------------------- expressions
  void target(const Expr& e) {
    if (const auto* b = std::get_if<BuiltinExpr>(&e.node)) {
      error(e.pos, "V6", "cannot assign to builtin " + std::string(builtin_name(b->id)));
      return;
    }
    expr(e);
  }

  void expr(const Expr& e) {
    std::visit([&](const auto& node) { visit_expr(e, node); }, e.node);
  }

  void visit_expr(const Expr& e, const NameExpr& n) {
    const VarKind* kind = lookup(n.name);
    if (kind == nullptr) {
      diags_.push_back({Severity::Warning, "S1",
                        "use of undeclared name '" + n.name + "'; it must be supplied as a define",
                        e.pos});
      return;
    }
    if (*kind == VarKind::Private && !in_inner()) {
      error(e.pos, "V3", "private variable '" + n.name + "' used outside of an inner loop");
    }
  }

  void visit_expr(const Expr&, const IntLiteral&) {}
  void visit_expr(const Expr&, const FloatLiteral&) {}

  void visit_expr(const Expr& e, const BuiltinExpr& b) {
    if (is_inner_or_global_id(b.id) && !in_inner() && !in_helper_) {
      error(e.pos, "V5",
            std::string(builtin_name(b.id)) + " is only defined inside an inner loop");
    }
  }

  void visit_expr(const Expr&, const IndexExpr& ix) {
    expr(*ix.base);
    expr(*ix.index);
  }

  void visit_expr(const Expr&, const UnaryExpr& u) { expr(*u.operand); }

  void visit_expr(const Expr&, const BinaryExpr& b) {
    expr(*b.lhs);
    expr(*b.rhs);
  }

  void visit_expr(const Expr& e, const CallExpr& c) {
    for (const auto& a : c.args) expr(*a);
    if (const auto* intrinsic = find_intrinsic(c.callee)) {
      if (c.passes_info) {
        error(e.pos, "S3", "intrinsic '" + c.callee + "' does not take occaFunctionInfo");
      }
      if (c.args.size() != intrinsic->arity) {
        error(e.pos, "S3", "'" + c.callee + "' expects " + std::to_string(intrinsic->arity) +
                               " argument(s)");
      }
      return;
    }
    auto it = helpers_.find(c.callee);
    if (it == helpers_.end()) {
      error(e.pos, "S3", "call to unknown function '" + c.callee + "'");
      return;
    }
    const FunctionDef& fn = *it->second;
    if (fn.takes_info != c.passes_info) {
      error(e.pos, "S3",
            fn.takes_info ? "'" + c.callee + "' must be called with occaFunctionInfo"
                          : "'" + c.callee + "' does not take occaFunctionInfo");
    }
    if (fn.params.size() != c.args.size()) {
      error(e.pos, "S3", "'" + c.callee + "' expects " + std::to_string(fn.params.size()) +
                             " argument(s)");
    }
  }

  const KernelAST& kernel_;
  std::map<std::string, const FunctionDef*> helpers_;
  std::vector<std::map<std::string, VarKind>> scopes_;
  std::vector<Diagnostic> diags_;
  int outer_depth_ = 0;
  int inner_depth_ = 0;
  int outer_axis_ = 3;
  int inner_axis_ = 3;
  bool in_helper_ = false;
};

void Validator::collect_calls(const Expr& e, std::set<std::string>& out) const {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, CallExpr>) {
          out.insert(n.callee);
          for (const auto& a : n.args) collect_calls(*a, out);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          collect_calls(*n.base, out);
          collect_calls(*n.index, out);
        } else if constexpr (std::is_same_v<T, UnaryExpr>) {
          collect_calls(*n.operand, out);
        } else if constexpr (std::is_same_v<T, BinaryExpr>) {
          collect_calls(*n.lhs, out);
          collect_calls(*n.rhs, out);
        }
      },
      e.node);
}

void Validator::collect_calls(const Stmt& s, std::set<std::string>& out) const {
  auto sub = [&](const StmtPtr& p) {
    if (p) collect_calls(*p, out);
  };
  auto ex = [&](const ExprPtr& p) {
    if (p) collect_calls(*p, out);
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DeclStmt>) {
          for (const auto& v : n.vars) ex(v.init);
        } else if constexpr (std::is_same_v<T, AssignStmt>) {
          ex(n.target);
          ex(n.value);
        } else if constexpr (std::is_same_v<T, IncDecStmt>) {
          ex(n.target);
        } else if constexpr (std::is_same_v<T, BlockStmt>) {
          for (const auto& c : n.stmts) sub(c);
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          ex(n.cond);
          sub(n.then_branch);
          sub(n.else_branch);
        } else if constexpr (std::is_same_v<T, ForStmt>) {
          sub(n.init);
          ex(n.cond);
          sub(n.update);
          sub(n.body);
        } else if constexpr (std::is_same_v<T, LoopNestStmt>) {
          sub(n.body);
        } else if constexpr (std::is_same_v<T, ReturnStmt>) {
          ex(n.value);
        } else if constexpr (std::is_same_v<T, ExprStmt>) {
          ex(n.expr);
        }
      },
      s.node);
}

}  // namespace

std::vector<Diagnostic> validate(const KernelAST& kernel) { return Validator(kernel).run(); }

}  // namespace occakit::lang
