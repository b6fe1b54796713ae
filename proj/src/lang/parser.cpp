#include "occakit/lang/parser.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <limits>
#include <string>

namespace occakit::lang {

std::string_view to_string(BaseType t) {
  switch (t) {
    case BaseType::Int: return "int";
    case BaseType::Float: return "float";
    case BaseType::Double: return "double";
    case BaseType::Void: return "void";
  }
  return "?";
}

std::string_view to_string(BinaryOp op) {
  static constexpr std::array<std::string_view, 13> kNames = {
      "+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||"};
  return kNames[static_cast<std::size_t>(op)];
}

namespace {

constexpr std::array<std::string_view, 23> kBuiltinNames = {
    "occaInnerId0",   "occaInnerId1",   "occaInnerId2",   "occaOuterId0",  "occaOuterId1",
    "occaOuterId2",   "occaGlobalId0",  "occaGlobalId1",  "occaGlobalId2", "occaInnerDim0",
    "occaInnerDim1",  "occaInnerDim2",  "occaOuterDim0",  "occaOuterDim1", "occaOuterDim2",
    "occaGlobalDim0", "occaGlobalDim1", "occaGlobalDim2", "occaCPU",       "occaGPU",
    "occaOpenMP",     "occaOpenCL",     "occaCUDA"};

constexpr std::array<std::string_view, 12> kReserved = {
    "int", "float", "double", "void", "const", "if", "else", "for", "return", "while", "do",
    "struct"};

bool is_reserved(std::string_view name) {
  for (auto r : kReserved) {
    if (r == name) return true;
  }
  return false;
}

struct SyntaxError {
  std::string code;
  std::string message;
  SourcePos pos;
};

template <class T>
ExprPtr make_expr(SourcePos pos, T node) {
  auto e = std::make_unique<Expr>();
  e->pos = pos;
  e->node = std::move(node);
  return e;
}

template <class T>
StmtPtr make_stmt(SourcePos pos, T node) {
  auto s = std::make_unique<Stmt>();
  s->pos = pos;
  s->node = std::move(node);
  return s;
}

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {
    end_.kind = TokenKind::Punctuation;
    end_.lexeme = "<end of input>";
    if (!toks_.empty()) end_.pos = toks_.back().pos;
  }

  ParsedSource run() {
    ParsedSource out;
    std::vector<std::shared_ptr<KernelAST>> kernels;
    try {
      while (!at_end()) {
        if (peek().is_keyword("occaKernel")) {
          kernels.push_back(parse_kernel_def());
        } else if (peek().is_keyword("occaFunction")) {
          auto fn = parse_function_def();
          for (const auto& h : out.helpers) {
            if (h->name == fn->name) {
              throw SyntaxError{"P1", "helper '" + fn->name + "' defined twice", fn->pos};
            }
          }
          out.helpers.push_back(std::move(fn));
        } else {
          error("expected occaKernel or occaFunction definition");
        }
      }
    } catch (const SyntaxError& e) {
      out.diagnostics.push_back({Severity::Error, e.code, e.message, e.pos});
      out.helpers.clear();
      return out;
    }
    for (auto& k : kernels) {
      k->helpers = out.helpers;
      out.kernels.push_back(std::move(k));
    }
    return out;
  }

 private:
  // ------------------------------------------------------------ token access
  bool at_end() const { return i_ >= toks_.size(); }

  const Token& peek(std::size_t ahead = 0) const {
    return i_ + ahead < toks_.size() ? toks_[i_ + ahead] : end_;
  }

  const Token& next() {
    if (at_end()) error("unexpected end of input");
    return toks_[i_++];
  }

  [[noreturn]] void error(std::string message) const {
    throw SyntaxError{"P1", std::move(message) + ", found '" + peek().lexeme + "'", peek().pos};
  }

  bool accept_punct(std::string_view p) {
    if (peek().is_punct(p)) {
      ++i_;
      return true;
    }
    return false;
  }

  bool accept_op(std::string_view op) {
    if (peek().is_op(op)) {
      ++i_;
      return true;
    }
    return false;
  }

  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) error("expected '" + std::string(p) + "'");
  }

  void expect_keyword(std::string_view kw) {
    if (!peek().is_keyword(kw)) error("expected " + std::string(kw));
    ++i_;
  }

  std::string expect_name() {
    const Token& t = peek();
    if (t.kind != TokenKind::Identifier || is_reserved(t.lexeme)) error("expected a name");
    ++i_;
    return t.lexeme;
  }

  // ---------------------------------------------------------------- types
  static std::optional<BaseType> type_of(const Token& t) {
    if (t.kind != TokenKind::Identifier) return std::nullopt;
    if (t.lexeme == "int") return BaseType::Int;
    if (t.lexeme == "float") return BaseType::Float;
    if (t.lexeme == "double") return BaseType::Double;
    if (t.lexeme == "void") return BaseType::Void;
    return std::nullopt;
  }

  static unsigned qualifier_of(const Token& t) {
    if (t.is_ident("const")) return kQualConst;
    if (t.kind != TokenKind::Keyword) return kQualNone;
    const auto& k = t.lexeme;
    if (k == "occaShared") return kQualShared;
    if (k == "occaPointer") return kQualPointer;
    if (k == "occaConstant") return kQualConstant;
    if (k == "occaVariable") return kQualVariable;
    if (k == "occaRestrict") return kQualRestrict;
    if (k == "occaVolatile") return kQualVolatile;
    if (k == "occaConst") return kQualConst;
    if (k == "occaAligned") return kQualAligned;
    if (k == "occaFunctionShared") return kQualFunctionShared;
    return kQualNone;
  }

  unsigned parse_qualifiers() {
    unsigned quals = kQualNone;
    while (unsigned q = qualifier_of(peek())) {
      quals |= q;
      ++i_;
    }
    return quals;
  }

  BaseType parse_type(bool allow_void) {
    auto t = type_of(peek());
    if (!t || (!allow_void && *t == BaseType::Void)) error("expected a type (int, float, double)");
    ++i_;
    return *t;
  }

  bool starts_declaration() const {
    if (qualifier_of(peek()) != kQualNone) return true;
    auto t = type_of(peek());
    return t.has_value() && *t != BaseType::Void;
  }

  // ----------------------------------------------------------- definitions
  Param parse_param() {
    Param p;
    p.pos = peek().pos;
    p.quals = parse_qualifiers();
    p.type = parse_type(false);
    p.quals |= parse_qualifiers();
    if (accept_op("*")) {
      p.is_array_ref = true;
      p.quals |= parse_qualifiers();
    }
    p.name = expect_name();
    return p;
  }

  std::shared_ptr<KernelAST> parse_kernel_def() {
    auto k = std::make_shared<KernelAST>();
    k->pos = peek().pos;
    expect_keyword("occaKernel");
    if (!peek().is_ident("void")) error("kernels must return void");
    ++i_;
    k->name = expect_name();
    expect_punct("(");
    if (!peek().is_keyword("occaKernelInfoArg")) {
      error("the first kernel parameter must be occaKernelInfoArg");
    }
    ++i_;
    while (accept_punct(",")) k->params.push_back(parse_param());
    expect_punct(")");
    if (!peek().is_punct("{")) error("expected kernel body");
    k->body = parse_statement();
    return k;
  }

  std::shared_ptr<FunctionDef> parse_function_def() {
    auto fn = std::make_shared<FunctionDef>();
    fn->pos = peek().pos;
    expect_keyword("occaFunction");
    fn->return_type = parse_type(true);
    fn->name = expect_name();
    expect_punct("(");
    if (!peek().is_punct(")")) {
      if (peek().is_keyword("occaFunctionInfoArg")) {
        ++i_;
        fn->takes_info = true;
        while (accept_punct(",")) fn->params.push_back(parse_param());
      } else {
        fn->params.push_back(parse_param());
        while (accept_punct(",")) fn->params.push_back(parse_param());
      }
    }
    expect_punct(")");
    if (!peek().is_punct("{")) error("expected function body");
    fn->body = parse_statement();
    return fn;
  }

  // ------------------------------------------------------------ statements
  StmtPtr parse_block() {
    const SourcePos pos = peek().pos;
    expect_punct("{");
    BlockStmt block;
    while (!peek().is_punct("}")) {
      if (at_end()) error("unterminated block");
      block.stmts.push_back(parse_statement());
    }
    ++i_;
    return make_stmt(pos, std::move(block));
  }

  static StmtPtr nest(SourcePos pos, NestLevel level, int axis, StmtPtr body) {
    return make_stmt(pos, LoopNestStmt{level, axis, std::move(body)});
  }

  StmtPtr parse_loop_keyword() {
    const Token kw = next();
    const SourcePos pos = kw.pos;
    StmtPtr body = parse_statement();
    const std::string& k = kw.lexeme;
    if (k == "occaInnerFor") {
      return nest(pos, NestLevel::Inner, 2,
                  nest(pos, NestLevel::Inner, 1, nest(pos, NestLevel::Inner, 0, std::move(body))));
    }
    const int axis = k.back() - '0';
    if (k.starts_with("occaOuterFor")) return nest(pos, NestLevel::Outer, axis, std::move(body));
    if (k.starts_with("occaInnerFor")) return nest(pos, NestLevel::Inner, axis, std::move(body));
    // occaGlobalForN: a work-group loop wrapping a work-item loop on the same axis.
    return nest(pos, NestLevel::Outer, axis, nest(pos, NestLevel::Inner, axis, std::move(body)));
  }

  StmtPtr parse_statement() {
    const Token& t = peek();
    const SourcePos pos = t.pos;

    if (t.is_punct("{")) return parse_block();
    if (accept_punct(";")) return make_stmt(pos, EmptyStmt{});

    if (t.kind == TokenKind::Keyword) {
      const std::string& k = t.lexeme;
      if (k.starts_with("occaOuterFor") || k.starts_with("occaInnerFor") ||
          k.starts_with("occaGlobalFor")) {
        return parse_loop_keyword();
      }
      if (k == "occaBarrier") {
        ++i_;
        expect_punct("(");
        Fence fence;
        if (peek().is_keyword("occaLocalMemFence")) {
          fence = Fence::Local;
        } else if (peek().is_keyword("occaGlobalMemFence")) {
          fence = Fence::Global;
        } else {
          error("expected occaLocalMemFence or occaGlobalMemFence");
        }
        ++i_;
        expect_punct(")");
        expect_punct(";");
        return make_stmt(pos, BarrierStmt{fence});
      }
      if (k == "occaInnerReturn") {
        ++i_;
        expect_punct(";");
        return make_stmt(pos, InnerReturnStmt{});
      }
      if (k == "occaPrivate" || k == "occaPrivateArray") return parse_private();
    }

    if (t.is_ident("if")) {
      ++i_;
      expect_punct("(");
      IfStmt s;
      s.cond = parse_expr();
      expect_punct(")");
      s.then_branch = parse_statement();
      if (peek().is_ident("else")) {
        ++i_;
        s.else_branch = parse_statement();
      }
      return make_stmt(pos, std::move(s));
    }
    if (t.is_ident("for")) return parse_for();
    if (t.is_ident("return")) {
      ++i_;
      ReturnStmt s;
      if (!peek().is_punct(";")) s.value = parse_expr();
      expect_punct(";");
      return make_stmt(pos, std::move(s));
    }
    if (t.kind == TokenKind::Identifier && is_reserved(t.lexeme) && !starts_declaration()) {
      error("unsupported statement");
    }
    if (starts_declaration()) {
      auto s = parse_declaration();
      expect_punct(";");
      return s;
    }
    auto s = parse_simple();
    expect_punct(";");
    return s;
  }

  StmtPtr parse_private() {
    const Token kw = next();
    const bool is_array = kw.lexeme == "occaPrivateArray";
    expect_punct("(");
    PrivateDeclStmt s;
    s.is_array = is_array;
    s.type = parse_type(false);
    expect_punct(",");
    s.name = expect_name();
    if (is_array) {
      expect_punct(",");
      const Token& size = peek();
      if (size.kind != TokenKind::IntegerLiteral) {
        throw SyntaxError{"P2", "occaPrivateArray size must be an integer literal", size.pos};
      }
      s.size = static_cast<int>(parse_int(size));
      if (s.size <= 0) throw SyntaxError{"P2", "occaPrivateArray size must be positive", size.pos};
      ++i_;
    }
    expect_punct(")");
    expect_punct(";");
    return make_stmt(kw.pos, std::move(s));
  }

  StmtPtr parse_for() {
    const SourcePos pos = next().pos;
    expect_punct("(");
    ForStmt s;
    if (!peek().is_punct(";")) {
      s.init = starts_declaration() ? parse_declaration() : parse_simple();
    }
    expect_punct(";");
    if (!peek().is_punct(";")) s.cond = parse_expr();
    expect_punct(";");
    if (!peek().is_punct(")")) s.update = parse_simple();
    expect_punct(")");
    s.body = parse_statement();
    return make_stmt(pos, std::move(s));
  }

  StmtPtr parse_declaration() {
    const SourcePos pos = peek().pos;
    DeclStmt d;
    d.quals = parse_qualifiers();
    d.type = parse_type(false);
    d.quals |= parse_qualifiers();
    if (peek().is_op("*")) error("pointer variables are not supported");
    do {
      Declarator v;
      v.pos = peek().pos;
      v.name = expect_name();
      while (accept_punct("[")) {
        const SourcePos at = peek().pos;
        auto extent = fold_constant(*parse_expr());
        if (!extent) throw SyntaxError{"P2", "array extent must be a constant", at};
        if (*extent <= 0) throw SyntaxError{"P2", "array extent must be positive", at};
        v.extents.push_back(static_cast<int>(*extent));
        expect_punct("]");
      }
      if (accept_op("=")) {
        if (!v.extents.empty()) error("array initializers are not supported");
        v.init = parse_expr();
      }
      d.vars.push_back(std::move(v));
    } while (accept_punct(","));
    return make_stmt(pos, std::move(d));
  }

  // Assignment, increment/decrement or call, without the trailing ';'.
  StmtPtr parse_simple() {
    const SourcePos pos = peek().pos;
    if (peek().is_op("++") || peek().is_op("--")) {
      const bool inc = next().lexeme == "++";
      return make_stmt(pos, IncDecStmt{parse_postfix(), inc});
    }
    ExprPtr lhs = parse_expr();
    static constexpr std::array<std::pair<std::string_view, AssignOp>, 6> kAssign = {{
        {"=", AssignOp::Set},
        {"+=", AssignOp::Add},
        {"-=", AssignOp::Sub},
        {"*=", AssignOp::Mul},
        {"/=", AssignOp::Div},
        {"%=", AssignOp::Mod},
    }};
    for (auto [text, op] : kAssign) {
      if (accept_op(text)) return make_stmt(pos, AssignStmt{op, std::move(lhs), parse_expr()});
    }
    if (peek().is_op("++") || peek().is_op("--")) {
      const bool inc = next().lexeme == "++";
      return make_stmt(pos, IncDecStmt{std::move(lhs), inc});
    }
    if (!std::holds_alternative<CallExpr>(lhs->node)) {
      throw SyntaxError{"P1", "expression statement has no effect", pos};
    }
    return make_stmt(pos, ExprStmt{std::move(lhs)});
  }

  // ----------------------------------------------------------- expressions
  static int precedence(const Token& t, BinaryOp& op) {
    if (t.kind != TokenKind::Operator) return -1;
    static constexpr std::array<std::tuple<std::string_view, BinaryOp, int>, 13> kOps = {{
        {"||", BinaryOp::Or, 1},
        {"&&", BinaryOp::And, 2},
        {"==", BinaryOp::Eq, 3},
        {"!=", BinaryOp::Ne, 3},
        {"<", BinaryOp::Lt, 4},
        {"<=", BinaryOp::Le, 4},
        {">", BinaryOp::Gt, 4},
        {">=", BinaryOp::Ge, 4},
        {"+", BinaryOp::Add, 5},
        {"-", BinaryOp::Sub, 5},
        {"*", BinaryOp::Mul, 6},
        {"/", BinaryOp::Div, 6},
        {"%", BinaryOp::Mod, 6},
    }};
    for (auto [text, o, prec] : kOps) {
      if (t.lexeme == text) {
        op = o;
        return prec;
      }
    }
    return -1;
  }

  ExprPtr parse_expr(int min_prec = 1) {
    ExprPtr lhs = parse_unary();
    while (true) {
      BinaryOp op{};
      const int prec = precedence(peek(), op);
      if (prec < min_prec) return lhs;
      const SourcePos pos = next().pos;
      ExprPtr rhs = parse_expr(prec + 1);
      lhs = make_expr(pos, BinaryExpr{op, std::move(lhs), std::move(rhs)});
    }
  }

  ExprPtr parse_unary() {
    const SourcePos pos = peek().pos;
    if (accept_op("-")) return make_expr(pos, UnaryExpr{UnaryOp::Neg, parse_unary()});
    if (accept_op("!")) return make_expr(pos, UnaryExpr{UnaryOp::Not, parse_unary()});
    if (accept_op("+")) return make_expr(pos, UnaryExpr{UnaryOp::Plus, parse_unary()});
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (peek().is_punct("[")) {
      const SourcePos pos = next().pos;
      ExprPtr index = parse_expr();
      expect_punct("]");
      e = make_expr(pos, IndexExpr{std::move(e), std::move(index)});
    }
    return e;
  }

  static std::int64_t parse_int(const Token& t) {
    std::string_view text = t.lexeme;
    int base = 10;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
      text.remove_prefix(2);
      base = 16;
    }
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
    if (ec != std::errc() || ptr != text.data() + text.size() ||
        value > std::numeric_limits<std::int32_t>::max()) {
      throw SyntaxError{"P1", "integer literal out of range", t.pos};
    }
    return value;
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    const SourcePos pos = t.pos;
    switch (t.kind) {
      case TokenKind::IntegerLiteral: {
        const auto v = static_cast<std::int32_t>(parse_int(t));
        ++i_;
        return make_expr(pos, IntLiteral{v});
      }
      case TokenKind::FloatLiteral: {
        std::string text = t.lexeme;
        const bool single = text.back() == 'f' || text.back() == 'F';
        if (single) text.pop_back();
        const double v = std::strtod(text.c_str(), nullptr);
        ++i_;
        return make_expr(pos, FloatLiteral{v, single});
      }
      case TokenKind::Keyword: {
        if (auto b = builtin_from_keyword(t.lexeme)) {
          ++i_;
          return make_expr(pos, BuiltinExpr{*b});
        }
        error("keyword is not valid in an expression");
      }
      case TokenKind::Identifier: {
        if (is_reserved(t.lexeme)) error("expected an expression");
        std::string name = t.lexeme;
        ++i_;
        if (!peek().is_punct("(")) return make_expr(pos, NameExpr{std::move(name)});
        ++i_;
        CallExpr call;
        call.callee = std::move(name);
        if (!peek().is_punct(")")) {
          if (peek().is_keyword("occaFunctionInfo")) {
            ++i_;
            call.passes_info = true;
            while (accept_punct(",")) call.args.push_back(parse_expr());
          } else {
            call.args.push_back(parse_expr());
            while (accept_punct(",")) call.args.push_back(parse_expr());
          }
        }
        expect_punct(")");
        return make_expr(pos, std::move(call));
      }
      case TokenKind::Punctuation:
        if (t.is_punct("(")) {
          ++i_;
          ExprPtr e = parse_expr();
          expect_punct(")");
          return e;
        }
        break;
      case TokenKind::StringLiteral:
        throw SyntaxError{"P1", "string literals are not supported in kernels", pos};
      case TokenKind::Operator:
        break;
    }
    error("expected an expression");
  }

  static std::optional<std::int64_t> fold_constant(const Expr& e) {
    if (const auto* lit = std::get_if<IntLiteral>(&e.node)) return lit->value;
    if (const auto* u = std::get_if<UnaryExpr>(&e.node)) {
      auto v = fold_constant(*u->operand);
      if (!v) return std::nullopt;
      if (u->op == UnaryOp::Neg) return -*v;
      if (u->op == UnaryOp::Plus) return *v;
      return *v == 0 ? 1 : 0;
    }
    if (const auto* b = std::get_if<BinaryExpr>(&e.node)) {
      auto l = fold_constant(*b->lhs);
      auto r = fold_constant(*b->rhs);
      if (!l || !r) return std::nullopt;
      switch (b->op) {
        case BinaryOp::Add: return *l + *r;
        case BinaryOp::Sub: return *l - *r;
        case BinaryOp::Mul: return *l * *r;
        case BinaryOp::Div: return *r == 0 ? std::nullopt : std::optional(*l / *r);
        case BinaryOp::Mod: return *r == 0 ? std::nullopt : std::optional(*l % *r);
        default: return std::nullopt;
      }
    }
    return std::nullopt;
  }

  const std::vector<Token>& toks_;
  Token end_;
  std::size_t i_ = 0;
};

}  // namespace

std::optional<Builtin> builtin_from_keyword(std::string_view keyword) {
  for (std::size_t i = 0; i < kBuiltinNames.size(); ++i) {
    if (kBuiltinNames[i] == keyword) return static_cast<Builtin>(i);
  }
  return std::nullopt;
}

std::string_view builtin_name(Builtin b) { return kBuiltinNames[static_cast<std::size_t>(b)]; }

std::shared_ptr<const KernelAST> ParsedSource::find_kernel(std::string_view name) const {
  for (const auto& k : kernels) {
    if (k->name == name) return k;
  }
  return nullptr;
}

ParsedSource parse_kernel(const TokenStream& tokens) { return Parser(tokens.tokens).run(); }

}  // namespace occakit::lang
