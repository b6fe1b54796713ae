#include "occakit/translate/emit.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include "occakit/lang/keywords.hpp"
#include "occakit/lang/tokenizer.hpp"
#include "occakit/translate/expansion_table.hpp"

namespace occakit::translate {

using lang::Token;
using lang::TokenKind;

namespace {

constexpr std::string_view kIdDeclarations =
    "int occaInnerId0 = 0, occaInnerId1 = 0, occaInnerId2 = 0;"
    "int occaOuterId0 = 0, occaOuterId1 = 0, occaOuterId2 = 0;";

constexpr std::string_view kPrivateCtorArgs = "(occaDims, occaInnerId0, occaInnerId1, occaInnerId2)";

// Per-work-item storage for OpenMP private variables. Element access resolves
// through the current inner ids so values survive across split inner loops.
constexpr std::string_view kPrivateClassPreamble = R"(#include <vector>

template <class TM, int SIZE>
class occaPrivateClass {
 public:
  occaPrivateClass(const int *dims, const int &id0, const int &id1, const int &id2)
      : dim0(dims[0]), dim1(dims[1]), id0_(id0), id1_(id1), id2_(id2),
        data(static_cast<size_t>(dims[0]) * dims[1] * dims[2] * SIZE) {}

  TM &operator[](const int i) { return data[SIZE * index() + i]; }
  operator TM &() { return data[SIZE * index()]; }

  TM &operator=(const TM &v) { return data[SIZE * index()] = v; }
  TM &operator+=(const TM &v) { return data[SIZE * index()] += v; }
  TM &operator-=(const TM &v) { return data[SIZE * index()] -= v; }
  TM &operator*=(const TM &v) { return data[SIZE * index()] *= v; }
  TM &operator/=(const TM &v) { return data[SIZE * index()] /= v; }

 private:
  int index() const { return id0_ + dim0 * (id1_ + dim1 * id2_); }

  const int dim0, dim1;
  const int &id0_, &id1_, &id2_;
  std::vector<TM> data;
};

)";

bool needs_parens(const std::vector<Token>& tokens) {
  int depth = 0;
  for (const auto& t : tokens) {
    if (t.is_punct("(") || t.is_punct("[")) ++depth;
    if (t.is_punct(")") || t.is_punct("]")) --depth;
    if (depth == 0 && t.kind == TokenKind::Operator &&
        (t.lexeme == "+" || t.lexeme == "-" || t.lexeme == "*" || t.lexeme == "/")) {
      return true;
    }
  }
  return false;
}

Token synthetic(std::string_view lexeme, TokenKind kind, lang::SourcePos pos) {
  Token t{kind, std::string(lexeme), pos};
  t.synthetic = true;
  return t;
}

class Expander {
 public:
  Expander(Backend backend, bool declare_ids)
      : backend_(backend), table_(expansion_table(backend)), declare_ids_(declare_ids) {}

  std::vector<Token> run(const std::vector<Token>& in) {
    std::vector<Token> out;
    std::vector<std::string> active;
    bool kernel_pending = false;
    int parens = 0;
    for (std::size_t i = 0; i < in.size();) {
      const Token& t = in[i];
      if (t.is_keyword("occaKernel")) kernel_pending = declare_ids_;
      if (t.is_punct("(")) ++parens;
      if (t.is_punct(")")) --parens;
      expand_one(in, i, out, active, false);
      if (kernel_pending && parens == 0 && t.is_punct("{")) {
        for (Token d : fragment(kIdDeclarations)) {
          d.pos = t.pos;
          if (d.kind == TokenKind::Keyword) d.kind = TokenKind::Identifier;
          out.push_back(std::move(d));
        }
        kernel_pending = false;
      }
    }
    return out;
  }

 private:
  const std::vector<Token>& fragment(std::string_view text) {
    auto it = fragments_.find(text);
    if (it == fragments_.end()) {
      auto toks = lang::lex_fragment(text);
      for (auto& tok : toks) tok.synthetic = true;
      it = fragments_.emplace(std::string(text), std::move(toks)).first;
    }
    return it->second;
  }

  // Expands in[i] (and its argument list, if any), advancing i past them.
  void expand_one(const std::vector<Token>& in, std::size_t& i, std::vector<Token>& out,
                  std::vector<std::string>& active, bool in_replacement) {
    const Token& t = in[i];
    if (t.kind != TokenKind::Keyword) {
      out.push_back(t);
      if (in_replacement) out.back().synthetic = true;
      ++i;
      return;
    }
    if (std::find(active.begin(), active.end(), t.lexeme) != active.end()) {
      out.push_back(synthetic(t.lexeme, TokenKind::Identifier, t.pos));
      ++i;
      return;
    }

    const Expansion& entry = table_.at(t.lexeme);
    const std::string keyword = t.lexeme;
    const lang::SourcePos pos = t.pos;
    ++i;

    std::vector<std::vector<Token>> args;
    if (entry.function_like()) args = collect_args(in, i, keyword, entry.params.size(), active);

    std::vector<Token> body;
    if (keyword == "occaOuterFor0" && backend_ == Backend::OpenMP) {
      const auto& pragma = fragment(kOpenMPPragma);
      body.insert(body.end(), pragma.begin(), pragma.end());
    }
    for (const Token& b : fragment(entry.text)) {
      auto p = std::find(entry.params.begin(), entry.params.end(), b.lexeme);
      if (b.kind == TokenKind::Identifier && p != entry.params.end()) {
        const auto& arg = args[static_cast<std::size_t>(p - entry.params.begin())];
        body.insert(body.end(), arg.begin(), arg.end());
      } else {
        body.push_back(b);
      }
    }
    if (!is_gpu(backend_) && (keyword == "occaPrivate" || keyword == "occaPrivateArray")) {
      const auto& ctor = fragment(kPrivateCtorArgs);
      body.insert(body.end(), ctor.begin(), ctor.end());
    }
    for (auto& b : body) {
      b.pos = pos;
      b.synthetic = true;
    }

    std::vector<Token> rescanned;
    active.push_back(keyword);
    for (std::size_t j = 0; j < body.size();) expand_one(body, j, rescanned, active, true);
    active.pop_back();

    const auto group = lang::find_keyword(keyword)->group;
    const bool expression_like =
        group == lang::KeywordGroup::ThreadIds || group == lang::KeywordGroup::WorkSizes;
    if (expression_like && needs_parens(rescanned)) {
      out.push_back(synthetic("(", TokenKind::Punctuation, pos));
      out.insert(out.end(), rescanned.begin(), rescanned.end());
      out.push_back(synthetic(")", TokenKind::Punctuation, pos));
    } else {
      out.insert(out.end(), rescanned.begin(), rescanned.end());
    }
  }

  // Reads `( a , b , ... )` starting at in[i]; arguments are expanded and
  // marked synthetic because they belong to the keyword invocation.
  std::vector<std::vector<Token>> collect_args(const std::vector<Token>& in, std::size_t& i,
                                               const std::string& keyword, std::size_t count,
                                               std::vector<std::string>& active) {
    if (i >= in.size() || !in[i].is_punct("(")) {
      throw std::logic_error(keyword + " must be followed by an argument list");
    }
    ++i;
    std::vector<std::vector<Token>> raw(1);
    int depth = 0;
    while (true) {
      if (i >= in.size()) throw std::logic_error("unterminated argument list for " + keyword);
      const Token& t = in[i++];
      if (depth == 0 && t.is_punct(")")) break;
      if (t.is_punct("(")) ++depth;
      if (t.is_punct(")")) --depth;
      if (depth == 0 && t.is_punct(",")) {
        raw.emplace_back();
        continue;
      }
      raw.back().push_back(t);
    }
    if (raw.size() != count) {
      throw std::logic_error(keyword + " expects " + std::to_string(count) + " argument(s)");
    }
    std::vector<std::vector<Token>> expanded;
    for (auto& arg : raw) {
      std::vector<Token> e;
      for (std::size_t j = 0; j < arg.size();) expand_one(arg, j, e, active, true);
      expanded.push_back(std::move(e));
    }
    return expanded;
  }

  Backend backend_;
  const ExpansionTable& table_;
  bool declare_ids_;
  std::map<std::string, std::vector<Token>, std::less<>> fragments_;
};

}  // namespace

std::vector<Token> expand(const lang::TokenStream& tokens, Backend backend) {
  return Expander(backend, false).run(tokens.tokens);
}

std::string EmittedUnit::text() const {
  std::string out = defines;
  if (!defines.empty()) out += '\n';
  out += preamble;
  out += kernel;
  return out;
}

EmittedUnit emit_kernel_unit(const lang::TokenStream& tokens, Backend backend,
                             const lang::DefineSet& defines) {
  EmittedUnit unit;
  unit.backend = backend;
  for (const auto& d : defines.entries()) unit.defines += "#define " + d.name + " " + d.text + "\n";
  if (!is_gpu(backend)) unit.preamble = kPrivateClassPreamble;
  unit.kernel = lang::print_tokens(Expander(backend, !is_gpu(backend)).run(tokens.tokens));
  return unit;
}

}  // namespace occakit::translate
