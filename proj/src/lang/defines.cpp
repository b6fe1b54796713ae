#include "occakit/lang/defines.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "occakit/lang/keywords.hpp"
#include "occakit/lang/tokenizer.hpp"

namespace occakit::lang {
namespace {

bool valid_identifier(std::string_view name) {
  if (name.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

}  // namespace

std::string format_float_literal(double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("define value must be finite");
  }
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string text(buf.data(), end);
  if (text.find_first_of(".eE") == std::string::npos) text += ".0";
  return text;
}

const DefineSet::Entry* DefineSet::find(std::string_view name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Entry& e) { return e.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

DefineSet& DefineSet::add(std::string_view name, std::int64_t value) {
  insert(name, std::to_string(value));
  return *this;
}

DefineSet& DefineSet::add(std::string_view name, double value) {
  insert(name, format_float_literal(value));
  return *this;
}

DefineSet& DefineSet::add_text(std::string_view name, std::string_view replacement) {
  insert(name, std::string(replacement));
  return *this;
}

void DefineSet::insert(std::string_view name, std::string text) {
  if (!valid_identifier(name)) {
    throw std::invalid_argument("invalid define name '" + std::string(name) + "'");
  }
  if (is_keyword(name)) {
    throw std::invalid_argument("define may not shadow keyword '" + std::string(name) + "'");
  }
  auto lexed = tokenize(text);
  if (!lexed.ok()) {
    throw std::invalid_argument("invalid replacement for define '" + std::string(name) +
                                "': " + lexed.diagnostics.front().message);
  }
  for (const auto& t : lexed.stream.tokens) {
    if (t.kind == TokenKind::StringLiteral) {
      throw std::invalid_argument("define '" + std::string(name) + "' has a string literal");
    }
    if (t.lexeme == name) {
      throw std::invalid_argument("define '" + std::string(name) + "' refers to itself");
    }
  }

  Entry entry{std::string(name), std::move(text), std::move(lexed.stream.tokens)};
  for (auto& e : entries_) {
    if (e.name == name) {
      e = std::move(entry);
      return;
    }
  }
  entries_.push_back(std::move(entry));
}

}  // namespace occakit::lang
