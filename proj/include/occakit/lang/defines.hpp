#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "occakit/lang/token.hpp"

namespace occakit::lang {

// Compile-time constants injected into a kernel at build time. Entries keep
// insertion order; re-adding a name replaces its value in place.
class DefineSet {
 public:
  struct Entry {
    std::string name;
    std::string text;  // replacement as written in a `#define` directive
    std::vector<Token> replacement;
  };

  // All three throw std::invalid_argument for a name that is not an
  // identifier, or a replacement that mentions the name itself.
  DefineSet& add(std::string_view name, std::int64_t value);
  DefineSet& add(std::string_view name, double value);
  // Replacement given as source text, e.g. `double` or `2*r`.
  DefineSet& add_text(std::string_view name, std::string_view replacement);

  const std::vector<Entry>& entries() const { return entries_; }
  const Entry* find(std::string_view name) const;
  bool empty() const { return entries_.empty(); }

 private:
  void insert(std::string_view name, std::string text);

  std::vector<Entry> entries_;
};

// Shortest round-trip spelling of a double that still lexes as a floating
// literal ("1.0", not "1").
std::string format_float_literal(double value);

}  // namespace occakit::lang
