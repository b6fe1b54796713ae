#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "occakit/translate/backend.hpp"

namespace occakit::translate {

// One keyword's replacement. Function-like keywords (occaBarrier,
// occaPrivate, occaPrivateArray) name their parameters; each parameter name
// occurring in `text` is replaced by the matching argument.
struct Expansion {
  std::string text;  // single-space normalized, possibly empty
  std::vector<std::string> params;

  bool function_like() const { return !params.empty(); }
};

struct ExpansionTable {
  Backend backend = Backend::OpenMP;
  std::map<std::string, Expansion, std::less<>> entries;

  // Throws std::logic_error when the keyword has no entry.
  const Expansion& at(std::string_view keyword) const;
  bool contains(std::string_view keyword) const { return entries.contains(keyword); }
};

// Immutable per-backend table; Serial returns the OpenMP entries.
const ExpansionTable& expansion_table(Backend backend);

// The pragma attached to the first work-group loop in OpenMP output,
// including its firstprivate list as published.
inline constexpr std::string_view kOpenMPPragma =
    "_Pragma(\"omp parallel for firstprivate(occaInnerId0, occaInnerId1, occaInnerId2, "
    "occaDims0, occaDims1, occaDims2)\")";

}  // namespace occakit::translate
