#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace occakit::lang {

// Grouping of the kernel keywords, one group per appendix table of the
// original macro layer.
enum class KeywordGroup {
  ThreadIds,     // occaInnerId*, occaOuterId*, occaGlobalId*
  WorkSizes,     // occaInnerDim*, occaOuterDim*, occaGlobalDim*
  LoopScopes,    // occaInnerFor*, occaOuterFor*, occaGlobalFor*
  Attributes,    // occaShared, occaPointer, ...
  Prototypes,    // occaKernel, occaKernelInfoArg, occaInnerReturn, ...
  Barriers,      // occaBarrier and its fences
  PrivateMemory, // occaPrivate, occaPrivateArray
  Platform,      // occaCPU, occaGPU, ...
};

struct KeywordInfo {
  std::string_view name;
  KeywordGroup group;
  // occaOuterId2 and occaOuterDim2 are accepted although the tables only list
  // axes 0 and 1 for them.
  bool extension = false;
};

std::span<const KeywordInfo> all_keywords();

std::optional<KeywordInfo> find_keyword(std::string_view name);

inline bool is_keyword(std::string_view name) { return find_keyword(name).has_value(); }

// True for identifiers in the reserved namespace: "occa" followed by an
// uppercase letter, a digit or nothing. `occasion` is an ordinary name.
bool is_occa_prefixed(std::string_view name);

}  // namespace occakit::lang
