#include "occakit/lang/keywords.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace occakit::lang {
namespace {

using G = KeywordGroup;

constexpr std::array kKeywords = {
    KeywordInfo{"occaInnerId0", G::ThreadIds},
    KeywordInfo{"occaInnerId1", G::ThreadIds},
    KeywordInfo{"occaInnerId2", G::ThreadIds},
    KeywordInfo{"occaOuterId0", G::ThreadIds},
    KeywordInfo{"occaOuterId1", G::ThreadIds},
    KeywordInfo{"occaOuterId2", G::ThreadIds, true},
    KeywordInfo{"occaGlobalId0", G::ThreadIds},
    KeywordInfo{"occaGlobalId1", G::ThreadIds},
    KeywordInfo{"occaGlobalId2", G::ThreadIds},

    KeywordInfo{"occaInnerDim0", G::WorkSizes},
    KeywordInfo{"occaInnerDim1", G::WorkSizes},
    KeywordInfo{"occaInnerDim2", G::WorkSizes},
    KeywordInfo{"occaOuterDim0", G::WorkSizes},
    KeywordInfo{"occaOuterDim1", G::WorkSizes},
    KeywordInfo{"occaOuterDim2", G::WorkSizes, true},
    KeywordInfo{"occaGlobalDim0", G::WorkSizes},
    KeywordInfo{"occaGlobalDim1", G::WorkSizes},
    KeywordInfo{"occaGlobalDim2", G::WorkSizes},

    KeywordInfo{"occaInnerFor", G::LoopScopes},
    KeywordInfo{"occaInnerFor0", G::LoopScopes},
    KeywordInfo{"occaInnerFor1", G::LoopScopes},
    KeywordInfo{"occaInnerFor2", G::LoopScopes},
    KeywordInfo{"occaOuterFor0", G::LoopScopes},
    KeywordInfo{"occaOuterFor1", G::LoopScopes},
    KeywordInfo{"occaOuterFor2", G::LoopScopes},
    KeywordInfo{"occaGlobalFor0", G::LoopScopes},
    KeywordInfo{"occaGlobalFor1", G::LoopScopes},
    KeywordInfo{"occaGlobalFor2", G::LoopScopes},

    KeywordInfo{"occaShared", G::Attributes},
    KeywordInfo{"occaPointer", G::Attributes},
    KeywordInfo{"occaConstant", G::Attributes},
    KeywordInfo{"occaVariable", G::Attributes},
    KeywordInfo{"occaRestrict", G::Attributes},
    KeywordInfo{"occaVolatile", G::Attributes},
    KeywordInfo{"occaConst", G::Attributes},
    KeywordInfo{"occaAligned", G::Attributes},

    KeywordInfo{"occaKernelInfoArg", G::Prototypes},
    KeywordInfo{"occaFunctionInfoArg", G::Prototypes},
    KeywordInfo{"occaFunctionInfo", G::Prototypes},
    KeywordInfo{"occaKernel", G::Prototypes},
    KeywordInfo{"occaFunction", G::Prototypes},
    KeywordInfo{"occaFunctionShared", G::Prototypes},
    KeywordInfo{"occaInnerReturn", G::Prototypes},

    KeywordInfo{"occaLocalMemFence", G::Barriers},
    KeywordInfo{"occaGlobalMemFence", G::Barriers},
    KeywordInfo{"occaBarrier", G::Barriers},

    KeywordInfo{"occaPrivateArray", G::PrivateMemory},
    KeywordInfo{"occaPrivate", G::PrivateMemory},

    KeywordInfo{"occaCPU", G::Platform},
    KeywordInfo{"occaGPU", G::Platform},
    KeywordInfo{"occaOpenMP", G::Platform},
    KeywordInfo{"occaOpenCL", G::Platform},
    KeywordInfo{"occaCUDA", G::Platform},
};

}  // namespace

std::span<const KeywordInfo> all_keywords() { return kKeywords; }

std::optional<KeywordInfo> find_keyword(std::string_view name) {
  auto it = std::find_if(kKeywords.begin(), kKeywords.end(),
                         [&](const KeywordInfo& k) { return k.name == name; });
  if (it == kKeywords.end()) return std::nullopt;
  return *it;
}

bool is_occa_prefixed(std::string_view name) {
  if (!name.starts_with("occa")) return false;
  if (name.size() == 4) return true;
  const auto next = static_cast<unsigned char>(name[4]);
  return std::isupper(next) || std::isdigit(next);
}

}  // namespace occakit::lang
