#pragma once

#include <vector>

#include "occakit/lang/ast.hpp"
#include "occakit/lang/diagnostic.hpp"

namespace occakit::lang {

// Checks the work-group scoping contract that serial execution of work-items
// depends on:
//   V1 barriers sit at outer-loop scope, never inside an inner nest
//   V2 occaShared / occaPrivate / occaPrivateArray declared at outer-loop scope
//   V3 private variables are used only inside inner nests
//   V4 occaInnerReturn only inside inner nests
//   V5 occaInnerId* / occaGlobalId* only inside inner nests
//   V6 builtin ids and dims are never written
// plus loop-nest ordering (N1), name resolution and calls (S2-S4) and
// warnings for names left unresolved (S1, normally supplied as defines at
// build time) and for looping the degenerate outer axis 2 (W1).
std::vector<Diagnostic> validate(const KernelAST& kernel);

}  // namespace occakit::lang
