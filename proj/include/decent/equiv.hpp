#ifndef DECENT_EQUIV_HPP
#define DECENT_EQUIV_HPP

#include <optional>
#include <string>

#include "decent/heap.hpp"

namespace decent {

// Observational equivalence of two values living in (possibly) different
// stores. Locations are compared structurally, not by index, so the check
// is stable under renaming of store slots. Cycles are handled by assuming
// a pair equal while its components are being compared; object graphs of
// any shape terminate.
//
// If the values differ and `witness` is non-null it receives a property
// path from the root to the first observable difference, e.g.
// "root.left.value".
bool eqValue(const Store& s1, const Value& v1, const Store& s2, const Value& v2,
             std::string* witness = nullptr, const std::string& rootName = "root");

bool eqEnv(const Store& s1, const Env& e1, const Store& s2, const Env& e2,
           std::string* witness = nullptr);

}  // namespace decent

#endif
