#ifndef DECENT_GEN_HPP
#define DECENT_GEN_HPP

#include <cstdint>
#include <string>

#include "decent/syntax.hpp"

namespace decent {

// One noninterference trial: setup binds top-level names (one `name = expr`
// per line), body is a sandbox body over the binder g, arg is the outside
// expression the fresh sandbox is applied to.
struct NITriple {
  std::string setup;
  std::string body;
  std::string arg;
};

// Deterministic in seed. Emits a closed program; larger sizes nest deeper
// and draw from every core production including object construction,
// property reads and writes, and fresh-sandbox application.
std::string genProgram(std::uint64_t seed, int size);

NITriple genTriple(std::uint64_t seed, int size);

// Fixed corpus of sandbox bodies that definitely mutate their global's
// existing state; index 0..19.
NITriple mutationTriple(int index);

// Random syntax tree (not necessarily well-typed); used for printer and
// parser round-trip properties.
ExprPtr genExpr(std::uint64_t seed, int size);

}  // namespace decent

#endif
