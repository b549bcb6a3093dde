#ifndef DECENT_NICHECK_HPP
#define DECENT_NICHECK_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "decent/interp.hpp"

namespace decent {

struct NIWitness {
  std::string root;   // top-level binding where the mismatch was found
  std::string path;   // property path from the root
  std::string left;   // value before the sandbox ran
  std::string right;  // value after
};

struct NIReport {
  bool pass = false;
  std::optional<NIWitness> witness;
  std::optional<std::string> harnessError;  // setup or arg failed; not an NI verdict
  std::uint64_t seed = 0;
  std::string programText;
};

// Evaluates `setup` (one `name = expr` binding per line), snapshots the
// store, runs `(fresh (sbx g => body))(arg)`, and compares every top-level
// binding against the snapshot. Errors thrown by the body (including budget
// exhaustion) do not fail the check by themselves; only an observable store
// difference does.
NIReport checkNoninterference(const std::string& setup, const std::string& body,
                              const std::string& arg,
                              std::uint64_t budget = Interp::kDefaultBudget,
                              bool membraneEnabled = true);

// Evaluates `program` twice: once over the store produced by `setup`, once
// over a copy whose locations were shuffled by a seeded permutation. True
// iff both runs agree (same outcome, equivalent results and bindings).
bool differentialCheck(const std::string& setup, const std::string& program,
                       std::uint64_t renameSeed,
                       std::uint64_t budget = Interp::kDefaultBudget,
                       std::string* failure = nullptr);

// Short one-line rendering used by witness reports and the CLI.
std::string showValue(const Store& store, const Value& v, int depth = 2);

}  // namespace decent

#endif
