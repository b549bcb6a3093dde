#ifndef DECENT_REPL_HPP
#define DECENT_REPL_HPP

#include <cstdint>
#include <map>
#include <string>

#include "decent/interp.hpp"

namespace decent {

// One interactive session: a store, a top-level environment, and named
// sandbox handles. Lines starting with ':' are meta-commands; `ident = expr`
// binds; anything else evaluates and prints. Replaying a transcript against
// a fresh session reproduces the output byte for byte.
class ReplSession {
 public:
  Interp interp;
  Env top;
  std::map<std::string, int> handles;
  std::uint64_t budget = Interp::kDefaultBudget;

  // Returns the printed output for the line ("" for silent commands).
  // Multi-line output uses '\n' separators with no trailing newline.
  std::string dispatch(const std::string& line);

  bool quitRequested() const { return quit_; }

  std::string renderValue(const Value& v, int depth = 3, bool topLevel = true) const;

 private:
  bool quit_ = false;

  Value evalTop(const std::string& source);
  std::string meta(const std::string& line);
  int handleOf(const std::string& name) const;
};

}  // namespace decent

#endif
