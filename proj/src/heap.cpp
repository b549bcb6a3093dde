#include "decent/heap.hpp"

#include <deque>

namespace decent {

namespace {

void pushValue(const Value& v, std::deque<Loc>& work, std::set<Loc>& seen,
               std::deque<const SandboxClosure*>& closures) {
  if (isLoc(v)) {
    Loc l = asLoc(v);
    if (seen.insert(l).second) work.push_back(l);
  } else if (isSandboxClosure(v)) {
    closures.push_back(asSandboxClosure(v).get());
  }
}

}  // namespace

std::set<Loc> reachableFrom(const Store& store, const std::vector<Value>& roots) {
  std::set<Loc> seen;
  std::deque<Loc> work;
  std::deque<const SandboxClosure*> closures;
  for (const auto& r : roots) pushValue(r, work, seen, closures);
  while (!work.empty() || !closures.empty()) {
    while (!closures.empty()) {
      const SandboxClosure* sc = closures.front();
      closures.pop_front();
      for (const auto& [name, v] : sc->env) pushValue(v, work, seen, closures);
    }
    if (work.empty()) break;
    Loc l = work.front();
    work.pop_front();
    const StoredObject& o = store.at(l);
    if (const auto* p = std::get_if<PlainObject>(&o)) {
      for (const auto& [k, v] : p->dict) pushValue(v, work, seen, closures);
      pushValue(p->proto, work, seen, closures);
      if (p->closure)
        for (const auto& [name, v] : p->closure->env)
          pushValue(v, work, seen, closures);
    } else if (const auto* sp = std::get_if<SandboxProxy>(&o)) {
      pushValue(Value(sp->target), work, seen, closures);
      pushValue(Value(sp->shadow), work, seen, closures);
      for (const auto& [name, v] : sp->sbxEnv) pushValue(v, work, seen, closures);
    } else if (const auto* op = std::get_if<OutwardProxy>(&o)) {
      pushValue(Value(op->inner), work, seen, closures);
      for (const auto& [name, v] : op->sbxEnv) pushValue(v, work, seen, closures);
    }
  }
  return seen;
}

}  // namespace decent
