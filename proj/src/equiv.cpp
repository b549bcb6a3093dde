#include "decent/equiv.hpp"

#include <set>
#include <utility>

#include "decent/syntax.hpp"

namespace decent {

namespace {

struct EqCtx {
  const Store& s1;
  const Store& s2;
  std::set<std::pair<std::uint32_t, std::uint32_t>> assumed;
  std::string* witness = nullptr;
  bool haveWitness = false;

  void fail(const std::string& path) {
    if (witness && !haveWitness) {
      *witness = path;
      haveWitness = true;
    }
  }

  bool value(const Value& a, const Value& b, const std::string& path);
  bool env(const Env& a, const Env& b, const std::string& path);
  bool loc(Loc a, Loc b, const std::string& path);
};

bool EqCtx::env(const Env& a, const Env& b, const std::string& path) {
  if (a.size() != b.size()) {
    fail(path);
    return false;
  }
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) {
      fail(path + "." + ia->first);
      return false;
    }
    if (!value(ia->second, ib->second, path + "." + ia->first)) return false;
  }
  return true;
}

bool EqCtx::value(const Value& a, const Value& b, const std::string& path) {
  if (isConstant(a) && isConstant(b)) {
    if (asConstant(a) == asConstant(b)) return true;
    fail(path);
    return false;
  }
  if (isSandboxClosure(a) && isSandboxClosure(b)) {
    const auto& ca = asSandboxClosure(a);
    const auto& cb = asSandboxClosure(b);
    if (!exprEqual(ca->abs, cb->abs)) {
      fail(path);
      return false;
    }
    return env(ca->env, cb->env, path);
  }
  if (isLoc(a) && isLoc(b)) return loc(asLoc(a), asLoc(b), path);
  fail(path);
  return false;
}

bool EqCtx::loc(Loc a, Loc b, const std::string& path) {
  auto key = std::make_pair(a.index, b.index);
  if (!assumed.insert(key).second) return true;  // already being compared

  const StoredObject& oa = s1.at(a);
  const StoredObject& ob = s2.at(b);
  if (oa.index() != ob.index()) {
    fail(path);
    return false;
  }
  if (const auto* pa = std::get_if<PlainObject>(&oa)) {
    const auto& pb = std::get<PlainObject>(ob);
    if (pa->dict.size() != pb.dict.size()) {
      fail(path);
      return false;
    }
    auto ia = pa->dict.begin();
    auto ib = pb.dict.begin();
    for (; ia != pa->dict.end(); ++ia, ++ib) {
      if (ia->first != ib->first) {
        fail(path + "." + ia->first);
        return false;
      }
      if (!value(ia->second, ib->second, path + "." + ia->first)) return false;
    }
    if (!value(pa->proto, pb.proto, path + ".__proto__")) return false;
    if (pa->closure.has_value() != pb.closure.has_value()) {
      fail(path);
      return false;
    }
    if (pa->closure) {
      if (!exprEqual(pa->closure->abs, pb.closure->abs)) {
        fail(path);
        return false;
      }
      if (!env(pa->closure->env, pb.closure->env, path)) return false;
    }
    return true;
  }
  if (const auto* sa = std::get_if<SandboxProxy>(&oa)) {
    const auto& sb = std::get<SandboxProxy>(ob);
    if (!loc(sa->target, sb.target, path + ".<target>")) return false;
    if (!loc(sa->shadow, sb.shadow, path + ".<shadow>")) return false;
    return env(sa->sbxEnv, sb.sbxEnv, path);
  }
  const auto& wa = std::get<OutwardProxy>(oa);
  const auto& wb = std::get<OutwardProxy>(ob);
  if (!loc(wa.inner, wb.inner, path + ".<inner>")) return false;
  return env(wa.sbxEnv, wb.sbxEnv, path);
}

}  // namespace

bool eqValue(const Store& s1, const Value& v1, const Store& s2, const Value& v2,
             std::string* witness, const std::string& rootName) {
  EqCtx ctx{s1, s2};
  ctx.witness = witness;
  return ctx.value(v1, v2, rootName);
}

bool eqEnv(const Store& s1, const Env& e1, const Store& s2, const Env& e2,
           std::string* witness) {
  EqCtx ctx{s1, s2};
  ctx.witness = witness;
  return ctx.env(e1, e2, "env");
}

}  // namespace decent
