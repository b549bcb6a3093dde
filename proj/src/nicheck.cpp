#include "decent/nicheck.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "decent/equiv.hpp"

namespace decent {

std::string showValue(const Store& store, const Value& v, int depth) {
  if (isConstant(v)) {
    const Constant& c = asConstant(v);
    if (c.isString()) return "\"" + c.str() + "\"";
    return stringifyKey(c);
  }
  if (isSandboxClosure(v)) return "<sandbox-fun>";
  Loc l = asLoc(v);
  const StoredObject& o = store.at(l);
  if (const auto* p = std::get_if<PlainObject>(&o)) {
    if (p->closure && p->dict.empty()) return "<fun#" + std::to_string(l.index) + ">";
    if (depth <= 0) return "<obj#" + std::to_string(l.index) + ">";
    std::string out = "{";
    bool first = true;
    for (const auto& [k, pv] : p->dict) {
      if (!first) out += ", ";
      first = false;
      out += k + ": " + showValue(store, pv, depth - 1);
    }
    return out + "}";
  }
  if (std::holds_alternative<SandboxProxy>(o))
    return "<proxy#" + std::to_string(l.index) + ">";
  return "<outward#" + std::to_string(l.index) + ">";
}

namespace {

struct SetupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// one `name = expr` binding per non-empty line
Env evalSetup(Interp& in, const std::string& setup, std::uint64_t budget) {
  Env rho;
  std::istringstream is(setup);
  std::string line;
  int lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw SetupError("setup line " + std::to_string(lineNo) +
                       " is not a `name = expr` binding");
    std::string name = line.substr(0, eq);
    std::string expr = line.substr(eq + 3);
    std::set<std::string> predefined;
    for (const auto& [n, v] : rho) predefined.insert(n);
    ExprPtr core = desugar(parse(expr), std::nullopt, predefined);
    rho[name] = in.eval(rho, core, budget);
  }
  return rho;
}

std::optional<Value> valueAtPath(const Store& store, const Env& rho,
                                 const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  auto it = rho.find(parts[0]);
  if (it == rho.end()) return std::nullopt;
  Value v = it->second;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (!isLoc(v)) return std::nullopt;
    const auto* p = std::get_if<PlainObject>(&store.at(asLoc(v)));
    if (!p) return std::nullopt;
    if (parts[i] == "__proto__") {
      v = p->proto;
      continue;
    }
    const Value* next = p->dict.find(parts[i]);
    if (!next) return std::nullopt;
    v = *next;
  }
  return v;
}

}  // namespace

NIReport checkNoninterference(const std::string& setup, const std::string& body,
                              const std::string& arg, std::uint64_t budget,
                              bool membraneEnabled) {
  NIReport report;
  Interp in;
  in.membraneEnabled = membraneEnabled;
  Env rho;
  Value argV;
  ExprPtr bodyCore;
  try {
    rho = evalSetup(in, setup, budget);
    std::set<std::string> predefined;
    for (const auto& [n, v] : rho) predefined.insert(n);
    argV = in.eval(rho, desugar(parse(arg), std::nullopt, predefined), budget);
    bodyCore = desugar(parse(body), "g");
  } catch (const std::exception& e) {
    report.harnessError = e.what();
    return report;
  }

  Store before = in.store;  // append-only, so indices stay aligned

  try {
    ExprPtr app = makeApp(makeFresh(makeSbxAbs("g", bodyCore)), makeVar("__arg"));
    Env env;
    env["__arg"] = argV;
    in.eval(env, app, budget);
  } catch (const EvalError&) {
    // termination and error insensitive: only store changes matter
  }

  for (const auto& [name, v] : rho) {
    std::string path;
    if (!eqValue(before, v, in.store, v, &path, name)) {
      NIWitness w;
      w.root = name;
      w.path = path;
      Env beforeRho = rho;
      auto lv = valueAtPath(before, beforeRho, path);
      auto rv = valueAtPath(in.store, rho, path);
      w.left = lv ? showValue(before, *lv) : "?";
      w.right = rv ? showValue(in.store, *rv) : "?";
      report.witness = w;
      report.pass = false;
      return report;
    }
  }
  report.pass = true;
  return report;
}

// ---------------------------------------------------------------------------
// Differential evaluation under location renaming

namespace {

Value remapValue(const Value& v, const std::vector<std::uint32_t>& pi);

Env remapEnv(const Env& e, const std::vector<std::uint32_t>& pi) {
  Env out;
  for (const auto& [n, v] : e) out[n] = remapValue(v, pi);
  return out;
}

Value remapValue(const Value& v, const std::vector<std::uint32_t>& pi) {
  if (isLoc(v)) return Loc{pi.at(asLoc(v).index)};
  if (isSandboxClosure(v)) {
    const auto& sc = asSandboxClosure(v);
    auto copy = std::make_shared<SandboxClosure>();
    copy->env = remapEnv(sc->env, pi);
    copy->abs = sc->abs;
    copy->sandboxId = sc->sandboxId;
    return Value(std::shared_ptr<const SandboxClosure>(copy));
  }
  return v;
}

StoredObject remapObject(const StoredObject& o, const std::vector<std::uint32_t>& pi) {
  if (const auto* p = std::get_if<PlainObject>(&o)) {
    PlainObject out;
    for (const auto& [k, v] : p->dict) out.dict.set(k, remapValue(v, pi));
    out.proto = remapValue(p->proto, pi);
    if (p->closure)
      out.closure = Closure{remapEnv(p->closure->env, pi), p->closure->abs};
    return out;
  }
  if (const auto* sp = std::get_if<SandboxProxy>(&o)) {
    return SandboxProxy{Loc{pi.at(sp->target.index)}, Loc{pi.at(sp->shadow.index)},
                        remapEnv(sp->sbxEnv, pi), sp->sandboxId};
  }
  const auto& op = std::get<OutwardProxy>(o);
  return OutwardProxy{Loc{pi.at(op.inner.index)}, remapEnv(op.sbxEnv, pi),
                      op.sandboxId};
}

}  // namespace

bool differentialCheck(const std::string& setup, const std::string& program,
                       std::uint64_t renameSeed, std::uint64_t budget,
                       std::string* failure) {
  auto fail = [&](const std::string& msg) {
    if (failure) *failure = msg;
    return false;
  };
  Interp a;
  Env rhoA;
  ExprPtr core;
  try {
    rhoA = evalSetup(a, setup, budget);
    std::set<std::string> predefined;
    for (const auto& [n, v] : rhoA) predefined.insert(n);
    core = desugar(parse(program), std::nullopt, predefined);
  } catch (const std::exception& e) {
    return fail(std::string("setup failed: ") + e.what());
  }

  std::size_t n = a.store.size();
  std::vector<std::uint32_t> pi(n);
  std::iota(pi.begin(), pi.end(), 0);
  std::mt19937_64 rng(renameSeed);
  std::shuffle(pi.begin(), pi.end(), rng);

  Interp b;
  {
    std::vector<StoredObject> slots(n, PlainObject{});
    std::vector<int> owners(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      slots[pi[i]] = remapObject(a.store.at(Loc{static_cast<std::uint32_t>(i)}), pi);
      owners[pi[i]] = a.store.owner(Loc{static_cast<std::uint32_t>(i)});
    }
    for (std::size_t i = 0; i < n; ++i) b.store.alloc(std::move(slots[i]), owners[i]);
  }
  Env rhoB = remapEnv(rhoA, pi);

  std::optional<Value> resA, resB;
  std::optional<EvalErrorKind> errA, errB;
  try {
    resA = a.eval(rhoA, core, budget);
  } catch (const EvalError& e) {
    errA = e.kind;
  }
  try {
    resB = b.eval(rhoB, core, budget);
  } catch (const EvalError& e) {
    errB = e.kind;
  }
  if (errA.has_value() != errB.has_value())
    return fail("one run raised an error and the other did not");
  if (errA && errB) {
    if (*errA != *errB) return fail("runs raised different error kinds");
  } else {
    std::string path;
    if (!eqValue(a.store, *resA, b.store, *resB, &path, "result"))
      return fail("results differ at " + path);
  }
  std::string path;
  if (!eqEnv(a.store, rhoA, b.store, rhoB, &path))
    return fail("bindings differ at " + path);
  return true;
}

}  // namespace decent
