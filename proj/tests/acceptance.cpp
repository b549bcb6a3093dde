// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Run from the repository root so the scenario files resolve.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "decent/equiv.hpp"
#include "decent/gen.hpp"
#include "decent/interp.hpp"
#include "decent/nicheck.hpp"
#include "decent/repl.hpp"
#include "decent/syntax.hpp"

using namespace decent;
using Clock = std::chrono::steady_clock;

namespace {

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Value run(Interp& in, const std::string& src, const Env& env = {}) {
  std::set<std::string> names;
  for (const auto& [k, v] : env) names.insert(k);
  return in.eval(env, desugar(parse(src), std::nullopt, names));
}

bool throwsEval(Interp& in, const std::string& src, EvalErrorKind kind) {
  try {
    run(in, src);
  } catch (const EvalError& e) {
    return e.kind == kind;
  } catch (...) {
    return false;
  }
  return false;
}

bool isNumber(const Value& v, double n) {
  return isConstant(v) && asConstant(v) == Constant(n);
}

// --------------------------------------------------------------------------
// 1. primer transcript

bool criterion1(std::string& detail) {
  auto t0 = Clock::now();
  std::ifstream script("scenarios/primer.djs");
  std::ifstream golden("scenarios/primer.expected");
  if (!script || !golden) {
    detail = "scenario files missing (run from the repository root)";
    return false;
  }
  ReplSession session;
  std::ostringstream got;
  std::string line;
  while (!session.quitRequested() && std::getline(script, line)) {
    std::string out = session.dispatch(line);
    if (!out.empty()) got << out << "\n";
  }
  std::ostringstream want;
  want << golden.rdbuf();
  double dt = secondsSince(t0);
  if (got.str() != want.str()) {
    detail = "transcript output diverged from the checked-in golden file";
    return false;
  }
  if (dt >= 1.0) {
    detail = "transcript took too long";
    return false;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "byte-identical, %.3fs", dt);
  detail = buf;
  return true;
}

// --------------------------------------------------------------------------
// 2. one check per semantics rule

bool criterion2(std::string& detail) {
  auto t0 = Clock::now();
  using Check = std::pair<const char*, std::function<bool()>>;
  std::vector<Check> checks;
  auto add = [&](const char* name, std::function<bool()> f) {
    checks.emplace_back(name, std::move(f));
  };

  // core evaluation
  add("constant", [] { Interp i; return isNumber(run(i, "42"), 42); });
  add("variable", [] {
    Interp i;
    if (!isNumber(run(i, "let x = 5; x"), 5)) return false;
    try {
      i.eval(Env{}, makeVar("nope"));
    } catch (const EvalError& e) {
      return e.kind == EvalErrorKind::UnboundVariable;
    }
    return false;
  });
  add("operator left fault", [] {
    Interp i;
    return throwsEval(i, "(1 + true) + 2", EvalErrorKind::TypeError);
  });
  add("operator right fault", [] {
    Interp i;
    return throwsEval(i, "1 + (new null)", EvalErrorKind::TypeError);
  });
  add("operator", [] { Interp i; return isNumber(run(i, "2 + 3"), 5); });
  add("abstraction", [] {
    Interp i;
    Value v = run(i, "fun (x) => x");
    if (!isLoc(v)) return false;
    const auto& p = std::get<PlainObject>(i.store.at(asLoc(v)));
    return p.closure.has_value() && isConstant(p.proto) &&
           asConstant(p.proto).isNull();
  });
  add("application callee fault", [] {
    Interp i;
    return throwsEval(i, "(1 + true)(2)", EvalErrorKind::TypeError);
  });
  add("application argument fault", [] {
    Interp i;
    return throwsEval(i, "(fun (x) => x)(1 + true)", EvalErrorKind::TypeError);
  });
  add("application", [] {
    Interp i;
    return isNumber(run(i, "(fun (x) => x + 1)(4)"), 5);
  });
  add("new prototype fault", [] {
    Interp i;
    return throwsEval(i, "new (1 + true)", EvalErrorKind::TypeError);
  });
  add("new", [] {
    Interp i;
    Value v = run(i, "new null");
    return isLoc(v) && std::holds_alternative<PlainObject>(i.store.at(asLoc(v)));
  });
  add("get receiver fault", [] {
    Interp i;
    return throwsEval(i, "(1 + true)[\"a\"]", EvalErrorKind::TypeError);
  });
  add("get key fault", [] {
    Interp i;
    return throwsEval(i, "(new null)[1 + true]", EvalErrorKind::TypeError);
  });
  add("get own property", [] {
    Interp i;
    return isNumber(run(i, "let o = new null; let t = (o[\"a\"] = 2); o[\"a\"]"), 2);
  });
  add("get through prototype", [] {
    Interp i;
    return isNumber(
        run(i, "let p = new null; let t = (p[\"a\"] = 3); let c = new p; c[\"a\"]"), 3);
  });
  add("get absent is undefined", [] {
    Interp i;
    Value v = run(i, "(new null)[\"missing\"]");
    return isConstant(v) && asConstant(v).isUndefined();
  });
  add("put receiver fault", [] {
    Interp i;
    return throwsEval(i, "(1 + true)[\"a\"] = 1", EvalErrorKind::TypeError);
  });
  add("put key fault", [] {
    Interp i;
    return throwsEval(i, "(new null)[1 + true] = 1", EvalErrorKind::TypeError);
  });
  add("put value fault", [] {
    Interp i;
    return throwsEval(i, "(new null)[\"a\"] = (1 + true)", EvalErrorKind::TypeError);
  });
  add("put stores and yields the value", [] {
    Interp i;
    Value o = run(i, "new null");
    Env env{{"o", o}};
    Value r = run(i, "o[\"a\"] = 7", env);
    const auto& p = std::get<PlainObject>(i.store.at(asLoc(o)));
    return isNumber(r, 7) && isNumber(*p.dict.find("a"), 7);
  });

  // sandbox introduction
  add("fresh operand fault", [] {
    Interp i;
    return throwsEval(i, "fresh ((1 + true))", EvalErrorKind::TypeError);
  });
  add("fresh sandbox empty environment", [] {
    Interp i;
    return isNumber(run(i, "(fresh (sbx g => 1))(new null)"), 1);
  });
  add("nested sandbox abstraction", [] {
    Interp i;
    return isNumber(run(i, "((fresh (sbx g => sbx h => h))(new null))(5)"), 5);
  });
  add("sandbox application isolates writes", [] {
    Interp i;
    return isNumber(run(i,
                        "let o = new null; let t = (o[\"a\"] = 1); "
                        "let r = (fresh (sbx g => (g[\"a\"] = 9)))(o); o[\"a\"]"),
                    1);
  });

  // wrapping
  add("constants cross unwrapped", [] {
    Interp i;
    Value v = run(i, "(fresh (sbx g => typeof g))(5)");
    return isConstant(v) && asConstant(v) == Constant("number");
  });
  add("sandbox closures cross unwrapped", [] {
    Interp i;
    Value sc = run(i, "(fresh (sbx g => sbx h => h))(new null)");
    int id = i.sandboxNew(undefinedValue());
    Value w = i.wrap(i.sandbox(id), sc);
    return std::holds_alternative<std::shared_ptr<const SandboxClosure>>(w) &&
           std::get<std::shared_ptr<const SandboxClosure>>(w) ==
               std::get<std::shared_ptr<const SandboxClosure>>(sc);
  });
  add("objects wrap to a proxy with an empty shadow", [] {
    Interp i;
    Value o = run(i, "new null");
    int id = i.sandboxNew(undefinedValue());
    Value w = i.wrap(i.sandbox(id), o);
    if (!isLoc(w)) return false;
    const auto* sp = std::get_if<SandboxProxy>(&i.store.at(asLoc(w)));
    if (!sp || !(sp->target == asLoc(o))) return false;
    const auto& sh = std::get<PlainObject>(i.store.at(sp->shadow));
    return sh.dict.empty();
  });
  add("wrapping twice reuses the proxy", [] {
    Interp i;
    Value o = run(i, "new null");
    int id = i.sandboxNew(undefinedValue());
    Value w1 = i.wrap(i.sandbox(id), o);
    Value w2 = i.wrap(i.sandbox(id), o);
    return isLoc(w1) && asLoc(w1) == asLoc(w2);
  });
  add("wrapping a proxy of the same sandbox is the identity", [] {
    Interp i;
    Value o = run(i, "new null");
    int id = i.sandboxNew(undefinedValue());
    Value w = i.wrap(i.sandbox(id), o);
    Value ww = i.wrap(i.sandbox(id), w);
    return asLoc(w) == asLoc(ww);
  });

  // recompilation
  add("data objects recompile to an empty write sink", [] {
    Interp i;
    Value o = run(i, "let o = new null; let t = (o[\"a\"] = 1); o");
    int id = i.sandboxNew(undefinedValue());
    Loc sh = i.recompile(i.sandbox(id), asLoc(o));
    const auto& p = std::get<PlainObject>(i.store.at(sh));
    return p.dict.empty() && !p.closure.has_value();
  });
  add("recompilation erases external bindings", [] {
    Interp i;
    Value fn = run(i, "let x = 1; fun (y) => x");
    int id = i.sandboxNew(undefinedValue());
    try {
      i.sandboxCall(id, fn, numberValue(0.0));
    } catch (const EvalError& e) {
      return e.kind == EvalErrorKind::UnboundVariable;
    }
    return false;
  });
  add("recompiling twice reuses the shadow", [] {
    Interp i;
    Value o = run(i, "new null");
    int id = i.sandboxNew(undefinedValue());
    return i.recompile(i.sandbox(id), asLoc(o)) ==
           i.recompile(i.sandbox(id), asLoc(o));
  });
  add("recompiling a proxy targets its object", [] {
    Interp i;
    Value o = run(i, "new null");
    int id = i.sandboxNew(undefinedValue());
    Value w = i.wrap(i.sandbox(id), o);
    return i.recompile(i.sandbox(id), asLoc(w)) ==
           i.recompile(i.sandbox(id), asLoc(o));
  });

  // proxy dispatch
  add("calls through a proxy log a call record", [] {
    Interp i;
    Value fn = run(i, "fun (x) => x");
    int id = i.sandboxNew(undefinedValue());
    Value r = i.sandboxCall(id, fn, numberValue(3.0));
    const auto& log = i.sandbox(id).log;
    return isNumber(r, 3) && log.size() == 1 &&
           log[0].kind == EffectKind::Call &&
           formatEffect(log[0], false).find("call [name=-]") != std::string::npos;
  });
  add("shadow hits are served without logging", [] {
    Interp i;
    Value g = run(i, "new null");
    int id = i.sandboxNew(g);
    i.sandboxLoad(id, "g.a = 5");
    std::size_t before = i.sandbox(id).log.size();
    Value r = i.sandboxLoad(id, "g.a");
    std::size_t gets = 0;
    for (const auto& rec : i.sandbox(id).log)
      if (rec.kind == EffectKind::Get && rec.prop == "a") ++gets;
    (void)before;
    return isNumber(r, 5) && gets == 0;
  });
  add("reads forward, log the observed value, and wrap", [] {
    Interp i;
    Value g = run(i, "let o = new null; let t = (o[\"n\"] = 7); o");
    int id = i.sandboxNew(g);
    Value r = i.sandboxLoad(id, "g.n");
    for (const auto& rec : i.sandbox(id).log)
      if (rec.kind == EffectKind::Get && rec.prop == "n")
        return isNumber(r, 7) && rec.observed && isNumber(*rec.observed, 7);
    return false;
  });
  add("writes land in the shadow and log old and new", [] {
    Interp i;
    Value g = run(i, "let o = new null; let t = (o[\"n\"] = 7); o");
    int id = i.sandboxNew(g);
    i.sandboxLoad(id, "g.n = 8");
    const auto& p = std::get<PlainObject>(i.store.at(asLoc(g)));
    if (!isNumber(*p.dict.find("n"), 7)) return false;
    for (const auto& rec : i.sandbox(id).log)
      if (rec.kind == EffectKind::Set && rec.prop == "n")
        return isNumber(*rec.oldValue, 7) && isNumber(*rec.newValue, 8);
    return false;
  });

  int failed = 0;
  std::string firstBad;
  for (const auto& [name, f] : checks) {
    bool ok = false;
    try {
      ok = f();
    } catch (...) {
      ok = false;
    }
    if (!ok) {
      ++failed;
      if (firstBad.empty()) firstBad = name;
    }
  }
  double dt = secondsSince(t0);
  if (failed > 0) {
    detail = std::to_string(failed) + " rule checks failed, first: " + firstBad;
    return false;
  }
  if (dt >= 1.0) {
    detail = "rule checks took too long";
    return false;
  }
  char buf[80];
  std::snprintf(buf, sizeof buf, "%zu rule checks, %.3fs", checks.size(), dt);
  detail = buf;
  return true;
}

// --------------------------------------------------------------------------
// 3. identity preservation over generated graphs

bool criterion3(std::string& detail) {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    Interp in;
    int n = 3 + static_cast<int>(rng() % 8);
    std::vector<Loc> objs;
    for (int i = 0; i < n; ++i) objs.push_back(in.store.alloc(PlainObject{}));
    for (int i = 0; i < n; ++i) {
      auto& o = std::get<PlainObject>(in.store.at(objs[i]));
      int edges = static_cast<int>(rng() % 3);
      for (int e = 0; e < edges; ++e)
        o.dict.set("e" + std::to_string(e), Value(objs[rng() % n]));
    }
    // aliasing: A.x.z and A.y reach the same object
    Loc A = objs[0], B = objs[1], C = objs[2];
    std::get<PlainObject>(in.store.at(A)).dict.set("x", Value(B));
    std::get<PlainObject>(in.store.at(A)).dict.set("y", Value(C));
    std::get<PlainObject>(in.store.at(B)).dict.set("z", Value(C));

    int id = in.sandboxNew(Value(A));
    SandboxState& st = in.sandbox(id);
    for (Loc l : objs) {
      Value w1 = in.wrap(st, Value(l));
      Value w2 = in.wrap(st, Value(l));
      if (!isLoc(w1) || !(asLoc(w1) == asLoc(w2))) {
        detail = "wrap is not idempotent on trial " + std::to_string(trial);
        return false;
      }
    }
    Loc pA = *st.globalProxy;
    Value vx = in.proxyGet(pA, Constant("x"));
    Value vz = in.proxyGet(asLoc(vx), Constant("z"));
    Value vy = in.proxyGet(pA, Constant("y"));
    if (!isLoc(vz) || !isLoc(vy) || !(asLoc(vz) == asLoc(vy))) {
      detail = "aliased reads returned distinct proxies on trial " +
               std::to_string(trial);
      return false;
    }
  }
  detail = "200 graphs, wrap idempotent, aliased reads share one proxy";
  return true;
}

// --------------------------------------------------------------------------
// 4. noninterference suite with negative control

bool criterion4(std::string& detail) {
  auto t0 = Clock::now();
  int failures = 0, harness = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    NITriple t = genTriple(seed, 30);
    NIReport r = checkNoninterference(t.setup, t.body, t.arg);
    if (r.harnessError) ++harness;
    else if (!r.pass) ++failures;
  }
  int caught = 0, witnesses = 0;
  for (int i = 0; i < 20; ++i) {
    NITriple t = mutationTriple(i);
    NIReport r = checkNoninterference(t.setup, t.body, t.arg,
                                      Interp::kDefaultBudget, false);
    if (!r.pass && !r.harnessError) {
      ++caught;
      if (r.witness) ++witnesses;
    }
  }
  double dt = secondsSince(t0);
  if (failures > 0 || harness > 0) {
    detail = std::to_string(failures) + " equivalence failures, " +
             std::to_string(harness) + " harness errors in 1000 guarded trials";
    return false;
  }
  if (caught < 20 || witnesses < 20) {
    detail = "negative control caught only " + std::to_string(caught) +
             "/20 with " + std::to_string(witnesses) + " witnesses";
    return false;
  }
  if (dt >= 60.0) {
    detail = "suite exceeded the time limit";
    return false;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "1000/1000 guarded pass; 20/20 unguarded fail with witnesses; %.2fs", dt);
  detail = buf;
  return true;
}

// --------------------------------------------------------------------------
// 5. differential suite under store renaming

bool criterion5(std::string& detail) {
  auto t0 = Clock::now();
  int ok = 0;
  std::string firstWhy;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    NITriple t = genTriple(seed, 20);
    std::string program = "(fresh (sbx g => " + t.body + "))(" + t.arg + ")";
    std::string why;
    if (differentialCheck(t.setup, program, seed * 131 + 17,
                          Interp::kDefaultBudget, &why))
      ++ok;
    else if (firstWhy.empty())
      firstWhy = "seed " + std::to_string(seed) + ": " + why;
  }
  double dt = secondsSince(t0);
  if (ok != 500) {
    detail = std::to_string(ok) + "/500 agreed; first divergence " + firstWhy;
    return false;
  }
  if (dt >= 30.0) {
    detail = "suite exceeded the time limit";
    return false;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "500/500 agree under renaming, %.2fs", dt);
  detail = buf;
  return true;
}

// --------------------------------------------------------------------------
// 6. rollback against a reverse-replay oracle

bool criterion6(std::string& detail) {
  std::mt19937_64 rng(606);
  const std::vector<std::string> keys{"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 300; ++trial) {
    Interp in;
    // target with a couple of pre-existing keys
    Value g = run(in,
                  "let o = new null; let t = (o[\"a\"] = 10); "
                  "let u = (o[\"b\"] = 20); o");
    int id = in.sandboxNew(g);
    Loc proxy = *in.sandbox(id).globalProxy;

    // oracle: a journal of (key, previous entry) pairs; previous entry is
    // what a read would have seen before the write (shadow, else target,
    // else absent)
    std::map<std::string, double> shadowModel;
    std::map<std::string, double> targetModel{{"a", 10}, {"b", 20}};
    std::vector<std::pair<std::string, std::optional<double>>> journal;
    int writes = 1 + static_cast<int>(rng() % 15);
    for (int i = 0; i < writes; ++i) {
      const std::string& k = keys[rng() % keys.size()];
      double v = static_cast<double>(rng() % 1000);
      std::optional<double> prev;
      if (auto it = shadowModel.find(k); it != shadowModel.end())
        prev = it->second;
      else if (auto jt = targetModel.find(k); jt != targetModel.end())
        prev = jt->second;
      journal.emplace_back(k, prev);
      in.proxyPut(proxy, Constant(k), numberValue(v));
      shadowModel[k] = v;
    }
    // reverse replay on the model
    for (auto it = journal.rbegin(); it != journal.rend(); ++it) {
      if (it->second)
        shadowModel[it->first] = *it->second;
      else
        shadowModel.erase(it->first);
    }
    in.rollbackAll(id);
    const auto& sp = std::get<SandboxProxy>(in.store.at(proxy));
    const auto& shadow = std::get<PlainObject>(in.store.at(sp.shadow));
    if (shadow.dict.size() != shadowModel.size()) {
      detail = "shadow size diverged from the oracle on trial " +
               std::to_string(trial);
      return false;
    }
    for (const auto& [k, v] : shadowModel) {
      const Value* got = shadow.dict.find(k);
      if (!got || !isNumber(*got, v)) {
        detail = "shadow value diverged from the oracle on trial " +
                 std::to_string(trial);
        return false;
      }
    }
  }
  detail = "300 random write sequences match the reverse-replay oracle";
  return true;
}

// --------------------------------------------------------------------------
// 7. stats dedup against brute-force sets

bool criterion7(std::string& detail) {
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 200; ++trial) {
    Interp in;
    std::vector<Loc> objs;
    std::vector<Loc> fns;
    for (int i = 0; i < 3; ++i)
      objs.push_back(asLoc(run(in, "new null")));
    for (int i = 0; i < 2; ++i)
      fns.push_back(asLoc(run(in, "fun (x) => x")));
    int id = in.sandboxNew(undefinedValue());
    SandboxState& st = in.sandbox(id);

    // brute-force model of the distinct (target, prop) sets per kind;
    // reads served by the shadow (after a write) never reach the log
    std::set<std::pair<std::uint32_t, std::string>> reads, writes, calls;
    const std::vector<std::string> props{"p", "q", "r"};
    int ops = 5 + static_cast<int>(rng() % 25);
    for (int i = 0; i < ops; ++i) {
      switch (rng() % 3) {
        case 0: {
          Loc o = objs[rng() % objs.size()];
          const std::string& p = props[rng() % props.size()];
          in.proxyGet(asLoc(in.wrap(st, Value(o))), Constant(p));
          if (!writes.count({o.index, p})) reads.insert({o.index, p});
          break;
        }
        case 1: {
          Loc o = objs[rng() % objs.size()];
          const std::string& p = props[rng() % props.size()];
          in.proxyPut(asLoc(in.wrap(st, Value(o))), Constant(p),
                      numberValue(static_cast<double>(rng() % 50)));
          writes.insert({o.index, p});
          break;
        }
        default: {
          Loc f = fns[rng() % fns.size()];
          in.proxyApp(asLoc(in.wrap(st, Value(f))), numberValue(1.0));
          calls.insert({f.index, ""});
          break;
        }
      }
    }
    StatsSnapshot s = in.stats(id);
    if (s.distinctReads != reads.size() || s.distinctWrites != writes.size() ||
        s.distinctCalls != calls.size() || s.distinctReads > s.effectsTotal) {
      detail = "counters diverged from brute-force sets on trial " +
               std::to_string(trial);
      return false;
    }
  }
  detail = "200 randomized logs, counters equal brute-force set sizes";
  return true;
}

// --------------------------------------------------------------------------
// 8. membrane-crossing smoke benchmark

bool criterion8(std::string& detail) {
  auto timeLoop = [](bool logging) {
    Interp in;
    in.effectLogging = logging;
    Value g = run(in, "let o = new null; let t = (o[\"n\"] = 0); o");
    Value fn = run(in, "fun (x) => x + 1");
    int id = in.sandboxNew(g);
    auto t0 = Clock::now();
    for (int i = 0; i < 10000; ++i)
      in.sandboxCall(id, fn, numberValue(static_cast<double>(i)));
    return secondsSince(t0);
  };
  double withLog, withoutLog;
  try {
    withLog = timeLoop(true);
    withoutLog = timeLoop(false);
  } catch (const EvalError&) {
    detail = "a crossing exceeded the step budget";
    return false;
  }
  if (withLog >= 5.0 || withoutLog >= 5.0) {
    detail = "crossings too slow";
    return false;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "10000 crossings: %.3fs logging on, %.3fs logging off", withLog,
                withoutLog);
  detail = buf;
  return true;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* title;
    bool (*check)(std::string&);
  };
  const Criterion criteria[] = {
      {1, "primer transcript reproduces the golden output", criterion1},
      {2, "every semantics rule has a passing check", criterion2},
      {3, "identity-preserving membranes on generated graphs", criterion3},
      {4, "noninterference suite with negative control", criterion4},
      {5, "differential agreement under store renaming", criterion5},
      {6, "rollback matches the reverse-replay oracle", criterion6},
      {7, "stats counters match brute-force dedup", criterion7},
      {8, "membrane-crossing smoke benchmark", criterion8},
  };
  bool allPass = true;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.check(detail);
    } catch (const std::exception& e) {
      detail = std::string("unexpected exception: ") + e.what();
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.number << ": "
              << c.title;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) allPass = false;
  }
  return allPass ? 0 : 1;
}
