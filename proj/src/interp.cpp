#include "decent/interp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace decent {

std::string renderSandboxTag(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "SBX%03d", id);
  return buf;
}

namespace {

const char* effectKindName(EffectKind k) {
  switch (k) {
    case EffectKind::Has: return "has";
    case EffectKind::Get: return "get";
    case EffectKind::Set: return "set";
    case EffectKind::Call: return "call";
  }
  return "?";
}

EvalError typeError(const std::string& msg) {
  return EvalError(EvalErrorKind::TypeError, "TypeError: " + msg);
}

bool truthy(const Value& v) {
  if (!isConstant(v)) return true;
  const Constant& c = asConstant(v);
  if (c.isUndefined() || c.isNull()) return false;
  if (c.isBool()) return c.boolean();
  if (c.isNumber()) return c.number() != 0.0;
  return !c.str().empty();
}

}  // namespace

std::string formatEffect(const EffectRecord& e, bool withSandboxTag) {
  std::ostringstream os;
  os << "(" << e.seq << ") " << effectKindName(e.kind) << " [name="
     << (e.kind == EffectKind::Call ? "-" : e.prop) << "]";
  if (withSandboxTag) os << "@" << renderSandboxTag(e.sandboxId);
  return os.str();
}

std::string formatConflict(const Conflict& c) {
  return "Conflict: " + formatEffect(c.mine, true) + " - " +
         formatEffect(c.theirs, true);
}

// ---------------------------------------------------------------------------
// Budget and sandbox-context scopes

struct Interp::SandboxScope {
  Interp& in;
  explicit SandboxScope(Interp& i, int id) : in(i) { in.sandboxStack_.push_back(id); }
  ~SandboxScope() { in.sandboxStack_.pop_back(); }
};

namespace {

struct BudgetScope {
  Interp* in = nullptr;
  std::uint64_t* left = nullptr;
  std::uint64_t* budget = nullptr;
  bool outer = false;
  BudgetScope(std::uint64_t* l, std::uint64_t* b, std::uint64_t amount)
      : left(l), budget(b) {
    if (*budget == 0) {
      outer = true;
      *budget = amount;
      *left = amount;
    }
  }
  ~BudgetScope() {
    if (outer) {
      *budget = 0;
      *left = 0;
    }
  }
};

}  // namespace

void Interp::tick() {
  if (currentBudget_ == 0) {
    // direct use of a membrane operation outside eval; give it the default
    currentBudget_ = kDefaultBudget;
    stepsLeft_ = kDefaultBudget;
  }
  if (stepsLeft_ == 0) {
    EvalError e(EvalErrorKind::StepBudgetExceeded,
                "step budget exceeded (" + std::to_string(currentBudget_) + ")");
    e.budget = currentBudget_;
    throw e;
  }
  --stepsLeft_;
}

// ---------------------------------------------------------------------------
// Primitive operations

Value Interp::applyPrimop(const std::string& op, const Value& u,
                          const std::optional<Value>& v) {
  if (!v) {  // unary
    if (op == "typeof") {
      if (isLoc(u)) return stringValue("object");
      if (isSandboxClosure(u)) return stringValue("function");
      const Constant& c = asConstant(u);
      if (c.isUndefined()) return stringValue("undefined");
      if (c.isNull()) return stringValue("object");
      if (c.isBool()) return stringValue("boolean");
      if (c.isNumber()) return stringValue("number");
      return stringValue("string");
    }
    if (op == "!") {
      if (isConstant(u) && asConstant(u).isBool()) return boolValue(!asConstant(u).boolean());
      throw typeError("'!' expects a boolean");
    }
    if (op == "-") {
      if (isConstant(u) && asConstant(u).isNumber()) return numberValue(-asConstant(u).number());
      throw typeError("unary '-' expects a number");
    }
    throw typeError("unknown unary operator " + op);
  }

  if (op == "===" || op == "!==") {
    bool eq;
    if (isLoc(u) && isLoc(*v)) {
      eq = asLoc(u) == asLoc(*v);
    } else if (isSandboxClosure(u) && isSandboxClosure(*v)) {
      eq = asSandboxClosure(u) == asSandboxClosure(*v);
    } else if (isConstant(u) && isConstant(*v)) {
      eq = asConstant(u) == asConstant(*v);
    } else {
      eq = false;
    }
    return boolValue(op == "===" ? eq : !eq);
  }

  if (op == "&&" || op == "||") {
    if (isConstant(u) && isConstant(*v) && asConstant(u).isBool() &&
        asConstant(*v).isBool()) {
      bool a = asConstant(u).boolean(), b = asConstant(*v).boolean();
      return boolValue(op == "&&" ? (a && b) : (a || b));
    }
    throw typeError("'" + op + "' expects booleans");
  }

  auto bothNumbers = [&]() -> std::pair<double, double> {
    if (isConstant(u) && isConstant(*v) && asConstant(u).isNumber() &&
        asConstant(*v).isNumber())
      return {asConstant(u).number(), asConstant(*v).number()};
    throw typeError("'" + op + "' expects numbers");
  };

  if (op == "+") {
    if (isConstant(u) && isConstant(*v) && asConstant(u).isString() &&
        asConstant(*v).isString())
      return stringValue(asConstant(u).str() + asConstant(*v).str());
    auto [a, b] = bothNumbers();
    return numberValue(a + b);
  }
  if (op == "-") { auto [a, b] = bothNumbers(); return numberValue(a - b); }
  if (op == "*") { auto [a, b] = bothNumbers(); return numberValue(a * b); }
  if (op == "/") { auto [a, b] = bothNumbers(); return numberValue(a / b); }
  if (op == "%") { auto [a, b] = bothNumbers(); return numberValue(std::fmod(a, b)); }

  auto comparable = [&]() -> int {
    if (isConstant(u) && isConstant(*v)) {
      const Constant& a = asConstant(u);
      const Constant& b = asConstant(*v);
      if (a.isNumber() && b.isNumber())
        return a.number() < b.number() ? -1 : (a.number() > b.number() ? 1 : 0);
      if (a.isString() && b.isString())
        return a.str() < b.str() ? -1 : (a.str() > b.str() ? 1 : 0);
    }
    throw typeError("'" + op + "' expects two numbers or two strings");
  };
  if (op == "<") return boolValue(comparable() < 0);
  if (op == "<=") return boolValue(comparable() <= 0);
  if (op == ">") return boolValue(comparable() > 0);
  if (op == ">=") return boolValue(comparable() >= 0);

  throw typeError("unknown operator " + op);
}

// ---------------------------------------------------------------------------
// Evaluation

Value Interp::eval(const Env& env, const ExprPtr& e, std::uint64_t budget) {
  BudgetScope scope(&stepsLeft_, &currentBudget_, budget);
  return evalExpr(env, *e);
}

Value Interp::evalExpr(const Env& env, const Expr& e) {
  tick();
  switch (e.kind) {
    case ExprKind::Const:
      return e.lit;
    case ExprKind::Var: {
      auto it = env.find(e.name);
      if (it == env.end())
        throw EvalError(EvalErrorKind::UnboundVariable,
                        "unbound variable: " + e.name);
      return it->second;
    }
    case ExprKind::Op: {
      Value u = evalExpr(env, *e.a);
      if (!e.b) return applyPrimop(e.name, u, std::nullopt);
      Value v = evalExpr(env, *e.b);
      return applyPrimop(e.name, u, v);
    }
    case ExprKind::Abs: {
      Closure cl;
      cl.env = env;
      cl.abs = std::make_shared<Expr>(e);
      PlainObject o;
      o.closure = std::move(cl);
      o.proto = nullValue();
      return Value(allocHere(std::move(o)));
    }
    case ExprKind::App: {
      Value f = evalExpr(env, *e.a);
      if (isSandboxClosure(f)) {
        Value arg = evalExpr(env, *e.b);
        return applySandboxClosure(*asSandboxClosure(f), arg);
      }
      if (!isLoc(f)) throw typeError("applied value is not a function");
      Value arg = evalExpr(env, *e.b);
      return applyFunction(asLoc(f), arg);
    }
    case ExprKind::New: {
      Value proto = evalExpr(env, *e.a);
      PlainObject o;
      o.proto = proto;
      return Value(allocHere(std::move(o)));
    }
    case ExprKind::Get: {
      Value obj = evalExpr(env, *e.a);
      if (!isLoc(obj)) throw typeError("property read on a non-object");
      Value key = evalExpr(env, *e.b);
      if (!isConstant(key)) throw typeError("property key must be a constant");
      return getProperty(asLoc(obj), asConstant(key));
    }
    case ExprKind::Put: {
      Value obj = evalExpr(env, *e.a);
      if (!isLoc(obj)) throw typeError("property write on a non-object");
      Value key = evalExpr(env, *e.b);
      if (!isConstant(key)) throw typeError("property key must be a constant");
      Value v = evalExpr(env, *e.c);
      return putProperty(asLoc(obj), asConstant(key), v);
    }
    case ExprKind::SbxAbs: {
      if (currentSandbox() < 0)
        throw typeError("sandbox abstraction outside a sandbox; apply 'fresh'");
      auto sc = std::make_shared<SandboxClosure>();
      sc->env = env;
      sc->abs = std::make_shared<Expr>(e);
      sc->sandboxId = currentSandbox();
      return Value(std::shared_ptr<const SandboxClosure>(sc));
    }
    case ExprKind::Fresh: {
      if (e.a->kind == ExprKind::SbxAbs) return freshSandbox(e.a);
      evalExpr(env, *e.a);
      throw typeError("'fresh' expects a sandbox abstraction");
    }
    case ExprKind::Let:
    case ExprKind::Dot:
    case ExprKind::DotPut:
      throw typeError("sugared expression reached the evaluator; run desugar first");
  }
  throw std::logic_error("unreachable expression kind");
}

Value Interp::freshSandbox(const ExprPtr& sbxAbs) {
  SandboxState st;
  st.id = nextSandboxId_++;
  st.globalName = sbxAbs->name;
  int id = st.id;
  sandboxes_.emplace(id, std::move(st));
  auto sc = std::make_shared<SandboxClosure>();
  sc->env = Env{};  // each sandbox starts from a fresh environment
  sc->abs = sbxAbs;
  sc->sandboxId = id;
  return Value(std::shared_ptr<const SandboxClosure>(sc));
}

Value Interp::applySandboxClosure(const SandboxClosure& sc, const Value& arg) {
  SandboxState& st = sandbox(sc.sandboxId);
  Value wrapped = wrap(st, arg);
  if (!st.globalProxy && isLoc(wrapped)) st.globalProxy = asLoc(wrapped);
  Env env = sc.env;
  env[sc.abs->name] = wrapped;
  Value result;
  {
    SandboxScope scope(*this, sc.sandboxId);
    result = evalExpr(env, *sc.abs->a);
  }
  st.concluded = true;
  if (auditMembrane) {
    auditSandboxValue(st, result);
    for (const auto& [n, v] : env) auditSandboxValue(st, v);
  }
  return result;
}

void Interp::auditSandboxValue(const SandboxState& sbx, const Value& v) const {
  if (!isLoc(v)) return;
  Loc l = asLoc(v);
  if (store.owner(l) == sbx.id) return;
  const StoredObject& o = store.at(l);
  if (const auto* sp = std::get_if<SandboxProxy>(&o); sp && sp->sandboxId == sbx.id)
    return;
  if (const auto* op = std::get_if<OutwardProxy>(&o); op && op->sandboxId == sbx.id)
    return;
  throw std::logic_error("membrane audit: raw outside location inside sandbox");
}

// ---------------------------------------------------------------------------
// Wrapping and recompilation

Value Interp::wrap(SandboxState& sbx, const Value& v) {
  if (!membraneEnabled) return v;
  if (!isLoc(v)) return v;  // constants and sandbox closures pass unwrapped
  tick();
  Loc l = asLoc(v);
  const StoredObject& o = store.at(l);
  if (const auto* sp = std::get_if<SandboxProxy>(&o); sp && sp->sandboxId == sbx.id)
    return v;  // wrapping a proxy of this sandbox yields the proxy itself
  if (const auto* op = std::get_if<OutwardProxy>(&o); op && op->sandboxId == sbx.id)
    return Value(op->inner);  // own committed object comes back unwrapped
  auto it = sbx.proxyTable.find(l);
  if (it != sbx.proxyTable.end()) return Value(it->second);
  Loc shadow = recompile(sbx, l);
  Loc ploc = store.alloc(SandboxProxy{l, shadow, sbx.sbxEnv, sbx.id}, sbx.id);
  sbx.proxyTable.emplace(l, ploc);
  return Value(ploc);
}

Loc Interp::recompile(SandboxState& sbx, Loc l) {
  auto it = sbx.shadowCache.find(l);
  if (it != sbx.shadowCache.end()) return it->second;
  tick();
  const StoredObject& o = store.at(l);
  if (const auto* sp = std::get_if<SandboxProxy>(&o))
    return recompile(sbx, sp->target);
  if (const auto* op = std::get_if<OutwardProxy>(&o))
    return recompile(sbx, op->inner);
  const auto& plain = std::get<PlainObject>(o);
  PlainObject shadow;
  if (plain.closure) {
    Closure cl;
    cl.env = sbx.sbxEnv;  // erases all external bindings
    cl.abs = plain.closure->abs;
    shadow.closure = std::move(cl);
  }
  shadow.proto = nullValue();  // shadows carry no prototype information
  Loc sl = store.alloc(std::move(shadow), sbx.id);
  sbx.shadowCache.emplace(l, sl);
  return sl;
}

// ---------------------------------------------------------------------------
// Property access and application

namespace {

// unlogged prototype-chain probe used for old-value capture and inspection
std::optional<Value> chainLookup(const Store& store, Loc l, const std::string& key) {
  const StoredObject& o = store.at(l);
  if (const auto* p = std::get_if<PlainObject>(&o)) {
    if (const Value* v = p->dict.find(key)) return *v;
    if (isLoc(p->proto)) return chainLookup(store, asLoc(p->proto), key);
    return std::nullopt;
  }
  if (const auto* sp = std::get_if<SandboxProxy>(&o)) {
    const auto& shadow = std::get<PlainObject>(store.at(sp->shadow));
    if (const Value* v = shadow.dict.find(key)) return *v;
    return chainLookup(store, sp->target, key);
  }
  const auto& op = std::get<OutwardProxy>(o);
  return chainLookup(store, op.inner, key);
}

}  // namespace

Value Interp::getProperty(Loc l, const Constant& key) {
  tick();
  const StoredObject& o = store.at(l);
  if (const auto* p = std::get_if<PlainObject>(&o)) {
    std::string k = stringifyKey(key);
    if (const Value* v = p->dict.find(k)) return *v;
    Value proto = p->proto;
    if (isLoc(proto)) return getProperty(asLoc(proto), key);
    return undefinedValue();  // chain ended in a constant
  }
  return proxyGet(l, key);
}

Value Interp::putProperty(Loc l, const Constant& key, const Value& v) {
  tick();
  StoredObject& o = store.at(l);
  if (auto* p = std::get_if<PlainObject>(&o)) {
    p->dict.set(stringifyKey(key), v);
    return v;
  }
  return proxyPut(l, key, v);
}

Value Interp::applyFunction(Loc l, const Value& arg) {
  tick();
  const StoredObject& o = store.at(l);
  if (const auto* p = std::get_if<PlainObject>(&o)) {
    if (!p->closure) throw typeError("applied object is not a function");
    Env env = p->closure->env;
    const Expr& abs = *p->closure->abs;
    if (abs.selfName) env[*abs.selfName] = Value(l);
    env[abs.name] = arg;
    ExprPtr body = abs.a;
    return evalExpr(env, *body);
  }
  return proxyApp(l, arg);
}

// ---------------------------------------------------------------------------
// Proxy traps

Value Interp::proxyGet(Loc proxyLoc, const Constant& key) {
  const StoredObject& o = store.at(proxyLoc);
  if (const auto* sp = std::get_if<SandboxProxy>(&o)) {
    SandboxState& st = sandbox(sp->sandboxId);
    std::string k = stringifyKey(key);
    if (st.globalProxy && *st.globalProxy == proxyLoc) {
      EffectRecord rec;
      rec.kind = EffectKind::Has;
      rec.target = sp->target;
      rec.prop = k;
      logEffect(st, std::move(rec));
    }
    const auto& shadow = std::get<PlainObject>(store.at(sp->shadow));
    if (const Value* v = shadow.dict.find(k)) return *v;
    Loc target = sp->target;
    if (const auto* tp = std::get_if<PlainObject>(&store.at(target))) {
      if (const Value* own = tp->dict.find(k)) {
        Value v = *own;
        EffectRecord rec;
        rec.kind = EffectKind::Get;
        rec.target = target;
        rec.prop = k;
        rec.observed = v;
        logEffect(st, std::move(rec));
        return wrap(st, v);
      }
      Value proto = tp->proto;
      if (isLoc(proto)) {
        // the prototype is wrapped too, so inherited reads go back through
        // the membrane and see prototype shadow writes
        Value wrappedProto = wrap(st, proto);
        return getProperty(asLoc(wrappedProto), key);
      }
      EffectRecord rec;
      rec.kind = EffectKind::Get;
      rec.target = target;
      rec.prop = k;
      rec.observed = undefinedValue();
      logEffect(st, std::move(rec));
      return undefinedValue();
    }
    // target is itself a proxy of another sandbox: forward whole
    Value v = getProperty(target, key);
    EffectRecord rec;
    rec.kind = EffectKind::Get;
    rec.target = target;
    rec.prop = k;
    rec.observed = v;
    logEffect(st, std::move(rec));
    return wrap(st, v);
  }
  const auto& op = std::get<OutwardProxy>(o);
  SandboxState& st = sandbox(op.sandboxId);
  Value v = getProperty(op.inner, key);
  return exportValue(st, v);
}

Value Interp::proxyPut(Loc proxyLoc, const Constant& key, const Value& v) {
  const StoredObject& o = store.at(proxyLoc);
  if (const auto* sp = std::get_if<SandboxProxy>(&o)) {
    SandboxState& st = sandbox(sp->sandboxId);
    std::string k = stringifyKey(key);
    EffectRecord rec;
    rec.kind = EffectKind::Set;
    rec.target = sp->target;
    rec.prop = k;
    rec.newValue = v;
    const auto& shadowRO = std::get<PlainObject>(store.at(sp->shadow));
    if (const Value* old = shadowRO.dict.find(k)) {
      rec.oldValue = *old;
    } else if (auto through = chainLookup(store, sp->target, k)) {
      rec.oldValue = *through;
    } else {
      rec.oldValue = undefinedValue();
      rec.oldWasAbsent = true;
    }
    logEffect(st, std::move(rec));
    Loc shadowLoc = sp->shadow;
    std::get<PlainObject>(store.at(shadowLoc)).dict.set(k, v);
    return v;
  }
  const auto& op = std::get<OutwardProxy>(o);
  SandboxState& st = sandbox(op.sandboxId);
  Value inward = wrap(st, v);
  Loc inner = op.inner;
  putProperty(inner, key, inward);
  return v;
}

Value Interp::proxyApp(Loc proxyLoc, const Value& arg) {
  const StoredObject& o = store.at(proxyLoc);
  if (const auto* sp = std::get_if<SandboxProxy>(&o)) {
    SandboxState& st = sandbox(sp->sandboxId);
    const auto& shadow = std::get<PlainObject>(store.at(sp->shadow));
    if (!shadow.closure) throw typeError("applied proxy is not a function");
    EffectRecord rec;
    rec.kind = EffectKind::Call;
    rec.target = sp->target;
    logEffect(st, std::move(rec));
    Value wrapped = wrap(st, arg);
    Loc shadowLoc = sp->shadow;
    SandboxScope scope(*this, sp->sandboxId);
    return applyFunction(shadowLoc, wrapped);
  }
  const auto& op = std::get<OutwardProxy>(o);
  SandboxState& st = sandbox(op.sandboxId);
  Value inward = wrap(st, arg);
  Loc inner = op.inner;
  Value result;
  {
    SandboxScope scope(*this, op.sandboxId);
    result = applyFunction(inner, inward);
  }
  return exportValue(st, result);
}

// ---------------------------------------------------------------------------
// Effect log

void Interp::logEffect(SandboxState& sbx, EffectRecord rec) {
  if (!effectLogging) return;
  // values created inside the sandbox do not cross the membrane
  if (store.owner(rec.target) == sbx.id) return;
  rec.seq = seq_++;
  rec.sandboxId = sbx.id;
  sbx.log.push_back(std::move(rec));
}

SandboxState& Interp::sandbox(int id) {
  auto it = sandboxes_.find(id);
  if (it == sandboxes_.end())
    throw TxError(TxErrorKind::UnknownSandbox, "unknown sandbox " + std::to_string(id));
  return it->second;
}

const SandboxState& Interp::sandbox(int id) const {
  auto it = sandboxes_.find(id);
  if (it == sandboxes_.end())
    throw TxError(TxErrorKind::UnknownSandbox, "unknown sandbox " + std::to_string(id));
  return it->second;
}

// ---------------------------------------------------------------------------
// Sandbox handles

int Interp::sandboxNew(const Value& globalValue, const std::string& globalName) {
  SandboxState st;
  st.id = nextSandboxId_++;
  st.globalName = globalName;
  int id = st.id;
  auto [it, ok] = sandboxes_.emplace(id, std::move(st));
  SandboxState& state = it->second;
  Value wrapped = wrap(state, globalValue);
  if (isLoc(wrapped)) state.globalProxy = asLoc(wrapped);
  state.sbxEnv[globalName] = wrapped;
  return id;
}

Value Interp::sandboxCall(int sandboxId, const Value& fn, const Value& arg,
                          std::uint64_t budget) {
  BudgetScope bscope(&stepsLeft_, &currentBudget_, budget);
  SandboxState& st = sandbox(sandboxId);
  if (!isLoc(fn)) throw typeError("sandbox call target is not a function object");
  Value wrapped = wrap(st, fn);
  Value result;
  if (isLoc(wrapped) && !std::holds_alternative<PlainObject>(store.at(asLoc(wrapped)))) {
    result = proxyApp(asLoc(wrapped), arg);
  } else {
    // membrane disabled or sandbox-internal function: run inside directly
    SandboxScope scope(*this, sandboxId);
    result = applyFunction(asLoc(wrapped), arg);
  }
  st.concluded = true;
  return result;
}

Value Interp::sandboxLoad(int sandboxId, const std::string& source,
                          std::uint64_t budget) {
  SandboxState& st = sandbox(sandboxId);
  ExprPtr core = desugar(parse(source), st.globalName);
  BudgetScope bscope(&stepsLeft_, &currentBudget_, budget);
  Env env = st.sbxEnv;
  Value result;
  {
    SandboxScope scope(*this, sandboxId);
    result = evalExpr(env, *core);
  }
  st.concluded = true;
  return result;
}

// ---------------------------------------------------------------------------
// Effect queries

std::vector<EffectRecord> Interp::effectsOf(int sandboxId, const Value& target) const {
  std::vector<EffectRecord> out;
  if (!isLoc(target)) return out;
  Loc l = asLoc(target);
  for (const auto& rec : sandbox(sandboxId).log)
    if (rec.target == l) out.push_back(rec);
  return out;
}

std::vector<EffectRecord> Interp::readEffectsOf(int sandboxId, const Value& target) const {
  std::vector<EffectRecord> out;
  for (auto& rec : effectsOf(sandboxId, target))
    if (rec.kind == EffectKind::Has || rec.kind == EffectKind::Get)
      out.push_back(rec);
  return out;
}

std::vector<EffectRecord> Interp::writeEffectsOf(int sandboxId, const Value& target) const {
  std::vector<EffectRecord> out;
  for (auto& rec : effectsOf(sandboxId, target))
    if (rec.kind == EffectKind::Set) out.push_back(rec);
  return out;
}

// ---------------------------------------------------------------------------
// Commit / rollback / revert

Value Interp::exportValue(SandboxState& sbx, const Value& v) {
  if (!isLoc(v)) return v;
  Loc l = asLoc(v);
  const StoredObject& o = store.at(l);
  if (const auto* sp = std::get_if<SandboxProxy>(&o); sp && sp->sandboxId == sbx.id)
    return Value(sp->target);  // identity restoration
  if (const auto* op = std::get_if<OutwardProxy>(&o); op && op->sandboxId == sbx.id)
    return v;
  auto it = sbx.outwardTable.find(l);
  if (it != sbx.outwardTable.end()) return Value(it->second);
  Loc ploc = store.alloc(OutwardProxy{l, sbx.sbxEnv, sbx.id}, -1);
  sbx.outwardTable.emplace(l, ploc);
  return Value(ploc);
}

void Interp::commitPair(SandboxState& sbx, Loc target, const std::string& prop) {
  auto it = sbx.proxyTable.find(target);
  if (it == sbx.proxyTable.end()) return;
  const auto& sp = std::get<SandboxProxy>(store.at(it->second));
  const auto& shadow = std::get<PlainObject>(store.at(sp.shadow));
  const Value* v = shadow.dict.find(prop);
  if (!v) return;  // rolled back to absent; nothing to commit
  Value out = exportValue(sbx, *v);
  putProperty(target, Constant(prop), out);
}

void Interp::commitAll(int sandboxId) {
  SandboxState& st = sandbox(sandboxId);
  std::vector<std::pair<Loc, std::string>> pairs;
  for (const auto& rec : st.log) {
    if (rec.kind != EffectKind::Set) continue;
    std::pair<Loc, std::string> p{rec.target, rec.prop};
    if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
  }
  for (const auto& [target, prop] : pairs) commitPair(st, target, prop);
}

void Interp::commitRecord(int sandboxId, std::uint64_t seq, bool strict) {
  SandboxState& st = sandbox(sandboxId);
  const EffectRecord* found = nullptr;
  for (const auto& rec : st.log)
    if (rec.seq == seq) found = &rec;
  if (!found || found->kind != EffectKind::Set)
    throw TxError(TxErrorKind::StaleEffect,
                  "no set effect with sequence " + std::to_string(seq));
  if (strict) {
    for (const auto& rec : st.log)
      if (rec.kind == EffectKind::Set && rec.target == found->target &&
          rec.prop == found->prop && rec.seq > seq)
        throw TxError(TxErrorKind::StaleEffect,
                      "effect " + std::to_string(seq) + " is not the latest set for " +
                          found->prop);
  }
  commitPair(st, found->target, found->prop);
}

void Interp::commitProp(int sandboxId, Loc target, const std::string& prop) {
  SandboxState& st = sandbox(sandboxId);
  commitPair(st, target, prop);
}

void Interp::rollbackOne(SandboxState& sbx, const EffectRecord& rec) {
  auto it = sbx.proxyTable.find(rec.target);
  if (it == sbx.proxyTable.end()) return;
  const auto& sp = std::get<SandboxProxy>(store.at(it->second));
  auto& shadow = std::get<PlainObject>(store.at(sp.shadow));
  if (rec.oldWasAbsent)
    shadow.dict.erase(rec.prop);
  else
    shadow.dict.set(rec.prop, *rec.oldValue);
}

void Interp::rollbackAll(int sandboxId) {
  SandboxState& st = sandbox(sandboxId);
  for (auto it = st.log.rbegin(); it != st.log.rend(); ++it)
    if (it->kind == EffectKind::Set) rollbackOne(st, *it);
}

void Interp::rollbackRecord(int sandboxId, std::uint64_t seq) {
  SandboxState& st = sandbox(sandboxId);
  for (const auto& rec : st.log) {
    if (rec.seq == seq && rec.kind == EffectKind::Set) {
      rollbackOne(st, rec);
      return;
    }
  }
}

void Interp::revertOf(int sandboxId, const Value& target) {
  SandboxState& st = sandbox(sandboxId);
  if (!isLoc(target))
    throw TxError(TxErrorKind::NotWrapped, "revert target is not an object");
  auto it = st.proxyTable.find(asLoc(target));
  if (it == st.proxyTable.end())
    throw TxError(TxErrorKind::NotWrapped, "object is not wrapped by this sandbox");
  const auto& sp = std::get<SandboxProxy>(store.at(it->second));
  std::get<PlainObject>(store.at(sp.shadow)).dict.clear();
}

// ---------------------------------------------------------------------------
// Changes, differences, conflicts

namespace {

// outside-equality: constants by ===, locations by identity
bool outsideEqual(const Store& store, int sandboxId, const Value& inside,
                  const Value& outside) {
  if (isConstant(inside) && isConstant(outside))
    return asConstant(inside) == asConstant(outside);
  if (isLoc(inside) && isLoc(outside)) {
    if (asLoc(inside) == asLoc(outside)) return true;
    const StoredObject& o = store.at(asLoc(inside));
    if (const auto* sp = std::get_if<SandboxProxy>(&o))
      return sp->sandboxId == sandboxId && sp->target == asLoc(outside);
  }
  return false;
}

}  // namespace

std::vector<Change> Interp::changesOf(int sandboxId, std::optional<Loc> target) {
  SandboxState& st = sandbox(sandboxId);
  std::vector<Change> out;
  for (const auto& [tgt, ploc] : st.proxyTable) {
    if (target && !(tgt == *target)) continue;
    const auto& sp = std::get<SandboxProxy>(store.at(ploc));
    const auto& shadow = std::get<PlainObject>(store.at(sp.shadow));
    for (const auto& [prop, shadowValue] : shadow.dict) {
      auto through = chainLookup(store, tgt, prop);
      Value outsideValue = through ? *through : undefinedValue();
      if (!outsideEqual(store, sandboxId, shadowValue, outsideValue))
        out.push_back({tgt, prop, shadowValue, outsideValue});
    }
  }
  return out;
}

std::vector<Difference> Interp::differencesOf(int sandboxId, std::optional<Loc> target) {
  SandboxState& st = sandbox(sandboxId);
  if (!st.concluded)
    throw TxError(TxErrorKind::NotConcluded, "sandbox has not concluded yet");
  std::vector<Difference> out;
  std::vector<std::pair<Loc, std::string>> order;
  std::map<std::pair<Loc, std::string>, Value> latest;
  for (const auto& rec : st.log) {
    if (rec.kind != EffectKind::Get) continue;
    if (target && !(rec.target == *target)) continue;
    std::pair<Loc, std::string> key{rec.target, rec.prop};
    if (!latest.count(key)) order.push_back(key);
    latest[key] = *rec.observed;  // later records overwrite: latest observed
  }
  for (const auto& key : order) {
    auto through = chainLookup(store, key.first, key.second);
    Value current = through ? *through : undefinedValue();
    const Value& observed = latest.at(key);
    bool equal = (isConstant(observed) && isConstant(current) &&
                  asConstant(observed) == asConstant(current)) ||
                 (isLoc(observed) && isLoc(current) && asLoc(observed) == asLoc(current));
    if (!equal) out.push_back({key.first, key.second, observed, current});
  }
  return out;
}

std::vector<Conflict> Interp::conflictsWith(int idA, int idB) const {
  std::vector<Conflict> out;
  if (idA == idB) return out;
  const SandboxState& a = sandbox(idA);
  const SandboxState& b = sandbox(idB);
  auto scan = [&](const SandboxState& writer, const SandboxState& accessor) {
    for (const auto& w : writer.log) {
      if (w.kind != EffectKind::Set) continue;
      for (const auto& acc : accessor.log) {
        if (acc.kind == EffectKind::Call) continue;
        if (!(acc.target == w.target) || acc.prop != w.prop) continue;
        if (w.seq >= acc.seq) continue;
        Conflict c;
        c.kind = acc.kind == EffectKind::Set ? Conflict::Kind::WAW : Conflict::Kind::RAW;
        if (accessor.id == idA) {
          c.mine = acc;
          c.theirs = w;
        } else {
          c.mine = w;
          c.theirs = acc;
        }
        out.push_back(std::move(c));
      }
    }
  };
  scan(a, b);
  scan(b, a);
  std::stable_sort(out.begin(), out.end(), [&](const Conflict& x, const Conflict& y) {
    auto later = [](const Conflict& c) { return std::max(c.mine.seq, c.theirs.seq); };
    return later(x) < later(y);
  });
  return out;
}

bool Interp::inConflictWith(int idA, int idB) const {
  return !conflictsWith(idA, idB).empty();
}

// ---------------------------------------------------------------------------
// Rules

void Interp::applyRule(int sandboxId, const Rule& rule, std::uint64_t budget) {
  SandboxState& st = sandbox(sandboxId);
  if (rule.kind == Rule::Kind::CommitProp) {
    for (auto it = st.log.rbegin(); it != st.log.rend(); ++it) {
      if (it->kind == EffectKind::Set && it->target == rule.target &&
          it->prop == rule.propName) {
        commitPair(st, rule.target, rule.propName);
        return;
      }
    }
    return;
  }
  if (!rule.predicate || !isLoc(*rule.predicate))
    throw typeError("rule predicate must be a function");
  std::vector<EffectRecord> sets;
  for (const auto& rec : st.log)
    if (rec.kind == EffectKind::Set && rec.target == rule.target)
      sets.push_back(rec);
  for (const auto& rec : sets) {
    PlainObject eo;
    eo.dict.set("kind", stringValue(effectKindName(rec.kind)));
    eo.dict.set("name", stringValue(rec.prop));
    eo.dict.set("sandbox", numberValue(static_cast<double>(sandboxId)));
    Loc effectObj = store.alloc(std::move(eo), -1);
    // predicates run in their own one-shot sandbox so policy code cannot
    // interfere with the stores it inspects
    int oneShot = sandboxNew(undefinedValue());
    Value verdict = sandboxCall(oneShot, *rule.predicate, Value(effectObj), budget);
    if (truthy(verdict)) {
      if (rule.kind == Rule::Kind::CommitOn)
        commitPair(st, rec.target, rec.prop);
      else
        rollbackOne(st, rec);
    }
  }
}

// ---------------------------------------------------------------------------
// Stats

StatsSnapshot Interp::stats(int sandboxId) const {
  const SandboxState& st = sandbox(sandboxId);
  StatsSnapshot s;
  s.objectsWrapped = st.proxyTable.size();
  s.effectsTotal = st.log.size();
  std::set<std::pair<Loc, std::string>> reads, writes, calls;
  for (const auto& rec : st.log) {
    switch (rec.kind) {
      case EffectKind::Has:
      case EffectKind::Get:
        reads.insert({rec.target, rec.prop});
        break;
      case EffectKind::Set:
        writes.insert({rec.target, rec.prop});
        break;
      case EffectKind::Call:
        calls.insert({rec.target, rec.prop});
        break;
    }
  }
  s.distinctReads = reads.size();
  s.distinctWrites = writes.size();
  s.distinctCalls = calls.size();
  return s;
}

}  // namespace decent
