#include "decent/gen.hpp"

#include <map>
#include <random>
#include <utility>
#include <vector>

namespace decent {

namespace {

enum class Ty { Num, Str, Bool, Obj, Fun };

struct FunSig {
  Ty param;
  Ty result;
  int ref = -1;  // ObjInfo index when param is Obj
};

struct PropInfo {
  Ty ty;
  int ref = -1;  // ObjInfo / FunSig index for Obj / Fun props
};

struct ObjInfo {
  std::map<std::string, PropInfo> props;
  int region = 0;  // objects may only grow new keys in their birth region
};

struct Binding {
  std::string name;
  Ty ty;
  int ref = -1;
};

using Scope = std::vector<Binding>;

// generated expression plus the info index for object and function types
struct GV {
  std::string text;
  int ref = -1;
};

const char* kPropPool[] = {"value", "left",  "right", "count", "name",
                           "next",  "data",  "flag",  "tag",   "item"};
const char* kWritePool[] = {"w1", "w2", "w3", "w4", "w5"};
const char* kStrPool[] = {"a", "b", "hi", "key", "val", "red", "blue"};

struct Gen {
  std::mt19937_64 rng;
  std::vector<ObjInfo> objInfos;
  std::vector<FunSig> funSigs;
  int nameCounter = 0;
  int region = 0;

  explicit Gen(std::uint64_t seed) : rng(seed) {}

  int pick(int n) {
    return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
  }
  bool chance(int percent) { return pick(100) < percent; }
  std::string freshName(const char* prefix) {
    return prefix + std::to_string(++nameCounter);
  }

  Ty pickTy() {
    switch (pick(5)) {
      case 0: return Ty::Num;
      case 1: return Ty::Str;
      case 2: return Ty::Bool;
      case 3: return Ty::Obj;
      default: return Ty::Fun;
    }
  }
  Ty pickDataTy() {
    switch (pick(3)) {
      case 0: return Ty::Num;
      case 1: return Ty::Str;
      default: return Ty::Bool;
    }
  }

  std::vector<const Binding*> varsOf(const Scope& sc, Ty ty) {
    std::vector<const Binding*> out;
    for (const auto& b : sc)
      if (b.ty == ty) out.push_back(&b);
    return out;
  }

  GV literal(Ty ty) {
    switch (ty) {
      case Ty::Num:
        return {std::to_string(pick(100))};
      case Ty::Str:
        return {std::string("\"") + kStrPool[pick(7)] + "\""};
      case Ty::Bool:
        return {chance(50) ? "true" : "false"};
      case Ty::Obj: {
        objInfos.push_back(ObjInfo{{}, region});
        return {"(new null)", static_cast<int>(objInfos.size() - 1)};
      }
      case Ty::Fun: {
        Ty p = pickDataTy();
        Ty r = pickDataTy();
        std::string x = freshName("x");
        Scope inner;
        inner.push_back({x, p, -1});
        GV body = gen(inner, r, 1);
        funSigs.push_back({p, r, -1});
        return {"(fun (" + x + ") => " + body.text + ")",
                static_cast<int>(funSigs.size() - 1)};
      }
    }
    return {"0"};
  }

  GV leaf(const Scope& sc, Ty ty) {
    auto vars = varsOf(sc, ty);
    if (!vars.empty() && chance(60)) {
      const Binding* b = vars[pick(static_cast<int>(vars.size()))];
      return {b->name, b->ref};
    }
    return literal(ty);
  }

  // property reads available in scope: (text, info) for each obj var prop
  std::vector<std::pair<std::string, PropInfo>> readsOf(const Scope& sc, Ty ty) {
    std::vector<std::pair<std::string, PropInfo>> out;
    for (const auto& b : sc) {
      if (b.ty != Ty::Obj || b.ref < 0) continue;
      for (const auto& [prop, info] : objInfos[b.ref].props)
        if (info.ty == ty) out.push_back({b.name + "." + prop, info});
    }
    return out;
  }

  // callables returning ty: fun vars and fun-typed props of obj vars
  std::vector<std::pair<std::string, FunSig>> callablesOf(const Scope& sc, Ty ty) {
    std::vector<std::pair<std::string, FunSig>> out;
    for (const auto& b : sc) {
      if (b.ty == Ty::Fun && b.ref >= 0 && funSigs[b.ref].result == ty)
        out.push_back({b.name, funSigs[b.ref]});
      if (b.ty == Ty::Obj && b.ref >= 0)
        for (const auto& [prop, info] : objInfos[b.ref].props)
          if (info.ty == Ty::Fun && funSigs[info.ref].result == ty)
            out.push_back({b.name + "." + prop, funSigs[info.ref]});
    }
    return out;
  }

  GV construct(const Scope& sc, int fuel) {
    std::string name = freshName("o");
    objInfos.push_back(ObjInfo{{}, region});
    int ref = static_cast<int>(objInfos.size() - 1);
    int nprops = 1 + pick(3);
    std::string text = "(let " + name + " = new null; ";
    for (int i = 0; i < nprops; ++i) {
      std::string prop = kPropPool[pick(10)];
      if (objInfos[ref].props.count(prop)) continue;
      Ty pty = chance(25) ? (chance(50) ? Ty::Obj : Ty::Fun) : pickDataTy();
      GV v = gen(sc, pty, fuel / (nprops + 1) + 1);
      objInfos[ref].props[prop] = {pty, v.ref};
      text += "let " + freshName("t") + " = (" + name + "." + prop + " = " +
              v.text + "); ";
    }
    text += name + ")";
    return {text, ref};
  }

  GV lambda(const Scope& sc, int fuel) {
    Ty p = chance(30) ? Ty::Obj : pickDataTy();
    Ty r = pickDataTy();
    std::string x = freshName("x");
    Scope inner = sc;
    int pref = -1;
    if (p == Ty::Obj) {
      objInfos.push_back(ObjInfo{{}, region});
      pref = static_cast<int>(objInfos.size() - 1);
    }
    inner.push_back({x, p, pref});
    GV body = gen(inner, r, fuel - 1);
    funSigs.push_back({p, r, pref});
    return {"(fun (" + x + ") => " + body.text + ")",
            static_cast<int>(funSigs.size() - 1)};
  }

  // a property write usable as an expression of the written value's type
  std::optional<GV> writeExpr(const Scope& sc, Ty ty, int fuel) {
    std::vector<std::pair<std::string, int>> objs;
    for (const auto& b : sc)
      if (b.ty == Ty::Obj && b.ref >= 0) objs.push_back({b.name, b.ref});
    if (objs.empty()) return std::nullopt;
    auto [name, ref] = objs[pick(static_cast<int>(objs.size()))];
    ObjInfo& info = objInfos[ref];
    std::vector<std::string> sameTy;
    for (const auto& [prop, pi] : info.props)
      if (pi.ty == ty && pi.ref == -1) sameTy.push_back(prop);
    std::string prop;
    bool fresh = false;
    if (!sameTy.empty() && chance(70)) {
      prop = sameTy[pick(static_cast<int>(sameTy.size()))];
    } else if (info.region == region && (ty == Ty::Num || ty == Ty::Str || ty == Ty::Bool)) {
      prop = kWritePool[pick(5)];
      if (info.props.count(prop) && info.props[prop].ty != ty) return std::nullopt;
      fresh = !info.props.count(prop);
    } else {
      return std::nullopt;
    }
    GV v = gen(sc, ty, fuel - 1);
    // register a brand-new prop only after its value exists, so the value
    // expression cannot read the still-absent key
    if (fresh) objInfos[ref].props[prop] = {ty, -1};
    return GV{"(" + name + "." + prop + " = " + v.text + ")", v.ref};
  }

  GV sandboxApp(const Scope& sc, Ty resultTy, int fuel) {
    GV arg = gen(sc, Ty::Obj, fuel / 3 + 1);
    int gRef;
    if (arg.ref >= 0) {
      objInfos.push_back(objInfos[arg.ref]);  // clone: shadow-local view
    } else {
      objInfos.push_back(ObjInfo{});
    }
    gRef = static_cast<int>(objInfos.size() - 1);
    int savedRegion = region;
    region = ++nameCounter + 1000;
    objInfos[gRef].region = region;
    Scope inner;
    inner.push_back({"g", Ty::Obj, gRef});
    GV body = gen(inner, resultTy, fuel - fuel / 3);
    region = savedRegion;
    return {"(fresh (sbx g => " + body.text + "))(" + arg.text + ")", body.ref};
  }

  GV letExpr(const Scope& sc, Ty ty, int fuel) {
    Ty bty = pickTy();
    GV init = gen(sc, bty, fuel / 2);
    std::string name = freshName("v");
    Scope inner = sc;
    inner.push_back({name, bty, init.ref});
    GV body = gen(inner, ty, fuel - fuel / 2);
    return {"(let " + name + " = " + init.text + "; " + body.text + ")", body.ref};
  }

  GV gen(const Scope& sc, Ty ty, int fuel) {
    if (fuel <= 1) return leaf(sc, ty);
    // shared productions
    if (chance(12)) return letExpr(sc, ty, fuel);
    auto reads = readsOf(sc, ty);
    if (!reads.empty() && chance(30)) {
      auto& [text, info] = reads[pick(static_cast<int>(reads.size()))];
      return {text, info.ref};
    }
    auto calls = callablesOf(sc, ty);
    if (!calls.empty() && chance(20)) {
      auto& [text, sig] = calls[pick(static_cast<int>(calls.size()))];
      GV arg = sig.param == Ty::Obj && sig.ref >= 0
                   ? GV{literal(Ty::Obj)}
                   : gen(sc, sig.param, fuel / 2);
      return {text + "(" + arg.text + ")"};
    }
    if ((ty == Ty::Num || ty == Ty::Str || ty == Ty::Bool) && chance(10)) {
      if (auto w = writeExpr(sc, ty, fuel)) return *w;
    }
    if ((ty == Ty::Num || ty == Ty::Str || ty == Ty::Bool || ty == Ty::Obj) &&
        fuel >= 6 && chance(8))
      return sandboxApp(sc, ty, fuel);

    switch (ty) {
      case Ty::Num: {
        const char* ops[] = {"+", "-", "*"};
        GV a = gen(sc, Ty::Num, fuel / 2);
        GV b = gen(sc, Ty::Num, fuel - fuel / 2 - 1);
        return {"(" + a.text + " " + ops[pick(3)] + " " + b.text + ")"};
      }
      case Ty::Str: {
        GV a = gen(sc, Ty::Str, fuel / 2);
        GV b = gen(sc, Ty::Str, fuel - fuel / 2 - 1);
        return {"(" + a.text + " + " + b.text + ")"};
      }
      case Ty::Bool:
        switch (pick(4)) {
          case 0: {
            const char* ops[] = {"<", "<=", ">", ">=", "===", "!=="};
            GV a = gen(sc, Ty::Num, fuel / 2);
            GV b = gen(sc, Ty::Num, fuel - fuel / 2 - 1);
            return {"(" + a.text + " " + ops[pick(6)] + " " + b.text + ")"};
          }
          case 1: {
            GV a = gen(sc, Ty::Str, fuel / 2);
            GV b = gen(sc, Ty::Str, fuel - fuel / 2 - 1);
            return {"(" + a.text + " === " + b.text + ")"};
          }
          case 2: {
            GV a = gen(sc, Ty::Bool, fuel - 1);
            return {"(!" + a.text + ")"};
          }
          default: {
            GV a = gen(sc, Ty::Bool, fuel / 2);
            GV b = gen(sc, Ty::Bool, fuel - fuel / 2 - 1);
            return {"(" + a.text + (chance(50) ? " && " : " || ") + b.text + ")"};
          }
        }
      case Ty::Obj:
        if (chance(60)) return construct(sc, fuel);
        return leaf(sc, Ty::Obj);
      case Ty::Fun:
        return lambda(sc, fuel);
    }
    return leaf(sc, ty);
  }
};

}  // namespace

std::string genProgram(std::uint64_t seed, int size) {
  Gen g(seed);
  if (size <= 1) return g.literal(g.pickDataTy()).text;
  Scope sc;
  std::string text;
  int bindings = 2 + size / 8;
  for (int i = 0; i < bindings; ++i) {
    bool viaSandbox = i == bindings - 1 && size >= 8;
    Ty ty = viaSandbox ? g.pickDataTy() : g.pickTy();
    int fuel = size / bindings + 2;
    GV v = viaSandbox ? g.sandboxApp(sc, ty, size / 2 + 4) : g.gen(sc, ty, fuel);
    std::string name = g.freshName("v");
    text += "let " + name + " = " + v.text + ";\n";
    sc.push_back({name, ty, v.ref});
  }
  GV fin = g.gen(sc, g.pickDataTy(), size / 4 + 1);
  text += fin.text;
  return text;
}

NITriple genTriple(std::uint64_t seed, int size) {
  Gen g(seed);
  NITriple t;
  Scope sc;

  GV a = g.gen(sc, Ty::Num, 2);
  t.setup += "a = " + a.text + "\n";
  sc.push_back({"a", Ty::Num, -1});

  GV o = g.construct(sc, size / 2 + 4);
  t.setup += "o = " + o.text + "\n";
  sc.push_back({"o", Ty::Obj, o.ref});

  if (g.chance(50)) {
    GV p = g.construct(sc, size / 3 + 2);
    t.setup += "p = " + p.text + "\n";
    sc.push_back({"p", Ty::Obj, p.ref});
  }

  std::vector<std::pair<std::string, int>> objs;
  for (const auto& b : sc)
    if (b.ty == Ty::Obj) objs.push_back({b.name, b.ref});
  auto [argName, argRef] = objs[g.pick(static_cast<int>(objs.size()))];
  t.arg = argName;

  g.objInfos.push_back(g.objInfos[argRef]);  // body's shadow-local view of g
  int gRef = static_cast<int>(g.objInfos.size() - 1);
  g.region = 999;
  g.objInfos[gRef].region = g.region;
  Scope body;
  body.push_back({"g", Ty::Obj, gRef});
  Ty resultTy = g.pickDataTy();
  t.body = g.gen(body, resultTy, size).text;
  return t;
}

NITriple mutationTriple(int index) {
  NITriple t;
  int k = index % 20;
  t.setup = "o = (let o1 = new null; (let t1 = (o1.count = " +
            std::to_string(10 + k) + "); (let t2 = (o1.name = \"start\"); o1)))\n";
  t.arg = "o";
  switch (k % 5) {
    case 0: t.body = "g.count = (g.count + 1)"; break;
    case 1: t.body = "g.count = (0 - g.count)"; break;
    case 2: t.body = "g.name = \"changed" + std::to_string(k) + "\""; break;
    case 3: t.body = "g.extra = " + std::to_string(k * 7 + 1); break;
    default: t.body = "(let x = (g.count = 0); g.name = \"zeroed\")"; break;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Random syntax trees for printer round-trips

namespace {

const char* kVarPool[] = {"x", "y", "z", "foo", "bar", "tmp"};

struct AstGen {
  std::mt19937_64 rng;
  explicit AstGen(std::uint64_t seed) : rng(seed) {}
  int pick(int n) {
    return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
  }

  ExprPtr constant() {
    switch (pick(6)) {
      case 0: return makeConst(Constant(static_cast<double>(pick(1000))));
      case 1: return makeConst(Constant(0.5 + pick(4)));
      case 2: return makeConst(Constant(std::string(kStrPool[pick(7)])));
      case 3: return makeConst(Constant(pick(2) == 0));
      case 4: return makeConst(Constant(Null{}));
      default: return makeConst(Constant(Undefined{}));
    }
  }

  std::string ident() { return kVarPool[pick(6)]; }

  ExprPtr gen(std::vector<std::string>& bound, int fuel) {
    if (fuel <= 1) {
      if (!bound.empty() && pick(2) == 0)
        return makeVar(bound[pick(static_cast<int>(bound.size()))]);
      return constant();
    }
    switch (pick(12)) {
      case 0: {
        const char* ops[] = {"+", "-", "*", "/", "%", "===", "!==",
                             "<", "<=", ">", ">=", "&&", "||"};
        return makeOp(ops[pick(13)], gen(bound, fuel / 2),
                      gen(bound, fuel - fuel / 2 - 1));
      }
      case 1: {
        if (pick(2) == 0 && !bound.empty())
          return makeOp("-", makeVar(bound[pick(static_cast<int>(bound.size()))]),
                        nullptr);
        return makeOp(pick(2) == 0 ? "!" : "typeof", gen(bound, fuel - 1), nullptr);
      }
      case 2: {
        std::string p = ident();
        std::optional<std::string> self;
        if (pick(3) == 0) self = ident() + "_f";
        bound.push_back(p);
        if (self) bound.push_back(*self);
        ExprPtr body = gen(bound, fuel - 1);
        if (self) bound.pop_back();
        bound.pop_back();
        return makeAbs(self, p, body);
      }
      case 3:
        return makeApp(gen(bound, fuel / 2), gen(bound, fuel - fuel / 2 - 1));
      case 4:
        return makeNew(gen(bound, fuel - 1));
      case 5:
        return makeGet(gen(bound, fuel / 2), gen(bound, fuel - fuel / 2 - 1));
      case 6:
        return makePut(gen(bound, fuel / 3 + 1), gen(bound, fuel / 3 + 1),
                       gen(bound, fuel / 3 + 1));
      case 7: {
        std::string b = ident();
        bound.push_back(b);
        ExprPtr body = gen(bound, fuel - 1);
        bound.pop_back();
        return makeSbxAbs(b, body);
      }
      case 8:
        return makeFresh(gen(bound, fuel - 1));
      default:
        return gen(bound, fuel - 1);
    }
  }
};

}  // namespace

ExprPtr genExpr(std::uint64_t seed, int size) {
  AstGen g(seed);
  std::vector<std::string> bound;
  return g.gen(bound, size);
}

}  // namespace decent
