#ifndef DECENT_HEAP_HPP
#define DECENT_HEAP_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace decent {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// ---------------------------------------------------------------------------
// Constants

struct Undefined {
  bool operator==(const Undefined&) const { return true; }
};
struct Null {
  bool operator==(const Null&) const { return true; }
};

struct Constant {
  std::variant<Undefined, Null, bool, double, std::string> v;

  Constant() : v(Undefined{}) {}
  explicit Constant(Undefined u) : v(u) {}
  explicit Constant(Null n) : v(n) {}
  explicit Constant(bool b) : v(b) {}
  explicit Constant(double d) : v(d) {}
  explicit Constant(std::string s) : v(std::move(s)) {}
  explicit Constant(const char* s) : v(std::string(s)) {}

  bool isUndefined() const { return std::holds_alternative<Undefined>(v); }
  bool isNull() const { return std::holds_alternative<Null>(v); }
  bool isBool() const { return std::holds_alternative<bool>(v); }
  bool isNumber() const { return std::holds_alternative<double>(v); }
  bool isString() const { return std::holds_alternative<std::string>(v); }

  bool boolean() const { return std::get<bool>(v); }
  double number() const { return std::get<double>(v); }
  const std::string& str() const { return std::get<std::string>(v); }

  bool operator==(const Constant& o) const { return v == o.v; }
};

// Decimal rendering shared by the pretty printer, property keys, and the CLI.
std::string formatNumber(double d);

// Canonical dictionary key for a constant (numbers to decimal text, booleans
// to "true"/"false").
std::string stringifyKey(const Constant& c);

// ---------------------------------------------------------------------------
// Values

struct Loc {
  std::uint32_t index = 0;
  auto operator<=>(const Loc&) const = default;
};

struct SandboxClosure;

using Value =
    std::variant<Constant, Loc, std::shared_ptr<const SandboxClosure>>;

using Env = std::map<std::string, Value>;

struct SandboxClosure {
  Env env;        // the secure environment this closure was built under
  ExprPtr abs;    // the SbxAbs expression
  int sandboxId;  // membrane identity
};

inline bool isConstant(const Value& v) {
  return std::holds_alternative<Constant>(v);
}
inline bool isLoc(const Value& v) { return std::holds_alternative<Loc>(v); }
inline bool isSandboxClosure(const Value& v) {
  return std::holds_alternative<std::shared_ptr<const SandboxClosure>>(v);
}
inline const Constant& asConstant(const Value& v) {
  return std::get<Constant>(v);
}
inline Loc asLoc(const Value& v) { return std::get<Loc>(v); }
inline const std::shared_ptr<const SandboxClosure>& asSandboxClosure(
    const Value& v) {
  return std::get<std::shared_ptr<const SandboxClosure>>(v);
}

inline Value undefinedValue() { return Constant(Undefined{}); }
inline Value nullValue() { return Constant(Null{}); }
inline Value numberValue(double d) { return Constant(d); }
inline Value stringValue(std::string s) { return Constant(std::move(s)); }
inline Value boolValue(bool b) { return Constant(b); }

// ---------------------------------------------------------------------------
// Objects

// Ordered property map; insertion order is preserved so commit and rollback
// iterate deterministically.
class Dict {
 public:
  const Value* find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return &v;
    return nullptr;
  }
  void set(const std::string& key, Value v) {
    for (auto& [k, ev] : entries_) {
      if (k == key) {
        ev = std::move(v);
        return;
      }
    }
    entries_.emplace_back(key, std::move(v));
  }
  void erase(const std::string& key) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (it->first == key) {
        entries_.erase(it);
        return;
      }
    }
  }
  void clear() { entries_.clear(); }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<std::pair<std::string, Value>> entries_;
};

struct Closure {
  Env env;
  ExprPtr abs;  // the Abs expression (carries selfName, param, body)
};

struct PlainObject {
  Dict dict;
  std::optional<Closure> closure;
  Value proto = nullValue();
};

struct SandboxProxy {
  Loc target;
  Loc shadow;
  Env sbxEnv;
  int sandboxId;
};

// Installed at commit time around sandbox-internal objects so that outside
// use keeps wrapping values inward.
struct OutwardProxy {
  Loc inner;
  Env sbxEnv;
  int sandboxId;
};

using StoredObject = std::variant<PlainObject, SandboxProxy, OutwardProxy>;

// ---------------------------------------------------------------------------
// Store

// Append-only; locations are never reused and slots are never reindexed.
class Store {
 public:
  Loc alloc(StoredObject o, int ownerSandbox = -1) {
    slots_.push_back(std::move(o));
    owners_.push_back(ownerSandbox);
    return Loc{static_cast<std::uint32_t>(slots_.size() - 1)};
  }
  StoredObject& at(Loc l) { return slots_.at(l.index); }
  const StoredObject& at(Loc l) const { return slots_.at(l.index); }
  int owner(Loc l) const { return owners_.at(l.index); }
  std::size_t size() const { return slots_.size(); }

 private:
  std::vector<StoredObject> slots_;
  std::vector<int> owners_;  // sandbox id that allocated the slot, -1 outside
};

// Least fixed point of following dictionary values, prototypes, closure
// environments, proxy constituents, and sandbox-closure environments.
std::set<Loc> reachableFrom(const Store& store, const std::vector<Value>& roots);

}  // namespace decent

#endif
