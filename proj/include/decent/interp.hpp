#ifndef DECENT_INTERP_HPP
#define DECENT_INTERP_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decent/heap.hpp"
#include "decent/syntax.hpp"

namespace decent {

// ---------------------------------------------------------------------------
// Errors

enum class EvalErrorKind { TypeError, UnboundVariable, StepBudgetExceeded, NativeBarrier };

struct EvalError : std::runtime_error {
  EvalErrorKind kind;
  std::optional<Pos> sourcePosition;
  std::uint64_t budget = 0;  // for StepBudgetExceeded
  EvalError(EvalErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

enum class TxErrorKind { StaleEffect, NotWrapped, NotConcluded, UnknownSandbox };

struct TxError : std::runtime_error {
  TxErrorKind kind;
  TxError(TxErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

// ---------------------------------------------------------------------------
// Effects

enum class EffectKind { Has, Get, Set, Call };

struct EffectRecord {
  std::uint64_t seq;  // global logical clock, strictly increasing
  int sandboxId;
  EffectKind kind;
  Loc target;        // outside location the membrane operation hit
  std::string prop;  // empty for call records
  std::optional<Value> observed;  // get only: value read at the target
  std::optional<Value> oldValue;  // set only: previously visible value
  std::optional<Value> newValue;  // set only
  bool oldWasAbsent = false;      // set only: key absent from shadow and target
};

struct Rule {
  enum class Kind { CommitOn, RollbackOn, CommitProp };
  Kind kind;
  Loc target;
  std::optional<Value> predicate;  // function value, CommitOn / RollbackOn
  std::string propName;            // CommitProp
};

struct Conflict {
  enum class Kind { RAW, WAW };
  Kind kind;
  EffectRecord mine;    // record of the sandbox the query was asked for
  EffectRecord theirs;  // record of the other sandbox
};

struct StatsSnapshot {
  std::size_t objectsWrapped = 0;
  std::size_t effectsTotal = 0;
  std::size_t distinctReads = 0;
  std::size_t distinctWrites = 0;
  std::size_t distinctCalls = 0;
};

struct Change {
  Loc target;
  std::string prop;
  Value shadowValue;
  Value outsideValue;
};

struct Difference {
  Loc target;
  std::string prop;
  Value observedValue;
  Value currentValue;
};

std::string formatEffect(const EffectRecord& e, bool withSandboxTag);
std::string formatConflict(const Conflict& c);

// ---------------------------------------------------------------------------
// Sandbox state

struct SandboxState {
  int id;
  std::string globalName = "g";
  Env sbxEnv;  // rho-hat; for handles {globalName -> wrapped global}
  std::optional<Loc> globalProxy;
  std::vector<EffectRecord> log;
  std::map<Loc, Loc> proxyTable;    // outside target -> proxy
  std::map<Loc, Loc> shadowCache;   // recompile target -> shadow
  std::map<Loc, Loc> outwardTable;  // sandbox-internal inner -> outward proxy
  std::vector<Rule> rules;
  bool concluded = false;
};

// ---------------------------------------------------------------------------
// Interpreter

// One interpreter instance owns a store, the sandbox registry, and the
// global effect clock. Instances are independent; never share one across
// threads.
class Interp {
 public:
  static constexpr std::uint64_t kDefaultBudget = 1'000'000;

  Store store;
  bool membraneEnabled = true;   // debug switch for the NI negative control
  bool effectLogging = true;
  bool auditMembrane = false;    // walk sandbox envs after each application

  // --- evaluation -----------------------------------------------------------

  // Evaluates a core (desugared) expression. Consumes one budget unit per
  // rule application; throws EvalError on stuck terms or exhaustion.
  Value eval(const Env& env, const ExprPtr& e, std::uint64_t budget = kDefaultBudget);

  static Value applyPrimop(const std::string& op, const Value& u,
                           const std::optional<Value>& v);

  // --- sandbox layer --------------------------------------------------------

  int sandboxNew(const Value& globalValue, const std::string& globalName = "g");
  Value sandboxCall(int sandboxId, const Value& fn, const Value& arg,
                    std::uint64_t budget = kDefaultBudget);
  Value sandboxLoad(int sandboxId, const std::string& source,
                    std::uint64_t budget = kDefaultBudget);

  SandboxState& sandbox(int id);
  const SandboxState& sandbox(int id) const;

  Value wrap(SandboxState& sbx, const Value& v);
  Loc recompile(SandboxState& sbx, Loc l);
  Value proxyGet(Loc proxyLoc, const Constant& key);
  Value proxyPut(Loc proxyLoc, const Constant& key, const Value& v);
  Value proxyApp(Loc proxyLoc, const Value& arg);

  // generic dispatchers (plain object or proxy at l)
  Value getProperty(Loc l, const Constant& key);
  Value putProperty(Loc l, const Constant& key, const Value& v);
  Value applyFunction(Loc l, const Value& arg);

  // --- transactions ---------------------------------------------------------

  std::vector<EffectRecord> effectsOf(int sandboxId, const Value& target) const;
  std::vector<EffectRecord> readEffectsOf(int sandboxId, const Value& target) const;
  std::vector<EffectRecord> writeEffectsOf(int sandboxId, const Value& target) const;

  void commitAll(int sandboxId);
  void commitRecord(int sandboxId, std::uint64_t seq, bool strict = true);
  void commitProp(int sandboxId, Loc target, const std::string& prop);
  void rollbackAll(int sandboxId);
  void rollbackRecord(int sandboxId, std::uint64_t seq);
  void revertOf(int sandboxId, const Value& target);
  std::vector<Change> changesOf(int sandboxId, std::optional<Loc> target = {});
  std::vector<Difference> differencesOf(int sandboxId, std::optional<Loc> target = {});
  std::vector<Conflict> conflictsWith(int idA, int idB) const;
  bool inConflictWith(int idA, int idB) const;
  void applyRule(int sandboxId, const Rule& rule, std::uint64_t budget = kDefaultBudget);
  StatsSnapshot stats(int sandboxId) const;

  std::uint64_t effectClock() const { return seq_; }

 private:
  std::map<int, SandboxState> sandboxes_;
  int nextSandboxId_ = 1;
  std::uint64_t seq_ = 0;
  std::uint64_t stepsLeft_ = 0;
  std::uint64_t currentBudget_ = 0;
  std::vector<int> sandboxStack_;  // active sandbox contexts, innermost last

  struct SandboxScope;

  void tick();
  int currentSandbox() const { return sandboxStack_.empty() ? -1 : sandboxStack_.back(); }
  Loc allocHere(StoredObject o) { return store.alloc(std::move(o), currentSandbox()); }

  Value evalExpr(const Env& env, const Expr& e);
  Value applySandboxClosure(const SandboxClosure& sc, const Value& arg);
  Value freshSandbox(const ExprPtr& sbxAbs);

  // commit-time translation of a sandbox-side value to an outside value,
  // and its inverse used by outward proxies
  Value exportValue(SandboxState& sbx, const Value& v);

  void logEffect(SandboxState& sbx, EffectRecord rec);
  void rollbackOne(SandboxState& sbx, const EffectRecord& rec);
  void commitPair(SandboxState& sbx, Loc target, const std::string& prop);
  void auditSandboxValue(const SandboxState& sbx, const Value& v) const;
};

std::string renderSandboxTag(int id);  // SBX%03d

}  // namespace decent

#endif
