#include "decent/repl.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace decent {

namespace {

std::vector<std::string> splitWords(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::string locName(Loc l) { return "obj#" + std::to_string(l.index); }

}  // namespace

std::string ReplSession::renderValue(const Value& v, int depth, bool topLevel) const {
  if (isConstant(v)) {
    const Constant& c = asConstant(v);
    if (c.isString()) return topLevel ? c.str() : "\"" + c.str() + "\"";
    return stringifyKey(c);
  }
  if (isSandboxClosure(v)) return "<sandbox>";
  Loc l = asLoc(v);
  const StoredObject& o = interp.store.at(l);
  if (const auto* p = std::get_if<PlainObject>(&o)) {
    if (p->closure) return "<fun#" + std::to_string(l.index) + ">";
    if (depth <= 0) return "<" + locName(l) + ">";
    std::string out = "<" + locName(l) + " {";
    bool first = true;
    for (const auto& [k, pv] : p->dict) {
      if (!first) out += ", ";
      first = false;
      out += k + ": " + renderValue(pv, depth - 1, false);
    }
    return out + "}>";
  }
  if (const auto* sp = std::get_if<SandboxProxy>(&o))
    return "<proxy#" + std::to_string(l.index) + " -> " + locName(sp->target) + ">";
  const auto& op = std::get<OutwardProxy>(o);
  return "<outward#" + std::to_string(l.index) + " -> " + locName(op.inner) + ">";
}

Value ReplSession::evalTop(const std::string& source) {
  std::set<std::string> predefined;
  for (const auto& [n, v] : top) predefined.insert(n);
  ExprPtr core = desugar(parse(source), std::nullopt, predefined);
  return interp.eval(top, core, budget);
}

int ReplSession::handleOf(const std::string& name) const {
  auto it = handles.find(name);
  if (it == handles.end())
    throw TxError(TxErrorKind::UnknownSandbox, "no sandbox named " + name);
  return it->second;
}

std::string ReplSession::dispatch(const std::string& line) {
  if (line.find_first_not_of(" \t\r") == std::string::npos) return "";
  try {
    if (line[line.find_first_not_of(" \t")] == ':') return meta(line);
    // `ident = expr` binds into the top-level environment
    std::vector<Token> toks = tokenize(line);
    if (toks.size() > 2 && toks[0].kind == TokenKind::Identifier &&
        toks[1].kind == TokenKind::Punctuation && toks[1].lexeme == "=") {
      std::string name = toks[0].lexeme;
      std::string expr = line.substr(line.find('=') + 1);
      top[name] = evalTop(expr);
      return "";
    }
    return renderValue(evalTop(line));
  } catch (const std::exception& e) {
    return std::string("error: ") + e.what();
  }
}

std::string ReplSession::meta(const std::string& line) {
  auto words = splitWords(line);
  const std::string& cmd = words[0];
  auto usage = [&](const std::string& u) { return "usage: " + u; };

  if (cmd == ":quit") {
    quit_ = true;
    return "";
  }

  if (cmd == ":sbx") {
    if (words.size() < 3) return usage(":sbx new|call|load <name> ...");
    const std::string& verb = words[1];
    const std::string& name = words[2];
    if (verb == "new") {
      std::string globalName = "g";
      Value globalValue = undefinedValue();
      if (words.size() > 3 && words[3].rfind("global=", 0) == 0) {
        globalName = words[3].substr(7);
        auto it = top.find(globalName);
        if (it == top.end()) return "error: unbound variable: " + globalName;
        globalValue = it->second;
      }
      if (handles.count(name)) return "error: sandbox " + name + " already exists";
      handles[name] = interp.sandboxNew(globalValue, globalName);
      return "";
    }
    if (verb == "call") {
      int id = handleOf(name);
      std::size_t pos = line.find(name) + name.size();
      std::vector<Token> toks = tokenize(line.substr(pos));
      std::size_t idx = 0;
      ExprPtr fnE = parseOne(toks, idx);
      ExprPtr argE = parseOne(toks, idx);
      std::set<std::string> predefined;
      for (const auto& [n, v] : top) predefined.insert(n);
      Value fn = interp.eval(top, desugar(fnE, std::nullopt, predefined), budget);
      Value arg = interp.eval(top, desugar(argE, std::nullopt, predefined), budget);
      return renderValue(interp.sandboxCall(id, fn, arg, budget));
    }
    if (verb == "load") {
      int id = handleOf(name);
      if (words.size() < 4) return usage(":sbx load <name> <path>");
      std::ifstream f(words[3]);
      if (!f) return "error: cannot read " + words[3];
      std::stringstream buf;
      buf << f.rdbuf();
      return renderValue(interp.sandboxLoad(id, buf.str(), budget));
    }
    return usage(":sbx new|call|load <name> ...");
  }

  if (cmd == ":effects") {
    if (words.size() < 2) return usage(":effects <name> [reads|writes] [of <expr>]");
    int id = handleOf(words[1]);
    std::size_t i = 2;
    std::string kindFilter;
    if (i < words.size() && (words[i] == "reads" || words[i] == "writes"))
      kindFilter = words[i++];
    std::vector<EffectRecord> recs;
    if (i < words.size() && words[i] == "of") {
      std::size_t pos = line.find(" of ") + 4;
      Value target = evalTop(line.substr(pos));
      if (kindFilter == "reads")
        recs = interp.readEffectsOf(id, target);
      else if (kindFilter == "writes")
        recs = interp.writeEffectsOf(id, target);
      else
        recs = interp.effectsOf(id, target);
    } else {
      for (const auto& r : interp.sandbox(id).log) {
        bool isRead = r.kind == EffectKind::Has || r.kind == EffectKind::Get;
        if (kindFilter == "reads" && !isRead) continue;
        if (kindFilter == "writes" && r.kind != EffectKind::Set) continue;
        recs.push_back(r);
      }
    }
    std::string out;
    for (const auto& r : recs) {
      if (!out.empty()) out += "\n";
      out += formatEffect(r, false);
    }
    return out;
  }

  if (cmd == ":commit" || cmd == ":rollback") {
    if (words.size() < 2) return usage(cmd + " <name> [<seq>]");
    int id = handleOf(words[1]);
    if (words.size() > 2) {
      std::uint64_t seq = std::stoull(words[2]);
      if (cmd == ":commit")
        interp.commitRecord(id, seq);
      else
        interp.rollbackRecord(id, seq);
    } else {
      if (cmd == ":commit")
        interp.commitAll(id);
      else
        interp.rollbackAll(id);
    }
    return "";
  }

  if (cmd == ":revert") {
    if (words.size() < 3) return usage(":revert <name> <expr>");
    int id = handleOf(words[1]);
    std::size_t pos = line.find(words[1]) + words[1].size();
    interp.revertOf(id, evalTop(line.substr(pos)));
    return "";
  }

  if (cmd == ":changes") {
    if (words.size() < 2) return usage(":changes <name>");
    auto changes = interp.changesOf(handleOf(words[1]));
    if (changes.empty()) return "no changes";
    std::string out;
    for (const auto& c : changes) {
      if (!out.empty()) out += "\n";
      out += locName(c.target) + "." + c.prop + ": " +
             renderValue(c.shadowValue, 1, false) + " (outside " +
             renderValue(c.outsideValue, 1, false) + ")";
    }
    return out;
  }

  if (cmd == ":diffs") {
    if (words.size() < 2) return usage(":diffs <name>");
    auto diffs = interp.differencesOf(handleOf(words[1]));
    if (diffs.empty()) return "no differences";
    std::string out;
    for (const auto& d : diffs) {
      if (!out.empty()) out += "\n";
      out += locName(d.target) + "." + d.prop + ": observed " +
             renderValue(d.observedValue, 1, false) + ", now " +
             renderValue(d.currentValue, 1, false);
    }
    return out;
  }

  if (cmd == ":conflicts") {
    if (words.size() < 3) return usage(":conflicts <name> <name>");
    auto conflicts = interp.conflictsWith(handleOf(words[1]), handleOf(words[2]));
    if (conflicts.empty()) return "no conflicts";
    std::string out;
    for (const auto& c : conflicts) {
      if (!out.empty()) out += "\n";
      out += formatConflict(c);
    }
    return out;
  }

  if (cmd == ":rule") {
    if (words.size() < 4) return usage(":rule <name> commiton|rollbackon|commit ...");
    int id = handleOf(words[1]);
    const std::string& verb = words[2];
    std::size_t pos = line.find(verb) + verb.size();
    std::vector<Token> toks = tokenize(line.substr(pos));
    std::size_t idx = 0;
    ExprPtr targetE = parseOne(toks, idx);
    std::set<std::string> predefined;
    for (const auto& [n, v] : top) predefined.insert(n);
    Value target = interp.eval(top, desugar(targetE, std::nullopt, predefined), budget);
    if (!isLoc(target)) return "error: rule target must be an object";
    Rule r;
    r.target = asLoc(target);
    if (verb == "commiton" || verb == "rollbackon") {
      r.kind = verb == "commiton" ? Rule::Kind::CommitOn : Rule::Kind::RollbackOn;
      ExprPtr predE = parseOne(toks, idx);
      r.predicate = interp.eval(top, desugar(predE, std::nullopt, predefined), budget);
    } else if (verb == "commit") {
      r.kind = Rule::Kind::CommitProp;
      if (idx >= toks.size() || toks[idx].kind == TokenKind::EndOfInput)
        return usage(":rule <name> commit <expr> <propname>");
      r.propName = toks[idx].kind == TokenKind::StringLiteral ? toks[idx].stringValue
                                                              : toks[idx].lexeme;
    } else {
      return usage(":rule <name> commiton|rollbackon|commit ...");
    }
    interp.sandbox(id).rules.push_back(r);
    interp.applyRule(id, r, budget);
    return "";
  }

  if (cmd == ":stats") {
    if (words.size() < 2) return usage(":stats <name>");
    StatsSnapshot s = interp.stats(handleOf(words[1]));
    std::ostringstream os;
    os << "wrapped=" << s.objectsWrapped << " effects=" << s.effectsTotal
       << " reads=" << s.distinctReads << " writes=" << s.distinctWrites
       << " calls=" << s.distinctCalls;
    return os.str();
  }

  return "unknown command " + cmd +
         "; try :sbx :effects :commit :rollback :revert :changes :diffs "
         ":conflicts :rule :stats :quit";
}

}  // namespace decent
