#include "decent/syntax.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace decent {

// ---------------------------------------------------------------------------
// Numbers and keys

std::string formatNumber(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  if (d == static_cast<long long>(d) && std::abs(d) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(d);
    return os.str();
  }
  std::ostringstream os;
  os.precision(15);
  os << d;
  return os.str();
}

std::string stringifyKey(const Constant& c) {
  if (c.isUndefined()) return "undefined";
  if (c.isNull()) return "null";
  if (c.isBool()) return c.boolean() ? "true" : "false";
  if (c.isNumber()) return formatNumber(c.number());
  return c.str();
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

const std::set<std::string> kKeywords = {"fun",  "sbx",   "fresh",    "new",
                                         "let",  "true",  "false",    "null",
                                         "undefined", "typeof"};

bool isIdentStart(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool isIdentPart(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  Pos pos{1, 1};
  std::size_t i = 0;
  auto advance = [&](char c) {
    if (c == '\n') {
      pos.line++;
      pos.column = 1;
    } else {
      pos.column++;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(c);
      i++;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') {
        advance(src[i]);
        i++;
      }
      continue;
    }
    Pos start = pos;
    if (isIdentStart(c)) {
      std::size_t j = i;
      while (j < src.size() && isIdentPart(src[j])) j++;
      std::string lex = src.substr(i, j - i);
      TokenKind k = kKeywords.count(lex) ? TokenKind::Keyword : TokenKind::Identifier;
      out.push_back({k, lex, start, {}});
      while (i < j) advance(src[i++]);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) j++;
      if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
          std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        j++;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) j++;
      }
      out.push_back({TokenKind::NumberLiteral, src.substr(i, j - i), start, {}});
      while (i < j) advance(src[i++]);
      continue;
    }
    if (c == '"') {
      std::string value;
      std::string lex(1, c);
      advance(c);
      i++;
      bool closed = false;
      while (i < src.size()) {
        char d = src[i];
        lex.push_back(d);
        advance(d);
        i++;
        if (d == '"') {
          closed = true;
          break;
        }
        if (d == '\\') {
          if (i >= src.size()) break;
          char e = src[i];
          lex.push_back(e);
          advance(e);
          i++;
          switch (e) {
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            case '"': value.push_back('"'); break;
            case '\\': value.push_back('\\'); break;
            default: throw LexError(start, std::string("unknown escape \\") + e);
          }
        } else if (d == '\n') {
          break;
        } else {
          value.push_back(d);
        }
      }
      if (!closed) throw LexError(start, "unterminated string");
      Token t{TokenKind::StringLiteral, lex, start, value};
      out.push_back(t);
      continue;
    }
    // punctuation, longest match first
    static const std::vector<std::string> puncts = {
        "===", "!==", "=>", "<=", ">=", "&&", "||", "(", ")", "[", "]", ".",
        ";",   "=",   "<",  ">",  "+",  "-",  "*",  "/", "%", "!", ","};
    bool matched = false;
    for (const auto& p : puncts) {
      if (src.compare(i, p.size(), p) == 0) {
        out.push_back({TokenKind::Punctuation, p, start, {}});
        for (char pc : p) {
          advance(pc);
        }
        i += p.size();
        matched = true;
        break;
      }
    }
    if (!matched) throw LexError(start, std::string("unknown character '") + c + "'");
  }
  out.push_back({TokenKind::EndOfInput, "", pos, {}});
  return out;
}

// ---------------------------------------------------------------------------
// Constructors

namespace {
ExprPtr mk(Expr e) { return std::make_shared<Expr>(std::move(e)); }
}  // namespace

ExprPtr makeConst(Constant c, Pos pos) {
  Expr e;
  e.kind = ExprKind::Const;
  e.lit = std::move(c);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makeVar(std::string name, Pos pos) {
  Expr e;
  e.kind = ExprKind::Var;
  e.name = std::move(name);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makeOp(std::string op, ExprPtr a, ExprPtr b, Pos pos) {
  Expr e;
  e.kind = ExprKind::Op;
  e.name = std::move(op);
  e.a = std::move(a);
  e.b = std::move(b);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makeAbs(std::optional<std::string> selfName, std::string param,
                ExprPtr body, Pos pos) {
  Expr e;
  e.kind = ExprKind::Abs;
  e.selfName = std::move(selfName);
  e.name = std::move(param);
  e.a = std::move(body);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makeApp(ExprPtr f, ExprPtr arg, Pos pos) {
  Expr e;
  e.kind = ExprKind::App;
  e.a = std::move(f);
  e.b = std::move(arg);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makeNew(ExprPtr proto, Pos pos) {
  Expr e;
  e.kind = ExprKind::New;
  e.a = std::move(proto);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makeGet(ExprPtr obj, ExprPtr key, Pos pos) {
  Expr e;
  e.kind = ExprKind::Get;
  e.a = std::move(obj);
  e.b = std::move(key);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makePut(ExprPtr obj, ExprPtr key, ExprPtr val, Pos pos) {
  Expr e;
  e.kind = ExprKind::Put;
  e.a = std::move(obj);
  e.b = std::move(key);
  e.c = std::move(val);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makeSbxAbs(std::string binder, ExprPtr body, Pos pos) {
  Expr e;
  e.kind = ExprKind::SbxAbs;
  e.name = std::move(binder);
  e.a = std::move(body);
  e.pos = pos;
  return mk(std::move(e));
}
ExprPtr makeFresh(ExprPtr inner, Pos pos) {
  Expr e;
  e.kind = ExprKind::Fresh;
  e.a = std::move(inner);
  e.pos = pos;
  return mk(std::move(e));
}

bool exprEqual(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->name != b->name || a->selfName != b->selfName)
    return false;
  if (a->kind == ExprKind::Const && !(a->lit == b->lit)) return false;
  return exprEqual(a->a, b->a) && exprEqual(a->b, b->b) && exprEqual(a->c, b->c);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(const std::vector<Token>& toks, std::size_t start)
      : toks_(toks), i_(start) {}

  std::size_t position() const { return i_; }

  ExprPtr expression() { return assignment(); }

 private:
  const std::vector<Token>& toks_;
  std::size_t i_;

  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_++]; }
  bool atPunct(const std::string& p) const {
    return peek().kind == TokenKind::Punctuation && peek().lexeme == p;
  }
  bool atKeyword(const std::string& k) const {
    return peek().kind == TokenKind::Keyword && peek().lexeme == k;
  }
  void expectPunct(const std::string& p) {
    if (!atPunct(p)) throw ParseError(peek().pos, "'" + p + "'", describe(peek()));
    next();
  }
  std::string expectIdent() {
    if (peek().kind != TokenKind::Identifier)
      throw ParseError(peek().pos, "identifier", describe(peek()));
    return next().lexeme;
  }
  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::EndOfInput) return "end of input";
    return "'" + t.lexeme + "'";
  }

  ExprPtr assignment() {
    ExprPtr lhs = orExpr();
    if (atPunct("=")) {
      Pos p = peek().pos;
      next();
      ExprPtr rhs = assignment();
      if (lhs->kind == ExprKind::Get)
        return makePut(lhs->a, lhs->b, rhs, lhs->pos);
      if (lhs->kind == ExprKind::Dot) {
        Expr e;
        e.kind = ExprKind::DotPut;
        e.name = lhs->name;
        e.a = lhs->a;
        e.b = rhs;
        e.pos = lhs->pos;
        return mk(std::move(e));
      }
      throw ParseError(p, "property access on the left of '='", "expression");
    }
    return lhs;
  }

  ExprPtr orExpr() {
    ExprPtr e = andExpr();
    while (atPunct("||")) {
      Pos p = next().pos;
      e = makeOp("||", e, andExpr(), p);
    }
    return e;
  }
  ExprPtr andExpr() {
    ExprPtr e = equality();
    while (atPunct("&&")) {
      Pos p = next().pos;
      e = makeOp("&&", e, equality(), p);
    }
    return e;
  }
  ExprPtr equality() {
    ExprPtr e = relational();
    while (atPunct("===") || atPunct("!==")) {
      std::string op = peek().lexeme;
      Pos p = next().pos;
      e = makeOp(op, e, relational(), p);
    }
    return e;
  }
  ExprPtr relational() {
    ExprPtr e = additive();
    while (atPunct("<") || atPunct("<=") || atPunct(">") || atPunct(">=")) {
      std::string op = peek().lexeme;
      Pos p = next().pos;
      e = makeOp(op, e, additive(), p);
    }
    return e;
  }
  ExprPtr additive() {
    ExprPtr e = multiplicative();
    while (atPunct("+") || atPunct("-")) {
      std::string op = peek().lexeme;
      Pos p = next().pos;
      e = makeOp(op, e, multiplicative(), p);
    }
    return e;
  }
  ExprPtr multiplicative() {
    ExprPtr e = unary();
    while (atPunct("*") || atPunct("/") || atPunct("%")) {
      std::string op = peek().lexeme;
      Pos p = next().pos;
      e = makeOp(op, e, unary(), p);
    }
    return e;
  }

  ExprPtr unary() {
    if (atPunct("!")) {
      Pos p = next().pos;
      return makeOp("!", unary(), nullptr, p);
    }
    if (atPunct("-")) {
      Pos p = next().pos;
      ExprPtr operand = unary();
      // fold -<number literal> into a negative constant so negatives
      // round-trip through the pretty printer
      if (operand->kind == ExprKind::Const && operand->lit.isNumber())
        return makeConst(Constant(-operand->lit.number()), p);
      return makeOp("-", operand, nullptr, p);
    }
    if (atKeyword("typeof")) {
      Pos p = next().pos;
      return makeOp("typeof", unary(), nullptr, p);
    }
    if (atKeyword("new")) {
      Pos p = next().pos;
      return makeNew(unary(), p);
    }
    if (atKeyword("fresh")) {
      Pos p = next().pos;
      return makeFresh(unary(), p);
    }
    return postfix();
  }

  ExprPtr postfix() {
    ExprPtr e = primary();
    for (;;) {
      if (atPunct("(")) {
        Pos p = next().pos;
        ExprPtr arg = expression();
        expectPunct(")");
        e = makeApp(e, arg, p);
      } else if (atPunct("[")) {
        Pos p = next().pos;
        ExprPtr key = expression();
        expectPunct("]");
        e = makeGet(e, key, p);
      } else if (atPunct(".")) {
        Pos p = next().pos;
        std::string member = expectIdent();
        Expr d;
        d.kind = ExprKind::Dot;
        d.name = member;
        d.a = e;
        d.pos = p;
        e = mk(std::move(d));
      } else {
        return e;
      }
    }
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::NumberLiteral: {
        next();
        return makeConst(Constant(std::stod(t.lexeme)), t.pos);
      }
      case TokenKind::StringLiteral: {
        next();
        return makeConst(Constant(t.stringValue), t.pos);
      }
      case TokenKind::Identifier: {
        next();
        return makeVar(t.lexeme, t.pos);
      }
      case TokenKind::Keyword: {
        if (t.lexeme == "true") { next(); return makeConst(Constant(true), t.pos); }
        if (t.lexeme == "false") { next(); return makeConst(Constant(false), t.pos); }
        if (t.lexeme == "null") { next(); return makeConst(Constant(Null{}), t.pos); }
        if (t.lexeme == "undefined") { next(); return makeConst(Constant(Undefined{}), t.pos); }
        if (t.lexeme == "fun") return function();
        if (t.lexeme == "sbx") {
          Pos p = next().pos;
          std::string binder = expectIdent();
          expectPunct("=>");
          return makeSbxAbs(binder, expression(), p);
        }
        if (t.lexeme == "let") {
          Pos p = next().pos;
          std::string binder = expectIdent();
          expectPunct("=");
          ExprPtr init = assignment();
          expectPunct(";");
          ExprPtr body = expression();
          Expr e;
          e.kind = ExprKind::Let;
          e.name = binder;
          e.a = init;
          e.b = body;
          e.pos = p;
          return mk(std::move(e));
        }
        throw ParseError(t.pos, "expression", describe(t));
      }
      case TokenKind::Punctuation: {
        if (t.lexeme == "(") {
          next();
          ExprPtr e = expression();
          expectPunct(")");
          return e;
        }
        throw ParseError(t.pos, "expression", describe(t));
      }
      default:
        throw ParseError(t.pos, "expression", describe(t));
    }
  }

  // "fun" [name] "(" param ")" "=>" body  |  "fun" param "=>" body
  ExprPtr function() {
    Pos p = next().pos;  // fun
    if (atPunct("(")) {
      next();
      std::string param = expectIdent();
      expectPunct(")");
      expectPunct("=>");
      return makeAbs(std::nullopt, param, expression(), p);
    }
    std::string first = expectIdent();
    if (atPunct("(")) {
      next();
      std::string param = expectIdent();
      expectPunct(")");
      expectPunct("=>");
      return makeAbs(first, param, expression(), p);
    }
    expectPunct("=>");
    return makeAbs(std::nullopt, first, expression(), p);
  }
};

}  // namespace

ExprPtr parseOne(const std::vector<Token>& tokens, std::size_t& index) {
  Parser p(tokens, index);
  ExprPtr e = p.expression();
  index = p.position();
  return e;
}

ExprPtr parse(const std::vector<Token>& tokens) {
  std::size_t i = 0;
  ExprPtr e = parseOne(tokens, i);
  if (tokens[i].kind != TokenKind::EndOfInput)
    throw ParseError(tokens[i].pos, "end of input", "'" + tokens[i].lexeme + "'");
  return e;
}

ExprPtr parse(const std::string& source) { return parse(tokenize(source)); }

// ---------------------------------------------------------------------------
// Desugaring

namespace {

struct DesugarCtx {
  std::vector<std::string> sandboxBinders;  // innermost last
  std::set<std::string> bound;
  const std::set<std::string>* predefined;
};

ExprPtr ds(const ExprPtr& e, DesugarCtx& ctx) {
  switch (e->kind) {
    case ExprKind::Const:
      return e;
    case ExprKind::Var: {
      if (ctx.bound.count(e->name)) return e;
      if (!ctx.sandboxBinders.empty()) {
        return makeGet(makeVar(ctx.sandboxBinders.back(), e->pos),
                       makeConst(Constant(e->name), e->pos), e->pos);
      }
      if (ctx.predefined && ctx.predefined->count(e->name)) return e;
      throw UnboundVariableError(e->name);
    }
    case ExprKind::Op: {
      ExprPtr a = ds(e->a, ctx);
      ExprPtr b = e->b ? ds(e->b, ctx) : nullptr;
      return makeOp(e->name, a, b, e->pos);
    }
    case ExprKind::Abs: {
      DesugarCtx inner = ctx;
      if (e->selfName) inner.bound.insert(*e->selfName);
      inner.bound.insert(e->name);
      return makeAbs(e->selfName, e->name, ds(e->a, inner), e->pos);
    }
    case ExprKind::App:
      return makeApp(ds(e->a, ctx), ds(e->b, ctx), e->pos);
    case ExprKind::New:
      return makeNew(ds(e->a, ctx), e->pos);
    case ExprKind::Get:
      return makeGet(ds(e->a, ctx), ds(e->b, ctx), e->pos);
    case ExprKind::Put:
      return makePut(ds(e->a, ctx), ds(e->b, ctx), ds(e->c, ctx), e->pos);
    case ExprKind::SbxAbs: {
      DesugarCtx inner = ctx;
      inner.sandboxBinders.push_back(e->name);
      inner.bound.insert(e->name);
      return makeSbxAbs(e->name, ds(e->a, inner), e->pos);
    }
    case ExprKind::Fresh:
      return makeFresh(ds(e->a, ctx), e->pos);
    case ExprKind::Let: {
      ExprPtr init = ds(e->a, ctx);
      DesugarCtx inner = ctx;
      inner.bound.insert(e->name);
      ExprPtr body = ds(e->b, inner);
      return makeApp(makeAbs(std::nullopt, e->name, body, e->pos), init, e->pos);
    }
    case ExprKind::Dot:
      return makeGet(ds(e->a, ctx), makeConst(Constant(e->name), e->pos), e->pos);
    case ExprKind::DotPut:
      return makePut(ds(e->a, ctx), makeConst(Constant(e->name), e->pos),
                     ds(e->b, ctx), e->pos);
  }
  throw std::logic_error("unreachable expression kind");
}

}  // namespace

ExprPtr desugar(const ExprPtr& e,
                const std::optional<std::string>& sandboxGlobalName,
                const std::set<std::string>& predefined) {
  DesugarCtx ctx;
  ctx.predefined = &predefined;
  if (sandboxGlobalName) {
    ctx.sandboxBinders.push_back(*sandboxGlobalName);
    ctx.bound.insert(*sandboxGlobalName);
  }
  return ds(e, ctx);
}

// ---------------------------------------------------------------------------
// Pretty printer

namespace {

std::string escapeString(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string ppConst(const Constant& c) {
  if (c.isUndefined()) return "undefined";
  if (c.isNull()) return "null";
  if (c.isBool()) return c.boolean() ? "true" : "false";
  if (c.isNumber()) return formatNumber(c.number());
  return escapeString(c.str());
}

void pp(const ExprPtr& e, std::string& out);

// children of postfix positions need parens unless they are atoms or
// themselves postfix forms
void ppPostfixBase(const ExprPtr& e, std::string& out) {
  switch (e->kind) {
    case ExprKind::Const:
      // negative literals would bind the postfix operator to the bare
      // number, so keep them out of base position
      if (e->lit.isNumber() && e->lit.number() < 0) {
        out.push_back('(');
        pp(e, out);
        out.push_back(')');
        return;
      }
      [[fallthrough]];
    case ExprKind::Var:
    case ExprKind::App:
    case ExprKind::Get:
    case ExprKind::Dot:
      pp(e, out);
      return;
    default:
      out.push_back('(');
      pp(e, out);
      out.push_back(')');
  }
}

void ppParened(const ExprPtr& e, std::string& out) {
  if (e->kind == ExprKind::Const || e->kind == ExprKind::Var) {
    pp(e, out);
    return;
  }
  out.push_back('(');
  pp(e, out);
  out.push_back(')');
}

void pp(const ExprPtr& e, std::string& out) {
  switch (e->kind) {
    case ExprKind::Const:
      out += ppConst(e->lit);
      return;
    case ExprKind::Var:
      out += e->name;
      return;
    case ExprKind::Op:
      if (!e->b) {
        out.push_back('(');
        out += e->name;
        out.push_back(' ');
        ppParened(e->a, out);
        out.push_back(')');
      } else {
        out.push_back('(');
        ppParened(e->a, out);
        out.push_back(' ');
        out += e->name;
        out.push_back(' ');
        ppParened(e->b, out);
        out.push_back(')');
      }
      return;
    case ExprKind::Abs:
      out += "(fun ";
      if (e->selfName) {
        out += *e->selfName;
        out += " (";
        out += e->name;
        out += ")";
      } else {
        out += e->name;
      }
      out += " => ";
      pp(e->a, out);
      out.push_back(')');
      return;
    case ExprKind::App:
      ppPostfixBase(e->a, out);
      out.push_back('(');
      pp(e->b, out);
      out.push_back(')');
      return;
    case ExprKind::New:
      out += "(new ";
      ppParened(e->a, out);
      out.push_back(')');
      return;
    case ExprKind::Get:
      ppPostfixBase(e->a, out);
      out.push_back('[');
      pp(e->b, out);
      out.push_back(']');
      return;
    case ExprKind::Put:
      out.push_back('(');
      ppPostfixBase(e->a, out);
      out.push_back('[');
      pp(e->b, out);
      out += "] = ";
      pp(e->c, out);
      out.push_back(')');
      return;
    case ExprKind::SbxAbs:
      out += "(sbx ";
      out += e->name;
      out += " => ";
      pp(e->a, out);
      out.push_back(')');
      return;
    case ExprKind::Fresh:
      out += "(fresh ";
      ppParened(e->a, out);
      out.push_back(')');
      return;
    case ExprKind::Let:
      out += "(let ";
      out += e->name;
      out += " = ";
      pp(e->a, out);
      out += "; ";
      pp(e->b, out);
      out.push_back(')');
      return;
    case ExprKind::Dot:
      ppPostfixBase(e->a, out);
      out.push_back('.');
      out += e->name;
      return;
    case ExprKind::DotPut:
      out.push_back('(');
      ppPostfixBase(e->a, out);
      out.push_back('.');
      out += e->name;
      out += " = ";
      pp(e->b, out);
      out.push_back(')');
      return;
  }
}

}  // namespace

std::string prettyPrint(const ExprPtr& e) {
  std::string out;
  pp(e, out);
  return out;
}

}  // namespace decent
