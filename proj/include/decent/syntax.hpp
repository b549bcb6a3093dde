#ifndef DECENT_SYNTAX_HPP
#define DECENT_SYNTAX_HPP

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "decent/heap.hpp"

namespace decent {

struct Pos {
  int line = 1;
  int column = 1;
  auto operator<=>(const Pos&) const = default;
};

// ---------------------------------------------------------------------------
// Tokens

enum class TokenKind { Identifier, NumberLiteral, StringLiteral, Keyword, Punctuation, EndOfInput };

struct Token {
  TokenKind kind;
  std::string lexeme;
  Pos pos;
  std::string stringValue;  // decoded value for string literals
};

struct LexError : std::runtime_error {
  Pos pos;
  LexError(Pos p, const std::string& msg)
      : std::runtime_error("lex error at " + std::to_string(p.line) + ":" +
                           std::to_string(p.column) + ": " + msg),
        pos(p) {}
};

struct ParseError : std::runtime_error {
  Pos pos;
  std::string expected;
  ParseError(Pos p, const std::string& exp, const std::string& got)
      : std::runtime_error("parse error at " + std::to_string(p.line) + ":" +
                           std::to_string(p.column) + ": expected " + exp +
                           ", got " + got),
        pos(p),
        expected(exp) {}
};

struct UnboundVariableError : std::runtime_error {
  std::string name;
  explicit UnboundVariableError(const std::string& n)
      : std::runtime_error("unbound variable: " + n), name(n) {}
};

std::vector<Token> tokenize(const std::string& source);

// ---------------------------------------------------------------------------
// Expressions

enum class ExprKind {
  Const,
  Var,
  Op,      // name = operator; a, b (b null for unary)
  Abs,     // selfName?, name = parameter, a = body
  App,     // a(b)
  New,     // new a
  Get,     // a[b]
  Put,     // a[b] = c
  SbxAbs,  // sbx name => a
  Fresh,   // fresh a
  // sugar, removed by desugar():
  Let,     // let name = a; b
  Dot,     // a.name
  DotPut   // a.name = b
};

struct Expr {
  ExprKind kind;
  Constant lit;                         // Const
  std::string name;                     // Var / Op / Abs / SbxAbs / Let / Dot
  std::optional<std::string> selfName;  // Abs
  ExprPtr a, b, c;
  Pos pos;
};

ExprPtr makeConst(Constant c, Pos pos = {});
ExprPtr makeVar(std::string name, Pos pos = {});
ExprPtr makeOp(std::string op, ExprPtr a, ExprPtr b, Pos pos = {});
ExprPtr makeAbs(std::optional<std::string> selfName, std::string param,
                ExprPtr body, Pos pos = {});
ExprPtr makeApp(ExprPtr f, ExprPtr arg, Pos pos = {});
ExprPtr makeNew(ExprPtr proto, Pos pos = {});
ExprPtr makeGet(ExprPtr obj, ExprPtr key, Pos pos = {});
ExprPtr makePut(ExprPtr obj, ExprPtr key, ExprPtr val, Pos pos = {});
ExprPtr makeSbxAbs(std::string binder, ExprPtr body, Pos pos = {});
ExprPtr makeFresh(ExprPtr e, Pos pos = {});

bool exprEqual(const ExprPtr& a, const ExprPtr& b);

// Parses a complete expression; all tokens must be consumed.
ExprPtr parse(const std::vector<Token>& tokens);
ExprPtr parse(const std::string& source);

// Parses one expression starting at tokens[index]; advances index.
ExprPtr parseOne(const std::vector<Token>& tokens, std::size_t& index);

// Rewrites Let/Dot/DotPut sugar and resolves free identifiers. Inside a
// sandbox body with binder g, a free identifier y becomes g["y"]. At top
// level a free identifier is an error unless listed in `predefined` (the
// REPL passes its environment names) or equal to `sandboxGlobalName`, in
// which case the whole input is treated as a sandbox body over that binder.
ExprPtr desugar(const ExprPtr& e,
                const std::optional<std::string>& sandboxGlobalName = {},
                const std::set<std::string>& predefined = {});

std::string prettyPrint(const ExprPtr& e);

}  // namespace decent

#endif
