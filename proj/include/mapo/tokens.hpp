#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mapo/table.hpp"
#include "mapo/value.hpp"

namespace mapo {

enum class FunctionId {
  Hop,
  Argmax,
  Argmin,
  FilterGt,
  FilterGe,
  FilterLt,
  FilterLe,
  FilterEq,
  FilterNe,
  FilterIn,
  FilterNotIn,
  First,
  Last,
  Previous,
  Next,
  Count,
  Max,
  Min,
  Average,
  Sum,
  Mode,
  SameAs,
  Diff,
};

inline constexpr int kNumFunctions = 23;

const char* function_name(FunctionId f);
// Parses a canonical or alias spelling ("filter_>=" and "filter_≥" both
// resolve); returns false for unknown names.
bool parse_function_name(const std::string& s, FunctionId& out);

enum class TokenKind { Open, Close, Func, Column, Var, Literal, Eos };

// One surface token of the program language.
// Var with index -1 denotes all_rows; index i >= 0 denotes v<i>.
struct Token {
  TokenKind kind = TokenKind::Open;
  FunctionId func = FunctionId::Hop;
  std::string col_id;
  ColumnKind col_kind = ColumnKind::Number;
  int var_index = -1;
  Cell literal = 0.0;

  static Token open() {
    Token t;
    t.kind = TokenKind::Open;
    return t;
  }
  static Token close() {
    Token t;
    t.kind = TokenKind::Close;
    return t;
  }
  static Token eos() {
    Token t;
    t.kind = TokenKind::Eos;
    return t;
  }
  static Token function(FunctionId f) {
    Token t;
    t.kind = TokenKind::Func;
    t.func = f;
    return t;
  }
  static Token column(std::string id, ColumnKind kind) {
    Token t;
    t.kind = TokenKind::Column;
    t.col_id = std::move(id);
    t.col_kind = kind;
    return t;
  }
  static Token all_rows() {
    Token t;
    t.kind = TokenKind::Var;
    t.var_index = -1;
    return t;
  }
  static Token var(int index) {
    Token t;
    t.kind = TokenKind::Var;
    t.var_index = index;
    return t;
  }
  static Token lit(Cell c) {
    Token t;
    t.kind = TokenKind::Literal;
    t.literal = std::move(c);
    return t;
  }

  bool operator==(const Token& o) const;
};

using Program = std::vector<Token>;

// Canonical surface text: "(", ")", function names, "r.<id>-<num|str|date>",
// "v0"/"all_rows", bracketed literals ("[2]", "['1st']", "[2007-xx-xx]"),
// "<EOS>".
std::string render_token(const Token& t);
std::string render_program(const Program& p);

// Appends render_token(t) to out with render_program's spacing (no space
// after '(' or before ')'). prev is the token before t, null at the start.
void append_token_render(std::string& out, const Token& t, const Token* prev);

struct ParseError : std::runtime_error {
  enum class Kind { UnbalancedParens, UnknownToken };
  Kind kind;
  ParseError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Tokenizes whitespace-separated surface text. Bracketed literals may contain
// spaces. Checks paren balance only; typing is the grammar's concern.
// Throws ParseError.
Program parse_program(const std::string& text);

// Same tokenizer without the trailing-balance requirement, for prefixes.
Program parse_prefix(const std::string& text);

bool program_complete(const Program& p);  // non-empty and ends with EOS

}  // namespace mapo
