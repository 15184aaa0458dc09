#pragma once

// Test-only reference implementations, independent of the library's grammar
// machinery: a whole-program type checker written directly from the function
// signature table, and a brute-force program generator. Used to cross-check
// the incremental next-token oracle.

#include <optional>
#include <string>
#include <vector>

#include "mapo/table.hpp"
#include "mapo/tokens.hpp"

namespace mapo::testsupport {

// Whole-program well-typedness, checked in one pass over the token list.
// Deliberately restates the signatures rather than calling function_sig().
inline bool reference_check(const Program& p, const Table& table,
                            const std::vector<Cell>& pool) {
  enum class K { Rows, Cells, Num, Date, Str };  // binding kinds

  struct Sig {
    int arity;
    // slot codes: R rows, C any col, N num col, D num-or-date col, S str col,
    // L cmp literal, T str literal, M col matching previous literal kind
    const char* slots;
  };
  auto sig_of = [](FunctionId f) -> Sig {
    switch (f) {
      case FunctionId::Hop: return {2, "RC"};
      case FunctionId::Argmax:
      case FunctionId::Argmin: return {2, "RD"};
      case FunctionId::FilterGt:
      case FunctionId::FilterGe:
      case FunctionId::FilterLt:
      case FunctionId::FilterLe:
      case FunctionId::FilterEq:
      case FunctionId::FilterNe: return {3, "RLM"};
      case FunctionId::FilterIn:
      case FunctionId::FilterNotIn: return {3, "RTS"};
      case FunctionId::First:
      case FunctionId::Last:
      case FunctionId::Previous:
      case FunctionId::Next:
      case FunctionId::Count: return {1, "R"};
      case FunctionId::Max:
      case FunctionId::Min:
      case FunctionId::Average:
      case FunctionId::Sum: return {2, "RN"};
      case FunctionId::Mode:
      case FunctionId::SameAs: return {2, "RC"};
      case FunctionId::Diff: return {3, "RRN"};
    }
    return {0, ""};
  };

  auto column_kind = [&](const Token& t) -> std::optional<ColumnKind> {
    if (t.kind != TokenKind::Column) return std::nullopt;
    for (const Column& c : table.columns) {
      if (c.id == t.col_id && c.kind == t.col_kind) return c.kind;
    }
    return std::nullopt;
  };
  auto in_pool = [&](const Cell& c) {
    for (const Cell& p : pool) {
      if (p == c) return true;
    }
    return false;
  };

  std::vector<K> bindings;
  std::size_t i = 0;
  if (p.empty() || p.back().kind != TokenKind::Eos) return false;
  while (i < p.size()) {
    if (p[i].kind == TokenKind::Eos) {
      return !bindings.empty() && i + 1 == p.size();
    }
    if (p[i].kind != TokenKind::Open) return false;
    ++i;
    if (i >= p.size() || p[i].kind != TokenKind::Func) return false;
    FunctionId f = p[i].func;
    Sig sig = sig_of(f);
    ++i;
    std::optional<ColumnKind> cmp_kind;
    std::optional<ColumnKind> last_col;
    for (int a = 0; a < sig.arity; ++a, ++i) {
      if (i >= p.size()) return false;
      const Token& t = p[i];
      switch (sig.slots[a]) {
        case 'R':
          if (t.kind != TokenKind::Var) return false;
          if (t.var_index >= 0) {
            if (t.var_index >= static_cast<int>(bindings.size())) return false;
            if (bindings[t.var_index] != K::Rows) return false;
          }
          break;
        case 'C': {
          auto k = column_kind(t);
          if (!k) return false;
          last_col = k;
          break;
        }
        case 'N':
          if (column_kind(t) != ColumnKind::Number) return false;
          break;
        case 'D': {
          auto k = column_kind(t);
          if (!k || *k == ColumnKind::String) return false;
          break;
        }
        case 'S':
          if (column_kind(t) != ColumnKind::String) return false;
          break;
        case 'L': {
          if (t.kind != TokenKind::Literal || !in_pool(t.literal)) return false;
          if (std::holds_alternative<double>(t.literal)) {
            cmp_kind = ColumnKind::Number;
          } else if (std::holds_alternative<Date>(t.literal)) {
            cmp_kind = ColumnKind::Date;
          } else {
            return false;
          }
          break;
        }
        case 'T':
          if (t.kind != TokenKind::Literal ||
              !std::holds_alternative<std::string>(t.literal) || !in_pool(t.literal)) {
            return false;
          }
          break;
        case 'M': {
          auto k = column_kind(t);
          if (!k || !cmp_kind || *k != *cmp_kind) return false;
          break;
        }
        default: return false;
      }
    }
    if (i >= p.size() || p[i].kind != TokenKind::Close) return false;
    ++i;
    switch (f) {
      case FunctionId::Hop: bindings.push_back(K::Cells); break;
      case FunctionId::Count:
      case FunctionId::Max:
      case FunctionId::Min:
      case FunctionId::Average:
      case FunctionId::Sum:
      case FunctionId::Diff: bindings.push_back(K::Num); break;
      case FunctionId::Mode:
        switch (last_col.value_or(ColumnKind::String)) {
          case ColumnKind::Number: bindings.push_back(K::Num); break;
          case ColumnKind::Date: bindings.push_back(K::Date); break;
          case ColumnKind::String: bindings.push_back(K::Str); break;
        }
        break;
      default: bindings.push_back(K::Rows); break;
    }
  }
  return false;  // ran out of tokens without EOS
}

// All structurally shaped token sequences of at most max_tokens tokens:
// "( F t t.. )"-grouped expressions with 1..3 argument tokens followed by
// EOS. No type knowledge; pair with reference_check to get the well-typed
// set.
inline std::vector<Program> brute_force_programs(const Table& table,
                                                 const std::vector<Cell>& pool,
                                                 int max_tokens) {
  std::vector<Token> arg_alphabet;
  arg_alphabet.push_back(Token::all_rows());
  for (int v = 0; v < 4; ++v) arg_alphabet.push_back(Token::var(v));
  for (const Column& c : table.columns) arg_alphabet.push_back(Token::column(c.id, c.kind));
  for (const Cell& c : pool) arg_alphabet.push_back(Token::lit(c));

  std::vector<Program> exprs_by_len[8];  // expression token count <= 6
  for (int f = 0; f < kNumFunctions; ++f) {
    for (int nargs = 1; nargs <= 3; ++nargs) {
      int len = nargs + 3;
      if (len > 6) continue;
      std::vector<std::size_t> idx(static_cast<std::size_t>(nargs), 0);
      for (;;) {
        Program e;
        e.push_back(Token::open());
        e.push_back(Token::function(static_cast<FunctionId>(f)));
        for (int a = 0; a < nargs; ++a) e.push_back(arg_alphabet[idx[static_cast<std::size_t>(a)]]);
        e.push_back(Token::close());
        exprs_by_len[len].push_back(std::move(e));
        int pos = nargs - 1;
        while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == arg_alphabet.size()) {
          idx[static_cast<std::size_t>(pos)] = 0;
          --pos;
        }
        if (pos < 0) break;
      }
    }
  }

  std::vector<Program> out;
  // compose expression sequences within the budget (depth-first, programs
  // are expr+ EOS)
  struct Frame {
    Program prefix;
    int used;
  };
  std::vector<Frame> stack;
  stack.push_back({{}, 0});
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    if (!fr.prefix.empty() && fr.used + 1 <= max_tokens) {
      Program done = fr.prefix;
      done.push_back(Token::eos());
      out.push_back(std::move(done));
    }
    for (int len = 4; len <= 6; ++len) {
      if (fr.used + len + 1 > max_tokens) continue;
      for (const Program& e : exprs_by_len[len]) {
        Frame next;
        next.prefix = fr.prefix;
        next.prefix.insert(next.prefix.end(), e.begin(), e.end());
        next.used = fr.used + len;
        stack.push_back(std::move(next));
      }
    }
  }
  return out;
}

}  // namespace mapo::testsupport
