#include "mapo/tokens.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>

namespace mapo {

const char* function_name(FunctionId f) {
  switch (f) {
    case FunctionId::Hop: return "hop";
    case FunctionId::Argmax: return "argmax";
    case FunctionId::Argmin: return "argmin";
    case FunctionId::FilterGt: return "filter_>";
    case FunctionId::FilterGe: return "filter_>=";
    case FunctionId::FilterLt: return "filter_<";
    case FunctionId::FilterLe: return "filter_<=";
    case FunctionId::FilterEq: return "filter_=";
    case FunctionId::FilterNe: return "filter_!=";
    case FunctionId::FilterIn: return "filter_in";
    case FunctionId::FilterNotIn: return "filter_!in";
    case FunctionId::First: return "first";
    case FunctionId::Last: return "last";
    case FunctionId::Previous: return "previous";
    case FunctionId::Next: return "next";
    case FunctionId::Count: return "count";
    case FunctionId::Max: return "max";
    case FunctionId::Min: return "min";
    case FunctionId::Average: return "average";
    case FunctionId::Sum: return "sum";
    case FunctionId::Mode: return "mode";
    case FunctionId::SameAs: return "same_as";
    case FunctionId::Diff: return "diff";
  }
  return "?";
}

bool parse_function_name(const std::string& s, FunctionId& out) {
  static const std::unordered_map<std::string, FunctionId> names = [] {
    std::unordered_map<std::string, FunctionId> m;
    for (int i = 0; i < kNumFunctions; ++i) {
      FunctionId f = static_cast<FunctionId>(i);
      m[function_name(f)] = f;
    }
    // UTF-8 spellings used in print form
    m["filter_\xe2\x89\xa5"] = FunctionId::FilterGe;  // ≥
    m["filter_\xe2\x89\xa4"] = FunctionId::FilterLe;  // ≤
    m["filter_\xe2\x89\xa0"] = FunctionId::FilterNe;  // ≠
    return m;
  }();
  auto it = names.find(s);
  if (it == names.end()) return false;
  out = it->second;
  return true;
}

bool Token::operator==(const Token& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case TokenKind::Open:
    case TokenKind::Close:
    case TokenKind::Eos: return true;
    case TokenKind::Func: return func == o.func;
    case TokenKind::Column: return col_id == o.col_id && col_kind == o.col_kind;
    case TokenKind::Var: return var_index == o.var_index;
    case TokenKind::Literal: return literal == o.literal;  // structural equality
  }
  return false;
}

static std::string render_literal(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return "[" + canonical_number(*d) + "]";
  if (const Date* d = std::get_if<Date>(&c)) return "[" + canonical_cell(Cell(*d)) + "]";
  return "['" + std::get<std::string>(c) + "']";
}

std::string render_token(const Token& t) {
  switch (t.kind) {
    case TokenKind::Open: return "(";
    case TokenKind::Close: return ")";
    case TokenKind::Eos: return "<EOS>";
    case TokenKind::Func: return function_name(t.func);
    case TokenKind::Column:
      return "r." + t.col_id + "-" + column_kind_suffix(t.col_kind);
    case TokenKind::Var:
      return t.var_index < 0 ? "all_rows" : "v" + std::to_string(t.var_index);
    case TokenKind::Literal: return render_literal(t.literal);
  }
  return "?";
}

void append_token_render(std::string& out, const Token& t, const Token* prev) {
  if (prev && t.kind != TokenKind::Close && prev->kind != TokenKind::Open) {
    out.push_back(' ');
  }
  out += render_token(t);
}

std::string render_program(const Program& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    append_token_render(out, p[i], i ? &p[i - 1] : nullptr);
  }
  return out;
}

namespace {

Token parse_literal_text(const std::string& inner, const std::string& whole) {
  if (inner.size() >= 2 && inner.front() == '\'' && inner.back() == '\'') {
    return Token::lit(Cell(inner.substr(1, inner.size() - 2)));
  }
  Date d;
  if (parse_date_string(inner, d)) return Token::lit(Cell(d));
  double num = 0.0;
  auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), num);
  if (ec == std::errc() && ptr == inner.data() + inner.size()) {
    return Token::lit(Cell(num));
  }
  throw ParseError(ParseError::Kind::UnknownToken, "bad literal: " + whole);
}

Token parse_word(const std::string& w) {
  if (w == "<EOS>") return Token::eos();
  if (w == "all_rows") return Token::all_rows();
  if (w.size() >= 2 && w[0] == 'v' &&
      std::all_of(w.begin() + 1, w.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return Token::var(std::stoi(w.substr(1)));
  }
  if (w.rfind("r.", 0) == 0) {
    std::size_t dash = w.rfind('-');
    if (dash != std::string::npos && dash > 2) {
      std::string id = w.substr(2, dash - 2);
      std::string suffix = w.substr(dash + 1);
      if (suffix == "num") return Token::column(id, ColumnKind::Number);
      if (suffix == "str") return Token::column(id, ColumnKind::String);
      if (suffix == "date") return Token::column(id, ColumnKind::Date);
    }
    throw ParseError(ParseError::Kind::UnknownToken, "bad column ref: " + w);
  }
  FunctionId f;
  if (parse_function_name(w, f)) return Token::function(f);
  throw ParseError(ParseError::Kind::UnknownToken, "unknown token: " + w);
}

}  // namespace

static Program tokenize(const std::string& text, bool require_balanced) {
  Program out;
  int depth = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '(') {
      out.push_back(Token::open());
      ++depth;
      ++i;
    } else if (c == ')') {
      if (depth == 0) {
        throw ParseError(ParseError::Kind::UnbalancedParens, "unexpected ')'");
      }
      out.push_back(Token::close());
      --depth;
      ++i;
    } else if (c == '[') {
      std::size_t close = text.find(']', i);
      if (close == std::string::npos) {
        throw ParseError(ParseError::Kind::UnknownToken, "unterminated literal");
      }
      std::string whole = text.substr(i, close - i + 1);
      out.push_back(parse_literal_text(text.substr(i + 1, close - i - 1), whole));
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < n && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '(' &&
             text[j] != ')' && text[j] != '[') {
        ++j;
      }
      out.push_back(parse_word(text.substr(i, j - i)));
      i = j;
    }
  }
  if (require_balanced && depth != 0) {
    throw ParseError(ParseError::Kind::UnbalancedParens, "unclosed '('");
  }
  return out;
}

Program parse_program(const std::string& text) { return tokenize(text, true); }

Program parse_prefix(const std::string& text) { return tokenize(text, false); }

bool program_complete(const Program& p) {
  return !p.empty() && p.back().kind == TokenKind::Eos;
}

}  // namespace mapo
