#include "mapo/interpreter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "mapo/grammar.hpp"

namespace mapo {

namespace {

struct RowsView {
  std::vector<int> indices;
};

// Row / row-list arguments are interchangeable up to runtime arity checks.
Value to_rows(const Value& v, RowsView& out) {
  if (const RowIndex* r = std::get_if<RowIndex>(&v.v)) {
    out.indices = {r->index};
    return Value(0.0);
  }
  if (const RowList* r = std::get_if<RowList>(&v.v)) {
    out.indices = r->indices;
    return Value(0.0);
  }
  return Value::error(ErrorCode::TypeError, "expected rows");
}

Value to_single_row(const Value& v, int& out) {
  if (const RowIndex* r = std::get_if<RowIndex>(&v.v)) {
    out = r->index;
    return Value(0.0);
  }
  if (const RowList* r = std::get_if<RowList>(&v.v)) {
    if (r->indices.empty()) return Value::error(ErrorCode::EmptyInput, "no rows");
    if (r->indices.size() > 1) {
      return Value::error(ErrorCode::AmbiguousRows,
                          std::to_string(r->indices.size()) + " rows where one is required");
    }
    out = r->indices[0];
    return Value(0.0);
  }
  return Value::error(ErrorCode::TypeError, "expected a row");
}

int cmp_cells(const Cell& a, const Cell& b) {
  if (const double* x = std::get_if<double>(&a)) {
    double y = std::get<double>(b);
    return *x < y ? -1 : (*x > y ? 1 : 0);
  }
  return date_cmp(std::get<Date>(a), std::get<Date>(b));
}

struct Evaluator {
  const Table& table;

  int column_of(const Token& t, ColumnKind* kind_out, Value& err) const {
    int idx = table.column_index(t.col_id);
    if (idx < 0 || table.columns[idx].kind != t.col_kind) {
      err = Value::error(ErrorCode::TypeError, "unknown column " + render_token(t));
      return -1;
    }
    if (kind_out) *kind_out = table.columns[idx].kind;
    return idx;
  }

  Value apply(FunctionId f, const std::vector<Value>& args, const std::vector<Token>& arg_toks);
};

Value Evaluator::apply(FunctionId f, const std::vector<Value>& args,
                       const std::vector<Token>& arg_toks) {
  auto arg_rows = [&](int i, RowsView& rv) -> Value { return to_rows(args[i], rv); };
  auto arg_col = [&](int i, ColumnKind* k, Value& err) -> int {
    if (arg_toks[i].kind != TokenKind::Column) {
      err = Value::error(ErrorCode::TypeError, "expected a column");
      return -1;
    }
    return column_of(arg_toks[i], k, err);
  };

  switch (f) {
    case FunctionId::Hop: {
      RowsView rv;
      if (Value e = arg_rows(0, rv); e.is_error()) return e;
      Value err;
      int c = arg_col(1, nullptr, err);
      if (c < 0) return err;
      CellList out;
      for (int r : rv.indices) {
        if (table.cell(r, c)) out.cells.push_back(*table.cell(r, c));
      }
      return Value(std::move(out));
    }

    case FunctionId::Argmax:
    case FunctionId::Argmin: {
      RowsView rv;
      if (Value e = arg_rows(0, rv); e.is_error()) return e;
      Value err;
      ColumnKind k;
      int c = arg_col(1, &k, err);
      if (c < 0) return err;
      if (k == ColumnKind::String) {
        return Value::error(ErrorCode::TypeError, "argmax/argmin need number or date column");
      }
      const int sign = f == FunctionId::Argmax ? 1 : -1;
      bool have = false;
      Cell best = 0.0;
      RowList out;
      for (int r : rv.indices) {
        const auto& cell = table.cell(r, c);
        if (!cell) continue;
        if (!have) {
          have = true;
          best = *cell;
          out.indices = {r};
          continue;
        }
        int cmp = cmp_cells(*cell, best) * sign;
        if (cmp > 0) {
          best = *cell;
          out.indices = {r};
        } else if (cmp == 0) {
          out.indices.push_back(r);
        }
      }
      if (!have) return Value::error(ErrorCode::EmptyInput, "no comparable cells");
      return Value(std::move(out));
    }

    case FunctionId::FilterGt:
    case FunctionId::FilterGe:
    case FunctionId::FilterLt:
    case FunctionId::FilterLe:
    case FunctionId::FilterEq:
    case FunctionId::FilterNe: {
      RowsView rv;
      if (Value e = arg_rows(0, rv); e.is_error()) return e;
      if (arg_toks[1].kind != TokenKind::Literal) {
        return Value::error(ErrorCode::TypeError, "expected a literal");
      }
      const Cell& q = arg_toks[1].literal;
      if (std::holds_alternative<std::string>(q)) {
        return Value::error(ErrorCode::TypeError, "comparison needs number or date");
      }
      Value err;
      ColumnKind k;
      int c = arg_col(2, &k, err);
      if (c < 0) return err;
      bool q_is_num = std::holds_alternative<double>(q);
      if ((q_is_num && k != ColumnKind::Number) || (!q_is_num && k != ColumnKind::Date)) {
        return Value::error(ErrorCode::TypeError, "literal kind does not match column");
      }
      RowList out;
      for (int r : rv.indices) {
        const auto& cell = table.cell(r, c);
        if (!cell) continue;
        int cmp = cmp_cells(*cell, q);
        bool keep = false;
        switch (f) {
          case FunctionId::FilterGt: keep = cmp > 0; break;
          case FunctionId::FilterGe: keep = cmp >= 0; break;
          case FunctionId::FilterLt: keep = cmp < 0; break;
          case FunctionId::FilterLe: keep = cmp <= 0; break;
          case FunctionId::FilterEq: keep = cmp == 0; break;
          case FunctionId::FilterNe: keep = cmp != 0; break;
          default: break;
        }
        if (keep) out.indices.push_back(r);
      }
      return Value(std::move(out));
    }

    case FunctionId::FilterIn:
    case FunctionId::FilterNotIn: {
      RowsView rv;
      if (Value e = arg_rows(0, rv); e.is_error()) return e;
      if (arg_toks[1].kind != TokenKind::Literal ||
          !std::holds_alternative<std::string>(arg_toks[1].literal)) {
        return Value::error(ErrorCode::TypeError, "expected a string literal");
      }
      std::string needle = fold_string(std::get<std::string>(arg_toks[1].literal));
      Value err;
      ColumnKind k;
      int c = arg_col(2, &k, err);
      if (c < 0) return err;
      if (k != ColumnKind::String) {
        return Value::error(ErrorCode::TypeError, "filter_in needs a string column");
      }
      RowList out;
      for (int r : rv.indices) {
        const auto& cell = table.cell(r, c);
        bool contains =
            cell && fold_string(std::get<std::string>(*cell)).find(needle) != std::string::npos;
        if (contains == (f == FunctionId::FilterIn)) out.indices.push_back(r);
      }
      return Value(std::move(out));
    }

    case FunctionId::First:
    case FunctionId::Last: {
      RowsView rv;
      if (Value e = arg_rows(0, rv); e.is_error()) return e;
      if (rv.indices.empty()) return Value::error(ErrorCode::EmptyInput, "no rows");
      return Value(RowIndex{f == FunctionId::First ? rv.indices.front() : rv.indices.back()});
    }

    case FunctionId::Previous:
    case FunctionId::Next: {
      int r = 0;
      if (Value e = to_single_row(args[0], r); e.is_error()) return e;
      int target = f == FunctionId::Previous ? r - 1 : r + 1;
      if (target < 0 || target >= table.num_rows()) {
        return Value::error(ErrorCode::OutOfTable, "row " + std::to_string(target));
      }
      return Value(RowIndex{target});
    }

    case FunctionId::Count: {
      RowsView rv;
      if (Value e = arg_rows(0, rv); e.is_error()) return e;
      return Value(static_cast<double>(rv.indices.size()));
    }

    case FunctionId::Max:
    case FunctionId::Min:
    case FunctionId::Average:
    case FunctionId::Sum: {
      RowsView rv;
      if (Value e = arg_rows(0, rv); e.is_error()) return e;
      Value err;
      ColumnKind k;
      int c = arg_col(1, &k, err);
      if (c < 0) return err;
      if (k != ColumnKind::Number) {
        return Value::error(ErrorCode::TypeError, "aggregate needs a number column");
      }
      std::vector<double> vals;
      for (int r : rv.indices) {
        if (table.cell(r, c)) vals.push_back(std::get<double>(*table.cell(r, c)));
      }
      if (vals.empty()) return Value::error(ErrorCode::EmptyInput, "no numbers");
      switch (f) {
        case FunctionId::Max: return Value(*std::max_element(vals.begin(), vals.end()));
        case FunctionId::Min: return Value(*std::min_element(vals.begin(), vals.end()));
        case FunctionId::Sum: {
          double s = 0.0;
          for (double v : vals) s += v;
          return Value(s);
        }
        case FunctionId::Average: {
          double s = 0.0;
          for (double v : vals) s += v;
          return Value(s / static_cast<double>(vals.size()));
        }
        default: break;
      }
      return Value::error(ErrorCode::TypeError, "unreachable");
    }

    case FunctionId::Mode: {
      RowsView rv;
      if (Value e = arg_rows(0, rv); e.is_error()) return e;
      Value err;
      int c = arg_col(1, nullptr, err);
      if (c < 0) return err;
      // value -> (count, first occurrence), first-seen order for ties
      std::vector<std::pair<Cell, std::pair<int, int>>> counts;
      for (int r : rv.indices) {
        const auto& cell = table.cell(r, c);
        if (!cell) continue;
        bool found = false;
        for (auto& [v, cf] : counts) {
          if (cell_eq(v, *cell)) {
            ++cf.first;
            found = true;
            break;
          }
        }
        if (!found) counts.push_back({*cell, {1, r}});
      }
      if (counts.empty()) return Value::error(ErrorCode::EmptyInput, "no cells");
      const auto* best = &counts[0];
      for (const auto& entry : counts) {
        if (entry.second.first > best->second.first ||
            (entry.second.first == best->second.first &&
             entry.second.second < best->second.second)) {
          best = &entry;
        }
      }
      if (const double* d = std::get_if<double>(&best->first)) return Value(*d);
      if (const Date* d = std::get_if<Date>(&best->first)) return Value(*d);
      return Value(std::get<std::string>(best->first));
    }

    case FunctionId::SameAs: {
      int r = 0;
      if (Value e = to_single_row(args[0], r); e.is_error()) return e;
      Value err;
      int c = arg_col(1, nullptr, err);
      if (c < 0) return err;
      RowList out;
      const auto& probe = table.cell(r, c);
      if (!probe) return Value(std::move(out));  // empty probe cell: no rows
      for (int i = 0; i < table.num_rows(); ++i) {
        const auto& cell = table.cell(i, c);
        if (cell && cell_eq(*cell, *probe)) out.indices.push_back(i);
      }
      return Value(std::move(out));
    }

    case FunctionId::Diff: {
      int a = 0, b = 0;
      if (Value e = to_single_row(args[0], a); e.is_error()) return e;
      if (Value e = to_single_row(args[1], b); e.is_error()) return e;
      Value err;
      ColumnKind k;
      int c = arg_col(2, &k, err);
      if (c < 0) return err;
      if (k != ColumnKind::Number) {
        return Value::error(ErrorCode::TypeError, "diff needs a number column");
      }
      const auto& ca = table.cell(a, c);
      const auto& cb = table.cell(b, c);
      if (!ca || !cb) return Value::error(ErrorCode::EmptyInput, "missing cell");
      return Value(std::get<double>(*ca) - std::get<double>(*cb));
    }
  }
  return Value::error(ErrorCode::TypeError, "unknown function");
}

}  // namespace

Value execute(const Program& program, const Table& table, ExecOptions opts) {
  if (!program_complete(program)) {
    return Value::error(ErrorCode::TypeError, "incomplete program");
  }
  Evaluator ev{table};
  std::vector<Value> bindings;
  Value last = Value::error(ErrorCode::EmptyInput, "empty program");
  int steps = 0;
  std::size_t i = 0;
  while (i < program.size()) {
    const Token& t = program[i];
    if (t.kind == TokenKind::Eos) {
      if (bindings.empty()) return Value::error(ErrorCode::EmptyInput, "no expressions");
      return last;
    }
    if (t.kind != TokenKind::Open) {
      return Value::error(ErrorCode::TypeError, "expected '('");
    }
    ++i;
    if (i >= program.size() || program[i].kind != TokenKind::Func) {
      return Value::error(ErrorCode::TypeError, "expected function name");
    }
    FunctionId f = program[i].func;
    ++i;
    std::vector<Value> args;
    std::vector<Token> arg_toks;
    while (i < program.size() && program[i].kind != TokenKind::Close) {
      const Token& at = program[i];
      switch (at.kind) {
        case TokenKind::Var:
          if (at.var_index < 0) {
            args.push_back(Value(table.all_rows()));
          } else if (at.var_index < static_cast<int>(bindings.size())) {
            args.push_back(bindings[at.var_index]);
          } else {
            return Value::error(ErrorCode::TypeError,
                                "unbound variable " + render_token(at));
          }
          break;
        case TokenKind::Column:
        case TokenKind::Literal:
          args.push_back(Value(0.0));  // consumed via arg_toks
          break;
        default:
          return Value::error(ErrorCode::TypeError, "bad argument token");
      }
      arg_toks.push_back(at);
      ++i;
    }
    if (i >= program.size()) return Value::error(ErrorCode::TypeError, "missing ')'");
    ++i;  // consume ')'
    if (static_cast<int>(args.size()) != function_sig(f).arity) {
      return Value::error(ErrorCode::TypeError, "wrong arity for " + std::string(function_name(f)));
    }
    if (++steps > opts.step_budget) {
      return Value::error(ErrorCode::BudgetExceeded,
                          "more than " + std::to_string(opts.step_budget) + " expressions");
    }
    last = ev.apply(f, args, arg_toks);
    if (last.is_error()) return last;
    bindings.push_back(last);
  }
  return Value::error(ErrorCode::TypeError, "missing <EOS>");
}

std::optional<std::vector<std::string>> value_answer_strings(const Value& v) {
  if (const double* d = std::get_if<double>(&v.v)) {
    return std::vector<std::string>{canonical_number(*d)};
  }
  if (const Date* d = std::get_if<Date>(&v.v)) {
    return std::vector<std::string>{canonical_cell(Cell(*d))};
  }
  if (const std::string* s = std::get_if<std::string>(&v.v)) {
    return std::vector<std::string>{fold_string(*s)};
  }
  if (const CellList* c = std::get_if<CellList>(&v.v)) {
    std::vector<std::string> out;
    out.reserve(c->cells.size());
    for (const Cell& cell : c->cells) out.push_back(canonical_cell(cell));
    return out;
  }
  return std::nullopt;  // rows and errors have no denotation string
}

static std::string canonical_answer_string(const std::string& s) {
  std::string folded = fold_string(s);
  double num = 0.0;
  auto [ptr, ec] = std::from_chars(folded.data(), folded.data() + folded.size(), num);
  if (ec == std::errc() && ptr == folded.data() + folded.size()) {
    return canonical_number(num);
  }
  Date d;
  if (parse_date_string(folded, d)) return canonical_cell(Cell(d));
  return folded;
}

bool answer_match(const Value& v, const std::vector<std::string>& answer) {
  auto strings = value_answer_strings(v);
  if (!strings) return false;
  std::vector<std::string> gold;
  gold.reserve(answer.size());
  for (const std::string& a : answer) gold.push_back(canonical_answer_string(a));
  std::sort(strings->begin(), strings->end());
  std::sort(gold.begin(), gold.end());
  return *strings == gold;
}

}  // namespace mapo
