#include "mapo/grammar.hpp"

#include <algorithm>
#include <array>

namespace mapo {

namespace {

constexpr std::array<FunctionSig, kNumFunctions> make_sigs() {
  using F = FunctionId;
  using A = ArgSlot;
  // Unused trailing slots repeat RowsArg; arity bounds what is read.
  return {{
      {F::Hop, 2, {A::RowsArg, A::AnyCol, A::RowsArg}},
      {F::Argmax, 2, {A::RowsArg, A::NumDateCol, A::RowsArg}},
      {F::Argmin, 2, {A::RowsArg, A::NumDateCol, A::RowsArg}},
      {F::FilterGt, 3, {A::RowsArg, A::CmpLit, A::CmpCol}},
      {F::FilterGe, 3, {A::RowsArg, A::CmpLit, A::CmpCol}},
      {F::FilterLt, 3, {A::RowsArg, A::CmpLit, A::CmpCol}},
      {F::FilterLe, 3, {A::RowsArg, A::CmpLit, A::CmpCol}},
      {F::FilterEq, 3, {A::RowsArg, A::CmpLit, A::CmpCol}},
      {F::FilterNe, 3, {A::RowsArg, A::CmpLit, A::CmpCol}},
      {F::FilterIn, 3, {A::RowsArg, A::StrLit, A::StrCol}},
      {F::FilterNotIn, 3, {A::RowsArg, A::StrLit, A::StrCol}},
      {F::First, 1, {A::RowsArg, A::RowsArg, A::RowsArg}},
      {F::Last, 1, {A::RowsArg, A::RowsArg, A::RowsArg}},
      {F::Previous, 1, {A::RowsArg, A::RowsArg, A::RowsArg}},
      {F::Next, 1, {A::RowsArg, A::RowsArg, A::RowsArg}},
      {F::Count, 1, {A::RowsArg, A::RowsArg, A::RowsArg}},
      {F::Max, 2, {A::RowsArg, A::NumCol, A::RowsArg}},
      {F::Min, 2, {A::RowsArg, A::NumCol, A::RowsArg}},
      {F::Average, 2, {A::RowsArg, A::NumCol, A::RowsArg}},
      {F::Sum, 2, {A::RowsArg, A::NumCol, A::RowsArg}},
      {F::Mode, 2, {A::RowsArg, A::AnyCol, A::RowsArg}},
      {F::SameAs, 2, {A::RowsArg, A::AnyCol, A::RowsArg}},
      {F::Diff, 3, {A::RowsArg, A::RowsArg, A::NumCol}},
  }};
}

const std::array<FunctionSig, kNumFunctions> kSigs = make_sigs();

}  // namespace

const FunctionSig& function_sig(FunctionId f) { return kSigs[static_cast<int>(f)]; }

PrefixState::PrefixState(const Table& table, const std::vector<Cell>& literal_pool)
    : table_(&table), pool_(&literal_pool) {}

int PrefixState::min_tokens_to_complete() const {
  switch (phase_) {
    case Phase::Done: return 0;
    case Phase::Boundary:
      // EOS if something is bound; otherwise the shortest expression + EOS
      return bindings_.empty() ? 5 : 1;
    case Phase::ExpectFunc: return 1 + 1 + 1 + 1;  // unary func, arg, ')', EOS
    case Phase::ExpectArg: {
      int remaining_args = function_sig(cur_func_).arity - args_filled_;
      return remaining_args + 1 + 1;
    }
    case Phase::ExpectClose: return 2;  // ')' then EOS
  }
  return 0;
}

bool PrefixState::function_startable(FunctionId f, int remaining) const {
  // remaining counts the function name itself plus args + ')' + EOS
  const FunctionSig& sig = function_sig(f);
  if (remaining < sig.arity + 3) return false;
  bool has_num = table_->has_column_of_kind(ColumnKind::Number);
  bool has_date = table_->has_column_of_kind(ColumnKind::Date);
  bool has_str = table_->has_column_of_kind(ColumnKind::String);
  auto pool_has = [&](ColumnKind k) {
    for (const Cell& c : *pool_) {
      if (k == ColumnKind::Number && std::holds_alternative<double>(c)) return true;
      if (k == ColumnKind::Date && std::holds_alternative<Date>(c)) return true;
      if (k == ColumnKind::String && std::holds_alternative<std::string>(c)) return true;
    }
    return false;
  };
  for (int i = 0; i < sig.arity; ++i) {
    switch (sig.slots[i]) {
      case ArgSlot::RowsArg: break;  // all_rows always available
      case ArgSlot::NumDateCol:
        if (!has_num && !has_date) return false;
        break;
      case ArgSlot::NumCol:
        if (!has_num) return false;
        break;
      case ArgSlot::StrCol:
        if (!has_str) return false;
        break;
      case ArgSlot::AnyCol:
        if (table_->num_columns() == 0) return false;
        break;
      case ArgSlot::StrLit:
        if (!pool_has(ColumnKind::String)) return false;
        break;
      case ArgSlot::CmpLit:
        // the literal and the column after it must agree on kind
        if (!((has_num && pool_has(ColumnKind::Number)) ||
              (has_date && pool_has(ColumnKind::Date)))) {
          return false;
        }
        break;
      case ArgSlot::CmpCol: break;  // covered by CmpLit
    }
  }
  return true;
}

bool PrefixState::slot_accepts(ArgSlot slot, const Token& t) const {
  switch (slot) {
    case ArgSlot::RowsArg:
      if (t.kind != TokenKind::Var) return false;
      if (t.var_index < 0) return true;
      return t.var_index < static_cast<int>(bindings_.size()) &&
             bindings_[t.var_index] == BindKind::Rows;
    case ArgSlot::NumDateCol:
      return t.kind == TokenKind::Column &&
             (t.col_kind == ColumnKind::Number || t.col_kind == ColumnKind::Date) &&
             table_->column_index(t.col_id) >= 0 &&
             table_->columns[table_->column_index(t.col_id)].kind == t.col_kind;
    case ArgSlot::NumCol:
      return t.kind == TokenKind::Column && t.col_kind == ColumnKind::Number &&
             table_->column_index(t.col_id) >= 0 &&
             table_->columns[table_->column_index(t.col_id)].kind == ColumnKind::Number;
    case ArgSlot::StrCol:
      return t.kind == TokenKind::Column && t.col_kind == ColumnKind::String &&
             table_->column_index(t.col_id) >= 0 &&
             table_->columns[table_->column_index(t.col_id)].kind == ColumnKind::String;
    case ArgSlot::AnyCol: {
      if (t.kind != TokenKind::Column) return false;
      int idx = table_->column_index(t.col_id);
      return idx >= 0 && table_->columns[idx].kind == t.col_kind;
    }
    case ArgSlot::StrLit: {
      if (t.kind != TokenKind::Literal || !std::holds_alternative<std::string>(t.literal)) {
        return false;
      }
      for (const Cell& c : *pool_) {
        if (c == t.literal) return true;
      }
      return false;
    }
    case ArgSlot::CmpLit: {
      if (t.kind != TokenKind::Literal) return false;
      ColumnKind k;
      if (std::holds_alternative<double>(t.literal)) {
        k = ColumnKind::Number;
      } else if (std::holds_alternative<Date>(t.literal)) {
        k = ColumnKind::Date;
      } else {
        return false;
      }
      if (!table_->has_column_of_kind(k)) return false;
      for (const Cell& c : *pool_) {
        if (c == t.literal) return true;
      }
      return false;
    }
    case ArgSlot::CmpCol: {
      if (t.kind != TokenKind::Column || !pending_cmp_kind_ || t.col_kind != *pending_cmp_kind_) {
        return false;
      }
      int idx = table_->column_index(t.col_id);
      return idx >= 0 && table_->columns[idx].kind == t.col_kind;
    }
  }
  return false;
}

void PrefixState::collect_slot_tokens(ArgSlot slot, std::vector<Token>& out) const {
  auto add_columns = [&](auto pred) {
    for (const Column& c : table_->columns) {
      if (pred(c.kind)) out.push_back(Token::column(c.id, c.kind));
    }
  };
  switch (slot) {
    case ArgSlot::RowsArg:
      out.push_back(Token::all_rows());
      for (int i = 0; i < static_cast<int>(bindings_.size()); ++i) {
        if (bindings_[i] == BindKind::Rows) out.push_back(Token::var(i));
      }
      break;
    case ArgSlot::NumDateCol:
      add_columns([](ColumnKind k) { return k != ColumnKind::String; });
      break;
    case ArgSlot::NumCol:
      add_columns([](ColumnKind k) { return k == ColumnKind::Number; });
      break;
    case ArgSlot::StrCol:
      add_columns([](ColumnKind k) { return k == ColumnKind::String; });
      break;
    case ArgSlot::AnyCol:
      add_columns([](ColumnKind) { return true; });
      break;
    case ArgSlot::StrLit:
      for (const Cell& c : *pool_) {
        if (std::holds_alternative<std::string>(c)) out.push_back(Token::lit(c));
      }
      break;
    case ArgSlot::CmpLit:
      for (const Cell& c : *pool_) {
        if (std::holds_alternative<double>(c) &&
            table_->has_column_of_kind(ColumnKind::Number)) {
          out.push_back(Token::lit(c));
        } else if (std::holds_alternative<Date>(c) &&
                   table_->has_column_of_kind(ColumnKind::Date)) {
          out.push_back(Token::lit(c));
        }
      }
      break;
    case ArgSlot::CmpCol:
      if (pending_cmp_kind_) {
        add_columns([&](ColumnKind k) { return k == *pending_cmp_kind_; });
      }
      break;
  }
}

BindKind PrefixState::result_kind() const {
  switch (cur_func_) {
    case FunctionId::Hop: return BindKind::Cells;
    case FunctionId::Count:
    case FunctionId::Max:
    case FunctionId::Min:
    case FunctionId::Average:
    case FunctionId::Sum:
    case FunctionId::Diff: return BindKind::Num;
    case FunctionId::Mode:
      switch (last_col_kind_.value_or(ColumnKind::String)) {
        case ColumnKind::Number: return BindKind::Num;
        case ColumnKind::Date: return BindKind::DateScalar;
        case ColumnKind::String: return BindKind::Str;
      }
      return BindKind::Str;
    default: return BindKind::Rows;
  }
}

bool PrefixState::token_valid(const Token& t, int max_total_tokens) const {
  const int remaining =
      max_total_tokens > 0 ? max_total_tokens - pos_ : 1 << 20;
  if (remaining <= 0) return false;
  switch (phase_) {
    case Phase::Done: return false;
    case Phase::Boundary:
      if (t.kind == TokenKind::Eos) return !bindings_.empty();
      if (t.kind == TokenKind::Open) {
        if (remaining < 5) return false;
        for (int i = 0; i < kNumFunctions; ++i) {
          if (function_startable(static_cast<FunctionId>(i), remaining - 1)) return true;
        }
        return false;
      }
      return false;
    case Phase::ExpectFunc:
      return t.kind == TokenKind::Func && function_startable(t.func, remaining);
    case Phase::ExpectArg: {
      const FunctionSig& sig = function_sig(cur_func_);
      // after this token: remaining args, ')', EOS
      int need = (sig.arity - args_filled_ - 1) + 2;
      if (remaining - 1 < need) return false;
      return slot_accepts(sig.slots[args_filled_], t);
    }
    case Phase::ExpectClose:
      return t.kind == TokenKind::Close && remaining >= 2;
  }
  return false;
}

bool PrefixState::advance(const Token& t, int max_total_tokens) {
  if (!token_valid(t, max_total_tokens)) return false;
  switch (phase_) {
    case Phase::Boundary:
      if (t.kind == TokenKind::Eos) {
        phase_ = Phase::Done;
        complete_ = true;
      } else {
        phase_ = Phase::ExpectFunc;
      }
      break;
    case Phase::ExpectFunc:
      cur_func_ = t.func;
      args_filled_ = 0;
      pending_cmp_kind_.reset();
      last_col_kind_.reset();
      phase_ = function_sig(cur_func_).arity == 0 ? Phase::ExpectClose : Phase::ExpectArg;
      break;
    case Phase::ExpectArg: {
      const FunctionSig& sig = function_sig(cur_func_);
      if (sig.slots[args_filled_] == ArgSlot::CmpLit) {
        pending_cmp_kind_ = std::holds_alternative<double>(t.literal) ? ColumnKind::Number
                                                                      : ColumnKind::Date;
      }
      if (t.kind == TokenKind::Column) last_col_kind_ = t.col_kind;
      ++args_filled_;
      if (args_filled_ == sig.arity) phase_ = Phase::ExpectClose;
      break;
    }
    case Phase::ExpectClose:
      bindings_.push_back(result_kind());
      phase_ = Phase::Boundary;
      break;
    case Phase::Done: return false;
  }
  ++pos_;
  return true;
}

std::vector<Token> PrefixState::valid_next(int max_total_tokens) const {
  std::vector<Token> out;
  const int remaining = max_total_tokens > 0 ? max_total_tokens - pos_ : 1 << 20;
  if (remaining <= 0 || phase_ == Phase::Done) return out;
  switch (phase_) {
    case Phase::Boundary: {
      Token open = Token::open();
      if (token_valid(open, max_total_tokens)) out.push_back(open);
      if (!bindings_.empty()) out.push_back(Token::eos());
      break;
    }
    case Phase::ExpectFunc:
      for (int i = 0; i < kNumFunctions; ++i) {
        FunctionId f = static_cast<FunctionId>(i);
        if (function_startable(f, remaining)) out.push_back(Token::function(f));
      }
      break;
    case Phase::ExpectArg: {
      const FunctionSig& sig = function_sig(cur_func_);
      int need = (sig.arity - args_filled_ - 1) + 2;
      if (remaining - 1 < need) break;
      collect_slot_tokens(sig.slots[args_filled_], out);
      break;
    }
    case Phase::ExpectClose:
      if (remaining >= 2) out.push_back(Token::close());
      break;
    case Phase::Done: break;
  }
  std::vector<std::pair<std::string, std::size_t>> keys;
  keys.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) keys.emplace_back(render_token(out[i]), i);
  std::sort(keys.begin(), keys.end());
  std::vector<Token> sorted;
  sorted.reserve(out.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i && keys[i].first == keys[i - 1].first) continue;
    sorted.push_back(std::move(out[keys[i].second]));
  }
  return sorted;
}

std::vector<Token> valid_next_tokens(const Program& prefix, const Table& table,
                                     const std::vector<Cell>& literal_pool,
                                     int max_total_tokens) {
  PrefixState st(table, literal_pool);
  for (const Token& t : prefix) {
    if (!st.advance(t, max_total_tokens)) return {};
  }
  return st.valid_next(max_total_tokens);
}

bool check_program(const Program& p, const Table& table,
                   const std::vector<Cell>& literal_pool, std::string* why,
                   int max_total_tokens) {
  PrefixState st(table, literal_pool);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!st.advance(p[i], max_total_tokens)) {
      if (why) {
        *why = "token " + std::to_string(i) + " (" + render_token(p[i]) +
               ") not valid at its prefix";
      }
      return false;
    }
  }
  if (!st.complete()) {
    if (why) *why = "program does not end with <EOS>";
    return false;
  }
  return true;
}

}  // namespace mapo
