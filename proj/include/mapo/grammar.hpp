#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mapo/tokens.hpp"

namespace mapo {

// Static kind of an expression result, tracked per bound variable. Row and
// row-list results share one kind: Appendix-style programs feed filter
// results straight into single-row functions, so the split is dynamic
// (singleton lists coerce, others fail at run time without a TypeError).
enum class BindKind { Rows, Cells, Num, DateScalar, Str };

enum class ArgSlot {
  RowsArg,      // all_rows or a Rows-kind variable
  NumDateCol,   // argmax / argmin column
  NumCol,       // arithmetic column
  StrCol,       // filter_in / filter_!in column
  AnyCol,       // hop / mode / same_as column
  CmpLit,       // number-or-date literal; fixes the kind of the CmpCol after it
  CmpCol,       // column whose kind must match the preceding CmpLit
  StrLit,       // string literal
};

struct FunctionSig {
  FunctionId id;
  int arity;
  ArgSlot slots[3];
};

const FunctionSig& function_sig(FunctionId f);

// Incremental typing state over a program prefix. Drives token validation,
// the next-token oracle, sampling, beam search and enumeration.
class PrefixState {
 public:
  // literal_pool: constants the grammar may draw literal tokens from.
  PrefixState(const Table& table, const std::vector<Cell>& literal_pool);

  // Feeds one token. Returns false (state unchanged) if the token is not in
  // the current valid set under `max_total_tokens` (pass 0 for unbounded).
  bool advance(const Token& t, int max_total_tokens = 0);

  // Exactly the tokens that extend this prefix to at least one well-typed
  // complete program, optionally within a total-length budget. Sorted by
  // canonical rendering. Empty only for length-capped dead ends, which the
  // budget logic prevents when every token came through advance().
  std::vector<Token> valid_next(int max_total_tokens = 0) const;

  bool complete() const { return complete_; }
  int tokens_consumed() const { return pos_; }
  // Minimum tokens still needed to reach a complete program.
  int min_tokens_to_complete() const;

  int num_expressions() const { return static_cast<int>(bindings_.size()); }
  const std::vector<BindKind>& bindings() const { return bindings_; }

 private:
  enum class Phase { Boundary, ExpectFunc, ExpectArg, ExpectClose, Done };

  bool token_valid(const Token& t, int max_total_tokens) const;
  bool function_startable(FunctionId f, int remaining) const;
  bool slot_accepts(ArgSlot slot, const Token& t) const;
  void collect_slot_tokens(ArgSlot slot, std::vector<Token>& out) const;
  BindKind result_kind() const;  // of the expression being closed

  const Table* table_;
  const std::vector<Cell>* pool_;
  Phase phase_ = Phase::Boundary;
  std::vector<BindKind> bindings_;
  FunctionId cur_func_ = FunctionId::Hop;
  int args_filled_ = 0;
  std::optional<ColumnKind> pending_cmp_kind_;  // set by CmpLit
  std::optional<ColumnKind> last_col_kind_;     // for mode's result kind
  int pos_ = 0;
  bool complete_ = false;
};

// Convenience wrapper matching the operation-level signature.
std::vector<Token> valid_next_tokens(const Program& prefix, const Table& table,
                                     const std::vector<Cell>& literal_pool,
                                     int max_total_tokens = 0);

// Validates a whole program against the grammar (every token inside its
// prefix's valid set). Returns false with a message instead of throwing.
bool check_program(const Program& p, const Table& table,
                   const std::vector<Cell>& literal_pool, std::string* why = nullptr,
                   int max_total_tokens = 0);

}  // namespace mapo
