#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mapo/table.hpp"
#include "mapo/tokens.hpp"

namespace mapo {

// One weakly supervised training instance: a question, the table it is
// asked against, and the gold denotation. No gold program.
struct Example {
  std::string id;
  std::vector<std::string> question_tokens;
  std::vector<std::string> pos_tags;  // aligned with question_tokens, may be empty
  std::string table_ref;
  std::vector<std::string> answer;
  std::vector<Cell> literal_pool;

  const Table* table = nullptr;  // resolved by the loader

  // derived fields, filled by finalize_example
  std::vector<std::string> folded_tokens;   // case-folded question tokens
  std::vector<int> column_overlap;          // per table column: name words in question
};

// Populates literal_pool and the derived fields from question_tokens and the
// resolved table. The loader calls this; tests building Examples by hand
// must call it too.
void finalize_example(Example& ex);

struct Dataset {
  std::vector<Example> examples;
  std::shared_ptr<std::unordered_map<std::string, Table>> tables;
};

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingTable : DatasetError {
  explicit MissingTable(const std::string& ref) : DatasetError("missing table: " + ref) {}
};

// Deterministic literal extraction from the question against its table:
// longest token n-grams equal to a full cell string (case-folded), plus
// numbers, plus dates (explicit y-m-d, and 4-digit integers when the table
// has a date column).
std::vector<Cell> extract_literals(const std::vector<std::string>& question_tokens,
                                   const Table& table);

// Loads a JSON-lines dataset ({"id","question","table_ref","answer":[...]}
// with optional "pos_tags") plus a directory of table JSON files named
// <table_ref>.json. Populates literal pools. Throws DatasetError /
// MissingTable / ParseError with the offending line number.
Dataset load_dataset(const std::string& dataset_path, const std::string& tables_path);

// Binary reward: 1 iff the program executes to the gold denotation.
// Execution errors yield 0.
int reward(const Program& program, const Example& example);

}  // namespace mapo
