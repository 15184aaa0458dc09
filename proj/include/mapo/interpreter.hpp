#pragma once

#include <string>
#include <vector>

#include "mapo/table.hpp"
#include "mapo/tokens.hpp"

namespace mapo {

struct ExecOptions {
  int step_budget = 64;  // expression evaluations per program
};

// Evaluates a complete program on a table. Expressions bind v0, v1, ... in
// order; the last expression's value is returned. Never throws for program
// content: every failure comes back as Value::error.
Value execute(const Program& program, const Table& table, ExecOptions opts = {});

// Canonical string forms of a value for denotation comparison; empty optional
// for values that have no answer form (rows, errors).
std::optional<std::vector<std::string>> value_answer_strings(const Value& v);

// True iff the value's canonical strings equal the gold answer as multisets.
// Gold strings are folded the same way (numbers re-canonicalized, case and
// surrounding space ignored). Errors never match.
bool answer_match(const Value& v, const std::vector<std::string>& answer);

}  // namespace mapo
