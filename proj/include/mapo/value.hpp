#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mapo {

// Calendar date with optional parts (-1 = missing). A date with every part
// missing is not a legal value.
struct Date {
  int year = -1;
  int month = -1;
  int day = -1;

  bool valid() const { return year >= 0 || month >= 0 || day >= 0; }
  bool operator==(const Date& o) const {
    return year == o.year && month == o.month && day == o.day;
  }
};

// Ordering with missing parts acting as wildcards: fields compare equal when
// either side is missing. Returns -1 / 0 / +1.
int date_cmp(const Date& a, const Date& b);

// Scalar cell content: what a table cell (and a program literal) may hold.
using Cell = std::variant<double, Date, std::string>;

bool cell_eq(const Cell& a, const Cell& b);

// A row handle is an index into the owning table.
struct RowIndex {
  int index = 0;
  bool operator==(const RowIndex& o) const { return index == o.index; }
};

// Unique, ascending row indices.
struct RowList {
  std::vector<int> indices;
  bool operator==(const RowList& o) const { return indices == o.indices; }
};

struct CellList {
  std::vector<Cell> cells;
  bool operator==(const CellList& o) const;
};

enum class ErrorCode {
  TypeError,       // argument kind mismatch at runtime
  EmptyInput,      // e.g. first of an empty row list
  OutOfTable,      // previous of row 0 / next of the last row
  BudgetExceeded,  // evaluation step budget exhausted
  AmbiguousRows,   // several rows where a single row is required
};

const char* error_code_name(ErrorCode c);

struct EvalError {
  ErrorCode code;
  std::string message;
  bool operator==(const EvalError& o) const { return code == o.code; }
};

// The value lattice programs compute over.
struct Value {
  std::variant<double, Date, std::string, RowIndex, RowList, CellList, EvalError> v;

  Value() : v(0.0) {}
  Value(double d) : v(d) {}
  Value(Date d) : v(d) {}
  Value(std::string s) : v(std::move(s)) {}
  Value(RowIndex r) : v(r) {}
  Value(RowList r) : v(std::move(r)) {}
  Value(CellList c) : v(std::move(c)) {}
  Value(EvalError e) : v(std::move(e)) {}

  static Value error(ErrorCode code, std::string msg = {}) {
    return Value(EvalError{code, std::move(msg)});
  }

  bool is_error() const { return std::holds_alternative<EvalError>(v); }
  const EvalError* as_error() const { return std::get_if<EvalError>(&v); }
  bool operator==(const Value& o) const { return v == o.v; }
};

// Canonical printing: numbers without trailing zeros ("5", "46.69"),
// strings case-folded and trimmed, dates as y-m-d with "xx" for missing
// parts. Shared by answer matching and literal rendering.
std::string canonical_number(double d);
std::string fold_string(const std::string& s);  // trim + ASCII lowercase
std::string canonical_cell(const Cell& c);

// "y-m-d" with digit or xx/xxxx fields. Returns false if the text is not in
// that shape or every field is missing.
bool parse_date_string(const std::string& s, Date& out);

}  // namespace mapo
