#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mapo/value.hpp"

namespace mapo {

enum class ColumnKind { Number, Date, String };

const char* column_kind_name(ColumnKind k);    // "number" / "date" / "string"
const char* column_kind_suffix(ColumnKind k);  // "num" / "date" / "str"

struct Column {
  std::string id;            // token-safe identifier, unique within a table
  std::string display_name;  // human-readable name (may contain spaces)
  ColumnKind kind;
};

// Typed relation. Row order is meaningful: previous/next and first/last are
// defined by it.
class Table {
 public:
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<std::optional<Cell>>> rows;  // rows[r][c]

  int num_rows() const { return static_cast<int>(rows.size()); }
  int num_columns() const { return static_cast<int>(columns.size()); }

  int column_index(const std::string& id) const;  // -1 if absent
  const std::optional<Cell>& cell(int row, int col) const { return rows[row][col]; }

  bool has_column_of_kind(ColumnKind k) const;
  RowList all_rows() const;

  // Throws std::runtime_error on structural violations (ragged rows,
  // duplicate column ids, cell kind mismatch, all-missing dates).
  void validate() const;
};

// JSON table file:
//   {"name": ..., "columns": [{"id","name","kind"}],
//    "rows": [[cell,...],...]}
// with cells as string / number / null or {"y":..,"m":..,"d":..}.
Table table_from_json(const std::string& text);
std::string table_to_json(const Table& t);

Table load_table_file(const std::string& path);
void save_table_file(const Table& t, const std::string& path);

}  // namespace mapo
