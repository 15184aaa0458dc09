#include "mapo/table.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace mapo {

using nlohmann::json;

const char* column_kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::Number: return "number";
    case ColumnKind::Date: return "date";
    case ColumnKind::String: return "string";
  }
  return "?";
}

const char* column_kind_suffix(ColumnKind k) {
  switch (k) {
    case ColumnKind::Number: return "num";
    case ColumnKind::Date: return "date";
    case ColumnKind::String: return "str";
  }
  return "?";
}

static ColumnKind kind_from_name(const std::string& s) {
  if (s == "number") return ColumnKind::Number;
  if (s == "date") return ColumnKind::Date;
  if (s == "string") return ColumnKind::String;
  throw std::runtime_error("unknown column kind: " + s);
}

int Table::column_index(const std::string& id) const {
  for (int i = 0; i < num_columns(); ++i) {
    if (columns[i].id == id) return i;
  }
  return -1;
}

bool Table::has_column_of_kind(ColumnKind k) const {
  for (const auto& c : columns) {
    if (c.kind == k) return true;
  }
  return false;
}

RowList Table::all_rows() const {
  RowList r;
  r.indices.resize(rows.size());
  for (int i = 0; i < num_rows(); ++i) r.indices[i] = i;
  return r;
}

void Table::validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& c : columns) {
    if (!ids.insert(c.id).second) {
      throw std::runtime_error("table " + name + ": duplicate column id " + c.id);
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns.size()) {
      throw std::runtime_error("table " + name + ": row " + std::to_string(r) +
                               " has " + std::to_string(rows[r].size()) + " cells, want " +
                               std::to_string(columns.size()));
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& cell = rows[r][c];
      if (!cell) continue;
      bool ok = false;
      switch (columns[c].kind) {
        case ColumnKind::Number: ok = std::holds_alternative<double>(*cell); break;
        case ColumnKind::Date:
          ok = std::holds_alternative<Date>(*cell) && std::get<Date>(*cell).valid();
          break;
        case ColumnKind::String: ok = std::holds_alternative<std::string>(*cell); break;
      }
      if (!ok) {
        throw std::runtime_error("table " + name + ": cell (" + std::to_string(r) + "," +
                                 std::to_string(c) + ") does not match column kind");
      }
    }
  }
}

static json cell_to_json(const std::optional<Cell>& c) {
  if (!c) return nullptr;
  if (const double* d = std::get_if<double>(&*c)) return *d;
  if (const Date* d = std::get_if<Date>(&*c)) {
    json j = json::object();
    if (d->year >= 0) j["y"] = d->year;
    if (d->month >= 0) j["m"] = d->month;
    if (d->day >= 0) j["d"] = d->day;
    return j;
  }
  return std::get<std::string>(*c);
}

static std::optional<Cell> cell_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_number()) return Cell(j.get<double>());
  if (j.is_string()) return Cell(j.get<std::string>());
  if (j.is_object()) {
    Date d;
    if (j.contains("y")) d.year = j["y"].get<int>();
    if (j.contains("m")) d.month = j["m"].get<int>();
    if (j.contains("d")) d.day = j["d"].get<int>();
    return Cell(d);
  }
  throw std::runtime_error("bad cell value: " + j.dump());
}

Table table_from_json(const std::string& text) {
  json j = json::parse(text);
  Table t;
  t.name = j.at("name").get<std::string>();
  for (const auto& cj : j.at("columns")) {
    t.columns.push_back({cj.at("id").get<std::string>(), cj.at("name").get<std::string>(),
                         kind_from_name(cj.at("kind").get<std::string>())});
  }
  for (const auto& rj : j.at("rows")) {
    std::vector<std::optional<Cell>> row;
    for (const auto& cj : rj) row.push_back(cell_from_json(cj));
    t.rows.push_back(std::move(row));
  }
  t.validate();
  return t;
}

std::string table_to_json(const Table& t) {
  json j;
  j["name"] = t.name;
  j["columns"] = json::array();
  for (const auto& c : t.columns) {
    j["columns"].push_back({{"id", c.id}, {"name", c.display_name}, {"kind", column_kind_name(c.kind)}});
  }
  j["rows"] = json::array();
  for (const auto& row : t.rows) {
    json rj = json::array();
    for (const auto& cell : row) rj.push_back(cell_to_json(cell));
    j["rows"].push_back(rj);
  }
  return j.dump(2);
}

Table load_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return table_from_json(ss.str());
}

void save_table_file(const Table& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write table file: " + path);
  out << table_to_json(t) << "\n";
}

}  // namespace mapo
