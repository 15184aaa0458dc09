#include "mapo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mapo/interpreter.hpp"

namespace mapo {

using nlohmann::json;

std::vector<Cell> extract_literals(const std::vector<std::string>& question_tokens,
                                   const Table& table) {
  std::vector<Cell> pool;
  auto add_unique = [&](const Cell& c) {
    for (const Cell& existing : pool) {
      if (existing == c) return;
    }
    pool.push_back(c);
  };

  // all folded cell strings of the table
  std::vector<std::string> cell_strings;
  for (const auto& row : table.rows) {
    for (const auto& cell : row) {
      if (cell && std::holds_alternative<std::string>(*cell)) {
        cell_strings.push_back(fold_string(std::get<std::string>(*cell)));
      }
    }
  }

  const int n = static_cast<int>(question_tokens.size());
  std::vector<bool> claimed(n, false);
  const int max_ngram = 5;
  for (int len = std::min(max_ngram, n); len >= 1; --len) {
    for (int start = 0; start + len <= n; ++start) {
      bool overlaps = false;
      for (int i = start; i < start + len; ++i) overlaps |= claimed[i];
      if (overlaps) continue;
      std::string phrase;
      for (int i = start; i < start + len; ++i) {
        if (i > start) phrase.push_back(' ');
        phrase += fold_string(question_tokens[i]);
      }
      if (std::find(cell_strings.begin(), cell_strings.end(), phrase) != cell_strings.end()) {
        add_unique(Cell(phrase));
        for (int i = start; i < start + len; ++i) claimed[i] = true;
      }
    }
  }

  bool has_date_col = table.has_column_of_kind(ColumnKind::Date);
  for (const std::string& raw : question_tokens) {
    std::string tok = fold_string(raw);
    Date d;
    if (parse_date_string(tok, d)) {
      add_unique(Cell(d));
      continue;
    }
    double num = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), num);
    if (ec == std::errc() && ptr == tok.data() + tok.size()) {
      add_unique(Cell(num));
      // a plausible year doubles as a date when the table can use one
      if (has_date_col && num >= 1000 && num <= 2999 && num == std::nearbyint(num)) {
        add_unique(Cell(Date{static_cast<int>(num), -1, -1}));
      }
    }
  }
  return pool;
}

static std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Dataset load_dataset(const std::string& dataset_path, const std::string& tables_path) {
  Dataset ds;
  ds.tables = std::make_shared<std::unordered_map<std::string, Table>>();

  std::ifstream in(dataset_path);
  if (!in) throw DatasetError("cannot open dataset: " + dataset_path);

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DatasetError(dataset_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Example ex;
    try {
      ex.id = j.at("id").get<std::string>();
      ex.question_tokens = split_words(j.at("question").get<std::string>());
      ex.table_ref = j.at("table_ref").get<std::string>();
      ex.answer = j.at("answer").get<std::vector<std::string>>();
      if (j.contains("pos_tags")) {
        ex.pos_tags = j["pos_tags"].get<std::vector<std::string>>();
      }
    } catch (const json::exception& e) {
      throw DatasetError(dataset_path + ":" + std::to_string(line_no) + ": " + e.what());
    }

    if (!ds.tables->count(ex.table_ref)) {
      std::filesystem::path tp = std::filesystem::path(tables_path) / (ex.table_ref + ".json");
      if (!std::filesystem::exists(tp)) throw MissingTable(ex.table_ref);
      ds.tables->emplace(ex.table_ref, load_table_file(tp.string()));
    }
    ds.examples.push_back(std::move(ex));
  }

  for (Example& ex : ds.examples) {
    ex.table = &ds.tables->at(ex.table_ref);
    finalize_example(ex);
  }
  return ds;
}

void finalize_example(Example& ex) {
  ex.literal_pool = extract_literals(ex.question_tokens, *ex.table);
  ex.folded_tokens.clear();
  ex.folded_tokens.reserve(ex.question_tokens.size());
  for (const std::string& t : ex.question_tokens) ex.folded_tokens.push_back(fold_string(t));
  ex.column_overlap.assign(ex.table->columns.size(), 0);
  for (std::size_t c = 0; c < ex.table->columns.size(); ++c) {
    std::istringstream words(ex.table->columns[c].display_name);
    std::string w;
    int count = 0;
    while (words >> w) {
      std::string folded = fold_string(w);
      for (const std::string& q : ex.folded_tokens) {
        if (q == folded) {
          ++count;
          break;
        }
      }
    }
    ex.column_overlap[c] = count;
  }
}

int reward(const Program& program, const Example& example) {
  Value v = execute(program, *example.table);
  return answer_match(v, example.answer) ? 1 : 0;
}

}  // namespace mapo
