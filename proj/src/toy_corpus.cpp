#include "mapo/toy_corpus.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mapo/dataset.hpp"
#include "mapo/interpreter.hpp"
#include "mapo/rng.hpp"
#include "mapo/table.hpp"
#include "mapo/tokens.hpp"

namespace mapo {

using nlohmann::json;

namespace {

// cell words: pairwise distinct, none a substring of another (filter_in uses
// containment)
const std::vector<std::string> kWords = {
    "amber",  "basil",  "cedar",  "denim",  "ember",  "fjord",  "garnet", "hazel",
    "indigo", "jasper", "khaki",  "lunar",  "maple",  "nickel", "ochre",  "pearl",
    "quartz", "russet", "sienna", "topaz",  "umber",  "velvet", "walnut", "zephyr"};

const std::vector<std::string> kStrCols = {"player", "team", "nation", "city", "venue", "item"};
const std::vector<std::string> kNumCols = {"points", "score", "goals", "wins", "laps", "medals"};
const std::vector<std::string> kDateCols = {"founded", "held"};

std::vector<int> sample_distinct(Rng& rng, int count, int lo, int hi) {
  std::vector<int> universe;
  for (int v = lo; v <= hi; ++v) universe.push_back(v);
  rng.shuffle(universe);
  universe.resize(count);
  return universe;
}

Table make_table(Rng& rng, int index) {
  Table t;
  t.name = "t" + std::to_string(index);
  int n_rows = rng.int_in(6, 10);

  std::vector<std::string> strs = kStrCols;
  std::vector<std::string> nums = kNumCols;
  rng.shuffle(strs);
  rng.shuffle(nums);

  int n_extra = rng.int_in(0, 2);            // on top of the str+num+num skeleton
  bool with_date = rng.uniform01() < 0.4;    // date column exercises date code paths

  t.columns.push_back({strs[0], strs[0], ColumnKind::String});
  t.columns.push_back({nums[0], nums[0], ColumnKind::Number});
  t.columns.push_back({nums[1], nums[1], ColumnKind::Number});
  int extra_str = 0, extra_num = 0;
  for (int i = 0; i < n_extra; ++i) {
    if (with_date && i == 0) {
      t.columns.push_back({kDateCols[rng.below(kDateCols.size())],
                           kDateCols[0], ColumnKind::Date});
      t.columns.back().display_name = t.columns.back().id;
    } else if (rng.uniform01() < 0.5 && extra_str < 1) {
      t.columns.push_back({strs[1 + extra_str], strs[1 + extra_str], ColumnKind::String});
      ++extra_str;
    } else if (extra_num < 1) {
      t.columns.push_back({nums[2 + extra_num], nums[2 + extra_num], ColumnKind::Number});
      ++extra_num;
    }
  }

  t.rows.resize(n_rows);
  for (const Column& col : t.columns) {
    switch (col.kind) {
      case ColumnKind::String: {
        std::vector<std::string> words = kWords;
        rng.shuffle(words);
        for (int r = 0; r < n_rows; ++r) t.rows[r].push_back(Cell(words[r]));
        break;
      }
      case ColumnKind::Number: {
        std::vector<int> vals = sample_distinct(rng, n_rows, 1, 99);
        for (int r = 0; r < n_rows; ++r) {
          t.rows[r].push_back(Cell(static_cast<double>(vals[r])));
        }
        break;
      }
      case ColumnKind::Date: {
        std::vector<int> years = sample_distinct(rng, n_rows, 1960, 2020);
        for (int r = 0; r < n_rows; ++r) {
          t.rows[r].push_back(Cell(Date{years[r], rng.int_in(1, 12), rng.int_in(1, 28)}));
        }
        break;
      }
    }
  }
  t.validate();
  return t;
}

struct QuestionDraft {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // JJS/JJR where the template uses them, else NN
  std::string gold;               // rendered gold program

  void say(const std::string& word, const std::string& tag = "NN") {
    tokens.push_back(word);
    tags.push_back(tag);
  }
};

std::vector<int> columns_of_kind(const Table& t, ColumnKind k) {
  std::vector<int> out;
  for (int i = 0; i < t.num_columns(); ++i) {
    if (t.columns[i].kind == k) out.push_back(i);
  }
  return out;
}

std::string col_token(const Table& t, int c) {
  return "r." + t.columns[c].id + "-" + column_kind_suffix(t.columns[c].kind);
}

// category 0: superlative over a number or date column
QuestionDraft superlative(Rng& rng, const Table& t) {
  QuestionDraft q;
  auto strs = columns_of_kind(t, ColumnKind::String);
  auto nums = columns_of_kind(t, ColumnKind::Number);
  auto dates = columns_of_kind(t, ColumnKind::Date);
  int sc = strs[rng.below(strs.size())];
  bool use_date = !dates.empty() && rng.uniform01() < 0.5;
  int vc = use_date ? dates[rng.below(dates.size())] : nums[rng.below(nums.size())];
  bool take_max = rng.uniform01() < 0.5;
  q.say("which");
  q.say(t.columns[sc].id);
  q.say("had");
  q.say("the");
  if (use_date) {
    q.say(take_max ? "latest" : "earliest", "JJS");
  } else {
    q.say(take_max ? "largest" : "smallest", "JJS");
  }
  q.say(t.columns[vc].id);
  q.gold = "(" + std::string(take_max ? "argmax" : "argmin") + " all_rows " + col_token(t, vc) +
           ")(hop v0 " + col_token(t, sc) + ") <EOS>";
  return q;
}

// category 1: difference between the last and first entries.
// Worded around "difference" alone: extra triggers like "how many more"
// would open count and the comparison filters and bury random exploration.
QuestionDraft difference(Rng& rng, const Table& t) {
  QuestionDraft q;
  auto nums = columns_of_kind(t, ColumnKind::Number);
  int vc = nums[rng.below(nums.size())];
  q.say("what");
  q.say("is");
  q.say("the");
  q.say("difference");
  q.say("in");
  q.say(t.columns[vc].id);
  q.say("between");
  q.say("the");
  q.say("last");
  q.say("entry");
  q.say("and");
  q.say("the");
  q.say("first");
  q.gold = "(last all_rows)(first all_rows)(diff v0 v1 " + col_token(t, vc) + ") <EOS>";
  return q;
}

// category 2: before / after in table order
QuestionDraft before_after(Rng& rng, const Table& t) {
  QuestionDraft q;
  auto strs = columns_of_kind(t, ColumnKind::String);
  int sc = strs[rng.below(strs.size())];
  q.say("which");
  q.say(t.columns[sc].id);
  q.say("comes");
  q.say("just");
  q.say("before");
  q.say("the");
  q.say("last");
  q.say("entry");
  q.gold = "(last all_rows)(previous v0)(hop v1 " + col_token(t, sc) + ") <EOS>";
  return q;
}

// category 3: compare & count with an explicit threshold
QuestionDraft compare_count(Rng& rng, const Table& t) {
  QuestionDraft q;
  auto nums = columns_of_kind(t, ColumnKind::Number);
  int vc = nums[rng.below(nums.size())];
  // threshold strictly above the column minimum keeps the count in [1, n-1]
  double min_val = 1e18;
  for (int r = 0; r < t.num_rows(); ++r) {
    min_val = std::min(min_val, std::get<double>(*t.cell(r, vc)));
  }
  std::vector<double> candidates;
  for (int r = 0; r < t.num_rows(); ++r) {
    double v = std::get<double>(*t.cell(r, vc));
    if (v > min_val) candidates.push_back(v);
  }
  double threshold = candidates[rng.below(candidates.size())];
  q.say("how");
  q.say("many");
  q.say("entries");
  q.say("had");
  q.say(t.columns[vc].id);
  q.say("of");
  q.say("at");
  q.say("least");
  q.say(canonical_number(threshold));
  q.gold = "(filter_>= all_rows [" + canonical_number(threshold) + "] " + col_token(t, vc) +
           ")(count v0) <EOS>";
  return q;
}

// category 4: exclusion
QuestionDraft exclusion(Rng& rng, const Table& t) {
  QuestionDraft q;
  auto strs = columns_of_kind(t, ColumnKind::String);
  int sc = strs[rng.below(strs.size())];
  int row = rng.int_in(0, t.num_rows() - 1);
  std::string anchor = std::get<std::string>(*t.cell(row, sc));
  q.say("other");
  q.say("than");
  q.say(anchor);
  q.say("which");
  q.say(t.columns[sc].id);
  q.say("values");
  q.say("are");
  q.say("listed");
  q.gold = "(filter_!in all_rows ['" + anchor + "'] " + col_token(t, sc) + ")(hop v0 " +
           col_token(t, sc) + ") <EOS>";
  return q;
}

QuestionDraft make_question(Rng& rng, const Table& t, int category) {
  switch (category % 5) {
    case 0: return superlative(rng, t);
    case 1: return difference(rng, t);
    case 2: return before_after(rng, t);
    case 3: return compare_count(rng, t);
    default: return exclusion(rng, t);
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(' ');
    out += v[i];
  }
  return out;
}

}  // namespace

CorpusSummary make_toy_corpus(std::uint64_t seed, int n_tables, int n_questions_per_table,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "tables");

  RngStreams streams(seed);
  CorpusSummary summary;
  summary.n_tables = n_tables;

  std::ofstream train(fs::path(out_dir) / "train.jsonl");
  std::ofstream dev(fs::path(out_dir) / "dev.jsonl");
  std::ofstream gold(fs::path(out_dir) / "gold.jsonl");
  if (!train || !dev || !gold) throw std::runtime_error("cannot write corpus to " + out_dir);

  int n_train_tables = n_tables - std::max(1, n_tables / 5);
  if (n_tables <= 1) n_train_tables = n_tables;

  for (int ti = 0; ti < n_tables; ++ti) {
    Rng rng = streams.stream("corpus/table/" + std::to_string(ti));
    Table table = make_table(rng, ti);
    save_table_file(table, (fs::path(out_dir) / "tables" / (table.name + ".json")).string());

    bool is_dev = ti >= n_train_tables;
    for (int qi = 0; qi < n_questions_per_table; ++qi) {
      QuestionDraft q = make_question(rng, table, qi);
      Program gold_prog = parse_program(q.gold);
      Value result = execute(gold_prog, table);
      auto answer = value_answer_strings(result);
      if (!answer || answer->empty()) {
        throw std::runtime_error("toy corpus: gold program has no denotation for " +
                                 table.name + " q" + std::to_string(qi));
      }
      if (!answer_match(result, *answer)) {
        throw std::runtime_error("toy corpus: self-check failed");
      }

      json line;
      line["id"] = "q_" + table.name + "_" + std::to_string(qi);
      line["question"] = join(q.tokens);
      line["pos_tags"] = q.tags;
      line["table_ref"] = table.name;
      line["answer"] = *answer;
      (is_dev ? dev : train) << line.dump() << "\n";

      json gline;
      gline["id"] = line["id"];
      gline["gold_program"] = render_program(gold_prog);
      gold << gline.dump() << "\n";

      if (is_dev) {
        ++summary.n_dev;
      } else {
        ++summary.n_train;
      }
    }
  }

  json meta;
  meta["seed"] = seed;
  meta["n_tables"] = n_tables;
  meta["n_questions_per_table"] = n_questions_per_table;
  meta["n_train"] = summary.n_train;
  meta["n_dev"] = summary.n_dev;
  std::ofstream meta_out(fs::path(out_dir) / "meta.json");
  meta_out << meta.dump(2) << "\n";
  return summary;
}

}  // namespace mapo
