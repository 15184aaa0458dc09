#pragma once

// Shared test fixtures: the five-row running-results table, tiny enumerable
// tables, and helpers for building examples and random policies.

#include <string>
#include <vector>

#include "mapo/dataset.hpp"
#include "mapo/enumerate.hpp"
#include "mapo/policy.hpp"

namespace mapo::testsupport {

// Year / Venue / Position / Event / Time, five rows.
inline Table olympics_table() {
  Table t;
  t.name = "t_olympics";
  t.columns = {{"year", "Year", ColumnKind::Number},
               {"venue", "Venue", ColumnKind::String},
               {"position", "Position", ColumnKind::String},
               {"event", "Event", ColumnKind::String},
               {"time", "Time", ColumnKind::Number}};
  auto row = [&](double y, const char* v, const char* p, const char* e, double ti) {
    t.rows.push_back(
        {Cell(y), Cell(std::string(v)), Cell(std::string(p)), Cell(std::string(e)), Cell(ti)});
  };
  row(2001, "Hungary", "2nd", "400m", 47.12);
  row(2003, "Finland", "1st", "400m", 46.69);
  row(2005, "Germany", "11th", "400m", 46.62);
  row(2007, "Thailand", "1st", "relay", 182.05);
  row(2008, "China", "7th", "relay", 180.32);
  t.validate();
  return t;
}

inline Example make_example(const Table& table, const std::string& question,
                            std::vector<std::string> answer, const std::string& id = "ex0",
                            std::vector<std::string> pos_tags = {}) {
  Example ex;
  ex.id = id;
  std::string word;
  for (char c : question + " ") {
    if (c == ' ') {
      if (!word.empty()) ex.question_tokens.push_back(word);
      word.clear();
    } else {
      word.push_back(c);
    }
  }
  ex.pos_tags = std::move(pos_tags);
  ex.table_ref = table.name;
  ex.answer = std::move(answer);
  ex.table = &table;
  finalize_example(ex);
  return ex;
}

// One number column, n rows; a small enumerable program space.
inline Table tiny_table(int n_rows = 2) {
  Table t;
  t.name = "t_tiny";
  t.columns = {{"score", "score", ColumnKind::Number}};
  for (int r = 0; r < n_rows; ++r) {
    t.rows.push_back({Cell(static_cast<double>(r + 1))});
  }
  t.validate();
  return t;
}

// Two columns (string + number), for slightly larger spaces.
inline Table small_table() {
  Table t;
  t.name = "t_small";
  t.columns = {{"team", "team", ColumnKind::String}, {"score", "score", ColumnKind::Number}};
  t.rows.push_back({Cell(std::string("alpha")), Cell(3.0)});
  t.rows.push_back({Cell(std::string("beta")), Cell(1.0)});
  t.rows.push_back({Cell(std::string("gamma")), Cell(2.0)});
  t.validate();
  return t;
}

// Gives every feature reachable in the example's program space (up to
// max_tokens) a normal weight, so log probs are nontrivial.
inline Policy random_policy(const Example& ex, int max_tokens, Rng& rng, double sigma = 1.0) {
  Policy policy;
  policy.config.max_decode_tokens = max_tokens;
  for (const EnumeratedProgram& ep : enumerate_programs(ex, max_tokens)) {
    SparseVec g = grad_log_prob(policy, ex, ep.program);
    for (const auto& [id, v] : g.sorted_items()) {
      if (policy.params.get(id) == 0.0) {
        policy.params.set(id, sigma * rng.normal());
      }
    }
  }
  return policy;
}

// Small-space probability table: program rendering -> exact probability.
inline std::vector<std::pair<Program, double>> exact_distribution(const Policy& policy,
                                                                  const Example& ex,
                                                                  int max_tokens) {
  std::vector<std::pair<Program, double>> out;
  for (const EnumeratedProgram& ep : enumerate_programs(ex, max_tokens)) {
    out.emplace_back(ep.program, std::exp(log_prob(policy, ex, ep.program)));
  }
  return out;
}

}  // namespace mapo::testsupport
