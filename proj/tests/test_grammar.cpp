#include <doctest.h>

#include <algorithm>
#include <set>

#include "mapo/grammar.hpp"
#include "mapo/interpreter.hpp"
#include "support/fixtures.hpp"
#include "support/reference_checker.hpp"

using namespace mapo;
using namespace mapo::testsupport;

namespace {

std::set<std::string> render_set(const std::vector<Token>& tokens) {
  std::set<std::string> out;
  for (const Token& t : tokens) out.insert(render_token(t));
  return out;
}

}  // namespace

TEST_CASE("after '(' every startable function is offered") {
  Table t = olympics_table();
  std::vector<Cell> pool = {Cell(std::string("1st")), Cell(2.0)};
  auto valid = valid_next_tokens(parse_prefix("("), t, pool);
  auto names = render_set(valid);
  // every function is startable here: the table has both kinds of columns
  // and the pool has both a string and a number literal
  CHECK(names.size() == static_cast<std::size_t>(kNumFunctions));
  CHECK(names.count("argmax"));
  CHECK(names.count("filter_in"));
  CHECK(names.count("diff"));
}

TEST_CASE("functions needing unavailable literals are not startable") {
  Table t = olympics_table();
  std::vector<Cell> no_literals;
  auto names = render_set(valid_next_tokens(parse_prefix("("), t, no_literals));
  CHECK_FALSE(names.count("filter_in"));
  CHECK_FALSE(names.count("filter_>="));
  CHECK(names.count("count"));
  CHECK(names.count("argmax"));

  std::vector<Cell> only_string = {Cell(std::string("relay"))};
  names = render_set(valid_next_tokens(parse_prefix("("), t, only_string));
  CHECK(names.count("filter_in"));
  CHECK_FALSE(names.count("filter_<"));
}

TEST_CASE("argmax offers exactly the number and date columns") {
  Table t = olympics_table();
  std::vector<Cell> pool;
  auto names = render_set(valid_next_tokens(parse_prefix("(argmax all_rows"), t, pool));
  CHECK(names == std::set<std::string>{"r.time-num", "r.year-num"});
}

TEST_CASE("comparison literal fixes the column kind that follows") {
  Table t;
  t.name = "t_mixed";
  t.columns = {{"won", "won", ColumnKind::Number}, {"held", "held", ColumnKind::Date}};
  t.rows.push_back({Cell(2.0), Cell(Date{2007, 1, 1})});
  t.validate();
  std::vector<Cell> pool = {Cell(2.0), Cell(Date{2007, -1, -1})};
  auto names = render_set(valid_next_tokens(parse_prefix("(filter_= all_rows [2]"), t, pool));
  CHECK(names == std::set<std::string>{"r.won-num"});
  names = render_set(valid_next_tokens(parse_prefix("(filter_= all_rows [2007-xx-xx]"), t, pool));
  CHECK(names == std::set<std::string>{"r.held-date"});
}

TEST_CASE("expression boundary offers a new expression plus EOS") {
  Table t = olympics_table();
  std::vector<Cell> pool;
  auto names = render_set(valid_next_tokens(parse_prefix("(count all_rows)"), t, pool));
  CHECK(names == std::set<std::string>{"(", "<EOS>"});
  // at the very start there is nothing to end
  names = render_set(valid_next_tokens({}, t, pool));
  CHECK(names == std::set<std::string>{"("});
}

TEST_CASE("only row-kind bindings are offered to row slots") {
  Table t = olympics_table();
  std::vector<Cell> pool;
  // v0 binds a number (count), v1 binds rows (argmax)
  Program prefix = parse_prefix("(count all_rows)(argmax all_rows r.time-num)(first");
  auto names = render_set(valid_next_tokens(prefix, t, pool));
  CHECK(names == std::set<std::string>{"all_rows", "v1"});
}

TEST_CASE("length budget forces EOS when nothing else can finish") {
  Table t = olympics_table();
  std::vector<Cell> pool;
  Program prefix = parse_program("(count all_rows)");
  // 4 tokens used; budget 9 leaves room for "(count all_rows)" again + EOS
  auto names = render_set(valid_next_tokens(prefix, t, pool, 9));
  CHECK(names == std::set<std::string>{"(", "<EOS>"});
  // budget 8 cannot fit another expression
  names = render_set(valid_next_tokens(prefix, t, pool, 8));
  CHECK(names == std::set<std::string>{"<EOS>"});
  // and with the budget exactly consumed nothing at all fits
  names = render_set(valid_next_tokens(prefix, t, pool, 4));
  CHECK(names.empty());
}

TEST_CASE("budget excludes functions whose arity cannot fit") {
  Table t = olympics_table();
  std::vector<Cell> pool = {Cell(std::string("1st"))};
  // budget 5: only "(" + unary + arg + ")" + EOS fits
  auto names = render_set(valid_next_tokens(parse_prefix("("), t, pool, 5));
  CHECK(names == std::set<std::string>{"count", "first", "last", "next", "previous"});
  // budget 6 admits the binary functions as well
  names = render_set(valid_next_tokens(parse_prefix("("), t, pool, 6));
  CHECK(names.count("hop"));
  CHECK(names.count("argmax"));
  CHECK_FALSE(names.count("diff"));
  CHECK_FALSE(names.count("filter_in"));
}

TEST_CASE("dead-end prefixes return an empty set, not an error") {
  Table t = olympics_table();
  std::vector<Cell> pool;
  CHECK(valid_next_tokens(parse_prefix("(count"), t, pool, 3).empty());
}

TEST_CASE("check_program accepts the golden programs and rejects junk") {
  Table t = olympics_table();
  std::vector<Cell> pool = {Cell(std::string("1st"))};
  CHECK(check_program(
      parse_program(
          "(filter_in all_rows ['1st'] r.position-str) (last v0) (hop v1 r.venue-str) <EOS>"),
      t, pool));
  std::string why;
  // unbound variable
  CHECK_FALSE(check_program(parse_program("(count v0) <EOS>"), t, pool, &why));
  // literal not in the pool
  CHECK_FALSE(
      check_program(parse_program("(filter_in all_rows ['2nd'] r.position-str) <EOS>"), t, pool));
  // string column where a number column is required
  CHECK_FALSE(check_program(parse_program("(sum all_rows r.venue-str) <EOS>"), t, pool));
  // number-kind binding fed to a rows slot
  CHECK_FALSE(check_program(parse_program("(count all_rows)(first v0) <EOS>"), t, pool));
  // EOS with no expressions
  CHECK_FALSE(check_program(parse_program("<EOS>"), t, pool));
}

TEST_CASE("oracle-guided enumeration equals brute force + independent checker") {
  Table t;
  t.name = "t_three";
  t.columns = {{"team", "team", ColumnKind::String},
               {"score", "score", ColumnKind::Number},
               {"held", "held", ColumnKind::Date}};
  t.rows.push_back({Cell(std::string("alpha")), Cell(3.0), Cell(Date{2001, 2, 3})});
  t.rows.push_back({Cell(std::string("beta")), Cell(1.0), Cell(Date{2005, 6, 7})});
  t.validate();
  Example ex = make_example(t, "score 3 for alpha", {"3"}, "enum0");
  REQUIRE(!ex.literal_pool.empty());

  const int max_len = 8;
  std::set<std::string> oracle_set;
  for (const EnumeratedProgram& ep : enumerate_programs(ex, max_len)) {
    oracle_set.insert(render_program(ep.program));
  }

  std::set<std::string> reference_set;
  for (const Program& p : brute_force_programs(t, ex.literal_pool, max_len)) {
    if (reference_check(p, t, ex.literal_pool)) reference_set.insert(render_program(p));
  }

  CHECK(oracle_set.size() == reference_set.size());
  CHECK(oracle_set == reference_set);
  CHECK(oracle_set.size() > 10);  // sanity: the space is not trivial
}

TEST_CASE("soundness: oracle-accepted programs never hit a TypeError") {
  Table t = small_table();
  Example ex = make_example(t, "score of at least 2 for alpha", {"2"}, "sound0");
  for (const EnumeratedProgram& ep : enumerate_programs(ex, 11)) {
    Value v = execute(ep.program, t);
    const EvalError* e = v.as_error();
    if (e) {
      CAPTURE(render_program(ep.program));
      CHECK(e->code != ErrorCode::TypeError);
    }
  }
}

TEST_CASE("enumeration is lexicographic and duplicate-free") {
  Table t = tiny_table();
  Example ex = make_example(t, "plain question", {"1"}, "lex0");
  auto programs = enumerate_programs(ex, 9);
  std::vector<std::string> renders;
  for (const auto& ep : programs) renders.push_back(render_program(ep.program));
  CHECK(std::is_sorted(renders.begin(), renders.end()));
  CHECK(std::adjacent_find(renders.begin(), renders.end()) == renders.end());
}
