#include <doctest.h>

#include <algorithm>

#include "mapo/interpreter.hpp"
#include "mapo/rng.hpp"
#include "support/fixtures.hpp"

using namespace mapo;
using namespace mapo::testsupport;

namespace {

Value run(const std::string& text, const Table& t) {
  return execute(parse_program(text), t);
}

bool is_error(const Value& v, ErrorCode code) {
  const EvalError* e = v.as_error();
  return e && e->code == code;
}

}  // namespace

TEST_CASE("canonical number printing drops trailing zeros") {
  CHECK(canonical_number(5.0) == "5");
  CHECK(canonical_number(46.69) == "46.69");
  CHECK(canonical_number(-3.0) == "-3");
  CHECK(canonical_number(0.5) == "0.5");
  CHECK(canonical_number(1e15) == "1e+15");
}

TEST_CASE("date comparison treats missing parts as wildcards") {
  Date full{2007, 7, 15};
  Date year_only{2007, -1, -1};
  Date later{2008, 1, 1};
  CHECK(date_cmp(full, year_only) == 0);
  CHECK(date_cmp(year_only, full) == 0);
  CHECK(date_cmp(full, later) < 0);
  CHECK(date_cmp(later, year_only) > 0);
  CHECK(date_cmp(Date{2007, 6, -1}, Date{2007, 7, -1}) < 0);
  CHECK_FALSE(Date{-1, -1, -1}.valid());
}

TEST_CASE("parse round-trips with render") {
  const std::string canonical =
      "(filter_in all_rows ['1st'] r.position-str) (last v0) (hop v1 r.venue-str) <EOS>";
  Program p = parse_program(canonical);
  CHECK(render_program(p) == canonical);
  CHECK(parse_program(render_program(p)) == p);

  // tokenization of the minimal program
  Program q = parse_program("(count all_rows) <EOS>");
  REQUIRE(q.size() == 5);
  CHECK(q[0].kind == TokenKind::Open);
  CHECK(q[1] == Token::function(FunctionId::Count));
  CHECK(q[2] == Token::all_rows());
  CHECK(q[3].kind == TokenKind::Close);
  CHECK(q[4].kind == TokenKind::Eos);
}

TEST_CASE("parse accepts unicode comparison spellings") {
  Program a = parse_program("(filter_\xe2\x89\xa5 all_rows [2] r.score-num)(count v0) <EOS>");
  Program b = parse_program("(filter_>= all_rows [2] r.score-num)(count v0) <EOS>");
  CHECK(a == b);
}

TEST_CASE("parse rejects malformed input") {
  CHECK_THROWS_AS(parse_program("((count"), ParseError);
  CHECK_THROWS_AS(parse_program(")"), ParseError);
  CHECK_THROWS_AS(parse_program("(frobnicate all_rows) <EOS>"), ParseError);
  CHECK_THROWS_AS(parse_program("(count all_rows ['oops) <EOS>"), ParseError);
  try {
    parse_program("((count");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.kind == ParseError::Kind::UnbalancedParens);
  }
}

TEST_CASE("literal parsing: numbers, dates, strings") {
  Program p = parse_prefix("[2] [-3.5] [2007-xx-xx] ['los angeles']");
  REQUIRE(p.size() == 4);
  CHECK(p[0].literal == Cell(2.0));
  CHECK(p[1].literal == Cell(-3.5));
  CHECK(p[2].literal == Cell(Date{2007, -1, -1}));
  CHECK(p[3].literal == Cell(std::string("los angeles")));
}

TEST_CASE("running-results golden: filter/last/hop answers Thailand") {
  Table t = olympics_table();
  Value v = run("(filter_in all_rows ['1st'] r.position-str)(last v0)(hop v1 r.venue-str) <EOS>", t);
  CHECK(answer_match(v, {"thailand"}));
  CHECK(answer_match(v, {"Thailand"}));
  CHECK_FALSE(answer_match(v, {"finland"}));
}

TEST_CASE("running-results golden: count all rows") {
  Table t = olympics_table();
  Value v = run("(count all_rows) <EOS>", t);
  CHECK(v == Value(5.0));
  CHECK(answer_match(v, {"5"}));
}

TEST_CASE("superlative pattern: argmax then hop") {
  Table t;
  t.name = "t_points";
  t.columns = {{"player", "player", ColumnKind::String},
               {"points", "points", ColumnKind::Number}};
  t.rows.push_back({Cell(std::string("ada")), Cell(10.0)});
  t.rows.push_back({Cell(std::string("grace")), Cell(31.0)});
  t.rows.push_back({Cell(std::string("edsger")), Cell(22.0)});
  t.validate();
  Value v = run("(argmax all_rows r.points-num)(hop v0 r.player-str) <EOS>", t);
  CHECK(answer_match(v, {"grace"}));
  Value w = run("(argmin all_rows r.points-num)(hop v0 r.player-str) <EOS>", t);
  CHECK(answer_match(w, {"ada"}));
}

TEST_CASE("difference pattern: two filters then diff") {
  Table t;
  t.name = "t_flights";
  t.columns = {{"city", "city", ColumnKind::String},
               {"passengers", "passengers", ColumnKind::Number}};
  t.rows.push_back({Cell(std::string("saskatoon")), Cell(350.0)});
  t.rows.push_back({Cell(std::string("los angeles")), Cell(900.0)});
  t.rows.push_back({Cell(std::string("toronto")), Cell(500.0)});
  t.validate();
  Value v = run(
      "(filter_in all_rows ['saskatoon'] r.city-str)"
      "(filter_in all_rows ['los angeles'] r.city-str)"
      "(diff v1 v0 r.passengers-num) <EOS>",
      t);
  CHECK(v == Value(550.0));
  CHECK(answer_match(v, {"550"}));
}

TEST_CASE("before/after pattern: filter, previous, hop") {
  Table t;
  t.name = "t_nations";
  t.columns = {{"nation", "nation", ColumnKind::String}};
  for (const char* n : {"chile", "bolivia", "peru", "ecuador"}) {
    t.rows.push_back({Cell(std::string(n))});
  }
  t.validate();
  Value v = run(
      "(filter_in all_rows ['peru'] r.nation-str)(previous v0)(hop v1 r.nation-str) <EOS>", t);
  CHECK(answer_match(v, {"bolivia"}));
  Value w = run(
      "(filter_in all_rows ['peru'] r.nation-str)(next v0)(hop v1 r.nation-str) <EOS>", t);
  CHECK(answer_match(w, {"ecuador"}));
}

TEST_CASE("compare & count pattern") {
  Table t;
  t.name = "t_games";
  t.columns = {{"score", "score", ColumnKind::Number}};
  for (double s : {1.0, 2.0, 3.0, 0.0}) t.rows.push_back({Cell(s)});
  t.validate();
  Value v = run("(filter_>= all_rows [2] r.score-num)(count v0) <EOS>", t);
  CHECK(v == Value(2.0));
}

TEST_CASE("exclusion pattern: filter_in then filter_!in then hop") {
  Table t;
  t.name = "t_people";
  t.columns = {{"name", "name", ColumnKind::String},
               {"hometown", "hometown", ColumnKind::String}};
  auto row = [&](const char* n, const char* h) {
    t.rows.push_back({Cell(std::string(n)), Cell(std::string(h))});
  };
  row("william stuart price", "tulsa");
  row("ada lovelace", "london");
  row("john zink", "tulsa");
  t.validate();
  Value v = run(
      "(filter_in all_rows ['tulsa'] r.hometown-str)"
      "(filter_!in v0 ['william stuart price'] r.name-str)"
      "(hop v1 r.name-str) <EOS>",
      t);
  CHECK(answer_match(v, {"john zink"}));
}

TEST_CASE("aggregates, mode, same_as, diff") {
  Table t = small_table();  // alpha/3, beta/1, gamma/2
  CHECK(run("(sum all_rows r.score-num) <EOS>", t) == Value(6.0));
  CHECK(run("(average all_rows r.score-num) <EOS>", t) == Value(2.0));
  CHECK(run("(max all_rows r.score-num) <EOS>", t) == Value(3.0));
  CHECK(run("(min all_rows r.score-num) <EOS>", t) == Value(1.0));

  Table m;
  m.name = "t_mode";
  m.columns = {{"color", "color", ColumnKind::String}};
  for (const char* c : {"red", "blue", "red", "green", "blue"}) {
    m.rows.push_back({Cell(std::string(c))});
  }
  m.validate();
  // red and blue tie at 2; red occurs first
  CHECK(answer_match(run("(mode all_rows r.color-str) <EOS>", m), {"red"}));

  Value same = run("(first all_rows)(same_as v0 r.color-str) <EOS>", m);
  CHECK(same == Value(RowList{{0, 2}}));

  Table d = small_table();
  CHECK(run("(first all_rows)(last all_rows)(diff v0 v1 r.score-num) <EOS>", d) == Value(1.0));
  CHECK(run("(first all_rows)(last all_rows)(diff v1 v0 r.score-num) <EOS>", d) == Value(-1.0));
}

TEST_CASE("runtime error paths") {
  Table t = olympics_table();
  // first of an empty row list
  CHECK(is_error(run("(filter_in all_rows ['nowhere'] r.venue-str)(first v0) <EOS>", t),
                 ErrorCode::EmptyInput));
  // previous of row 0
  CHECK(is_error(run("(first all_rows)(previous v0) <EOS>", t), ErrorCode::OutOfTable));
  // next of the last row
  CHECK(is_error(run("(last all_rows)(next v0) <EOS>", t), ErrorCode::OutOfTable));
  // several rows where one is required
  CHECK(is_error(run("(previous all_rows) <EOS>", t), ErrorCode::AmbiguousRows));
  // unknown column is a type error
  CHECK(is_error(run("(count all_rows)(hop all_rows r.missing-num) <EOS>", t),
                 ErrorCode::TypeError));
  // incomplete program
  CHECK(execute(parse_program("(count all_rows)"), t).is_error());
}

TEST_CASE("step budget guards pathological programs") {
  Table t = tiny_table();
  std::string text;
  for (int i = 0; i < 70; ++i) text += "(count all_rows)";
  text += " <EOS>";
  CHECK(is_error(execute(parse_program(text), t), ErrorCode::BudgetExceeded));
  CHECK_FALSE(execute(parse_program(text), t, ExecOptions{128}).is_error());
}

TEST_CASE("execution is deterministic") {
  Table t = olympics_table();
  Program p =
      parse_program("(argmax all_rows r.time-num)(hop v0 r.venue-str) <EOS>");
  Value a = execute(p, t);
  Value b = execute(p, t);
  CHECK(a == b);
}

TEST_CASE("answer matching canonicalization") {
  CHECK(answer_match(Value(5.0), {"5"}));
  CHECK(answer_match(Value(5.0), {"5.0"}));
  CHECK(answer_match(Value(std::string("  Thailand ")), {"thailand"}));
  CHECK_FALSE(answer_match(Value::error(ErrorCode::EmptyInput), {"0"}));
  // row values have no denotation
  CHECK_FALSE(answer_match(Value(RowIndex{0}), {"0"}));
  // lists compare as multisets
  CellList cells;
  cells.cells = {Cell(std::string("b")), Cell(std::string("a"))};
  CHECK(answer_match(Value(cells), {"a", "b"}));
  CHECK_FALSE(answer_match(Value(cells), {"a"}));
  // dates canonicalize to y-m-d
  CHECK(answer_match(Value(Date{2007, 7, 5}), {"2007-07-05"}));
}

TEST_CASE("property: filter_in and filter_!in partition the input rows") {
  Rng rng(99);
  Table t = olympics_table();
  std::vector<std::string> probes = {"1st", "relay", "xyz", "a", "", "Hungary", "400M"};
  for (const std::string& q : probes) {
    for (const char* col : {"venue", "position", "event"}) {
      Program in = parse_program("(filter_in all_rows ['" + q + "'] r." + col + "-str) <EOS>");
      Program out = parse_program("(filter_!in all_rows ['" + q + "'] r." + col + "-str) <EOS>");
      RowList a = std::get<RowList>(execute(in, t).v);
      RowList b = std::get<RowList>(execute(out, t).v);
      std::vector<int> merged = a.indices;
      merged.insert(merged.end(), b.indices.begin(), b.indices.end());
      std::sort(merged.begin(), merged.end());
      CHECK(merged == t.all_rows().indices);
    }
  }
}

TEST_CASE("property: argmax/argmin agree with sorting on tables without ties") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Table t;
    t.name = "t_rand";
    t.columns = {{"v", "v", ColumnKind::Number}};
    int n = rng.int_in(1, 8);
    std::vector<double> vals;
    for (int r = 0; r < n; ++r) {
      double v;
      do {
        v = static_cast<double>(rng.int_in(0, 1000));
      } while (std::find(vals.begin(), vals.end(), v) != vals.end());
      vals.push_back(v);
      t.rows.push_back({Cell(v)});
    }
    t.validate();
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    Value vmax = run("(argmax all_rows r.v-num) <EOS>", t);
    Value vmin = run("(argmin all_rows r.v-num) <EOS>", t);
    CHECK(vmax == Value(RowList{{order.back()}}));
    CHECK(vmin == Value(RowList{{order.front()}}));
  }
}

TEST_CASE("argmax returns every tied row") {
  Table t;
  t.name = "t_tie";
  t.columns = {{"v", "v", ColumnKind::Number}};
  for (double v : {3.0, 1.0, 3.0}) t.rows.push_back({Cell(v)});
  t.validate();
  CHECK(run("(argmax all_rows r.v-num) <EOS>", t) == Value(RowList{{0, 2}}));
}

TEST_CASE("empty cells are transparent to filters and aggregates") {
  Table t;
  t.name = "t_gaps";
  t.columns = {{"v", "v", ColumnKind::Number}, {"s", "s", ColumnKind::String}};
  t.rows.push_back({Cell(1.0), std::nullopt});
  t.rows.push_back({std::nullopt, Cell(std::string("x"))});
  t.rows.push_back({Cell(3.0), Cell(std::string("y"))});
  t.validate();
  CHECK(run("(sum all_rows r.v-num) <EOS>", t) == Value(4.0));
  CHECK(run("(filter_> all_rows [0] r.v-num)(count v0) <EOS>", t) == Value(2.0));
  // empty cells do not contain anything, so !in keeps them
  CHECK(run("(filter_!in all_rows ['x'] r.s-str) <EOS>", t) == Value(RowList{{0, 2}}));
  // hop skips empty cells
  Value h = run("(hop all_rows r.s-str) <EOS>", t);
  CHECK(std::get<CellList>(h.v).cells.size() == 2);
  // same_as with an empty probe cell returns no rows
  CHECK(run("(first all_rows)(same_as v0 r.s-str) <EOS>", t) == Value(RowList{}));
}
