#include <sstream>

#include "doctest.h"
#include "triejoin/query.hpp"
#include "triejoin/relation.hpp"

using namespace triejoin;

TEST_CASE("edge list parsing: comments, blanks, duplicates, order") {
  std::istringstream in("# header\n3 1\n\n1 2\n3 1\n  2\t4 \n");
  Relation r = load_edge_list(in, "E");
  REQUIRE(r.arity == 2);
  REQUIRE(r.tuple_count() == 3);  // duplicate (3,1) dropped
  CHECK(r.data == std::vector<uint32_t>{1, 2, 2, 4, 3, 1});
}

TEST_CASE("edge list undirected inserts both directions") {
  std::istringstream in("1 2\n2 1\n5 5\n");
  Relation r = load_edge_list(in, "E", true);
  CHECK(r.data == std::vector<uint32_t>{1, 2, 2, 1, 5, 5});
}

TEST_CASE("edge list errors carry line numbers") {
  auto expect_line = [](const std::string& text, size_t line) {
    std::istringstream in(text);
    try {
      load_edge_list(in, "E");
      FAIL("expected EdgeListError");
    } catch (const EdgeListError& e) {
      CHECK(e.line == line);
    }
  };
  expect_line("1 2\nx 3\n", 2);
  expect_line("1\n", 1);           // missing target
  expect_line("1 2 3\n", 1);       // trailing junk
  expect_line("-1 2\n", 1);        // negative id
  expect_line("1 4294967296\n", 1);  // does not fit u32
}

TEST_CASE("edge list accepts 32-bit extremes") {
  std::istringstream in("4294967295 0\n");
  Relation r = load_edge_list(in, "E");
  CHECK(r.data == std::vector<uint32_t>{4294967295u, 0});
}

TEST_CASE("canonicalize sorts and dedups in place") {
  Relation r{"R", 2, {9, 9, 1, 2, 1, 2, 0, 7}};
  canonicalize(r);
  CHECK(r.data == std::vector<uint32_t>{0, 7, 1, 2, 9, 9});
}

TEST_CASE("query parsing roundtrip") {
  Query q = parse_query("path3(x, y, z) = R(x,y), S(y,z).");
  CHECK(q.name == "path3");
  CHECK(q.head == std::vector<std::string>{"x", "y", "z"});
  REQUIRE(q.atoms.size() == 2);
  CHECK(q.atoms[0].relation == "R");
  CHECK(q.atoms[0].vars == std::vector<std::string>{"x", "y"});
  CHECK(q.atoms[1].relation == "S");
  CHECK(q.atoms[1].vars == std::vector<std::string>{"y", "z"});
}

TEST_CASE("query parsing tolerates free-form whitespace and no trailing dot") {
  Query q = parse_query("  t ( a ,b )=\n  Edge ( a , b )  ");
  CHECK(q.name == "t");
  CHECK(q.head == std::vector<std::string>{"a", "b"});
  CHECK(q.atoms[0].relation == "Edge");
}

TEST_CASE("query parse errors") {
  CHECK_THROWS_AS(parse_query("q(x = R(x)"), QueryParseError);
  CHECK_THROWS_AS(parse_query("q(x) R(x)"), QueryParseError);
  CHECK_THROWS_AS(parse_query("q(1x) = R(1x)"), QueryParseError);
  CHECK_THROWS_AS(parse_query(""), QueryParseError);
  CHECK_THROWS_AS(parse_query("q(x,y) = R(x)"), QueryParseError);  // y never used
  try {
    parse_query("q(x) = ");
    FAIL("expected QueryParseError");
  } catch (const QueryParseError& e) {
    CHECK(e.pos <= std::string("q(x) = ").size());
  }
}

TEST_CASE("builtin queries") {
  auto names = builtin_query_names();
  REQUIRE(names.size() == 5);
  CHECK(builtin_query("path3").head.size() == 3);
  CHECK(builtin_query("path4").head.size() == 4);
  CHECK(builtin_query("cycle3").atoms.size() == 3);
  CHECK(builtin_query("cycle4").atoms.size() == 4);
  Query k4 = builtin_query("clique4");
  CHECK(k4.head.size() == 4);
  CHECK(k4.atoms.size() == 6);
  CHECK_THROWS_AS(builtin_query("path5"), std::invalid_argument);
}
