#include <random>
#include <sstream>

#include "doctest.h"
#include "testutil.hpp"
#include "triejoin/trie.hpp"

using namespace triejoin;

TEST_CASE("trie worked example: {(1,1),(1,2)}") {
  Relation r = make_edge_relation("R", {{1, 1}, {1, 2}});
  TrieIndex t = build_trie(r);
  REQUIRE(t.arity == 2);
  CHECK(t.levels[0].values == std::vector<uint32_t>{1});
  CHECK(t.levels[0].child_offsets.empty());
  CHECK(t.levels[1].values == std::vector<uint32_t>{1, 2});
  CHECK(t.levels[1].child_offsets == std::vector<uint32_t>{0, 2});
  ArrayRange kids = t.child_range(0, 0);
  CHECK(kids.begin == 0);
  CHECK(kids.end == 2);
  CHECK(t.full_range().size() == 1);
}

TEST_CASE("trie shares values across parents without duplication") {
  Relation r = make_edge_relation("R", {{1, 5}, {2, 5}, {3, 5}, {3, 7}});
  TrieIndex t = build_trie(r);
  CHECK(t.levels[0].values == std::vector<uint32_t>{1, 2, 3});
  CHECK(t.levels[1].values == std::vector<uint32_t>{5, 5, 5, 7});
  CHECK(t.levels[1].child_offsets == std::vector<uint32_t>{0, 1, 2, 4});
  CHECK(t.child_range(0, 2) == ArrayRange{0, 1, 2, 4});
}

TEST_CASE("trie column permutation") {
  Relation r = make_edge_relation("R", {{1, 9}, {4, 2}, {4, 7}});
  TrieIndex t = build_trie(r, {1, 0});  // level 0 holds column 1
  CHECK(t.levels[0].values == std::vector<uint32_t>{2, 7, 9});
  // Parents 2,7,9 have children 4,4,1.
  CHECK(t.levels[1].values == std::vector<uint32_t>{4, 4, 1});
  CHECK(t.levels[1].child_offsets == std::vector<uint32_t>{0, 1, 2, 3});
}

TEST_CASE("trie enumerate reproduces the canonical tuples") {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 20; ++it) {
    Relation r = testutil::random_edge_relation(rng(), 12, 40);
    TrieIndex t = build_trie(r);
    auto rows = t.enumerate();
    REQUIRE(rows.size() == r.tuple_count());
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i][0] == r.tuple(i)[0]);
      CHECK(rows[i][1] == r.tuple(i)[1]);
    }
    // Values within each parent slice are strictly increasing.
    for (size_t p = 0; p + 1 < t.levels[1].child_offsets.size(); ++p)
      for (uint32_t i = t.levels[1].child_offsets[p]; i + 1 < t.levels[1].child_offsets[p + 1];
           ++i)
        CHECK(t.levels[1].values[i] < t.levels[1].values[i + 1]);
  }
}

TEST_CASE("trie permuted build equals build of permuted relation") {
  Relation r = testutil::random_edge_relation(99, 10, 30);
  TrieIndex a = build_trie(r, {1, 0});
  Relation swapped{"R", 2, {}};
  for (size_t i = 0; i < r.tuple_count(); ++i) {
    swapped.data.push_back(r.tuple(i)[1]);
    swapped.data.push_back(r.tuple(i)[0]);
  }
  canonicalize(swapped);
  TrieIndex b = build_trie(swapped);
  CHECK(a.levels[0].values == b.levels[0].values);
  CHECK(a.levels[1].values == b.levels[1].values);
  CHECK(a.levels[1].child_offsets == b.levels[1].child_offsets);
}

TEST_CASE("trie empty relation") {
  Relation r{"R", 2, {}};
  TrieIndex t = build_trie(r);
  CHECK(t.full_range().empty());
  CHECK(t.levels[0].values.empty());
  CHECK(t.levels[1].child_offsets == std::vector<uint32_t>{0});
}

TEST_CASE("trie child_range bounds checking") {
  Relation r = make_edge_relation("R", {{1, 2}});
  TrieIndex t = build_trie(r);
  CHECK_THROWS_AS((void)t.child_range(1, 0), std::out_of_range);  // leaf level
  CHECK_THROWS_AS((void)t.child_range(0, 5), std::out_of_range);
}

TEST_CASE("trie save/load roundtrip") {
  Relation r = testutil::random_edge_relation(5, 9, 25);
  TrieIndex t = build_trie(r);
  std::stringstream buf;
  save_trie(t, buf);
  TrieIndex u = load_trie(buf);
  REQUIRE(u.arity == t.arity);
  for (uint32_t k = 0; k < t.arity; ++k) {
    CHECK(u.levels[k].values == t.levels[k].values);
    CHECK(u.levels[k].child_offsets == t.levels[k].child_offsets);
  }
  std::stringstream again;
  save_trie(u, again);
  CHECK(again.str() == buf.str());
}

TEST_CASE("trie load rejects bad magic") {
  std::stringstream buf("not a trie file at all");
  CHECK_THROWS(load_trie(buf));
}

TEST_CASE("trie value_bytes counts all arrays") {
  Relation r = make_edge_relation("R", {{1, 1}, {1, 2}});
  TrieIndex t = build_trie(r);
  // level0: 1 value; level1: 2 values + 2 offsets => 5 u32 words.
  CHECK(t.value_bytes() == 5 * sizeof(uint32_t));
}
