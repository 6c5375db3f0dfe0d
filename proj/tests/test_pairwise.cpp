#include <numeric>

#include "doctest.h"
#include "testutil.hpp"
#include "triejoin/pairwise.hpp"

using namespace triejoin;
using namespace testutil;

TEST_CASE("pairwise matches the nested-loop reference") {
  std::mt19937_64 rng(51);
  for (int g = 0; g < 6; ++g) {
    Relation e = random_edge_relation(rng(), 10 + g, 35 + 5 * g);
    for (const auto& name : builtin_query_names()) {
      Query q = builtin_query(name);
      auto rels = bind_all(q, e);
      Rows want = brute_force(q, rels);
      PairwiseResult r = pairwise_join(q, rels);
      REQUIRE(r.width == q.head.size());
      REQUIRE(r.count() == want.size());
      for (size_t i = 0; i < want.size(); ++i)
        for (size_t cix = 0; cix < r.width; ++cix)
          CHECK(r.flat[i * r.width + cix] == want[i][cix]);
    }
  }
}

TEST_CASE("pairwise output is sorted") {
  Relation e = random_edge_relation(8, 12, 60);
  Query q = builtin_query("path4");
  PairwiseResult r = pairwise_join(q, bind_all(q, e));
  for (size_t i = 1; i < r.count(); ++i) {
    const uint32_t* a = r.flat.data() + (i - 1) * r.width;
    const uint32_t* b = r.flat.data() + i * r.width;
    CHECK(std::lexicographical_compare(a, a + r.width, b, b + r.width));
  }
}

TEST_CASE("pairwise counters: per-join sizes and intermediates") {
  Relation e = random_edge_relation(9, 12, 60);
  Query q = builtin_query("path4");
  PairwiseResult r = pairwise_join(q, bind_all(q, e));
  REQUIRE(r.per_join_sizes.size() == q.atoms.size() - 1);
  CHECK(r.per_join_sizes.back() == r.count());
  uint64_t inter = std::accumulate(r.per_join_sizes.begin(), r.per_join_sizes.end() - 1,
                                   uint64_t{0});
  CHECK(r.stats.intermediate_tuples == inter);
  CHECK(r.stats.results_emitted == r.count());
  CHECK(r.stats.dram_reads > 0);
  if (r.count() > 0) CHECK(r.stats.dram_writes >= r.count());
}

TEST_CASE("pairwise materializes unfiltered chains the trie engine skips") {
  // Hub graph: node 0 points at 1..k and k..1 point back, so R join S pivots
  // through the hub and the first intermediate is quadratic. A tail query
  // filtered by the last atom leaves few final results.
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  const uint32_t k = 24;
  for (uint32_t i = 1; i <= k; ++i) {
    edges.emplace_back(0, i);
    edges.emplace_back(i, 0);
  }
  edges.emplace_back(1, 2);  // lone continuation for the final hop
  Relation e = make_edge_relation("E", edges);
  Query q = builtin_query("path4");
  auto rels = bind_all(q, e);
  PairwiseResult pw = pairwise_join(q, rels);
  Compiled c;
  c.build(q, rels);
  PjrCache cache;
  auto ctj = run_ctj(c, &cache);
  REQUIRE(pw.count() == ctj.rows.size());
  CHECK(pw.stats.intermediate_tuples > ctj.stats.intermediate_tuples);
}

TEST_CASE("pairwise on empty and result-free inputs") {
  Relation e{"E", 2, {}};
  Query q = builtin_query("cycle3");
  PairwiseResult r = pairwise_join(q, bind_all(q, e));
  CHECK(r.count() == 0);
  CHECK(r.stats.intermediate_tuples == 0);
}
