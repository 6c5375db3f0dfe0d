#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <set>
#include <vector>

#include "triejoin/engine.hpp"
#include "triejoin/pairwise.hpp"
#include "triejoin/plan.hpp"
#include "triejoin/query.hpp"
#include "triejoin/relation.hpp"
#include "triejoin/sim/simulator.hpp"
#include "triejoin/trie.hpp"

using namespace triejoin;

namespace {

Relation random_graph(uint64_t seed, uint32_t nodes, uint32_t edges) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<uint32_t> d(0, nodes - 1);
  std::set<std::pair<uint32_t, uint32_t>> es;
  while (es.size() < edges) es.emplace(d(rng), d(rng));
  return make_edge_relation("E", {es.begin(), es.end()});
}

struct Bundle {
  Query q;
  std::map<std::string, const Relation*> rels;
  QueryPlan plan;
  BoundTries bound;
  CacheStructure cs;
  ExecPlan exec;

  Bundle(const std::string& name, const Relation& rel, bool with_cache = true) {
    q = builtin_query(name);
    std::map<std::string, uint32_t> cat;
    for (const auto& a : q.atoms) {
      rels[a.relation] = &rel;
      cat[a.relation] = 2;
    }
    plan = plan_query(q, cat);
    bound = bind_tries(plan, rels);
    if (with_cache) cs = derive_cache_structure(plan);
    exec = compile_exec(plan, bound, cs);
  }
};

void BM_lub(benchmark::State& state) {
  std::vector<uint32_t> v;
  for (uint32_t i = 0; i < 1 << 16; ++i) v.push_back(i * 3);
  std::mt19937_64 rng(1);
  for (auto _ : state) {
    LubResult r = lub(v, 0, static_cast<uint32_t>(v.size()), rng() % (3 << 16));
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_lub);

void BM_leapfrog_intersect(benchmark::State& state) {
  const size_t k = static_cast<size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::vector<std::vector<uint32_t>> arrays(k);
  for (auto& a : arrays) {
    std::set<uint32_t> s;
    while (s.size() < 4096) s.insert(static_cast<uint32_t>(rng() % 20000));
    a.assign(s.begin(), s.end());
  }
  for (auto _ : state) {
    std::vector<RangeCursor> rcs;
    for (auto& a : arrays) rcs.push_back({a, 0, static_cast<uint32_t>(a.size()), 0});
    uint64_t seed = 0, n = 0;
    for (;;) {
      MatchResult m = leapfrog_next(rcs, seed);
      if (!m.found) break;
      seed = uint64_t(m.value) + 1;
      n++;
    }
    benchmark::DoNotOptimize(n);
  }
}
BENCHMARK(BM_leapfrog_intersect)->Arg(2)->Arg(3)->Arg(6);

void BM_build_trie(benchmark::State& state) {
  Relation rel = random_graph(3, 2000, static_cast<uint32_t>(state.range(0)));
  for (auto _ : state) {
    TrieIndex t = build_trie(rel);
    benchmark::DoNotOptimize(t);
  }
  state.SetItemsProcessed(state.iterations() * rel.tuple_count());
}
BENCHMARK(BM_build_trie)->Arg(10000)->Arg(100000);

void BM_join(benchmark::State& state, const char* query, bool cached) {
  Relation rel = random_graph(4, 300, 2000);
  Bundle b(query, rel, cached);
  for (auto _ : state) {
    CountSink sink;
    PjrCache cache;
    RunStats st = cached_trie_join(b.exec, sink, cached ? &cache : nullptr);
    benchmark::DoNotOptimize(st);
    benchmark::DoNotOptimize(sink.count);
  }
}
BENCHMARK_CAPTURE(BM_join, path4_cached, "path4", true);
BENCHMARK_CAPTURE(BM_join, path4_uncached, "path4", false);
BENCHMARK_CAPTURE(BM_join, cycle4_cached, "cycle4", true);
BENCHMARK_CAPTURE(BM_join, clique4, "clique4", false);

void BM_pairwise(benchmark::State& state) {
  Relation rel = random_graph(4, 300, 2000);
  Query q = builtin_query("path4");
  std::map<std::string, const Relation*> rels;
  for (const auto& a : q.atoms) rels[a.relation] = &rel;
  for (auto _ : state) {
    PairwiseResult r = pairwise_join(q, rels);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_pairwise);

void BM_simulate(benchmark::State& state) {
  Relation rel = random_graph(5, 60, 240);
  Bundle b("path4", rel);
  sim::SimConfig cfg;
  cfg.threads = static_cast<uint32_t>(state.range(0));
  for (auto _ : state) {
    CountSink sink;
    RunStats st = sim::simulate(b.exec, cfg, sink);
    benchmark::DoNotOptimize(st.cycles);
  }
}
BENCHMARK(BM_simulate)->Arg(1)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
