// Acceptance gate: ten end-to-end checks, one PASS/FAIL line each.
// Exits nonzero if any check fails.

#include <chrono>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "testutil.hpp"
#include "triejoin/pairwise.hpp"
#include "triejoin/pjr_cache.hpp"
#include "triejoin/sim/simulator.hpp"
#include "triejoin/stats.hpp"
#include "triejoin/trie.hpp"

using namespace triejoin;
using namespace testutil;
using sim::SimConfig;

namespace {

int g_failures = 0;

void report(const std::string& label, bool ok, const std::string& detail = "") {
  std::cout << label << ": " << (ok ? "PASS" : "FAIL");
  if (!ok && !detail.empty()) std::cout << " (" << detail << ")";
  std::cout << '\n';
  if (!ok) g_failures++;
}

Relation sized_random_graph(uint64_t seed, uint32_t edges) {
  // Degree stays moderate as the edge budget grows.
  uint32_t nodes = 10 + edges / 2;
  return random_edge_relation(seed, nodes, edges);
}

// C1: every engine enumerates exactly the reference answer.
void c1_engine_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::string detail;
  bool ok = true;
  for (int g = 0; g < 20 && ok; ++g) {
    uint32_t edges = 25 + static_cast<uint32_t>(rng() % 176);  // 25..200
    Relation e = sized_random_graph(rng(), edges);
    for (const auto& name : builtin_query_names()) {
      Query q = builtin_query(name);
      auto rels = bind_all(q, e);
      Rows want = brute_force(q, rels);
      Compiled c;
      c.build(q, rels);

      PjrCache cache;
      if (run_ctj(c, &cache).rows != want) { detail = name + ": ctj mismatch"; ok = false; break; }
      if (run_ctj(c, nullptr).rows != want) { detail = name + ": uncached mismatch"; ok = false; break; }
      if (run_sim(c, sim_config(1, sim::MtScheme::kDynamic)).rows != want) {
        detail = name + ": sim@1 mismatch"; ok = false; break;
      }
      if (run_sim(c, sim_config(32, sim::MtScheme::kDynamic)).rows != want) {
        detail = name + ": sim@32 mismatch"; ok = false; break;
      }
      PairwiseResult pw = pairwise_join(q, rels);
      Rows pw_rows;
      for (size_t i = 0; i < pw.count(); ++i)
        pw_rows.emplace_back(pw.flat.begin() + i * pw.width, pw.flat.begin() + (i + 1) * pw.width);
      if (pw_rows != want) { detail = name + ": pairwise mismatch"; ok = false; break; }
    }
  }
  auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (ok && secs > 300.0) { ok = false; detail = "took too long"; }
  std::ostringstream d;
  d << detail << " [" << secs << "s]";
  report("C1 all engines match the nested-loop reference on random graphs", ok,
         ok ? "" : d.str());
}

// C2: the documented walk-through inputs produce exactly the documented
// index layout and cache contents.
void c2_worked_examples() {
  bool ok = true;
  std::string detail;

  Relation r = make_edge_relation("R", {{1, 1}, {1, 2}});
  TrieIndex t = build_trie(r);
  if (t.levels[0].values != std::vector<uint32_t>{1}) { ok = false; detail = "level0 values"; }
  ArrayRange kids = t.child_range(0, 0);
  if (kids.begin != 0 || kids.end != 2) { ok = false; detail = "child range"; }
  if (t.levels[1].values != std::vector<uint32_t>{1, 2}) { ok = false; detail = "level1 values"; }

  // Two x-branches share y=1: its z continuations are built once, served once.
  Relation r2 = make_edge_relation("R", {{0, 1}, {3, 1}});
  Relation s2 = make_edge_relation("S", {{1, 2}, {1, 4}});
  Relation t2 = make_edge_relation("T", {{2, 5}, {4, 6}});
  Query q = builtin_query("path4");
  Compiled c;
  c.build(q, {{"R", &r2}, {"S", &s2}, {"T", &t2}});
  PjrCache cache;
  auto out = run_ctj(c, &cache);
  Rows want{{0, 1, 2, 5}, {0, 1, 4, 6}, {3, 1, 2, 5}, {3, 1, 4, 6}};
  if (out.rows != want) { ok = false; detail = "fixture results"; }
  const PjrEntry* e = cache.peek(std::vector<uint32_t>{1});
  if (!e || e->group_count() != 2 || e->group(0)[0] != 2 || e->group(1)[0] != 4) {
    ok = false;
    detail = "cached entry for key y=1";
  }
  if (out.stats.cache_hits != 1 || out.stats.cache_misses != 1) { ok = false; detail = "hit/miss"; }
  report("C2 worked examples: trie layout and cached z-list for key y=1", ok, detail);
}

// C3: the cache is invisible except in the counters.
void c3_cache_transparency() {
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(3003);
  for (int g = 0; g < 5 && ok; ++g) {
    Relation e = sized_random_graph(rng(), 40 + g * 30);
    for (const auto& name : builtin_query_names()) {
      Query q = builtin_query(name);
      Compiled c;
      c.build(q, bind_all(q, e));
      PjrCache cache;
      auto with = run_ctj(c, &cache);
      auto without = run_ctj(c, nullptr);
      if (with.rows != without.rows) { ok = false; detail = name + ": results differ"; break; }
      if (with.stats.lub_calls > without.stats.lub_calls) {
        ok = false;
        detail = name + ": caching increased lub calls";
        break;
      }
      // Simulator: result-cache toggle must not change the answer either.
      SimConfig on = sim_config(8, sim::MtScheme::kDynamic);
      SimConfig off = on;
      off.pjr_enabled = false;
      if (run_sim(c, on).rows != run_sim(c, off).rows) {
        ok = false;
        detail = name + ": simulator results differ with cache off";
        break;
      }
    }
  }
  report("C3 result cache is transparent and never adds search work", ok, detail);
}

// C4: which query shapes admit reusable entries.
void c4_cache_structure() {
  auto count = [](const std::string& name) {
    Query q = builtin_query(name);
    std::map<std::string, uint32_t> cat;
    for (auto& a : q.atoms) cat[a.relation] = 2;
    return derive_cache_structure(plan_query(q, cat)).entries.size();
  };
  bool ok = count("path4") >= 1 && count("cycle4") >= 1 && count("cycle3") == 0 &&
            count("clique4") == 0;
  report("C4 cache structure: entries for path4/cycle4, none for cycle3/clique4", ok);
}

// C5: materialization asymmetry between the baselines.
void c5_materialization() {
  bool ok = true;
  std::string detail;

  std::mt19937_64 rng(5005);
  bool tried = false;
  for (int attempt = 0; attempt < 20 && !tried; ++attempt) {
    Relation e = sized_random_graph(rng(), 60 + attempt * 10);
    Query q = builtin_query("path4");
    auto rels = bind_all(q, e);
    Compiled c;
    c.build(q, rels);
    PjrCache cache;
    auto ctj = run_ctj(c, &cache);
    if (ctj.rows.empty() || e.tuple_count() < 50) continue;
    tried = true;
    PairwiseResult pw = pairwise_join(q, rels);
    if (pw.stats.intermediate_tuples <= ctj.stats.intermediate_tuples) {
      ok = false;
      detail = "path4: pairwise did not materialize more";
    }
  }
  if (!tried) { ok = false; detail = "no path4 instance found"; }

  // clique4 with a planted clique: everything the trie engine binds is
  // output-relevant, so its materialization counter stays zero.
  auto edges = random_edges(42, 30, 60);
  edges.emplace_back(1, 2);
  edges.emplace_back(2, 3);
  edges.emplace_back(3, 4);
  edges.emplace_back(4, 1);
  edges.emplace_back(3, 1);
  edges.emplace_back(4, 2);
  Relation e = make_edge_relation("E", edges);
  Query k4 = builtin_query("clique4");
  auto rels = bind_all(k4, e);
  Compiled c;
  c.build(k4, rels);
  PjrCache cache;
  auto ctj = run_ctj(c, &cache);
  PairwiseResult pw = pairwise_join(k4, rels);
  if (ctj.rows.empty()) { ok = false; detail = "clique4: no results despite planted clique"; }
  if (ctj.stats.intermediate_tuples != 0) { ok = false; detail = "clique4: ctj materialized"; }
  if (pw.stats.intermediate_tuples == 0) { ok = false; detail = "clique4: pairwise reported none"; }
  report("C5 pairwise materializes more; clique4 stays at zero for the trie engine", ok, detail);
}

// C6: modeled DRAM traffic never exceeds the baseline's tuple touches.
void c6_dram_traffic() {
  Relation e = sized_random_graph(7, 120);
  bool ok = true;
  std::string detail;
  for (const auto& name : builtin_query_names()) {
    Query q = builtin_query(name);
    auto rels = bind_all(q, e);
    Compiled c;
    c.build(q, rels);
    auto sim = run_sim(c, sim_config(8, sim::MtScheme::kDynamic));
    PairwiseResult pw = pairwise_join(q, rels);
    uint64_t sim_dram = sim.stats.dram_reads + sim.stats.dram_writes;
    uint64_t pw_touch = pw.stats.dram_reads + pw.stats.dram_writes;
    if (sim_dram > pw_touch) {
      ok = false;
      std::ostringstream d;
      d << name << ": " << sim_dram << " > " << pw_touch;
      detail = d.str();
      break;
    }
  }
  report("C6 simulated DRAM traffic stays under pairwise tuple touches", ok, detail);
}

// C7: more threads hide memory latency.
void c7_latency_hiding() {
  Relation e = random_edge_relation(7, 28, 120);  // 2311 path4 results
  Query q = builtin_query("path4");
  Compiled c;
  c.build(q, bind_all(q, e));
  auto r1 = run_sim(c, sim_config(1, sim::MtScheme::kDynamic));
  auto r8 = run_sim(c, sim_config(8, sim::MtScheme::kDynamic));
  auto r32 = run_sim(c, sim_config(32, sim::MtScheme::kDynamic));
  bool enough = r1.stats.results_emitted >= 1000;
  bool speedup = r8.stats.cycles * 3 < r1.stats.cycles * 2;     // cycles(8) < cycles(1)/1.5
  bool flat = r32.stats.cycles * 100 <= r8.stats.cycles * 105;  // within 5% of cycles(8)
  std::ostringstream d;
  d << "results=" << r1.stats.results_emitted << " cycles 1/8/32 = " << r1.stats.cycles << '/'
    << r8.stats.cycles << '/' << r32.stats.cycles;
  report("C7 thread count hides memory latency without collapse at 32", enough && speedup && flat,
         d.str());
}

// C8: identical invocations, identical bytes.
void c8_determinism() {
  Relation e = random_edge_relation(7, 28, 120);
  bool ok = true;
  std::string detail;
  for (auto scheme : {sim::MtScheme::kDynamic, sim::MtScheme::kHybrid}) {
    Query q = builtin_query("cycle4");
    Compiled c;
    c.build(q, bind_all(q, e));
    SimConfig cfg = sim_config(16, scheme);
    auto a = run_sim(c, cfg);
    auto b = run_sim(c, cfg);
    StatsRow ra{"sim", "cycle4", "g", sim::to_string(scheme), 16, a.stats};
    StatsRow rb{"sim", "cycle4", "g", sim::to_string(scheme), 16, b.stats};
    if (stats_csv_row(ra) != stats_csv_row(rb) || a.rows != b.rows) {
      ok = false;
      detail = std::string("scheme ") + sim::to_string(scheme);
      break;
    }
  }
  report("C8 repeated simulations produce byte-identical stats rows", ok, detail);
}

// C9: event-order perturbations cannot corrupt the shared cache.
void c9_race_safety() {
  Relation e = sized_random_graph(909, 70);
  Query q = builtin_query("path4");
  Compiled c;
  c.build(q, bind_all(q, e));
  SimConfig cfg = sim_config(8, sim::MtScheme::kDynamic);
  auto base = run_sim(c, cfg);
  bool ok = true;
  std::string detail;
  for (uint64_t seed = 1; seed <= 1000 && ok; ++seed) {
    sim::SimOptions opt;
    opt.tie_perturb_seed = seed;
    auto p = run_sim(c, cfg, opt);
    if (p.rows != base.rows) {
      ok = false;
      std::ostringstream d;
      d << "results diverged at seed " << seed;
      detail = d.str();
    } else if (p.stats.per_store_accesses.at("pjr.audit") != 0) {
      ok = false;
      std::ostringstream d;
      d << "double commit at seed " << seed;
      detail = d.str();
    }
  }
  report("C9 1000 event-tie perturbations: no lost results, no double commits", ok, detail);
}

// C10: search-primitive micro oracles.
void c10_micro_oracles() {
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(1010);

  for (int it = 0; it < 100000 && ok; ++it) {
    std::set<uint32_t> s;
    size_t n = rng() % 24;
    while (s.size() < n) s.insert(static_cast<uint32_t>(rng() % 64));
    std::vector<uint32_t> v(s.begin(), s.end());
    uint32_t begin = static_cast<uint32_t>(v.empty() ? 0 : rng() % (v.size() + 1));
    uint32_t end = static_cast<uint32_t>(v.empty() ? 0 : begin + rng() % (v.size() - begin + 1));
    uint64_t target = rng() % 80;
    LubResult r = lub(v, begin, end, target);
    // Linear-scan reference: first index in [begin,end) with value >= target.
    uint32_t li = begin;
    while (li < end && v[li] < target) ++li;
    if (li == end) {
      if (r.found) { ok = false; detail = "lub found a value past the range"; }
    } else if (!r.found || r.index != li || r.value != v[li]) {
      ok = false;
      detail = "lub disagrees with linear scan";
    }
  }

  for (int it = 0; it < 10000 && ok; ++it) {
    size_t k = 1 + rng() % 6;
    std::vector<std::vector<uint32_t>> arrays(k);
    for (auto& a : arrays) {
      std::set<uint32_t> s;
      size_t n = 1 + rng() % 24;
      while (s.size() < n) s.insert(static_cast<uint32_t>(rng() % 40));
      a.assign(s.begin(), s.end());
    }
    std::set<uint32_t> inter(arrays[0].begin(), arrays[0].end());
    for (size_t i = 1; i < k; ++i) {
      std::set<uint32_t> next;
      for (uint32_t v : arrays[i])
        if (inter.count(v)) next.insert(v);
      inter = std::move(next);
    }
    std::vector<RangeCursor> rcs;
    for (auto& a : arrays) rcs.push_back({a, 0, static_cast<uint32_t>(a.size()), 0});
    std::vector<uint32_t> got;
    uint64_t seed = 0;
    for (;;) {
      MatchResult m = leapfrog_next(rcs, seed);
      if (!m.found) break;
      got.push_back(m.value);
      seed = uint64_t(m.value) + 1;
    }
    if (got != std::vector<uint32_t>(inter.begin(), inter.end())) {
      ok = false;
      detail = "leapfrog disagrees with set intersection";
    }
  }
  report("C10 search primitives match scan/intersection oracles (1e5 + 1e4 cases)", ok, detail);
}

}  // namespace

int main() {
  c1_engine_equivalence();
  c2_worked_examples();
  c3_cache_transparency();
  c4_cache_structure();
  c5_materialization();
  c6_dram_traffic();
  c7_latency_hiding();
  c8_determinism();
  c9_race_safety();
  c10_micro_oracles();
  if (g_failures) {
    std::cout << g_failures << " acceptance check(s) failed\n";
    return 1;
  }
  std::cout << "all acceptance checks passed\n";
  return 0;
}
