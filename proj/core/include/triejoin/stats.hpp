#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace triejoin {

/// Counters shared by the engine, the simulator, and the pairwise baseline.
/// Unused fields stay zero for a given runner.
struct RunStats {
  // Simulator timing and memory hierarchy.
  uint64_t cycles = 0;
  uint64_t dram_reads = 0;   // pairwise rows: tuples read
  uint64_t dram_writes = 0;  // pairwise rows: tuples written
  uint64_t l1_hits = 0;
  uint64_t l2_hits = 0;
  uint64_t threads_spawned = 0;

  // Result and intermediate-cache activity (engine + simulator).
  uint64_t results_emitted = 0;
  uint64_t cache_hits = 0;
  uint64_t cache_misses = 0;
  uint64_t cache_insertions = 0;  // committed entries
  uint64_t cache_overflows = 0;
  uint64_t cache_rejects = 0;

  // Tuples materialized outside the final output: committed cache records for
  // the trie engines, per-join intermediate sizes for pairwise.
  uint64_t intermediate_tuples = 0;

  // Functional engine work counters.
  uint64_t lub_calls = 0;
  uint64_t array_reads = 0;  // value probes + child-offset reads

  // Simulator per-store access counts (state stores, pjr, caches).
  std::map<std::string, uint64_t> per_store_accesses;

  // Optional energy proxy: sum of event-class counts times configured weights.
  std::optional<double> weighted_energy;
};

/// One stats CSV row. Column order is fixed and identical for every engine:
///   engine,query,dataset,scheme,threads,cycles,dramReads,dramWrites,
///   l1Hits,l2Hits,cacheHits,cacheMisses,resultsEmitted,intermediateTuples,
///   weightedEnergy
/// weightedEnergy is empty when no weights were configured.
struct StatsRow {
  std::string engine;   // ctj | ctj-nocache | pairwise | sim
  std::string query;
  std::string dataset;
  std::string scheme;   // static | dynamic | hybrid | "-" for non-sim rows
  uint32_t threads = 1;
  RunStats stats;
};

std::string stats_csv_header();
std::string stats_csv_row(const StatsRow& row);

}  // namespace triejoin
