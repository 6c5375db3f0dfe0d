#pragma once

#include <cstdint>
#include <vector>

#include "triejoin/sim/config.hpp"
#include "triejoin/stats.hpp"

namespace triejoin::sim {

/// Two-level read-only set-associative LRU cache in front of a DRAM channel
/// slot model. Index-data reads consult L1 then L2 then DRAM (filling both on
/// a miss); result-stream writes bypass the caches entirely and only consume
/// a channel transfer slot. Latencies and geometry come from MemConfig.
class MemoryModel {
 public:
  explicit MemoryModel(const MemConfig& cfg);

  /// Completion cycle of an index-data read of `bytes` at `addr` issued at
  /// `now`. Straddling accesses touch every covered line; the result is the
  /// slowest line. Counters: l1_hits, l2_hits, dram_reads (per line).
  uint64_t read(uint64_t addr, uint32_t bytes, uint64_t now, RunStats& st);

  /// Completion cycle of a result-stream write (fire-and-forget for callers
  /// that do not care). Never touches the cache model; dram_writes per line.
  uint64_t write(uint64_t addr, uint32_t bytes, uint64_t now, RunStats& st);

  /// True when the line holding addr is present (test hook).
  bool in_l1(uint64_t addr) const;
  bool in_l2(uint64_t addr) const;

 private:
  struct CacheLevel {
    uint32_t sets = 0;
    uint32_t ways = 0;
    // way-major per set: line tags, 0 = empty; LRU order per set (front = MRU)
    std::vector<uint64_t> tags;
    std::vector<uint32_t> lru;  // per set: way indexes, most recent first

    void init(uint32_t bytes, uint32_t line_bytes, uint32_t ways_);
    bool access(uint64_t line, bool fill);  // true = hit; fill inserts on miss
    bool contains(uint64_t line) const;
  };

  uint64_t line_of(uint64_t addr) const { return addr / cfg_.line_bytes; }
  uint64_t channel_slot(uint64_t line, uint64_t now);

  MemConfig cfg_;
  CacheLevel l1_, l2_;
  std::vector<uint64_t> channel_free_;
};

}  // namespace triejoin::sim
