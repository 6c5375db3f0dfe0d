#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "triejoin/pjr_cache.hpp"

namespace triejoin::sim {

enum class MtScheme { kStatic, kDynamic, kHybrid };

const char* to_string(MtScheme s);
MtScheme mt_scheme_from_string(const std::string& s);  // throws std::invalid_argument

/// Memory hierarchy timing (read-only index caches + DRAM channel slots).
struct MemConfig {
  uint32_t l1_hit_cycles = 4;
  uint32_t l2_hit_cycles = 12;
  uint32_t dram_cycles = 200;
  uint32_t line_bytes = 64;
  uint32_t l1_bytes = 32 * 1024;
  uint32_t l2_bytes = 32 * 1024;
  uint32_t ways = 8;
  uint32_t channels = 2;
  uint32_t channel_interval = 4;  // cycles per line transfer per channel
};

/// Bounded queue depths. Response queues default to the thread count (every
/// thread can have one response in flight); request queues stay shallow so
/// back-pressure is observable. 0 = use the default resolved at run start.
struct QueueDepths {
  uint32_t mm_req = 8;
  uint32_t mm_range = 8;
  uint32_t lub_req = 8;
  uint32_t lub_resp = 0;     // default: threads
  uint32_t mid_req = 8;
  uint32_t pjr_req = 8;
  uint32_t mem_req = 16;
  uint32_t cupid_match = 0;  // default: threads
  uint32_t cupid_pjr = 0;    // default: threads
};

struct SimConfig {
  uint32_t threads = 32;
  MtScheme scheme = MtScheme::kDynamic;
  double clock_ghz = 2.38;
  MemConfig mem;
  uint32_t lub_units = 2;
  uint32_t midwife_units = 2;
  QueueDepths queues;
  PjrConfig pjr;
  bool pjr_enabled = true;
  uint32_t cupid_store_bytes = 16 * 1024;
  uint32_t unit_store_bytes = 512;  // per non-Cupid component
  uint32_t hybrid_seeds = 0;        // 0 = threads/4
  // Optional per-counter energy weights; empty map = no energy report.
  // Keys: dramRead, dramWrite, l1Hit, l2Hit, pjrAccess, storeAccess, unitOp.
  std::map<std::string, double> energy_weights;

  uint32_t resolved_hybrid_seeds() const {
    if (hybrid_seeds) return hybrid_seeds;
    return threads / 4 > 0 ? threads / 4 : 1;
  }
};

/// Parse key=value lines ('#' comments, blank lines ignored) into `cfg`.
/// Unknown keys or unparsable values throw std::invalid_argument with the
/// line number. Keys: threads, scheme, clock_ghz, l1_cycles, l2_cycles,
/// dram_cycles, line_bytes, l1_bytes, l2_bytes, cache_ways, channels,
/// channel_interval, lub_units, midwife_units, queue.<name>, pjr.capacity_bytes,
/// pjr.entry_capacity, pjr.banks, pjr.enabled, cupid_store_bytes,
/// unit_store_bytes, hybrid_seeds, energy.<counter>.
void parse_config(std::istream& in, SimConfig& cfg);
void parse_config_file(const std::string& path, SimConfig& cfg);

/// Structural validation independent of any query (positive sizes, sane
/// cache geometry). Throws std::invalid_argument.
void validate(const SimConfig& cfg);

}  // namespace triejoin::sim
