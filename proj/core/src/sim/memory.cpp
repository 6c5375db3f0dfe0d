#include "triejoin/sim/memory.hpp"

#include <algorithm>

namespace triejoin::sim {

void MemoryModel::CacheLevel::init(uint32_t bytes, uint32_t line_bytes, uint32_t ways_) {
  ways = ways_;
  sets = bytes / line_bytes / ways_;
  if (sets == 0) sets = 1;
  tags.assign(size_t(sets) * ways, 0);
  lru.resize(size_t(sets) * ways);
  for (uint32_t s = 0; s < sets; ++s)
    for (uint32_t w = 0; w < ways; ++w) lru[size_t(s) * ways + w] = w;
}

bool MemoryModel::CacheLevel::access(uint64_t line, bool fill) {
  uint32_t set = static_cast<uint32_t>(line % sets);
  uint64_t tag = line + 1;  // avoid 0 == empty
  uint64_t* t = &tags[size_t(set) * ways];
  uint32_t* order = &lru[size_t(set) * ways];
  for (uint32_t w = 0; w < ways; ++w) {
    if (t[w] == tag) {
      // move way to MRU
      for (uint32_t i = 0; i < ways; ++i)
        if (order[i] == w) {
          std::rotate(order, order + i, order + i + 1);
          break;
        }
      return true;
    }
  }
  if (fill) {
    uint32_t victim = order[ways - 1];
    t[victim] = tag;
    std::rotate(order, order + ways - 1, order + ways);
  }
  return false;
}

bool MemoryModel::CacheLevel::contains(uint64_t line) const {
  uint32_t set = static_cast<uint32_t>(line % sets);
  uint64_t tag = line + 1;
  const uint64_t* t = &tags[size_t(set) * ways];
  for (uint32_t w = 0; w < ways; ++w)
    if (t[w] == tag) return true;
  return false;
}

MemoryModel::MemoryModel(const MemConfig& cfg) : cfg_(cfg) {
  l1_.init(cfg.l1_bytes, cfg.line_bytes, cfg.ways);
  l2_.init(cfg.l2_bytes, cfg.line_bytes, cfg.ways);
  channel_free_.assign(cfg.channels, 0);
}

uint64_t MemoryModel::channel_slot(uint64_t line, uint64_t now) {
  uint32_t c = static_cast<uint32_t>(line % cfg_.channels);
  uint64_t start = std::max(now, channel_free_[c]);
  channel_free_[c] = start + cfg_.channel_interval;
  return start;
}

uint64_t MemoryModel::read(uint64_t addr, uint32_t bytes, uint64_t now, RunStats& st) {
  uint64_t first = line_of(addr);
  uint64_t last = line_of(addr + (bytes ? bytes - 1 : 0));
  uint64_t done = now;
  for (uint64_t line = first; line <= last; ++line) {
    uint64_t t;
    if (l1_.access(line, false)) {
      st.l1_hits++;
      t = now + cfg_.l1_hit_cycles;
    } else if (l2_.access(line, false)) {
      st.l2_hits++;
      l1_.access(line, true);
      t = now + cfg_.l2_hit_cycles;
    } else {
      st.dram_reads++;
      l2_.access(line, true);
      l1_.access(line, true);
      t = channel_slot(line, now) + cfg_.dram_cycles;
    }
    done = std::max(done, t);
  }
  return done;
}

uint64_t MemoryModel::write(uint64_t addr, uint32_t bytes, uint64_t now, RunStats& st) {
  uint64_t first = line_of(addr);
  uint64_t last = line_of(addr + (bytes ? bytes - 1 : 0));
  uint64_t done = now;
  for (uint64_t line = first; line <= last; ++line) {
    st.dram_writes++;
    done = std::max(done, channel_slot(line, now) + cfg_.dram_cycles);
  }
  return done;
}

bool MemoryModel::in_l1(uint64_t addr) const { return l1_.contains(line_of(addr)); }
bool MemoryModel::in_l2(uint64_t addr) const { return l2_.contains(line_of(addr)); }

}  // namespace triejoin::sim
