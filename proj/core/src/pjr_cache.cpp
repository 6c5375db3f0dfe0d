#include "triejoin/pjr_cache.hpp"

#include <algorithm>
#include <stdexcept>

namespace triejoin {

PjrCache::PjrCache(PjrConfig cfg) : cfg_(cfg) {}

uint64_t PjrCache::hash_key(std::span<const uint32_t> key) {
  // 64-bit multiplicative mixing; exact compare happens at the container.
  uint64_t h = 0x9E3779B97F4A7C15ull;
  for (uint32_t v : key) {
    h ^= v;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 31;
  }
  return h;
}

uint32_t PjrCache::bank_of(std::span<const uint32_t> key) const {
  return cfg_.bank_count == 0 ? 0 : static_cast<uint32_t>(hash_key(key) % cfg_.bank_count);
}

const PjrEntry* PjrCache::lookup(std::span<const uint32_t> key) {
  auto it = committed_.find(std::vector<uint32_t>(key.begin(), key.end()));
  if (it == committed_.end()) {
    misses_++;
    return nullptr;
  }
  hits_++;
  return &it->second;
}

const PjrEntry* PjrCache::peek(std::span<const uint32_t> key) const {
  auto it = committed_.find(std::vector<uint32_t>(key.begin(), key.end()));
  return it == committed_.end() ? nullptr : &it->second;
}

std::vector<const PjrEntry*> PjrCache::entries() const {
  std::vector<const PjrEntry*> out;
  out.reserve(committed_.size());
  for (const auto& [k, e] : committed_) out.push_back(&e);
  std::sort(out.begin(), out.end(),
            [](const PjrEntry* a, const PjrEntry* b) { return a->key < b->key; });
  return out;
}

PjrCache::SlotId PjrCache::begin_insert(std::span<const uint32_t> key,
                                        std::span<const uint32_t> owner_path,
                                        uint32_t group_words, uint32_t records_per_group) {
  std::vector<uint32_t> k(key.begin(), key.end());
  if (committed_.count(k) || inserting_.count(k)) {
    rejects_++;
    return kRejected;
  }
  if (bytes_in_use_ + worst_case_entry_bytes() > cfg_.total_capacity_bytes) {
    rejects_++;
    return kRejected;
  }
  bytes_in_use_ += worst_case_entry_bytes();
  SlotId id = next_slot_++;
  Slot slot;
  slot.key = k;
  slot.owner_path.assign(owner_path.begin(), owner_path.end());
  slot.group_words = group_words;
  slot.records_per_group = records_per_group;
  inserting_.emplace(std::move(k), id);
  slots_.emplace(id, std::move(slot));
  return id;
}

PjrCache::AppendResult PjrCache::append(SlotId id, std::span<const uint32_t> path,
                                        std::span<const uint32_t> group_data) {
  auto it = slots_.find(id);
  if (it == slots_.end()) return AppendResult::Ignored;
  Slot& slot = it->second;
  if (slot.overflowed) return AppendResult::Ignored;
  if (path.size() != slot.owner_path.size() ||
      !std::equal(path.begin(), path.end(), slot.owner_path.begin())) {
    stale_path_appends_++;
    return AppendResult::Ignored;
  }
  if (group_data.size() != slot.group_words) throw std::logic_error("pjr append: bad group size");
  if (slot.record_count + slot.records_per_group > cfg_.entry_capacity) {
    // Too many intermediate results for one entry: discard it permanently.
    slot.overflowed = true;
    slot.data.clear();
    slot.data.shrink_to_fit();
    bytes_in_use_ -= worst_case_entry_bytes();
    overflows_++;
    return AppendResult::Overflow;
  }
  slot.data.insert(slot.data.end(), group_data.begin(), group_data.end());
  slot.record_count += slot.records_per_group;
  return AppendResult::Ok;
}

void PjrCache::retain(SlotId id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw std::logic_error("pjr retain: no such slot");
  it->second.thread_count++;
}

void PjrCache::release(SlotId id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw std::logic_error("pjr release: thread counter underflow");
  Slot& slot = it->second;
  if (--slot.thread_count > 0) return;
  drop_slot(id, slot);
}

void PjrCache::drop_slot(SlotId id, Slot& slot) {
  inserting_.erase(slot.key);
  if (!slot.overflowed) {
    PjrEntry entry;
    entry.key = slot.key;
    entry.group_words = slot.group_words;
    entry.records_per_group = slot.records_per_group;
    entry.data = std::move(slot.data);
    uint64_t actual = kEntryHeaderBytes + uint64_t(slot.record_count) * kRecordBytes;
    bytes_in_use_ -= worst_case_entry_bytes();
    bytes_in_use_ += actual;
    committed_records_ += slot.record_count;
    insertions_++;
    auto [pos, fresh] = committed_.emplace(slot.key, std::move(entry));
    if (!fresh) audit_double_commits_++;
  }
  slots_.erase(id);
}

}  // namespace triejoin
