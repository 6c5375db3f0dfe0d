#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace triejoin {

/// Partial-join-result cache configuration. Capacity is modeled, not
/// physically laid out: every (value, indexes) record is accounted as
/// kRecordBytes and every entry carries a kEntryHeaderBytes header. There is
/// no eviction; once full, later insertions are rejected until entries shrink
/// (commits release their worst-case reservations).
struct PjrConfig {
  uint64_t total_capacity_bytes = 4ull * 1024 * 1024;
  uint32_t entry_capacity = 256;  // max records per entry
  uint32_t bank_count = 4;        // simulator timing only
};

/// A committed cache entry: for one key, the complete list of cached
/// bindings in discovery order. A "group" is one complete binding of the
/// cached position span; a group contributes records_per_group records (one
/// per position), each record being a value plus the trie indexes bound with
/// it. Data is flat: group g occupies words [g*group_words, (g+1)*group_words).
struct PjrEntry {
  std::vector<uint32_t> key;
  uint32_t group_words = 0;
  uint32_t records_per_group = 1;
  std::vector<uint32_t> data;

  uint32_t group_count() const {
    return group_words == 0 ? 0 : static_cast<uint32_t>(data.size() / group_words);
  }
  uint32_t record_count() const { return group_count() * records_per_group; }
  const uint32_t* group(uint32_t g) const { return data.data() + size_t(g) * group_words; }
};

/// Bounded intermediate-result cache with a two-phase insertion protocol:
/// entries are built in an insertion buffer invisible to lookup, guarded by a
/// per-slot thread counter, and become visible atomically when the counter
/// drops to zero (commit). Appending more than entry_capacity records
/// overflows the slot: the whole entry is discarded and the key is never
/// served from cache. Only the owning prefix path may append.
class PjrCache {
 public:
  using SlotId = uint64_t;
  static constexpr SlotId kRejected = 0;
  static constexpr uint32_t kRecordBytes = 8;
  static constexpr uint32_t kEntryHeaderBytes = 32;

  explicit PjrCache(PjrConfig cfg = {});

  /// Committed entries only; insertion-buffer contents are never returned.
  const PjrEntry* lookup(std::span<const uint32_t> key);

  /// Open an insertion slot (thread counter starts at 1). Rejected when the
  /// key is already committed, already being inserted, or the worst-case
  /// entry footprint does not fit the remaining capacity.
  SlotId begin_insert(std::span<const uint32_t> key, std::span<const uint32_t> owner_path,
                      uint32_t group_words, uint32_t records_per_group);

  enum class AppendResult { Ok, Overflow, Ignored };

  /// Append one complete binding group. Ignored when the slot is gone or
  /// overflowed, or when `path` differs from the owner path (single writer
  /// path). Overflow discards the entry permanently.
  AppendResult append(SlotId slot, std::span<const uint32_t> path,
                      std::span<const uint32_t> group_data);

  /// Thread-counter notifications. release() on the last holder commits the
  /// slot (unless overflowed). Using an id whose slot no longer exists is an
  /// underflow and throws std::logic_error.
  void retain(SlotId slot);
  void release(SlotId slot);

  // Activity counters.
  uint64_t hits() const { return hits_; }
  uint64_t misses() const { return misses_; }
  uint64_t insertions() const { return insertions_; }
  uint64_t overflows() const { return overflows_; }
  uint64_t rejects() const { return rejects_; }
  uint64_t stale_path_appends() const { return stale_path_appends_; }
  uint64_t committed_records() const { return committed_records_; }
  uint64_t bytes_in_use() const { return bytes_in_use_; }
  size_t committed_entry_count() const { return committed_.size(); }
  size_t inserting_count() const { return slots_.size(); }

  // Safety audit: violations detected internally (must stay zero).
  uint64_t audit_double_commits() const { return audit_double_commits_; }

  /// Non-counting test/inspection access to a committed entry.
  const PjrEntry* peek(std::span<const uint32_t> key) const;
  /// All committed entries, ordered by key (deterministic).
  std::vector<const PjrEntry*> entries() const;

  static uint64_t hash_key(std::span<const uint32_t> key);
  uint32_t bank_of(std::span<const uint32_t> key) const;

  const PjrConfig& config() const { return cfg_; }
  uint64_t worst_case_entry_bytes() const {
    return kEntryHeaderBytes + uint64_t(cfg_.entry_capacity) * kRecordBytes;
  }

 private:
  struct KeyHash {
    size_t operator()(const std::vector<uint32_t>& k) const {
      return static_cast<size_t>(hash_key(k));
    }
  };
  struct Slot {
    std::vector<uint32_t> key;
    std::vector<uint32_t> owner_path;
    uint32_t group_words = 0;
    uint32_t records_per_group = 1;
    std::vector<uint32_t> data;
    uint32_t record_count = 0;
    int32_t thread_count = 1;
    bool overflowed = false;
  };

  void drop_slot(SlotId id, Slot& slot);

  PjrConfig cfg_;
  std::unordered_map<std::vector<uint32_t>, PjrEntry, KeyHash> committed_;
  std::unordered_map<SlotId, Slot> slots_;
  std::unordered_map<std::vector<uint32_t>, SlotId, KeyHash> inserting_;
  SlotId next_slot_ = 1;
  uint64_t bytes_in_use_ = 0;
  uint64_t hits_ = 0, misses_ = 0, insertions_ = 0, overflows_ = 0, rejects_ = 0;
  uint64_t stale_path_appends_ = 0, committed_records_ = 0, audit_double_commits_ = 0;
};

}  // namespace triejoin
