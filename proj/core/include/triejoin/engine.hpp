#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "triejoin/pjr_cache.hpp"
#include "triejoin/plan.hpp"
#include "triejoin/stats.hpp"

namespace triejoin {

/// Lowest-upper-bound search: smallest index in [begin,end) of `values`
/// whose element is >= target. Plain halving binary search with an equality
/// early-out (values are strictly increasing within a trie slice), plus one
/// final read when the loop narrows without hitting the target exactly.
struct LubResult {
  bool found = false;
  uint32_t index = 0;
  uint32_t value = 0;
};
LubResult lub(std::span<const uint32_t> values, uint32_t begin, uint32_t end, uint64_t target,
              uint64_t* reads = nullptr);

/// One intersection operand: a strictly increasing slice plus a monotone
/// cursor (absolute index, advanced by leapfrog_next).
struct RangeCursor {
  std::span<const uint32_t> values;
  uint32_t begin = 0;
  uint32_t end = 0;
  uint32_t cursor = 0;
};

/// Leapfrog step: the smallest value >= seed present in every range, probing
/// the arrays round-robin in the order given. Cursors advance to the match
/// (or past the exhaustion point). Counts one lub call per probe.
struct MatchResult {
  bool found = false;
  uint32_t value = 0;
};
MatchResult leapfrog_next(std::span<RangeCursor> ranges, uint64_t seed, RunStats* stats = nullptr);

/// Active-range stack: adjust(d) replaces any groups at positions >= d with
/// the child ranges opened by the values just bound at position d; reset(d)
/// pops every group at positions >= d. active() finds the topmost range
/// published for a (position, part) slot.
class Frontier {
 public:
  struct Published {
    uint32_t pos = 0;   // position that will consume this range
    uint32_t part = 0;  // part slot at that position
    ArrayRange range;
  };

  void adjust(uint32_t d, std::vector<Published> ranges);
  void reset(uint32_t d);
  void clear() { stack_.clear(); }
  std::optional<ArrayRange> active(uint32_t pos, uint32_t part) const;
  size_t depth() const { return stack_.size(); }

 private:
  struct Group {
    uint32_t pos;
    std::vector<Published> ranges;
  };
  std::vector<Group> stack_;
};

/// Compiled execution plan shared by the functional engine and the
/// simulator: physical trie ids, parent links, secondary (repeated-variable)
/// flags, and the cache entry layout per position.
struct ExecPlan {
  struct Part {
    uint32_t spec = 0;       // QueryPlan::tries index (descent identity)
    uint32_t trie = 0;       // physical trie (after dedup)
    uint32_t level = 0;
    int32_t parent_pos = -1;   // position binding (spec, level-1); -1 for level 0
    int32_t parent_part = -1;  // part slot at parent_pos
    int32_t child_pos = -1;    // position binding (spec, level+1); -1 at leaf
    int32_t child_part = -1;   // part slot at child_pos
    bool secondary = false;    // parent bound at this same position
  };
  struct Position {
    std::vector<Part> parts;
    uint32_t primary_count = 0;
  };
  struct Entry {
    uint32_t start = 0;
    uint32_t end = 0;
    std::vector<uint32_t> keys;
    uint32_t group_words = 0;  // per cached binding: sum over span of 1+parts
  };

  const QueryPlan* plan = nullptr;
  const TrieIndex* tries = nullptr;  // bound.tries.data()
  uint32_t trie_count = 0;
  uint32_t n = 0;
  std::vector<Position> positions;
  std::vector<Entry> entries;
  std::vector<int32_t> entry_at;         // position -> entry starting here or -1
  std::vector<int32_t> entry_ending_at;  // position -> entry whose end is here or -1

  const TrieIndex& trie(uint32_t id) const { return tries[id]; }
};

/// Compile plan + bound tries + cache structure, validating the binding
/// invariants (each (spec,level) bound exactly once; levels consecutive from
/// 0 at non-decreasing positions).
ExecPlan compile_exec(const QueryPlan& plan, const BoundTries& bound, const CacheStructure& cs);

/// Where results go. emit() receives the full tuple in head-variable order.
struct ResultSink {
  virtual ~ResultSink() = default;
  virtual void emit(std::span<const uint32_t> tuple) = 0;
};

struct CountSink : ResultSink {
  uint64_t count = 0;
  void emit(std::span<const uint32_t>) override { count++; }
};

struct VectorSink : ResultSink {
  uint32_t width = 0;
  std::vector<uint32_t> flat;
  explicit VectorSink(uint32_t w) : width(w) {}
  void emit(std::span<const uint32_t> t) override { flat.insert(flat.end(), t.begin(), t.end()); }
  size_t count() const { return width == 0 ? 0 : flat.size() / width; }
  std::span<const uint32_t> tuple(size_t i) const {
    return {flat.data() + i * width, width};
  }
};

/// Run the cached trie join. cache == nullptr disables caching entirely.
/// partitions > 1 splits the first primary trie's level-0 index range into
/// contiguous chunks executed one after another (results concatenate in
/// partition order, preserving the global lexicographic order). Stats report
/// this invocation's activity only (cache counter deltas).
RunStats cached_trie_join(const ExecPlan& exec, ResultSink& sink, PjrCache* cache = nullptr,
                          uint32_t partitions = 1);

}  // namespace triejoin
