#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "triejoin/relation.hpp"

namespace triejoin {

/// Half-open slice [begin,end) of one trie level's values array.
struct ArrayRange {
  uint32_t trie = 0;   // id of the trie this range lives in (caller-assigned)
  uint32_t level = 0;  // which level's values array it slices
  uint32_t begin = 0;
  uint32_t end = 0;

  uint32_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  friend bool operator==(const ArrayRange&, const ArrayRange&) = default;
};

/// Flat-array trie over a canonical relation. Level k holds the sorted,
/// per-parent-deduplicated values of attribute k. For k >= 1 the level also
/// holds child_offsets with one entry per parent value plus a final sentinel:
/// the children of parent i at level k-1 are values[child_offsets[i]] ..
/// values[child_offsets[i+1]] of level k. Values within one parent's slice are
/// strictly increasing.
struct TrieIndex {
  struct Level {
    std::vector<uint32_t> values;
    std::vector<uint32_t> child_offsets;  // empty at level 0, else parent count + 1
  };
  uint32_t arity = 0;
  std::vector<Level> levels;

  /// Slice covering all of level 0.
  ArrayRange full_range(uint32_t trie_id = 0) const;

  /// Children of level-`level` value at absolute index `parent_index`, as a
  /// slice of level level+1. Throws std::out_of_range on a bad level or index.
  ArrayRange child_range(uint32_t level, uint32_t parent_index, uint32_t trie_id = 0) const;

  /// Re-enumerate the stored tuples in lexicographic order.
  std::vector<std::vector<uint32_t>> enumerate() const;

  size_t value_bytes() const;  // total bytes across values + offset arrays
};

/// Build the trie for a canonical relation with columns permuted by `perm`
/// (level k holds column perm[k]). perm must be a permutation of 0..arity-1;
/// pass the identity (or nothing) for query-order == column-order.
TrieIndex build_trie(const Relation& rel, const std::vector<uint32_t>& perm = {});

/// Binary serialization. Layout (all little-endian u32):
///   magic 'TRIE' (0x45495254), arity,
///   then per level: values length, child_offsets length,
///   then per level: values array, child_offsets array.
void save_trie(const TrieIndex& trie, std::ostream& out);
TrieIndex load_trie(std::istream& in);

}  // namespace triejoin
