#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "triejoin/query.hpp"
#include "triejoin/relation.hpp"
#include "triejoin/trie.hpp"

namespace triejoin {

/// A trie to build: a relation's columns permuted so that level order follows
/// the join variable order (equal-variable columns become adjacent levels).
struct TrieSpec {
  std::string relation;
  std::vector<uint32_t> perm;  // level k holds atom column perm[k]

  friend bool operator==(const TrieSpec&, const TrieSpec&) = default;
};

/// One (trie spec, level) pair participating at a join position.
struct TrieBinding {
  uint32_t spec = 0;    // index into QueryPlan::tries
  uint32_t level = 0;   // trie level descended at this position
  uint32_t atom = 0;    // originating atom (diagnostics)
  uint32_t column = 0;  // originating atom column (diagnostics)
};

/// Join plan: variable order is the head order as written; at_position[d]
/// lists the trie levels intersected when binding variable d, in atom text
/// order. Each trie's levels appear at non-decreasing positions, consecutive
/// from 0.
struct QueryPlan {
  Query query;
  std::vector<std::string> order;                      // == query.head
  std::vector<TrieSpec> tries;                         // one per atom occurrence
  std::vector<std::vector<TrieBinding>> at_position;   // size order.size()

  uint32_t var_count() const { return static_cast<uint32_t>(order.size()); }
};

/// Validate the query against a name→arity catalog and derive the plan.
/// Errors (std::invalid_argument): unknown relation, arity mismatch, body
/// variable missing from the head (only full-enumeration queries run).
QueryPlan plan_query(const Query& q, const std::map<std::string, uint32_t>& catalog);

/// Tries materialized for a plan. Distinct atom occurrences with the same
/// bound relation and the same column order share one physical trie;
/// spec_to_trie maps QueryPlan::tries indexes onto `tries`.
struct BoundTries {
  std::vector<TrieIndex> tries;
  std::vector<uint32_t> spec_to_trie;
};

/// Build (and deduplicate) the physical tries for a plan. `relations` maps
/// every atom relation name to its data; pointers are used for dedup, so bind
/// the same Relation object to every name that shares a dataset.
BoundTries bind_tries(const QueryPlan& plan,
                      const std::map<std::string, const Relation*>& relations);

/// One intermediate-result cache entry: values bound at positions
/// [start..end] are cached keyed by the values at `keys` (all the earlier
/// positions sharing an atom with the range). keys is strictly smaller than
/// the full predecessor set, otherwise the entry would never be reused.
struct CacheEntrySpec {
  uint32_t start = 0;
  uint32_t end = 0;                // inclusive; == start unless maximal ranges
  std::vector<uint32_t> keys;     // ascending positions, all < start
};

struct CacheStructure {
  std::vector<CacheEntrySpec> entries;  // ascending by start; spans disjoint
};

/// Scan positions in order; at each position not covered by a previous span,
/// find the largest contiguous range whose earlier-sharing-position set stays
/// a strict subset of all predecessors, and emit an entry there (valIDs
/// truncated to the start position unless maximal_ranges). First position
/// never caches.
CacheStructure derive_cache_structure(const QueryPlan& plan, bool maximal_ranges = false);

}  // namespace triejoin
