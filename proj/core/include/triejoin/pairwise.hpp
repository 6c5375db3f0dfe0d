#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "triejoin/query.hpp"
#include "triejoin/relation.hpp"
#include "triejoin/stats.hpp"

namespace triejoin {

/// Left-deep pairwise hash join over the query atoms in text order: start
/// from the first atom's tuples, then for each later atom build a hash table
/// on the shared columns of the smaller side and probe with the larger,
/// materializing every intermediate fully. Output columns follow the head
/// variable order; rows are sorted lexicographically before returning.
struct PairwiseResult {
  uint32_t width = 0;
  std::vector<uint32_t> flat;  // row-major, sorted
  std::vector<uint64_t> per_join_sizes;  // output size of each join step, final included
  RunStats stats;  // dram_reads = tuples read, dram_writes = tuples written,
                   // intermediate_tuples = materialized rows excluding the final join
  size_t count() const { return width == 0 ? 0 : flat.size() / width; }
};

PairwiseResult pairwise_join(const Query& q,
                             const std::map<std::string, const Relation*>& relations);

}  // namespace triejoin
