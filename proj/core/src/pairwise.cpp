#include "triejoin/pairwise.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace triejoin {

namespace {

struct VecHash {
  size_t operator()(const std::vector<uint32_t>& v) const {
    uint64_t h = 0x9E3779B97F4A7C15ull;
    for (uint32_t x : v) {
      h ^= x + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      h *= 0xBF58476D1CE4E5B9ull;
    }
    return static_cast<size_t>(h);
  }
};

// One materialized intermediate: named columns + row-major data.
struct Table {
  std::vector<std::string> vars;
  std::vector<uint32_t> flat;
  size_t rows() const { return vars.empty() ? 0 : flat.size() / vars.size(); }
  const uint32_t* row(size_t i) const { return flat.data() + i * vars.size(); }
};

// Scan one atom into a table: repeated variables become an equality filter
// and collapse to a single column (first occurrence order).
Table scan_atom(const Atom& atom, const Relation& rel, RunStats& st) {
  Table t;
  std::vector<uint32_t> keep;  // column index per kept var
  for (size_t c = 0; c < atom.vars.size(); ++c) {
    bool seen = false;
    for (size_t e = 0; e < c && !seen; ++e) seen = atom.vars[e] == atom.vars[c];
    if (!seen) {
      t.vars.push_back(atom.vars[c]);
      keep.push_back(static_cast<uint32_t>(c));
    }
  }
  for (size_t i = 0; i < rel.tuple_count(); ++i) {
    auto tup = rel.tuple(i);
    st.dram_reads++;
    bool ok = true;
    for (size_t c = 0; c < atom.vars.size() && ok; ++c)
      for (size_t e = 0; e < c && ok; ++e)
        if (atom.vars[e] == atom.vars[c]) ok = tup[e] == tup[c];
    if (!ok) continue;
    for (uint32_t c : keep) t.flat.push_back(tup[c]);
    st.dram_writes++;
  }
  return t;
}

std::vector<uint32_t> var_indexes(const Table& t, const std::vector<std::string>& names) {
  std::vector<uint32_t> out;
  for (const auto& n : names) {
    auto it = std::find(t.vars.begin(), t.vars.end(), n);
    if (it == t.vars.end()) throw std::logic_error("pairwise: missing column " + n);
    out.push_back(static_cast<uint32_t>(it - t.vars.begin()));
  }
  return out;
}

// Hash join: build on the smaller side, probe with the larger. Output
// columns: all of `left`, then the non-shared columns of `right`.
Table hash_join(const Table& left, const Table& right, RunStats& st) {
  std::vector<std::string> shared;
  for (const auto& v : right.vars)
    if (std::find(left.vars.begin(), left.vars.end(), v) != left.vars.end()) shared.push_back(v);

  const bool build_left = left.rows() <= right.rows();
  const Table& build = build_left ? left : right;
  const Table& probe = build_left ? right : left;
  auto build_key = var_indexes(build, shared);
  auto probe_key = var_indexes(probe, shared);

  std::unordered_map<std::vector<uint32_t>, std::vector<uint32_t>, VecHash> ht;
  std::vector<uint32_t> key(shared.size());
  for (size_t i = 0; i < build.rows(); ++i) {
    st.dram_reads++;
    const uint32_t* r = build.row(i);
    for (size_t k = 0; k < key.size(); ++k) key[k] = r[build_key[k]];
    ht[key].push_back(static_cast<uint32_t>(i));
  }

  Table out;
  out.vars = left.vars;
  std::vector<uint32_t> right_extra;  // right columns not shared
  for (size_t c = 0; c < right.vars.size(); ++c)
    if (std::find(shared.begin(), shared.end(), right.vars[c]) == shared.end()) {
      out.vars.push_back(right.vars[c]);
      right_extra.push_back(static_cast<uint32_t>(c));
    }

  for (size_t i = 0; i < probe.rows(); ++i) {
    st.dram_reads++;
    const uint32_t* pr = probe.row(i);
    for (size_t k = 0; k < key.size(); ++k) key[k] = pr[probe_key[k]];
    auto it = ht.find(key);
    if (it == ht.end()) continue;
    for (uint32_t bi : it->second) {
      const uint32_t* br = build.row(bi);
      const uint32_t* lr = build_left ? br : pr;
      const uint32_t* rr = build_left ? pr : br;
      for (size_t c = 0; c < left.vars.size(); ++c) out.flat.push_back(lr[c]);
      for (uint32_t c : right_extra) out.flat.push_back(rr[c]);
      st.dram_writes++;
    }
  }
  return out;
}

}  // namespace

PairwiseResult pairwise_join(const Query& q,
                             const std::map<std::string, const Relation*>& relations) {
  if (q.atoms.empty()) throw std::invalid_argument("pairwise: query has no atoms");
  PairwiseResult res;
  res.width = static_cast<uint32_t>(q.head.size());

  auto rel_of = [&](const Atom& a) -> const Relation& {
    auto it = relations.find(a.relation);
    if (it == relations.end() || !it->second)
      throw std::invalid_argument("pairwise: no data bound for relation " + a.relation);
    if (it->second->arity != a.vars.size())
      throw std::invalid_argument("pairwise: arity mismatch for relation " + a.relation);
    return *it->second;
  };

  Table cur = scan_atom(q.atoms[0], rel_of(q.atoms[0]), res.stats);
  for (size_t a = 1; a < q.atoms.size(); ++a) {
    Table next = scan_atom(q.atoms[a], rel_of(q.atoms[a]), res.stats);
    cur = hash_join(cur, next, res.stats);
    res.per_join_sizes.push_back(cur.rows());
  }
  for (size_t j = 0; j + 1 < res.per_join_sizes.size(); ++j)
    res.stats.intermediate_tuples += res.per_join_sizes[j];

  // Project to head order and sort rows lexicographically.
  auto proj = var_indexes(cur, q.head);
  const size_t n = cur.rows();
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    const uint32_t* ra = cur.row(a);
    const uint32_t* rb = cur.row(b);
    for (uint32_t c : proj) {
      if (ra[c] != rb[c]) return ra[c] < rb[c];
    }
    return false;
  });
  res.flat.reserve(n * res.width);
  for (uint32_t i : order) {
    const uint32_t* r = cur.row(i);
    for (uint32_t c : proj) res.flat.push_back(r[c]);
  }
  res.stats.results_emitted = n;
  return res;
}

}  // namespace triejoin
