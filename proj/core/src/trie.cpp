#include "triejoin/trie.hpp"

#include <algorithm>
#include <cassert>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace triejoin {

ArrayRange TrieIndex::full_range(uint32_t trie_id) const {
  return {trie_id, 0, 0, static_cast<uint32_t>(levels.empty() ? 0 : levels[0].values.size())};
}

ArrayRange TrieIndex::child_range(uint32_t level, uint32_t parent_index, uint32_t trie_id) const {
  if (level + 1 >= arity) throw std::out_of_range("child_range: level has no children");
  const auto& offs = levels[level + 1].child_offsets;
  if (parent_index + 1 >= offs.size()) throw std::out_of_range("child_range: parent index out of bounds");
  return {trie_id, level + 1, offs[parent_index], offs[parent_index + 1]};
}

std::vector<std::vector<uint32_t>> TrieIndex::enumerate() const {
  std::vector<std::vector<uint32_t>> out;
  if (arity == 0) return out;
  std::vector<uint32_t> tuple(arity);
  // Iterative DFS over (level, index, end-of-range).
  struct Frame {
    uint32_t idx, end;
  };
  std::vector<Frame> stack;
  stack.push_back({0, static_cast<uint32_t>(levels[0].values.size())});
  while (!stack.empty()) {
    Frame& f = stack.back();
    uint32_t level = static_cast<uint32_t>(stack.size() - 1);
    if (f.idx >= f.end) {
      stack.pop_back();
      if (!stack.empty()) stack.back().idx++;
      continue;
    }
    tuple[level] = levels[level].values[f.idx];
    if (level + 1 == arity) {
      out.push_back(tuple);
      f.idx++;
    } else {
      ArrayRange c = child_range(level, f.idx);
      stack.push_back({c.begin, c.end});
    }
  }
  return out;
}

size_t TrieIndex::value_bytes() const {
  size_t b = 0;
  for (const auto& l : levels) b += (l.values.size() + l.child_offsets.size()) * sizeof(uint32_t);
  return b;
}

TrieIndex build_trie(const Relation& rel, const std::vector<uint32_t>& perm) {
  std::vector<uint32_t> p = perm;
  if (p.empty()) {
    p.resize(rel.arity);
    for (uint32_t i = 0; i < rel.arity; i++) p[i] = i;
  }
  if (p.size() != rel.arity) throw std::invalid_argument("build_trie: bad permutation size");

  // Materialize permuted tuples and canonicalize under the new column order.
  Relation view;
  view.arity = rel.arity;
  view.data.resize(rel.data.size());
  const size_t n = rel.tuple_count();
  for (size_t i = 0; i < n; i++) {
    const uint32_t* t = rel.tuple(i);
    for (uint32_t k = 0; k < rel.arity; k++) view.data[i * rel.arity + k] = t[p[k]];
  }
  canonicalize(view);

  TrieIndex trie;
  trie.arity = view.arity;
  trie.levels.resize(view.arity);
  const size_t m = view.tuple_count();
  if (m == 0) {
    for (uint32_t k = 1; k < view.arity; k++) trie.levels[k].child_offsets = {0};
    return trie;
  }

  // One pass per level: a new node starts wherever the length-(k+1) prefix
  // changes; its parent boundary is wherever the length-k prefix changes.
  for (uint32_t k = 0; k < view.arity; k++) {
    auto& lvl = trie.levels[k];
    for (size_t i = 0; i < m; i++) {
      const uint32_t* t = view.tuple(i);
      bool prefix_change = i == 0;
      if (!prefix_change) {
        const uint32_t* prev = view.tuple(i - 1);
        prefix_change = !std::equal(t, t + k, prev);
      }
      bool node_start = prefix_change || view.tuple(i - 1)[k] != t[k];
      if (k > 0 && prefix_change)
        lvl.child_offsets.push_back(static_cast<uint32_t>(lvl.values.size()));
      if (node_start) lvl.values.push_back(t[k]);
    }
    if (k > 0) lvl.child_offsets.push_back(static_cast<uint32_t>(lvl.values.size()));
  }
  for (uint32_t k = 1; k < view.arity; k++)
    assert(trie.levels[k].child_offsets.size() == trie.levels[k - 1].values.size() + 1);
  return trie;
}

namespace {
constexpr uint32_t kTrieMagic = 0x45495254;  // 'T','R','I','E' little-endian

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("trie load: truncated stream");
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}
}  // namespace

void save_trie(const TrieIndex& trie, std::ostream& out) {
  put_u32(out, kTrieMagic);
  put_u32(out, trie.arity);
  for (const auto& l : trie.levels) {
    put_u32(out, static_cast<uint32_t>(l.values.size()));
    put_u32(out, static_cast<uint32_t>(l.child_offsets.size()));
  }
  for (const auto& l : trie.levels) {
    for (uint32_t v : l.values) put_u32(out, v);
    for (uint32_t v : l.child_offsets) put_u32(out, v);
  }
}

TrieIndex load_trie(std::istream& in) {
  if (get_u32(in) != kTrieMagic) throw std::runtime_error("trie load: bad magic");
  TrieIndex trie;
  trie.arity = get_u32(in);
  trie.levels.resize(trie.arity);
  std::vector<std::pair<uint32_t, uint32_t>> lens(trie.arity);
  for (auto& [nv, no] : lens) {
    nv = get_u32(in);
    no = get_u32(in);
  }
  for (uint32_t k = 0; k < trie.arity; k++) {
    trie.levels[k].values.resize(lens[k].first);
    for (auto& v : trie.levels[k].values) v = get_u32(in);
    trie.levels[k].child_offsets.resize(lens[k].second);
    for (auto& v : trie.levels[k].child_offsets) v = get_u32(in);
  }
  return trie;
}

}  // namespace triejoin
