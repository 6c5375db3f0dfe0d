#include "triejoin/relation.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace triejoin {

void canonicalize(Relation& rel) {
  if (rel.arity == 0 || rel.data.empty()) return;
  const size_t k = rel.arity;
  const size_t n = rel.tuple_count();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; i++) order[i] = i;
  const uint32_t* d = rel.data.data();
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::lexicographical_compare(d + a * k, d + a * k + k, d + b * k, d + b * k + k);
  });
  std::vector<uint32_t> out;
  out.reserve(rel.data.size());
  for (size_t i = 0; i < n; i++) {
    const uint32_t* t = d + order[i] * k;
    if (!out.empty() && std::equal(t, t + k, out.data() + out.size() - k)) continue;
    out.insert(out.end(), t, t + k);
  }
  rel.data = std::move(out);
}

Relation load_edge_list(std::istream& in, const std::string& name, bool undirected) {
  Relation rel;
  rel.name = name;
  rel.arity = 2;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    uint64_t vals[2];
    int got = 0;
    std::string tok;
    while (ls >> tok) {
      if (got == 2) throw EdgeListError(lineno, "expected 2 ids, found more");
      uint64_t v = 0;
      size_t pos = 0;
      try {
        v = std::stoull(tok, &pos);
      } catch (const std::exception&) {
        throw EdgeListError(lineno, "not a non-negative integer: '" + tok + "'");
      }
      if (pos != tok.size() || tok[0] == '-')
        throw EdgeListError(lineno, "not a non-negative integer: '" + tok + "'");
      if (v > std::numeric_limits<uint32_t>::max())
        throw EdgeListError(lineno, "id does not fit in 32 bits: " + tok);
      vals[got++] = v;
    }
    if (got == 0) continue;  // blank or comment-only line
    if (got != 2) throw EdgeListError(lineno, "expected 2 ids, found 1");
    rel.data.push_back(static_cast<uint32_t>(vals[0]));
    rel.data.push_back(static_cast<uint32_t>(vals[1]));
    if (undirected) {
      rel.data.push_back(static_cast<uint32_t>(vals[1]));
      rel.data.push_back(static_cast<uint32_t>(vals[0]));
    }
  }
  canonicalize(rel);
  return rel;
}

Relation load_edge_list_file(const std::string& path, const std::string& name, bool undirected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  return load_edge_list(in, name, undirected);
}

Relation make_edge_relation(const std::string& name,
                            const std::vector<std::pair<uint32_t, uint32_t>>& edges) {
  Relation rel;
  rel.name = name;
  rel.arity = 2;
  rel.data.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    rel.data.push_back(u);
    rel.data.push_back(v);
  }
  canonicalize(rel);
  return rel;
}

}  // namespace triejoin
