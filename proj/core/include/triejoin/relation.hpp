#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace triejoin {

/// A named relation: a canonical (sorted, duplicate-free) list of fixed-arity
/// tuples of 32-bit ids. Tuples are stored row-major in a flat array.
struct Relation {
  std::string name;
  uint32_t arity = 0;
  std::vector<uint32_t> data;  // size() == arity * tuple_count()

  size_t tuple_count() const { return arity == 0 ? 0 : data.size() / arity; }
  const uint32_t* tuple(size_t i) const { return data.data() + i * arity; }
};

struct EdgeListError : std::runtime_error {
  size_t line;
  EdgeListError(size_t line, const std::string& what)
      : std::runtime_error("edge list parse error at line " + std::to_string(line) + ": " + what),
        line(line) {}
};

/// Sort tuples lexicographically and drop duplicates, in place.
void canonicalize(Relation& rel);

/// Parse a whitespace-separated edge list: one "u v" pair per line, '#' starts
/// a comment, blank lines are skipped. Ids are non-negative and must fit in
/// 32 bits; they are used as-is (no remapping). With undirected=true each edge
/// is also inserted reversed. The result is canonical.
Relation load_edge_list(std::istream& in, const std::string& name, bool undirected = false);
Relation load_edge_list_file(const std::string& path, const std::string& name,
                             bool undirected = false);

/// Build an arity-2 relation from explicit pairs (test/bench convenience);
/// canonicalizes.
Relation make_edge_relation(const std::string& name,
                            const std::vector<std::pair<uint32_t, uint32_t>>& edges);

}  // namespace triejoin
