#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace triejoin {

/// One body atom: relation name applied to variables, e.g. R(x,y).
struct Atom {
  std::string relation;
  std::vector<std::string> vars;
};

/// A full-enumeration conjunctive query: head variable list plus body atoms.
struct Query {
  std::string name;
  std::vector<std::string> head;  // output order; also the join variable order
  std::vector<Atom> atoms;
};

struct QueryParseError : std::runtime_error {
  size_t pos;  // byte offset into the query text
  QueryParseError(size_t pos, const std::string& what)
      : std::runtime_error("query parse error at offset " + std::to_string(pos) + ": " + what),
        pos(pos) {}
};

/// Parse `name(v1,...,vk) = R(a,b), S(c,d), ... .` — identifiers are
/// [A-Za-z][A-Za-z0-9_]*, whitespace free-form, trailing '.' optional.
/// Guarantees every head variable appears in at least one atom.
Query parse_query(const std::string& text);

/// The five built-in benchmark queries (path3, path4, cycle3, cycle4,
/// clique4); throws std::invalid_argument for an unknown name.
Query builtin_query(const std::string& name);
std::vector<std::string> builtin_query_names();

}  // namespace triejoin
