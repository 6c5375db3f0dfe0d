#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "triejoin/engine.hpp"
#include "triejoin/plan.hpp"
#include "triejoin/query.hpp"
#include "triejoin/relation.hpp"
#include "triejoin/sim/simulator.hpp"

namespace testutil {

using Rows = std::vector<std::vector<uint32_t>>;

inline std::vector<std::pair<uint32_t, uint32_t>> random_edges(uint64_t seed, uint32_t nodes,
                                                               uint32_t count) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<uint32_t> d(0, nodes - 1);
  std::set<std::pair<uint32_t, uint32_t>> es;
  const uint64_t cap = uint64_t(nodes) * nodes;
  while (es.size() < count && es.size() < cap) es.emplace(d(rng), d(rng));
  return {es.begin(), es.end()};
}

inline triejoin::Relation random_edge_relation(uint64_t seed, uint32_t nodes, uint32_t count,
                                               const std::string& name = "E") {
  return triejoin::make_edge_relation(name, random_edges(seed, nodes, count));
}

/// Bind every atom of q to the same relation object (shared-dataset setup,
/// the layout the physical-trie dedup expects).
inline std::map<std::string, const triejoin::Relation*> bind_all(const triejoin::Query& q,
                                                                 const triejoin::Relation& rel) {
  std::map<std::string, const triejoin::Relation*> m;
  for (const auto& a : q.atoms) m[a.relation] = &rel;
  return m;
}

/// Reference evaluation: scan atom tuple lists in nested loops, rejecting a
/// tuple the moment it disagrees with the bindings made so far. No indexes,
/// no ordering assumptions. Rows come back sorted.
class BruteForce {
 public:
  BruteForce(const triejoin::Query& q,
             const std::map<std::string, const triejoin::Relation*>& rels) {
    std::map<std::string, uint32_t> var_id;
    for (const auto& v : q.head) var_id.emplace(v, static_cast<uint32_t>(var_id.size()));
    bind_.assign(var_id.size(), -1);
    cols_.resize(q.atoms.size());
    first_.resize(q.atoms.size());
    rels_.resize(q.atoms.size());
    std::vector<bool> seen(var_id.size(), false);
    for (size_t a = 0; a < q.atoms.size(); ++a) {
      rels_[a] = rels.at(q.atoms[a].relation);
      for (const auto& v : q.atoms[a].vars) {
        uint32_t id = var_id.at(v);
        cols_[a].push_back(id);
        first_[a].push_back(!seen[id]);  // this column introduces the binding
        seen[id] = true;
      }
    }
  }

  Rows run() {
    out_.clear();
    rec(0);
    std::sort(out_.begin(), out_.end());
    return std::move(out_);
  }

 private:
  void rec(size_t ai) {
    if (ai == cols_.size()) {
      std::vector<uint32_t> row(bind_.size());
      for (size_t i = 0; i < bind_.size(); ++i) row[i] = static_cast<uint32_t>(bind_[i]);
      out_.push_back(std::move(row));
      return;
    }
    const triejoin::Relation& r = *rels_[ai];
    const auto& cols = cols_[ai];
    const auto& first = first_[ai];
    for (size_t t = 0; t < r.tuple_count(); ++t) {
      const uint32_t* tp = r.tuple(t);
      bool ok = true;
      size_t c = 0;
      for (; c < cols.size(); ++c) {
        int64_t& b = bind_[cols[c]];
        if (b < 0)
          b = tp[c];
        else if (b != tp[c]) {
          ok = false;
          break;
        }
      }
      if (ok) rec(ai + 1);
      // Clear exactly the bindings columns [0, c) of this atom introduced.
      const size_t applied = ok ? cols.size() : c;
      for (size_t u = 0; u < applied; ++u)
        if (first[u]) bind_[cols[u]] = -1;
    }
  }

  std::vector<const triejoin::Relation*> rels_;
  std::vector<std::vector<uint32_t>> cols_;
  std::vector<std::vector<bool>> first_;
  std::vector<int64_t> bind_;
  Rows out_;
};

inline Rows brute_force(const triejoin::Query& q,
                        const std::map<std::string, const triejoin::Relation*>& rels) {
  return BruteForce(q, rels).run();
}

/// Compiled query bundle; exec points into plan/bound, so instances are
/// pinned (no copies, no moves).
struct Compiled {
  triejoin::QueryPlan plan;
  triejoin::BoundTries bound;
  triejoin::CacheStructure cs;
  triejoin::ExecPlan exec;

  Compiled() = default;
  Compiled(const Compiled&) = delete;
  Compiled& operator=(const Compiled&) = delete;

  void build(const triejoin::Query& q,
             const std::map<std::string, const triejoin::Relation*>& rels,
             bool with_cache = true, bool maximal = false) {
    std::map<std::string, uint32_t> catalog;
    for (const auto& [name, rel] : rels) catalog[name] = rel->arity;
    plan = triejoin::plan_query(q, catalog);
    bound = triejoin::bind_tries(plan, rels);
    cs = with_cache ? triejoin::derive_cache_structure(plan, maximal) : triejoin::CacheStructure{};
    exec = triejoin::compile_exec(plan, bound, cs);
  }
};

inline Rows rows_of(const triejoin::VectorSink& sink) {
  Rows rows;
  rows.reserve(sink.count());
  for (size_t i = 0; i < sink.count(); ++i) {
    auto t = sink.tuple(i);
    rows.emplace_back(t.begin(), t.end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

struct RunOut {
  Rows rows;
  triejoin::RunStats stats;
};

inline RunOut run_ctj(const Compiled& c, triejoin::PjrCache* cache = nullptr,
                      uint32_t partitions = 1) {
  triejoin::VectorSink sink(c.exec.n);
  RunOut o;
  o.stats = triejoin::cached_trie_join(c.exec, sink, cache, partitions);
  o.rows = rows_of(sink);
  return o;
}

inline RunOut run_sim(const Compiled& c, const triejoin::sim::SimConfig& cfg,
                      const triejoin::sim::SimOptions& opt = {}) {
  triejoin::VectorSink sink(c.exec.n);
  RunOut o;
  o.stats = triejoin::sim::simulate(c.exec, cfg, sink, opt);
  o.rows = rows_of(sink);
  return o;
}

inline triejoin::sim::SimConfig sim_config(uint32_t threads, triejoin::sim::MtScheme scheme) {
  triejoin::sim::SimConfig cfg;
  cfg.threads = threads;
  cfg.scheme = scheme;
  return cfg;
}

}  // namespace testutil
