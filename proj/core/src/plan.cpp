#include "triejoin/plan.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace triejoin {

QueryPlan plan_query(const Query& q, const std::map<std::string, uint32_t>& catalog) {
  QueryPlan plan;
  plan.query = q;
  plan.order = q.head;
  plan.at_position.resize(q.head.size());

  auto position_of = [&](const std::string& v) -> uint32_t {
    auto it = std::find(plan.order.begin(), plan.order.end(), v);
    if (it == plan.order.end())
      throw std::invalid_argument("body variable '" + v +
                                  "' is not in the head; only full-enumeration queries run");
    return static_cast<uint32_t>(it - plan.order.begin());
  };

  for (uint32_t ai = 0; ai < q.atoms.size(); ai++) {
    const Atom& a = q.atoms[ai];
    auto cat = catalog.find(a.relation);
    if (cat == catalog.end())
      throw std::invalid_argument("unknown relation: " + a.relation);
    if (cat->second != a.vars.size())
      throw std::invalid_argument("arity mismatch for " + a.relation + ": relation has " +
                                  std::to_string(cat->second) + " columns, atom binds " +
                                  std::to_string(a.vars.size()));

    // Level order: atom columns stably sorted by their variable's position in
    // the join order; repeated variables end up on adjacent levels.
    std::vector<uint32_t> cols(a.vars.size());
    std::iota(cols.begin(), cols.end(), 0);
    std::vector<uint32_t> pos(a.vars.size());
    for (size_t c = 0; c < a.vars.size(); c++) pos[c] = position_of(a.vars[c]);
    std::stable_sort(cols.begin(), cols.end(),
                     [&](uint32_t x, uint32_t y) { return pos[x] < pos[y]; });

    uint32_t spec_id = static_cast<uint32_t>(plan.tries.size());
    plan.tries.push_back(TrieSpec{a.relation, cols});
    for (uint32_t level = 0; level < cols.size(); level++)
      plan.at_position[pos[cols[level]]].push_back(TrieBinding{spec_id, level, ai, cols[level]});
  }

  // Keep each position's bindings in (atom, level) order so plans are stable.
  for (auto& binds : plan.at_position)
    std::stable_sort(binds.begin(), binds.end(), [](const TrieBinding& a, const TrieBinding& b) {
      return a.atom != b.atom ? a.atom < b.atom : a.level < b.level;
    });
  return plan;
}

BoundTries bind_tries(const QueryPlan& plan,
                      const std::map<std::string, const Relation*>& relations) {
  BoundTries out;
  out.spec_to_trie.resize(plan.tries.size());
  std::vector<std::pair<const Relation*, std::vector<uint32_t>>> built;
  for (size_t i = 0; i < plan.tries.size(); i++) {
    const TrieSpec& spec = plan.tries[i];
    auto rel = relations.find(spec.relation);
    if (rel == relations.end() || rel->second == nullptr)
      throw std::invalid_argument("no relation bound for " + spec.relation);
    std::pair<const Relation*, std::vector<uint32_t>> key{rel->second, spec.perm};
    auto it = std::find(built.begin(), built.end(), key);
    if (it == built.end()) {
      out.spec_to_trie[i] = static_cast<uint32_t>(out.tries.size());
      out.tries.push_back(build_trie(*rel->second, spec.perm));
      built.push_back(std::move(key));
    } else {
      out.spec_to_trie[i] = static_cast<uint32_t>(it - built.begin());
    }
  }
  return out;
}

namespace {

// Positions earlier than `start` sharing an atom with any position in
// [start..end].
std::vector<uint32_t> earlier_sharers(const QueryPlan& plan, uint32_t start, uint32_t end) {
  auto position_of = [&](const std::string& v) {
    return static_cast<uint32_t>(
        std::find(plan.order.begin(), plan.order.end(), v) - plan.order.begin());
  };
  std::vector<bool> in(plan.order.size(), false);
  for (const Atom& a : plan.query.atoms) {
    bool touches = false;
    for (const auto& v : a.vars) {
      uint32_t p = position_of(v);
      touches = touches || (p >= start && p <= end);
    }
    if (!touches) continue;
    for (const auto& v : a.vars) {
      uint32_t p = position_of(v);
      if (p < start) in[p] = true;
    }
  }
  std::vector<uint32_t> out;
  for (uint32_t p = 0; p < start; p++)
    if (in[p]) out.push_back(p);
  return out;
}

}  // namespace

CacheStructure derive_cache_structure(const QueryPlan& plan, bool maximal_ranges) {
  CacheStructure cs;
  const uint32_t n = plan.var_count();
  uint32_t covered = 0;  // first position not inside an accepted span
  for (uint32_t d = 1; d < n; d++) {
    if (d < covered) continue;
    // Grow the range while the earlier-sharer set stays a strict subset of
    // all d predecessors; the sharer set only grows with e, so stop at the
    // first violation.
    uint32_t best_e = d;
    bool valid = false;
    for (uint32_t e = d; e < n; e++) {
      if (earlier_sharers(plan, d, e).size() < d) {
        best_e = e;
        valid = true;
      } else {
        break;
      }
    }
    if (!valid) continue;
    CacheEntrySpec entry;
    entry.start = d;
    entry.end = maximal_ranges ? best_e : d;
    entry.keys = earlier_sharers(plan, d, best_e);
    cs.entries.push_back(std::move(entry));
    covered = best_e + 1;  // positions inside the maximal span never cache
  }
  return cs;
}

}  // namespace triejoin
