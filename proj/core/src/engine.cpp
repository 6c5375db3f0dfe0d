#include "triejoin/engine.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <string>

namespace triejoin {

LubResult lub(std::span<const uint32_t> values, uint32_t begin, uint32_t end, uint64_t target,
              uint64_t* reads) {
  uint32_t lo = begin, hi = end;
  while (lo < hi) {
    uint32_t mid = lo + (hi - lo) / 2;
    uint32_t v = values[mid];
    if (reads) (*reads)++;
    if (v == target) return {true, mid, v};
    if (v < target)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo == end) return {};
  uint32_t v = values[lo];
  if (reads) (*reads)++;
  return {true, lo, v};
}

MatchResult leapfrog_next(std::span<RangeCursor> ranges, uint64_t seed, RunStats* stats) {
  const size_t k = ranges.size();
  assert(k > 0);
  uint64_t cur = seed;
  size_t agree = 0;
  size_t i = 0;
  for (;;) {
    RangeCursor& rc = ranges[i];
    uint32_t from = std::max(rc.cursor, rc.begin);
    LubResult r = lub(rc.values, from, rc.end, cur, stats ? &stats->array_reads : nullptr);
    if (stats) stats->lub_calls++;
    if (!r.found) return {};
    rc.cursor = r.index;
    if (r.value != cur) {
      cur = r.value;
      agree = 0;
    }
    if (++agree == k) return {true, static_cast<uint32_t>(cur)};
    i = (i + 1) % k;
  }
}

void Frontier::adjust(uint32_t d, std::vector<Published> ranges) {
  reset(d);
  stack_.push_back({d, std::move(ranges)});
}

void Frontier::reset(uint32_t d) {
  while (!stack_.empty() && stack_.back().pos >= d) stack_.pop_back();
}

std::optional<ArrayRange> Frontier::active(uint32_t pos, uint32_t part) const {
  for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
    for (const Published& p : it->ranges)
      if (p.pos == pos && p.part == part) return p.range;
  return std::nullopt;
}

ExecPlan compile_exec(const QueryPlan& plan, const BoundTries& bound, const CacheStructure& cs) {
  ExecPlan x;
  x.plan = &plan;
  x.tries = bound.tries.data();
  x.trie_count = static_cast<uint32_t>(bound.tries.size());
  x.n = plan.var_count();
  x.positions.resize(x.n);
  x.entry_at.assign(x.n, -1);
  x.entry_ending_at.assign(x.n, -1);

  // (spec, level) -> (position, part slot), filled as positions are laid out.
  std::vector<std::vector<std::pair<int32_t, int32_t>>> where(plan.tries.size());
  for (size_t s = 0; s < plan.tries.size(); ++s)
    where[s].assign(plan.tries[s].perm.size(), {-1, -1});

  for (uint32_t d = 0; d < x.n; ++d) {
    auto& pos = x.positions[d];
    for (const TrieBinding& b : plan.at_position[d]) {
      ExecPlan::Part part;
      part.spec = b.spec;
      part.trie = bound.spec_to_trie[b.spec];
      part.level = b.level;
      if (b.level > 0) {
        auto [pp, ps] = where[b.spec][b.level - 1];
        if (pp < 0) throw std::invalid_argument("plan binds level " + std::to_string(b.level) +
                                                " before its parent level");
        part.parent_pos = pp;
        part.parent_part = ps;
        part.secondary = (static_cast<uint32_t>(pp) == d);
      }
      if (where[b.spec][b.level].first >= 0)
        throw std::invalid_argument("plan binds one trie level twice");
      where[b.spec][b.level] = {static_cast<int32_t>(d),
                                static_cast<int32_t>(pos.parts.size())};
      pos.parts.push_back(part);
    }
    if (pos.parts.empty())
      throw std::invalid_argument("join position without any trie binding");
    uint32_t primaries = 0;
    for (const auto& p : pos.parts)
      if (!p.secondary) primaries++;
    if (primaries == 0)
      throw std::invalid_argument("join position with only secondary bindings");
    pos.primary_count = primaries;
  }

  // Every level of every trie must be bound (consecutive-from-0 check).
  for (size_t s = 0; s < plan.tries.size(); ++s)
    for (size_t l = 0; l < plan.tries[s].perm.size(); ++l)
      if (where[s][l].first < 0) throw std::invalid_argument("unbound trie level in plan");

  // Back-fill child links.
  for (uint32_t d = 0; d < x.n; ++d)
    for (auto& p : x.positions[d].parts)
      if (p.level + 1 < bound.tries[p.trie].arity) {
        auto [cp, cs2] = where[p.spec][p.level + 1];
        p.child_pos = cp;
        p.child_part = cs2;
      }

  for (const CacheEntrySpec& e : cs.entries) {
    ExecPlan::Entry entry;
    entry.start = e.start;
    entry.end = e.end;
    entry.keys = e.keys;
    for (uint32_t q = e.start; q <= e.end; ++q)
      entry.group_words += 1 + static_cast<uint32_t>(x.positions[q].parts.size());
    int32_t id = static_cast<int32_t>(x.entries.size());
    x.entry_at[e.start] = id;
    x.entry_ending_at[e.end] = id;
    x.entries.push_back(std::move(entry));
  }
  return x;
}

namespace {

struct Frame {
  uint64_t seed = 0;
  uint32_t value = 0;
  std::vector<uint32_t> idx;        // per part: absolute index of the bound value
  std::vector<RangeCursor> ranges;  // per primary part, in part order
  PjrCache::SlotId slot = PjrCache::kRejected;
  const PjrEntry* serve = nullptr;  // owner frame of an entry currently served
  uint32_t serve_next = 0;
  int32_t serve_of = -1;  // owner position when inside a served span
};

class Runner {
 public:
  Runner(const ExecPlan& x, ResultSink& sink, PjrCache* cache, RunStats& st)
      : x_(x), sink_(sink), cache_(cache), st_(st) {
    frames_.resize(x.n);
    for (uint32_t d = 0; d < x.n; ++d) frames_[d].idx.resize(x.positions[d].parts.size());
    tuple_.resize(x.n);
    // The partition restriction applies to the first primary at position 0.
    for (uint32_t s = 0; s < x.positions[0].parts.size(); ++s)
      if (!x.positions[0].parts[s].secondary) {
        first_primary0_ = s;
        break;
      }
  }

  void run(uint32_t begin0, uint32_t end0) {
    restrict_begin_ = begin0;
    restrict_end_ = end0;
    frontier_.clear();
    enum class St { Enter, Probe, Return, Exit, Serve };
    St st = St::Enter;
    uint32_t d = 0;
    uint32_t owner = 0;  // serve owner position while st == Serve
    for (;;) {
      switch (st) {
        case St::Enter: {
          Frame& f = frames_[d];
          f.slot = PjrCache::kRejected;
          int32_t ei = x_.entry_at[d];
          if (ei >= 0 && cache_) {
            const auto& E = x_.entries[ei];
            key_buf_.clear();
            for (uint32_t k : E.keys) key_buf_.push_back(tuple_[k]);
            if (const PjrEntry* e = cache_->lookup(key_buf_)) {
              f.serve = e;
              f.serve_next = 0;
              for (uint32_t q = E.start; q <= E.end; ++q) frames_[q].serve_of = d;
              owner = d;
              st = St::Serve;
              break;
            }
            f.slot = cache_->begin_insert(key_buf_, std::span(tuple_.data(), d), E.group_words,
                                          E.end - E.start + 1);
          }
          assemble(d);
          f.seed = 0;
          st = St::Probe;
          break;
        }
        case St::Probe: {
          Frame& f = frames_[d];
          if (!match_at(d)) {
            st = St::Exit;
            break;
          }
          publish(d);
          if (d + 1 == x_.n) {
            sink_.emit(tuple_);
            st_.results_emitted++;
            maybe_append(d);
            f.seed = uint64_t(f.value) + 1;
            // stay in Probe at d
          } else {
            d++;
            st = St::Enter;
          }
          break;
        }
        case St::Return: {
          Frame& f = frames_[d];
          if (f.serve_of >= 0) {
            owner = static_cast<uint32_t>(f.serve_of);
            st = St::Serve;
            break;
          }
          maybe_append(d);
          f.seed = uint64_t(f.value) + 1;
          st = St::Probe;
          break;
        }
        case St::Exit: {
          frontier_.reset(d);
          Frame& f = frames_[d];
          if (f.slot != PjrCache::kRejected) {
            cache_->release(f.slot);
            f.slot = PjrCache::kRejected;
          }
          if (d == 0) return;
          d--;
          st = St::Return;
          break;
        }
        case St::Serve: {
          Frame& f = frames_[owner];
          const auto& E = x_.entries[x_.entry_at[owner]];
          if (f.serve_next >= f.serve->group_count()) {
            for (uint32_t q = E.start; q <= E.end; ++q) frames_[q].serve_of = -1;
            f.serve = nullptr;
            frontier_.reset(owner);
            if (owner == 0) return;
            d = owner - 1;
            st = St::Return;
            break;
          }
          const uint32_t* g = f.serve->group(f.serve_next++);
          size_t w = 0;
          for (uint32_t q = E.start; q <= E.end; ++q) {
            Frame& fq = frames_[q];
            fq.value = g[w++];
            tuple_[q] = fq.value;
            for (size_t s = 0; s < fq.idx.size(); ++s) fq.idx[s] = g[w++];
          }
          if (E.end + 1 == x_.n) {
            sink_.emit(tuple_);
            st_.results_emitted++;
            // stay in Serve
          } else {
            for (uint32_t q = E.start; q <= E.end; ++q) publish(q);
            d = E.end + 1;
            st = St::Enter;
          }
          break;
        }
      }
    }
  }

 private:
  std::span<const uint32_t> level_values(const ExecPlan::Part& p) const {
    return x_.trie(p.trie).levels[p.level].values;
  }

  void assemble(uint32_t d) {
    Frame& f = frames_[d];
    const auto& parts = x_.positions[d].parts;
    f.ranges.clear();
    for (uint32_t s = 0; s < parts.size(); ++s) {
      const auto& p = parts[s];
      if (p.secondary) continue;
      ArrayRange r;
      if (p.level == 0) {
        r = x_.trie(p.trie).full_range(p.trie);
        if (d == 0 && s == first_primary0_) {
          r.begin = std::min(r.end, std::max(r.begin, restrict_begin_));
          r.end = std::min(r.end, restrict_end_);
          if (r.end < r.begin) r.end = r.begin;
        }
      } else {
        auto act = frontier_.active(d, s);
        assert(act.has_value());
        r = *act;
      }
      f.ranges.push_back({level_values(p), r.begin, r.end, r.begin});
    }
  }

  bool match_at(uint32_t d) {
    Frame& f = frames_[d];
    const auto& parts = x_.positions[d].parts;
    for (;;) {
      MatchResult m = leapfrog_next(f.ranges, f.seed, &st_);
      if (!m.found) return false;
      const uint32_t a = m.value;
      bool ok = true;
      size_t pi = 0;
      for (size_t s = 0; s < parts.size() && ok; ++s) {
        const auto& p = parts[s];
        if (!p.secondary) {
          f.idx[s] = f.ranges[pi++].cursor;
          continue;
        }
        const TrieIndex& t = x_.trie(p.trie);
        ArrayRange r = t.child_range(p.level - 1, f.idx[p.parent_part], p.trie);
        st_.array_reads += 2;
        LubResult lr = lub(t.levels[p.level].values, r.begin, r.end, a, &st_.array_reads);
        st_.lub_calls++;
        if (!lr.found || lr.value != a)
          ok = false;
        else
          f.idx[s] = lr.index;
      }
      if (!ok) {
        f.seed = uint64_t(a) + 1;
        continue;
      }
      f.value = a;
      tuple_[d] = a;
      return true;
    }
  }

  // Push the child ranges opened by the values just bound at d (children at
  // strictly later positions; same-position children are secondary and are
  // matched against directly).
  void publish(uint32_t d) {
    const auto& parts = x_.positions[d].parts;
    Frame& f = frames_[d];
    std::vector<Frontier::Published> pub;
    for (uint32_t s = 0; s < parts.size(); ++s) {
      const auto& p = parts[s];
      if (p.child_pos < 0 || static_cast<uint32_t>(p.child_pos) == d) continue;
      ArrayRange r = x_.trie(p.trie).child_range(p.level, f.idx[s], p.trie);
      st_.array_reads += 2;
      pub.push_back({static_cast<uint32_t>(p.child_pos), static_cast<uint32_t>(p.child_part), r});
    }
    if (!pub.empty()) frontier_.adjust(d, std::move(pub));
  }

  void maybe_append(uint32_t d) {
    int32_t ei = x_.entry_ending_at[d];
    if (ei < 0 || !cache_) return;
    const auto& E = x_.entries[ei];
    Frame& owner = frames_[E.start];
    if (owner.slot == PjrCache::kRejected) return;
    group_buf_.clear();
    for (uint32_t q = E.start; q <= d; ++q) {
      const Frame& fq = frames_[q];
      group_buf_.push_back(fq.value);
      group_buf_.insert(group_buf_.end(), fq.idx.begin(), fq.idx.end());
    }
    cache_->append(owner.slot, std::span(tuple_.data(), E.start), group_buf_);
  }

  const ExecPlan& x_;
  ResultSink& sink_;
  PjrCache* cache_;
  RunStats& st_;
  std::vector<Frame> frames_;
  Frontier frontier_;
  std::vector<uint32_t> tuple_;
  std::vector<uint32_t> key_buf_;
  std::vector<uint32_t> group_buf_;
  uint32_t first_primary0_ = 0;
  uint32_t restrict_begin_ = 0;
  uint32_t restrict_end_ = 0;
};

}  // namespace

RunStats cached_trie_join(const ExecPlan& exec, ResultSink& sink, PjrCache* cache,
                          uint32_t partitions) {
  if (exec.n == 0) throw std::invalid_argument("empty join plan");
  RunStats st;
  uint64_t h0 = 0, m0 = 0, i0 = 0, o0 = 0, r0 = 0, c0 = 0;
  if (cache) {
    h0 = cache->hits();
    m0 = cache->misses();
    i0 = cache->insertions();
    o0 = cache->overflows();
    r0 = cache->rejects();
    c0 = cache->committed_records();
  }

  Runner runner(exec, sink, cache, st);
  uint32_t total = 0;
  {
    // Partition domain: the first primary trie's level-0 index range.
    const auto& parts0 = exec.positions[0].parts;
    for (const auto& p : parts0)
      if (!p.secondary) {
        total = exec.trie(p.trie).full_range().end;
        break;
      }
  }
  if (partitions == 0) partitions = 1;
  if (partitions == 1) {
    runner.run(0, total);
  } else {
    for (uint32_t i = 0; i < partitions; ++i) {
      uint32_t b = static_cast<uint32_t>(uint64_t(total) * i / partitions);
      uint32_t e = static_cast<uint32_t>(uint64_t(total) * (i + 1) / partitions);
      if (b < e) runner.run(b, e);
    }
  }

  if (cache) {
    st.cache_hits = cache->hits() - h0;
    st.cache_misses = cache->misses() - m0;
    st.cache_insertions = cache->insertions() - i0;
    st.cache_overflows = cache->overflows() - o0;
    st.cache_rejects = cache->rejects() - r0;
    st.intermediate_tuples = cache->committed_records() - c0;
  }
  return st;
}

}  // namespace triejoin
