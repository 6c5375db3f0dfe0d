#include "triejoin/sim/simulator.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "triejoin/pjr_cache.hpp"
#include "triejoin/sim/memory.hpp"

namespace triejoin::sim {

uint32_t cupid_thread_state_bytes(const ExecPlan& exec) {
  // Modeled footprint: thread header (root, position, restriction, phase)
  // plus per position: value + cache slot + serve bookkeeping + part indexes.
  uint32_t bytes = 24;
  for (const auto& pos : exec.positions)
    bytes += 28 + 4 * static_cast<uint32_t>(pos.parts.size());
  return bytes;
}

void validate_for_plan(const SimConfig& cfg, const ExecPlan& exec) {
  validate(cfg);
  uint64_t cupid_need = uint64_t(cfg.threads) * cupid_thread_state_bytes(exec);
  if (cupid_need > cfg.cupid_store_bytes) {
    std::ostringstream os;
    os << "config: " << cfg.threads << " threads need " << cupid_need
       << " bytes of Cupid thread state, store holds " << cfg.cupid_store_bytes;
    throw std::invalid_argument(os.str());
  }
  uint64_t unit_need = uint64_t(cfg.threads) * kUnitThreadStateBytes;
  if (unit_need > cfg.unit_store_bytes) {
    std::ostringstream os;
    os << "config: " << cfg.threads << " threads need " << unit_need
       << " bytes per unit thread store, store holds " << cfg.unit_store_bytes;
    throw std::invalid_argument(os.str());
  }
}

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Messages

enum MsgKind : uint8_t {
  kPjrResp,
  kRangeMsg,
  kLubResp,
  kMatchResp,
  kMatchReq,
  kLubReq,
  kMidReq,
  kPjrReq,
  kMemReq,
};

// Delivery priority for same-cycle events: responses unblock saved thread
// state and go first; cache responses first of all (documented scheduling
// choice for the decoupled cache flow).
uint32_t msg_priority(uint8_t kind) {
  switch (kind) {
    case kPjrResp: return 0;
    case kRangeMsg: return 2;
    case kLubResp: return 3;
    case kMatchResp: return 4;
    default: return 7;  // requests
  }
}

enum PjrOp : uint8_t { kPjrLookupOrBegin, kPjrReadGroup, kPjrAppend, kPjrRetain, kPjrRelease };
enum RangePurpose : uint8_t { kRangePrimary, kRangeSecondary };

struct SecSpec {
  uint32_t trie, level, parent_slot, part_slot;
};

/// One message struct for every edge in the system; each kind uses the
/// fields it needs. Kept flat so queue plumbing stays uniform.
struct Msg {
  uint8_t kind = 0;
  uint32_t thread = 0;

  // MatchReq
  uint32_t pos = 0;
  uint64_t seed = 0;
  uint32_t part_count = 0;
  uint32_t expect = 0;                    // primary ranges arriving via Midwife
  std::vector<uint32_t> prim_slots;       // primary ordinal -> part slot
  std::vector<uint32_t> direct_ordinals;  // level-0 ranges carried inline
  std::vector<ArrayRange> direct_ranges;
  std::vector<SecSpec> secs;

  // RangeMsg / LubReq / MidReq (range names the array; for MidReq range.level
  // is the parent level and `index` the parent's absolute index)
  ArrayRange range;
  uint8_t purpose = 0;
  uint32_t ordinal = 0;
  uint64_t target = 0;

  // LubResp / MatchResp
  bool found = false;
  uint32_t index = 0;
  uint32_t value = 0;
  bool more = false;
  std::vector<uint32_t> idx;

  // PjrReq / PjrResp
  uint8_t op = 0;
  std::vector<uint32_t> key;
  std::vector<uint32_t> path;
  std::vector<uint32_t> words;
  uint64_t slot = 0;
  uint32_t group_words = 0, records_per_group = 1, group_index = 0;
  bool hit = false;
  const PjrEntry* entry = nullptr;

  // MemReq; payloads carry the data resolved at issue time
  uint16_t issuer = 0;
  uint64_t addr = 0;
  uint32_t bytes = 0;
  bool is_write = false;
  uint64_t payload0 = 0, payload1 = 0;
};

const char* msg_kind_name(const Msg& m) {
  switch (m.kind) {
    case kPjrResp: return "PjrResp";
    case kRangeMsg: return "RangeResp";
    case kLubResp: return "LubResp";
    case kMatchResp: return "MatchResp";
    case kMatchReq: return "MatchReq";
    case kLubReq: return "LubReq";
    case kMidReq: return "MidwifeReq";
    case kPjrReq: return "PjrReq";
    case kMemReq: return m.is_write ? "MemWrite" : "MemRead";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Components and queues

enum Comp : uint16_t { kCupid, kMm, kLub, kMid, kPjr, kMem, kCompCount };

const char* comp_name(uint16_t c) {
  switch (c) {
    case kCupid: return "cupid";
    case kMm: return "matchmaker";
    case kLub: return "lub";
    case kMid: return "midwife";
    case kPjr: return "pjr";
    case kMem: return "memory";
  }
  return "?";
}

enum QueueId : uint8_t {
  kQMmReq,
  kQMmRange,
  kQLubReq,
  kQLubResp,
  kQMidReq,
  kQPjrReq,
  kQMemReq,
  kQCupidMatch,
  kQCupidPjr,
  kQueueCount
};

const char* queue_name(uint8_t q) {
  switch (q) {
    case kQMmReq: return "mm.req";
    case kQMmRange: return "mm.range";
    case kQLubReq: return "lub.req";
    case kQLubResp: return "lub.resp";
    case kQMidReq: return "mid.req";
    case kQPjrReq: return "pjr.req";
    case kQMemReq: return "mem.req";
    case kQCupidMatch: return "cupid.match";
    case kQCupidPjr: return "cupid.pjr";
  }
  return "?";
}

enum EvType : uint8_t { kEvArrival, kEvMemDone, kEvWakeup, kEvUnitWork };

struct Event {
  uint64_t time = 0;
  uint64_t key = 0;  // kind priority, or a perturbed hash under tie tests
  uint32_t thread = 0;
  uint64_t seq = 0;
  uint8_t type = 0;
  uint16_t comp = 0;
  uint8_t queue = 0;
  Msg msg;
};

// Min-heap order (time, key, thread, seq): the documented deterministic
// tie-break (kind priority, threadId, sequence number).
struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.key != b.key) return a.key > b.key;
    if (a.thread != b.thread) return a.thread > b.thread;
    return a.seq > b.seq;
  }
};

// ---------------------------------------------------------------------------
// The simulator

class Sim {
 public:
  Sim(const ExecPlan& x, const SimConfig& cfg, ResultSink& sink, const SimOptions& opt)
      : x_(x), cfg_(cfg), sink_(sink), opt_(opt), pjr_(cfg.pjr), mem_(cfg.mem) {
    build_address_map();
    resolve_depths();
    init_threads();
  }

  RunStats run();

 private:
  const ExecPlan& x_;
  const SimConfig& cfg_;
  ResultSink& sink_;
  const SimOptions& opt_;
  RunStats st_;
  PjrCache pjr_;
  MemoryModel mem_;
  std::ostream* trace_out_ = nullptr;
  uint64_t ops_ = 0;  // messages processed by any unit (energy proxy)

  // ----- address map: value/offset arrays laid out line-aligned
  struct ArrayAddr {
    uint64_t values = 0, offsets = 0;
  };
  std::vector<std::vector<ArrayAddr>> addr_;  // [trie][level]
  uint64_t result_base_ = 1ull << 28;
  uint64_t result_pos_ = 0;
  uint32_t wb_bytes_ = 0;  // Cupid write buffer fill

  void build_address_map() {
    addr_.resize(x_.trie_count);
    uint64_t cur = 4096;
    auto align = [&] { cur = (cur + 63) & ~63ull; };
    for (uint32_t t = 0; t < x_.trie_count; ++t) {
      const TrieIndex& trie = x_.trie(t);
      addr_[t].resize(trie.arity);
      for (uint32_t l = 0; l < trie.arity; ++l) {
        align();
        addr_[t][l].values = cur;
        cur += 4ull * trie.levels[l].values.size();
        align();
        addr_[t][l].offsets = cur;
        cur += 4ull * trie.levels[l].child_offsets.size();
      }
    }
  }

  // ----- events
  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
  uint64_t seq_ = 0;
  uint64_t now_ = 0;
  uint64_t max_time_ = 0;

  void schedule(uint64_t time, uint32_t prio, uint32_t thread, Event ev) {
    ev.time = time;
    ev.thread = thread;
    ev.seq = seq_++;
    ev.key = opt_.tie_perturb_seed ? splitmix64(opt_.tie_perturb_seed ^ ev.seq) : prio;
    events_.push(std::move(ev));
  }

  void trace(const Msg& m) {
    if (trace_out_) *trace_out_ << now_ << ' ' << msg_kind_name(m) << ' ' << m.thread << '\n';
  }

  // ----- bounded queues
  struct BQueue {
    uint32_t depth = 0;
    uint16_t consumer = 0;
    std::deque<Msg> q;
    uint32_t reserved = 0;         // arrivals in flight
    std::deque<uint16_t> stalled;  // senders waiting for one slot
    bool can_reserve() const { return q.size() + reserved < depth; }
  };
  BQueue queues_[kQueueCount];

  void resolve_depths() {
    auto dflt = [&](uint32_t v) { return v ? v : cfg_.threads; };
    queues_[kQMmReq] = {cfg_.queues.mm_req, kMm};
    queues_[kQMmRange] = {cfg_.queues.mm_range, kMm};
    queues_[kQLubReq] = {cfg_.queues.lub_req, kLub};
    queues_[kQLubResp] = {dflt(cfg_.queues.lub_resp), kMm};
    queues_[kQMidReq] = {cfg_.queues.mid_req, kMid};
    queues_[kQPjrReq] = {cfg_.queues.pjr_req, kPjr};
    queues_[kQMemReq] = {cfg_.queues.mem_req, kMem};
    queues_[kQCupidMatch] = {dflt(cfg_.queues.cupid_match), kCupid};
    queues_[kQCupidPjr] = {dflt(cfg_.queues.cupid_pjr), kCupid};
  }

  // ----- components
  struct Component {
    uint32_t units = 1;
    std::deque<std::pair<uint8_t, Msg>> outbox;  // (queue, msg), FIFO
    bool stalled = false;                        // head waiting for queue space
    std::deque<Msg> resume;                      // memory completions
    uint64_t work_at = UINT64_MAX;               // dedupe for UnitWork events
  };
  Component comps_[kCompCount];

  void poke(uint16_t c) {
    uint64_t t = now_ + 1;
    if (comps_[c].work_at <= t) return;
    comps_[c].work_at = t;
    Event ev;
    ev.type = kEvUnitWork;
    ev.comp = c;
    schedule(t, 9, 0, std::move(ev));
  }

  void send(uint16_t from, uint8_t qid, Msg msg) {
    comps_[from].outbox.emplace_back(qid, std::move(msg));
  }

  // Move the outbox head into its queue; false + stall registration when the
  // queue has no free slot (head-of-line blocking by design).
  bool pump_one(uint16_t c) {
    auto& comp = comps_[c];
    if (comp.outbox.empty()) return false;
    uint8_t qid = comp.outbox.front().first;
    BQueue& q = queues_[qid];
    if (!q.can_reserve()) {
      if (!comp.stalled) {
        comp.stalled = true;
        q.stalled.push_back(c);
      }
      return false;
    }
    q.reserved++;
    Event ev;
    ev.type = kEvArrival;
    ev.queue = qid;
    ev.msg = std::move(comp.outbox.front().second);
    uint32_t prio = msg_priority(ev.msg.kind);
    uint32_t thread = ev.msg.thread;
    comp.outbox.pop_front();
    schedule(now_ + 1, prio, thread, std::move(ev));
    return true;
  }

  void wake_one(BQueue& q) {
    if (q.stalled.empty()) return;
    uint16_t waiter = q.stalled.front();
    q.stalled.pop_front();
    comps_[waiter].stalled = false;
    Event ev;
    ev.type = kEvWakeup;
    ev.comp = waiter;
    schedule(now_ + 1, 5, 0, std::move(ev));
  }

  void pop_queue(uint8_t qid, Msg& out) {
    BQueue& q = queues_[qid];
    out = std::move(q.q.front());
    q.q.pop_front();
    wake_one(q);
  }

  void issue_mem_read(uint16_t issuer, Msg m) {
    m.kind = kMemReq;
    m.is_write = false;
    m.issuer = issuer;
    send(issuer, kQMemReq, std::move(m));
  }

  void store_access(const char* comp) {
    st_.per_store_accesses[comp]++;
    ops_++;
  }

  // ------------------------------------------------------------------
  // Cupid: whole-query control, one context per hardware thread slot.

  struct CFrame {
    uint32_t value = 0;
    std::vector<uint32_t> idx;  // per part slot
    uint64_t slot = PjrCache::kRejected;
    bool handed_off = false;    // rest of this position given to a child
    const PjrEntry* serve = nullptr;
    uint32_t serve_next = 0;
    int32_t serve_of = -1;      // owner position when inside a served span
  };
  enum class Phase : uint8_t { kIdle, kWaitMatch, kWaitPjr, kWaitServe };
  struct CThread {
    bool alive = false;
    uint32_t root = 0;  // shallowest position this thread owns
    uint32_t d = 0;
    uint32_t begin0 = 0, end0 = 0;  // first-position index restriction
    uint64_t start_seed = 0;
    Phase phase = Phase::kIdle;
    std::vector<CFrame> frames;
  };
  std::vector<CThread> threads_;
  std::vector<uint32_t> free_slots_;
  std::deque<uint32_t> ctl_;  // threads waiting to start
  uint32_t live_ = 0;
  uint32_t live_high_ = 0;
  bool done_written_ = false;
  uint32_t pos0_total_ = 0;  // first primary's level-0 size
  std::vector<uint32_t> tuple_buf_;

  void init_threads() {
    threads_.resize(cfg_.threads);
    for (auto& t : threads_) {
      t.frames.resize(x_.n);
      for (uint32_t i = 0; i < x_.n; ++i)
        t.frames[i].idx.resize(x_.positions[i].parts.size());
    }
    for (uint32_t i = cfg_.threads; i-- > 0;) free_slots_.push_back(i);

    for (const auto& p : x_.positions[0].parts)
      if (!p.secondary) {
        pos0_total_ = x_.trie(p.trie).full_range().end;
        break;
      }

    uint32_t seeds = 1;
    if (cfg_.scheme == MtScheme::kStatic) seeds = cfg_.threads;
    if (cfg_.scheme == MtScheme::kHybrid)
      seeds = std::min(cfg_.threads, cfg_.resolved_hybrid_seeds());
    for (uint32_t i = 0; i < seeds; ++i) {
      uint32_t id = free_slots_.back();
      free_slots_.pop_back();
      CThread& th = threads_[id];
      th.alive = true;
      th.root = 0;
      th.d = 0;
      th.begin0 = static_cast<uint32_t>(uint64_t(pos0_total_) * i / seeds);
      th.end0 = static_cast<uint32_t>(uint64_t(pos0_total_) * (i + 1) / seeds);
      th.start_seed = 0;
      ctl_.push_back(id);
      live_++;
      st_.threads_spawned++;
    }
    live_high_ = live_;
  }

  void cupid_enter(uint32_t tid, uint32_t d) {
    CThread& th = threads_[tid];
    th.d = d;
    CFrame& f = th.frames[d];
    f.slot = PjrCache::kRejected;
    f.handed_off = false;
    f.serve = nullptr;
    f.serve_of = -1;
    int32_t ei = x_.entry_at[d];
    if (ei >= 0 && cfg_.pjr_enabled) {
      // Single atomic cache round trip: a hit serves the entry, a miss opens
      // an insertion slot under the same bank access.
      const auto& E = x_.entries[ei];
      Msg m;
      m.kind = kPjrReq;
      m.op = kPjrLookupOrBegin;
      m.thread = tid;
      for (uint32_t k : E.keys) m.key.push_back(th.frames[k].value);
      for (uint32_t q = 0; q < E.start; ++q) m.path.push_back(th.frames[q].value);
      m.group_words = E.group_words;
      m.records_per_group = E.end - E.start + 1;
      send(kCupid, kQPjrReq, std::move(m));
      th.phase = Phase::kWaitPjr;
      return;
    }
    cupid_probe(tid, d, 0);
  }

  void cupid_probe(uint32_t tid, uint32_t d, uint64_t seed) {
    CThread& th = threads_[tid];
    th.d = d;
    th.phase = Phase::kWaitMatch;
    const auto& parts = x_.positions[d].parts;

    Msg req;
    req.kind = kMatchReq;
    req.thread = tid;
    req.pos = d;
    req.seed = seed;
    req.part_count = static_cast<uint32_t>(parts.size());

    std::vector<Msg> mids;
    uint32_t ordinal = 0;
    for (uint32_t s = 0; s < parts.size(); ++s) {
      const auto& p = parts[s];
      if (p.secondary) {
        req.secs.push_back({p.trie, p.level, static_cast<uint32_t>(p.parent_part), s});
        continue;
      }
      req.prim_slots.push_back(s);
      if (p.level == 0) {
        ArrayRange r = x_.trie(p.trie).full_range(p.trie);
        if (d == 0 && ordinal == 0) {
          r.begin = std::max(r.begin, th.begin0);
          r.end = std::min(r.end, th.end0);
          if (r.end < r.begin) r.end = r.begin;
        }
        req.direct_ordinals.push_back(ordinal);
        req.direct_ranges.push_back(r);
      } else {
        Msg m;
        m.kind = kMidReq;
        m.thread = tid;
        m.purpose = kRangePrimary;
        m.ordinal = ordinal;
        m.range.trie = p.trie;
        m.range.level = p.level - 1;  // parent level
        m.index = th.frames[p.parent_pos].idx[p.parent_part];
        mids.push_back(std::move(m));
        req.expect++;
      }
      ordinal++;
    }
    send(kCupid, kQMmReq, std::move(req));
    for (auto& m : mids) send(kCupid, kQMidReq, std::move(m));
  }

  void cupid_emit(uint32_t tid) {
    CThread& th = threads_[tid];
    tuple_buf_.clear();
    for (uint32_t q = 0; q < x_.n; ++q) tuple_buf_.push_back(th.frames[q].value);
    sink_.emit(tuple_buf_);
    st_.results_emitted++;
    // Results stream through a write buffer; only full cache lines leave.
    wb_bytes_ += 4 * x_.n;
    while (wb_bytes_ >= cfg_.mem.line_bytes) {
      Msg w;
      w.kind = kMemReq;
      w.is_write = true;
      w.thread = tid;
      w.addr = result_base_ + result_pos_;
      w.bytes = cfg_.mem.line_bytes;
      send(kCupid, kQMemReq, std::move(w));
      result_pos_ += cfg_.mem.line_bytes;
      wb_bytes_ -= cfg_.mem.line_bytes;
    }
  }

  void cupid_maybe_append(uint32_t tid, uint32_t d) {
    int32_t ei = x_.entry_ending_at[d];
    if (ei < 0 || !cfg_.pjr_enabled) return;
    const auto& E = x_.entries[ei];
    CThread& th = threads_[tid];
    uint64_t slot = th.frames[E.start].slot;
    if (slot == PjrCache::kRejected) return;
    Msg m;
    m.kind = kPjrReq;
    m.op = kPjrAppend;
    m.thread = tid;
    m.slot = slot;
    for (uint32_t q = 0; q < E.start; ++q) m.path.push_back(th.frames[q].value);
    for (uint32_t q = E.start; q <= d; ++q) {
      const CFrame& f = th.frames[q];
      m.words.push_back(f.value);
      m.words.insert(m.words.end(), f.idx.begin(), f.idx.end());
    }
    send(kCupid, kQPjrReq, std::move(m));
  }

  // Split the search space: the child takes everything after the current
  // match at position d, the parent keeps the match itself.
  void do_spawn(uint32_t tid, uint32_t d, uint32_t match_value) {
    if (free_slots_.empty()) return;  // Denied: pool saturated
    CThread& parent = threads_[tid];
    uint32_t cid = free_slots_.back();
    free_slots_.pop_back();
    CThread& child = threads_[cid];
    child.alive = true;
    child.root = d;
    child.d = d;
    child.begin0 = parent.begin0;
    child.end0 = parent.end0;
    child.start_seed = uint64_t(match_value) + 1;
    child.phase = Phase::kIdle;
    for (uint32_t q = 0; q < x_.n; ++q) {
      CFrame& cf = child.frames[q];
      cf.value = parent.frames[q].value;
      cf.idx = parent.frames[q].idx;
      cf.slot = parent.frames[q].slot;
      cf.handed_off = false;
      cf.serve = nullptr;
      cf.serve_of = -1;
    }
    // Keep every open insertion slot whose span contains the split point
    // alive until the child is done with it too.
    if (cfg_.pjr_enabled)
      for (const auto& E : x_.entries) {
        if (!(E.start <= d && d <= E.end)) continue;
        uint64_t slot = parent.frames[E.start].slot;
        if (slot == PjrCache::kRejected) continue;
        Msg m;
        m.kind = kPjrReq;
        m.op = kPjrRetain;
        m.thread = cid;
        m.slot = slot;
        send(kCupid, kQPjrReq, std::move(m));
      }
    parent.frames[d].handed_off = true;
    live_++;
    live_high_ = std::max(live_high_, live_);
    st_.threads_spawned++;
    ctl_.push_back(cid);
  }

  void cupid_release(uint32_t tid, uint64_t slot) {
    Msg m;
    m.kind = kPjrReq;
    m.op = kPjrRelease;
    m.thread = tid;
    m.slot = slot;
    send(kCupid, kQPjrReq, std::move(m));
  }

  void cupid_death(uint32_t tid) {
    CThread& th = threads_[tid];
    if (cfg_.pjr_enabled)
      for (const auto& E : x_.entries) {
        if (!(E.start <= th.root && th.root <= E.end)) continue;
        uint64_t& slot = th.frames[E.start].slot;
        if (slot == PjrCache::kRejected) continue;
        cupid_release(tid, slot);
        slot = PjrCache::kRejected;
      }
    th.alive = false;
    th.phase = Phase::kIdle;
    free_slots_.push_back(tid);
    live_--;
    if (live_ == 0) {
      if (wb_bytes_ > 0) {
        Msg w;
        w.kind = kMemReq;
        w.is_write = true;
        w.thread = tid;
        w.addr = result_base_ + result_pos_;
        w.bytes = wb_bytes_;
        send(kCupid, kQMemReq, std::move(w));
        result_pos_ += wb_bytes_;
        wb_bytes_ = 0;
      }
      Msg done;  // DONE token terminates the result stream
      done.kind = kMemReq;
      done.is_write = true;
      done.thread = tid;
      done.addr = result_base_ + result_pos_;
      done.bytes = 8;
      send(kCupid, kQMemReq, std::move(done));
      done_written_ = true;
    }
  }

  void cupid_exit(uint32_t tid, uint32_t d) {
    CThread& th = threads_[tid];
    if (d == th.root) {
      cupid_death(tid);
      return;
    }
    CFrame& f = th.frames[d];
    if (f.slot != PjrCache::kRejected) {
      cupid_release(tid, f.slot);
      f.slot = PjrCache::kRejected;
    }
    cupid_return(tid, d - 1);
  }

  void cupid_return(uint32_t tid, uint32_t d) {
    CThread& th = threads_[tid];
    CFrame& f = th.frames[d];
    if (f.serve_of >= 0) {
      serve_continue(tid, static_cast<uint32_t>(f.serve_of));
      return;
    }
    cupid_maybe_append(tid, d);
    if (f.handed_off) {
      cupid_exit(tid, d);  // a child owns the rest of this position
      return;
    }
    cupid_probe(tid, d, uint64_t(f.value) + 1);
  }

  void serve_continue(uint32_t tid, uint32_t owner) {
    CThread& th = threads_[tid];
    CFrame& f = th.frames[owner];
    const auto& E = x_.entries[x_.entry_at[owner]];
    if (f.serve_next >= f.serve->group_count()) {
      for (uint32_t q = E.start; q <= E.end; ++q) th.frames[q].serve_of = -1;
      f.serve = nullptr;
      if (owner == th.root) {
        cupid_death(tid);
        return;
      }
      cupid_return(tid, owner - 1);
      return;
    }
    Msg m;
    m.kind = kPjrReq;
    m.op = kPjrReadGroup;
    m.thread = tid;
    m.entry = f.serve;
    m.group_index = f.serve_next;
    send(kCupid, kQPjrReq, std::move(m));
    th.d = owner;
    th.phase = Phase::kWaitServe;
  }

  void cupid_handle_pjr(Msg& m) {
    uint32_t tid = m.thread;
    CThread& th = threads_[tid];
    if (m.op == kPjrLookupOrBegin) {
      assert(th.phase == Phase::kWaitPjr);
      uint32_t d = th.d;
      if (m.hit) {
        CFrame& f = th.frames[d];
        f.serve = m.entry;
        f.serve_next = 0;
        const auto& E = x_.entries[x_.entry_at[d]];
        for (uint32_t q = E.start; q <= E.end; ++q)
          th.frames[q].serve_of = static_cast<int32_t>(d);
        serve_continue(tid, d);
      } else {
        th.frames[d].slot = m.slot;  // may be kRejected: run uncached
        cupid_probe(tid, d, 0);
      }
      return;
    }
    assert(m.op == kPjrReadGroup && th.phase == Phase::kWaitServe);
    uint32_t owner = th.d;
    CFrame& f = th.frames[owner];
    const auto& E = x_.entries[x_.entry_at[owner]];
    f.serve_next++;
    size_t w = 0;
    for (uint32_t q = E.start; q <= E.end; ++q) {
      CFrame& fq = th.frames[q];
      fq.value = m.words[w++];
      for (size_t s = 0; s < fq.idx.size(); ++s) fq.idx[s] = m.words[w++];
    }
    if (E.end + 1 == x_.n) {
      cupid_emit(tid);
      serve_continue(tid, owner);
    } else {
      cupid_enter(tid, E.end + 1);
    }
  }

  void cupid_handle_match(Msg& m) {
    uint32_t tid = m.thread;
    CThread& th = threads_[tid];
    assert(th.phase == Phase::kWaitMatch);
    uint32_t d = th.d;
    if (!m.found) {
      cupid_exit(tid, d);
      return;
    }
    CFrame& f = th.frames[d];
    f.value = m.value;
    f.idx = m.idx;
    if (cfg_.scheme != MtScheme::kStatic && d + 1 < x_.n && m.more) do_spawn(tid, d, m.value);
    if (d + 1 == x_.n) {
      cupid_emit(tid);
      cupid_maybe_append(tid, d);
      cupid_probe(tid, d, uint64_t(m.value) + 1);
    } else {
      cupid_enter(tid, d + 1);
    }
  }

  void cupid_step() {
    if (!queues_[kQCupidPjr].q.empty()) {
      Msg m;
      pop_queue(kQCupidPjr, m);
      trace(m);
      store_access("cupid");
      cupid_handle_pjr(m);
      return;
    }
    if (!queues_[kQCupidMatch].q.empty()) {
      Msg m;
      pop_queue(kQCupidMatch, m);
      trace(m);
      store_access("cupid");
      cupid_handle_match(m);
      return;
    }
    if (!ctl_.empty()) {
      uint32_t tid = ctl_.front();
      ctl_.pop_front();
      store_access("cupid");
      CThread& th = threads_[tid];
      if (th.root == 0 && th.start_seed == 0)
        cupid_enter(tid, 0);
      else
        cupid_probe(tid, th.root, th.start_seed);
    }
  }

  // ------------------------------------------------------------------
  // MatchMaker: per-thread leapfrog over the ranges at one position,
  // alternating LUB requests round-robin, then repeated-variable checks.

  struct MmState {
    bool active = false;
    uint64_t seed = 0;
    uint32_t part_count = 0;
    uint32_t k = 0;  // primary count
    uint32_t got = 0;
    std::vector<uint32_t> prim_slots;
    std::vector<ArrayRange> ranges;  // by primary ordinal
    std::vector<SecSpec> secs;
    std::vector<std::pair<uint32_t, ArrayRange>> early;  // ranges before the req
    // leapfrog
    uint64_t cur = 0;
    uint32_t agree = 0, i = 0;
    std::vector<uint32_t> idx;  // by part slot
    uint32_t a = 0;             // candidate value
    uint32_t sec_i = 0;
  };
  std::vector<MmState> mm_;

  void mm_fail(uint32_t tid) {
    Msg r;
    r.kind = kMatchResp;
    r.thread = tid;
    r.found = false;
    send(kMm, kQCupidMatch, std::move(r));
    mm_[tid].active = false;
  }

  void mm_succeed(uint32_t tid) {
    MmState& s = mm_[tid];
    Msg r;
    r.kind = kMatchResp;
    r.thread = tid;
    r.found = true;
    r.value = s.a;
    r.idx = s.idx;
    r.more = s.idx[s.prim_slots[0]] + 1 < s.ranges[0].end;
    send(kMm, kQCupidMatch, std::move(r));
    s.active = false;
  }

  void mm_lub(uint32_t tid, const ArrayRange& r, uint64_t target, uint8_t purpose) {
    Msg m;
    m.kind = kLubReq;
    m.thread = tid;
    m.range = r;
    m.target = target;
    m.purpose = purpose;
    st_.lub_calls++;
    send(kMm, kQLubReq, std::move(m));
  }

  void mm_check_secondary(uint32_t tid) {
    MmState& s = mm_[tid];
    const SecSpec& sec = s.secs[s.sec_i];
    Msg m;
    m.kind = kMidReq;
    m.thread = tid;
    m.purpose = kRangeSecondary;
    m.range.trie = sec.trie;
    m.range.level = sec.level - 1;
    m.index = s.idx[sec.parent_slot];
    send(kMm, kQMidReq, std::move(m));
  }

  void mm_start_leapfrog(uint32_t tid) {
    MmState& s = mm_[tid];
    for (const ArrayRange& r : s.ranges)
      if (r.empty()) {
        mm_fail(tid);
        return;
      }
    s.cur = s.seed;
    s.agree = 0;
    s.i = 0;
    mm_lub(tid, s.ranges[0], s.cur, kRangePrimary);
  }

  void mm_restart_candidate(uint32_t tid) {
    MmState& s = mm_[tid];
    s.cur = uint64_t(s.a) + 1;
    s.agree = 0;
    s.i = 0;
    mm_lub(tid, s.ranges[0], s.cur, kRangePrimary);
  }

  void mm_handle_req(Msg& m) {
    MmState& s = mm_[m.thread];
    assert(!s.active);
    auto early = std::move(s.early);
    s = MmState{};
    s.active = true;
    s.seed = m.seed;
    s.part_count = m.part_count;
    s.prim_slots = std::move(m.prim_slots);
    s.k = static_cast<uint32_t>(s.prim_slots.size());
    s.secs = std::move(m.secs);
    s.ranges.resize(s.k);
    s.idx.assign(s.part_count, 0);
    for (size_t j = 0; j < m.direct_ordinals.size(); ++j) {
      s.ranges[m.direct_ordinals[j]] = m.direct_ranges[j];
      s.got++;
    }
    for (auto& [ord, r] : early) {
      s.ranges[ord] = r;
      s.got++;
    }
    if (s.got == s.k) mm_start_leapfrog(m.thread);
  }

  void mm_handle_range(Msg& m) {
    MmState& s = mm_[m.thread];
    if (m.purpose == kRangePrimary) {
      if (!s.active) {
        // Midwife outran the match request (separate queues); hold the range.
        s.early.emplace_back(m.ordinal, m.range);
        return;
      }
      s.ranges[m.ordinal] = m.range;
      s.got++;
      if (s.got == s.k) mm_start_leapfrog(m.thread);
      return;
    }
    assert(s.active);
    // Secondary child range: the candidate must appear inside it.
    if (m.range.empty()) {
      mm_restart_candidate(m.thread);
      return;
    }
    mm_lub(m.thread, m.range, s.a, kRangeSecondary);
  }

  void mm_handle_lub(Msg& m) {
    uint32_t tid = m.thread;
    MmState& s = mm_[tid];
    assert(s.active);
    if (m.purpose == kRangeSecondary) {
      if (!m.found || m.value != s.a) {
        mm_restart_candidate(tid);
        return;
      }
      s.idx[s.secs[s.sec_i].part_slot] = m.index;
      s.sec_i++;
      if (s.sec_i < s.secs.size())
        mm_check_secondary(tid);
      else
        mm_succeed(tid);
      return;
    }
    if (!m.found) {
      mm_fail(tid);
      return;
    }
    s.idx[s.prim_slots[s.i]] = m.index;
    if (m.value != s.cur) {
      s.cur = m.value;
      s.agree = 0;
    }
    if (++s.agree == s.k) {
      s.a = static_cast<uint32_t>(s.cur);
      if (!s.secs.empty()) {
        s.sec_i = 0;
        mm_check_secondary(tid);
      } else {
        mm_succeed(tid);
      }
      return;
    }
    s.i = (s.i + 1) % s.k;
    mm_lub(tid, s.ranges[s.i], s.cur, kRangePrimary);
  }

  void mm_step() {
    if (!queues_[kQLubResp].q.empty()) {
      Msg m;
      pop_queue(kQLubResp, m);
      trace(m);
      store_access("matchmaker");
      mm_handle_lub(m);
      return;
    }
    if (!queues_[kQMmRange].q.empty()) {
      Msg m;
      pop_queue(kQMmRange, m);
      trace(m);
      store_access("matchmaker");
      mm_handle_range(m);
      return;
    }
    if (!queues_[kQMmReq].q.empty()) {
      Msg m;
      pop_queue(kQMmReq, m);
      trace(m);
      store_access("matchmaker");
      mm_handle_req(m);
      return;
    }
  }

  // ------------------------------------------------------------------
  // LUB units: halving binary search, one element read per memory round
  // trip, equality early-out, one final read when the window closes.

  struct LubState {
    bool active = false;
    ArrayRange range;
    uint64_t target = 0;
    uint32_t lo = 0, hi = 0, mid = 0;
    bool final_read = false;
    uint8_t purpose = 0;
  };
  std::vector<LubState> lub_;

  void lub_respond(uint32_t tid, bool found, uint32_t index, uint32_t value) {
    LubState& s = lub_[tid];
    Msg r;
    r.kind = kLubResp;
    r.thread = tid;
    r.found = found;
    r.index = index;
    r.value = value;
    r.purpose = s.purpose;
    send(kLub, kQLubResp, std::move(r));
    s.active = false;
  }

  void lub_probe(uint32_t tid) {
    LubState& s = lub_[tid];
    if (s.lo < s.hi) {
      s.mid = s.lo + (s.hi - s.lo) / 2;
      s.final_read = false;
    } else if (s.lo == s.range.end) {
      lub_respond(tid, false, 0, 0);
      return;
    } else {
      s.mid = s.lo;
      s.final_read = true;
    }
    Msg m;
    m.thread = tid;
    m.addr = addr_[s.range.trie][s.range.level].values + 4ull * s.mid;
    m.bytes = 4;
    m.payload0 = x_.trie(s.range.trie).levels[s.range.level].values[s.mid];
    st_.array_reads++;
    issue_mem_read(kLub, std::move(m));
  }

  void lub_handle_req(Msg& m) {
    store_access("lub");
    LubState& s = lub_[m.thread];
    assert(!s.active);
    s.active = true;
    s.range = m.range;
    s.target = m.target;
    s.purpose = m.purpose;
    s.lo = m.range.begin;
    s.hi = m.range.end;
    if (s.range.empty()) {
      lub_respond(m.thread, false, 0, 0);
      return;
    }
    lub_probe(m.thread);
  }

  void lub_handle_mem(Msg& m) {
    store_access("lub");
    LubState& s = lub_[m.thread];
    assert(s.active);
    uint32_t v = static_cast<uint32_t>(m.payload0);
    if (s.final_read || v == s.target) {
      lub_respond(m.thread, true, s.mid, v);
      return;
    }
    if (v < s.target)
      s.lo = s.mid + 1;
    else
      s.hi = s.mid;
    lub_probe(m.thread);
  }

  // ------------------------------------------------------------------
  // Midwife units: one 8-byte read covering offsets[i] and offsets[i+1],
  // then the child range answer. Stateless: context rides through memory.

  void mid_handle_req(Msg& m) {
    store_access("midwife");
    const auto& offs = x_.trie(m.range.trie).levels[m.range.level + 1].child_offsets;
    Msg rd;
    rd.thread = m.thread;
    rd.purpose = m.purpose;
    rd.ordinal = m.ordinal;
    rd.range = m.range;
    rd.addr = addr_[m.range.trie][m.range.level + 1].offsets + 4ull * m.index;
    rd.bytes = 8;
    rd.payload0 = offs[m.index];
    rd.payload1 = offs[m.index + 1];
    st_.array_reads += 2;
    issue_mem_read(kMid, std::move(rd));
  }

  void mid_handle_mem(Msg& m) {
    store_access("midwife");
    Msg r;
    r.kind = kRangeMsg;
    r.thread = m.thread;
    r.purpose = m.purpose;
    r.ordinal = m.ordinal;
    r.range = {m.range.trie, m.range.level + 1, static_cast<uint32_t>(m.payload0),
               static_cast<uint32_t>(m.payload1)};
    send(kMid, kQMmRange, std::move(r));
  }

  // ------------------------------------------------------------------
  // PJR: banked; one op per distinct bank per cycle, same-bank serialized.
  // Visibility rules (two-phase insertion) live in the functional cache.

  std::unordered_map<uint64_t, uint32_t> slot_bank_;

  uint32_t pjr_bank(const Msg& m) {
    switch (m.op) {
      case kPjrLookupOrBegin: return pjr_.bank_of(m.key);
      case kPjrReadGroup: return pjr_.bank_of(m.entry->key);
      default: {
        auto it = slot_bank_.find(m.slot);
        return it == slot_bank_.end() ? 0 : it->second;
      }
    }
  }

  void pjr_process(Msg& m) {
    store_access("pjr");
    switch (m.op) {
      case kPjrLookupOrBegin: {
        Msg r;
        r.kind = kPjrResp;
        r.op = kPjrLookupOrBegin;
        r.thread = m.thread;
        if (const PjrEntry* e = pjr_.lookup(m.key)) {
          r.hit = true;
          r.entry = e;
        } else {
          r.slot = pjr_.begin_insert(m.key, m.path, m.group_words, m.records_per_group);
          if (r.slot != PjrCache::kRejected) slot_bank_[r.slot] = pjr_.bank_of(m.key);
        }
        send(kPjr, kQCupidPjr, std::move(r));
        break;
      }
      case kPjrReadGroup: {
        Msg r;
        r.kind = kPjrResp;
        r.op = kPjrReadGroup;
        r.thread = m.thread;
        const uint32_t* g = m.entry->group(m.group_index);
        r.words.assign(g, g + m.entry->group_words);
        r.group_index = m.group_index;
        send(kPjr, kQCupidPjr, std::move(r));
        break;
      }
      case kPjrAppend:
        pjr_.append(m.slot, m.path, m.words);
        break;
      case kPjrRetain:
        pjr_.retain(m.slot);
        break;
      case kPjrRelease:
        pjr_.release(m.slot);
        break;
    }
  }

  void pjr_step() {
    BQueue& q = queues_[kQPjrReq];
    std::vector<uint32_t> banks_used;
    size_t i = 0;
    while (i < q.q.size() && banks_used.size() < cfg_.pjr.bank_count) {
      uint32_t b = pjr_bank(q.q[i]);
      if (std::find(banks_used.begin(), banks_used.end(), b) != banks_used.end()) {
        ++i;  // same-bank conflict: serialized to a later cycle
        continue;
      }
      banks_used.push_back(b);
      Msg m = std::move(q.q[i]);
      q.q.erase(q.q.begin() + static_cast<long>(i));
      wake_one(q);
      trace(m);
      pjr_process(m);
    }
  }

  // ------------------------------------------------------------------
  // Memory front-end: accepts up to 4 requests per cycle; DRAM contention
  // is the channel slot model inside MemoryModel.

  void mem_step() {
    for (uint32_t port = 0; port < 4 && !queues_[kQMemReq].q.empty(); ++port) {
      Msg m;
      pop_queue(kQMemReq, m);
      trace(m);
      ops_++;
      if (m.is_write) {
        uint64_t done = mem_.write(m.addr, m.bytes, now_, st_);
        max_time_ = std::max(max_time_, done);
      } else {
        uint64_t done = mem_.read(m.addr, m.bytes, now_, st_);
        Event ev;
        ev.type = kEvMemDone;
        ev.comp = m.issuer;
        uint32_t thread = m.thread;
        ev.msg = std::move(m);
        schedule(done, 1, thread, std::move(ev));
      }
    }
  }

  // ------------------------------------------------------------------
  // Scheduling fabric

  bool comp_has_work(uint16_t c) {
    Component& comp = comps_[c];
    if (!comp.outbox.empty()) return !comp.stalled;
    if (!comp.resume.empty()) return true;
    switch (c) {
      case kCupid:
        return !queues_[kQCupidPjr].q.empty() || !queues_[kQCupidMatch].q.empty() ||
               !ctl_.empty();
      case kMm:
        return !queues_[kQLubResp].q.empty() || !queues_[kQMmRange].q.empty() ||
               !queues_[kQMmReq].q.empty();
      case kLub: return !queues_[kQLubReq].q.empty();
      case kMid: return !queues_[kQMidReq].q.empty();
      case kPjr: return !queues_[kQPjrReq].q.empty();
      case kMem: return !queues_[kQMemReq].q.empty();
    }
    return false;
  }

  void unit_work(uint16_t c) {
    Component& comp = comps_[c];
    comp.work_at = UINT64_MAX;
    if (!comp.outbox.empty()) {
      // Drain pending sends first (head-of-line): one per unit per cycle.
      for (uint32_t u = 0; u < comp.units && !comp.outbox.empty(); ++u)
        if (!pump_one(c)) break;
      if (comp_has_work(c)) poke(c);
      return;
    }
    switch (c) {
      case kCupid: cupid_step(); break;
      case kMm: mm_step(); break;
      case kLub:
        for (uint32_t u = 0; u < comp.units; ++u) {
          if (!comp.resume.empty()) {
            Msg m = std::move(comp.resume.front());
            comp.resume.pop_front();
            lub_handle_mem(m);
          } else if (!queues_[kQLubReq].q.empty()) {
            Msg m;
            pop_queue(kQLubReq, m);
            trace(m);
            lub_handle_req(m);
          } else {
            break;
          }
        }
        break;
      case kMid:
        for (uint32_t u = 0; u < comp.units; ++u) {
          if (!comp.resume.empty()) {
            Msg m = std::move(comp.resume.front());
            comp.resume.pop_front();
            mid_handle_mem(m);
          } else if (!queues_[kQMidReq].q.empty()) {
            Msg m;
            pop_queue(kQMidReq, m);
            trace(m);
            mid_handle_req(m);
          } else {
            break;
          }
        }
        break;
      case kPjr: pjr_step(); break;
      case kMem: mem_step(); break;
    }
    if (comp_has_work(c)) poke(c);
  }

  std::string deadlock_report() {
    std::ostringstream os;
    os << "simulation deadlock: bounded queues formed a cyclic stall;";
    bool any = false;
    for (uint16_t c = 0; c < kCompCount; ++c) {
      Component& comp = comps_[c];
      if (comp.stalled && !comp.outbox.empty()) {
        uint8_t qid = comp.outbox.front().first;
        os << ' ' << comp_name(c) << " blocked sending "
           << msg_kind_name(comp.outbox.front().second) << " to " << queue_name(qid)
           << " (consumer " << comp_name(queues_[qid].consumer) << ");";
        any = true;
      }
    }
    if (!any) os << " no component can make progress;";
    os << " increase the affected queue depths";
    return os.str();
  }
};

RunStats Sim::run() {
  trace_out_ = opt_.trace;
  comps_[kLub].units = cfg_.lub_units;
  comps_[kMid].units = cfg_.midwife_units;
  mm_.resize(cfg_.threads);
  lub_.resize(cfg_.threads);

  now_ = 0;
  poke(kCupid);

  while (!events_.empty()) {
    Event ev = events_.top();
    events_.pop();
    now_ = ev.time;
    max_time_ = std::max(max_time_, now_);
    switch (ev.type) {
      case kEvArrival: {
        BQueue& q = queues_[ev.queue];
        q.reserved--;
        q.q.push_back(std::move(ev.msg));
        poke(q.consumer);
        break;
      }
      case kEvMemDone:
        comps_[ev.comp].resume.push_back(std::move(ev.msg));
        poke(ev.comp);
        break;
      case kEvWakeup:
        poke(ev.comp);
        break;
      case kEvUnitWork:
        unit_work(ev.comp);
        break;
    }
  }

  bool drained = done_written_ && live_ == 0;
  for (const BQueue& q : queues_) drained = drained && q.q.empty() && q.reserved == 0;
  for (uint16_t c = 0; c < kCompCount; ++c)
    drained = drained && comps_[c].outbox.empty() && comps_[c].resume.empty();
  if (!drained) throw SimDeadlock(deadlock_report());

  st_.cycles = max_time_;
  st_.cache_hits = pjr_.hits();
  st_.cache_misses = pjr_.misses();
  st_.cache_insertions = pjr_.insertions();
  st_.cache_overflows = pjr_.overflows();
  st_.cache_rejects = pjr_.rejects();
  st_.intermediate_tuples = pjr_.committed_records();
  st_.per_store_accesses["cupid.max_live"] = live_high_;
  st_.per_store_accesses["pjr.audit"] = pjr_.audit_double_commits();

  if (!cfg_.energy_weights.empty()) {
    auto w = [&](const char* k) {
      auto it = cfg_.energy_weights.find(k);
      return it == cfg_.energy_weights.end() ? 0.0 : it->second;
    };
    uint64_t store = 0;
    for (const char* k : {"cupid", "matchmaker", "lub", "midwife"}) {
      auto it = st_.per_store_accesses.find(k);
      if (it != st_.per_store_accesses.end()) store += it->second;
    }
    uint64_t pjr_acc = 0;
    if (auto it = st_.per_store_accesses.find("pjr"); it != st_.per_store_accesses.end())
      pjr_acc = it->second;
    st_.weighted_energy = double(st_.dram_reads) * w("dramRead") +
                          double(st_.dram_writes) * w("dramWrite") +
                          double(st_.l1_hits) * w("l1Hit") + double(st_.l2_hits) * w("l2Hit") +
                          double(pjr_acc) * w("pjrAccess") + double(store) * w("storeAccess") +
                          double(ops_) * w("unitOp");
  }
  return st_;
}

}  // namespace

RunStats simulate(const ExecPlan& exec, const SimConfig& cfg, ResultSink& sink,
                  const SimOptions& opt) {
  validate_for_plan(cfg, exec);
  Sim sim(exec, cfg, sink, opt);
  return sim.run();
}

}  // namespace triejoin::sim
