#pragma once

#include <iosfwd>
#include <stdexcept>

#include "triejoin/engine.hpp"
#include "triejoin/sim/config.hpp"
#include "triejoin/stats.hpp"

namespace triejoin::sim {

/// Bounded-queue cyclic stall: every component is blocked on a full queue and
/// no event can make progress. The message names the stalled components and
/// the queues they are blocked on (a configuration diagnostic, not a bug in
/// the workload).
struct SimDeadlock : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimOptions {
  std::ostream* trace = nullptr;   // one line per delivered event: cycle kind thread
  uint64_t tie_perturb_seed = 0;   // !=0: shuffle same-cycle event order pseudo-randomly
};

/// Bytes of Cupid thread state the simulator models for one thread of this
/// plan (per-position value, per-part indexes, cache bookkeeping).
uint32_t cupid_thread_state_bytes(const ExecPlan& exec);

/// Bytes of thread state modeled per thread in each non-Cupid component.
constexpr uint32_t kUnitThreadStateBytes = 16;

/// Validate config against a concrete plan: thread state must fit the
/// component stores. Throws std::invalid_argument.
void validate_for_plan(const SimConfig& cfg, const ExecPlan& exec);

/// Run the discrete-event accelerator model on a compiled plan. Emits every
/// result exactly once into `sink` (thread interleaving order, not sorted)
/// and returns populated RunStats. Deterministic for fixed inputs+config.
/// Throws SimDeadlock when bounded queues reach a cyclic stall.
RunStats simulate(const ExecPlan& exec, const SimConfig& cfg, ResultSink& sink,
                  const SimOptions& opt = {});

}  // namespace triejoin::sim
