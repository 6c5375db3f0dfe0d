#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "triejoin/engine.hpp"
#include "triejoin/pairwise.hpp"
#include "triejoin/pjr_cache.hpp"
#include "triejoin/plan.hpp"
#include "triejoin/query.hpp"
#include "triejoin/relation.hpp"
#include "triejoin/sim/config.hpp"
#include "triejoin/sim/simulator.hpp"
#include "triejoin/stats.hpp"
#include "triejoin/trie.hpp"

using namespace triejoin;

namespace {

// Exit codes: 0 ok, 1 CLI usage (CLI11), 2 input/runtime error,
// 3 verification mismatch, 4 simulation deadlock.
constexpr int kErrUsage = 1;
constexpr int kErrInput = 2;
constexpr int kErrVerify = 3;
constexpr int kErrDeadlock = 4;

struct Options {
  std::string query;
  std::string dataset;
  std::vector<std::string> relations;  // NAME=path overrides
  std::string engine = "ctj";
  uint32_t threads = 0;  // 0 = engine default (1 partition; 32 sim threads)
  std::string mt = "dynamic";
  uint64_t pjr_capacity = 0;
  uint32_t pjr_entry_capacity = 0;
  bool pjr_disable = false;
  bool count_only = false;
  bool verify = false;
  bool undirected = false;
  bool maximal_ranges = false;
  std::string stats_out, trace_path, config_path, out_path;
};

void add_common_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--query", o.query, "Named query (path3|path4|cycle3|cycle4|clique4) or query text")
      ->required();
  cmd->add_option("--dataset", o.dataset, "Edge-list file bound to every relation name");
  cmd->add_option("--relation", o.relations, "Bind one relation: NAME=path (repeatable)");
  cmd->add_flag("--undirected", o.undirected, "Insert each edge in both directions");
  cmd->add_flag("--maximal-ranges", o.maximal_ranges, "Extend cache entries to maximal spans");
  cmd->add_option("--pjr-capacity", o.pjr_capacity, "Cache capacity in bytes");
  cmd->add_option("--pjr-entry-capacity", o.pjr_entry_capacity, "Max records per cache entry");
  cmd->add_flag("--pjr-disable", o.pjr_disable, "Disable the intermediate-result cache");
  cmd->add_flag("--count", o.count_only, "Print the result count instead of tuples");
  cmd->add_option("--out", o.out_path, "Write result tuples to this file");
  cmd->add_option("--stats-out", o.stats_out, "Append one stats CSV row per run to this file");
}

void add_sim_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--threads", o.threads, "Thread count");
  cmd->add_option("--mt", o.mt, "Multithreading scheme: static|dynamic|hybrid");
  cmd->add_option("--config", o.config_path, "key=value simulator config file");
  cmd->add_option("--trace", o.trace_path, "Write an event trace (cycle kind thread) here");
  cmd->add_flag("--verify", o.verify, "Check the result count against the functional engine");
}

Query resolve_query(const std::string& text) {
  for (const std::string& n : builtin_query_names())
    if (text == n) return builtin_query(n);
  return parse_query(text);
}

/// Load every relation the query needs. `--relation NAME=path` wins over
/// `--dataset`; files are loaded once per (path, direction).
std::map<std::string, const Relation*> load_relations(const Query& q, const Options& o,
                                                      std::deque<Relation>& storage) {
  std::map<std::string, std::string> path_of;
  for (const std::string& kv : o.relations) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size())
      throw std::invalid_argument("--relation expects NAME=path, got '" + kv + "'");
    path_of[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  std::map<std::string, const Relation*> loaded;  // by path
  std::map<std::string, const Relation*> bound;
  for (const Atom& a : q.atoms) {
    if (bound.count(a.relation)) continue;
    std::string path = o.dataset;
    if (auto it = path_of.find(a.relation); it != path_of.end()) path = it->second;
    if (path.empty())
      throw std::invalid_argument("relation '" + a.relation +
                                  "' has no data: pass --dataset or --relation " + a.relation +
                                  "=path");
    const Relation*& cached = loaded[path];
    if (!cached) {
      storage.push_back(load_edge_list_file(path, a.relation, o.undirected));
      cached = &storage.back();
    }
    bound[a.relation] = cached;
  }
  return bound;
}

struct Compiled {
  Query q;
  QueryPlan plan;
  BoundTries tries;
  CacheStructure cs;
  ExecPlan exec;
  std::deque<Relation> storage;
  std::map<std::string, const Relation*> rels;
};

void compile(const Options& o, Compiled& c) {
  c.q = resolve_query(o.query);
  c.rels = load_relations(c.q, o, c.storage);
  std::map<std::string, uint32_t> catalog;
  for (auto& [name, rel] : c.rels) catalog[name] = rel->arity;
  c.plan = plan_query(c.q, catalog);
  c.tries = bind_tries(c.plan, c.rels);
  c.cs = derive_cache_structure(c.plan, o.maximal_ranges);
  c.exec = compile_exec(c.plan, c.tries, c.cs);
}

PjrConfig pjr_config(const Options& o) {
  PjrConfig cfg;
  if (o.pjr_capacity) cfg.total_capacity_bytes = o.pjr_capacity;
  if (o.pjr_entry_capacity) cfg.entry_capacity = o.pjr_entry_capacity;
  return cfg;
}

void append_stats(const std::string& path, const std::vector<StatsRow>& rows, bool echo) {
  std::ostringstream body;
  for (const StatsRow& r : rows) body << stats_csv_row(r) << '\n';
  if (echo) std::cout << stats_csv_header() << '\n' << body.str();
  if (path.empty()) return;
  bool need_header = true;
  {
    std::ifstream probe(path);
    need_header = !probe.good() || probe.peek() == std::ifstream::traits_type::eof();
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open stats file " + path);
  if (need_header) out << stats_csv_header() << '\n';
  out << body.str();
}

void write_tuples(const Options& o, uint32_t width, const std::vector<uint32_t>& flat) {
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!o.out_path.empty()) {
    file.open(o.out_path);
    if (!file) throw std::runtime_error("cannot open output file " + o.out_path);
    os = &file;
  }
  size_t rows = width ? flat.size() / width : 0;
  for (size_t i = 0; i < rows; ++i) {
    for (uint32_t j = 0; j < width; ++j) {
      if (j) *os << ' ';
      *os << flat[i * width + j];
    }
    *os << '\n';
  }
}

std::string query_label(const Query& q) { return q.name.empty() ? "query" : q.name; }

StatsRow make_row(const Options& o, const Compiled& c, const std::string& engine,
                  const std::string& scheme, uint32_t threads, RunStats stats) {
  StatsRow row;
  row.engine = engine;
  row.query = query_label(c.q);
  row.dataset = o.dataset.empty() ? "-" : o.dataset;
  row.scheme = scheme;
  row.threads = threads;
  row.stats = std::move(stats);
  return row;
}

sim::SimConfig sim_config(const Options& o) {
  sim::SimConfig cfg;
  if (!o.config_path.empty()) sim::parse_config_file(o.config_path, cfg);
  if (o.threads) cfg.threads = o.threads;
  cfg.scheme = sim::mt_scheme_from_string(o.mt);
  if (o.pjr_capacity) cfg.pjr.total_capacity_bytes = o.pjr_capacity;
  if (o.pjr_entry_capacity) cfg.pjr.entry_capacity = o.pjr_entry_capacity;
  if (o.pjr_disable) cfg.pjr_enabled = false;
  return cfg;
}

int cmd_simulate(const Options& o) {
  Compiled c;
  compile(o, c);
  sim::SimConfig cfg = sim_config(o);

  std::ofstream trace_file;
  sim::SimOptions sopt;
  if (!o.trace_path.empty()) {
    trace_file.open(o.trace_path);
    if (!trace_file) throw std::runtime_error("cannot open trace file " + o.trace_path);
    sopt.trace = &trace_file;
  }

  RunStats stats;
  uint64_t result_count = 0;
  if (o.count_only && o.out_path.empty()) {
    CountSink sink;
    stats = sim::simulate(c.exec, cfg, sink, sopt);
    result_count = sink.count;
  } else {
    VectorSink sink(c.exec.n);
    stats = sim::simulate(c.exec, cfg, sink, sopt);
    result_count = sink.count();
    if (!o.count_only) write_tuples(o, c.exec.n, sink.flat);
  }

  if (o.verify) {
    CountSink ref;
    PjrCache cache(pjr_config(o));
    cached_trie_join(c.exec, ref, o.pjr_disable ? nullptr : &cache);
    if (ref.count != result_count) {
      std::cerr << "verification failed: simulator emitted " << result_count
                << " results, functional engine " << ref.count << "\n";
      return kErrVerify;
    }
  }

  if (o.count_only) std::cout << result_count << '\n';
  std::cout << "cycles=" << stats.cycles << " results=" << stats.results_emitted
            << " threadsSpawned=" << stats.threads_spawned << '\n';
  append_stats(o.stats_out, {make_row(o, c, "sim", sim::to_string(cfg.scheme), cfg.threads,
                                      std::move(stats))},
               false);
  return 0;
}

int cmd_run(const Options& o) {
  if (o.engine == "sim") return cmd_simulate(o);
  Compiled c;
  compile(o, c);
  uint32_t partitions = o.threads ? o.threads : 1;

  RunStats stats;
  uint64_t result_count = 0;
  std::string engine = o.engine;
  if (engine == "pairwise") {
    PairwiseResult r = pairwise_join(c.q, c.rels);
    stats = r.stats;
    result_count = r.count();
    if (!o.count_only) write_tuples(o, r.width, r.flat);
  } else if (engine == "ctj" || engine == "ctj-nocache") {
    PjrCache cache(pjr_config(o));
    PjrCache* cache_ptr = (engine == "ctj-nocache" || o.pjr_disable) ? nullptr : &cache;
    if (o.count_only && o.out_path.empty()) {
      CountSink sink;
      stats = cached_trie_join(c.exec, sink, cache_ptr, partitions);
      result_count = sink.count;
    } else {
      VectorSink sink(c.exec.n);
      stats = cached_trie_join(c.exec, sink, cache_ptr, partitions);
      result_count = sink.count();
      if (!o.count_only) write_tuples(o, c.exec.n, sink.flat);
    }
  } else {
    throw std::invalid_argument("unknown engine '" + engine +
                                "' (expected ctj|ctj-nocache|pairwise|sim)");
  }

  if (o.count_only) std::cout << result_count << '\n';
  append_stats(o.stats_out, {make_row(o, c, engine, "-", partitions, std::move(stats))}, false);
  return 0;
}

int cmd_compare(const Options& o) {
  Compiled c;
  compile(o, c);
  std::vector<StatsRow> rows;

  {
    CountSink sink;
    PjrCache cache(pjr_config(o));
    RunStats s = cached_trie_join(c.exec, sink, &cache);
    rows.push_back(make_row(o, c, "ctj", "-", 1, std::move(s)));
  }
  {
    CountSink sink;
    RunStats s = cached_trie_join(c.exec, sink, nullptr);
    rows.push_back(make_row(o, c, "ctj-nocache", "-", 1, std::move(s)));
  }
  {
    PairwiseResult r = pairwise_join(c.q, c.rels);
    rows.push_back(make_row(o, c, "pairwise", "-", 1, std::move(r.stats)));
  }
  append_stats(o.stats_out, rows, /*echo=*/true);
  return 0;
}

int cmd_index(const std::string& dataset, const std::string& out, const std::string& perm_text,
              bool undirected) {
  Relation rel = load_edge_list_file(dataset, "R", undirected);
  std::vector<uint32_t> perm;
  if (!perm_text.empty()) {
    std::istringstream is(perm_text);
    std::string tok;
    while (std::getline(is, tok, ',')) perm.push_back(static_cast<uint32_t>(std::stoul(tok)));
  }
  TrieIndex trie = build_trie(rel, perm);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + out);
  save_trie(trie, f);
  std::cout << "tuples=" << rel.tuple_count() << " arity=" << trie.arity;
  for (uint32_t l = 0; l < trie.arity; ++l)
    std::cout << " level" << l << "=" << trie.levels[l].values.size();
  std::cout << " bytes=" << trie.value_bytes() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case-optimal graph pattern matching: functional engine, "
               "accelerator simulator, and pairwise-join baseline"};
  app.require_subcommand(1);

  Options run_opts, sim_opts, cmp_opts;
  std::string idx_dataset, idx_out, idx_perm;
  bool idx_undirected = false;

  CLI::App* run = app.add_subcommand("run", "Run a query with a functional engine");
  add_common_flags(run, run_opts);
  run->add_option("--engine", run_opts.engine, "ctj|ctj-nocache|pairwise|sim");
  run->add_option("--threads", run_opts.threads,
                  "Partition count (ctj engines) or simulator threads");
  run->add_option("--mt", run_opts.mt, "Simulator scheme when --engine sim");
  run->add_option("--config", run_opts.config_path, "Simulator config when --engine sim");
  run->add_option("--trace", run_opts.trace_path, "Simulator trace when --engine sim");
  run->add_flag("--verify", run_opts.verify, "Verify simulator counts when --engine sim");

  CLI::App* simc = app.add_subcommand("simulate", "Run a query on the simulated accelerator");
  add_common_flags(simc, sim_opts);
  add_sim_flags(simc, sim_opts);

  CLI::App* cmp = app.add_subcommand("compare",
                                     "Run ctj, ctj-nocache and pairwise; emit CSV rows");
  add_common_flags(cmp, cmp_opts);

  CLI::App* idx = app.add_subcommand("index", "Build a trie index file from an edge list");
  idx->add_option("--dataset", idx_dataset, "Edge-list file")->required();
  idx->add_option("--out", idx_out, "Output trie file")->required();
  idx->add_option("--perm", idx_perm, "Column permutation, e.g. 1,0");
  idx->add_flag("--undirected", idx_undirected, "Insert each edge in both directions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kErrUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (simc->parsed()) return cmd_simulate(sim_opts);
    if (cmp->parsed()) return cmd_compare(cmp_opts);
    if (idx->parsed()) return cmd_index(idx_dataset, idx_out, idx_perm, idx_undirected);
  } catch (const sim::SimDeadlock& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kErrDeadlock;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kErrInput;
  }
  return 0;
}
