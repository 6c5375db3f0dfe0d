#include "triejoin/sim/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace triejoin::sim {

const char* to_string(MtScheme s) {
  switch (s) {
    case MtScheme::kStatic: return "static";
    case MtScheme::kDynamic: return "dynamic";
    case MtScheme::kHybrid: return "hybrid";
  }
  return "?";
}

MtScheme mt_scheme_from_string(const std::string& s) {
  if (s == "static") return MtScheme::kStatic;
  if (s == "dynamic") return MtScheme::kDynamic;
  if (s == "hybrid") return MtScheme::kHybrid;
  throw std::invalid_argument("unknown mt scheme: " + s + " (static|dynamic|hybrid)");
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

uint64_t parse_u64(const std::string& v) {
  size_t pos = 0;
  unsigned long long x = std::stoull(v, &pos, 0);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw std::invalid_argument("not a boolean");
}

void apply(SimConfig& cfg, const std::string& key, const std::string& val) {
  auto u32 = [&] { return static_cast<uint32_t>(parse_u64(val)); };
  if (key == "threads") cfg.threads = u32();
  else if (key == "scheme") cfg.scheme = mt_scheme_from_string(val);
  else if (key == "clock_ghz") cfg.clock_ghz = std::stod(val);
  else if (key == "l1_cycles") cfg.mem.l1_hit_cycles = u32();
  else if (key == "l2_cycles") cfg.mem.l2_hit_cycles = u32();
  else if (key == "dram_cycles") cfg.mem.dram_cycles = u32();
  else if (key == "line_bytes") cfg.mem.line_bytes = u32();
  else if (key == "l1_bytes") cfg.mem.l1_bytes = u32();
  else if (key == "l2_bytes") cfg.mem.l2_bytes = u32();
  else if (key == "cache_ways") cfg.mem.ways = u32();
  else if (key == "channels") cfg.mem.channels = u32();
  else if (key == "channel_interval") cfg.mem.channel_interval = u32();
  else if (key == "lub_units") cfg.lub_units = u32();
  else if (key == "midwife_units") cfg.midwife_units = u32();
  else if (key == "queue.mm_req") cfg.queues.mm_req = u32();
  else if (key == "queue.mm_range") cfg.queues.mm_range = u32();
  else if (key == "queue.lub_req") cfg.queues.lub_req = u32();
  else if (key == "queue.lub_resp") cfg.queues.lub_resp = u32();
  else if (key == "queue.mid_req") cfg.queues.mid_req = u32();
  else if (key == "queue.pjr_req") cfg.queues.pjr_req = u32();
  else if (key == "queue.mem_req") cfg.queues.mem_req = u32();
  else if (key == "queue.cupid_match") cfg.queues.cupid_match = u32();
  else if (key == "queue.cupid_pjr") cfg.queues.cupid_pjr = u32();
  else if (key == "pjr.capacity_bytes") cfg.pjr.total_capacity_bytes = parse_u64(val);
  else if (key == "pjr.entry_capacity") cfg.pjr.entry_capacity = u32();
  else if (key == "pjr.banks") cfg.pjr.bank_count = u32();
  else if (key == "pjr.enabled") cfg.pjr_enabled = parse_bool(val);
  else if (key == "cupid_store_bytes") cfg.cupid_store_bytes = u32();
  else if (key == "unit_store_bytes") cfg.unit_store_bytes = u32();
  else if (key == "hybrid_seeds") cfg.hybrid_seeds = u32();
  else if (key.rfind("energy.", 0) == 0) cfg.energy_weights[key.substr(7)] = std::stod(val);
  else throw std::invalid_argument("unknown config key: " + key);
}

}  // namespace

void parse_config(std::istream& in, SimConfig& cfg) {
  std::string line;
  size_t ln = 0;
  while (std::getline(in, line)) {
    ln++;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(ln) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      apply(cfg, key, val);
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(ln) + " (" + key +
                                  "): " + e.what());
    }
  }
}

void parse_config_file(const std::string& path, SimConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  parse_config(in, cfg);
}

void validate(const SimConfig& cfg) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
  };
  need(cfg.threads >= 1, "threads must be >= 1");
  need(cfg.clock_ghz > 0, "clock_ghz must be positive");
  need(cfg.mem.l1_hit_cycles >= 1 && cfg.mem.l2_hit_cycles >= 1 && cfg.mem.dram_cycles >= 1,
       "memory latencies must be positive");
  need(cfg.mem.line_bytes >= 8 && (cfg.mem.line_bytes & (cfg.mem.line_bytes - 1)) == 0,
       "line_bytes must be a power of two >= 8");
  need(cfg.mem.ways >= 1, "cache_ways must be >= 1");
  need(cfg.mem.l1_bytes >= cfg.mem.line_bytes * cfg.mem.ways &&
           cfg.mem.l1_bytes % (cfg.mem.line_bytes * cfg.mem.ways) == 0,
       "l1_bytes must be a multiple of line_bytes*ways");
  need(cfg.mem.l2_bytes >= cfg.mem.line_bytes * cfg.mem.ways &&
           cfg.mem.l2_bytes % (cfg.mem.line_bytes * cfg.mem.ways) == 0,
       "l2_bytes must be a multiple of line_bytes*ways");
  need(cfg.mem.channels >= 1, "channels must be >= 1");
  need(cfg.mem.channel_interval >= 1, "channel_interval must be >= 1");
  need(cfg.lub_units >= 1, "lub_units must be >= 1");
  need(cfg.midwife_units >= 1, "midwife_units must be >= 1");
  need(cfg.pjr.bank_count >= 1, "pjr.banks must be >= 1");
  need(cfg.pjr.entry_capacity >= 1, "pjr.entry_capacity must be >= 1");
  need(cfg.queues.mm_req >= 1 && cfg.queues.mm_range >= 1 && cfg.queues.lub_req >= 1 &&
           cfg.queues.mid_req >= 1 && cfg.queues.pjr_req >= 1 && cfg.queues.mem_req >= 1,
       "request queue depths must be >= 1");
  need(cfg.cupid_store_bytes >= 1 && cfg.unit_store_bytes >= 1, "store sizes must be positive");
}

}  // namespace triejoin::sim
