#include "triejoin/stats.hpp"

#include <cstdio>
#include <sstream>

namespace triejoin {

namespace {
std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}
}  // namespace

std::string stats_csv_header() {
  return "engine,query,dataset,scheme,threads,cycles,dramReads,dramWrites,l1Hits,l2Hits,"
         "cacheHits,cacheMisses,resultsEmitted,intermediateTuples,weightedEnergy";
}

std::string stats_csv_row(const StatsRow& row) {
  std::ostringstream out;
  const RunStats& s = row.stats;
  out << csv_escape(row.engine) << ',' << csv_escape(row.query) << ','
      << csv_escape(row.dataset) << ',' << csv_escape(row.scheme) << ',' << row.threads << ','
      << s.cycles << ',' << s.dram_reads << ',' << s.dram_writes << ',' << s.l1_hits << ','
      << s.l2_hits << ',' << s.cache_hits << ',' << s.cache_misses << ',' << s.results_emitted
      << ',' << s.intermediate_tuples << ',';
  if (s.weighted_energy) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", *s.weighted_energy);
    out << buf;
  }
  return out.str();
}

}  // namespace triejoin
