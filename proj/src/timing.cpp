#include "voltsim/timing.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace voltsim::timing {

static int ceil_cycles(double ns, double tck_ns) {
  if (ns <= 0.0) return 0;
  return (int)std::ceil(ns / tck_ns - 1e-9);
}

TimingParams timing_from_ns(double trcd_ns, double trp_ns, double tras_ns,
                            double tcl_ns, double tcwl_ns, double tck_ns) {
  if (tck_ns <= 0.0) throw std::invalid_argument("tck_ns must be positive");
  TimingParams t;
  t.tck_ns = tck_ns;
  t.trcd = ceil_cycles(trcd_ns, tck_ns);
  t.trp = ceil_cycles(trp_ns, tck_ns);
  t.tras = ceil_cycles(tras_ns, tck_ns);
  t.tcl = ceil_cycles(tcl_ns, tck_ns);
  t.tcwl = ceil_cycles(tcwl_ns, tck_ns);
  return t;
}

Guarded apply_guardband(double raw_ns, double factor, double tck_ns) {
  if (factor < 1.0) throw std::invalid_argument("guardband factor < 1");
  if (tck_ns <= 0.0) throw std::invalid_argument("tck_ns must be positive");
  int cycles = ceil_cycles(raw_ns * factor, tck_ns);
  return {cycles * tck_ns, cycles};
}

const TimingParams& LatencyTable::lookup(double v) const {
  for (const auto& r : rows)
    if (std::fabs(r.v - v) < 1e-9) return r.t;
  throw std::out_of_range("no latency row for requested voltage");
}

bool LatencyTable::has(double v) const {
  for (const auto& r : rows)
    if (std::fabs(r.v - v) < 1e-9) return true;
  return false;
}

const std::vector<circuit::TargetRow>& reference_latency_rows() {
  static const std::vector<circuit::TargetRow> rows = {
      {1.35, 13.75, 13.75, 36.25},
      {1.30, 13.75, 13.75, 36.25},
      {1.25, 13.75, 15.00, 36.25},
      {1.20, 13.75, 15.00, 37.50},
      {1.15, 15.00, 15.00, 37.50},
      {1.10, 15.00, 16.25, 40.00},
      {1.05, 16.25, 17.50, 41.25},
      {1.00, 17.50, 18.75, 45.00},
      {0.95, 18.75, 21.25, 48.75},
      {0.90, 21.25, 26.25, 52.50},
  };
  return rows;
}

LatencyTable build_latency_table(TableSource source,
                                 const circuit::CircuitParams& params,
                                 double guardband, double tck_ns) {
  LatencyTable table;
  for (const auto& row : reference_latency_rows()) {
    TimingParams t;
    if (source == TableSource::reference) {
      t = timing_from_ns(row.trcd_ns, row.trp_ns, row.tras_ns, kTclNs, kTcwlNs,
                         tck_ns);
    } else {
      circuit::RawLatencies raw = circuit::derive_min_latencies(params, row.v);
      t.tck_ns = tck_ns;
      t.trcd = apply_guardband(raw.trcd_ns, guardband, tck_ns).cycles;
      t.trp = apply_guardband(raw.trp_ns, guardband, tck_ns).cycles;
      t.tras = apply_guardband(raw.tras_ns, guardband, tck_ns).cycles;
      t.tcl = ceil_cycles(kTclNs, tck_ns);
      t.tcwl = ceil_cycles(kTcwlNs, tck_ns);
    }
    table.rows.push_back({row.v, t});
  }
  return table;
}

void write_latency_table_csv(const LatencyTable& t, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "v_array,trcd_ns,trp_ns,tras_ns,trcd_cyc,trp_cyc,tras_cyc\n");
  for (const auto& r : t.rows)
    std::fprintf(f, "%.2f,%.2f,%.2f,%.2f,%d,%d,%d\n", r.v, r.t.trcd_ns(),
                 r.t.trp_ns(), r.t.tras_ns(), r.t.trcd, r.t.trp, r.t.tras);
  std::fclose(f);
}

}  // namespace voltsim::timing
