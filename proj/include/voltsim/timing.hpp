#pragma once

#include <string>
#include <vector>

#include "voltsim/circuit.hpp"

namespace voltsim::timing {

inline constexpr double kTckNs = 1.25;        // DDR3L-1600 command clock
inline constexpr double kGuardband = 1.375;   // vendor margin on raw latencies
inline constexpr double kTclNs = 13.75;       // CL, voltage independent
inline constexpr double kTcwlNs = 13.75;      // CWL, voltage independent
inline constexpr int kDataCycles = 4;         // one cache line on the bus

// Core timing constraints. Cycles are authoritative; ns values are exact
// multiples of tck_ns.
struct TimingParams {
  int trcd = 11;
  int trp = 11;
  int tras = 29;
  int tcl = 11;
  int tcwl = 11;
  double tck_ns = kTckNs;

  double trcd_ns() const { return trcd * tck_ns; }
  double trp_ns() const { return trp * tck_ns; }
  double tras_ns() const { return tras * tck_ns; }
  double tcl_ns() const { return tcl * tck_ns; }
  double tcwl_ns() const { return tcwl * tck_ns; }
};

// Builds cycle counts from ns constraints at the given clock (ceiling).
TimingParams timing_from_ns(double trcd_ns, double trp_ns, double tras_ns,
                            double tcl_ns, double tcwl_ns, double tck_ns);

struct Guarded {
  double ns;
  int cycles;
};

// Guardbands a raw model latency and rounds it up to a whole clock.
Guarded apply_guardband(double raw_ns, double factor, double tck_ns);

struct VoltageOperatingPoint {
  double v_array = 1.35;
  double v_peripheral = 1.35;
  int channel_mts = 1600;  // MT/s on the channel
  TimingParams timings;
};

struct LatencyRow {
  double v;
  TimingParams t;
};

struct LatencyTable {
  std::vector<LatencyRow> rows;  // sorted by falling voltage

  const TimingParams& lookup(double v) const;  // exact row, 1e-9 tolerance
  bool has(double v) const;
};

enum class TableSource { reference, model };

// The measured DDR3L-1600 voltage/latency rows (2.5 ns tester granularity,
// guardbanded to the 1.25 ns command clock). Values in ns.
const std::vector<circuit::TargetRow>& reference_latency_rows();

// reference: the rows above, verbatim. model: derive_min_latencies over the
// same voltage grid, guardbanded and rounded to the clock.
LatencyTable build_latency_table(TableSource source,
                                 const circuit::CircuitParams& params,
                                 double guardband = kGuardband,
                                 double tck_ns = kTckNs);

void write_latency_table_csv(const LatencyTable& t, const std::string& path);

}  // namespace voltsim::timing
