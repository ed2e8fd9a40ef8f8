#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace voltsim::errmodel {

// Spatial locality descriptor: rows near `center` carry extra error weight.
struct RowCluster {
  int center = 0;
  int halfwidth = 1;
  double weight = 0.0;
};

// Minimum (tRCD, tRP) in ns this DIMM needs to read reliably at voltage v.
// Rows sit on the 25 mV grid below v_min; values above 20 ns mean the
// latency knob cannot rescue that voltage.
struct RequiredLatency {
  double v;
  double trcd_ns;
  double trp_ns;
};

// Optional data-pattern sensitivity: multiplies the line error rate when the
// written background byte matches. Empty by default (no pattern effect).
struct PatternWeight {
  uint8_t data;
  double weight;
};

struct DimmProfile {
  std::string vendor = "A";
  double v_min = 1.15;              // lowest error-free voltage at reliable latencies
  double channel_fail_floor = 1.05; // below this no latency setting helps
  double f0 = 1e-6;                 // line error rate just below v_min
  double k = 2.302585092994046;     // rate growth per 25 mV (ln 10)
  double reliable_trcd_ns = 10.0;   // minimum reliable latencies at v >= v_min
  double reliable_trp_ns = 10.0;

  int banks = 8;
  int rows = 1024;                  // per bank (campaign geometry)
  int lines_per_row = 64;           // 64-byte lines tested per row

  std::vector<double> bank_weight;  // size banks, each in [0,1]
  double row_base = 1.0;
  std::vector<RowCluster> clusters;
  std::vector<PatternWeight> pattern_weights;

  double bits_per_bad_line = 4.0;   // conditional mean flips per bad line
  std::vector<RequiredLatency> required;  // sorted by falling v
};

DimmProfile vendor_a_profile();  // channel floor dominates (signal integrity)
DimmProfile vendor_b_profile();  // row-cluster locality
DimmProfile vendor_c_profile();  // high Vmin, errors confined to banks 0-1

DimmProfile load_profile_json(const std::string& path);
void save_profile_json(const DimmProfile& p, const std::string& path);

// [0,1] multiplier from bank weights and row clusters.
double spatial_weight(const DimmProfile& p, int bank, int row);

// Required latencies at voltage v (reliable values at or above v_min).
RequiredLatency required_latency(const DimmProfile& p, double v);

// Probability that one cache-line read at (bank,row) returns at least one
// flipped bit. Zero at or above v_min, zero when both latencies cover the
// requirement (unless v is below the channel failure floor).
double line_error_probability(const DimmProfile& p, double v, double trcd_ns,
                              double trp_ns, int bank, int row);

struct PatternPair {
  uint8_t data;
  uint8_t companion;
};

const std::vector<PatternPair>& default_patterns();  // 0x00/0xff, 0xaa/0x33, 0xcc/0x55

struct BerSample {
  int pattern;  // index into the pattern list
  int round;
  double ber;   // flipped bits / bits read in this pattern+round slice
};

struct ErrorReport {
  uint64_t lines_tested = 0;
  uint64_t lines_erroneous = 0;
  uint64_t bit_errors = 0;
  // beats with 0 / 1 / 2 / more than 2 flipped bits; sums to lines*8
  std::array<uint64_t, 4> beat_histogram = {0, 0, 0, 0};
  std::vector<uint64_t> cell_errors;  // banks*rows erroneous-line counts
  std::vector<BerSample> ber;
  int rounds = 0;
  int banks = 0;
  int rows = 0;

  uint64_t cell(int bank, int row) const { return cell_errors[(size_t)bank * rows + row]; }
};

// Writes the background pattern to every row pair (even row: data byte, odd
// row: companion), reads everything back `rounds` times per pattern, counts
// flipped lines and bits. Deterministic: every (bank,row) owns an RNG stream
// seeded from (seed, cell index).
ErrorReport voltage_test(const DimmProfile& p, double v, double trcd_ns,
                         double trp_ns, const std::vector<PatternPair>& patterns,
                         int rounds, uint64_t seed);

// Steps 1.35 V down in 50 mV until the first voltage with a nonzero error
// probability anywhere, then refines the boundary on the 25 mV grid.
// Returns the lowest error-free voltage at the supplied latencies.
double find_vmin(const DimmProfile& p, double trcd_ns, double trp_ns);

struct MinLatencyResult {
  bool feasible;
  double trcd_ns;
  double trp_ns;
};

// Smallest latency pair on the 2.5 ns tester grid (10..20 ns) that reads
// error-free at v. Infeasible below the channel failure floor or when the
// requirement exceeds the 20 ns cap.
MinLatencyResult find_min_latencies_experimental(const DimmProfile& p, double v);

enum class BeatClass { clean, corrected, detected, uncorrectable };

// SECDED outcome for one 64-bit beat with the given number of flipped bits.
BeatClass classify_beat(int bit_errors);

struct AnovaResult {
  double f;
  double p;
  int df_between;
  int df_within;
};

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

void write_heatmap_csv(const ErrorReport& r, const std::string& path);

}  // namespace voltsim::errmodel
