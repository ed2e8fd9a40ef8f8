#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voltsim/power.hpp"
#include "voltsim/timing.hpp"
#include "voltsim/trace.hpp"
#include "voltsim/voltron.hpp"

namespace voltsim::memsim {

enum class Policy { fixed, voltron, voltron_bl, memdvfs };

Policy policy_from_string(const std::string& s);
const char* policy_name(Policy p);

struct SystemConfig {
  int cores = 4;
  int channels = 2;
  int banks = 8;            // per rank, one rank per channel
  int rows_per_bank = 65536;
  int columns_per_row = 128;  // cache lines per row buffer
  int line_bytes = 64;

  int window_entries = 192;
  int retire_width = 4;     // also the dispatch width
  int read_queue_entries = 64;
  int write_queue_entries = 64;
  int write_drain_watermark = 32;

  uint64_t interval_cycles = 4000000;  // policy hook period
  double trefi_ns = 7800.0;
  double trfc_ns = 260.0;

  uint64_t max_cycles = 0;  // 0 = run until traces drain
  bool record_commands = false;
  bool record_requests = false;
};

void validate(const SystemConfig& cfg);

struct DecodedAddress {
  int channel;
  int bank;
  int row;
  int column;
};

// Line-interleaved mapping: offset | channel | column | bank | row, low bits
// first. Throws when the address has bits above the mapped space.
DecodedAddress decode_address(const SystemConfig& cfg, uint64_t address);

enum class Command : uint8_t { act, pre, rd, wr, ref };

const char* command_name(Command c);

struct CommandRecord {
  uint64_t cycle;
  int32_t row;   // -1 for PRE/REF
  int16_t channel;
  int16_t bank;  // -1 for rank-level REF
  Command cmd;
};

// Timings in force from start_cycle on. Per-bank entries differ only under
// the bank-latency policy; the clock and refresh constants change only under
// frequency scaling.
struct TimingEpoch {
  uint64_t start_cycle = 0;
  double tck_ns = timing::kTckNs;
  int trfc_cycles = 208;
  int trefi_cycles = 6240;
  double v_array = 1.35;
  double v_peripheral = 1.35;
  int channel_mts = 1600;
  std::vector<timing::TimingParams> bank_timings;
};

struct DecisionRecord {
  uint64_t cycle;
  Policy policy;
  double v_array;
  int channel_mts;
  double predicted_loss;
  int slow_banks;
};

struct RequestRecord {
  int core;
  bool is_write;
  uint64_t address;
  uint64_t arrival;
  uint64_t completion;  // reads only; writes complete at dispatch
  int channel;
  int bank;
  int row;
};

struct CoreStats {
  uint64_t instructions = 0;
  uint64_t reads = 0;
  uint64_t writes = 0;
  uint64_t stall_cycles = 0;
  uint64_t finish_cycle = 0;  // cycles until trace drained (0 if cut short)
  double ipc = 0.0;
  double mpki = 0.0;
  double stall_frac = 0.0;
};

struct SimStats {
  uint64_t cycles = 0;
  double runtime_ns = 0.0;
  uint64_t n_act = 0, n_pre = 0, n_rd = 0, n_wr = 0, n_ref = 0;
  uint64_t reads_issued = 0;
  uint64_t reads_completed = 0;
  double read_latency_cycles_total = 0.0;
  std::vector<CoreStats> cores;
  std::vector<double> channel_util;  // busy data cycles / total cycles
  std::vector<power::EnergySegment> segments;
  std::vector<TimingEpoch> epochs;
  std::vector<DecisionRecord> decisions;
  std::vector<CommandRecord> commands;   // when record_commands
  std::vector<RequestRecord> requests;   // when record_requests

  double avg_read_latency_cycles() const {
    return reads_completed ? read_latency_cycles_total / (double)reads_completed : 0.0;
  }
};

struct PolicyConfig {
  Policy policy = Policy::fixed;
  double target_loss_pct = 5.0;
  voltron::PredictorCoefficients coeffs;
  double memdvfs_hi = 0.40;
  double memdvfs_lo = 0.15;
};

// Cycle-level run: trace-driven in-order cores (window-limited, 4-wide),
// per-channel FR-FCFS scheduling with write-drain hysteresis and strict
// refresh, the policy hook every interval_cycles. v_initial must be a table
// row; the bank-latency policy applies its per-bank split to it as well.
SimStats run_simulation(const SystemConfig& cfg, const timing::LatencyTable& table,
                        const std::vector<std::vector<trace::Entry>>& traces,
                        const PolicyConfig& policy, double v_initial = 1.35);

double weighted_speedup(const std::vector<double>& ipc_alone,
                        const std::vector<double>& ipc_shared);

struct CoreIntervalSample {
  uint64_t instructions;
  uint64_t reads;
  uint64_t stall_cycles;
};

// Interval aggregation feeding the predictor: MPKI over summed instructions,
// stall fraction averaged across cores.
voltron::WorkloadProfile collect_profile(const std::vector<CoreIntervalSample>& cores,
                                         uint64_t interval_cycles);

// Inverse of decode_address; fields must lie inside the configured geometry.
uint64_t encode_address(const SystemConfig& cfg, const DecodedAddress& d);

enum class SynthKind { mem_intensive, compute_heavy, uniform_random, row_stream };

SynthKind synth_kind_from_string(const std::string& s);
const char* synth_kind_name(SynthKind k);

// Deterministic synthetic workloads: a memory-bound mix with moderate row
// locality, a compute-bound mix with long bubbles, a uniform random stream
// for audits, and a sequential streamer with near-perfect row hits.
std::vector<trace::Entry> synthesize_trace(const SystemConfig& cfg, SynthKind kind,
                                           size_t entries, uint64_t seed);

struct AuditResult {
  uint64_t commands_checked = 0;
  uint64_t violations = 0;
  std::string first_violation;
};

// Replays a recorded command log against the epoch timings and flags every
// constraint break (tRCD/tRP/tRAS/tCL/tCWL data-bus overlap, tRFC, refresh
// cadence, state-machine misuse). A gap requirement binds with the timing
// value active when the earlier command of the pair issued.
AuditResult audit_command_log(const SimStats& stats, const SystemConfig& cfg);

void write_stats_json(const SimStats& s, const std::string& path);
void write_command_log_csv(const SimStats& s, const std::string& path);
void write_decision_log_csv(const SimStats& s, const std::string& path);

}  // namespace voltsim::memsim
