#include "voltsim/memsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "voltsim/numerics.hpp"

namespace voltsim::memsim {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2i(int v) {
  int b = 0;
  while ((1 << b) < v) ++b;
  return b;
}

int cycles_ceil(double ns, double tck_ns) {
  return (int)std::ceil(ns / tck_ns - 1e-9);
}

struct Request {
  uint64_t id;
  int core;
  bool is_write;
  uint64_t address;
  int channel, bank, row, column;
  uint64_t arrival;
};

struct BankState {
  int open_row = -1;
  uint64_t next_act = 0;  // earliest ACT (or REF) cycle
  uint64_t next_col = 0;  // earliest RD/WR cycle
  uint64_t next_pre = 0;  // earliest PRE cycle
  int queued_hits = 0;    // queued requests targeting the open row
};

struct ChannelState {
  std::vector<BankState> banks;
  std::vector<Request> rq, wq;  // arrival order
  uint64_t bus_free = 0;        // first cycle the data bus is clear
  uint64_t busy_total = 0;
  uint64_t busy_interval = 0;
  uint64_t ref_due = 0;
  bool ref_active = false;      // refresh due, closing banks
};

// Window entries: a run of ready instructions (reads-in-flight break runs).
struct WindowItem {
  uint32_t plain;    // ready instruction count; 0 marks a read slot
  uint64_t read_id;  // nonzero only for read slots
};

struct CoreRt {
  const std::vector<trace::Entry>* tr = nullptr;
  size_t idx = 0;
  uint32_t bubble_left = 0;
  std::deque<WindowItem> window;
  int occupancy = 0;
  bool done = false;

  uint64_t retired = 0, reads = 0, writes = 0, stall = 0;
  uint64_t finish_cycle = 0;
  uint64_t i_retired = 0, i_reads = 0, i_stall = 0;

  bool trace_drained() const { return idx >= tr->size(); }
};

struct Completion {
  uint64_t cycle;
  uint64_t read_id;
  int core;
  uint64_t arrival;
  uint64_t address;
  int channel, bank, row;
  bool operator>(const Completion& o) const { return cycle > o.cycle; }
};

struct Sim {
  const SystemConfig& cfg;
  const timing::LatencyTable& table;
  const PolicyConfig& pol;

  std::vector<CoreRt> cores;
  std::vector<ChannelState> channels;
  std::priority_queue<Completion, std::vector<Completion>, std::greater<Completion>> events;
  std::unordered_set<uint64_t> ready_reads;

  TimingEpoch active;
  bool pending_epoch = false;
  TimingEpoch next_epoch;

  uint64_t cycle = 0;
  uint64_t next_req_id = 1;
  SimStats stats;

  power::EnergySegment seg;
  uint64_t seg_start = 0;

  Sim(const SystemConfig& c, const timing::LatencyTable& t, const PolicyConfig& p)
      : cfg(c), table(t), pol(p) {}

  TimingEpoch make_epoch(double v_array, int slow_banks, int mts, double v_peri) const {
    TimingEpoch ep;
    ep.tck_ns = 2000.0 / mts;
    ep.trfc_cycles = cycles_ceil(cfg.trfc_ns, ep.tck_ns);
    ep.trefi_cycles = cycles_ceil(cfg.trefi_ns, ep.tck_ns);
    ep.v_array = v_array;
    ep.v_peripheral = v_peri;
    ep.channel_mts = mts;
    ep.bank_timings.resize(cfg.banks);

    const timing::TimingParams& sel = table.lookup(v_array);
    const timing::TimingParams& nom = table.rows.front().t;
    for (int b = 0; b < cfg.banks; ++b) {
      const timing::TimingParams& src = b < slow_banks || slow_banks < 0 ? sel : nom;
      if (mts == 1600) {
        ep.bank_timings[b] = src;
      } else {
        // Frequency steps run JEDEC-nominal latencies re-gridded to the
        // slower clock; the table's reduced-latency rows are 1600-only.
        ep.bank_timings[b] = timing::timing_from_ns(src.trcd_ns(), src.trp_ns(),
                                                    src.tras_ns(), src.tcl_ns(),
                                                    src.tcwl_ns(), ep.tck_ns);
      }
    }
    return ep;
  }

  bool epoch_equal(const TimingEpoch& a, const TimingEpoch& b) const {
    if (a.channel_mts != b.channel_mts) return false;
    if (std::fabs(a.v_array - b.v_array) > 1e-9) return false;
    if (std::fabs(a.v_peripheral - b.v_peripheral) > 1e-9) return false;
    for (int i = 0; i < cfg.banks; ++i) {
      const auto& x = a.bank_timings[i];
      const auto& y = b.bank_timings[i];
      if (x.trcd != y.trcd || x.trp != y.trp || x.tras != y.tras ||
          x.tcl != y.tcl || x.tcwl != y.tcwl)
        return false;
    }
    return true;
  }

  void begin_epoch(const TimingEpoch& ep) {
    bool first = stats.epochs.empty();
    double old_tck = active.tck_ns;
    if (!first) {
      seg.duration_ns = (double)(cycle - seg_start) * active.tck_ns;
      stats.segments.push_back(seg);
    }
    active = ep;
    active.start_cycle = cycle;
    stats.epochs.push_back(active);
    seg = power::EnergySegment{};
    seg.v_array = ep.v_array;
    seg.v_peripheral = ep.v_peripheral;
    seg.channel_mts = ep.channel_mts;
    seg_start = cycle;
    for (auto& ch : channels) {
      if (first) {
        ch.ref_due = cycle + (uint64_t)active.trefi_cycles;
      } else if (ch.ref_due > cycle && old_tck != active.tck_ns) {
        // Refresh cadence is a wall-clock obligation; re-grid the countdown.
        double left_ns = (double)(ch.ref_due - cycle) * old_tck;
        ch.ref_due = cycle + (uint64_t)std::llround(left_ns / active.tck_ns);
      }
    }
  }

  void log_command(int channel, int bank, Command cmd, int row) {
    if (cfg.record_commands)
      stats.commands.push_back({cycle, (int32_t)row, (int16_t)channel, (int16_t)bank, cmd});
  }

  void recount_hits(ChannelState& ch, int bank) {
    BankState& bs = ch.banks[bank];
    bs.queued_hits = 0;
    if (bs.open_row < 0) return;
    for (const auto& r : ch.rq)
      if (r.bank == bank && r.row == bs.open_row) ++bs.queued_hits;
    for (const auto& r : ch.wq)
      if (r.bank == bank && r.row == bs.open_row) ++bs.queued_hits;
  }

  void issue_act(ChannelState& ch, int chan, int bank, int row) {
    BankState& bs = ch.banks[bank];
    const auto& t = active.bank_timings[bank];
    bs.open_row = row;
    bs.next_col = cycle + t.trcd;
    bs.next_pre = cycle + t.tras;
    recount_hits(ch, bank);
    ++stats.n_act;
    ++seg.n_act;
    log_command(chan, bank, Command::act, row);
  }

  void issue_pre(ChannelState& ch, int chan, int bank) {
    BankState& bs = ch.banks[bank];
    const auto& t = active.bank_timings[bank];
    bs.open_row = -1;
    bs.queued_hits = 0;
    bs.next_act = std::max(bs.next_act, cycle + (uint64_t)t.trp);
    ++stats.n_pre;
    log_command(chan, bank, Command::pre, -1);
  }

  void issue_ref(ChannelState& ch, int chan) {
    for (auto& bs : ch.banks) bs.next_act = std::max(bs.next_act, cycle + (uint64_t)active.trfc_cycles);
    ch.ref_due += active.trefi_cycles;
    ch.ref_active = false;
    ++stats.n_ref;
    ++seg.n_ref;
    log_command(chan, -1, Command::ref, -1);
  }

  void issue_column(ChannelState& ch, int chan, std::vector<Request>& q, size_t i) {
    Request r = q[i];
    q.erase(q.begin() + i);
    BankState& bs = ch.banks[r.bank];
    const auto& t = active.bank_timings[r.bank];
    if (bs.queued_hits > 0) --bs.queued_hits;

    uint64_t start = cycle + (uint64_t)(r.is_write ? t.tcwl : t.tcl);
    uint64_t end = start + timing::kDataCycles;
    ch.bus_free = end;
    ch.busy_total += timing::kDataCycles;
    ch.busy_interval += timing::kDataCycles;
    bs.next_pre = std::max(bs.next_pre, end);  // keep the row until data moved

    if (r.is_write) {
      ++stats.n_wr;
      ++seg.n_wr;
      log_command(chan, r.bank, Command::wr, r.row);
    } else {
      ++stats.n_rd;
      ++seg.n_rd;
      ++stats.reads_issued;
      log_command(chan, r.bank, Command::rd, r.row);
      events.push({end, r.id, r.core, r.arrival, r.address, r.channel, r.bank, r.row});
    }
  }

  // One scheduling attempt over a queue: the oldest issuable row hit wins,
  // otherwise the oldest request whose preparatory command can go now.
  bool try_issue(ChannelState& ch, int chan, std::vector<Request>& q, bool allow_act) {
    for (size_t i = 0; i < q.size(); ++i) {
      const Request& r = q[i];
      const BankState& bs = ch.banks[r.bank];
      if (bs.open_row != r.row || bs.next_col > cycle) continue;
      const auto& t = active.bank_timings[r.bank];
      uint64_t start = cycle + (uint64_t)(r.is_write ? t.tcwl : t.tcl);
      if (start < ch.bus_free) continue;
      issue_column(ch, chan, q, i);
      return true;
    }
    for (size_t i = 0; i < q.size(); ++i) {
      const Request& r = q[i];
      BankState& bs = ch.banks[r.bank];
      if (bs.open_row < 0) {
        if (!allow_act || bs.next_act > cycle) continue;
        issue_act(ch, chan, r.bank, r.row);
        return true;
      }
      if (bs.open_row != r.row) {
        // Close a conflicting row only once no queued request still hits it.
        if (bs.queued_hits > 0 || bs.next_pre > cycle) continue;
        issue_pre(ch, chan, r.bank);
        return true;
      }
    }
    return false;
  }

  void schedule_channel(ChannelState& ch, int chan) {
    if (!ch.ref_active && cycle >= ch.ref_due) ch.ref_active = true;

    if (ch.ref_active) {
      // Refresh preempts: close every bank, then REF as one rank command.
      bool all_closed = true;
      for (const auto& bs : ch.banks)
        if (bs.open_row >= 0) all_closed = false;
      if (all_closed) {
        for (const auto& bs : ch.banks)
          if (bs.next_act > cycle) return;
        issue_ref(ch, chan);
        return;
      }
      for (int b = 0; b < cfg.banks; ++b) {
        BankState& bs = ch.banks[b];
        if (bs.open_row >= 0 && bs.next_pre <= cycle) {
          issue_pre(ch, chan, b);
          return;
        }
      }
      return;
    }

    if (pending_epoch) {
      // Quiesce: finish open-row work, close rows, no new activations.
      if (try_issue(ch, chan, ch.rq, false)) return;
      if (try_issue(ch, chan, ch.wq, false)) return;
      for (int b = 0; b < cfg.banks; ++b) {
        BankState& bs = ch.banks[b];
        if (bs.open_row >= 0 && bs.queued_hits == 0 && bs.next_pre <= cycle) {
          issue_pre(ch, chan, b);
          return;
        }
      }
      return;
    }

    bool drain = (int)ch.wq.size() >= cfg.write_drain_watermark;
    std::vector<Request>& prim = drain ? ch.wq : ch.rq;
    std::vector<Request>& sec = drain ? ch.rq : ch.wq;
    if (try_issue(ch, chan, prim, true)) return;
    try_issue(ch, chan, sec, true);
  }

  bool channel_drained(const ChannelState& ch) const {
    if (ch.bus_free > cycle) return false;
    for (const auto& bs : ch.banks)
      if (bs.open_row >= 0) return false;
    return true;
  }

  void core_retire(CoreRt& c) {
    int budget = cfg.retire_width;
    bool retired_any = false;
    while (budget > 0 && !c.window.empty()) {
      WindowItem& h = c.window.front();
      if (h.read_id == 0) {
        uint32_t k = std::min<uint32_t>((uint32_t)budget, h.plain);
        h.plain -= k;
        budget -= (int)k;
        c.retired += k;
        c.i_retired += k;
        c.occupancy -= (int)k;
        retired_any |= k > 0;
        if (h.plain == 0)
          c.window.pop_front();
        else
          break;
      } else {
        auto it = ready_reads.find(h.read_id);
        if (it == ready_reads.end()) break;
        ready_reads.erase(it);
        c.window.pop_front();
        --c.occupancy;
        ++c.retired;
        ++c.i_retired;
        --budget;
        retired_any = true;
      }
    }
    if (!retired_any && !c.window.empty() && c.window.front().read_id != 0) {
      ++c.stall;
      ++c.i_stall;
    }
  }

  void push_plain(CoreRt& c) {
    if (!c.window.empty() && c.window.back().read_id == 0)
      ++c.window.back().plain;
    else
      c.window.push_back({1, 0});
    ++c.occupancy;
  }

  void core_dispatch(CoreRt& c, int core_id) {
    int budget = cfg.retire_width;
    while (budget > 0 && c.occupancy < cfg.window_entries && !c.trace_drained()) {
      if (c.bubble_left > 0) {
        push_plain(c);
        --c.bubble_left;
        --budget;
        continue;
      }
      const trace::Entry& e = (*c.tr)[c.idx];
      DecodedAddress d = decode_address(cfg, e.address);
      ChannelState& ch = channels[d.channel];
      Request r{next_req_id, core_id, e.is_write, e.address,
                d.channel, d.bank, d.row, d.column, cycle};
      if (e.is_write) {
        if ((int)ch.wq.size() >= cfg.write_queue_entries) break;
        ch.wq.push_back(r);
        if (ch.banks[d.bank].open_row == d.row) ++ch.banks[d.bank].queued_hits;
        push_plain(c);  // writes retire with the queue entry as their home
        ++c.writes;
        if (cfg.record_requests)
          stats.requests.push_back({core_id, true, e.address, cycle, cycle,
                                    d.channel, d.bank, d.row});
      } else {
        if ((int)ch.rq.size() >= cfg.read_queue_entries) break;
        ch.rq.push_back(r);
        if (ch.banks[d.bank].open_row == d.row) ++ch.banks[d.bank].queued_hits;
        c.window.push_back({0, next_req_id});
        ++c.occupancy;
        ++c.reads;
        ++c.i_reads;
      }
      ++next_req_id;
      --budget;
      ++c.idx;
      if (!c.trace_drained()) c.bubble_left = (*c.tr)[c.idx].bubble;
    }
  }

  void policy_hook() {
    std::vector<CoreIntervalSample> samples;
    samples.reserve(cores.size());
    uint64_t interval = cfg.interval_cycles;
    for (auto& c : cores) {
      samples.push_back({c.i_retired, c.i_reads, c.i_stall});
      c.i_retired = c.i_reads = c.i_stall = 0;
    }
    voltron::WorkloadProfile prof = collect_profile(samples, interval);

    double util = 0.0;
    for (auto& ch : channels) {
      util += (double)ch.busy_interval / (double)interval;
      ch.busy_interval = 0;
    }
    util /= (double)channels.size();

    DecisionRecord dec{cycle, pol.policy, active.v_array, active.channel_mts, 0.0, 0};
    TimingEpoch ep = active;
    bool change = false;

    auto latency_at = [&](double v) {
      const timing::TimingParams& t = table.lookup(v);
      return t.tras_ns() + t.trp_ns();
    };

    switch (pol.policy) {
      case Policy::fixed:
        dec.predicted_loss =
            voltron::predict_loss(pol.coeffs, latency_at(active.v_array), prof.mpki,
                                  prof.stall_frac);
        break;
      case Policy::voltron:
      case Policy::voltron_bl: {
        double v = voltron::select_array_voltage(table, pol.coeffs, prof,
                                                 pol.target_loss_pct);
        int slow = pol.policy == Policy::voltron_bl
                       ? voltron::slow_bank_count(v, table.rows.front().v, cfg.banks)
                       : -1;  // -1: every bank uses the selected timings
        dec.v_array = v;
        dec.predicted_loss =
            voltron::predict_loss(pol.coeffs, latency_at(v), prof.mpki, prof.stall_frac);
        dec.slow_banks = slow < 0 ? 0 : slow;
        ep = make_epoch(v, slow, 1600, active.v_peripheral);
        change = true;
        break;
      }
      case Policy::memdvfs: {
        voltron::MemDvfsPoint pt = voltron::memdvfs_select(util, pol.memdvfs_hi, pol.memdvfs_lo);
        dec.v_array = pt.voltage;
        dec.channel_mts = pt.channel_mts;
        // Whole-chip step: nominal JEDEC latencies on the slower clock, one
        // voltage for array and peripherals alike.
        ep = make_epoch(table.rows.front().v, -1, pt.channel_mts, pt.voltage);
        ep.v_array = pt.voltage;
        change = true;
        break;
      }
    }
    stats.decisions.push_back(dec);
    if (change && !epoch_equal(ep, active)) {
      next_epoch = ep;
      pending_epoch = true;
    }
  }

  void process_completions() {
    while (!events.empty() && events.top().cycle <= cycle) {
      Completion ev = events.top();
      events.pop();
      ready_reads.insert(ev.read_id);
      ++stats.reads_completed;
      stats.read_latency_cycles_total += (double)(ev.cycle - ev.arrival);
      if (cfg.record_requests)
        stats.requests.push_back({ev.core, false, ev.address, ev.arrival, ev.cycle,
                                  ev.channel, ev.bank, ev.row});
    }
  }

  bool work_remaining() const {
    if (!events.empty()) return true;
    for (const auto& c : cores)
      if (!c.trace_drained() || !c.window.empty()) return true;
    for (const auto& ch : channels)
      if (!ch.rq.empty() || !ch.wq.empty()) return true;
    return false;
  }

  SimStats run(const std::vector<std::vector<trace::Entry>>& traces, double v_initial) {
    cores.resize(traces.size());
    for (size_t i = 0; i < traces.size(); ++i) {
      cores[i].tr = &traces[i];
      if (!traces[i].empty()) cores[i].bubble_left = traces[i][0].bubble;
    }
    channels.assign(cfg.channels, ChannelState{});
    for (auto& ch : channels) ch.banks.assign(cfg.banks, BankState{});

    int slow0 = pol.policy == Policy::voltron_bl
                    ? voltron::slow_bank_count(v_initial, table.rows.front().v, cfg.banks)
                    : -1;
    begin_epoch(make_epoch(v_initial, slow0, 1600, 1.35));

    while (work_remaining()) {
      if (cfg.max_cycles && cycle >= cfg.max_cycles) break;
      if (cfg.interval_cycles && cycle > 0 && cycle % cfg.interval_cycles == 0)
        policy_hook();

      for (size_t i = 0; i < cores.size(); ++i) {
        CoreRt& c = cores[i];
        if (c.done) continue;
        core_retire(c);
        core_dispatch(c, (int)i);
        if (c.trace_drained() && c.window.empty()) {
          c.done = true;
          c.finish_cycle = cycle + 1;
        }
      }

      process_completions();
      if (pending_epoch) {
        bool drained = true;
        for (const auto& ch : channels)
          if (!channel_drained(ch)) drained = false;
        if (drained) {
          begin_epoch(next_epoch);
          pending_epoch = false;
        }
      }
      for (int ci = 0; ci < cfg.channels; ++ci) schedule_channel(channels[ci], ci);

      ++cycle;
    }

    stats.cycles = cycle;
    seg.duration_ns = (double)(cycle - seg_start) * active.tck_ns;
    stats.segments.push_back(seg);
    for (const auto& s : stats.segments) stats.runtime_ns += s.duration_ns;

    stats.cores.resize(cores.size());
    for (size_t i = 0; i < cores.size(); ++i) {
      const CoreRt& c = cores[i];
      CoreStats& cs = stats.cores[i];
      cs.instructions = c.retired;
      cs.reads = c.reads;
      cs.writes = c.writes;
      cs.stall_cycles = c.stall;
      cs.finish_cycle = c.done ? c.finish_cycle : 0;
      uint64_t span = c.done ? c.finish_cycle : cycle;
      cs.ipc = span ? (double)c.retired / (double)span : 0.0;
      cs.mpki = c.retired ? 1000.0 * (double)c.reads / (double)c.retired : 0.0;
      cs.stall_frac = span ? (double)c.stall / (double)span : 0.0;
    }
    stats.channel_util.resize(channels.size());
    for (size_t i = 0; i < channels.size(); ++i)
      stats.channel_util[i] = cycle ? (double)channels[i].busy_total / (double)cycle : 0.0;
    return std::move(stats);
  }
};

}  // namespace

Policy policy_from_string(const std::string& s) {
  if (s == "fixed") return Policy::fixed;
  if (s == "voltron") return Policy::voltron;
  if (s == "voltron_bl") return Policy::voltron_bl;
  if (s == "memdvfs") return Policy::memdvfs;
  throw std::invalid_argument("unknown policy '" + s + "'");
}

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::fixed: return "fixed";
    case Policy::voltron: return "voltron";
    case Policy::voltron_bl: return "voltron_bl";
    case Policy::memdvfs: return "memdvfs";
  }
  return "?";
}

const char* command_name(Command c) {
  switch (c) {
    case Command::act: return "ACT";
    case Command::pre: return "PRE";
    case Command::rd: return "RD";
    case Command::wr: return "WR";
    case Command::ref: return "REF";
  }
  return "?";
}

void validate(const SystemConfig& cfg) {
  if (cfg.cores < 1 || cfg.cores > 8) throw std::invalid_argument("cores must be 1..8");
  if (!is_pow2(cfg.channels) || !is_pow2(cfg.banks) || !is_pow2(cfg.rows_per_bank) ||
      !is_pow2(cfg.columns_per_row) || !is_pow2(cfg.line_bytes))
    throw std::invalid_argument("channels/banks/rows/columns/line_bytes must be powers of two");
  if (cfg.window_entries < 1 || cfg.retire_width < 1)
    throw std::invalid_argument("window and retire width must be positive");
  if (cfg.read_queue_entries < 1 || cfg.write_queue_entries < 1)
    throw std::invalid_argument("queue sizes must be positive");
  if (cfg.write_drain_watermark < 1 || cfg.write_drain_watermark > cfg.write_queue_entries)
    throw std::invalid_argument("drain watermark outside the write queue");
  if (cfg.interval_cycles == 0) throw std::invalid_argument("interval_cycles must be positive");
  if (cfg.trefi_ns <= 0 || cfg.trfc_ns <= 0)
    throw std::invalid_argument("refresh constants must be positive");
}

DecodedAddress decode_address(const SystemConfig& cfg, uint64_t address) {
  uint64_t x = address >> log2i(cfg.line_bytes);
  DecodedAddress d;
  d.channel = (int)(x & (uint64_t)(cfg.channels - 1));
  x >>= log2i(cfg.channels);
  d.column = (int)(x & (uint64_t)(cfg.columns_per_row - 1));
  x >>= log2i(cfg.columns_per_row);
  d.bank = (int)(x & (uint64_t)(cfg.banks - 1));
  x >>= log2i(cfg.banks);
  d.row = (int)(x & (uint64_t)(cfg.rows_per_bank - 1));
  x >>= log2i(cfg.rows_per_bank);
  if (x != 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "address 0x%llx outside mapped space",
                  (unsigned long long)address);
    throw std::out_of_range(buf);
  }
  return d;
}

SimStats run_simulation(const SystemConfig& cfg, const timing::LatencyTable& table,
                        const std::vector<std::vector<trace::Entry>>& traces,
                        const PolicyConfig& policy, double v_initial) {
  validate(cfg);
  if (traces.empty() || (int)traces.size() > cfg.cores)
    throw std::invalid_argument("need between 1 and cores traces");
  if (!table.has(v_initial))
    throw std::invalid_argument("initial voltage is not a table row");
  Sim sim(cfg, table, policy);
  return sim.run(traces, v_initial);
}

uint64_t encode_address(const SystemConfig& cfg, const DecodedAddress& d) {
  if (d.channel < 0 || d.channel >= cfg.channels || d.bank < 0 || d.bank >= cfg.banks ||
      d.row < 0 || d.row >= cfg.rows_per_bank || d.column < 0 ||
      d.column >= cfg.columns_per_row)
    throw std::out_of_range("decoded fields outside geometry");
  uint64_t x = (uint64_t)d.row;
  x = (x << log2i(cfg.banks)) | (uint64_t)d.bank;
  x = (x << log2i(cfg.columns_per_row)) | (uint64_t)d.column;
  x = (x << log2i(cfg.channels)) | (uint64_t)d.channel;
  return x << log2i(cfg.line_bytes);
}

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "mem") return SynthKind::mem_intensive;
  if (s == "compute") return SynthKind::compute_heavy;
  if (s == "random") return SynthKind::uniform_random;
  if (s == "stream") return SynthKind::row_stream;
  throw std::invalid_argument("unknown trace kind '" + s + "' (mem|compute|random|stream)");
}

const char* synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::mem_intensive: return "mem";
    case SynthKind::compute_heavy: return "compute";
    case SynthKind::uniform_random: return "random";
    case SynthKind::row_stream: return "stream";
  }
  return "?";
}

std::vector<trace::Entry> synthesize_trace(const SystemConfig& cfg, SynthKind kind,
                                           size_t entries, uint64_t seed) {
  validate(cfg);
  voltsim::Rng rng(seed, 0x7261ce);
  std::vector<trace::Entry> out;
  out.reserve(entries);

  DecodedAddress cur;
  cur.channel = (int)(rng.next() % cfg.channels);
  cur.bank = (int)(rng.next() % cfg.banks);
  cur.row = (int)(rng.next() % cfg.rows_per_bank);
  cur.column = (int)(rng.next() % cfg.columns_per_row);

  auto jump = [&] {
    cur.channel = (int)(rng.next() % cfg.channels);
    cur.bank = (int)(rng.next() % cfg.banks);
    cur.row = (int)(rng.next() % cfg.rows_per_bank);
    cur.column = (int)(rng.next() % cfg.columns_per_row);
  };
  auto step = [&] {
    cur.column = (cur.column + 1) % cfg.columns_per_row;
    if (cur.column == 0) cur.row = (cur.row + 1) % cfg.rows_per_bank;
  };

  for (size_t i = 0; i < entries; ++i) {
    uint32_t bubble = 0;
    bool is_write = false;
    switch (kind) {
      case SynthKind::mem_intensive:
        bubble = 20 + (uint32_t)(rng.next() % 21);
        if (rng.uniform() < 0.2) jump(); else step();
        is_write = rng.uniform() < 0.25;
        break;
      case SynthKind::compute_heavy:
        bubble = 450 + (uint32_t)(rng.next() % 301);
        if (rng.uniform() < 0.05) jump(); else step();
        is_write = rng.uniform() < 0.3;
        break;
      case SynthKind::uniform_random:
        bubble = 10 + (uint32_t)(rng.next() % 41);
        jump();
        is_write = rng.uniform() < 0.3;
        break;
      case SynthKind::row_stream:
        bubble = 2 + (uint32_t)(rng.next() % 5);
        cur.channel = (int)(i % cfg.channels);
        step();
        is_write = rng.uniform() < 0.2;
        break;
    }
    out.push_back({bubble, encode_address(cfg, cur), is_write});
  }
  return out;
}

double weighted_speedup(const std::vector<double>& ipc_alone,
                        const std::vector<double>& ipc_shared) {
  if (ipc_alone.size() != ipc_shared.size() || ipc_alone.empty())
    throw std::invalid_argument("IPC vectors must match");
  double ws = 0.0;
  for (size_t i = 0; i < ipc_alone.size(); ++i) {
    if (ipc_alone[i] <= 0.0) throw std::invalid_argument("alone IPC must be positive");
    ws += ipc_shared[i] / ipc_alone[i];
  }
  return ws;
}

voltron::WorkloadProfile collect_profile(const std::vector<CoreIntervalSample>& cores,
                                         uint64_t interval_cycles) {
  if (interval_cycles == 0) throw std::invalid_argument("interval must be positive");
  uint64_t instr = 0, reads = 0;
  double stall = 0.0;
  for (const auto& c : cores) {
    instr += c.instructions;
    reads += c.reads;
    stall += (double)c.stall_cycles / (double)interval_cycles;
  }
  voltron::WorkloadProfile p;
  p.mpki = instr ? 1000.0 * (double)reads / (double)instr : 0.0;
  p.stall_frac = cores.empty() ? 0.0 : stall / (double)cores.size();
  return p;
}

namespace {

struct AuditBank {
  int open_row = -1;
  uint64_t act_ready = 0;  // ACT/REF earliest cycle (tRP, tRFC)
  uint64_t col_ready = 0;  // tRCD
  uint64_t pre_ready = 0;  // tRAS
};

}  // namespace

AuditResult audit_command_log(const SimStats& stats, const SystemConfig& cfg) {
  AuditResult res;
  if (stats.epochs.empty()) {
    res.first_violation = "no timing epochs recorded";
    res.violations = stats.commands.empty() ? 0 : 1;
    return res;
  }

  std::vector<std::vector<AuditBank>> banks(
      cfg.channels, std::vector<AuditBank>(cfg.banks));
  std::vector<uint64_t> bus_free(cfg.channels, 0);
  std::vector<double> last_ref_ns(cfg.channels, -1.0);
  size_t ep_idx = 0;
  uint64_t prev_cycle = 0;

  // Wall-clock position of each epoch start, so refresh cadence can be
  // checked in ns across frequency changes.
  std::vector<double> epoch_base_ns(stats.epochs.size(), 0.0);
  for (size_t i = 1; i < stats.epochs.size(); ++i)
    epoch_base_ns[i] =
        epoch_base_ns[i - 1] + (double)(stats.epochs[i].start_cycle -
                                        stats.epochs[i - 1].start_cycle) *
                                   stats.epochs[i - 1].tck_ns;

  auto flag = [&](const CommandRecord& c, const std::string& what) {
    ++res.violations;
    if (res.first_violation.empty()) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "cycle %llu ch%d bank%d %s: ",
                    (unsigned long long)c.cycle, (int)c.channel, (int)c.bank,
                    command_name(c.cmd));
      res.first_violation = buf + what;
    }
  };

  for (const CommandRecord& c : stats.commands) {
    ++res.commands_checked;
    if (c.cycle < prev_cycle) flag(c, "log out of order");
    prev_cycle = c.cycle;
    while (ep_idx + 1 < stats.epochs.size() &&
           stats.epochs[ep_idx + 1].start_cycle <= c.cycle)
      ++ep_idx;
    const TimingEpoch& ep = stats.epochs[ep_idx];

    if (c.channel < 0 || c.channel >= cfg.channels) {
      flag(c, "bad channel");
      continue;
    }
    auto& chb = banks[c.channel];

    if (c.cmd == Command::ref) {
      for (int b = 0; b < cfg.banks; ++b) {
        if (chb[b].open_row >= 0) flag(c, "REF with open bank");
        if (c.cycle < chb[b].act_ready) flag(c, "REF inside tRP/tRFC window");
      }
      double now_ns = epoch_base_ns[ep_idx] +
                      (double)(c.cycle - ep.start_cycle) * ep.tck_ns;
      if (last_ref_ns[c.channel] >= 0.0) {
        // Queue pressure may delay a REF by at most one in-flight row cycle.
        const auto& t = ep.bank_timings[0];
        double slack_ns = (double)(t.tras + t.trp + std::max(t.tcl, t.tcwl) +
                                   timing::kDataCycles + 8) *
                          ep.tck_ns;
        if (now_ns - last_ref_ns[c.channel] > cfg.trefi_ns + slack_ns)
          flag(c, "refresh overdue");
      }
      last_ref_ns[c.channel] = now_ns;
      for (int b = 0; b < cfg.banks; ++b)
        chb[b].act_ready = std::max(chb[b].act_ready, c.cycle + (uint64_t)ep.trfc_cycles);
      continue;
    }

    if (c.bank < 0 || c.bank >= cfg.banks) {
      flag(c, "bad bank");
      continue;
    }
    AuditBank& bs = chb[c.bank];
    const timing::TimingParams& t = ep.bank_timings[c.bank];

    switch (c.cmd) {
      case Command::act:
        if (bs.open_row >= 0) flag(c, "ACT on open bank");
        if (c.cycle < bs.act_ready) flag(c, "tRP/tRFC violated");
        bs.open_row = c.row;
        bs.col_ready = c.cycle + (uint64_t)t.trcd;
        bs.pre_ready = c.cycle + (uint64_t)t.tras;
        break;
      case Command::rd:
      case Command::wr: {
        if (bs.open_row != c.row) flag(c, "column command to wrong row");
        if (c.cycle < bs.col_ready) flag(c, "tRCD violated");
        uint64_t start = c.cycle + (uint64_t)(c.cmd == Command::wr ? t.tcwl : t.tcl);
        if (start < bus_free[c.channel]) flag(c, "data bus overlap");
        bus_free[c.channel] = start + timing::kDataCycles;
        bs.pre_ready = std::max(bs.pre_ready, start + timing::kDataCycles);
        break;
      }
      case Command::pre:
        if (bs.open_row < 0) flag(c, "PRE on closed bank");
        if (c.cycle < bs.pre_ready) flag(c, "tRAS violated");
        bs.open_row = -1;
        bs.act_ready = std::max(bs.act_ready, c.cycle + (uint64_t)t.trp);
        break;
      case Command::ref:
        break;
    }
  }
  return res;
}

void write_stats_json(const SimStats& s, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "{\n");
  std::fprintf(f, "  \"cycles\": %llu,\n", (unsigned long long)s.cycles);
  std::fprintf(f, "  \"runtime_ns\": %.6f,\n", s.runtime_ns);
  std::fprintf(f, "  \"commands\": {\"act\": %llu, \"pre\": %llu, \"rd\": %llu, \"wr\": %llu, \"ref\": %llu},\n",
               (unsigned long long)s.n_act, (unsigned long long)s.n_pre,
               (unsigned long long)s.n_rd, (unsigned long long)s.n_wr,
               (unsigned long long)s.n_ref);
  std::fprintf(f, "  \"reads_issued\": %llu,\n", (unsigned long long)s.reads_issued);
  std::fprintf(f, "  \"reads_completed\": %llu,\n", (unsigned long long)s.reads_completed);
  std::fprintf(f, "  \"avg_read_latency_cycles\": %.6f,\n", s.avg_read_latency_cycles());
  std::fprintf(f, "  \"channel_util\": [");
  for (size_t i = 0; i < s.channel_util.size(); ++i)
    std::fprintf(f, "%s%.9f", i ? ", " : "", s.channel_util[i]);
  std::fprintf(f, "],\n");
  std::fprintf(f, "  \"cores\": [\n");
  for (size_t i = 0; i < s.cores.size(); ++i) {
    const CoreStats& c = s.cores[i];
    std::fprintf(f,
                 "    {\"instructions\": %llu, \"reads\": %llu, \"writes\": %llu, "
                 "\"stall_cycles\": %llu, \"finish_cycle\": %llu, \"ipc\": %.9f, "
                 "\"mpki\": %.9f, \"stall_frac\": %.9f}%s\n",
                 (unsigned long long)c.instructions, (unsigned long long)c.reads,
                 (unsigned long long)c.writes, (unsigned long long)c.stall_cycles,
                 (unsigned long long)c.finish_cycle, c.ipc, c.mpki, c.stall_frac,
                 i + 1 < s.cores.size() ? "," : "");
  }
  std::fprintf(f, "  ]\n}\n");
  std::fclose(f);
}

void write_command_log_csv(const SimStats& s, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "cycle,channel,bank,cmd,row\n");
  for (const auto& c : s.commands)
    std::fprintf(f, "%llu,%d,%d,%s,%d\n", (unsigned long long)c.cycle, (int)c.channel,
                 (int)c.bank, command_name(c.cmd), (int)c.row);
  std::fclose(f);
}

void write_decision_log_csv(const SimStats& s, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "cycle,policy,v_array,freq,predicted_loss,slow_banks\n");
  for (const auto& d : s.decisions)
    std::fprintf(f, "%llu,%s,%.2f,%d,%.6f,%d\n", (unsigned long long)d.cycle,
                 policy_name(d.policy), d.v_array, d.channel_mts, d.predicted_loss,
                 d.slow_banks);
  std::fclose(f);
}

}  // namespace voltsim::memsim
