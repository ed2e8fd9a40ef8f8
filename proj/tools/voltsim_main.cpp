// Front end for the reduced-voltage DRAM simulator: timing tables, bitline
// traces, cycle-level runs, voltage sweeps, DIMM characterization, ANOVA on
// characterization output, and predictor fitting. Exit codes: 0 success,
// 1 runtime failure, 2 usage or configuration error.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "voltsim/circuit.hpp"
#include "voltsim/config.hpp"
#include "voltsim/errmodel.hpp"
#include "voltsim/memsim.hpp"
#include "voltsim/numerics.hpp"
#include "voltsim/power.hpp"
#include "voltsim/timing.hpp"
#include "voltsim/trace.hpp"
#include "voltsim/voltron.hpp"

namespace fs = std::filesystem;
using namespace voltsim;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> trace_paths;
  std::string policy;
  double target_loss = -1.0;  // negative: keep config value
  std::string seed_str;
  int jobs = 1;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonArgs& a, bool traces) {
  cmd->add_option("--config", a.config_path, "INI run configuration");
  if (traces)
    cmd->add_option("--trace", a.trace_paths, "trace file, one per core (repeatable)");
  cmd->add_option("--out-dir", a.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", a.seed_str, "seed (else VOLTSIM_SEED, else config)");
}

uint64_t parse_seed(const std::string& s) {
  size_t pos = 0;
  uint64_t v = std::stoull(s, &pos, 0);
  if (pos != s.size()) throw std::runtime_error("bad seed '" + s + "'");
  return v;
}

uint64_t resolve_seed(const CommonArgs& a, const config::RunConfig& rc) {
  if (!a.seed_str.empty()) return parse_seed(a.seed_str);
  if (const char* env = std::getenv("VOLTSIM_SEED"); env && *env)
    return parse_seed(env);
  return rc.seed;
}

config::RunConfig load_config(const CommonArgs& a) {
  config::RunConfig rc;
  if (!a.config_path.empty()) rc = config::load(a.config_path);
  if (!a.policy.empty()) rc.policy.policy = memsim::policy_from_string(a.policy);
  if (a.target_loss >= 0.0) rc.policy.target_loss_pct = a.target_loss;
  return rc;
}

timing::LatencyTable make_table(const config::RunConfig& rc) {
  return timing::build_latency_table(rc.table_source, rc.circuit, rc.guardband,
                                     timing::kTckNs);
}

std::vector<std::vector<trace::Entry>> load_traces(const CommonArgs& a) {
  if (a.trace_paths.empty())
    throw std::runtime_error("at least one --trace is required");
  std::vector<std::vector<trace::Entry>> traces;
  traces.reserve(a.trace_paths.size());
  for (const auto& p : a.trace_paths) traces.push_back(trace::load(p));
  return traces;
}

std::string out_path(const CommonArgs& a, const std::string& name) {
  fs::create_directories(a.out_dir);
  return (fs::path(a.out_dir) / name).string();
}

// ---- latency-table ---------------------------------------------------------

int cmd_latency_table(const CommonArgs& a, const std::string& source, bool recalibrate) {
  config::RunConfig rc;
  try {
    rc = load_config(a);
    if (source == "reference") rc.table_source = timing::TableSource::reference;
    else if (source == "model") rc.table_source = timing::TableSource::model;
    else if (!source.empty()) throw std::runtime_error("source must be reference or model");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    if (recalibrate) {
      rc.circuit = circuit::calibrate(rc.circuit, timing::reference_latency_rows(),
                                      rc.guardband, timing::kTckNs);
    }
    timing::LatencyTable t = make_table(rc);
    std::string path = out_path(a, "latency_table.csv");
    timing::write_latency_table_csv(t, path);
    std::printf("%s\n", path.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// ---- bitline ---------------------------------------------------------------

int cmd_bitline(const CommonArgs& a, double v, int cell, double pre_issue, double dt) {
  config::RunConfig rc;
  try {
    rc = load_config(a);
    if (v <= 0.0) throw std::runtime_error("--v must be positive");
    if (cell != 0 && cell != 1) throw std::runtime_error("--cell must be 0 or 1");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    circuit::RawLatencies raw = circuit::derive_min_latencies(rc.circuit, v);
    double t_pre = pre_issue > 0.0 ? pre_issue : raw.tras_ns;
    circuit::Trajectory tr = circuit::simulate_bitline(rc.circuit, v, cell, t_pre, dt);
    std::string path = out_path(a, "bitline.csv");
    circuit::write_trajectory_csv(tr, path);

    timing::Guarded rcd = timing::apply_guardband(raw.trcd_ns, rc.guardband, timing::kTckNs);
    timing::Guarded rp = timing::apply_guardband(raw.trp_ns, rc.guardband, timing::kTckNs);
    timing::Guarded ras = timing::apply_guardband(raw.tras_ns, rc.guardband, timing::kTckNs);
    std::printf("%s\n", path.c_str());
    std::printf("raw  ns: trcd %.4f  trp %.4f  tras %.4f\n", raw.trcd_ns, raw.trp_ns,
                raw.tras_ns);
    std::printf("used ns: trcd %.2f  trp %.2f  tras %.2f  (x%.3f guardband, %.2f ns clock)\n",
                rcd.ns, rp.ns, ras.ns, rc.guardband, timing::kTckNs);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// ---- simulate --------------------------------------------------------------

int cmd_simulate(const CommonArgs& a) {
  config::RunConfig rc;
  std::vector<std::vector<trace::Entry>> traces;
  try {
    rc = load_config(a);
    traces = load_traces(a);
    if ((int)traces.size() > rc.system.cores)
      throw std::runtime_error("more traces than configured cores");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    timing::LatencyTable table = make_table(rc);
    memsim::SimStats stats =
        memsim::run_simulation(rc.system, table, traces, rc.policy, rc.v_initial);
    power::EnergyReport energy =
        power::account(stats.segments, rc.power, (int)traces.size());

    memsim::write_stats_json(stats, out_path(a, "stats.json"));
    power::write_energy_json(energy, out_path(a, "energy.json"));
    memsim::write_decision_log_csv(stats, out_path(a, "decisions.csv"));
    if (rc.system.record_commands)
      memsim::write_command_log_csv(stats, out_path(a, "commands.csv"));

    std::printf("cycles %llu  runtime %.3f ms  reads %llu  dram %.1f%% of system energy\n",
                (unsigned long long)stats.cycles, stats.runtime_ns / 1e6,
                (unsigned long long)stats.reads_completed, 100.0 * energy.dram_share());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// ---- sweep -----------------------------------------------------------------

struct SweepPoint {
  double v;
  double ws;
  power::EnergyReport energy;
  bool ok = false;
  std::string error;
};

int cmd_sweep(const CommonArgs& a) {
  config::RunConfig rc;
  std::vector<std::vector<trace::Entry>> traces;
  try {
    rc = load_config(a);
    traces = load_traces(a);
    if ((int)traces.size() > rc.system.cores)
      throw std::runtime_error("more traces than configured cores");
    if (a.jobs < 1) throw std::runtime_error("--jobs must be >= 1");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    timing::LatencyTable table = make_table(rc);
    memsim::PolicyConfig fixed;
    fixed.policy = memsim::Policy::fixed;

    // Alone-run IPC per core at nominal anchors the weighted speedup.
    std::vector<double> alone;
    for (const auto& t : traces) {
      memsim::SimStats s = memsim::run_simulation(
          rc.system, table, {t}, fixed, table.rows.front().v);
      alone.push_back(s.cores[0].ipc);
    }

    std::vector<SweepPoint> points(table.rows.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= table.rows.size()) return;
        SweepPoint& pt = points[i];
        pt.v = table.rows[i].v;
        try {
          memsim::SimStats s =
              memsim::run_simulation(rc.system, table, traces, fixed, pt.v);
          std::vector<double> shared;
          for (const auto& c : s.cores) shared.push_back(c.ipc);
          pt.ws = memsim::weighted_speedup(alone, shared);
          pt.energy = power::account(s.segments, rc.power, (int)traces.size());
          pt.ok = true;
        } catch (const std::exception& e) {
          pt.error = e.what();
        }
      }
    };
    int n_workers = std::min<size_t>((size_t)a.jobs, table.rows.size());
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    const SweepPoint& base = points[0];  // rows are sorted from nominal down
    std::string path = out_path(a, "sweep.csv");
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "v_array,ws_loss_pct,dram_power_savings_pct,system_energy_savings_pct\n");
    std::string failure;
    for (const auto& pt : points) {
      if (!pt.ok || !base.ok) {
        if (failure.empty()) failure = pt.ok ? base.error : pt.error;
        std::fprintf(f, "%.2f,failed,failed,failed\n", pt.v);
        continue;
      }
      double ws_loss = 100.0 * (base.ws - pt.ws) / base.ws;
      double dp = 100.0 * (base.energy.dram_power_mw() - pt.energy.dram_power_mw()) /
                  base.energy.dram_power_mw();
      double se = 100.0 * (base.energy.system_nj() - pt.energy.system_nj()) /
                  base.energy.system_nj();
      std::fprintf(f, "%.2f,%.6f,%.6f,%.6f\n", pt.v, ws_loss, dp, se);
    }
    if (!failure.empty()) std::fprintf(f, "# aborted: %s\n", failure.c_str());
    std::fclose(f);
    if (!failure.empty()) {
      std::fprintf(stderr, "error: sweep member failed: %s\n", failure.c_str());
      return 1;
    }
    std::printf("%s\n", path.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// ---- characterize ----------------------------------------------------------

int cmd_characterize(const CommonArgs& a, const std::string& vendor,
                     const std::string& profile_path, int rounds) {
  errmodel::DimmProfile prof;
  config::RunConfig rc;
  try {
    rc = load_config(a);
    if (rounds < 1) throw std::runtime_error("--rounds must be >= 1");
    if (!profile_path.empty()) prof = errmodel::load_profile_json(profile_path);
    else if (vendor == "a") prof = errmodel::vendor_a_profile();
    else if (vendor == "b") prof = errmodel::vendor_b_profile();
    else if (vendor == "c") prof = errmodel::vendor_c_profile();
    else throw std::runtime_error("need --profile or --vendor a|b|c");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    uint64_t seed = resolve_seed(a, rc);
    double vmin = errmodel::find_vmin(prof, prof.reliable_trcd_ns, prof.reliable_trp_ns);

    std::string json_path = out_path(a, "characterize.json");
    FILE* jf = std::fopen(json_path.c_str(), "w");
    if (!jf) throw std::runtime_error("cannot open " + json_path);
    std::fprintf(jf, "{\n  \"vendor\": \"%s\",\n  \"v_min\": %.3f,\n", prof.vendor.c_str(), vmin);
    std::fprintf(jf, "  \"min_latency\": [\n");
    bool first = true;
    for (int mv = 1350; mv >= 900; mv -= 25) {
      double v = mv / 1000.0;
      errmodel::MinLatencyResult ml = errmodel::find_min_latencies_experimental(prof, v);
      std::fprintf(jf, "%s    {\"v\": %.3f, \"feasible\": %s, \"trcd_ns\": %.2f, \"trp_ns\": %.2f}",
                   first ? "" : ",\n", v, ml.feasible ? "true" : "false", ml.trcd_ns,
                   ml.trp_ns);
      first = false;
    }
    std::fprintf(jf, "\n  ]\n}\n");
    std::fclose(jf);

    FILE* bh = std::fopen(out_path(a, "beat_hist.csv").c_str(), "w");
    FILE* ber = std::fopen(out_path(a, "ber.csv").c_str(), "w");
    FILE* an = std::fopen(out_path(a, "anova.csv").c_str(), "w");
    if (!bh || !ber || !an) throw std::runtime_error("cannot open report files");
    std::fprintf(bh, "voltage,clean,one_bit,two_bit,more_bits\n");
    std::fprintf(ber, "voltage,pattern,round,ber\n");
    std::fprintf(an, "voltage,f,p\n");

    int start_mv = (int)std::lround(std::min(1.35, vmin + 0.05) * 1000.0);
    int stop_mv = (int)std::lround(std::max(0.90, prof.channel_fail_floor - 0.025) * 1000.0);
    for (int mv = start_mv; mv >= stop_mv; mv -= 25) {
      double v = mv / 1000.0;
      errmodel::ErrorReport rep =
          errmodel::voltage_test(prof, v, prof.reliable_trcd_ns, prof.reliable_trp_ns,
                                 errmodel::default_patterns(), rounds, seed);
      uint64_t beats = rep.lines_tested * 8;
      std::fprintf(bh, "%.3f,%.9g,%.9g,%.9g,%.9g\n", v,
                   (double)rep.beat_histogram[0] / (double)beats,
                   (double)rep.beat_histogram[1] / (double)beats,
                   (double)rep.beat_histogram[2] / (double)beats,
                   (double)rep.beat_histogram[3] / (double)beats);
      for (const auto& s : rep.ber)
        std::fprintf(ber, "%.3f,%d,%d,%.12g\n", v, s.pattern, s.round, s.ber);

      std::vector<std::vector<double>> groups(errmodel::default_patterns().size());
      for (const auto& s : rep.ber) groups[s.pattern].push_back(s.ber);
      errmodel::AnovaResult ar = errmodel::anova_oneway(groups);
      std::fprintf(an, "%.3f,%.9g,%.9g\n", v, ar.f, ar.p);

      char name[48];
      std::snprintf(name, sizeof name, "heatmap_%04d.csv", mv);
      errmodel::write_heatmap_csv(rep, out_path(a, name));
    }
    std::fclose(bh);
    std::fclose(ber);
    std::fclose(an);

    std::printf("vendor %s: v_min %.3f V (reliable latencies %.1f/%.1f ns), reports in %s\n",
                prof.vendor.c_str(), vmin, prof.reliable_trcd_ns, prof.reliable_trp_ns,
                a.out_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// ---- anova -----------------------------------------------------------------

int cmd_anova(const CommonArgs& a, const std::string& input) {
  // voltage,pattern,round,ber rows; one ANOVA across patterns per voltage
  std::map<long long, std::map<int, std::vector<double>>> by_voltage;
  try {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot open " + input);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line_no == 1) continue;  // header
      std::istringstream ls(line);
      std::string v_s, p_s, r_s, b_s;
      if (!std::getline(ls, v_s, ',') || !std::getline(ls, p_s, ',') ||
          !std::getline(ls, r_s, ',') || !std::getline(ls, b_s))
        throw std::runtime_error(input + ":" + std::to_string(line_no) +
                                 ": expected voltage,pattern,round,ber");
      long long mv = std::llround(std::stod(v_s) * 1000.0);
      by_voltage[mv][std::stoi(p_s)].push_back(std::stod(b_s));
    }
    if (by_voltage.empty()) throw std::runtime_error(input + ": no data rows");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    std::string path = out_path(a, "anova.csv");
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "voltage,f,p\n");
    for (auto it = by_voltage.rbegin(); it != by_voltage.rend(); ++it) {
      std::vector<std::vector<double>> groups;
      for (auto& [pat, vals] : it->second) groups.push_back(vals);
      errmodel::AnovaResult r = errmodel::anova_oneway(groups);
      std::fprintf(f, "%.3f,%.9g,%.9g\n", (double)it->first / 1000.0, r.f, r.p);
    }
    std::fclose(f);
    std::printf("%s\n", path.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// ---- fit-predictor ---------------------------------------------------------

int cmd_fit(const CommonArgs& a, const std::string& samples_path, double threshold) {
  std::vector<voltron::TrainSample> samples;
  config::RunConfig rc;
  try {
    rc = load_config(a);
    std::ifstream in(samples_path);
    if (!in) throw std::runtime_error("cannot open " + samples_path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line_no == 1) continue;  // header
      std::istringstream ls(line);
      voltron::TrainSample s;
      char c1, c2, c3;
      if (!(ls >> s.latency_ns >> c1 >> s.mpki >> c2 >> s.stall_frac >> c3 >> s.loss_pct) ||
          c1 != ',' || c2 != ',' || c3 != ',')
        throw std::runtime_error(samples_path + ":" + std::to_string(line_no) +
                                 ": expected latency_ns,mpki,stall_frac,loss_pct");
      samples.push_back(s);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    uint64_t seed = resolve_seed(a, rc);
    voltron::FitReport fit = voltron::fit_predictor(samples, seed, threshold);
    std::string path = out_path(a, "fit.json");
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    auto branch = [&](const char* name, const voltron::BranchFit& b, const double* c) {
      std::fprintf(f,
                   "  \"%s\": {\"alpha\": %.9g, \"beta_latency\": %.9g, \"beta_mpki\": %.9g, "
                   "\"beta_stall\": %.9g,\n          \"rmse_train\": %.9g, \"rmse_test\": %.9g, "
                   "\"r2_train\": %.9g, \"r2_test\": %.9g, \"n_train\": %d, \"n_test\": %d}",
                   name, c[0], c[1], c[2], c[3], b.rmse_train, b.rmse_test, b.r2_train,
                   b.r2_test, b.n_train, b.n_test);
    };
    std::fprintf(f, "{\n  \"mpki_threshold\": %.9g,\n", threshold);
    branch("low_mpki", fit.low, fit.coeffs.low);
    std::fprintf(f, ",\n");
    branch("high_mpki", fit.high, fit.coeffs.high);
    std::fprintf(f, "\n}\n");
    std::fclose(f);
    std::printf("%s\n", path.c_str());
    return 0;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven reduced-voltage DRAM simulator"};
  app.require_subcommand(1);

  CommonArgs a_table, a_bit, a_sim, a_sweep, a_char, a_anova, a_fit;

  auto* c_table = app.add_subcommand("latency-table", "emit the voltage/latency table");
  add_common(c_table, a_table, false);
  std::string table_source;
  bool recalibrate = false;
  c_table->add_option("--source", table_source, "reference|model (overrides config)");
  c_table->add_flag("--calibrate", recalibrate, "refit circuit parameters first");

  auto* c_bit = app.add_subcommand("bitline", "trace the bitline voltage during a row cycle");
  add_common(c_bit, a_bit, false);
  double bit_v = 1.35, bit_pre = 0.0, bit_dt = 0.01;
  int bit_cell = 1;
  c_bit->add_option("--v", bit_v, "array voltage")->capture_default_str();
  c_bit->add_option("--cell", bit_cell, "stored bit, 0 or 1")->capture_default_str();
  c_bit->add_option("--pre-issue-ns", bit_pre, "PRE issue time (default: derived tRAS)");
  c_bit->add_option("--dt-ns", bit_dt, "integration step")->capture_default_str();

  auto* c_sim = app.add_subcommand("simulate", "run traces under a policy");
  add_common(c_sim, a_sim, true);
  c_sim->add_option("--policy", a_sim.policy, "fixed|voltron|voltron_bl|memdvfs");
  c_sim->add_option("--target-loss", a_sim.target_loss, "performance loss budget, percent");

  auto* c_sweep = app.add_subcommand("sweep", "fixed-policy run per table voltage");
  add_common(c_sweep, a_sweep, true);
  c_sweep->add_option("--jobs", a_sweep.jobs, "concurrent runs")->capture_default_str();

  auto* c_char = app.add_subcommand("characterize", "profile a synthetic DIMM");
  add_common(c_char, a_char, false);
  std::string vendor, profile_path;
  int rounds = 30;
  c_char->add_option("--vendor", vendor, "builtin profile: a|b|c");
  c_char->add_option("--profile", profile_path, "DIMM profile JSON");
  c_char->add_option("--rounds", rounds, "test rounds per pattern")->capture_default_str();

  auto* c_anova = app.add_subcommand("anova", "pattern-effect ANOVA over a BER table");
  add_common(c_anova, a_anova, false);
  std::string anova_input;
  c_anova->add_option("--input", anova_input, "ber.csv from characterize")->required();

  auto* c_fit = app.add_subcommand("fit-predictor", "OLS fit of the loss predictor");
  add_common(c_fit, a_fit, false);
  std::string samples_path;
  double fit_threshold = 15.0;
  c_fit->add_option("--samples", samples_path, "latency_ns,mpki,stall_frac,loss_pct CSV")
      ->required();
  c_fit->add_option("--mpki-threshold", fit_threshold, "branch split")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (c_table->parsed()) return cmd_latency_table(a_table, table_source, recalibrate);
  if (c_bit->parsed()) return cmd_bitline(a_bit, bit_v, bit_cell, bit_pre, bit_dt);
  if (c_sim->parsed()) return cmd_simulate(a_sim);
  if (c_sweep->parsed()) return cmd_sweep(a_sweep);
  if (c_char->parsed()) return cmd_characterize(a_char, vendor, profile_path, rounds);
  if (c_anova->parsed()) return cmd_anova(a_anova, anova_input);
  if (c_fit->parsed()) return cmd_fit(a_fit, samples_path, fit_threshold);
  return 2;
}
