#include "voltsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace voltsim::config {

namespace {

[[noreturn]] void fail(const std::string& origin, size_t line, const std::string& what) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Setter {
  const std::string& origin;
  size_t line;
  const std::string& value;

  double num() const {
    try {
      size_t pos = 0;
      double v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail(origin, line, "bad number '" + value + "'");
    }
  }
  int integer() const {
    double v = num();
    int i = (int)v;
    if ((double)i != v) fail(origin, line, "expected integer, got '" + value + "'");
    return i;
  }
  uint64_t u64() const {
    try {
      size_t pos = 0;
      uint64_t v = std::stoull(value, &pos);
      if (pos != value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail(origin, line, "bad unsigned integer '" + value + "'");
    }
  }
  bool boolean() const {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail(origin, line, "bad boolean '" + value + "'");
  }
};

}  // namespace

RunConfig parse(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    size_t cpos = line.find_first_of("#;");
    if (cpos != std::string::npos) line = trim(line.substr(0, cpos));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "system" && section != "timing" && section != "circuit" &&
          section != "power" && section != "policy")
        fail(origin, line_no, "unknown section [" + section + "]");
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail(origin, line_no, "expected key = value");
    if (section.empty()) fail(origin, line_no, "key outside any section");
    Setter v{origin, line_no, value};

    if (section == "system") {
      auto& s = cfg.system;
      if (key == "cores") s.cores = v.integer();
      else if (key == "channels") s.channels = v.integer();
      else if (key == "banks") s.banks = v.integer();
      else if (key == "rows_per_bank") s.rows_per_bank = v.integer();
      else if (key == "columns_per_row") s.columns_per_row = v.integer();
      else if (key == "line_bytes") s.line_bytes = v.integer();
      else if (key == "window_entries") s.window_entries = v.integer();
      else if (key == "retire_width") s.retire_width = v.integer();
      else if (key == "read_queue_entries") s.read_queue_entries = v.integer();
      else if (key == "write_queue_entries") s.write_queue_entries = v.integer();
      else if (key == "write_drain_watermark") s.write_drain_watermark = v.integer();
      else if (key == "interval_cycles") s.interval_cycles = v.u64();
      else if (key == "max_cycles") s.max_cycles = v.u64();
      else if (key == "trefi_ns") s.trefi_ns = v.num();
      else if (key == "trfc_ns") s.trfc_ns = v.num();
      else if (key == "record_commands") s.record_commands = v.boolean();
      else if (key == "record_requests") s.record_requests = v.boolean();
      else fail(origin, line_no, "unknown key '" + key + "' in [system]");
    } else if (section == "timing") {
      if (key == "source") {
        if (value == "reference") cfg.table_source = timing::TableSource::reference;
        else if (value == "model") cfg.table_source = timing::TableSource::model;
        else fail(origin, line_no, "source must be reference or model");
      } else if (key == "guardband") {
        cfg.guardband = v.num();
      } else {
        fail(origin, line_no, "unknown key '" + key + "' in [timing]");
      }
    } else if (section == "circuit") {
      auto& c = cfg.circuit;
      if (key == "c_cell_ff") c.c_cell_ff = v.num();
      else if (key == "c_bitline_ff") c.c_bitline_ff = v.num();
      else if (key == "v_nominal") c.v_nominal = v.num();
      else if (key == "t_charge_share_ns") c.t_charge_share_ns = v.num();
      else if (key == "tau0_sense_ns") c.tau0_sense_ns = v.num();
      else if (key == "vth_sense") c.vth_sense = v.num();
      else if (key == "tau0_restore_ns") c.tau0_restore_ns = v.num();
      else if (key == "vth_restore") c.vth_restore = v.num();
      else if (key == "tau0_precharge_ns") c.tau0_precharge_ns = v.num();
      else if (key == "vth_precharge") c.vth_precharge = v.num();
      else if (key == "thresh_access") c.thresh_access = v.num();
      else if (key == "thresh_restore") c.thresh_restore = v.num();
      else if (key == "thresh_precharge_band") c.thresh_precharge_band = v.num();
      else fail(origin, line_no, "unknown key '" + key + "' in [circuit]");
    } else if (section == "power") {
      auto& p = cfg.power;
      if (key == "e_act_pre_nj") p.e_act_pre_nj = v.num();
      else if (key == "e_rd_array_nj") p.e_rd_array_nj = v.num();
      else if (key == "e_wr_array_nj") p.e_wr_array_nj = v.num();
      else if (key == "e_ref_nj") p.e_ref_nj = v.num();
      else if (key == "e_rd_io_nj") p.e_rd_io_nj = v.num();
      else if (key == "e_wr_io_nj") p.e_wr_io_nj = v.num();
      else if (key == "p_static_array_mw") p.p_static_array_mw = v.num();
      else if (key == "p_static_peri_mw") p.p_static_peri_mw = v.num();
      else if (key == "cpu_w_per_core") p.cpu_w_per_core = v.num();
      else fail(origin, line_no, "unknown key '" + key + "' in [power]");
    } else if (section == "policy") {
      auto& p = cfg.policy;
      if (key == "policy") {
        try {
          p.policy = memsim::policy_from_string(value);
        } catch (const std::exception& e) {
          fail(origin, line_no, e.what());
        }
      } else if (key == "target_loss_pct") p.target_loss_pct = v.num();
      else if (key == "memdvfs_hi") p.memdvfs_hi = v.num();
      else if (key == "memdvfs_lo") p.memdvfs_lo = v.num();
      else if (key == "mpki_threshold") p.coeffs.mpki_threshold = v.num();
      else if (key == "v_initial") cfg.v_initial = v.num();
      else if (key == "seed") cfg.seed = v.u64();
      else fail(origin, line_no, "unknown key '" + key + "' in [policy]");
    }
  }

  memsim::validate(cfg.system);
  if (cfg.policy.target_loss_pct < 0)
    throw std::runtime_error(origin + ": target_loss_pct must be >= 0");
  if (cfg.guardband < 1.0)
    throw std::runtime_error(origin + ": guardband must be >= 1");
  return cfg;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void save(const RunConfig& cfg, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  const auto& s = cfg.system;
  std::fprintf(f, "[system]\n");
  std::fprintf(f, "cores = %d\nchannels = %d\nbanks = %d\n", s.cores, s.channels, s.banks);
  std::fprintf(f, "rows_per_bank = %d\ncolumns_per_row = %d\nline_bytes = %d\n",
               s.rows_per_bank, s.columns_per_row, s.line_bytes);
  std::fprintf(f, "window_entries = %d\nretire_width = %d\n", s.window_entries, s.retire_width);
  std::fprintf(f, "read_queue_entries = %d\nwrite_queue_entries = %d\nwrite_drain_watermark = %d\n",
               s.read_queue_entries, s.write_queue_entries, s.write_drain_watermark);
  std::fprintf(f, "interval_cycles = %llu\nmax_cycles = %llu\n",
               (unsigned long long)s.interval_cycles, (unsigned long long)s.max_cycles);
  std::fprintf(f, "trefi_ns = %g\ntrfc_ns = %g\n", s.trefi_ns, s.trfc_ns);
  std::fprintf(f, "record_commands = %s\nrecord_requests = %s\n",
               s.record_commands ? "true" : "false", s.record_requests ? "true" : "false");

  std::fprintf(f, "\n[timing]\nsource = %s\nguardband = %g\n",
               cfg.table_source == timing::TableSource::model ? "model" : "reference",
               cfg.guardband);

  const auto& c = cfg.circuit;
  std::fprintf(f, "\n[circuit]\n");
  std::fprintf(f, "c_cell_ff = %g\nc_bitline_ff = %g\nv_nominal = %g\n",
               c.c_cell_ff, c.c_bitline_ff, c.v_nominal);
  std::fprintf(f, "t_charge_share_ns = %g\n", c.t_charge_share_ns);
  std::fprintf(f, "tau0_sense_ns = %g\nvth_sense = %g\n", c.tau0_sense_ns, c.vth_sense);
  std::fprintf(f, "tau0_restore_ns = %g\nvth_restore = %g\n", c.tau0_restore_ns, c.vth_restore);
  std::fprintf(f, "tau0_precharge_ns = %g\nvth_precharge = %g\n", c.tau0_precharge_ns,
               c.vth_precharge);

  const auto& p = cfg.power;
  std::fprintf(f, "\n[power]\n");
  std::fprintf(f, "e_act_pre_nj = %g\ne_rd_array_nj = %g\ne_wr_array_nj = %g\ne_ref_nj = %g\n",
               p.e_act_pre_nj, p.e_rd_array_nj, p.e_wr_array_nj, p.e_ref_nj);
  std::fprintf(f, "e_rd_io_nj = %g\ne_wr_io_nj = %g\n", p.e_rd_io_nj, p.e_wr_io_nj);
  std::fprintf(f, "p_static_array_mw = %g\np_static_peri_mw = %g\ncpu_w_per_core = %g\n",
               p.p_static_array_mw, p.p_static_peri_mw, p.cpu_w_per_core);

  std::fprintf(f, "\n[policy]\n");
  std::fprintf(f, "policy = %s\ntarget_loss_pct = %g\n", memsim::policy_name(cfg.policy.policy),
               cfg.policy.target_loss_pct);
  std::fprintf(f, "memdvfs_hi = %g\nmemdvfs_lo = %g\n", cfg.policy.memdvfs_hi,
               cfg.policy.memdvfs_lo);
  std::fprintf(f, "v_initial = %g\nseed = %llu\n", cfg.v_initial,
               (unsigned long long)cfg.seed);
  std::fclose(f);
}

}  // namespace voltsim::config
