#pragma once

#include <string>
#include <vector>

namespace voltsim::power {

// Energy magnitudes at the nominal operating point (1.35 V, 1600 MT/s).
// Array energies scale with (v_array/1.35)^2; peripheral energy scales with
// (v_peripheral/1.35)^2 and background peripheral power additionally with
// channel rate. The CPU is a constant-power core model.
struct PowerConfig {
  double v_nominal = 1.35;
  int mts_nominal = 1600;

  // per-command dynamic energy, nJ, per channel device
  double e_act_pre_nj = 15.0;  // one ACT + its PRE, array portion
  double e_rd_array_nj = 4.0;
  double e_wr_array_nj = 4.0;
  double e_ref_nj = 120.0;
  double e_rd_io_nj = 6.0;     // peripheral/IO portion of a read burst
  double e_wr_io_nj = 6.0;

  // background power, mW per channel device
  double p_static_array_mw = 65.0;
  double p_static_peri_mw = 65.0;

  double cpu_w_per_core = 1.0;
};

double scale_array_energy(double e_nominal, double v_array, double v_nominal);
double scale_peripheral_power(double p_nominal, double v_peri, double v_nominal,
                              int mts, int mts_nominal);

// One stretch of simulated time spent at a fixed operating point.
struct EnergySegment {
  double duration_ns = 0.0;
  double v_array = 1.35;
  double v_peripheral = 1.35;
  int channel_mts = 1600;
  unsigned long long n_act = 0;
  unsigned long long n_rd = 0;
  unsigned long long n_wr = 0;
  unsigned long long n_ref = 0;
};

struct EnergyReport {
  double array_dynamic_nj = 0.0;
  double peri_dynamic_nj = 0.0;
  double array_static_nj = 0.0;
  double peri_static_nj = 0.0;
  double cpu_nj = 0.0;
  double runtime_ns = 0.0;

  double dram_nj() const {
    return array_dynamic_nj + peri_dynamic_nj + array_static_nj + peri_static_nj;
  }
  double system_nj() const { return dram_nj() + cpu_nj; }
  double dram_power_mw() const;
  double dram_share() const { return dram_nj() / system_nj(); }
  double cpu_share() const { return cpu_nj / system_nj(); }
};

EnergyReport account(const std::vector<EnergySegment>& segments,
                     const PowerConfig& cfg, int n_cores);

void write_energy_json(const EnergyReport& r, const std::string& path);

}  // namespace voltsim::power
