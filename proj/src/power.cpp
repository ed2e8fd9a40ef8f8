#include "voltsim/power.hpp"

#include <cstdio>
#include <stdexcept>

namespace voltsim::power {

double scale_array_energy(double e_nominal, double v_array, double v_nominal) {
  if (v_array <= 0.0 || v_nominal <= 0.0)
    throw std::invalid_argument("voltages must be positive");
  double r = v_array / v_nominal;
  return e_nominal * r * r;
}

double scale_peripheral_power(double p_nominal, double v_peri, double v_nominal,
                              int mts, int mts_nominal) {
  if (v_peri <= 0.0 || v_nominal <= 0.0 || mts <= 0 || mts_nominal <= 0)
    throw std::invalid_argument("bad peripheral scaling inputs");
  double r = v_peri / v_nominal;
  return p_nominal * r * r * ((double)mts / (double)mts_nominal);
}

EnergyReport account(const std::vector<EnergySegment>& segments,
                     const PowerConfig& cfg, int n_cores) {
  EnergyReport rep;
  for (const auto& s : segments) {
    double ra = (s.v_array / cfg.v_nominal) * (s.v_array / cfg.v_nominal);
    double rp = (s.v_peripheral / cfg.v_nominal) * (s.v_peripheral / cfg.v_nominal);
    rep.array_dynamic_nj += ra * (s.n_act * cfg.e_act_pre_nj +
                                  s.n_rd * cfg.e_rd_array_nj +
                                  s.n_wr * cfg.e_wr_array_nj +
                                  s.n_ref * cfg.e_ref_nj);
    rep.peri_dynamic_nj += rp * (s.n_rd * cfg.e_rd_io_nj + s.n_wr * cfg.e_wr_io_nj);
    // background: mW * ns = pJ, so /1e3 for nJ
    rep.array_static_nj += ra * cfg.p_static_array_mw * s.duration_ns / 1e3;
    rep.peri_static_nj +=
        scale_peripheral_power(cfg.p_static_peri_mw, s.v_peripheral,
                               cfg.v_nominal, s.channel_mts, cfg.mts_nominal) *
        s.duration_ns / 1e3;
    rep.runtime_ns += s.duration_ns;
  }
  rep.cpu_nj = cfg.cpu_w_per_core * n_cores * rep.runtime_ns;  // W * ns = nJ
  return rep;
}

double EnergyReport::dram_power_mw() const {
  if (runtime_ns <= 0.0) return 0.0;
  return dram_nj() / runtime_ns * 1e3;  // nJ/ns = W, so *1e3 for mW
}

void write_energy_json(const EnergyReport& r, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f,
               "{\n"
               "  \"array_dynamic_nj\": %.6f,\n"
               "  \"peri_dynamic_nj\": %.6f,\n"
               "  \"array_static_nj\": %.6f,\n"
               "  \"peri_static_nj\": %.6f,\n"
               "  \"dram_nj\": %.6f,\n"
               "  \"cpu_nj\": %.6f,\n"
               "  \"system_nj\": %.6f,\n"
               "  \"runtime_ns\": %.6f,\n"
               "  \"dram_avg_power_mw\": %.6f,\n"
               "  \"dram_share\": %.6f,\n"
               "  \"cpu_share\": %.6f\n"
               "}\n",
               r.array_dynamic_nj, r.peri_dynamic_nj, r.array_static_nj,
               r.peri_static_nj, r.dram_nj(), r.cpu_nj, r.system_nj(),
               r.runtime_ns, r.dram_power_mw(), r.dram_share(), r.cpu_share());
  std::fclose(f);
}

}  // namespace voltsim::power
