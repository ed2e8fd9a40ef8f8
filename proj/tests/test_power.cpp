#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "voltsim/power.hpp"

using namespace voltsim;

TEST_CASE("array energy scales with the voltage ratio squared") {
  CHECK(power::scale_array_energy(10.0, 0.90, 1.35) ==
        doctest::Approx(10.0 * 4.0 / 9.0).epsilon(1e-12));
  CHECK(power::scale_array_energy(7.5, 1.35, 1.35) == doctest::Approx(7.5).epsilon(1e-12));
  CHECK_THROWS_AS(power::scale_array_energy(1.0, 0.0, 1.35), std::invalid_argument);
}

TEST_CASE("peripheral power scales with voltage squared and channel rate") {
  // (1.25/1.35)^2 * (1066/1600) = 1665.625/2916
  CHECK(power::scale_peripheral_power(1.0, 1.25, 1.35, 1066, 1600) ==
        doctest::Approx(0.5712019890260631).epsilon(1e-12));
  CHECK(power::scale_peripheral_power(65.0, 1.35, 1.35, 1600, 1600) ==
        doctest::Approx(65.0).epsilon(1e-12));
  CHECK_THROWS_AS(power::scale_peripheral_power(1.0, 1.25, 1.35, 0, 1600),
                  std::invalid_argument);
}

TEST_CASE("account sums command energy, background energy and cpu energy") {
  power::PowerConfig cfg;  // nominal: 15/4/4/120 nJ, 6 nJ IO, 65 mW statics
  power::EnergySegment s;
  s.duration_ns = 1000.0;
  s.n_act = 10;
  s.n_rd = 5;
  s.n_wr = 3;
  s.n_ref = 2;
  power::EnergyReport rep = power::account({s}, cfg, 4);

  CHECK(rep.array_dynamic_nj ==
        doctest::Approx(10 * 15.0 + 5 * 4.0 + 3 * 4.0 + 2 * 120.0).epsilon(1e-12));
  CHECK(rep.peri_dynamic_nj == doctest::Approx(5 * 6.0 + 3 * 6.0).epsilon(1e-12));
  CHECK(rep.array_static_nj == doctest::Approx(65.0).epsilon(1e-12));  // 65 mW * 1 us
  CHECK(rep.peri_static_nj == doctest::Approx(65.0).epsilon(1e-12));
  CHECK(rep.cpu_nj == doctest::Approx(4000.0).epsilon(1e-12));  // 4 W * 1 us
  CHECK(rep.runtime_ns == 1000.0);
  CHECK(rep.system_nj() == doctest::Approx(rep.dram_nj() + 4000.0).epsilon(1e-12));
  CHECK(rep.dram_share() + rep.cpu_share() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reduced array voltage scales exactly the array buckets") {
  power::PowerConfig cfg;
  power::EnergySegment nom, low;
  nom.duration_ns = low.duration_ns = 5000.0;
  nom.n_act = low.n_act = 100;
  nom.n_rd = low.n_rd = 80;
  nom.n_wr = low.n_wr = 20;
  nom.n_ref = low.n_ref = 4;
  low.v_array = 0.90;  // peripheral stays nominal

  power::EnergyReport rn = power::account({nom}, cfg, 4);
  power::EnergyReport rl = power::account({low}, cfg, 4);
  double want = (0.90 / 1.35) * (0.90 / 1.35);
  CHECK(rl.array_dynamic_nj / rn.array_dynamic_nj == doctest::Approx(want).epsilon(1e-12));
  CHECK(rl.array_static_nj / rn.array_static_nj == doctest::Approx(want).epsilon(1e-12));
  CHECK(rl.peri_dynamic_nj == doctest::Approx(rn.peri_dynamic_nj).epsilon(1e-12));
  CHECK(rl.peri_static_nj == doctest::Approx(rn.peri_static_nj).epsilon(1e-12));
  CHECK(rl.cpu_nj == doctest::Approx(rn.cpu_nj).epsilon(1e-12));
}

TEST_CASE("dram power is energy over runtime") {
  power::PowerConfig cfg;
  power::EnergySegment s;
  s.duration_ns = 2000.0;
  power::EnergyReport rep = power::account({s}, cfg, 1);
  // statics only: 130 mW
  CHECK(rep.dram_power_mw() == doctest::Approx(130.0).epsilon(1e-12));
  power::EnergyReport empty;
  CHECK(empty.dram_power_mw() == 0.0);
}

TEST_CASE("energy json lands on disk") {
  namespace fs = std::filesystem;
  power::PowerConfig cfg;
  power::EnergySegment s;
  s.duration_ns = 100.0;
  power::EnergyReport rep = power::account({s}, cfg, 2);
  fs::path path = fs::temp_directory_path() / "voltsim_energy_test.json";
  power::write_energy_json(rep, path.string());
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("\"dram_nj\"") != std::string::npos);
  fs::remove(path);
}
