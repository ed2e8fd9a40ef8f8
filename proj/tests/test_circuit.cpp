#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "voltsim/circuit.hpp"
#include "voltsim/timing.hpp"

using namespace voltsim;

TEST_CASE("charge sharing perturbs the half-vdd bitline by the cap ratio") {
  circuit::CircuitParams p;
  // delta = 1.35 * 24 / (2 * 168) = 1.35/14
  CHECK(circuit::charge_share_voltage(p, 1.35, 1) ==
        doctest::Approx(0.7714285714285714).epsilon(1e-12));
  CHECK(circuit::charge_share_voltage(p, 1.35, 0) ==
        doctest::Approx(0.5785714285714286).epsilon(1e-12));
  double mid = (circuit::charge_share_voltage(p, 1.35, 1) +
                circuit::charge_share_voltage(p, 1.35, 0)) / 2.0;
  CHECK(mid == doctest::Approx(0.675).epsilon(1e-12));
  CHECK_THROWS_AS(circuit::charge_share_voltage(p, 1.35, 2), std::invalid_argument);
  CHECK_THROWS_AS(circuit::charge_share_voltage(p, 0.0, 1), std::invalid_argument);
}

TEST_CASE("latencies grow monotonically as the array voltage drops") {
  circuit::CircuitParams p;
  circuit::RawLatencies prev = circuit::derive_min_latencies(p, 1.35);
  for (double v = 1.30; v > 0.895; v -= 0.05) {
    circuit::RawLatencies cur = circuit::derive_min_latencies(p, v);
    CHECK(cur.trcd_ns > prev.trcd_ns);
    CHECK(cur.trp_ns > prev.trp_ns);
    CHECK(cur.tras_ns > prev.tras_ns);
    prev = cur;
  }
}

TEST_CASE("integrated trajectory reproduces the analytic crossings") {
  circuit::CircuitParams p;
  for (double v : {1.35, 1.05}) {
    circuit::RawLatencies raw = circuit::derive_min_latencies(p, v);
    // issue PRE only after the bitline is essentially at vdd so the
    // closed-form worst-case precharge time applies
    double tau_r = p.tau0_restore_ns * (p.v_nominal - p.vth_restore) / (v - p.vth_restore);
    double t_pre = raw.tras_ns + 6.0 * tau_r;
    circuit::Trajectory tr = circuit::simulate_bitline(p, v, 1, t_pre);

    REQUIRE(tr.t_access_ns > 0.0);
    REQUIRE(tr.t_restore_ns > 0.0);
    REQUIRE(tr.t_precharged_ns > t_pre);
    CHECK(tr.t_access_ns == doctest::Approx(raw.trcd_ns).epsilon(0.005));
    CHECK(tr.t_restore_ns == doctest::Approx(raw.tras_ns).epsilon(0.005));
    CHECK(tr.t_precharged_ns - t_pre == doctest::Approx(raw.trp_ns).epsilon(0.005));
  }
}

TEST_CASE("cell value zero mirrors cell value one") {
  circuit::CircuitParams p;
  circuit::RawLatencies raw = circuit::derive_min_latencies(p, 1.35);
  circuit::Trajectory one = circuit::simulate_bitline(p, 1.35, 1, raw.tras_ns + 40.0);
  circuit::Trajectory zero = circuit::simulate_bitline(p, 1.35, 0, raw.tras_ns + 40.0);
  CHECK(one.t_access_ns == doctest::Approx(zero.t_access_ns).epsilon(0.01));
  CHECK(one.t_restore_ns == doctest::Approx(zero.t_restore_ns).epsilon(0.01));
}

TEST_CASE("trajectory stays inside the rails") {
  circuit::CircuitParams p;
  circuit::Trajectory tr = circuit::simulate_bitline(p, 0.90, 1, 60.0);
  for (const auto& pt : tr.points) {
    CHECK(pt.v >= -1e-9);
    CHECK(pt.v <= 0.90 + 1e-9);
  }
}

TEST_CASE("early precharge aborts the row cycle") {
  circuit::CircuitParams p;
  // PRE before charge sharing even finishes: no access, no restore
  circuit::Trajectory tr = circuit::simulate_bitline(p, 1.35, 1, 2.0);
  CHECK(tr.t_access_ns < 0.0);
  CHECK(tr.t_restore_ns < 0.0);
  CHECK(tr.t_precharged_ns >= 0.0);
}

TEST_CASE("calibration recovers a table-reproducing parameter set") {
  circuit::CircuitParams start;
  start.tau0_sense_ns *= 1.4;
  start.tau0_restore_ns *= 0.7;
  start.tau0_precharge_ns *= 1.3;
  start.t_charge_share_ns = 5.0;

  circuit::CircuitParams fit = circuit::calibrate(
      start, timing::reference_latency_rows(), timing::kGuardband, timing::kTckNs);

  timing::LatencyTable model =
      timing::build_latency_table(timing::TableSource::model, fit);
  const auto& ref = timing::reference_latency_rows();
  REQUIRE(model.rows.size() == ref.size());
  for (size_t i = 0; i < ref.size(); i++) {
    CHECK(std::fabs(model.rows[i].t.trcd_ns() - ref[i].trcd_ns) <= timing::kTckNs + 1e-9);
    CHECK(std::fabs(model.rows[i].t.trp_ns() - ref[i].trp_ns) <= timing::kTckNs + 1e-9);
    CHECK(std::fabs(model.rows[i].t.tras_ns() - ref[i].tras_ns) <= timing::kTckNs + 1e-9);
  }
  // nominal rows anchor the fit exactly
  for (size_t i = 0; i < 2; i++) {
    CHECK(model.rows[i].t.trcd_ns() == doctest::Approx(ref[i].trcd_ns).epsilon(1e-9));
    CHECK(model.rows[i].t.trp_ns() == doctest::Approx(ref[i].trp_ns).epsilon(1e-9));
    CHECK(model.rows[i].t.tras_ns() == doctest::Approx(ref[i].tras_ns).epsilon(1e-9));
  }
}
