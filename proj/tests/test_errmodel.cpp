#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "voltsim/errmodel.hpp"

#include "anova_oracle.inc"

using namespace voltsim;

TEST_CASE("spatial weight combines bank mask and row clusters") {
  errmodel::DimmProfile c = errmodel::vendor_c_profile();
  CHECK(errmodel::spatial_weight(c, 0, 100) == doctest::Approx(1.0));
  CHECK(errmodel::spatial_weight(c, 2, 100) == 0.0);
  CHECK(errmodel::spatial_weight(c, 7, 100) == 0.0);
  CHECK_THROWS_AS(errmodel::spatial_weight(c, 8, 0), std::out_of_range);
  CHECK_THROWS_AS(errmodel::spatial_weight(c, 0, -1), std::out_of_range);

  errmodel::DimmProfile b = errmodel::vendor_b_profile();
  // cluster centers carry full weight, the floor applies far away
  CHECK(errmodel::spatial_weight(b, 0, 300) == doctest::Approx(1.0).epsilon(1e-6));
  double base = errmodel::spatial_weight(b, 0, 10);  // far from both clusters
  CHECK(base >= 0.04);
  CHECK(base < 0.06);
  double near = errmodel::spatial_weight(b, 0, 330);
  double far = errmodel::spatial_weight(b, 0, 600);
  CHECK(near > far);
}

TEST_CASE("required latency steps along the profile grid") {
  errmodel::DimmProfile a = errmodel::vendor_a_profile();
  errmodel::RequiredLatency r = errmodel::required_latency(a, 1.15);
  CHECK(r.trcd_ns == 10.0);  // at or above v_min: reliable values
  r = errmodel::required_latency(a, 1.075);
  CHECK(r.trcd_ns == 12.5);
  CHECK(r.trp_ns == 12.5);
  r = errmodel::required_latency(a, 1.06);  // between grid rows: next below
  CHECK(r.trcd_ns == 12.5);
  CHECK(r.trp_ns == 15.0);
  r = errmodel::required_latency(a, 0.91);
  CHECK(r.trcd_ns == 25.0);
  CHECK(r.trp_ns == 30.0);
}

TEST_CASE("line error probability gates on vmin, latency cover and the floor") {
  errmodel::DimmProfile a = errmodel::vendor_a_profile();  // vmin 1.10, floor 1.05
  CHECK(errmodel::line_error_probability(a, 1.10, 10, 10, 0, 0) == 0.0);
  CHECK(errmodel::line_error_probability(a, 1.35, 10, 10, 0, 0) == 0.0);
  // just below vmin, reliable latencies no longer suffice
  CHECK(errmodel::line_error_probability(a, 1.075, 10, 10, 0, 0) > 0.0);
  // but the required (12.5, 12.5) rescue the voltage
  CHECK(errmodel::line_error_probability(a, 1.075, 12.5, 12.5, 0, 0) == 0.0);
  // below the channel floor no latency rescues anything
  CHECK(errmodel::line_error_probability(a, 1.025, 25.0, 30.0, 0, 0) > 0.0);
  // rate grows one decade per 25 mV
  double p1 = errmodel::line_error_probability(a, 1.075, 10, 10, 0, 0);
  double p2 = errmodel::line_error_probability(a, 1.050, 10, 10, 0, 0);
  CHECK(p2 / p1 == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("vmin scan lands on the configured value for every vendor") {
  errmodel::DimmProfile a = errmodel::vendor_a_profile();
  errmodel::DimmProfile b = errmodel::vendor_b_profile();
  errmodel::DimmProfile c = errmodel::vendor_c_profile();
  CHECK(errmodel::find_vmin(a, a.reliable_trcd_ns, a.reliable_trp_ns) ==
        doctest::Approx(1.10).epsilon(1e-9));
  CHECK(errmodel::find_vmin(b, b.reliable_trcd_ns, b.reliable_trp_ns) ==
        doctest::Approx(1.125).epsilon(1e-9));
  CHECK(errmodel::find_vmin(c, c.reliable_trcd_ns, c.reliable_trp_ns) ==
        doctest::Approx(1.30).epsilon(1e-9));
}

TEST_CASE("experimental latency search on the tester grid") {
  errmodel::DimmProfile c = errmodel::vendor_c_profile();
  errmodel::MinLatencyResult m = errmodel::find_min_latencies_experimental(c, 1.25);
  REQUIRE(m.feasible);
  CHECK(m.trcd_ns == 10.0);
  CHECK(m.trp_ns == 12.5);

  m = errmodel::find_min_latencies_experimental(c, 1.30);  // at vmin: reliable
  REQUIRE(m.feasible);
  CHECK(m.trcd_ns == c.reliable_trcd_ns);

  m = errmodel::find_min_latencies_experimental(c, 1.00);  // below the floor
  CHECK_FALSE(m.feasible);

  errmodel::DimmProfile b = errmodel::vendor_b_profile();
  m = errmodel::find_min_latencies_experimental(b, 1.00);
  REQUIRE(m.feasible);
  CHECK(m.trcd_ns == 15.0);
  CHECK(m.trp_ns == 20.0);
  m = errmodel::find_min_latencies_experimental(b, 0.90);  // needs 25/27.5 > cap
  CHECK_FALSE(m.feasible);
}

TEST_CASE("voltage test is clean at vmin and deterministic below") {
  errmodel::DimmProfile a = errmodel::vendor_a_profile();
  const auto& pats = errmodel::default_patterns();

  errmodel::ErrorReport clean = errmodel::voltage_test(a, 1.10, 10, 10, pats, 3, 42);
  CHECK(clean.lines_erroneous == 0);
  CHECK(clean.bit_errors == 0);
  CHECK(clean.beat_histogram[1] == 0);
  CHECK(clean.beat_histogram[2] == 0);
  CHECK(clean.beat_histogram[3] == 0);
  CHECK(clean.beat_histogram[0] == clean.lines_tested * 8);
  for (const auto& s : clean.ber) CHECK(s.ber == 0.0);

  errmodel::ErrorReport dirty = errmodel::voltage_test(a, 1.05, 10, 10, pats, 3, 42);
  CHECK(dirty.lines_erroneous > 0);
  // one disturbed beat per erroneous line
  CHECK(dirty.beat_histogram[1] + dirty.beat_histogram[2] + dirty.beat_histogram[3] ==
        dirty.lines_erroneous);
  CHECK(dirty.beat_histogram[0] + dirty.beat_histogram[1] + dirty.beat_histogram[2] +
            dirty.beat_histogram[3] ==
        dirty.lines_tested * 8);
  CHECK(dirty.bit_errors >= dirty.beat_histogram[1] + 2 * dirty.beat_histogram[2] +
                                3 * dirty.beat_histogram[3]);

  errmodel::ErrorReport again = errmodel::voltage_test(a, 1.05, 10, 10, pats, 3, 42);
  CHECK(again.lines_erroneous == dirty.lines_erroneous);
  CHECK(again.bit_errors == dirty.bit_errors);
  CHECK(again.beat_histogram == dirty.beat_histogram);

  errmodel::ErrorReport other = errmodel::voltage_test(a, 1.05, 10, 10, pats, 3, 43);
  CHECK(other.lines_erroneous != dirty.lines_erroneous);
}

TEST_CASE("uncorrectable beat fraction grows as the voltage falls") {
  errmodel::DimmProfile a = errmodel::vendor_a_profile();
  const auto& pats = errmodel::default_patterns();
  double prev = -1.0;
  for (double v : {1.075, 1.050, 1.025}) {
    errmodel::ErrorReport rep = errmodel::voltage_test(a, v, 10, 10, pats, 3, 7);
    double frac = (double)rep.beat_histogram[3] / (double)(rep.lines_tested * 8);
    CHECK(frac >= prev);
    prev = frac;
  }
  CHECK(prev > 0.0);
}

TEST_CASE("error heat map follows the spatial profile") {
  errmodel::DimmProfile c = errmodel::vendor_c_profile();
  errmodel::ErrorReport rep =
      errmodel::voltage_test(c, 1.25, 10, 10, errmodel::default_patterns(), 2, 11);
  // vendor C confines errors to banks 0 and 1
  uint64_t in_mask = 0, outside = 0;
  for (int b = 0; b < rep.banks; ++b)
    for (int r = 0; r < rep.rows; ++r)
      (b < 2 ? in_mask : outside) += rep.cell(b, r);
  CHECK(in_mask > 0);
  CHECK(outside == 0);

  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "voltsim_heatmap_test.csv";
  errmodel::write_heatmap_csv(rep, path.string());
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "bank,row,prob");
  fs::remove(path);
}

TEST_CASE("secded beat classification") {
  CHECK(errmodel::classify_beat(0) == errmodel::BeatClass::clean);
  CHECK(errmodel::classify_beat(1) == errmodel::BeatClass::corrected);
  CHECK(errmodel::classify_beat(2) == errmodel::BeatClass::detected);
  CHECK(errmodel::classify_beat(3) == errmodel::BeatClass::uncorrectable);
  CHECK(errmodel::classify_beat(64) == errmodel::BeatClass::uncorrectable);
  CHECK_THROWS_AS(errmodel::classify_beat(-1), std::invalid_argument);
  CHECK_THROWS_AS(errmodel::classify_beat(65), std::invalid_argument);
}

TEST_CASE("anova matches the frozen reference set") {
  for (const AnovaCase& c : anova_cases()) {
    errmodel::AnovaResult r = errmodel::anova_oneway(c.groups);
    CHECK(r.f == doctest::Approx(c.f).epsilon(1e-9));
    CHECK(std::fabs(r.p - c.p) < 1e-9);
  }
}

TEST_CASE("anova closed-form case") {
  // three groups of three with unit within-variance: F ~ F(2,6), p = 2^-3
  std::vector<std::vector<double>> g = {{-2, -1, 0}, {-1, 0, 1}, {0, 1, 2}};
  errmodel::AnovaResult r = errmodel::anova_oneway(g);
  CHECK(r.f == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(r.df_between == 2);
  CHECK(r.df_within == 6);
}

TEST_CASE("anova equals squared two-sample t") {
  std::vector<std::vector<double>> g = {{1.2, 2.3, 3.1, 4.0, 2.2}, {2.0, 3.5, 4.1, 2.8}};
  errmodel::AnovaResult r = errmodel::anova_oneway(g);
  CHECK(r.f == doctest::Approx(0.6600698486612336).epsilon(1e-9));
  CHECK(r.p == doctest::Approx(0.44328397827381244).epsilon(1e-9));
}

TEST_CASE("anova degenerate inputs") {
  CHECK_THROWS_AS(errmodel::anova_oneway({{1.0, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(errmodel::anova_oneway({{1.0}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(errmodel::anova_oneway({{1.0}, {2.0}}), std::invalid_argument);

  errmodel::AnovaResult flat = errmodel::anova_oneway({{1.0, 1.0}, {1.0, 1.0}});
  CHECK(flat.f == 0.0);
  CHECK(flat.p == 1.0);
  errmodel::AnovaResult split = errmodel::anova_oneway({{1.0, 1.0}, {2.0, 2.0}});
  CHECK(std::isinf(split.f));
  CHECK(split.p == 0.0);
}

TEST_CASE("profile json round trip") {
  namespace fs = std::filesystem;
  errmodel::DimmProfile b = errmodel::vendor_b_profile();
  fs::path path = fs::temp_directory_path() / "voltsim_profile_test.json";
  errmodel::save_profile_json(b, path.string());
  errmodel::DimmProfile r = errmodel::load_profile_json(path.string());
  CHECK(r.vendor == b.vendor);
  CHECK(r.v_min == doctest::Approx(b.v_min));
  CHECK(r.channel_fail_floor == doctest::Approx(b.channel_fail_floor));
  CHECK(r.rows == b.rows);
  CHECK(r.row_base == doctest::Approx(b.row_base));
  REQUIRE(r.clusters.size() == b.clusters.size());
  CHECK(r.clusters[0].center == b.clusters[0].center);
  REQUIRE(r.required.size() == b.required.size());
  CHECK(r.required[0].v == doctest::Approx(b.required[0].v));
  CHECK(r.required.front().v > r.required.back().v);  // sorted falling
  fs::remove(path);

  CHECK_THROWS(errmodel::load_profile_json("/nonexistent/profile.json"));

  errmodel::DimmProfile bad = b;
  bad.bank_weight.pop_back();
  CHECK_THROWS_AS(errmodel::save_profile_json(bad, path.string()), std::invalid_argument);
}
