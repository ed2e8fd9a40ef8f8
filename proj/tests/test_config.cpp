#include <filesystem>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "voltsim/config.hpp"
#include "voltsim/trace.hpp"

using namespace voltsim;

TEST_CASE("config defaults survive an empty file") {
  config::RunConfig cfg = config::parse("", "inline");
  CHECK(cfg.system.cores == 4);
  CHECK(cfg.system.channels == 2);
  CHECK(cfg.table_source == timing::TableSource::reference);
  CHECK(cfg.guardband == doctest::Approx(1.375));
  CHECK(cfg.policy.policy == memsim::Policy::fixed);
  CHECK(cfg.v_initial == 1.35);
  CHECK(cfg.seed == 1);
}

TEST_CASE("config parses sections, comments and booleans") {
  const char* text =
      "# top comment\n"
      "[system]\n"
      "cores = 2            ; trailing comment\n"
      "max_cycles = 5000000\n"
      "record_commands = yes\n"
      "record_requests = 0\n"
      "\n"
      "[timing]\n"
      "source = model\n"
      "guardband = 1.5\n"
      "\n"
      "[policy]\n"
      "policy = voltron_bl\n"
      "target_loss_pct = 7.5\n"
      "v_initial = 1.25\n"
      "seed = 99\n";
  config::RunConfig cfg = config::parse(text, "inline");
  CHECK(cfg.system.cores == 2);
  CHECK(cfg.system.max_cycles == 5000000);
  CHECK(cfg.system.record_commands);
  CHECK_FALSE(cfg.system.record_requests);
  CHECK(cfg.table_source == timing::TableSource::model);
  CHECK(cfg.guardband == doctest::Approx(1.5));
  CHECK(cfg.policy.policy == memsim::Policy::voltron_bl);
  CHECK(cfg.policy.target_loss_pct == doctest::Approx(7.5));
  CHECK(cfg.v_initial == doctest::Approx(1.25));
  CHECK(cfg.seed == 99);
}

static std::string error_of(const char* text) {
  try {
    config::parse(text, "cfg.ini");
    return "";
  } catch (const std::exception& e) {
    return e.what();
  }
}

TEST_CASE("config errors carry the origin and line") {
  std::string e = error_of("[system]\nwidth = 4\n");
  CHECK(e.find("cfg.ini:2") != std::string::npos);
  CHECK(e.find("unknown key") != std::string::npos);

  e = error_of("[cpu]\n");
  CHECK(e.find("cfg.ini:1") != std::string::npos);
  CHECK(e.find("unknown section") != std::string::npos);

  e = error_of("cores = 4\n");
  CHECK(e.find("outside any section") != std::string::npos);

  e = error_of("[system]\ncores = four\n");
  CHECK(e.find("bad number") != std::string::npos);

  e = error_of("[system]\ncores = 2.5\n");
  CHECK(e.find("expected integer") != std::string::npos);

  e = error_of("[system]\nrecord_commands = maybe\n");
  CHECK(e.find("bad boolean") != std::string::npos);

  e = error_of("[system]\ncores\n");
  CHECK(e.find("expected key = value") != std::string::npos);

  e = error_of("[timing]\nsource = guess\n");
  CHECK(e.find("reference or model") != std::string::npos);

  e = error_of("[policy]\npolicy = turbo\n");
  CHECK(e.find("unknown policy") != std::string::npos);
}

TEST_CASE("config validation rejects inconsistent values") {
  CHECK_THROWS(config::parse("[system]\nwrite_drain_watermark = 100\n", "x"));
  CHECK_THROWS(config::parse("[policy]\ntarget_loss_pct = -1\n", "x"));
  CHECK_THROWS(config::parse("[timing]\nguardband = 0.9\n", "x"));
  CHECK_THROWS(config::parse("[system]\ncores = 0\n", "x"));
}

TEST_CASE("config round trips through save and load") {
  namespace fs = std::filesystem;
  config::RunConfig cfg;
  cfg.system.cores = 3;
  cfg.system.interval_cycles = 123456;
  cfg.system.record_commands = true;
  cfg.table_source = timing::TableSource::model;
  cfg.guardband = 1.4;
  cfg.circuit.c_cell_ff = 25.0;
  cfg.power.e_ref_nj = 110.0;
  cfg.policy.policy = memsim::Policy::memdvfs;
  cfg.policy.target_loss_pct = 3.0;
  cfg.v_initial = 1.25;
  cfg.seed = 777;

  fs::path path = fs::temp_directory_path() / "voltsim_cfg_test.ini";
  config::save(cfg, path.string());
  config::RunConfig r = config::load(path.string());
  CHECK(r.system.cores == 3);
  CHECK(r.system.interval_cycles == 123456);
  CHECK(r.system.record_commands);
  CHECK(r.table_source == timing::TableSource::model);
  CHECK(r.guardband == doctest::Approx(1.4));
  CHECK(r.circuit.c_cell_ff == doctest::Approx(25.0));
  CHECK(r.power.e_ref_nj == doctest::Approx(110.0));
  CHECK(r.policy.policy == memsim::Policy::memdvfs);
  CHECK(r.policy.target_loss_pct == doctest::Approx(3.0));
  CHECK(r.v_initial == doctest::Approx(1.25));
  CHECK(r.seed == 777);
  fs::remove(path);

  CHECK_THROWS(config::load("/nonexistent/voltsim.ini"));
}

TEST_CASE("trace parsing") {
  std::vector<trace::Entry> t = trace::parse(
      "# header comment\n"
      "0 0x1a40 R\n"
      "\n"
      "12 ff W\n"
      "3 0X2B00 r\n",
      "t.trace");
  REQUIRE(t.size() == 3);
  CHECK(t[0].bubble == 0);
  CHECK(t[0].address == 0x1a40);
  CHECK_FALSE(t[0].is_write);
  CHECK(t[1].bubble == 12);
  CHECK(t[1].address == 0xff);
  CHECK(t[1].is_write);
  CHECK(t[2].address == 0x2b00);
  CHECK_FALSE(t[2].is_write);
}

static std::string trace_error_of(const char* text) {
  try {
    trace::parse(text, "t.trace");
    return "";
  } catch (const std::exception& e) {
    return e.what();
  }
}

TEST_CASE("trace errors carry the origin and line") {
  std::string e = trace_error_of("0 0x10 R\nx 0x10 R\n");
  CHECK(e.find("t.trace:2") != std::string::npos);

  e = trace_error_of("1 0xZZ R\n");
  CHECK(!e.empty());
  e = trace_error_of("1 0x10 X\n");
  CHECK(e.find("t.trace:1") != std::string::npos);
  e = trace_error_of("1 0x10 R extra\n");
  CHECK(!e.empty());
  e = trace_error_of("1\n");
  CHECK(!e.empty());
}

TEST_CASE("trace round trips through save and load") {
  namespace fs = std::filesystem;
  std::vector<trace::Entry> t = {{0, 0x40, false}, {100, 0x1234567, true}, {7, 0, false}};
  fs::path path = fs::temp_directory_path() / "voltsim_trace_test.trace";
  trace::save(t, path.string());
  std::vector<trace::Entry> r = trace::load(path.string());
  REQUIRE(r.size() == t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    CHECK(r[i].bubble == t[i].bubble);
    CHECK(r[i].address == t[i].address);
    CHECK(r[i].is_write == t[i].is_write);
  }
  fs::remove(path);

  CHECK_THROWS(trace::load("/nonexistent/x.trace"));
}
