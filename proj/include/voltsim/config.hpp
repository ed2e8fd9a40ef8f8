#pragma once

#include <cstdint>
#include <string>

#include "voltsim/circuit.hpp"
#include "voltsim/memsim.hpp"
#include "voltsim/power.hpp"
#include "voltsim/timing.hpp"

namespace voltsim::config {

struct RunConfig {
  memsim::SystemConfig system;
  timing::TableSource table_source = timing::TableSource::reference;
  double guardband = timing::kGuardband;
  circuit::CircuitParams circuit;
  power::PowerConfig power;
  memsim::PolicyConfig policy;
  double v_initial = 1.35;
  uint64_t seed = 1;
};

// INI-style file: [system]/[timing]/[circuit]/[power]/[policy] sections,
// key = value lines, # or ; comments. Unknown sections or keys are errors
// (with line numbers), as are malformed values.
RunConfig load(const std::string& path);

RunConfig parse(const std::string& text, const std::string& origin);

void save(const RunConfig& cfg, const std::string& path);

}  // namespace voltsim::config
