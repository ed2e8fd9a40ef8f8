#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace voltsim::trace {

// One memory request plus the number of non-memory instructions a core
// executes before issuing it.
struct Entry {
  uint32_t bubble;    // non-memory instructions preceding this access
  uint64_t address;   // byte address
  bool is_write;
};

// Parses "<decimal bubble> <hex address> <R|W>" lines. Blank lines and lines
// starting with '#' are skipped. Malformed input throws with the line number.
std::vector<Entry> load(const std::string& path);

std::vector<Entry> parse(const std::string& text, const std::string& origin);

void save(const std::vector<Entry>& entries, const std::string& path);

}  // namespace voltsim::trace
