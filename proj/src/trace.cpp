#include "voltsim/trace.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace voltsim::trace {

namespace {

[[noreturn]] void bad_line(const std::string& origin, size_t line_no,
                           const std::string& what) {
  throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<Entry> parse(const std::string& text, const std::string& origin) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;

    std::istringstream ls(line);
    unsigned long long bubble = 0, addr = 0;
    std::string addr_tok, op;
    if (!(ls >> bubble >> addr_tok >> op))
      bad_line(origin, line_no, "expected '<bubble> <hex address> <R|W>'");

    size_t pos = 0;
    const std::string& hex =
        addr_tok.rfind("0x", 0) == 0 ? addr_tok.substr(2) : addr_tok;
    try {
      addr = std::stoull(hex, &pos, 16);
    } catch (const std::exception&) {
      bad_line(origin, line_no, "bad address '" + addr_tok + "'");
    }
    if (pos != hex.size() || hex.empty())
      bad_line(origin, line_no, "bad address '" + addr_tok + "'");

    bool is_write;
    if (op == "R" || op == "r")
      is_write = false;
    else if (op == "W" || op == "w")
      is_write = true;
    else
      bad_line(origin, line_no, "bad op '" + op + "', expected R or W");

    std::string extra;
    if (ls >> extra) bad_line(origin, line_no, "trailing token '" + extra + "'");

    out.push_back({(uint32_t)bubble, addr, is_write});
  }
  return out;
}

std::vector<Entry> load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void save(const std::vector<Entry>& entries, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  for (const auto& e : entries)
    std::fprintf(f, "%u 0x%llx %c\n", e.bubble, (unsigned long long)e.address,
                 e.is_write ? 'W' : 'R');
  std::fclose(f);
}

}  // namespace voltsim::trace
