#include "voltsim/errmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "voltsim/numerics.hpp"

namespace voltsim::errmodel {

namespace {

constexpr double kEps = 1e-9;
constexpr double kVoltageStepCoarse = 0.050;
constexpr double kVoltageStepFine = 0.025;
constexpr double kScanBottom = 0.90;
constexpr double kTesterStepNs = 2.5;
constexpr double kTesterMinNs = 10.0;
constexpr double kTesterMaxNs = 20.0;
constexpr int kBitsPerBeat = 64;
constexpr int kBeatsPerLine = 8;

void check_profile(const DimmProfile& p) {
  if (p.banks < 1 || p.rows < 1 || p.lines_per_row < 1)
    throw std::invalid_argument("profile geometry must be positive");
  if ((int)p.bank_weight.size() != p.banks)
    throw std::invalid_argument("bank_weight size must equal banks");
  if (p.v_min > 1.35 + kEps || p.v_min < kScanBottom - kEps)
    throw std::invalid_argument("v_min outside the 0.90..1.35 V range");
  if (p.channel_fail_floor > p.v_min + kEps)
    throw std::invalid_argument("channel_fail_floor above v_min");
  if (p.f0 <= 0.0 || p.f0 > 1.0) throw std::invalid_argument("f0 outside (0,1]");
  if (p.bits_per_bad_line < 1.0 || p.bits_per_bad_line > kBitsPerBeat)
    throw std::invalid_argument("bits_per_bad_line outside [1,64]");
  for (double w : p.bank_weight)
    if (w < 0.0 || w > 1.0) throw std::invalid_argument("bank weight outside [0,1]");
}

double pattern_multiplier(const DimmProfile& p, uint8_t written) {
  for (const auto& pw : p.pattern_weights)
    if (pw.data == written) return pw.weight;
  return 1.0;
}

// Base line error rate at voltage v, before spatial and pattern weighting.
// Grows one decade per k/ln(10) * 25 mV below v_min, saturating at 1.
double base_rate(const DimmProfile& p, double v) {
  double r = p.f0 * std::exp(p.k * (p.v_min - v) / 0.025);
  return std::min(1.0, r);
}

// Per-bit flip probability q inside the hit beat, solved so the mean of
// Binomial(64, q) conditioned on >= 1 equals the profile's bits_per_bad_line.
double solve_bit_rate(double target_bits) {
  if (target_bits <= 1.0 + kEps) return 0.0;  // degenerate: exactly one bit
  double q = target_bits / kBitsPerBeat;
  for (int it = 0; it < 60; ++it) {
    double miss = std::pow(1.0 - q, kBitsPerBeat);
    double g = kBitsPerBeat * q - target_bits * (1.0 - miss);
    double dg = kBitsPerBeat - target_bits * kBitsPerBeat * std::pow(1.0 - q, kBitsPerBeat - 1);
    double step = g / dg;
    q -= step;
    q = std::clamp(q, 1e-12, 1.0);
    if (std::fabs(step) < 1e-14) break;
  }
  return q;
}

int draw_beat_bits(voltsim::Rng& rng, double q) {
  if (q <= 0.0) return 1;
  for (;;) {
    int k = rng.binomial(kBitsPerBeat, q);
    if (k > 0) return k;
  }
}

// Cell with the heaviest spatial weight; probing it answers "does any cell
// error at this operating point".
std::pair<int, int> heaviest_cell(const DimmProfile& p) {
  int bb = 0, br = 0;
  double best = -1.0;
  for (int b = 0; b < p.banks; ++b) {
    for (int r = 0; r < p.rows; ++r) {
      double w = spatial_weight(p, b, r);
      if (w > best) {
        best = w;
        bb = b;
        br = r;
      }
    }
  }
  return {bb, br};
}

}  // namespace

double spatial_weight(const DimmProfile& p, int bank, int row) {
  if (bank < 0 || bank >= p.banks || row < 0 || row >= p.rows)
    throw std::out_of_range("bank/row outside profile geometry");
  double rw = p.row_base;
  for (const auto& c : p.clusters) {
    double z = (row - c.center) / (double)std::max(1, c.halfwidth);
    rw += c.weight * std::exp(-0.5 * z * z);
  }
  rw = std::clamp(rw, 0.0, 1.0);
  return p.bank_weight[bank] * rw;
}

RequiredLatency required_latency(const DimmProfile& p, double v) {
  if (v >= p.v_min - kEps) return {v, p.reliable_trcd_ns, p.reliable_trp_ns};
  for (const auto& r : p.required)
    if (r.v <= v + kEps) return r;
  return {v, 1e9, 1e9};
}

double line_error_probability(const DimmProfile& p, double v, double trcd_ns,
                              double trp_ns, int bank, int row) {
  if (v >= p.v_min - kEps) return 0.0;
  if (v >= p.channel_fail_floor - kEps) {
    RequiredLatency req = required_latency(p, v);
    if (trcd_ns >= req.trcd_ns - kEps && trp_ns >= req.trp_ns - kEps) return 0.0;
  }
  return base_rate(p, v) * spatial_weight(p, bank, row);
}

const std::vector<PatternPair>& default_patterns() {
  static const std::vector<PatternPair> pats = {
      {0x00, 0xff}, {0xaa, 0x33}, {0xcc, 0x55}};
  return pats;
}

ErrorReport voltage_test(const DimmProfile& p, double v, double trcd_ns,
                         double trp_ns, const std::vector<PatternPair>& patterns,
                         int rounds, uint64_t seed) {
  check_profile(p);
  if (patterns.empty()) throw std::invalid_argument("no data patterns");
  if (rounds < 1) throw std::invalid_argument("rounds must be positive");

  ErrorReport rep;
  rep.rounds = rounds;
  rep.banks = p.banks;
  rep.rows = p.rows;
  rep.cell_errors.assign((size_t)p.banks * p.rows, 0);

  const int np = (int)patterns.size();
  std::vector<uint64_t> slice_bits((size_t)np * rounds, 0);
  const double q = solve_bit_rate(p.bits_per_bad_line);
  const uint64_t bits_per_slice =
      (uint64_t)p.banks * p.rows * p.lines_per_row * kBeatsPerLine * kBitsPerBeat;

  for (int b = 0; b < p.banks; ++b) {
    for (int r = 0; r < p.rows; ++r) {
      voltsim::Rng rng(seed, (uint64_t)b * p.rows + r);
      double pe = line_error_probability(p, v, trcd_ns, trp_ns, b, r);
      for (int pi = 0; pi < np; ++pi) {
        uint8_t written = (r % 2 == 0) ? patterns[pi].data : patterns[pi].companion;
        double pcell = std::min(1.0, pe * pattern_multiplier(p, written));
        for (int rd = 0; rd < rounds; ++rd) {
          int bad = pcell > 0.0 ? rng.binomial(p.lines_per_row, pcell) : 0;
          rep.lines_tested += p.lines_per_row;
          if (bad == 0) continue;
          rep.lines_erroneous += bad;
          rep.cell_errors[(size_t)b * p.rows + r] += bad;
          for (int l = 0; l < bad; ++l) {
            rng.next();  // beat index; placement is uniform, value unused
            int bits = draw_beat_bits(rng, q);
            rep.bit_errors += bits;
            slice_bits[(size_t)pi * rounds + rd] += bits;
            int bin = bits >= 3 ? 3 : bits;
            rep.beat_histogram[bin] += 1;
          }
        }
      }
    }
  }

  uint64_t beats = rep.lines_tested * kBeatsPerLine;
  uint64_t dirty = rep.beat_histogram[1] + rep.beat_histogram[2] + rep.beat_histogram[3];
  rep.beat_histogram[0] = beats - dirty;

  rep.ber.reserve((size_t)np * rounds);
  for (int pi = 0; pi < np; ++pi)
    for (int rd = 0; rd < rounds; ++rd)
      rep.ber.push_back({pi, rd,
                         (double)slice_bits[(size_t)pi * rounds + rd] / (double)bits_per_slice});
  return rep;
}

double find_vmin(const DimmProfile& p, double trcd_ns, double trp_ns) {
  check_profile(p);
  auto [wb, wr] = heaviest_cell(p);
  if (spatial_weight(p, wb, wr) <= 0.0)
    throw std::invalid_argument("profile has no cells with error weight");

  auto errors_at = [&](double v) {
    return line_error_probability(p, v, trcd_ns, trp_ns, wb, wr) > 0.0;
  };

  int mv = 1350;
  int first_fail_mv = -1;
  while (mv >= (int)std::lround(kScanBottom * 1000.0)) {
    if (errors_at(mv / 1000.0)) {
      first_fail_mv = mv;
      break;
    }
    mv -= (int)std::lround(kVoltageStepCoarse * 1000.0);
  }
  if (first_fail_mv < 0) return kScanBottom;

  int mid_mv = first_fail_mv + (int)std::lround(kVoltageStepFine * 1000.0);
  if (errors_at(mid_mv / 1000.0)) return (first_fail_mv + 50) / 1000.0;
  return mid_mv / 1000.0;
}

MinLatencyResult find_min_latencies_experimental(const DimmProfile& p, double v) {
  check_profile(p);
  if (v < p.channel_fail_floor - kEps) return {false, 0.0, 0.0};
  if (v >= p.v_min - kEps) return {true, p.reliable_trcd_ns, p.reliable_trp_ns};

  RequiredLatency req = required_latency(p, v);
  auto probe = [](double need) {
    for (double t = kTesterMinNs; t <= kTesterMaxNs + kEps; t += kTesterStepNs)
      if (t >= need - kEps) return t;
    return -1.0;
  };
  double trcd = probe(std::max(req.trcd_ns, p.reliable_trcd_ns));
  double trp = probe(std::max(req.trp_ns, p.reliable_trp_ns));
  if (trcd < 0.0 || trp < 0.0) return {false, 0.0, 0.0};
  return {true, trcd, trp};
}

BeatClass classify_beat(int bit_errors) {
  if (bit_errors < 0 || bit_errors > kBitsPerBeat)
    throw std::invalid_argument("bit count outside a 64-bit beat");
  if (bit_errors == 0) return BeatClass::clean;
  if (bit_errors == 1) return BeatClass::corrected;
  if (bit_errors == 2) return BeatClass::detected;
  return BeatClass::uncorrectable;
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("anova needs at least two groups");
  size_t n_total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("anova group is empty");
    n_total += g.size();
  }
  int k = (int)groups.size();
  int df_b = k - 1;
  int df_w = (int)n_total - k;
  if (df_w < 1) throw std::invalid_argument("anova needs replicates within groups");

  double grand = 0.0;
  for (const auto& g : groups)
    for (double x : g) grand += x;
  grand /= (double)n_total;

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    double m = 0.0;
    for (double x : g) m += x;
    m /= (double)g.size();
    ssb += (double)g.size() * (m - grand) * (m - grand);
    for (double x : g) ssw += (x - m) * (x - m);
  }

  double msb = ssb / df_b;
  double msw = ssw / df_w;
  AnovaResult res;
  res.df_between = df_b;
  res.df_within = df_w;
  if (msw <= 0.0) {
    res.f = msb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    res.p = msb > 0.0 ? 0.0 : 1.0;
    return res;
  }
  res.f = msb / msw;
  res.p = f_survival(res.f, df_b, df_w);
  return res;
}

void write_heatmap_csv(const ErrorReport& r, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "bank,row,prob\n");
  uint64_t per_cell = r.banks && r.rows ? r.lines_tested / ((uint64_t)r.banks * r.rows) : 0;
  for (int b = 0; b < r.banks; ++b)
    for (int row = 0; row < r.rows; ++row) {
      double prob = per_cell ? (double)r.cell(b, row) / (double)per_cell : 0.0;
      std::fprintf(f, "%d,%d,%.9g\n", b, row, prob);
    }
  std::fclose(f);
}

namespace {

// 8 banks x 1024 rows x 64 lines: a slice of a real device, kept small
// enough that a full pattern campaign over the voltage grid stays in seconds.
DimmProfile base_profile() {
  DimmProfile p;
  p.banks = 8;
  p.rows = 1024;
  p.lines_per_row = 64;
  p.bank_weight.assign(8, 1.0);
  p.row_base = 1.0;
  return p;
}

// Requirement tables sit on the 25 mV grid just below v_min; entries above
// 20 ns mark voltages the tester's latency range cannot rescue.
std::vector<RequiredLatency> grid(std::initializer_list<RequiredLatency> rows) {
  return std::vector<RequiredLatency>(rows);
}

}  // namespace

DimmProfile vendor_a_profile() {
  DimmProfile p = base_profile();
  p.vendor = "A";
  p.v_min = 1.10;
  p.channel_fail_floor = 1.05;
  p.required = grid({
      {1.075, 12.5, 12.5},
      {1.050, 12.5, 15.0},
      {1.025, 25.0, 30.0},
      {0.900, 25.0, 30.0},
  });
  return p;
}

DimmProfile vendor_b_profile() {
  DimmProfile p = base_profile();
  p.vendor = "B";
  p.v_min = 1.125;
  p.channel_fail_floor = 0.95;
  p.row_base = 0.04;
  p.clusters = {{300, 96, 1.0}, {820, 48, 0.8}};
  p.required = grid({
      {1.100, 10.0, 12.5},
      {1.075, 12.5, 12.5},
      {1.050, 12.5, 15.0},
      {1.025, 15.0, 17.5},
      {1.000, 15.0, 20.0},
      {0.975, 17.5, 20.0},
      {0.950, 20.0, 20.0},
      {0.925, 22.5, 25.0},
      {0.900, 25.0, 27.5},
  });
  return p;
}

DimmProfile vendor_c_profile() {
  DimmProfile p = base_profile();
  p.vendor = "C";
  p.v_min = 1.30;
  p.channel_fail_floor = 1.05;
  p.bank_weight = {1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  p.required = grid({
      {1.275, 10.0, 12.5},
      {1.250, 10.0, 12.5},
      {1.225, 10.0, 15.0},
      {1.200, 10.0, 15.0},
      {1.175, 12.5, 15.0},
      {1.150, 12.5, 15.0},
      {1.125, 12.5, 17.5},
      {1.100, 12.5, 17.5},
      {1.075, 15.0, 20.0},
      {1.050, 15.0, 20.0},
      {1.025, 25.0, 30.0},
      {0.900, 25.0, 30.0},
  });
  return p;
}

DimmProfile load_profile_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;

  DimmProfile p;
  p.vendor = j.value("vendor", p.vendor);
  p.v_min = j.value("v_min", p.v_min);
  p.channel_fail_floor = j.value("channel_fail_floor", p.channel_fail_floor);
  p.f0 = j.value("f0", p.f0);
  p.k = j.value("k", p.k);
  p.reliable_trcd_ns = j.value("reliable_trcd_ns", p.reliable_trcd_ns);
  p.reliable_trp_ns = j.value("reliable_trp_ns", p.reliable_trp_ns);
  p.banks = j.value("banks", p.banks);
  p.rows = j.value("rows", p.rows);
  p.lines_per_row = j.value("lines_per_row", p.lines_per_row);
  p.row_base = j.value("row_base", p.row_base);
  p.bits_per_bad_line = j.value("bits_per_bad_line", p.bits_per_bad_line);

  if (j.contains("bank_weight"))
    p.bank_weight = j.at("bank_weight").get<std::vector<double>>();
  else
    p.bank_weight.assign(p.banks, 1.0);

  if (j.contains("clusters"))
    for (const auto& c : j.at("clusters"))
      p.clusters.push_back({c.at("center").get<int>(), c.at("halfwidth").get<int>(),
                            c.at("weight").get<double>()});
  if (j.contains("pattern_weights"))
    for (const auto& w : j.at("pattern_weights"))
      p.pattern_weights.push_back(
          {(uint8_t)w.at("data").get<int>(), w.at("weight").get<double>()});
  if (j.contains("required"))
    for (const auto& r : j.at("required"))
      p.required.push_back({r.at("v").get<double>(), r.at("trcd_ns").get<double>(),
                            r.at("trp_ns").get<double>()});

  std::sort(p.required.begin(), p.required.end(),
            [](const RequiredLatency& a, const RequiredLatency& b) { return a.v > b.v; });
  check_profile(p);
  return p;
}

void save_profile_json(const DimmProfile& p, const std::string& path) {
  check_profile(p);
  nlohmann::json j;
  j["vendor"] = p.vendor;
  j["v_min"] = p.v_min;
  j["channel_fail_floor"] = p.channel_fail_floor;
  j["f0"] = p.f0;
  j["k"] = p.k;
  j["reliable_trcd_ns"] = p.reliable_trcd_ns;
  j["reliable_trp_ns"] = p.reliable_trp_ns;
  j["banks"] = p.banks;
  j["rows"] = p.rows;
  j["lines_per_row"] = p.lines_per_row;
  j["row_base"] = p.row_base;
  j["bits_per_bad_line"] = p.bits_per_bad_line;
  j["bank_weight"] = p.bank_weight;
  j["clusters"] = nlohmann::json::array();
  for (const auto& c : p.clusters)
    j["clusters"].push_back(
        {{"center", c.center}, {"halfwidth", c.halfwidth}, {"weight", c.weight}});
  j["pattern_weights"] = nlohmann::json::array();
  for (const auto& w : p.pattern_weights)
    j["pattern_weights"].push_back({{"data", (int)w.data}, {"weight", w.weight}});
  j["required"] = nlohmann::json::array();
  for (const auto& r : p.required)
    j["required"].push_back(
        {{"v", r.v}, {"trcd_ns", r.trcd_ns}, {"trp_ns", r.trp_ns}});

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace voltsim::errmodel
