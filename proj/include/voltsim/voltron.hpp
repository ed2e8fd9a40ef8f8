#pragma once

#include <cstdint>
#include <vector>

#include "voltsim/timing.hpp"

namespace voltsim::voltron {

// Two-branch linear predictor for weighted-speedup loss (percent) as a
// function of combined access latency L = tRAS + tRP (ns), workload MPKI and
// the fraction of cycles stalled on memory. Branch splits at the MPKI
// threshold; output clamps to [0, 100].
struct PredictorCoefficients {
  // alpha, beta_latency, beta_mpki, beta_stall
  double low[4] = {-30.09, 0.59, 0.01, 19.24};
  double high[4] = {-50.04, 1.05, -0.01, 15.27};
  double mpki_threshold = 15.0;
};

double predict_loss(const PredictorCoefficients& c, double latency_ns,
                    double mpki, double stall_frac);

struct TrainSample {
  double latency_ns;
  double mpki;
  double stall_frac;
  double loss_pct;  // measured
};

struct BranchFit {
  double coeff[4] = {0, 0, 0, 0};
  double rmse_train = 0.0;
  double rmse_test = 0.0;
  double r2_train = 0.0;
  double r2_test = 0.0;
  int n_train = 0;
  int n_test = 0;
};

struct FitReport {
  PredictorCoefficients coeffs;
  BranchFit low;
  BranchFit high;
};

// Ordinary least squares per branch on a seeded 70/30 train/test split.
// Requires at least 8 samples per branch; throws invalid_argument otherwise
// or when a branch design matrix is rank deficient.
FitReport fit_predictor(const std::vector<TrainSample>& samples, uint64_t seed,
                        double mpki_threshold = 15.0);

struct WorkloadProfile {
  double mpki = 0.0;
  double stall_frac = 0.0;
};

// Lowest candidate array voltage whose predicted loss stays within target;
// scans 0.90 V up to 1.30 V in table order and falls back to nominal 1.35 V
// when nothing qualifies. The table supplies L(v).
double select_array_voltage(const timing::LatencyTable& table,
                            const PredictorCoefficients& c,
                            const WorkloadProfile& w, double target_loss_pct);

// Banks that must run with the reduced-voltage timings at v_array; the
// remaining banks keep nominal latency. One bank per 50 mV below nominal.
int slow_bank_count(double v_array, double v_nominal = 1.35, int banks = 8);

struct MemDvfsPoint {
  int channel_mts;
  double voltage;
};

// Fixed-threshold bandwidth gating: high utilisation keeps the full rate,
// the middle band downshifts one step, low utilisation two. Boundary
// utilisation values take the slower step.
MemDvfsPoint memdvfs_select(double bus_util, double hi = 0.40, double lo = 0.15);

}  // namespace voltsim::voltron
