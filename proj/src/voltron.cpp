#include "voltsim/voltron.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "voltsim/numerics.hpp"

namespace voltsim::voltron {

double predict_loss(const PredictorCoefficients& c, double latency_ns,
                    double mpki, double stall_frac) {
  const double* b = mpki < c.mpki_threshold ? c.low : c.high;
  double v = b[0] + b[1] * latency_ns + b[2] * mpki + b[3] * stall_frac;
  return std::clamp(v, 0.0, 100.0);
}

namespace {

void ols_fit(const std::vector<const TrainSample*>& train, double out[4]) {
  // normal equations over [1, L, mpki, stall]
  std::vector<double> xtx(16, 0.0), xty(4, 0.0);
  for (const TrainSample* s : train) {
    double x[4] = {1.0, s->latency_ns, s->mpki, s->stall_frac};
    for (int i = 0; i < 4; i++) {
      xty[i] += x[i] * s->loss_pct;
      for (int j = 0; j < 4; j++) xtx[i * 4 + j] += x[i] * x[j];
    }
  }
  if (!solve_spd(xtx, xty, 4))
    throw std::invalid_argument("fit_predictor: rank-deficient branch data");
  for (int i = 0; i < 4; i++) out[i] = xty[i];
}

void eval_fit(const PredictorCoefficients& c,
              const std::vector<const TrainSample*>& set, double* rmse,
              double* r2) {
  if (set.empty()) {
    *rmse = 0.0;
    *r2 = 0.0;
    return;
  }
  double mean = 0.0;
  for (const TrainSample* s : set) mean += s->loss_pct;
  mean /= set.size();
  double ssr = 0.0, sst = 0.0;
  for (const TrainSample* s : set) {
    double pred = predict_loss(c, s->latency_ns, s->mpki, s->stall_frac);
    ssr += (pred - s->loss_pct) * (pred - s->loss_pct);
    sst += (s->loss_pct - mean) * (s->loss_pct - mean);
  }
  *rmse = std::sqrt(ssr / set.size());
  *r2 = sst < 1e-30 ? (ssr < 1e-30 ? 1.0 : 0.0) : 1.0 - ssr / sst;
}

}  // namespace

FitReport fit_predictor(const std::vector<TrainSample>& samples, uint64_t seed,
                        double mpki_threshold) {
  size_t n_low = 0, n_high = 0;
  for (const auto& s : samples)
    (s.mpki < mpki_threshold ? n_low : n_high)++;
  if (n_low < 8 || n_high < 8)
    throw std::invalid_argument("fit_predictor: need at least 8 samples per branch");

  // seeded global 70/30 split (Fisher-Yates)
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); i++) order[i] = i;
  Rng rng(seed, 0x7031);
  for (size_t i = order.size() - 1; i > 0; i--) {
    size_t j = (size_t)(rng.next() % (i + 1));
    std::swap(order[i], order[j]);
  }
  size_t n_train = (size_t)std::llround(0.7 * (double)samples.size());

  std::vector<const TrainSample*> train_lo, train_hi, test_lo, test_hi;
  for (size_t k = 0; k < order.size(); k++) {
    const TrainSample* s = &samples[order[k]];
    bool lo = s->mpki < mpki_threshold;
    if (k < n_train)
      (lo ? train_lo : train_hi).push_back(s);
    else
      (lo ? test_lo : test_hi).push_back(s);
  }
  if (train_lo.size() < 4 || train_hi.size() < 4)
    throw std::invalid_argument("fit_predictor: split left a branch underdetermined");

  FitReport rep;
  rep.coeffs.mpki_threshold = mpki_threshold;
  ols_fit(train_lo, rep.coeffs.low);
  ols_fit(train_hi, rep.coeffs.high);

  rep.low.n_train = (int)train_lo.size();
  rep.low.n_test = (int)test_lo.size();
  rep.high.n_train = (int)train_hi.size();
  rep.high.n_test = (int)test_hi.size();
  for (int i = 0; i < 4; i++) {
    rep.low.coeff[i] = rep.coeffs.low[i];
    rep.high.coeff[i] = rep.coeffs.high[i];
  }
  eval_fit(rep.coeffs, train_lo, &rep.low.rmse_train, &rep.low.r2_train);
  eval_fit(rep.coeffs, test_lo, &rep.low.rmse_test, &rep.low.r2_test);
  eval_fit(rep.coeffs, train_hi, &rep.high.rmse_train, &rep.high.r2_train);
  eval_fit(rep.coeffs, test_hi, &rep.high.rmse_test, &rep.high.r2_test);
  return rep;
}

double select_array_voltage(const timing::LatencyTable& table,
                            const PredictorCoefficients& c,
                            const WorkloadProfile& w, double target_loss_pct) {
  if (table.rows.empty()) throw std::invalid_argument("empty latency table");
  double v_nominal = table.rows.front().v;
  // rows are sorted by falling voltage: walk from the bottom up
  for (auto it = table.rows.rbegin(); it != table.rows.rend(); ++it) {
    if (it->v >= v_nominal - 1e-9) continue;  // nominal is the fallback
    double latency = it->t.tras_ns() + it->t.trp_ns();
    if (predict_loss(c, latency, w.mpki, w.stall_frac) <= target_loss_pct)
      return it->v;
  }
  return v_nominal;
}

int slow_bank_count(double v_array, double v_nominal, int banks) {
  int n = (int)std::llround((v_nominal - v_array) / 0.05);
  return std::clamp(n, 0, banks);
}

MemDvfsPoint memdvfs_select(double bus_util, double hi, double lo) {
  if (bus_util > hi) return {1600, 1.35};
  if (bus_util > lo) return {1333, 1.30};
  return {1066, 1.25};
}

}  // namespace voltsim::voltron
