#include "voltsim/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace voltsim::circuit {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::precharged:  return "precharged";
    case Phase::sharing:     return "sharing";
    case Phase::sensing:     return "sensing";
    case Phase::restoring:   return "restoring";
    case Phase::precharging: return "precharging";
  }
  return "?";
}

static void check_params(const CircuitParams& p, double vdd) {
  if (vdd <= 0.0) throw std::invalid_argument("vdd must be positive");
  if (p.c_cell_ff < 0.0 || p.c_bitline_ff <= 0.0)
    throw std::invalid_argument("bad capacitance");
  if (vdd <= p.vth_sense || vdd <= p.vth_restore || vdd <= p.vth_precharge)
    throw std::invalid_argument("vdd must exceed every overdrive threshold");
  if (p.thresh_access <= 0.5 || p.thresh_access >= 1.0 ||
      p.thresh_restore <= p.thresh_access || p.thresh_restore >= 1.0 ||
      p.thresh_precharge_band <= 0.0 || p.thresh_precharge_band >= 1.0)
    throw std::invalid_argument("bad threshold configuration");
}

double charge_share_voltage(const CircuitParams& p, double vdd, int cell_value) {
  check_params(p, vdd);
  if (cell_value != 0 && cell_value != 1)
    throw std::invalid_argument("cell_value must be 0 or 1");
  double delta = vdd * p.c_cell_ff / (2.0 * (p.c_cell_ff + p.c_bitline_ff));
  return vdd / 2.0 + (cell_value ? delta : -delta);
}

static double tau_at(double tau0, double vth, double v_nominal, double vdd) {
  return tau0 * (v_nominal - vth) / (vdd - vth);
}

namespace {

// one RK4 step of dv/dt = (target - v)/tau
double rk4_step(double v, double dt, double target, double tau) {
  auto f = [&](double x) { return (target - x) / tau; };
  double k1 = f(v);
  double k2 = f(v + 0.5 * dt * k1);
  double k3 = f(v + 0.5 * dt * k2);
  double k4 = f(v + dt * k3);
  return v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory simulate_bitline(const CircuitParams& p, double vdd, int cell_value,
                            double t_pre_issue_ns, double dt_ns) {
  check_params(p, vdd);
  if (cell_value != 0 && cell_value != 1)
    throw std::invalid_argument("cell_value must be 0 or 1");
  if (t_pre_issue_ns < 0.0) throw std::invalid_argument("t_pre_issue_ns < 0");
  if (dt_ns <= 0.0) throw std::invalid_argument("dt_ns must be positive");

  const double half = vdd / 2.0;
  const bool one = cell_value == 1;
  const double v_access = one ? p.thresh_access * vdd : (1.0 - p.thresh_access) * vdd;
  const double v_restore = one ? p.thresh_restore * vdd : (1.0 - p.thresh_restore) * vdd;
  const double band = p.thresh_precharge_band * half;

  Trajectory tr;
  tr.points.push_back({0.0, half, Phase::precharged});

  double t = 0.0, v = half;
  Phase phase = Phase::sharing;
  const double t_share_end = std::min(p.t_charge_share_ns, t_pre_issue_ns);
  while (t < t_share_end) {
    t = std::min(t + dt_ns, t_share_end);
    tr.points.push_back({t, v, Phase::sharing});
  }
  if (t_pre_issue_ns > p.t_charge_share_ns) {
    v = charge_share_voltage(p, vdd, cell_value);
    phase = Phase::sensing;
    tr.points.push_back({t, v, phase});
  } else {
    phase = Phase::precharging;  // PRE arrived before sharing finished
  }

  const double sense_target = one ? vdd : 0.0;
  double tau = tau_at(p.tau0_sense_ns, p.vth_sense, p.v_nominal, vdd);
  auto crossed = [&](double a, double b, double level) {
    return one ? (a < level && b >= level) : (a > level && b <= level);
  };

  // sensing and restore until PRE
  while (phase == Phase::sensing || phase == Phase::restoring) {
    if (t >= t_pre_issue_ns) {
      phase = Phase::precharging;
      break;
    }
    double step = std::min(dt_ns, t_pre_issue_ns - t);
    double vn = rk4_step(v, step, sense_target, tau);
    double tn = t + step;
    if (phase == Phase::sensing && crossed(v, vn, v_access)) {
      // split the step at the (interpolated) crossing and switch tau there
      double frac = (v_access - v) / (vn - v);
      double tc = t + step * frac;
      tr.t_access_ns = tc;
      tr.points.push_back({tc, v_access, Phase::restoring});
      t = tc;
      v = v_access;
      phase = Phase::restoring;
      tau = tau_at(p.tau0_restore_ns, p.vth_restore, p.v_nominal, vdd);
      continue;
    }
    if (phase == Phase::restoring && crossed(v, vn, v_restore)) {
      double frac = (v_restore - v) / (vn - v);
      tr.t_restore_ns = t + step * frac;
    }
    t = tn;
    v = vn;
    tr.points.push_back({t, v, phase});
  }

  // precharge back toward vdd/2
  if (t < t_pre_issue_ns) {
    // idle tail before PRE (only possible when sharing was cut short)
    while (t < t_pre_issue_ns) {
      t = std::min(t + dt_ns, t_pre_issue_ns);
      tr.points.push_back({t, v, Phase::sharing});
    }
  }
  tau = tau_at(p.tau0_precharge_ns, p.vth_precharge, p.v_nominal, vdd);
  if (std::fabs(v - half) <= band) {
    tr.t_precharged_ns = t;
    tr.points.push_back({t, v, Phase::precharging});
    return tr;
  }
  const double t_cap = t + 60.0 * tau;  // generous; band is always reachable
  while (t < t_cap) {
    double vn = rk4_step(v, dt_ns, half, tau);
    double tn = t + dt_ns;
    double lv = v - half, ln_ = vn - half;
    if (std::fabs(ln_) <= band) {
      double edge = (lv > 0.0 ? band : -band);
      double frac = (edge - lv) / (ln_ - lv);
      double tc = t + dt_ns * frac;
      tr.t_precharged_ns = tc;
      tr.points.push_back({tc, half + edge, Phase::precharging});
      return tr;
    }
    t = tn;
    v = vn;
    tr.points.push_back({t, v, Phase::precharging});
  }
  return tr;  // t_precharged_ns stays -1 (cannot happen with sane params)
}

RawLatencies derive_min_latencies(const CircuitParams& p, double vdd) {
  check_params(p, vdd);
  double v1 = charge_share_voltage(p, vdd, 1);
  double tau_s = tau_at(p.tau0_sense_ns, p.vth_sense, p.v_nominal, vdd);
  double tau_r = tau_at(p.tau0_restore_ns, p.vth_restore, p.v_nominal, vdd);
  double tau_p = tau_at(p.tau0_precharge_ns, p.vth_precharge, p.v_nominal, vdd);

  double trcd = p.t_charge_share_ns +
                tau_s * std::log((vdd - v1) / (vdd - p.thresh_access * vdd));
  double tras = trcd + tau_r * std::log((1.0 - p.thresh_access) /
                                        (1.0 - p.thresh_restore));
  // precharge from a fully restored bitline: |vdd - vdd/2| down to the band
  double trp = tau_p * std::log(1.0 / p.thresh_precharge_band);
  return {trcd, tras, trp};
}

// ---------------------------------------------------------------------------
// calibration

namespace {

double printed(double raw_ns, double guardband, double tck) {
  if (raw_ns <= 0.0) return 0.0;
  return std::ceil(raw_ns * guardband / tck - 1e-9) * tck;
}

struct Windows {
  // raw-value interval (lo, hi] per row that keeps the printed value within
  // the wanted distance of the target
  std::vector<double> lo, hi;
};

Windows windows_for(const std::vector<TargetRow>& t, int col, double guardband,
                    double tck, double slack_rows_high_v) {
  Windows w;
  for (size_t i = 0; i < t.size(); i++) {
    double target = col == 0 ? t[i].trcd_ns : col == 1 ? t[i].trp_ns : t[i].tras_ns;
    double slack = (i < 2 ? 0.0 : slack_rows_high_v) * tck;
    w.lo.push_back((target - slack - tck) / guardband);
    w.hi.push_back((target + slack) / guardband);
  }
  return w;
}

struct Fit {
  bool ok = false;
  double score = 1e18;
  double margin = -1e18;
  CircuitParams params;
};

double row_value(const TargetRow& r, int col) {
  return col == 0 ? r.trcd_ns : col == 1 ? r.trp_ns : r.tras_ns;
}

// weighted squared residual of the printed model against the target; the two
// highest-voltage rows anchor the nominal operating point and weigh more
double score_table(const CircuitParams& p, const std::vector<TargetRow>& t,
                   double guardband, double tck) {
  double s = 0.0;
  for (size_t i = 0; i < t.size(); i++) {
    RawLatencies raw = derive_min_latencies(p, t[i].v);
    double vals[3] = {raw.trcd_ns, raw.trp_ns, raw.tras_ns};
    for (int c = 0; c < 3; c++) {
      double d = printed(vals[c], guardband, tck) - row_value(t[i], c);
      double w = i < 2 ? 16.0 : 1.0;
      s += w * (d / tck) * (d / tck);
      if (std::fabs(d) > tck + 1e-9) s += 1000.0;  // stay within one clock
    }
  }
  return s;
}

}  // namespace

CircuitParams calibrate(const CircuitParams& start,
                        const std::vector<TargetRow>& target,
                        double guardband, double tck_ns) {
  if (target.size() < 3) throw std::invalid_argument("calibrate: too few rows");
  for (size_t i = 1; i < target.size(); i++)
    if (target[i].v >= target[i - 1].v)
      throw std::invalid_argument("calibrate: rows must be sorted by falling v");

  const double vmin = target.back().v;
  const double k_share = std::log((1.0 - start.c_cell_ff /
                                   (start.c_cell_ff + start.c_bitline_ff)) * 2.0);
  const double k_restore = std::log((1.0 - start.thresh_access) /
                                    (1.0 - start.thresh_restore));
  const double k_pre = std::log(1.0 / start.thresh_precharge_band);
  const size_t n = target.size();

  Windows w_rcd = windows_for(target, 0, guardband, tck_ns, 1.0);
  Windows w_rp = windows_for(target, 1, guardband, tck_ns, 1.0);
  Windows w_ras = windows_for(target, 2, guardband, tck_ns, 1.0);

  // interval intersection of a 1-dof magnitude m against rows: lo_i < m*f_i <= hi_i
  auto fit_magnitude = [&](const Windows& w, const std::vector<double>& f,
                           const std::vector<double>& base, double* margin) {
    double lo = -1e18, hi = 1e18;
    for (size_t i = 0; i < n; i++) {
      lo = std::max(lo, (w.lo[i] - base[i]) / f[i]);
      hi = std::min(hi, (w.hi[i] - base[i]) / f[i]);
    }
    *margin = hi - lo;
    return (lo + hi) / 2.0;
  };

  Fit best;

  // precharge column is independent: scan its threshold, fit the magnitude
  double best_p_margin = -1e18, best_vth_p = start.vth_precharge, best_tau_p = 0;
  for (double x = -2.0; x < vmin - 0.02; x += 0.005) {
    std::vector<double> f(n), zero(n, 0.0);
    for (size_t i = 0; i < n; i++) f[i] = (start.v_nominal - x) / (target[i].v - x);
    double margin = 0;
    double m = fit_magnitude(w_rp, f, zero, &margin);
    if (margin > best_p_margin && m > 0) {
      best_p_margin = margin;
      best_vth_p = x;
      best_tau_p = m / k_pre;
    }
  }

  // sense + restore are coupled through t_charge_share; lattice over the two
  // thresholds, grid over t_charge_share, exact interval fit of the magnitudes
  for (double xs = 0.30; xs < vmin - 0.02; xs += 0.015) {
    std::vector<double> fs(n);
    for (size_t i = 0; i < n; i++) fs[i] = (start.v_nominal - xs) / (target[i].v - xs);
    for (double xr = -2.0; xr < vmin - 0.02; xr += 0.04) {
      std::vector<double> fr(n);
      for (size_t i = 0; i < n; i++) fr[i] = (start.v_nominal - xr) / (target[i].v - xr);
      for (double t_cs = 0.0; t_cs <= 12.0; t_cs += 0.25) {
        std::vector<double> base(n, t_cs);
        double m_rcd_margin = 0;
        double b = fit_magnitude(w_rcd, fs, base, &m_rcd_margin);
        if (m_rcd_margin <= 0 || b <= 0) continue;
        std::vector<double> rcd(n);
        for (size_t i = 0; i < n; i++) rcd[i] = t_cs + b * fs[i];
        double m_ras_margin = 0;
        double r0 = fit_magnitude(w_ras, fr, rcd, &m_ras_margin);
        if (m_ras_margin <= 0 || r0 <= 0) continue;
        double margin = std::min({m_rcd_margin, m_ras_margin, best_p_margin});
        CircuitParams cand = start;
        cand.t_charge_share_ns = t_cs;
        cand.vth_sense = xs;
        cand.tau0_sense_ns = b / k_share;
        cand.vth_restore = xr;
        cand.tau0_restore_ns = r0 / k_restore;
        cand.vth_precharge = best_vth_p;
        cand.tau0_precharge_ns = best_tau_p;
        double s = score_table(cand, target, guardband, tck_ns);
        if (s < best.score - 1e-12 ||
            (s < best.score + 1e-12 && margin > best.margin)) {
          best.ok = true;
          best.score = s;
          best.margin = margin;
          best.params = cand;
        }
      }
    }
  }

  if (!best.ok) {
    best.params = start;  // refine from the caller's starting point
    best.score = score_table(start, target, guardband, tck_ns);
  }

  // local refinement: cyclic coordinate descent with shrinking steps
  double* fields[7] = {
      &best.params.t_charge_share_ns, &best.params.tau0_sense_ns,
      &best.params.vth_sense,         &best.params.tau0_restore_ns,
      &best.params.vth_restore,       &best.params.tau0_precharge_ns,
      &best.params.vth_precharge};
  double steps[7] = {0.05, 0.02, 0.004, 0.02, 0.01, 0.01, 0.004};
  for (int round = 0; round < 40; round++) {
    bool improved = false;
    for (int i = 0; i < 7; i++) {
      for (double dir : {+1.0, -1.0}) {
        double saved = *fields[i];
        *fields[i] = saved + dir * steps[i];
        CircuitParams trial = best.params;
        *fields[i] = saved;
        if (trial.vth_sense >= vmin - 0.01 || trial.vth_restore >= vmin - 0.01 ||
            trial.vth_precharge >= vmin - 0.01)
          continue;
        double s = score_table(trial, target, guardband, tck_ns);
        if (s < best.score - 1e-12) {
          best.params = trial;
          best.score = s;
          improved = true;
        }
      }
    }
    if (!improved)
      for (double& st : steps) st *= 0.5;
  }
  return best.params;
}

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "time_ns,voltage_v,phase\n");
  for (const auto& pt : tr.points)
    std::fprintf(f, "%.6f,%.6f,%s\n", pt.t_ns, pt.v, phase_name(pt.phase));
  std::fclose(f);
}

}  // namespace voltsim::circuit
