#pragma once

// Carleman weights
//
//   alpha(t,x) = (e^3 - e^{eta(x)}) / (t (T - t)),   phi(t,x) = e^{eta(x)} / (t (T - t)),
//
// with eta(x) = 2 + x when observing at x = 0 and eta(x) = 1 - x when
// observing at x = -1, and the three weighted space-time integrals of the
// Carleman inequality evaluated on computed adjoint solutions. The
// exponentials e^{-2 s alpha} leave the double range for moderate s, so all
// integrals are accumulated as log-sum-exp.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "advdiff/adjoint_solver.hpp"
#include "advdiff/core_types.hpp"
#include "advdiff/profiles.hpp"

namespace advdiff {

struct CarlemanWeights {
  Boundary variant = Boundary::gamma0;
  double s = 1.0;
  double T = 1.0;

  double eta(double x) const { return variant == Boundary::gamma0 ? 2.0 + x : 1.0 - x; }
  /// d eta / dx
  double eta_slope() const { return variant == Boundary::gamma0 ? 1.0 : -1.0; }
};

inline double e_cubed() { return std::exp(3.0); }
/// m = e^3 - e^2
inline double carleman_m() { return e_cubed() - std::exp(2.0); }
/// M = e^3 - e
inline double carleman_M() { return e_cubed() - std::numbers::e; }

struct WeightValues {
  double alpha;
  double phi;
};

inline WeightValues eval_weights(double t, double x, const CarlemanWeights& w) {
  if (!(t > 0.0 && t < w.T)) throw DomainError("Carleman weights need 0 < t < T");
  const double tau = t * (w.T - t);
  const double ee = std::exp(w.eta(x));
  return {(e_cubed() - ee) / tau, ee / tau};
}

struct WeightDerivatives {
  double alpha, alpha_x, alpha_xx, alpha_t, phi;
};

/// Closed-form derivatives of alpha.
inline WeightDerivatives weight_derivatives(double t, double x, const CarlemanWeights& w) {
  const auto [alpha, phi] = eval_weights(t, x, w);
  const double tau = t * (w.T - t);
  const double ee = std::exp(w.eta(x));
  const double slope = w.eta_slope();
  WeightDerivatives d{};
  d.alpha = alpha;
  d.phi = phi;
  d.alpha_x = -slope * ee / tau;
  d.alpha_xx = -slope * slope * ee / tau;
  d.alpha_t = -(e_cubed() - ee) * (w.T - 2.0 * t) / (tau * tau);
  return d;
}

/// s0 (eps^{-1} (T + T^2) + a^{1/2} eps^{-1/2} T^2).
inline double s_threshold_base(const ModelParams& p) {
  const double T = p.horizon_T;
  return (T + T * T) / p.epsilon + std::sqrt(p.a) / std::sqrt(p.epsilon) * T * T;
}

inline double s_min(const ModelParams& p, double s0) {
  if (!(s0 > 0.0)) throw DomainError("s0 must be positive");
  return s0 * s_threshold_base(p);
}

/// Accumulates log(sum_i exp(l_i)).
class LogSum {
 public:
  void add(double log_term) {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term > max_) {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    } else {
      sum_ += std::exp(log_term - max_);
    }
  }
  double value() const {
    return sum_ > 0.0 ? max_ + std::log(sum_) : -std::numeric_limits<double>::infinity();
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

struct CarlemanReport {
  // natural logarithms of the three integrals; -inf when an integral is 0
  double log_lhs_interior = -std::numeric_limits<double>::infinity();
  double log_lhs_boundary = -std::numeric_limits<double>::infinity();
  double log_rhs = -std::numeric_limits<double>::infinity();
  // the same quantities in double precision (may underflow to 0)
  double lhs_interior = 0.0;
  double lhs_boundary = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;      // (lhs_interior + lhs_boundary) / rhs
  double log_ratio = -std::numeric_limits<double>::infinity();
  double s_used = 0.0;
  double s_threshold_factor = 0.0;  // s / (eps^{-1}(T+T^2) + a^{1/2} eps^{-1/2} T^2)
  bool degenerate_zero = false;     // lhs = rhs = 0
  bool degenerate = false;          // rhs = 0 < lhs
};

inline double log_abs_sq(double v) {
  return v == 0.0 ? -std::numeric_limits<double>::infinity() : 2.0 * std::log(std::abs(v));
}

/// Trapezoidal space-time quadrature on interior time nodes. The first and
/// last slices are dropped: e^{-2 s alpha} vanishes there.
inline CarlemanReport carleman_sides(const AdjointRun& run, const CarlemanWeights& w,
                                     const ModelParams& p, const GridSpec& g) {
  if (run.trajectory.states.size() != static_cast<std::size_t>(g.n_time + 1))
    throw DimensionError("Carleman quadrature needs the full adjoint trajectory");
  if (std::abs(w.T - p.horizon_T) > 1e-12 * p.horizon_T)
    throw DomainError("weight horizon differs from model horizon");
  const double s = w.s;
  const double dt = g.dt(p);
  const double h = g.h();
  const int obs = g.node(w.variant);
  const int other = g.node(w.variant == Boundary::gamma0 ? Boundary::gamma1 : Boundary::gamma0);
  const double log_dt = std::log(dt);

  LogSum interior, boundary, rhs;
  for (int k = 1; k < g.n_time; ++k) {
    const double t = g.t(p, k);
    const StateX& phi_k = run.trajectory.states[k];
    for (int i = 0; i < g.n_space; ++i) {
      const auto [alpha, weight] = eval_weights(t, g.x(i), w);
      const double base = 3.0 * std::log(s) + 3.0 * std::log(weight) - 2.0 * s * alpha +
                          log_abs_sq(phi_k[i]) + log_dt;
      const double node_w = (i == 0 || i == g.n_space - 1) ? 0.5 * h : h;
      interior.add(base + std::log(node_w));
      if (i == 0 || i == g.n_space - 1) boundary.add(base);
    }
    const auto [alpha_obs, weight_obs] = eval_weights(t, g.x(obs), w);
    const double alpha_other = eval_weights(t, g.x(other), w).alpha;
    rhs.add(7.0 * std::log(s) + 7.0 * std::log(weight_obs) - 4.0 * s * alpha_obs +
            2.0 * s * alpha_other + log_abs_sq(phi_k[obs]) + log_dt);
  }

  CarlemanReport rep;
  rep.log_lhs_interior = interior.value();
  rep.log_lhs_boundary = boundary.value();
  rep.log_rhs = rhs.value();
  rep.lhs_interior = std::exp(rep.log_lhs_interior);
  rep.lhs_boundary = std::exp(rep.log_lhs_boundary);
  rep.rhs = std::exp(rep.log_rhs);
  rep.s_used = s;
  rep.s_threshold_factor = s / s_threshold_base(p);

  LogSum lhs;
  lhs.add(rep.log_lhs_interior);
  lhs.add(rep.log_lhs_boundary);
  const double log_lhs = lhs.value();
  const double ninf = -std::numeric_limits<double>::infinity();
  if (rep.log_rhs == ninf) {
    if (log_lhs == ninf) {
      rep.degenerate_zero = true;
      rep.ratio = 0.0;
    } else {
      rep.degenerate = true;
      rep.ratio = std::numeric_limits<double>::infinity();
      rep.log_ratio = std::numeric_limits<double>::infinity();
    }
    return rep;
  }
  rep.log_ratio = log_lhs - rep.log_rhs;
  rep.ratio = std::exp(rep.log_ratio);
  return rep;
}

/// Formats exp(log_value) in scientific notation without leaving the log
/// domain, e.g. "1.2345678901234e-812".
inline std::string format_from_log(double log_value) {
  if (log_value == -std::numeric_limits<double>::infinity()) return "0";
  if (!std::isfinite(log_value)) return "inf";
  const double l10 = log_value / std::numbers::ln10;
  double expo = std::floor(l10);
  double mant = std::pow(10.0, l10 - expo);
  if (mant >= 9.99999999999995) {
    mant /= 10.0;
    expo += 1.0;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.13fe%+d", mant, static_cast<int>(expo));
  return buf;
}

struct CarlemanSweepRow {
  double s;
  std::string member;
  CarlemanReport report;
};

struct NamedRun {
  std::string name;
  AdjointRun run;
};

/// Evaluates the report for each s in `s_values` on each adjoint run.
inline std::vector<CarlemanSweepRow> carleman_sweep(const std::vector<NamedRun>& runs,
                                                    const std::vector<double>& s_values,
                                                    Boundary variant, const ModelParams& p,
                                                    const GridSpec& g) {
  std::vector<CarlemanSweepRow> rows;
  for (double s : s_values) {
    const CarlemanWeights w{variant, s, p.horizon_T};
    for (const auto& r : runs) rows.push_back({s, r.name, carleman_sides(r.run, w, p, g)});
  }
  return rows;
}

/// Evenly spaced s in [lo, hi] (inclusive), `count` >= 2 values.
inline std::vector<double> s_range(double lo, double hi, int count) {
  if (count < 2) throw DomainError("s_range needs at least two values");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
  return out;
}

/// Smallest multiplier s0 on the candidate ladder for which the family's
/// largest ratio stops growing between s0 and the next candidate.
/// Candidates must be increasing; falls back to the last one.
inline double calibrate_s0(const std::vector<NamedRun>& runs, const std::vector<double>& candidates,
                           Boundary variant, const ModelParams& p, const GridSpec& g) {
  if (candidates.size() < 2) throw DomainError("calibration needs at least two candidates");
  auto family_max = [&](double s0) {
    double best = -std::numeric_limits<double>::infinity();
    const CarlemanWeights w{variant, s_min(p, s0), p.horizon_T};
    for (const auto& r : runs) best = std::max(best, carleman_sides(r.run, w, p, g).log_ratio);
    return best;
  };
  double prev = family_max(candidates[0]);
  for (std::size_t i = 0; i + 1 < candidates.size(); ++i) {
    const double next = family_max(candidates[i + 1]);
    if (next <= prev) return candidates[i];
    prev = next;
  }
  return candidates.back();
}

/// Candidate multipliers 2^-6, ..., 2^2. The ladder starts where s_min is of
/// order one at the reference configuration (s0 = 2^-6 gives s = 0.94 there).
inline std::vector<double> default_s0_ladder() {
  std::vector<double> out;
  for (int e = -6; e <= 2; ++e) out.push_back(std::ldexp(1.0, e));
  return out;
}

/// Adjoint runs (full trajectories) of the versioned terminal-data family.
inline std::vector<NamedRun> family_runs(const ModelParams& p, const GridSpec& g, Boundary variant) {
  const Propagator prop(p, g);
  std::vector<NamedRun> runs;
  for (auto& m : carleman_family(p, g))
    runs.push_back({m.name, solve_adjoint(prop, m.state, variant, true)});
  return runs;
}

/// Largest log-ratio over the family and over s in [s_min, 4 s_min].
inline double window_max_log_ratio(const std::vector<NamedRun>& runs, double s0, int s_count,
                                   Boundary variant, const ModelParams& p, const GridSpec& g) {
  const double lo = s_min(p, s0);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& row : carleman_sweep(runs, s_range(lo, 4.0 * lo, s_count), variant, p, g))
    best = std::max(best, row.report.log_ratio);
  return best;
}

struct CarlemanCalibration {
  double s0 = 0.0;
  double log_c_ref = 0.0;  // reference fit: log of the largest ratio on the window
  ModelParams reference{0.1, 0.0, 2.0};
  GridSpec grid{201, 2000, 0.5};
};

/// Calibrates s0 on the reference configuration (eps = 0.1, a = 0, T = 2)
/// unless `s0_override` > 0, and records the reference constant.
inline CarlemanCalibration calibrate_reference(Boundary variant, int n_time, int s_count,
                                               double s0_override = 0.0) {
  CarlemanCalibration cal;
  cal.grid = GridSpec{201, n_time, 0.5};
  const auto runs = family_runs(cal.reference, cal.grid, variant);
  cal.s0 = s0_override > 0.0
               ? s0_override
               : calibrate_s0(runs, default_s0_ladder(), variant, cal.reference, cal.grid);
  cal.log_c_ref = window_max_log_ratio(runs, cal.s0, s_count, variant, cal.reference, cal.grid);
  return cal;
}

}  // namespace advdiff
