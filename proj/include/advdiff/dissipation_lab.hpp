#pragma once

// Backward dissipation of adjoint solutions: weighted norms with
// theta(x) = exp(lambda x / eps), measured decay ratios and a one-parameter
// fit of the rate constant c0 in
//
//   ||phi(t1)||^2 <= exp(-c0 max{a^{1/2}, eps^{-1/2}} eps^{-1/2} (gap-1)^2/gap) ||phi(t2)||^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "advdiff/adjoint_solver.hpp"
#include "advdiff/core_types.hpp"
#include "advdiff/fit.hpp"

namespace advdiff {

struct DissipationParams {
  double lambda_weight = 0.25;
  double t1 = 0.0;
  double t2 = 0.0;

  void validate(const ModelParams& p) const {
    if (!(lambda_weight > 0.0 && lambda_weight < 1.0))
      throw DomainError("lambda must lie in (0, 1)");
    if (!(t1 >= 0.0 && t1 <= t2 && t2 <= p.horizon_T))
      throw DomainError("need 0 <= t1 <= t2 <= T");
  }

  /// lambda = (gap - 1) / (2 gap), which balances the two exponents.
  static DissipationParams optimized(double t1, double t2) {
    const double gap = t2 - t1;
    if (!(gap > 1.0)) throw DomainError("optimized lambda needs t2 - t1 > 1");
    return {(gap - 1.0) / (2.0 * gap), t1, t2};
  }
};

/// ||sqrt(theta) u||_X with theta(x) = exp(lam x / eps).
inline double weighted_norm_theta(const StateX& u, double lam, const ModelParams& p,
                                  const GridSpec& g) {
  if (!(lam > 0.0 && lam < 1.0)) throw DomainError("lambda must lie in (0, 1)");
  check_state(u, g);
  // 3-point Gauss per element; exact for the unweighted P1 square.
  static constexpr std::array<double, 3> nodes = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr std::array<double, 3> weights = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double h = g.h();
  double interior = 0.0;
  for (int e = 0; e + 1 < g.n_space; ++e) {
    const double xl = g.x(e);
    for (int q = 0; q < 3; ++q) {
      const double s = 0.5 * (nodes[q] + 1.0);
      const double x = xl + s * h;
      const double uh = (1.0 - s) * u[e] + s * u[e + 1];
      interior += 0.5 * h * weights[q] * std::exp(lam * x / p.epsilon) * uh * uh;
    }
  }
  const double theta_left = std::exp(-lam / p.epsilon);
  const double boundary =
      p.epsilon * (u.at_zero() * u.at_zero() + theta_left * u.at_minus_one() * u.at_minus_one());
  return std::sqrt(interior + boundary);
}

inline int time_index(double t, const ModelParams& p, const GridSpec& g) {
  const double k = t / g.dt(p);
  const int idx = static_cast<int>(std::lround(k));
  if (idx < 0 || idx > g.n_time) throw DomainError("time outside [0, T]");
  return idx;
}

/// ||phi(t1)||^2 / ||phi(t2)||^2 read off an existing adjoint run.
inline double decay_ratio(const AdjointRun& run, const ModelParams& p, const GridSpec& g,
                          double t1, double t2) {
  if (!(t1 >= 0.0 && t1 <= t2 && t2 <= p.horizon_T * (1.0 + 1e-12)))
    throw DomainError("need 0 <= t1 <= t2 <= T");
  if (run.trajectory.states.empty()) throw DomainError("adjoint run has no stored trajectory");
  const double n1 = norm_X(run.trajectory.states[time_index(t1, p, g)], p, g);
  const double n2 = norm_X(run.trajectory.states[time_index(t2, p, g)], p, g);
  if (n2 == 0.0) throw DomainError("decay ratio undefined: ||phi(t2)|| = 0");
  return (n1 * n1) / (n2 * n2);
}

inline double decay_ratio(const StateX& phiT, const ModelParams& p, const GridSpec& g, double t1,
                          double t2) {
  const AdjointRun run = solve_adjoint(phiT, p, g);
  return decay_ratio(run, p, g, t1, t2);
}

struct DecaySample {
  double epsilon;
  double a;
  double gap;
  double log_ratio;
};

/// max{a^{1/2}, eps^{-1/2}} eps^{-1/2} (gap - 1)^2 / gap.
inline double dissipation_model_factor(double epsilon, double a, double gap) {
  const double regime = std::max(std::sqrt(a), 1.0 / std::sqrt(epsilon));
  return regime / std::sqrt(epsilon) * (gap - 1.0) * (gap - 1.0) / gap;
}

struct DecayFit {
  std::vector<DecaySample> samples;  // samples that entered the fit
  int excluded = 0;                  // samples with gap <= 1
  double fitted_c0 = 0.0;
  double residual_rms = 0.0;
  double r_squared = 0.0;
};

/// Single-slope least squares log_ratio ~ -c0 * factor through the origin.
/// r^2 is reported against the mean of the measured log-ratios.
inline DecayFit fit_dissipation_rate(const std::vector<DecaySample>& samples) {
  DecayFit fit;
  for (const auto& s : samples) {
    if (s.gap > 1.0)
      fit.samples.push_back(s);
    else
      ++fit.excluded;
  }
  if (fit.samples.size() < 3)
    throw DomainError("dissipation fit needs at least three samples with gap > 1");
  double sff = 0.0, sfy = 0.0, mean = 0.0;
  for (const auto& s : fit.samples) {
    const double f = dissipation_model_factor(s.epsilon, s.a, s.gap);
    sff += f * f;
    sfy += f * s.log_ratio;
    mean += s.log_ratio;
  }
  mean /= static_cast<double>(fit.samples.size());
  fit.fitted_c0 = -sfy / sff;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& s : fit.samples) {
    const double r =
        s.log_ratio + fit.fitted_c0 * dissipation_model_factor(s.epsilon, s.a, s.gap);
    ss_res += r * r;
    ss_tot += (s.log_ratio - mean) * (s.log_ratio - mean);
  }
  fit.residual_rms = std::sqrt(ss_res / static_cast<double>(fit.samples.size()));
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

}  // namespace advdiff
