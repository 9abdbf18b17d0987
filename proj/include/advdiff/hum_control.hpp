#pragma once

// Penalized HUM. The Gramian maps adjoint terminal data to the terminal state
// reached from rest when the adjoint's control-space representative is fed
// back as boundary control. CG runs on (Lambda + delta I) phi_T = -u_free(T)
// in the X inner product, where Lambda is self-adjoint.

#include <algorithm>
#include <cmath>
#include <vector>

#include "advdiff/adjoint_solver.hpp"
#include "advdiff/core_types.hpp"
#include "advdiff/forward_solver.hpp"
#include "advdiff/profiles.hpp"

namespace advdiff {

struct HumConfig {
  double penalty_delta = 1e-8;
  double cg_tol = 1e-10;
  int cg_max_iter = 2000;

  void validate() const {
    if (!(penalty_delta > 0.0)) throw ConfigError("penalty_delta must be positive");
    if (!(cg_tol > 0.0)) throw ConfigError("cg_tol must be positive");
    if (cg_max_iter < 1) throw ConfigError("cg_max_iter must be >= 1");
  }
};

struct HumResult {
  ControlSignal control;
  double terminal_residual = 0.0;
  double control_norm = 0.0;
  double cost_quotient = 0.0;
  int cg_iterations = 0;
  bool converged = true;
  std::vector<double> residual_history;  // X-norm of the CG residual, per iteration
  StateX optimal_terminal;               // phi_T*
  StateX terminal_state;                 // u(T) from the verification solve
};

inline StateX gramian_apply(const Propagator& prop, const StateX& phiT, Boundary variant) {
  const AdjointRun adj = solve_adjoint(prop, phiT, variant, false);
  return prop.final_state(StateX::zeros(prop.grid()), adj.dual_control);
}

inline StateX gramian_apply(const StateX& phiT, const ModelParams& p, const GridSpec& g,
                            Boundary variant = Boundary::gamma0) {
  return gramian_apply(Propagator(p, g), phiT, variant);
}

inline HumResult compute_control(const Propagator& prop, const StateX& u0, const HumConfig& cfg,
                                 Boundary variant = Boundary::gamma0) {
  cfg.validate();
  const auto& p = prop.params();
  const auto& g = prop.grid();
  check_state(u0, g, "initial state");
  if (!u0.all_finite()) throw DomainError("initial state has non-finite entries");

  HumResult res;
  const double u0_norm = prop.norm(u0);
  if (u0_norm == 0.0) {
    res.control = ControlSignal::zeros(g, variant);
    res.optimal_terminal = StateX::zeros(g);
    res.terminal_state = StateX::zeros(g);
    return res;
  }

  const StateX free_final = prop.final_state(u0, SourceData::none());
  const StateX rhs = scaled(-1.0, free_final);
  const double rhs_norm = prop.norm(rhs);

  StateX x = StateX::zeros(g);
  if (rhs_norm > 0.0) {
    auto apply = [&](const StateX& v) {
      StateX out = gramian_apply(prop, v, variant);
      axpy(cfg.penalty_delta, v, out);
      return out;
    };
    StateX r = rhs;
    StateX dir = r;
    double rr = prop.inner(r, r);
    res.converged = false;
    for (int it = 0; it < cfg.cg_max_iter; ++it) {
      const StateX q = apply(dir);
      const double alpha = rr / prop.inner(dir, q);
      axpy(alpha, dir, x);
      axpy(-alpha, q, r);
      const double rr_new = prop.inner(r, r);
      res.cg_iterations = it + 1;
      res.residual_history.push_back(std::sqrt(std::max(rr_new, 0.0)));
      if (std::sqrt(std::max(rr_new, 0.0)) <= cfg.cg_tol * rhs_norm) {
        res.converged = true;
        break;
      }
      const double beta = rr_new / rr;
      rr = rr_new;
      dir = linear_combination(1.0, r, beta, dir);
    }
  }

  res.optimal_terminal = x;
  res.control = solve_adjoint(prop, x, variant, false).dual_control;
  // Independent verification solve from u0 with the computed control.
  res.terminal_state = prop.final_state(u0, res.control);
  res.terminal_residual = prop.norm(res.terminal_state);
  res.control_norm = l2_time_norm(res.control, p, g);
  res.cost_quotient = res.control_norm / u0_norm;
  return res;
}

inline HumResult compute_control(const StateX& u0, const ModelParams& p, const GridSpec& g,
                                 const HumConfig& cfg, Boundary variant = Boundary::gamma0) {
  return compute_control(Propagator(p, g), u0, cfg, variant);
}

/// Largest cost quotient over a battery of initial states.
inline double cost_upper_estimate(const Propagator& prop, const HumConfig& cfg,
                                  const std::vector<StateX>& battery,
                                  Boundary variant = Boundary::gamma0) {
  if (battery.empty()) throw ConfigError("battery must be nonempty");
  double best = 0.0;
  for (const auto& u0 : battery) {
    if (prop.norm(u0) == 0.0) throw DomainError("battery members must be nonzero");
    best = std::max(best, compute_control(prop, u0, cfg, variant).cost_quotient);
  }
  return best;
}

inline double cost_upper_estimate(const ModelParams& p, const GridSpec& g, const HumConfig& cfg,
                                  const std::vector<StateX>& battery,
                                  Boundary variant = Boundary::gamma0) {
  return cost_upper_estimate(Propagator(p, g), cfg, battery, variant);
}

inline std::vector<StateX> battery_states(const ModelParams& p, const GridSpec& g) {
  std::vector<StateX> out;
  for (auto& m : default_battery(p, g)) out.push_back(std::move(m.state));
  return out;
}

}  // namespace advdiff
