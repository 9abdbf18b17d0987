#pragma once

// Backward adjoint sweep obtained by transposing the forward one-step maps in
// the X inner product. For the theta-scheme
//
//   A u^{k+1} = B u^k + dt e_c ((1-theta) v^k + theta v^{k+1}),
//
// set psi^{k+1} = A^{-T} M phi^{k+1} and M phi^k = B^T psi^{k+1}. Then
//
//   <u^N, phi^N>_X - <u^0, phi^0>_X = sum_j G_j v^j,
//   G_j = dt ((1-theta) psi^{j+1}_c + theta psi^j_c)
//
// holds to round-off. Dividing G by the trapezoidal time weights gives the
// control-space representative of the adjoint (the exact adjoint of the
// control-to-state map), which HUM re-injects as control. Algebraically
// psi^{k+1} = theta phi^k + (1-theta) phi^{k+1}, so for theta = 1/2 this is a
// light three-point average of the trace phi(., 0).

#include <cmath>
#include <vector>

#include "advdiff/core_types.hpp"
#include "advdiff/forward_solver.hpp"

namespace advdiff {

struct AdjointRun {
  Trajectory trajectory;             // phi at all time nodes (empty if not kept)
  std::vector<double> observation;   // phi(t_k, boundary node)
  ControlSignal dual_control;        // exact adjoint of the control-to-state map
  Boundary variant = Boundary::gamma0;
  StateX initial;                    // phi(0)
};

inline AdjointRun solve_adjoint(const Propagator& prop, const StateX& phiT, Boundary variant,
                                bool keep_trajectory = true) {
  const GridSpec& g = prop.grid();
  check_state(phiT, g, "terminal state");
  if (!phiT.all_finite()) throw DomainError("terminal state has non-finite entries");
  const int n_time = g.n_time;
  const int c = g.node(variant);
  const double dt = prop.dt();
  const double th = g.theta_scheme;
  const auto& ops = prop.operators();
  const auto& pair = prop.pair();

  AdjointRun run;
  run.variant = variant;
  run.observation.assign(n_time + 1, 0.0);
  std::vector<double> grad(n_time + 1, 0.0);
  std::vector<StateX> states;
  if (keep_trajectory) states.resize(n_time + 1);

  StateX phi = phiT;
  run.observation[n_time] = phi[c];
  if (keep_trajectory) states[n_time] = phi;
  std::vector<double> psi(phi.size());
  for (int k = n_time - 1; k >= 0; --k) {
    ops.mass_X.multiply(phi.values, psi);
    prop.implicit_lu().solve_in_place(psi, /*transpose=*/true);
    grad[k] += dt * (1.0 - th) * psi[c];
    grad[k + 1] += dt * th * psi[c];
    pair.explicit_matrix.multiply_transpose(psi, phi.values);
    prop.mass_lu().solve_in_place(phi.values);
    run.observation[k] = phi[c];
    if (keep_trajectory) states[k] = phi;
  }
  run.initial = phi;
  if (keep_trajectory)
    for (auto& s : states) run.trajectory.push_back(std::move(s));

  const auto w = time_weights(prop.params(), g);
  run.dual_control.location = variant;
  run.dual_control.samples.resize(n_time + 1);
  for (int j = 0; j <= n_time; ++j) run.dual_control.samples[j] = grad[j] / w[j];
  return run;
}

inline AdjointRun solve_adjoint(const StateX& phiT, const ModelParams& p, const GridSpec& g,
                                Boundary variant = Boundary::gamma0) {
  return solve_adjoint(Propagator(p, g), phiT, variant);
}

/// Relative defect of the discrete duality identity
/// <u(T), phi_T>_X - <u0, phi(0)>_X - (v, dual_control)_{L^2(0,T)}.
inline double duality_defect(const Propagator& prop, const StateX& u0, const ControlSignal& v,
                             const StateX& phiT) {
  const auto& p = prop.params();
  const auto& g = prop.grid();
  const StateX uT = prop.final_state(u0, v);
  const AdjointRun adj = solve_adjoint(prop, phiT, v.location, false);
  const double lhs = prop.inner(uT, phiT);
  const double init = prop.inner(u0, adj.initial);
  const double pairing = time_inner(v.samples, adj.dual_control.samples, p, g);
  const double scale = prop.norm(uT) * prop.norm(phiT) + prop.norm(u0) * prop.norm(adj.initial) +
                       l2_time_norm(v, p, g) * l2_time_norm(adj.dual_control, p, g);
  if (scale == 0.0) return 0.0;
  return std::abs(lhs - init - pairing) / scale;
}

inline double duality_defect(const StateX& u0, const ControlSignal& v, const StateX& phiT,
                             const ModelParams& p, const GridSpec& g) {
  return duality_defect(Propagator(p, g), u0, v, phiT);
}

/// CSV `t,phi_at_0` (the column keeps its name for the gamma1 variant, where
/// it holds phi(t, -1)).
inline void write_observation_csv(std::ostream& os, const AdjointRun& run, const ModelParams& p,
                                  const GridSpec& g) {
  os << "t,phi_at_0\n";
  os.precision(17);
  for (int k = 0; k <= g.n_time; ++k) os << g.t(p, k) << ',' << run.observation[k] << '\n';
}

}  // namespace advdiff
