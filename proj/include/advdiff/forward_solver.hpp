#pragma once

// Galerkin-in-space, theta-scheme-in-time solver for
//
//   u_t + u_x - eps u_xx + a u = f              in (0,T) x (-1,0)
//   eps (u_t + d_nu u)         = g0             at x = 0
//   eps (u_t + d_nu u) + u     = g1             at x = -1
//
// The weak form is <u_t, w>_X + b(u, w) + a int u w = int f w + g0 w(0) + g1 w(-1)
// with b(u, w) = eps int u' w' + int w u' + u(-1) w(-1). The dynamic boundary
// conditions enter only through the eps-weighted endpoint rows of the mass.

#include <optional>
#include <string>
#include <vector>

#include "advdiff/core_types.hpp"
#include "advdiff/tridiagonal.hpp"

namespace advdiff {

struct DiscreteOperators {
  Tridiagonal mass_X;
  Tridiagonal stiffness_b;
  Tridiagonal mass_interior;
};

inline DiscreteOperators assemble(const ModelParams& p, const GridSpec& g) {
  p.validate();
  g.validate();
  const int n = g.n_space;
  const double h = g.h();
  DiscreteOperators ops{Tridiagonal(n), Tridiagonal(n), Tridiagonal(n)};
  for (int e = 0; e + 1 < n; ++e) {
    const int i = e, j = e + 1;
    // consistent P1 mass
    ops.mass_interior.add(i, i, h / 3.0);
    ops.mass_interior.add(j, j, h / 3.0);
    ops.mass_interior.add(i, j, h / 6.0);
    ops.mass_interior.add(j, i, h / 6.0);
    // eps int u' w'
    const double k = p.epsilon / h;
    ops.stiffness_b.add(i, i, k);
    ops.stiffness_b.add(j, j, k);
    ops.stiffness_b.add(i, j, -k);
    ops.stiffness_b.add(j, i, -k);
    // int w u': u' is constant per element, each hat integrates to h/2.
    // Row = test function, column = trial function.
    ops.stiffness_b.add(i, i, -0.5);
    ops.stiffness_b.add(i, j, 0.5);
    ops.stiffness_b.add(j, i, -0.5);
    ops.stiffness_b.add(j, j, 0.5);
  }
  ops.stiffness_b.add(0, 0, 1.0);  // u(-1) w(-1)
  ops.mass_X = ops.mass_interior;
  ops.mass_X.add(0, 0, p.epsilon);
  ops.mass_X.add(n - 1, n - 1, p.epsilon);
  return ops;
}

/// Warns when the mesh does not resolve boundary layers of width ~eps.
inline std::optional<std::string> peclet_warning(const ModelParams& p, const GridSpec& g) {
  if (g.h() > p.epsilon)
    return "mesh Peclet number h/eps = " + std::to_string(g.h() / p.epsilon) +
           " exceeds 1; results may oscillate";
  return std::nullopt;
}

/// Data of the inhomogeneous problem. Empty members mean zero.
struct SourceData {
  std::vector<StateX> f;  // nodal values at each time node
  ControlSignal g0;       // at x = 0
  ControlSignal g1;       // at x = -1

  static SourceData none() { return {}; }

  /// Boundary control v placed on the side named by v.location.
  static SourceData boundary_control(const ControlSignal& v) {
    SourceData s;
    if (v.location == Boundary::gamma0)
      s.g0 = v;
    else
      s.g1 = v;
    return s;
  }
};

struct StepPair {
  Tridiagonal implicit_matrix;  // mass_X + theta dt K
  Tridiagonal explicit_matrix;  // mass_X - (1 - theta) dt K
};

/// K = stiffness_b + a mass_interior.
inline Tridiagonal generator_matrix(const DiscreteOperators& ops, const ModelParams& p) {
  return ops.stiffness_b.combine(1.0, ops.mass_interior, p.a);
}

inline StepPair step_operator_pair(const DiscreteOperators& ops, const ModelParams& p,
                                   const GridSpec& g) {
  const double dt = g.dt(p);
  const double th = g.theta_scheme;
  const Tridiagonal k = generator_matrix(ops, p);
  StepPair pair{ops.mass_X.combine(1.0, k, th * dt), ops.mass_X.combine(1.0, k, -(1.0 - th) * dt)};
  if (th == 1.0) pair.explicit_matrix = ops.mass_X;
  return pair;
}

inline StepPair step_operator_pair(const ModelParams& p, const GridSpec& g) {
  return step_operator_pair(assemble(p, g), p, g);
}

/// Factored one-step maps for a fixed (params, grid). Built once and shared by
/// the forward sweep, the transposed adjoint sweep and every CG iteration.
class Propagator {
 public:
  Propagator(const ModelParams& p, const GridSpec& g)
      : params_(p), grid_(g), ops_(assemble(p, g)), pair_(step_operator_pair(ops_, p, g)),
        implicit_lu_(pair_.implicit_matrix), mass_lu_(ops_.mass_X) {}

  const ModelParams& params() const { return params_; }
  const GridSpec& grid() const { return grid_; }
  const DiscreteOperators& operators() const { return ops_; }
  const StepPair& pair() const { return pair_; }
  const TridiagonalLU& implicit_lu() const { return implicit_lu_; }
  const TridiagonalLU& mass_lu() const { return mass_lu_; }
  double dt() const { return grid_.dt(params_); }

  double inner(const StateX& u, const StateX& w) const { return inner_X(u, w, params_, grid_); }
  double norm(const StateX& u) const { return norm_X(u, params_, grid_); }

  /// Full trajectory of the inhomogeneous problem.
  Trajectory solve(const StateX& u0, const SourceData& src) const {
    Trajectory traj;
    traj.states.reserve(grid_.n_time + 1);
    march(u0, src, [&traj](const StateX& u) { traj.push_back(u); });
    return traj;
  }

  /// u(T) only.
  StateX final_state(const StateX& u0, const SourceData& src) const {
    return march(u0, src, [](const StateX&) {});
  }

  StateX final_state(const StateX& u0, const ControlSignal& v) const {
    return final_state(u0, SourceData::boundary_control(v));
  }

 private:
  void check_source(const SourceData& src) const {
    if (!src.f.empty()) {
      if (src.f.size() != static_cast<std::size_t>(grid_.n_time + 1))
        throw DimensionError("source f must have n_time + 1 slices");
      for (const auto& fk : src.f) check_state(fk, grid_, "source slice");
    }
    if (!src.g0.empty()) check_signal(src.g0, grid_, "g0");
    if (!src.g1.empty()) check_signal(src.g1, grid_, "g1");
  }

  // Load vector F^k: int f^k w_i + g0^k at x = 0 + g1^k at x = -1.
  void add_load(int k, double weight, const SourceData& src, std::vector<double>& rhs) const {
    if (weight == 0.0) return;
    if (!src.f.empty()) {
      std::vector<double> mf(rhs.size());
      ops_.mass_interior.multiply(src.f[k].values, mf);
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += weight * mf[i];
    }
    if (!src.g0.empty()) rhs.back() += weight * src.g0.samples[k];
    if (!src.g1.empty()) rhs.front() += weight * src.g1.samples[k];
  }

  template <class Visitor>
  StateX march(const StateX& u0, const SourceData& src, Visitor&& visit) const {
    check_state(u0, grid_, "initial state");
    if (!u0.all_finite()) throw DomainError("initial state has non-finite entries");
    check_source(src);
    const double step = dt();
    const double th = grid_.theta_scheme;
    StateX u = u0;
    visit(u);
    std::vector<double> rhs(u.size());
    for (int k = 0; k < grid_.n_time; ++k) {
      pair_.explicit_matrix.multiply(u.values, rhs);
      add_load(k, step * (1.0 - th), src, rhs);
      add_load(k + 1, step * th, src, rhs);
      implicit_lu_.solve_in_place(rhs);
      u.values.swap(rhs);
      visit(u);
    }
    return u;
  }

  ModelParams params_;
  GridSpec grid_;
  DiscreteOperators ops_;
  StepPair pair_;
  TridiagonalLU implicit_lu_;
  TridiagonalLU mass_lu_;
};

inline Trajectory solve_forward(const StateX& u0, const SourceData& src, const ModelParams& p,
                                const GridSpec& g) {
  return Propagator(p, g).solve(u0, src);
}

/// Long-format CSV `t,x,value`, every `stride`-th time node (the last one is
/// always written).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const ModelParams& p,
                                 const GridSpec& g, int stride = 1) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  os << "t,x,value\n";
  os.precision(17);
  const int last = static_cast<int>(traj.states.size()) - 1;
  for (int k = 0; k <= last; ++k) {
    if (k % stride != 0 && k != last) continue;
    for (int i = 0; i < g.n_space; ++i)
      os << g.t(p, k) << ',' << g.x(i) << ',' << traj.states[k][i] << '\n';
  }
}

}  // namespace advdiff
