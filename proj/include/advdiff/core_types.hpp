#pragma once

// Shared value types for the 1D artificial advection-diffusion control
// problem on (-1, 0): parameters, grids, discrete states of the space X
// (L^2 interior plus eps-weighted boundary traces) and control signals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace advdiff {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};

/// Which end of the strip carries the control (and the observation).
/// gamma0 is x = 0, gamma1 is x = -1.
enum class Boundary { gamma0, gamma1 };

inline const char* to_string(Boundary b) { return b == Boundary::gamma0 ? "gamma0" : "gamma1"; }

struct ModelParams {
  double epsilon = 0.1;
  double a = 0.0;
  double horizon_T = 1.0;
  static constexpr double L = 1.0;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw DomainError("epsilon must be positive, got " + std::to_string(epsilon));
    if (!(a >= 0.0) || !std::isfinite(a))
      throw DomainError("a must be nonnegative, got " + std::to_string(a));
    if (!(horizon_T > 0.0) || !std::isfinite(horizon_T))
      throw DomainError("horizon T must be positive, got " + std::to_string(horizon_T));
  }

  static ModelParams make(double epsilon, double a, double T) {
    ModelParams p{epsilon, a, T};
    p.validate();
    return p;
  }
};

struct GridSpec {
  int n_space = 201;
  int n_time = 2000;
  double theta_scheme = 0.5;

  void validate() const {
    if (n_space < 3) throw DomainError("n_space must be >= 3");
    if (n_time < 2) throw DomainError("n_time must be >= 2");
    if (!(theta_scheme >= 0.5 && theta_scheme <= 1.0))
      throw DomainError("theta_scheme must lie in [0.5, 1]");
  }

  double h() const { return 1.0 / static_cast<double>(n_space - 1); }
  double dt(const ModelParams& p) const { return p.horizon_T / static_cast<double>(n_time); }
  double x(int i) const { return -1.0 + static_cast<double>(i) * h(); }
  double t(const ModelParams& p, int k) const { return static_cast<double>(k) * dt(p); }

  /// Node index of a boundary point: x = 0 is the last node, x = -1 the first.
  int node(Boundary b) const { return b == Boundary::gamma0 ? n_space - 1 : 0; }
};

/// Nodal values u(x_i) on the uniform grid, endpoints included.
struct StateX {
  std::vector<double> values;

  StateX() = default;
  explicit StateX(std::vector<double> v) : values(std::move(v)) {}

  static StateX zeros(const GridSpec& g) { return StateX(std::vector<double>(g.n_space, 0.0)); }

  static StateX sample(const GridSpec& g, const std::function<double(double)>& f) {
    std::vector<double> v(g.n_space);
    for (int i = 0; i < g.n_space; ++i) v[i] = f(g.x(i));
    return StateX(std::move(v));
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  double at_zero() const { return values.back(); }
  double at_minus_one() const { return values.front(); }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Samples of v at the time nodes t_k = k dt, k = 0..n_time.
struct ControlSignal {
  std::vector<double> samples;
  Boundary location = Boundary::gamma0;

  static ControlSignal zeros(const GridSpec& g, Boundary where = Boundary::gamma0) {
    return {std::vector<double>(g.n_time + 1, 0.0), where};
  }
  bool empty() const { return samples.empty(); }
};

struct Trajectory {
  std::vector<StateX> states;
  std::vector<double> trace_at_zero;
  std::vector<double> trace_at_minus_one;

  void push_back(StateX s) {
    trace_at_zero.push_back(s.at_zero());
    trace_at_minus_one.push_back(s.at_minus_one());
    states.push_back(std::move(s));
  }
  const std::vector<double>& trace(Boundary b) const {
    return b == Boundary::gamma0 ? trace_at_zero : trace_at_minus_one;
  }
};

inline void check_state(const StateX& u, const GridSpec& g, const char* what = "state") {
  if (u.size() != static_cast<std::size_t>(g.n_space))
    throw DimensionError(std::string(what) + ": expected " + std::to_string(g.n_space) +
                         " nodes, got " + std::to_string(u.size()));
}

inline void check_signal(const ControlSignal& v, const GridSpec& g, const char* what = "control") {
  if (v.samples.size() != static_cast<std::size_t>(g.n_time + 1))
    throw DimensionError(std::string(what) + ": expected " + std::to_string(g.n_time + 1) +
                         " samples, got " + std::to_string(v.samples.size()));
}

/// Interior L^2 pairing of the piecewise-linear interpolants, integrated
/// exactly (consistent P1 mass).
inline double interior_l2(const StateX& u, const StateX& w, const GridSpec& g) {
  check_state(u, g, "interior_l2 lhs");
  check_state(w, g, "interior_l2 rhs");
  const double h = g.h();
  double acc = 0.0;
  for (int i = 0; i + 1 < g.n_space; ++i) {
    acc += 2.0 * u[i] * w[i] + 2.0 * u[i + 1] * w[i + 1] + u[i] * w[i + 1] + u[i + 1] * w[i];
  }
  return acc * h / 6.0;
}

/// <u, w>_X = int u w + eps (u(0) w(0) + u(-1) w(-1)).
inline double inner_X(const StateX& u, const StateX& w, const ModelParams& p, const GridSpec& g) {
  const double interior = interior_l2(u, w, g);
  return interior + p.epsilon * (u.at_zero() * w.at_zero() + u.at_minus_one() * w.at_minus_one());
}

inline double norm_X(const StateX& u, const ModelParams& p, const GridSpec& g) {
  return std::sqrt(std::max(0.0, inner_X(u, u, p, g)));
}

/// Trapezoidal weights of the uniform time grid.
inline std::vector<double> time_weights(const ModelParams& p, const GridSpec& g) {
  std::vector<double> w(g.n_time + 1, g.dt(p));
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

inline double time_inner(const std::vector<double>& v, const std::vector<double>& w,
                         const ModelParams& p, const GridSpec& g) {
  if (v.size() != static_cast<std::size_t>(g.n_time + 1) || w.size() != v.size())
    throw DimensionError("time series length must be n_time + 1");
  const auto wt = time_weights(p, g);
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += wt[k] * v[k] * w[k];
  return acc;
}

/// Trapezoidal (int_0^T |v|^2 dt)^{1/2}.
inline double l2_time_norm(const ControlSignal& v, const ModelParams& p, const GridSpec& g) {
  check_signal(v, g);
  return std::sqrt(std::max(0.0, time_inner(v.samples, v.samples, p, g)));
}

// Vector helpers used throughout the solvers.
inline void axpy(double alpha, const StateX& x, StateX& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}
inline StateX scaled(double alpha, StateX x) {
  for (double& v : x.values) v *= alpha;
  return x;
}
inline StateX linear_combination(double a, const StateX& x, double b, const StateX& y) {
  StateX out(std::vector<double>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

// CSV serialization: headers `x,value` and `t,value`.
inline void write_state_csv(std::ostream& os, const StateX& u, const GridSpec& g) {
  check_state(u, g);
  os << "x,value\n";
  os.precision(17);
  for (int i = 0; i < g.n_space; ++i) os << g.x(i) << ',' << u[i] << '\n';
}

inline void write_control_csv(std::ostream& os, const ControlSignal& v, const ModelParams& p,
                              const GridSpec& g) {
  check_signal(v, g);
  os << "t,value\n";
  os.precision(17);
  for (int k = 0; k <= g.n_time; ++k) os << g.t(p, k) << ',' << v.samples[k] << '\n';
}

}  // namespace advdiff
