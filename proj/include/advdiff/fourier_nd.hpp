#pragma once

// Two-dimensional demonstration: the strip (x', x_n) in T_W x (-1, 0) with
// the transverse variable periodic of width W. A discrete Fourier transform
// in x' splits the problem into 1D problems with zeroth-order coefficient
// a = eps xi^2, each controlled by HUM; the 2D control is the inverse
// transform of the mode controls.
//
// Conventions. Transverse nodes x'_j = j W / n, j = 0..n-1, and modes
// k = -n/2+1 .. n/2 with xi_k = 2 pi k / W. Coefficients are
//   c_k = (1/n) sum_j exp(-i xi_k x'_j) u_j,   u_j = sum_k exp(i xi_k x'_j) c_k,
// so that (W/n) sum_j |u_j|^2 = W sum_k |c_k|^2 for any norm induced by an
// inner product in x_n.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "advdiff/core_types.hpp"
#include "advdiff/forward_solver.hpp"
#include "advdiff/hum_control.hpp"
#include "advdiff/parallel.hpp"
#include "advdiff/profiles.hpp"

namespace advdiff {

struct Grid2D {
  double width_W = 4.0;
  int n_transverse = 32;
  GridSpec line;

  void validate() const {
    if (!(width_W > 0.0)) throw ConfigError("transverse width must be positive");
    if (n_transverse < 4) throw ConfigError("n_transverse must be >= 4");
    if ((n_transverse & (n_transverse - 1)) != 0)
      throw DimensionError("n_transverse must be a power of two");
    line.validate();
  }
  int k_min() const { return -n_transverse / 2 + 1; }
  int k_max() const { return n_transverse / 2; }
  double x_prime(int j) const { return width_W * j / n_transverse; }
  double xi(int k) const { return 2.0 * std::numbers::pi * k / width_W; }
};

/// Nodal data on the 2D grid: slices[j] is the x_n profile at x'_j.
struct Field2D {
  std::vector<StateX> slices;

  static Field2D sample(const Grid2D& g2, double (*f)(double, double)) {
    Field2D out;
    for (int j = 0; j < g2.n_transverse; ++j)
      out.slices.push_back(StateX::sample(g2.line, [&](double x) { return f(g2.x_prime(j), x); }));
    return out;
  }
};

struct ModeSet {
  std::vector<int> indices;          // k
  std::vector<double> frequencies;   // xi_k
  std::vector<StateX> re, im;        // real and imaginary parts of c_k

  std::size_t size() const { return indices.size(); }
  /// Position of mode k, or -1.
  int find(int k) const {
    for (std::size_t m = 0; m < indices.size(); ++m)
      if (indices[m] == k) return static_cast<int>(m);
    return -1;
  }
};

namespace detail {

struct Twiddles {
  std::vector<double> c, s;
  // Built to be exactly mirror-symmetric (slot n - r is the conjugate of slot
  // r) so that real data give bitwise Hermitian coefficients.
  explicit Twiddles(int n) : c(n), s(n) {
    for (int r = 0; r <= n / 2; ++r) {
      const double ang = 2.0 * std::numbers::pi * r / n;
      c[r] = std::cos(ang);
      s[r] = std::sin(ang);
      if (4 * r == n) c[r] = 0.0;
      if (2 * r == n) s[r] = 0.0;
    }
    for (int r = n / 2 + 1; r < n; ++r) {
      c[r] = c[n - r];
      s[r] = -s[n - r];
    }
  }
  // angle xi_k x'_j = 2 pi (k j mod n) / n
  int slot(int k, int j, int n) const { return ((k * j) % n + n) % n; }
};

}  // namespace detail

inline void check_field(const Field2D& u, const Grid2D& g2) {
  if (u.slices.size() != static_cast<std::size_t>(g2.n_transverse))
    throw DimensionError("field needs one slice per transverse node");
  for (const auto& s : u.slices) check_state(s, g2.line, "field slice");
}

inline ModeSet decompose(const Field2D& u, const Grid2D& g2) {
  g2.validate();
  check_field(u, g2);
  const int n = g2.n_transverse;
  const int nx = g2.line.n_space;
  const detail::Twiddles tw(n);
  ModeSet m;
  for (int k = g2.k_min(); k <= g2.k_max(); ++k) {
    StateX re = StateX::zeros(g2.line), im = StateX::zeros(g2.line);
    for (int j = 0; j < n; ++j) {
      const int r = tw.slot(k, j, n);
      for (int i = 0; i < nx; ++i) {
        re[i] += tw.c[r] * u.slices[j][i];
        im[i] -= tw.s[r] * u.slices[j][i];
      }
    }
    for (int i = 0; i < nx; ++i) {
      re[i] /= n;
      im[i] /= n;
    }
    m.indices.push_back(k);
    m.frequencies.push_back(g2.xi(k));
    m.re.push_back(std::move(re));
    m.im.push_back(std::move(im));
  }
  return m;
}

/// Inverse transform of complex per-mode data (re, im) sampled on a common
/// vector length. Returns the real part per transverse node; the largest
/// imaginary part is stored in `max_imag`.
inline std::vector<std::vector<double>> inverse_transform(
    const std::vector<int>& indices, const std::vector<std::vector<double>>& re,
    const std::vector<std::vector<double>>& im, int n, double& max_imag) {
  const detail::Twiddles tw(n);
  const std::size_t len = re.empty() ? 0 : re.front().size();
  std::vector<std::vector<double>> out(n, std::vector<double>(len, 0.0));
  max_imag = 0.0;
  for (int j = 0; j < n; ++j) {
    std::vector<double> imag(len, 0.0);
    for (std::size_t m = 0; m < indices.size(); ++m) {
      const int r = tw.slot(indices[m], j, n);
      for (std::size_t i = 0; i < len; ++i) {
        out[j][i] += tw.c[r] * re[m][i] - tw.s[r] * im[m][i];
        imag[i] += tw.s[r] * re[m][i] + tw.c[r] * im[m][i];
      }
    }
    for (double v : imag) max_imag = std::max(max_imag, std::abs(v));
  }
  return out;
}

inline Field2D recompose_field(const ModeSet& m, const Grid2D& g2, double* max_imag = nullptr) {
  std::vector<std::vector<double>> re, im;
  for (std::size_t q = 0; q < m.size(); ++q) {
    re.push_back(m.re[q].values);
    im.push_back(m.im[q].values);
  }
  double mi = 0.0;
  auto rows = inverse_transform(m.indices, re, im, g2.n_transverse, mi);
  if (max_imag) *max_imag = mi;
  Field2D out;
  for (auto& r : rows) out.slices.emplace_back(std::move(r));
  return out;
}

/// ||u||^2 = (W/n) sum_j ||u_j||_X^2.
inline double norm_2d(const Field2D& u, const ModelParams& p, const Grid2D& g2) {
  check_field(u, g2);
  double s = 0.0;
  for (const auto& sl : u.slices) {
    const double v = norm_X(sl, p, g2.line);
    s += v * v;
  }
  return std::sqrt(g2.width_W / g2.n_transverse * s);
}

/// W sum_k |c_k|_X^2 restricted to modes with |k| <= cutoff (all when cutoff < 0).
inline double mode_energy(const ModeSet& m, const ModelParams& p, const Grid2D& g2,
                          int cutoff = -1) {
  double s = 0.0;
  for (std::size_t q = 0; q < m.size(); ++q) {
    if (cutoff >= 0 && std::abs(m.indices[q]) > cutoff) continue;
    const double a = norm_X(m.re[q], p, g2.line), b = norm_X(m.im[q], p, g2.line);
    s += a * a + b * b;
  }
  return g2.width_W * s;
}

/// Largest violation of c_{-k} = conj(c_k) (and c_{n/2} real), in max norm.
inline double hermitian_defect(const ModeSet& m) {
  double worst = 0.0;
  for (std::size_t q = 0; q < m.size(); ++q) {
    const int k = m.indices[q];
    const int partner = m.find(-k);
    if (partner < 0) {
      for (double v : m.im[q].values) worst = std::max(worst, std::abs(v));
      continue;
    }
    for (std::size_t i = 0; i < m.re[q].size(); ++i) {
      worst = std::max(worst, std::abs(m.re[q][i] - m.re[partner][i]));
      worst = std::max(worst, std::abs(m.im[q][i] + m.im[partner][i]));
    }
  }
  return worst;
}

struct ModeControl {
  int index = 0;
  double xi = 0.0;
  double a = 0.0;            // eps xi^2
  ControlSignal v_re, v_im;  // v = v_re + i v_im
  StateX terminal_re, terminal_im;
  double coefficient_norm = 0.0;  // |c_k|_X
  double control_norm = 0.0;      // |v_k|_{L^2(0,T)}
  double quotient = 0.0;          // control_norm / coefficient_norm (0 for a zero mode)
  double terminal_residual = 0.0;
  int cg_iterations = 0;
  bool converged = true;
};

struct ModeControls {
  std::vector<ModeControl> modes;  // controlled modes, |k| <= cutoff, in increasing k
  int cutoff = 0;
  double tail_energy = 0.0;   // sum_{|k| > cutoff} |c_k|_X^2
  double total_energy = 0.0;  // sum_k |c_k|_X^2
};

/// One HUM problem per controlled mode and per real/imaginary part. The base
/// model must have a = 0; each mode gets a = eps xi^2.
inline ModeControls control_modes(const ModeSet& m, const ModelParams& p, const GridSpec& g,
                                  const HumConfig& cfg, int cutoff = 8, int workers = 1,
                                  Boundary variant = Boundary::gamma0) {
  p.validate();
  cfg.validate();
  if (p.a != 0.0) throw ConfigError("the 2D model has a = 0; mode coefficients are eps xi^2");
  if (cutoff < 0) throw ConfigError("mode cutoff must be >= 0");
  ModeControls out;
  out.cutoff = cutoff;
  std::vector<int> selected;
  for (std::size_t q = 0; q < m.size(); ++q)
    if (std::abs(m.indices[q]) <= cutoff) selected.push_back(static_cast<int>(q));
  out.modes.resize(selected.size());

  auto errors = parallel_for_collect(static_cast<int>(selected.size()), workers, [&](int s) {
    const int q = selected[s];
    ModeControl mc;
    mc.index = m.indices[q];
    mc.xi = m.frequencies[q];
    mc.a = p.epsilon * mc.xi * mc.xi;
    const ModelParams pm{p.epsilon, mc.a, p.horizon_T};
    const Propagator prop(pm, g);
    const HumResult hr = compute_control(prop, m.re[q], cfg, variant);
    const HumResult hi = compute_control(prop, m.im[q], cfg, variant);
    mc.v_re = hr.control;
    mc.v_im = hi.control;
    mc.terminal_re = hr.terminal_state;
    mc.terminal_im = hi.terminal_state;
    const double nr = prop.norm(m.re[q]), ni = prop.norm(m.im[q]);
    mc.coefficient_norm = std::hypot(nr, ni);
    mc.control_norm = std::hypot(hr.control_norm, hi.control_norm);
    mc.quotient = mc.coefficient_norm > 0.0 ? mc.control_norm / mc.coefficient_norm : 0.0;
    mc.terminal_residual = std::hypot(hr.terminal_residual, hi.terminal_residual);
    mc.cg_iterations = hr.cg_iterations + hi.cg_iterations;
    mc.converged = hr.converged && hi.converged;
    out.modes[s] = std::move(mc);
  });
  for (std::size_t s = 0; s < errors.size(); ++s) {
    if (!errors[s]) continue;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[s]);
    } catch (const std::exception& e) {
      what = e.what();
    }
    throw SolverError("mode control failed at xi = " + std::to_string(m.frequencies[selected[s]]) +
                      ": " + what);
  }
  for (std::size_t q = 0; q < m.size(); ++q) {
    const double a = norm_X(m.re[q], p, g), b = norm_X(m.im[q], p, g);
    out.total_energy += a * a + b * b;
    if (std::abs(m.indices[q]) > cutoff) out.tail_energy += a * a + b * b;
  }
  return out;
}

struct Recomposition {
  std::vector<std::vector<double>> control;  // control[j][k] = v(t_k, x'_j)
  double max_imag = 0.0;                      // largest imaginary part of the inverse transform
  double control_scale = 0.0;                 // max |v|
  double control_norm = 0.0;                  // ||v||_{L^2((0,T) x T_W)} from the samples
  double cost_2d = 0.0;                       // control_norm / ||u0||
  double max_mode_quotient = 0.0;
  double terminal_residual_2d = 0.0;          // Parseval combination of the mode residuals
  double terminal_residual_direct = 0.0;      // ||u(T)|| of the inverse-transformed terminal states
  double tail_fraction = 0.0;                 // uncontrolled share of ||u0||^2
};

inline Recomposition recompose_and_verify(const ModeControls& mc, const Grid2D& g2,
                                          const ModelParams& p, double u0_norm) {
  g2.validate();
  Recomposition r;
  const int n = g2.n_transverse;
  std::vector<int> idx;
  std::vector<std::vector<double>> vre, vim, tre, tim;
  double parseval_res = 0.0;
  for (const auto& m : mc.modes) {
    idx.push_back(m.index);
    vre.push_back(m.v_re.samples);
    vim.push_back(m.v_im.samples);
    tre.push_back(m.terminal_re.values);
    tim.push_back(m.terminal_im.values);
    parseval_res += m.terminal_residual * m.terminal_residual;
    r.max_mode_quotient = std::max(r.max_mode_quotient, m.quotient);
  }
  r.terminal_residual_2d = std::sqrt(g2.width_W * parseval_res);
  if (idx.empty()) {
    r.control.assign(n, std::vector<double>(g2.line.n_time + 1, 0.0));
    return r;
  }
  r.control = inverse_transform(idx, vre, vim, n, r.max_imag);

  double imag_state = 0.0;
  const auto term = inverse_transform(idx, tre, tim, n, imag_state);
  double s = 0.0;
  for (const auto& row : term) {
    const double v = norm_X(StateX(row), p, g2.line);
    s += v * v;
  }
  r.terminal_residual_direct = std::sqrt(g2.width_W / n * s);

  double vv = 0.0;
  for (const auto& row : r.control) {
    ControlSignal sig{row, Boundary::gamma0};
    const double v = l2_time_norm(sig, p, g2.line);
    vv += v * v;
    for (double x : row) r.control_scale = std::max(r.control_scale, std::abs(x));
  }
  r.control_norm = std::sqrt(g2.width_W / n * vv);
  r.cost_2d = u0_norm > 0.0 ? r.control_norm / u0_norm : 0.0;
  r.tail_fraction = mc.total_energy > 0.0 ? mc.tail_energy / mc.total_energy : 0.0;
  return r;
}

/// CSV `t,x_prime,value`.
inline void write_control_2d_csv(std::ostream& os, const Recomposition& r, const ModelParams& p,
                                 const Grid2D& g2) {
  os << "t,x_prime,value\n";
  os.precision(17);
  for (int k = 0; k <= g2.line.n_time; ++k)
    for (int j = 0; j < g2.n_transverse; ++j)
      os << g2.line.t(p, k) << ',' << g2.x_prime(j) << ',' << r.control[j][k] << '\n';
}

/// Sample 2D initial state: a transversally modulated bump plus two
/// oscillating components (modes k = 0, +-1, +-3 and +-12 for W = 4).
inline Field2D demo_field_2d(const Grid2D& g2) {
  Field2D u;
  const double two_pi_over_w = 2.0 * std::numbers::pi / g2.width_W;
  for (int j = 0; j < g2.n_transverse; ++j) {
    const double xp = g2.x_prime(j);
    u.slices.push_back(StateX::sample(g2.line, [&](double x) {
      return mollifier((x + 0.5) / 0.3) * (1.0 + 0.5 * std::cos(two_pi_over_w * xp)) +
             0.3 * mollifier((x + 0.3) / 0.2) * std::sin(3.0 * two_pi_over_w * xp + 0.4) +
             0.05 * mollifier((x + 0.6) / 0.2) * std::cos(12.0 * two_pi_over_w * xp);
    }));
  }
  return u;
}

}  // namespace advdiff
