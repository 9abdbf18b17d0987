#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "advdiff/fourier_nd.hpp"

using namespace advdiff;

namespace {

Grid2D small_grid(int n_space = 41, int n_time = 80, int n_transverse = 16) {
  return Grid2D{4.0, n_transverse, GridSpec{n_space, n_time, 0.5}};
}

double max_abs(const StateX& u) {
  double m = 0.0;
  for (double v : u.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST(Decompose, TransverselyConstantField) {
  const auto g2 = small_grid();
  Field2D u;
  for (int j = 0; j < g2.n_transverse; ++j) u.slices.push_back(bump(g2.line, -0.5, 0.3));
  const auto m = decompose(u, g2);
  ASSERT_EQ(static_cast<int>(m.size()), g2.n_transverse);
  for (std::size_t q = 0; q < m.size(); ++q) {
    if (m.indices[q] == 0) {
      for (int i = 0; i < g2.line.n_space; ++i) EXPECT_NEAR(m.re[q][i], u.slices[0][i], 1e-15);
      EXPECT_EQ(max_abs(m.im[q]), 0.0);
    } else {
      EXPECT_LE(max_abs(m.re[q]) + max_abs(m.im[q]), 1e-15) << m.indices[q];
    }
  }
}

TEST(Decompose, SingleHarmonic) {
  const auto g2 = small_grid();
  const auto b = bump(g2.line, -0.4, 0.3);
  Field2D u;
  for (int j = 0; j < g2.n_transverse; ++j)
    u.slices.push_back(scaled(std::cos(2 * std::numbers::pi * g2.x_prime(j) / g2.width_W), b));
  const auto m = decompose(u, g2);
  for (std::size_t q = 0; q < m.size(); ++q) {
    const int k = m.indices[q];
    if (std::abs(k) == 1) {
      EXPECT_NEAR(m.frequencies[q], k * 2 * std::numbers::pi / 4.0, 1e-15);
      for (int i = 0; i < g2.line.n_space; ++i) EXPECT_NEAR(m.re[q][i], 0.5 * b[i], 1e-15);
      EXPECT_LE(max_abs(m.im[q]), 1e-15);
    } else {
      EXPECT_LE(max_abs(m.re[q]) + max_abs(m.im[q]), 1e-15) << k;
    }
  }
}

TEST(Decompose, ParsevalRoundTripAndHermitian) {
  const auto g2 = small_grid(61, 10, 32);
  const ModelParams p{0.1, 0.0, 1.0};
  const auto u = demo_field_2d(g2);
  const auto m = decompose(u, g2);
  const double n2 = norm_2d(u, p, g2);
  EXPECT_NEAR(mode_energy(m, p, g2), n2 * n2, 1e-10 * n2 * n2);
  EXPECT_EQ(hermitian_defect(m), 0.0);
  double mi = 1.0;
  const auto back = recompose_field(m, g2, &mi);
  EXPECT_LE(mi, 1e-15);
  double worst = 0.0, scale = 0.0;
  for (int j = 0; j < g2.n_transverse; ++j)
    for (int i = 0; i < g2.line.n_space; ++i) {
      worst = std::max(worst, std::abs(back.slices[j][i] - u.slices[j][i]));
      scale = std::max(scale, std::abs(u.slices[j][i]));
    }
  EXPECT_LE(worst, 1e-12 * scale);
}

TEST(Decompose, RejectsBadGrids) {
  auto g2 = small_grid();
  g2.n_transverse = 12;
  Field2D u;
  for (int j = 0; j < 12; ++j) u.slices.push_back(StateX::zeros(g2.line));
  EXPECT_THROW(decompose(u, g2), DimensionError);
  g2.n_transverse = 16;
  EXPECT_THROW(decompose(u, g2), DimensionError);
}

TEST(ControlModes, ZeroModeMatchesOneDimensionalControl) {
  const auto g2 = small_grid();
  const ModelParams p{0.1, 0.0, 2.0};
  const HumConfig cfg{1e-6, 1e-10, 500};
  const auto m = decompose(demo_field_2d(g2), g2);
  const auto mc = control_modes(m, p, g2.line, cfg, 0);
  ASSERT_EQ(mc.modes.size(), 1u);
  const auto ref = compute_control(m.re[m.find(0)], p, g2.line, cfg);
  ASSERT_EQ(ref.control.samples.size(), mc.modes[0].v_re.samples.size());
  for (std::size_t k = 0; k < ref.control.samples.size(); ++k)
    EXPECT_EQ(mc.modes[0].v_re.samples[k], ref.control.samples[k]);
  for (double v : mc.modes[0].v_im.samples) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(mc.modes[0].a, 0.0);
}

TEST(ControlModes, HermitianControlsAndWorkerIndependence) {
  const auto g2 = small_grid();
  const ModelParams p{0.1, 0.0, 2.0};
  const HumConfig cfg{1e-6, 1e-10, 500};
  const auto m = decompose(demo_field_2d(g2), g2);
  const auto one = control_modes(m, p, g2.line, cfg, 3, 1);
  const auto two = control_modes(m, p, g2.line, cfg, 3, 2);
  ASSERT_EQ(one.modes.size(), 7u);
  for (std::size_t q = 0; q < one.modes.size(); ++q) {
    EXPECT_EQ(one.modes[q].v_re.samples, two.modes[q].v_re.samples);
    const auto& a = one.modes[q];
    const auto& b = one.modes[one.modes.size() - 1 - q];
    ASSERT_EQ(a.index, -b.index);
    EXPECT_NEAR(a.a, p.epsilon * a.xi * a.xi, 1e-15);
    for (std::size_t k = 0; k < a.v_re.samples.size(); ++k) {
      EXPECT_EQ(a.v_re.samples[k], b.v_re.samples[k]);
      EXPECT_EQ(a.v_im.samples[k], -b.v_im.samples[k]);
    }
  }
}

TEST(ControlModes, ZeroFieldGivesZeroControl) {
  const auto g2 = small_grid();
  const ModelParams p{0.1, 0.0, 2.0};
  Field2D u;
  for (int j = 0; j < g2.n_transverse; ++j) u.slices.push_back(StateX::zeros(g2.line));
  const auto mc = control_modes(decompose(u, g2), p, g2.line, HumConfig{}, 8);
  const auto r = recompose_and_verify(mc, g2, p, 0.0);
  for (const auto& row : r.control)
    for (double v : row) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.cost_2d, 0.0);
  EXPECT_EQ(r.terminal_residual_2d, 0.0);
}

TEST(ControlModes, RejectsNonzeroBaseCoefficient) {
  const auto g2 = small_grid();
  const auto m = decompose(demo_field_2d(g2), g2);
  EXPECT_THROW(control_modes(m, ModelParams{0.1, 1.0, 2.0}, g2.line, HumConfig{}), ConfigError);
}

TEST(ControlModes, FailingModeIsNamed) {
  const auto g2 = small_grid();
  auto m = decompose(demo_field_2d(g2), g2);
  m.re[m.find(2)][5] = std::numeric_limits<double>::quiet_NaN();
  try {
    control_modes(m, ModelParams{0.1, 0.0, 2.0}, g2.line, HumConfig{1e-6, 1e-10, 50}, 3);
    FAIL() << "expected a SolverError";
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("xi = 3.14159"), std::string::npos) << e.what();
  }
}

TEST(Recompose, RealControlParsevalAndCostBound) {
  const auto g2 = small_grid(81, 400, 16);
  const ModelParams p{0.1, 0.0, 4.0};
  const auto u = demo_field_2d(g2);
  const auto m = decompose(u, g2);
  const auto mc = control_modes(m, p, g2.line, HumConfig{1e-8, 1e-10, 2000}, 8);
  const auto r = recompose_and_verify(mc, g2, p, norm_2d(u, p, g2));
  EXPECT_LE(r.max_imag, 1e-10 * r.control_scale);
  EXPECT_LE(r.cost_2d, r.max_mode_quotient * (1 + 1e-12));
  EXPECT_NEAR(r.terminal_residual_2d, r.terminal_residual_direct, 1e-10 * r.terminal_residual_direct + 1e-300);
  EXPECT_EQ(r.tail_fraction, 0.0);  // 16 transverse nodes: every mode has |k| <= 8

  // cost uniformity over |xi| <= 8 pi / W against the plain a = 0 quotient
  const double base = compute_control(normalized_X(bump(g2.line, -0.5, 0.3), p, g2.line), p, g2.line,
                                      HumConfig{1e-8, 1e-10, 2000})
                          .cost_quotient;
  for (const auto& md : mc.modes)
    if (md.coefficient_norm > 1e-3 * mc.modes[mc.modes.size() / 2].coefficient_norm) {
      EXPECT_LE(md.quotient, 2.0 * base) << md.index;
    }
}
