#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "advdiff/carleman_lab.hpp"

using namespace advdiff;

TEST(Weights, ReferenceValues) {
  const CarlemanWeights w{Boundary::gamma0, 1.0, 2.0};
  const auto v = eval_weights(1.0, 0.0, w);
  EXPECT_NEAR(v.alpha, std::exp(3.0) - std::exp(2.0), 1e-12);
  EXPECT_NEAR(v.alpha, 12.696, 1e-3);
  EXPECT_NEAR(v.phi, std::exp(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(w.eta(0.0), 2.0);
  EXPECT_DOUBLE_EQ(w.eta(-1.0), 1.0);
  const CarlemanWeights w1{Boundary::gamma1, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(w1.eta(-1.0), 2.0);
  EXPECT_DOUBLE_EQ(w1.eta(0.0), 1.0);
  EXPECT_DOUBLE_EQ(carleman_m(), std::exp(3.0) - std::exp(2.0));
  EXPECT_DOUBLE_EQ(carleman_M(), std::exp(3.0) - std::exp(1.0));
}

TEST(Weights, EndpointsRejected) {
  const CarlemanWeights w{Boundary::gamma0, 1.0, 2.0};
  EXPECT_THROW(eval_weights(0.0, -0.5, w), DomainError);
  EXPECT_THROW(eval_weights(2.0, -0.5, w), DomainError);
}

TEST(Weights, PositiveAndSymmetricInTime) {
  for (Boundary b : {Boundary::gamma0, Boundary::gamma1}) {
    const CarlemanWeights w{b, 1.0, 3.0};
    for (int i = 1; i < 50; ++i)
      for (int j = 0; j <= 20; ++j) {
        const double t = 3.0 * i / 50.0, x = -j / 20.0;
        const auto a = eval_weights(t, x, w), c = eval_weights(3.0 - t, x, w);
        EXPECT_GT(a.alpha, 0.0);
        EXPECT_GT(a.phi, 0.0);
        EXPECT_NEAR(a.alpha, c.alpha, 1e-12 * a.alpha);
      }
  }
}

TEST(Weights, SpatialIdentities) {
  const double T = 2.0;
  for (Boundary b : {Boundary::gamma0, Boundary::gamma1}) {
    const CarlemanWeights w{b, 1.0, T};
    const double sign = w.eta_slope();
    for (int i = 1; i <= 50; ++i)
      for (int j = 0; j < 50; ++j) {
        const double t = T * i / 51.0, x = -1.0 + j / 49.0;
        const auto d = weight_derivatives(t, x, w);
        // gamma0: alpha_x + phi = 0 and alpha_xx + phi = 0; gamma1 flips the first sign
        EXPECT_LE(std::abs(d.alpha_x + sign * d.phi), 1e-14 * d.phi);
        EXPECT_LE(std::abs(d.alpha_xx + d.phi), 1e-14 * d.phi);
        // cross-check the closed forms against central differences of eval_weights
        const double hx = 1e-5;
        const double ax = (eval_weights(t, x + hx, w).alpha - eval_weights(t, x - hx, w).alpha) / (2 * hx);
        EXPECT_NEAR(ax, d.alpha_x, 1e-7 * std::abs(d.alpha_x) + 1e-9);
      }
  }
}

TEST(Weights, TimeDerivativeSecondOrder) {
  const CarlemanWeights w{Boundary::gamma0, 1.0, 2.0};
  const double t = 0.7, x = -0.4;
  const double exact = weight_derivatives(t, x, w).alpha_t;
  auto fd = [&](double h) {
    return (eval_weights(t + h, x, w).alpha - eval_weights(t - h, x, w).alpha) / (2 * h);
  };
  const double e1 = std::abs(fd(1e-2) - exact), e2 = std::abs(fd(5e-3) - exact);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.05);

  // |alpha_t| <= c T phi^2 with a measured c
  double c = 0.0;
  for (int i = 1; i < 50; ++i)
    for (int j = 0; j <= 20; ++j) {
      const auto d = weight_derivatives(2.0 * i / 50.0, -j / 20.0, w);
      c = std::max(c, std::abs(d.alpha_t) / (2.0 * d.phi * d.phi));
    }
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_GT(c, 0.0);
}

TEST(SMin, Examples) {
  EXPECT_DOUBLE_EQ(s_min(ModelParams{1.0, 0.0, 1.0}, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(s_min(ModelParams{0.1, 0.0, 2.0}, 1.0), 2.0 * s_min(ModelParams{0.2, 0.0, 2.0}, 1.0));
  const double eps = 0.05, T = 1.5;
  EXPECT_NEAR(s_min(ModelParams{eps, 1.0 / eps, T}, 0.5), 0.5 * ((T + T * T) / eps + T * T / eps), 1e-10);
  EXPECT_THROW(s_min(ModelParams{0.1, 0.0, 1.0}, 0.0), DomainError);
}

TEST(LogSum, MatchesDirectSum) {
  LogSum s;
  EXPECT_EQ(s.value(), -std::numeric_limits<double>::infinity());
  double direct = 0.0;
  for (double l : {-3.0, 1.0, 0.5, -std::numeric_limits<double>::infinity(), 2.0}) {
    s.add(l);
    direct += std::exp(l);
  }
  EXPECT_NEAR(s.value(), std::log(direct), 1e-14);
  LogSum big;
  big.add(-2000.0);
  big.add(-2000.0);
  EXPECT_NEAR(big.value(), -2000.0 + std::log(2.0), 1e-12);
}

TEST(FormatFromLog, Scientific) {
  EXPECT_EQ(format_from_log(std::log(1234.5)), "1.2345000000000e+3");
  EXPECT_EQ(format_from_log(-std::numeric_limits<double>::infinity()), "0");
  EXPECT_EQ(format_from_log(-1000.0 * std::numbers::ln10).substr(15), "e-1000");
}

TEST(CarlemanSides, ZeroRunIsDegenerateZero) {
  const ModelParams p{0.1, 0.0, 2.0};
  const GridSpec g{21, 40, 0.5};
  const auto run = solve_adjoint(StateX::zeros(g), p, g);
  const auto rep = carleman_sides(run, CarlemanWeights{Boundary::gamma0, 5.0, 2.0}, p, g);
  EXPECT_TRUE(rep.degenerate_zero);
  EXPECT_EQ(rep.lhs_interior, 0.0);
  EXPECT_EQ(rep.rhs, 0.0);
}

TEST(CarlemanSides, NeedsTrajectory) {
  const ModelParams p{0.1, 0.0, 2.0};
  const GridSpec g{21, 40, 0.5};
  const auto run = solve_adjoint(Propagator(p, g), bump(g, -0.5, 0.3), Boundary::gamma0, false);
  EXPECT_THROW(carleman_sides(run, CarlemanWeights{Boundary::gamma0, 5.0, 2.0}, p, g), DimensionError);
}

TEST(CarlemanSides, PositiveIntegralsAndDecayInS) {
  const ModelParams p{0.1, 0.0, 2.0};
  const GridSpec g{51, 200, 0.5};
  for (Boundary b : {Boundary::gamma0, Boundary::gamma1}) {
    const auto runs = family_runs(p, g, b);
    ASSERT_EQ(runs.size(), 6u);
    for (const auto& r : runs) {
      double prev_lhs = std::numeric_limits<double>::infinity();
      double prev_rhs = prev_lhs;
      for (double s : {50.0, 100.0, 200.0, 400.0}) {
        const auto rep = carleman_sides(r.run, CarlemanWeights{b, s, 2.0}, p, g);
        EXPECT_GT(rep.log_lhs_interior, -std::numeric_limits<double>::infinity()) << r.name;
        EXPECT_GT(rep.log_lhs_boundary, -std::numeric_limits<double>::infinity()) << r.name;
        EXPECT_GT(rep.log_rhs, -std::numeric_limits<double>::infinity()) << r.name;
        EXPECT_FALSE(rep.degenerate);
        EXPECT_LT(rep.log_lhs_interior, prev_lhs);
        EXPECT_LT(rep.log_rhs, prev_rhs);
        prev_lhs = rep.log_lhs_interior;
        prev_rhs = rep.log_rhs;
      }
    }
  }
}

TEST(CarlemanSides, QuadratureMatchesDirectSumWhenRepresentable) {
  // small s keeps every term inside double range: compare with a plain sum
  const ModelParams p{0.5, 0.0, 1.0};
  const GridSpec g{11, 20, 0.5};
  const auto run = solve_adjoint(normalized_X(bump(g, -0.5, 0.3), p, g), p, g);
  const CarlemanWeights w{Boundary::gamma0, 0.5, 1.0};
  double interior = 0.0, rhs = 0.0;
  for (int k = 1; k < g.n_time; ++k) {
    const double t = g.t(p, k);
    for (int i = 0; i < g.n_space; ++i) {
      const auto [al, ph] = eval_weights(t, g.x(i), w);
      const double node_w = (i == 0 || i == g.n_space - 1) ? 0.5 * g.h() : g.h();
      const double u = run.trajectory.states[k][i];
      interior += node_w * g.dt(p) * std::pow(0.5 * ph, 3) * std::exp(-2 * 0.5 * al) * u * u;
    }
    const auto [a0, p0] = eval_weights(t, 0.0, w);
    const double am1 = eval_weights(t, -1.0, w).alpha;
    const double u0 = run.trajectory.states[k].at_zero();
    rhs += g.dt(p) * std::pow(0.5 * p0, 7) * std::exp(-4 * 0.5 * a0 + 2 * 0.5 * am1) * u0 * u0;
  }
  const auto rep = carleman_sides(run, w, p, g);
  EXPECT_NEAR(rep.lhs_interior, interior, 1e-12 * interior);
  EXPECT_NEAR(rep.rhs, rhs, 1e-12 * rhs);
}

TEST(Calibration, LadderAndReference) {
  const auto ladder = default_s0_ladder();
  ASSERT_EQ(ladder.size(), 9u);
  EXPECT_DOUBLE_EQ(ladder.front(), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(ladder.back(), 4.0);
  EXPECT_NEAR(s_min(ModelParams{0.1, 0.0, 2.0}, ladder.front()), 60.0 / 64.0, 1e-12);
  EXPECT_THROW(s_range(1.0, 2.0, 1), DomainError);
  const auto sr = s_range(1.0, 4.0, 4);
  EXPECT_DOUBLE_EQ(sr[1], 2.0);
  EXPECT_DOUBLE_EQ(sr[3], 4.0);
}
