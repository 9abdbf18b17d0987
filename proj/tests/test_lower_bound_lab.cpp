#include <gtest/gtest.h>

#include <cmath>

#include "advdiff/lower_bound_lab.hpp"

using namespace advdiff;

TEST(Bump, ConstraintArithmetic) {
  const ModelParams ok{0.05, 0.0, 0.5};
  EXPECT_NO_THROW(BumpSpec{0.1}.validate(ok));
  EXPECT_THROW(BumpSpec{0.1}.validate(ModelParams{0.05, 0.0, 0.9}), DomainError);
  EXPECT_THROW(BumpSpec{0.0}.validate(ok), DomainError);
}

TEST(Bump, SupportAndNormalization) {
  const ModelParams p{0.05, 0.0, 0.5};
  const GridSpec g{801, 10, 0.5};
  const BumpSpec spec{0.1};
  const auto u = make_bump(spec, p, g);
  EXPECT_NEAR(interior_l2(u, u, g), 1.0, 1e-10);
  for (int i = 0; i < g.n_space; ++i)
    if (g.x(i) <= -0.2 || g.x(i) >= -0.1) {
      EXPECT_EQ(u[i], 0.0) << g.x(i);
    }
  EXPECT_EQ(u.at_zero(), 0.0);
  EXPECT_EQ(u.at_minus_one(), 0.0);
}

TEST(Bump, ResolutionError) {
  const ModelParams p{0.05, 0.0, 0.5};
  // 0.1 wide support with h = 0.01 holds 9 nodes
  EXPECT_THROW(make_bump(BumpSpec{0.1}, p, GridSpec{101, 10, 0.5}), DomainError);
  EXPECT_GE(bump_nodes(BumpSpec{0.1}, GridSpec{201, 10, 0.5}), kMinBumpNodes);
}

TEST(Transport, BoundaryVanishesAndPairingBounded) {
  const ModelParams p{0.05, 0.0, 0.5};
  const GridSpec g{401, 500, 0.5};
  const BumpSpec spec{0.1};
  EXPECT_EQ(transport_boundary_max(spec, p, g), 0.0);
  const auto th = transport_initial(spec, p, g);
  EXPECT_NEAR(interior_l2(th, th, g), 1.0, 1e-10);
  const auto rep = witness_quotient(spec, p, g);
  EXPECT_FALSE(rep.off_regime);
  EXPECT_GT(rep.transport_pairing, 0.0);
  EXPECT_LE(rep.transport_pairing, rep.initial_norm);
  EXPECT_NEAR(transport_check(spec, p, g), rep.transport_pairing, 1e-14);
  EXPECT_GT(rep.quotient, 0.0);
}

TEST(Witness, OffRegimeFlag) {
  const ModelParams p{0.1, 0.0, 1.0};
  const GridSpec g{201, 200, 0.5};
  const auto rep = witness_quotient(BumpSpec{0.1}, p, g);
  EXPECT_TRUE(rep.off_regime);
  EXPECT_EQ(rep.transport_pairing, 0.0);
  EXPECT_THROW(transport_check(BumpSpec{0.1}, p, g), DomainError);
}

TEST(Witness, StrictOrderingInEpsilon) {
  const GridSpec g{401, 1000, 0.5};
  const BumpSpec spec{0.1};
  const auto r1 = witness_quotient(spec, ModelParams{0.1, 0.0, 0.5}, g);
  const auto r2 = witness_quotient(spec, ModelParams{0.05, 0.0, 0.5}, g);
  EXPECT_GT(r2.quotient, r1.quotient);
  EXPECT_LT(r2.max_trace_sq, r1.max_trace_sq);
}

TEST(Witness, TraceEnergyMatchesTrapezoid) {
  const ModelParams p{0.1, 0.0, 0.5};
  const GridSpec g{201, 100, 0.5};
  const BumpSpec spec{0.1};
  const auto run = solve_adjoint(Propagator(p, g), make_bump(spec, p, g), Boundary::gamma0, false);
  double e = 0.0;
  for (int k = 0; k <= g.n_time; ++k) {
    const double w = (k == 0 || k == g.n_time) ? 0.5 * g.dt(p) : g.dt(p);
    e += w * run.observation[k] * run.observation[k];
  }
  const auto rep = witness_from_run(run, spec, p, g);
  EXPECT_NEAR(rep.trace_energy, e, 1e-14 * e);
  EXPECT_NEAR(rep.quotient, rep.initial_norm / std::sqrt(e), 1e-12 * rep.quotient);
}

TEST(Fits, PlantedTraceDecay) {
  std::vector<WitnessPoint> pts;
  const double delta = 0.1, lambda = 0.6, c = 2.0;
  for (double eps : {0.1, 0.07, 0.05}) {
    WitnessReport r;
    r.max_trace_sq = c * std::exp(-delta * lambda / eps) / eps;
    r.transport_pairing = 1.0 - 3.0 * eps;
    pts.push_back({eps, r});
  }
  const auto f = fit_trace_smallness(pts, delta);
  EXPECT_NEAR(f.lambda_hat, lambda, 1e-9);
  EXPECT_NEAR(f.c_hat, c, 1e-9);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  const auto q = fit_quasi_conservation(pts);
  EXPECT_NEAR(q.c_hat, 3.0, 1e-12);
  EXPECT_TRUE(q.upper_ok);
  pts.resize(2);
  EXPECT_THROW(fit_trace_smallness(pts, delta), DomainError);
}
