#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "advdiff/forward_solver.hpp"
#include "support/mms.hpp"
#include "support/random_data.hpp"

using namespace advdiff;

TEST(Assemble, ThreeNodeHandAssembly) {
  const ModelParams p{1.0, 0.0, 1.0};
  const GridSpec g{3, 4, 0.5};
  const auto ops = assemble(p, g);
  const double mass[3][3] = {{7.0 / 6, 1.0 / 12, 0}, {1.0 / 12, 1.0 / 3, 1.0 / 12}, {0, 1.0 / 12, 7.0 / 6}};
  const double stiff[3][3] = {{2.5, -1.5, 0}, {-2.5, 4.0, -1.5}, {0, -2.5, 2.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(ops.mass_X(i, j), mass[i][j], 1e-15) << i << "," << j;
      EXPECT_NEAR(ops.stiffness_b(i, j), stiff[i][j], 1e-15) << i << "," << j;
    }
}

TEST(Assemble, ConstantVectorSeesOnlyBoundaryTerm) {
  const GridSpec g{41, 4, 0.5};
  const auto ops = assemble(ModelParams{0.1, 0.0, 1.0}, g);
  const std::vector<double> one(g.n_space, 1.0);
  EXPECT_NEAR(ops.stiffness_b.bilinear(one, one), 1.0, 1e-12);
}

TEST(Assemble, AdvectionIsSkewOnInteriorFunctions) {
  const ModelParams p{0.3, 0.0, 1.0};
  const GridSpec g{21, 4, 0.5};
  const auto ops = assemble(p, g);
  std::mt19937_64 rng(2);
  const double k = p.epsilon / g.h();
  for (int trial = 0; trial < 10; ++trial) {
    auto u = testsupport::random_state(g, rng).values;
    auto w = testsupport::random_state(g, rng).values;
    u.front() = u.back() = w.front() = w.back() = 0.0;
    double diffusion = 0.0;  // eps int u' w'
    for (int e = 0; e + 1 < g.n_space; ++e) diffusion += k * (u[e + 1] - u[e]) * (w[e + 1] - w[e]);
    EXPECT_NEAR(ops.stiffness_b.bilinear(w, u) + ops.stiffness_b.bilinear(u, w), 2.0 * diffusion, 1e-12);
  }
}

TEST(Assemble, GeneratorIsDissipative) {
  const GridSpec g{51, 4, 0.5};
  std::mt19937_64 rng(9);
  for (double eps : {0.02, 0.1, 1.0})
    for (double a : {0.0, 1.0, 25.0}) {
      const ModelParams p{eps, a, 1.0};
      const auto k = generator_matrix(assemble(p, g), p);
      for (int trial = 0; trial < 10; ++trial) {
        const auto u = testsupport::random_state(g, rng).values;
        EXPECT_GE(k.bilinear(u, u), -1e-12);
      }
    }
}

TEST(PecletWarning, OnlyWhenUnderResolved) {
  EXPECT_TRUE(peclet_warning(ModelParams{0.01, 0, 1}, GridSpec{51, 10, 0.5}).has_value());
  EXPECT_FALSE(peclet_warning(ModelParams{0.1, 0, 1}, GridSpec{201, 10, 0.5}).has_value());
}

TEST(StepPair, BackwardEulerExplicitIsMass) {
  const ModelParams p{0.1, 2.0, 1.0};
  const GridSpec g{11, 10, 1.0};
  const auto ops = assemble(p, g);
  const auto pair = step_operator_pair(ops, p, g);
  EXPECT_EQ(pair.explicit_matrix.diag, ops.mass_X.diag);
  EXPECT_EQ(pair.explicit_matrix.lower, ops.mass_X.lower);
  EXPECT_EQ(pair.explicit_matrix.upper, ops.mass_X.upper);
}

TEST(StepPair, SmallStepApproachesMass) {
  const ModelParams p{0.1, 0.0, 1e-9};
  const GridSpec g{11, 10, 0.5};
  const auto ops = assemble(p, g);
  const auto pair = step_operator_pair(ops, p, g);
  for (int i = 0; i < g.n_space; ++i) {
    EXPECT_NEAR(pair.implicit_matrix.diag[i], ops.mass_X.diag[i], 1e-9);
    EXPECT_NEAR(pair.explicit_matrix.diag[i], ops.mass_X.diag[i], 1e-9);
  }
}

TEST(StepPair, StepwiseApplicationMatchesSolver) {
  const ModelParams p{0.1, 0.5, 1.0};
  const GridSpec g{21, 30, 0.5};
  std::mt19937_64 rng(4);
  const auto u0 = testsupport::random_state(g, rng);
  const auto traj = solve_forward(u0, SourceData::none(), p, g);
  const auto pair = step_operator_pair(p, g);
  const TridiagonalLU lu(pair.implicit_matrix);
  auto u = u0.values;
  for (int k = 0; k < g.n_time; ++k) {
    auto rhs = pair.explicit_matrix * u;
    lu.solve_in_place(rhs);
    u = rhs;
  }
  for (int i = 0; i < g.n_space; ++i) EXPECT_NEAR(u[i], traj.states.back()[i], 1e-13);
}

TEST(SolveForward, ZeroDataStaysZero) {
  const ModelParams p{0.1, 0.0, 1.0};
  const GridSpec g{21, 20, 0.5};
  const auto traj = solve_forward(StateX::zeros(g), SourceData::none(), p, g);
  ASSERT_EQ(traj.states.size(), 21u);
  for (const auto& s : traj.states)
    for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(SolveForward, TracesMatchEndpoints) {
  const ModelParams p{0.1, 0.0, 1.0};
  const GridSpec g{21, 20, 0.5};
  std::mt19937_64 rng(1);
  const auto traj = solve_forward(testsupport::random_state(g, rng), SourceData::none(), p, g);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    EXPECT_EQ(traj.trace_at_zero[k], traj.states[k].at_zero());
    EXPECT_EQ(traj.trace_at_minus_one[k], traj.states[k].at_minus_one());
  }
}

TEST(SolveForward, ContractionForEveryThetaAndA) {
  std::mt19937_64 rng(12);
  for (double theta : {0.5, 0.75, 1.0})
    for (double a : {0.0, 1.0, 10.0}) {
      const ModelParams p{0.1, a, 1.0};
      const GridSpec g{101, 200, theta};
      const auto traj = solve_forward(testsupport::random_state(g, rng), SourceData::none(), p, g);
      for (std::size_t k = 1; k < traj.states.size(); ++k)
        EXPECT_LE(norm_X(traj.states[k], p, g), norm_X(traj.states[k - 1], p, g) * (1 + 1e-10))
            << "theta " << theta << " a " << a << " k " << k;
    }
}

TEST(SolveForward, Linearity) {
  const ModelParams p{0.2, 0.3, 1.0};
  const GridSpec g{21, 25, 0.5};
  std::mt19937_64 rng(21);
  const auto u0 = testsupport::random_state(g, rng), w0 = testsupport::random_state(g, rng);
  const auto v1 = testsupport::random_signal(g, rng), v2 = testsupport::random_signal(g, rng);
  const Propagator prop(p, g);
  ControlSignal vc = v1;
  for (std::size_t k = 0; k < vc.samples.size(); ++k) vc.samples[k] = 2.0 * v1.samples[k] - 3.0 * v2.samples[k];
  const auto lhs = prop.final_state(linear_combination(2.0, u0, -3.0, w0), vc);
  const auto rhs = linear_combination(2.0, prop.final_state(u0, v1), -3.0, prop.final_state(w0, v2));
  for (int i = 0; i < g.n_space; ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
}

TEST(SolveForward, RejectsMismatchedData) {
  const ModelParams p{0.1, 0.0, 1.0};
  const GridSpec g{21, 20, 0.5};
  EXPECT_THROW(solve_forward(StateX::zeros(GridSpec{11, 20, 0.5}), SourceData::none(), p, g), DimensionError);
  SourceData s;
  s.g0 = ControlSignal{std::vector<double>(5, 0.0), Boundary::gamma0};
  EXPECT_THROW(solve_forward(StateX::zeros(g), s, p, g), DimensionError);
  auto bad = StateX::zeros(g);
  bad[3] = std::nan("");
  EXPECT_THROW(solve_forward(bad, SourceData::none(), p, g), DomainError);
}

TEST(Mms, CrankNicolsonSecondOrder) {
  for (double a : {0.0, 1.0}) {
    double prev = testsupport::mms_error(0.1, a, 1, 0.5);
    for (int r : {2, 4, 8}) {
      const double e = testsupport::mms_error(0.1, a, r, 0.5);
      EXPECT_GE(std::log2(prev / e), 1.9) << "a " << a << " refine " << r;
      prev = e;
    }
  }
}

TEST(Mms, BackwardEulerFirstOrder) {
  double prev = testsupport::mms_error(0.1, 0.0, 1, 1.0);
  for (int r : {2, 4, 8}) {
    const double e = testsupport::mms_error(0.1, 0.0, r, 1.0);
    EXPECT_GE(std::log2(prev / e), 0.9) << "refine " << r;
    prev = e;
  }
}

TEST(TrajectoryCsv, StrideKeepsLastSlice) {
  const ModelParams p{0.1, 0.0, 1.0};
  const GridSpec g{3, 5, 0.5};
  const auto traj = solve_forward(StateX({1, 0, 0}), SourceData::none(), p, g);
  std::ostringstream os;
  write_trajectory_csv(os, traj, p, g, 2);
  std::istringstream in(os.str());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x,value");
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4 * 3);  // slices 0, 2, 4, 5
  EXPECT_THROW(write_trajectory_csv(os, traj, p, g, 0), ConfigError);
}
