#include "aerogel/chain.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace aerogel;

TEST(BondCurrent, Values) {
  EXPECT_EQ(bond_current(1.7, 1.7), 0.0);
  EXPECT_NEAR(bond_current(2.0, 1.0), 0.46739, 1e-5);
  EXPECT_THROW(bond_current(0.0, 1.0), std::invalid_argument);
  const double h = 1e-6;
  EXPECT_NEAR(bond_current(1.0 + h, 1.0) / h, oracle::kappa(1.0), 1e-4);
}

TEST(BondCurrent, AnalyticSlopes) {
  for (double a : {0.4, 1.0, 2.5})
    for (double b : {0.3, 1.0, 3.0}) {
      const auto s = bond_current_slopes(a, b);
      const double h = 1e-6;
      EXPECT_NEAR(s.d_a, (oracle::current(a + h, b) - oracle::current(a - h, b)) / (2 * h), 1e-8);
      EXPECT_NEAR(s.d_b, (oracle::current(a, b + h) - oracle::current(a, b - h)) / (2 * h), 1e-8);
    }
}

TEST(SolveProfile, UniformReservoirs) {
  const auto p = solve_profile(10, 1.3, 1.3, 1e-12);
  EXPECT_TRUE(p.converged);
  EXPECT_EQ(p.iterations, 1);
  for (double T : p.temperatures)
    EXPECT_NEAR(T, 1.3, 1e-14);
  for (double c : p.bond_currents)
    EXPECT_LT(std::abs(c), 1e-14);
}

TEST(SolveProfile, RejectsBadInput) {
  EXPECT_THROW(solve_profile(1, 2.0, 1.0, 1e-10), std::invalid_argument);
  EXPECT_THROW(solve_profile(8, -2.0, 1.0, 1e-10), std::invalid_argument);
  EXPECT_THROW(solve_profile(8, 2.0, 1.0, 0.0), std::invalid_argument);
}

TEST(SolveProfile, ReportsNonConvergence) {
  ProfileSolverOptions opt;
  opt.max_iterations = 1;
  try {
    solve_profile(32, 5.0, 0.2, 1e-14, opt);
    FAIL() << "expected ProfileNotConverged";
  } catch (const ProfileNotConverged &e) {
    EXPECT_EQ(e.best().temperatures.size(), 32u);
    EXPECT_GT(e.best().residual, 1e-14);
  }
}

TEST(SolveProfile, ContinuumMidpoint) {
  const auto p = solve_profile(64, 2.0, 1.0, 1e-10);
  ASSERT_TRUE(p.converged);
  EXPECT_LT(p.residual, 1e-10);
  EXPECT_NEAR(oracle::continuum(0.5, 2.0, 1.0), 1.541678, 1e-6);
  EXPECT_NEAR(p.temperature_at(0.5), 1.5418, 0.01);
  for (std::size_t a = 0; a < p.bond_currents.size(); ++a)
    for (std::size_t b = a + 1; b < p.bond_currents.size(); ++b)
      EXPECT_NEAR(p.bond_currents[a], p.bond_currents[b], 1e-10);
  for (std::size_t i = 1; i < p.temperatures.size(); ++i)
    EXPECT_LE(p.temperatures[i], p.temperatures[i - 1]);
  EXPECT_GT(p.temperatures.front(), 1.0);
  EXPECT_LT(p.temperatures.back(), 2.0);
}

TEST(SolveProfile, AgreesWithGaussSeidelOracle) {
  for (std::size_t N : {2u, 5u, 12u}) {
    const auto p = solve_profile(N, 3.0, 0.5, 1e-13);
    const auto ref = oracle::gauss_seidel_profile(N, 3.0, 0.5);
    for (std::size_t i = 0; i < N; ++i)
      EXPECT_NEAR(p.temperatures[i], ref[i], 1e-9) << "N=" << N << " i=" << i;
  }
}

TEST(SolveProfile, ConvergesToContinuumAtFirstOrder) {
  auto error = [](std::size_t N) {
    const auto p = solve_profile(N, 2.0, 1.0, 1e-13);
    double e = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      e = std::max(e, std::abs(p.temperatures[i] -
                               oracle::continuum(cell_position(i, N), 2.0, 1.0)));
    return e;
  };
  for (std::size_t N : {16u, 32u, 64u}) {
    const double ratio = error(N) / error(2 * N);
    EXPECT_GE(ratio, 1.5) << "N=" << N;
    EXPECT_LE(ratio, 2.5) << "N=" << N;
  }
}

TEST(SolveProfile, TemperatureInterpolation) {
  const auto p = solve_profile(4, 2.0, 1.0, 1e-12);
  EXPECT_EQ(p.temperature_at(0.0), 2.0);
  EXPECT_EQ(p.temperature_at(1.0), 1.0);
  EXPECT_DOUBLE_EQ(p.temperature_at(cell_position(2, 4)), p.temperatures[2]);
  EXPECT_DOUBLE_EQ(p.temperature_at(0.5),
                   0.5 * (p.temperatures[1] + p.temperatures[2]));
}

TEST(SimulateChain, Equilibrium) {
  ChainMcOptions opt;
  opt.rounds = 40;
  opt.t_round = 2000.0;
  opt.master_seed = 3;
  opt.workers = 8;
  const auto mc = simulate_chain(6, 1.0, 1.0, opt);
  for (std::size_t i = 0; i < 6; ++i)
    EXPECT_LT(std::abs(mc.profile.temperatures[i] - 1.0), 3.0 * mc.temperature_se[i]);
}

TEST(SimulateChain, MatchesNewtonProfile) {
  ChainMcOptions opt;
  opt.rounds = 100;
  opt.t_round = 1e4;
  opt.master_seed = 11;
  opt.workers = 8;
  const std::size_t N = 8;
  const auto newton = solve_profile(N, 2.0, 1.0, 1e-12);
  const auto mc = simulate_chain(N, 2.0, 1.0, opt);
  EXPECT_EQ(mc.averaged_rounds, 50u);
  for (std::size_t i = 0; i < N; ++i) {
    EXPECT_LT(std::abs(mc.profile.temperatures[i] - newton.temperatures[i]),
              3.0 * mc.temperature_se[i])
        << "cell " << i;
  }
  for (std::size_t b = 0; b <= N; ++b)
    EXPECT_LT(std::abs(mc.measured_currents[b] - mc.profile.bond_currents[b]),
              3.0 * mc.current_se[b])
        << "bond " << b;
}

TEST(SimulateChain, WorkerIndependent) {
  ChainMcOptions opt;
  opt.rounds = 6;
  opt.t_round = 500.0;
  opt.workers = 1;
  const auto a = simulate_chain(5, 2.0, 1.0, opt);
  opt.workers = 7;
  const auto b = simulate_chain(5, 2.0, 1.0, opt);
  EXPECT_EQ(a.profile.temperatures, b.profile.temperatures);
  EXPECT_EQ(a.measured_currents, b.measured_currents);
}

TEST(SimulateChain, RejectsBadOptions) {
  ChainMcOptions opt;
  opt.damping = 0.0;
  EXPECT_THROW(simulate_chain(4, 2.0, 1.0, opt), std::invalid_argument);
  opt.damping = 1.5;
  EXPECT_THROW(simulate_chain(4, 2.0, 1.0, opt), std::invalid_argument);
  opt.damping = 0.5;
  opt.rounds = 0;
  EXPECT_THROW(simulate_chain(4, 2.0, 1.0, opt), std::invalid_argument);
}

TEST(SimulateChain, InstabilitySurfacesAsNumericalFailure) {
  // Very short rounds with a steep gradient: the noisy Newton update throws
  // temperatures out of range instead of producing garbage.
  ChainMcOptions opt;
  opt.rounds = 200;
  opt.t_round = 0.5;
  opt.damping = 1.0;
  opt.master_seed = 2;
  EXPECT_THROW(simulate_chain(32, 50.0, 0.01, opt), NumericalFailure);
}
