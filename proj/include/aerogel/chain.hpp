#pragma once

// N-cell chain in the hot-wall approximation: every bond between neighbouring
// cells (and between the end cells and their reservoirs) carries the exact
// two-wall stationary current of a confined tracer,
//
//   c(T_a, T_b) = (T_a - T_b) / (sqrt(pi/2T_a) + sqrt(pi/2T_b)),
//
// whose small-gradient limit is kappa(T) (T_a - T_b) with kappa ~ sqrt(T).
// The steady profile makes all N+1 bond currents equal; in the continuum
// limit T^{3/2} is linear in x.

#include "aerogel/errors.hpp"
#include "aerogel/model.hpp"
#include "aerogel/parallel.hpp"
#include "aerogel/rng.hpp"
#include "aerogel/stats.hpp"
#include "aerogel/tracer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace aerogel {

inline double bond_current(double T_a, double T_b) {
  return stationary_current(WallPair(T_a, T_b));
}

//! Partial derivatives of bond_current with respect to T_a and T_b.
struct BondSlopes {
  double d_a = 0.0;
  double d_b = 0.0;
};

inline BondSlopes bond_current_slopes(double T_a, double T_b) {
  const double ma = mean_flight_time(T_a);
  const double mb = mean_flight_time(T_b);
  const double den = ma + mb;
  const double diff = T_a - T_b;
  // d m(T)/dT = -m / (2T)
  return {(den + diff * ma / (2.0 * T_a)) / (den * den),
          (-den + diff * mb / (2.0 * T_b)) / (den * den)};
}

//! Continuum steady profile: T(x)^{3/2} linear between the reservoirs.
inline double continuum_profile(double x, double T_left, double T_right) {
  return std::pow(std::pow(T_left, 1.5) * (1.0 - x) + std::pow(T_right, 1.5) * x,
                  2.0 / 3.0);
}

//! Abscissa of cell i (0-based): (i + 1/2) / N.
inline double cell_position(std::size_t i, std::size_t N) {
  return (static_cast<double>(i) + 0.5) / static_cast<double>(N);
}

struct ChainProfile {
  std::size_t N_cells = 0;
  double T_left = 0.0;
  double T_right = 0.0;
  std::vector<double> temperatures; // N_cells
  std::vector<double> bond_currents; // N_cells + 1; bond b sits left of cell b
  double residual = 0.0;             // max - min bond current
  int iterations = 0;
  bool converged = false;

  double temperature_at(double x) const;
};

//! Linear interpolation of the cell temperatures at x, using the reservoirs
//! as the values at x = 0 and x = 1.
inline double ChainProfile::temperature_at(double x) const {
  std::vector<double> xs{0.0}, Ts{T_left};
  for (std::size_t i = 0; i < N_cells; ++i) {
    xs.push_back(cell_position(i, N_cells));
    Ts.push_back(temperatures[i]);
  }
  xs.push_back(1.0);
  Ts.push_back(T_right);
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.begin())
    return Ts.front();
  if (it == xs.end())
    return Ts.back();
  const auto hi = static_cast<std::size_t>(it - xs.begin());
  const double f = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
  return Ts[hi - 1] + f * (Ts[hi] - Ts[hi - 1]);
}

namespace detail {
inline std::vector<double> bond_currents_of(const std::vector<double> &T,
                                            double T_left, double T_right) {
  std::vector<double> c(T.size() + 1);
  for (std::size_t b = 0; b <= T.size(); ++b) {
    const double a = b == 0 ? T_left : T[b - 1];
    const double z = b == T.size() ? T_right : T[b];
    c[b] = bond_current(a, z);
  }
  return c;
}

inline double spread(const std::vector<double> &c) {
  const auto [mn, mx] = std::minmax_element(c.begin(), c.end());
  return *mx - *mn;
}

//! Jacobian of F_i = c_{i-1} - c_i with respect to the cell temperatures.
inline Eigen::MatrixXd balance_jacobian(const std::vector<double> &T,
                                        double T_left, double T_right) {
  const auto n = static_cast<Eigen::Index>(T.size());
  Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t b = 0; b <= T.size(); ++b) {
    const double a = b == 0 ? T_left : T[b - 1];
    const double z = b == T.size() ? T_right : T[b];
    const auto s = bond_current_slopes(a, z);
    // Bond b enters F_b (as c_{i-1}, i = b) and F_{b-1} (as -c_i).
    const auto left_cell = static_cast<Eigen::Index>(b) - 1;
    const auto right_cell = static_cast<Eigen::Index>(b);
    if (right_cell < n) {
      if (left_cell >= 0)
        Jm(right_cell, left_cell) += s.d_a;
      Jm(right_cell, right_cell) += s.d_b;
    }
    if (left_cell >= 0) {
      Jm(left_cell, left_cell) -= s.d_a;
      if (right_cell < n)
        Jm(left_cell, right_cell) -= s.d_b;
    }
  }
  return Jm;
}

inline void require_chain(std::size_t N, double T_left, double T_right) {
  if (N < 2)
    throw std::invalid_argument("chain: need at least two cells");
  detail::require_temperature(T_left, "chain(T_left)");
  detail::require_temperature(T_right, "chain(T_right)");
}
} // namespace detail

//! Raised when the Newton iteration does not reach the tolerance; carries the
//! best iterate.
class ProfileNotConverged : public NumericalFailure {
public:
  ProfileNotConverged(const std::string &what, ChainProfile best)
      : NumericalFailure(what), best_(std::move(best)) {}
  const ChainProfile &best() const noexcept { return best_; }

private:
  ChainProfile best_;
};

struct ProfileSolverOptions {
  int max_iterations = 100;
  int max_halvings = 40;
};

//! Damped Newton on log-temperatures for equal currents on all N+1 bonds.
//! `iterations` counts residual evaluations, so an exact initial guess
//! reports 1.
inline ChainProfile solve_profile(std::size_t N, double T_left, double T_right,
                                  double tol,
                                  const ProfileSolverOptions &opt = {}) {
  detail::require_chain(N, T_left, T_right);
  if (!(tol > 0.0))
    throw std::invalid_argument("solve_profile: tol must be positive");

  std::vector<double> T(N);
  for (std::size_t i = 0; i < N; ++i)
    T[i] = continuum_profile(cell_position(i, N), T_left, T_right);

  auto residual_vector = [&](const std::vector<double> &temps) {
    const auto c = detail::bond_currents_of(temps, T_left, T_right);
    Eigen::VectorXd F(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i)
      F(static_cast<Eigen::Index>(i)) = c[i] - c[i + 1];
    return F;
  };

  ChainProfile p;
  p.N_cells = N;
  p.T_left = T_left;
  p.T_right = T_right;

  Eigen::VectorXd F = residual_vector(T);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    p.iterations = it;
    p.temperatures = T;
    p.bond_currents = detail::bond_currents_of(T, T_left, T_right);
    p.residual = detail::spread(p.bond_currents);
    if (p.residual < tol) {
      p.converged = true;
      return p;
    }
    // Newton step in u = log T: J_u = J_T diag(T).
    Eigen::MatrixXd Ju = detail::balance_jacobian(T, T_left, T_right);
    for (std::size_t i = 0; i < N; ++i)
      Ju.col(static_cast<Eigen::Index>(i)) *= T[i];
    const Eigen::VectorXd du = Ju.partialPivLu().solve(-F);

    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
      std::vector<double> trial(N);
      for (std::size_t i = 0; i < N; ++i)
        trial[i] = T[i] * std::exp(step * du(static_cast<Eigen::Index>(i)));
      const Eigen::VectorXd Ft = residual_vector(trial);
      if (Ft.lpNorm<Eigen::Infinity>() < F.lpNorm<Eigen::Infinity>()) {
        T = std::move(trial);
        F = Ft;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      break;
  }
  p.temperatures = T;
  p.bond_currents = detail::bond_currents_of(T, T_left, T_right);
  p.residual = detail::spread(p.bond_currents);
  std::ostringstream msg;
  msg << "solve_profile: no convergence after " << p.iterations
      << " iterations (residual " << p.residual << ", tol " << tol << ")";
  throw ProfileNotConverged(msg.str(), p);
}

// ---------------------------------------------------------------------------
// Stochastic fixed point

struct ChainMcOptions {
  std::size_t rounds = 200;
  double t_round = 1e4;
  double damping = 0.5;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  //! Leading rounds discarded before averaging.
  std::size_t burn_in = 0; // 0 selects rounds / 2
  std::size_t batches = 10;
};

struct ChainMcResult {
  ChainProfile profile;                  // round-averaged temperatures
  std::vector<double> temperature_se;    // batch-means standard errors
  std::vector<double> measured_currents; // round-averaged bond currents
  std::vector<double> current_se;
  std::size_t rounds_run = 0;
  std::size_t averaged_rounds = 0;
};

//! Each round runs one confined tracer per bond, between the current
//! temperature estimates of the bond's two ends, for t_round. The measured
//! energy imbalance of every cell drives a damped Newton-preconditioned
//! update of the temperatures. Averages over the rounds after burn-in give
//! the profile; batch means give the errors.
//!
//! Bond b of round r uses seed split(split(master_seed, r), b).
inline ChainMcResult simulate_chain(std::size_t N, double T_left,
                                    double T_right, const ChainMcOptions &opt) {
  detail::require_chain(N, T_left, T_right);
  if (opt.rounds < 1)
    throw std::invalid_argument("simulate_chain: rounds must be >= 1");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0))
    throw std::invalid_argument("simulate_chain: damping must lie in (0,1]");
  if (!(opt.t_round > 0.0))
    throw std::invalid_argument("simulate_chain: t_round must be positive");
  const std::size_t burn =
      opt.burn_in > 0 ? std::min(opt.burn_in, opt.rounds - 1) : opt.rounds / 2;
  const std::size_t kept = opt.rounds - burn;
  const std::size_t batches = std::max<std::size_t>(
      1, std::min(opt.batches, kept));

  std::vector<double> T(N);
  for (std::size_t i = 0; i < N; ++i)
    T[i] = continuum_profile(cell_position(i, N), T_left, T_right);

  std::vector<std::vector<double>> kept_T, kept_c;
  std::deque<double> amplitudes;
  const double floor = 0.1 * std::min(T_left, T_right);

  std::vector<double> c(N + 1);
  for (std::size_t r = 0; r < opt.rounds; ++r) {
    const std::uint64_t round_seed = split(opt.master_seed, r);
    parallel_for(N + 1, opt.workers, [&](std::size_t b) {
      const double a = b == 0 ? T_left : T[b - 1];
      const double z = b == N ? T_right : T[b];
      const auto run = run_tracer(WallPair(a, z), opt.t_round, split(round_seed, b));
      c[b] = run.stats.current / opt.t_round;
    });
    if (r >= burn) {
      kept_T.push_back(T);
      kept_c.push_back(c);
    }

    Eigen::VectorXd F(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i)
      F(static_cast<Eigen::Index>(i)) = c[i] - c[i + 1];
    const Eigen::VectorXd dT =
        detail::balance_jacobian(T, T_left, T_right).partialPivLu().solve(-F);

    double amp = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double step = opt.damping * dT(static_cast<Eigen::Index>(i));
      T[i] += step;
      amp = std::max(amp, std::abs(step));
      if (!(T[i] > 0.0) || !std::isfinite(T[i])) {
        std::ostringstream msg;
        msg << "simulate_chain: temperature of cell " << i
            << " left the positive range in round " << r;
        throw NumericalFailure(msg.str());
      }
    }
    amplitudes.push_back(amp);
    if (amplitudes.size() > 6)
      amplitudes.pop_front();
    if (amplitudes.size() == 6 && amp > floor) {
      bool growing = true;
      for (std::size_t k = 1; k < amplitudes.size(); ++k)
        growing = growing && amplitudes[k] > amplitudes[k - 1];
      if (growing) {
        std::ostringstream msg;
        msg << "simulate_chain: update amplitude grew for 5 rounds (last "
            << amp << " in round " << r << "); lower the damping";
        throw NumericalFailure(msg.str());
      }
    }
  }

  // Batch means over the kept rounds.
  auto batch_stats = [&](const std::vector<std::vector<double>> &rows,
                         std::size_t width, std::vector<double> &mean,
                         std::vector<double> &se) {
    mean.assign(width, 0.0);
    se.assign(width, 0.0);
    const std::size_t per = rows.size() / batches;
    for (std::size_t k = 0; k < width; ++k) {
      RunningStats all, by_batch;
      for (const auto &row : rows)
        all.add(row[k]);
      for (std::size_t bt = 0; bt < batches; ++bt) {
        double s = 0.0;
        for (std::size_t q = bt * per; q < (bt + 1) * per; ++q)
          s += rows[q][k];
        by_batch.add(s / static_cast<double>(per));
      }
      mean[k] = all.mean();
      se[k] = batches > 1 ? by_batch.se() : all.se();
    }
  };

  ChainMcResult res;
  res.rounds_run = opt.rounds;
  res.averaged_rounds = kept;
  batch_stats(kept_T, N, res.profile.temperatures, res.temperature_se);
  batch_stats(kept_c, N + 1, res.measured_currents, res.current_se);
  res.profile.N_cells = N;
  res.profile.T_left = T_left;
  res.profile.T_right = T_right;
  res.profile.bond_currents =
      detail::bond_currents_of(res.profile.temperatures, T_left, T_right);
  res.profile.residual = detail::spread(res.measured_currents);
  res.profile.iterations = static_cast<int>(opt.rounds);
  res.profile.converged = true;
  return res;
}

} // namespace aerogel
