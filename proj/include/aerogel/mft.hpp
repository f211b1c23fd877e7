#pragma once

// Discretised macroscopic fluctuation functional on a staggered space-time
// grid.
//
// Layout: N_x cells of width dx = 1/N_x hold the energy density eps at N_s+1
// time levels; N_x+1 interfaces hold the current j at N_s time steps.
// Interface i sits between cell i-1 and cell i; interfaces 0 and N_x touch
// the left and right reservoirs, whose temperatures are fixed. The discrete
// conservation law
//
//   (eps[l+1][k] - eps[l][k]) / ds + (j[l][k+1] - j[l][k]) / dx = 0
//
// is exact for fields built by make_conservative.
//
// Action: sum over steps l and interfaces i of ds * dx * phi(j, tau, T) with
//   tau = eps_left - eps_right  (left-minus-right difference across the
//                                interface, NOT the gradient d eps/dx),
//   T   = (eps_left + eps_right) / 2,
// evaluated on level l. With this sign a stationary profile carrying its own
// bond current sits inside the plateau and costs nothing.

#include "aerogel/errors.hpp"
#include "aerogel/rate_function.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace aerogel {

struct Reservoirs {
  double T_left = 1.0;
  double T_right = 1.0;
};

//! Row-major grid of doubles.
class Grid2 {
public:
  Grid2() = default;
  Grid2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  std::vector<double> &data() noexcept { return data_; }
  const std::vector<double> &data() const noexcept { return data_; }

  friend bool operator==(const Grid2 &, const Grid2 &) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class SpaceTimeField {
public:
  //! eps: (N_s+1) x N_x, j: N_s x (N_x+1). All eps values must be positive.
  SpaceTimeField(Grid2 eps, Grid2 j, double ds, Reservoirs res)
      : eps_(std::move(eps)), j_(std::move(j)), ds_(ds), res_(res) {
    if (eps_.cols() < 1 || eps_.rows() < 2)
      throw std::invalid_argument("SpaceTimeField: need N_x >= 1 and N_s >= 1");
    if (j_.rows() + 1 != eps_.rows() || j_.cols() != eps_.cols() + 1)
      throw std::invalid_argument(
          "SpaceTimeField: eps must be (N_s+1) x N_x and j N_s x (N_x+1)");
    if (!(ds > 0.0) || !std::isfinite(ds))
      throw std::invalid_argument("SpaceTimeField: ds must be positive");
    detail::require_temperature(res.T_left, "SpaceTimeField(T_left)");
    detail::require_temperature(res.T_right, "SpaceTimeField(T_right)");
    for (double e : eps_.data())
      if (!(e > 0.0) || !std::isfinite(e))
        throw std::invalid_argument(
            "SpaceTimeField: energy density must be positive and finite");
    for (double v : j_.data())
      if (!std::isfinite(v))
        throw std::invalid_argument("SpaceTimeField: current must be finite");
  }

  std::size_t N_x() const noexcept { return eps_.cols(); }
  std::size_t N_s() const noexcept { return j_.rows(); }
  double dx() const noexcept { return 1.0 / static_cast<double>(N_x()); }
  double ds() const noexcept { return ds_; }
  const Reservoirs &reservoirs() const noexcept { return res_; }
  const Grid2 &eps() const noexcept { return eps_; }
  const Grid2 &j() const noexcept { return j_; }

  //! Energy density left/right of interface i at level l.
  double eps_left_of(std::size_t l, std::size_t i) const {
    return i == 0 ? res_.T_left : eps_(l, i - 1);
  }
  double eps_right_of(std::size_t l, std::size_t i) const {
    return i == N_x() ? res_.T_right : eps_(l, i);
  }

  friend bool operator==(const SpaceTimeField &, const SpaceTimeField &) = default;

private:
  Grid2 eps_;
  Grid2 j_;
  double ds_;
  Reservoirs res_;
};

//! Max over cells and steps of the discrete conservation defect.
inline double check_conservation(const SpaceTimeField &f) {
  const double dx = f.dx(), ds = f.ds();
  double worst = 0.0;
  for (std::size_t l = 0; l < f.N_s(); ++l)
    for (std::size_t k = 0; k < f.N_x(); ++k) {
      const double r = (f.eps()(l + 1, k) - f.eps()(l, k)) / ds +
                       (f.j()(l, k + 1) - f.j()(l, k)) / dx;
      worst = std::max(worst, std::abs(r));
    }
  return worst;
}

namespace detail {
//! Forward-Euler reconstruction of eps levels; may produce non-positive
//! values, which the caller must check.
inline Grid2 integrate_eps(const Grid2 &j, const std::vector<double> &eps0,
                           double ds) {
  const std::size_t Ns = j.rows(), Nx = eps0.size();
  const double ratio = ds * static_cast<double>(Nx); // ds / dx
  Grid2 eps(Ns + 1, Nx);
  for (std::size_t k = 0; k < Nx; ++k)
    eps(0, k) = eps0[k];
  for (std::size_t l = 0; l < Ns; ++l)
    for (std::size_t k = 0; k < Nx; ++k)
      eps(l + 1, k) = eps(l, k) - ratio * (j(l, k + 1) - j(l, k));
  return eps;
}

inline bool all_positive(const Grid2 &g) {
  return std::all_of(g.data().begin(), g.data().end(),
                     [](double v) { return v > 0.0 && std::isfinite(v); });
}
} // namespace detail

//! Field whose eps levels follow from j and the initial profile through the
//! conservation law.
inline SpaceTimeField make_conservative(const Grid2 &j,
                                        const std::vector<double> &eps_initial,
                                        double ds, Reservoirs res) {
  if (j.cols() != eps_initial.size() + 1)
    throw std::invalid_argument(
        "make_conservative: j needs N_x + 1 columns for N_x cells");
  auto eps = detail::integrate_eps(j, eps_initial, ds);
  if (!detail::all_positive(eps))
    throw std::invalid_argument(
        "make_conservative: current drives the energy density non-positive");
  return SpaceTimeField(std::move(eps), j, ds, res);
}

inline constexpr double kConservationTolerance = 1e-9;

struct ActionReport {
  double value = 0.0; // +inf when the field is not conservative
  double conservation_residual = 0.0;
  double plateau_active_fraction = 0.0;
  bool conservative = true;
  int iterations = 0; // filled by the minimiser
};

//! Riemann sum of ds * dx * phi over steps and interfaces.
inline ActionReport action(const SpaceTimeField &f,
                           double tolerance = kConservationTolerance) {
  ActionReport r;
  r.conservation_residual = check_conservation(f);
  std::size_t plateau = 0, total = 0;
  double sum = 0.0;
  for (std::size_t l = 0; l < f.N_s(); ++l)
    for (std::size_t i = 0; i <= f.N_x(); ++i) {
      const double a = f.eps_left_of(l, i), b = f.eps_right_of(l, i);
      const auto p = phi(f.j()(l, i), a - b, 0.5 * (a + b));
      sum += p.value;
      plateau += p.branch == Branch::plateau ? 1 : 0;
      ++total;
    }
  r.plateau_active_fraction =
      static_cast<double>(plateau) / static_cast<double>(total);
  if (!(r.conservation_residual < tolerance)) {
    r.conservative = false;
    r.value = std::numeric_limits<double>::infinity();
    return r;
  }
  r.value = sum * f.ds() * f.dx();
  return r;
}

//! Action as a function of the currents alone (eps follows from eps0), and a
//! subgradient with respect to every j(l, i). On plateau points the zero
//! vector is used for phi.
struct ActionGradient {
  double value = 0.0;
  Grid2 gradient;
};

inline ActionGradient action_subgradient(const Grid2 &j,
                                         const std::vector<double> &eps0,
                                         double ds, Reservoirs res) {
  const std::size_t Ns = j.rows(), Nx = eps0.size();
  const double dx = 1.0 / static_cast<double>(Nx);
  const double w = ds * dx;
  const Grid2 eps = detail::integrate_eps(j, eps0, ds);
  if (!detail::all_positive(eps))
    throw std::invalid_argument("action_subgradient: non-positive energy");

  ActionGradient out;
  out.gradient = Grid2(Ns, Nx + 1);
  // E(l, k) = d action / d eps(l, k)
  Grid2 E(Ns, Nx);
  double sum = 0.0;
  for (std::size_t l = 0; l < Ns; ++l)
    for (std::size_t i = 0; i <= Nx; ++i) {
      const double a = i == 0 ? res.T_left : eps(l, i - 1);
      const double b = i == Nx ? res.T_right : eps(l, i);
      const double jv = j(l, i);
      sum += phi_value(jv, a - b, 0.5 * (a + b));
      const auto g = phi_gradient(jv, a - b, 0.5 * (a + b));
      out.gradient(l, i) = w * g.d_j;
      if (i > 0) // eps(l, i-1) is the left value
        E(l, i - 1) += w * (g.d_tau + 0.5 * g.d_T);
      if (i < Nx) // eps(l, i) is the right value
        E(l, i) += w * (-g.d_tau + 0.5 * g.d_T);
    }
  out.value = sum * w;

  // j(m, i) moves eps(l, i-1) by -ds/dx and eps(l, i) by +ds/dx for l > m.
  const double ratio = ds / dx;
  std::vector<double> H(Nx, 0.0); // sum over l > m of E(l, .)
  for (std::size_t m = Ns; m-- > 0;) {
    for (std::size_t i = 0; i <= Nx; ++i) {
      const double right = i < Nx ? H[i] : 0.0;
      const double left = i > 0 ? H[i - 1] : 0.0;
      out.gradient(m, i) += ratio * (right - left);
    }
    for (std::size_t k = 0; k < Nx; ++k)
      H[k] += E(m, k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Minimisation over current fields

enum class StepRule { diminishing, polyak };

enum class MinimizeStatus { converged, stalled, max_iterations };

constexpr std::string_view to_string(MinimizeStatus s) noexcept {
  switch (s) {
  case MinimizeStatus::converged:
    return "converged";
  case MinimizeStatus::stalled:
    return "stalled";
  case MinimizeStatus::max_iterations:
    return "max-iterations";
  }
  return "?";
}

struct MinimizeOptions {
  StepRule rule = StepRule::polyak;
  double step_scale = 1.0; // a in a/k for the diminishing rule
  double target = 0.0;     // known optimal value for the Polyak rule
  int max_iterations = 5000;
  int stall_window = 50;
  int max_halvings = 40;
  double value_tolerance = 1e-12;
  //! Optional start; defaults to the zero current projected onto the
  //! constraints.
  std::optional<Grid2> initial_current;
};

struct MinimizeProblem {
  std::vector<double> eps_initial;
  std::optional<std::vector<double>> eps_final;
  Reservoirs reservoirs;
  std::size_t N_s = 16;
  double ds = 0.01;
  //! Space-time average of j over all interfaces and steps.
  std::optional<double> mean_current;
};

struct MinimizeResult {
  SpaceTimeField field;
  ActionReport report;
  MinimizeStatus status = MinimizeStatus::max_iterations;
  //! value - lower bound, with lower bound 0 (the action is non-negative).
  double gap = 0.0;
  std::vector<double> accepted_values;
};

namespace detail {
//! Euclidean projection onto the affine constraints, which only involve the
//! per-interface time sums q_i = sum_l j(l, i).
class CurrentProjector {
public:
  explicit CurrentProjector(const MinimizeProblem &p) : p_(p) {
    const std::size_t Nx = p.eps_initial.size();
    if (p.eps_final) {
      if (p.eps_final->size() != Nx)
        throw std::invalid_argument("minimize_action: eps_final size mismatch");
      // q_{k+1} - q_k = (eps0_k - epsf_k) dx / ds
      particular_.assign(Nx + 1, 0.0);
      const double factor = 1.0 / (static_cast<double>(Nx) * p.ds);
      for (std::size_t k = 0; k < Nx; ++k)
        particular_[k + 1] =
            particular_[k] + (p.eps_initial[k] - (*p.eps_final)[k]) * factor;
    }
  }

  bool constrained() const noexcept {
    return p_.eps_final.has_value() || p_.mean_current.has_value();
  }

  //! Target time sums for a field with time sums q.
  std::vector<double> project_sums(const std::vector<double> &q) const {
    const std::size_t n = q.size();
    const double nd = static_cast<double>(n);
    std::vector<double> out(q);
    const double total_target =
        p_.mean_current ? *p_.mean_current * nd * static_cast<double>(p_.N_s)
                        : 0.0;
    if (p_.eps_final) {
      double shift = 0.0;
      if (p_.mean_current) {
        double sp = 0.0;
        for (double v : particular_)
          sp += v;
        shift = (total_target - sp) / nd;
      } else {
        for (std::size_t i = 0; i < n; ++i)
          shift += q[i] - particular_[i];
        shift /= nd;
      }
      for (std::size_t i = 0; i < n; ++i)
        out[i] = particular_[i] + shift;
    } else if (p_.mean_current) {
      double sq = 0.0;
      for (double v : q)
        sq += v;
      const double shift = (total_target - sq) / nd;
      for (auto &v : out)
        v += shift;
    }
    return out;
  }

  void project(Grid2 &j) const {
    if (!constrained())
      return;
    const std::size_t Ns = j.rows(), n = j.cols();
    std::vector<double> q(n, 0.0);
    for (std::size_t l = 0; l < Ns; ++l)
      for (std::size_t i = 0; i < n; ++i)
        q[i] += j(l, i);
    const auto target = project_sums(q);
    for (std::size_t l = 0; l < Ns; ++l)
      for (std::size_t i = 0; i < n; ++i)
        j(l, i) += (target[i] - q[i]) / static_cast<double>(Ns);
  }

  //! Projection of a direction onto the constraint tangent space.
  void project_direction(Grid2 &g) const {
    if (!constrained())
      return;
    const std::size_t Ns = g.rows(), n = g.cols();
    std::vector<double> q(n, 0.0);
    for (std::size_t l = 0; l < Ns; ++l)
      for (std::size_t i = 0; i < n; ++i)
        q[i] += g(l, i);
    std::vector<double> remove(n, 0.0);
    if (p_.eps_final) {
      remove = q; // all of q except a common shift when the total is free
      if (!p_.mean_current) {
        double mean = 0.0;
        for (double v : q)
          mean += v;
        mean /= static_cast<double>(n);
        for (auto &v : remove)
          v -= mean;
      }
    } else {
      double mean = 0.0;
      for (double v : q)
        mean += v;
      mean /= static_cast<double>(n);
      remove.assign(n, mean);
    }
    for (std::size_t l = 0; l < Ns; ++l)
      for (std::size_t i = 0; i < n; ++i)
        g(l, i) -= remove[i] / static_cast<double>(Ns);
  }

private:
  const MinimizeProblem &p_;
  std::vector<double> particular_;
};

inline double squared_norm(const Grid2 &g) {
  double s = 0.0;
  for (double v : g.data())
    s += v * v;
  return s;
}
} // namespace detail

//! Projected subgradient descent over interface currents. Only steps that do
//! not increase the action (and keep eps positive) are accepted.
inline MinimizeResult minimize_action(const MinimizeProblem &problem,
                                      const MinimizeOptions &opt = {}) {
  const std::size_t Nx = problem.eps_initial.size();
  if (Nx < 1 || problem.N_s < 1)
    throw std::invalid_argument("minimize_action: empty grid");
  if (!(problem.ds > 0.0))
    throw std::invalid_argument("minimize_action: ds must be positive");
  for (double e : problem.eps_initial)
    if (!(e > 0.0))
      throw std::invalid_argument("minimize_action: eps_initial must be > 0");
  if (problem.eps_final)
    for (double e : *problem.eps_final)
      if (!(e > 0.0))
        throw std::invalid_argument("minimize_action: eps_final must be > 0");

  const detail::CurrentProjector projector(problem);
  const Reservoirs &res = problem.reservoirs;

  Grid2 j;
  if (opt.initial_current) {
    j = *opt.initial_current;
    if (j.rows() != problem.N_s || j.cols() != Nx + 1)
      throw std::invalid_argument("minimize_action: start has wrong shape");
  } else {
    // Zero current projected onto the constraints: time-uniform, so eps
    // moves linearly between the endpoints when eps_final is given.
    j = Grid2(problem.N_s, Nx + 1, 0.0);
  }
  projector.project(j);
  if (!detail::all_positive(
          detail::integrate_eps(j, problem.eps_initial, problem.ds)))
    throw std::invalid_argument(
        "minimize_action: constraints admit no positive starting field");

  MinimizeResult out{make_conservative(j, problem.eps_initial, problem.ds, res),
                     {}, MinimizeStatus::max_iterations, 0.0, {}};
  auto current = action_subgradient(j, problem.eps_initial, problem.ds, res);
  out.accepted_values.push_back(current.value);

  int since_improvement = 0;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (current.value <= opt.value_tolerance) {
      out.status = MinimizeStatus::converged;
      break;
    }
    Grid2 g = current.gradient;
    projector.project_direction(g);
    const double gg = detail::squared_norm(g);
    if (!(gg > 0.0)) {
      out.status = MinimizeStatus::stalled;
      break;
    }
    double step = opt.rule == StepRule::polyak
                      ? (current.value - opt.target) / gg
                      : opt.step_scale / (static_cast<double>(it + 1) *
                                          std::sqrt(gg));
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings && !accepted; ++h, step *= 0.5) {
      Grid2 trial = j;
      for (std::size_t n = 0; n < trial.data().size(); ++n)
        trial.data()[n] -= step * g.data()[n];
      projector.project(trial);
      if (!detail::all_positive(
              detail::integrate_eps(trial, problem.eps_initial, problem.ds)))
        continue;
      auto next = action_subgradient(trial, problem.eps_initial, problem.ds, res);
      if (next.value <= current.value) {
        since_improvement =
            next.value < current.value ? 0 : since_improvement + 1;
        j = std::move(trial);
        current = std::move(next);
        out.accepted_values.push_back(current.value);
        accepted = true;
      }
    }
    if (!accepted)
      ++since_improvement;
    if (since_improvement >= opt.stall_window) {
      out.status = MinimizeStatus::stalled;
      break;
    }
  }
  if (current.value <= opt.value_tolerance)
    out.status = MinimizeStatus::converged;

  out.field = make_conservative(j, problem.eps_initial, problem.ds, res);
  out.report = action(out.field);
  out.report.iterations = it;
  out.gap = out.report.value;
  return out;
}

} // namespace aerogel
