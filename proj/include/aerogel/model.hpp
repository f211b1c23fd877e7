#pragma once

// Closed-form quantities of the confined-tracer model: a particle bouncing
// ballistically in a unit cell between two thermal walls that resample its
// speed from phi_beta(v) = beta v exp(-beta v^2 / 2) on every contact.
//
// Temperatures are dimensionless (k_B = 1) and the cell length is 1, so a
// flight launched with speed v lasts exactly 1/v.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aerogel {

enum class Side { left, right };

constexpr Side opposite(Side s) noexcept {
  return s == Side::left ? Side::right : Side::left;
}

namespace detail {
inline void require_temperature(double T, const char *what) {
  if (!(T > 0.0) || !std::isfinite(T))
    throw std::invalid_argument(std::string(what) +
                                ": temperature must be positive and finite");
}
} // namespace detail

//! Boundary temperatures of one cell, with the derived difference/mean.
class WallPair {
public:
  WallPair(double T_left, double T_right) : T_left_(T_left), T_right_(T_right) {
    detail::require_temperature(T_left, "WallPair(T_left)");
    detail::require_temperature(T_right, "WallPair(T_right)");
  }

  double T_left() const noexcept { return T_left_; }
  double T_right() const noexcept { return T_right_; }
  double temperature(Side s) const noexcept {
    return s == Side::left ? T_left_ : T_right_;
  }
  double beta(Side s) const noexcept { return 1.0 / temperature(s); }

  //! tau = T_left - T_right
  double tau() const noexcept { return T_left_ - T_right_; }
  //! T = (T_left + T_right) / 2
  double T_mean() const noexcept { return 0.5 * (T_left_ + T_right_); }

  WallPair swapped() const { return WallPair(T_right_, T_left_); }

  friend bool operator==(const WallPair &, const WallPair &) = default;

private:
  double T_left_;
  double T_right_;
};

//! Strictly positive, finite speed.
class Speed {
public:
  explicit Speed(double v) : v_(v) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("Speed must be positive and finite");
  }
  double value() const noexcept { return v_; }

private:
  double v_;
};

//! Flight time across the unit cell; always 1/speed.
class WaitingTime {
public:
  explicit WaitingTime(Speed v) : t_(1.0 / v.value()) {}
  double value() const noexcept { return t_; }

private:
  double t_;
};

//! Wall resampling density phi_beta(v) = v/T exp(-v^2/(2T)), v >= 0.
inline double wall_speed_pdf(double v, double T) {
  detail::require_temperature(T, "wall_speed_pdf");
  if (v < 0.0)
    throw std::invalid_argument("wall_speed_pdf: v must be non-negative");
  return v / T * std::exp(-v * v / (2.0 * T));
}

//! CDF of phi_beta: 1 - exp(-v^2/(2T)).
inline double wall_speed_cdf(double v, double T) {
  detail::require_temperature(T, "wall_speed_cdf");
  if (v <= 0.0)
    return 0.0;
  return -std::expm1(-v * v / (2.0 * T));
}

//! Inverse-CDF sample of phi_beta from one uniform variate r in (0,1).
inline double sample_wall_speed(double T, double r) {
  detail::require_temperature(T, "sample_wall_speed");
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument("sample_wall_speed: r must lie in (0,1)");
  return std::sqrt(-2.0 * T * std::log(r));
}

//! Unchecked sampler for the event loop; the caller guarantees T > 0 and
//! r in (0,1).
inline double sample_wall_speed_unchecked(double T, double r) noexcept {
  return std::sqrt(-2.0 * T * std::log(r));
}

//! Density of a flight time u = 1/v: psi_beta(u) = beta/u^3 exp(-beta/(2u^2)).
inline double waiting_time_pdf(double u, double T) {
  detail::require_temperature(T, "waiting_time_pdf");
  if (!(u > 0.0))
    throw std::invalid_argument("waiting_time_pdf: u must be positive");
  const double beta = 1.0 / T;
  return beta / (u * u * u) * std::exp(-beta / (2.0 * u * u));
}

//! P(t_1 > t) = 1 - exp(-1/(2 T t^2)). Decays like 1/(2 T t^2).
inline double waiting_time_tail(double t, double T) {
  detail::require_temperature(T, "waiting_time_tail");
  if (!(t > 0.0))
    throw std::invalid_argument("waiting_time_tail: t must be positive");
  return -std::expm1(-1.0 / (2.0 * T * t * t));
}

//! Mean flight time launched from a wall at temperature T: E[1/v] =
//! sqrt(pi/(2T)).
inline double mean_flight_time(double T) {
  detail::require_temperature(T, "mean_flight_time");
  return std::sqrt(std::numbers::pi / (2.0 * T));
}

//! Long-run wall collisions per unit time, both walls counted.
inline double collision_frequency(const WallPair &w) {
  return 2.0 / (mean_flight_time(w.T_left()) + mean_flight_time(w.T_right()));
}

//! Long-run energy current J[0,t]/t from the left wall to the right wall.
inline double stationary_current(const WallPair &w) {
  return w.tau() /
         (mean_flight_time(w.T_left()) + mean_flight_time(w.T_right()));
}

//! kappa(T) = sqrt(T / (2 pi)); slope of the current at vanishing tau.
inline double kappa(double T) {
  detail::require_temperature(T, "kappa");
  return std::sqrt(T / (2.0 * std::numbers::pi));
}

} // namespace aerogel
