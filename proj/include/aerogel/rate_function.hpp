#pragma once

// The scaled current rate function
//
//   phi(j, tau, T) = (j - k tau)^2 / (4 k T^2)        if j tau >  k tau^2
//                  = 0                                if j tau in [0, k tau^2]
//                  = -j tau / (2 T^2)                 if j tau in [-k tau^2, 0]
//                  = (j^2 + k^2 tau^2) / (4 k T^2)    if j tau < -k tau^2
//
// with k = kappa(T) = sqrt(T / 2 pi), and j^2 / (4 k T^2) when tau = 0.
// It vanishes on the whole segment between 0 and kappa*tau, has a kink at
// j = 0 and is C^1 at j = +-kappa*tau.
//
// Reversal: evaluating the branches gives phi(j) - phi(-j) = -j tau / (2 T^2),
// so a current along the thermal gradient is cheaper than its reverse. The
// opposite sign is sometimes quoted for this identity; gc_defect returns the
// value the formula above actually produces.
//
// Every branch depends on (tau, T) only through a = kappa tau and
// b = kappa T^2, which is how the normalised curves (a = b = 1) are drawn.

#include "aerogel/model.hpp"
#include "aerogel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace aerogel {

enum class Branch {
  quadratic_forward,
  plateau,
  linear,
  quadratic_backward,
  tau_zero
};

constexpr std::string_view to_string(Branch b) noexcept {
  switch (b) {
  case Branch::quadratic_forward:
    return "quadratic-forward";
  case Branch::plateau:
    return "plateau";
  case Branch::linear:
    return "linear";
  case Branch::quadratic_backward:
    return "quadratic-backward";
  case Branch::tau_zero:
    return "tau-zero";
  }
  return "?";
}

struct RateValue {
  double value = 0.0;
  Branch branch = Branch::tau_zero;
};

//! phi in the (a, b) = (kappa tau, kappa T^2) parametrisation. The sign of a
//! carries the sign of tau; b must be positive.
inline RateValue phi_scaled(double j, double a, double b) {
  if (!(b > 0.0))
    throw std::invalid_argument("phi_scaled: kappa*T^2 must be positive");
  if (a == 0.0)
    return {j * j / (4.0 * b), Branch::tau_zero};
  // j tau vs kappa tau^2, multiplied through by kappa > 0.
  const double ja = j * a;
  const double aa = a * a;
  if (ja > aa)
    return {(j - a) * (j - a) / (4.0 * b), Branch::quadratic_forward};
  if (ja >= 0.0)
    return {0.0, Branch::plateau};
  if (ja >= -aa)
    return {-ja / (2.0 * b), Branch::linear};
  return {(j * j + aa) / (4.0 * b), Branch::quadratic_backward};
}

struct RatePoint {
  double j = 0.0;
  double tau = 0.0;
  double T = 0.0;
  double value = 0.0;
  Branch branch = Branch::tau_zero;
};

inline RatePoint phi(double j, double tau, double T) {
  const double k = kappa(T);
  const auto r = phi_scaled(j, k * tau, k * T * T);
  return {j, tau, T, r.value, r.branch};
}

inline double phi_value(double j, double tau, double T) {
  return phi(j, tau, T).value;
}

//! Partial derivatives of phi on the branch that owns (j, tau, T). On the
//! closed plateau, including the kink at j = 0, the zero vector is returned:
//! 0 lies in the subdifferential there.
struct RateGradient {
  double d_j = 0.0;
  double d_tau = 0.0;
  double d_T = 0.0;
  Branch branch = Branch::tau_zero;
};

inline RateGradient phi_gradient(double j, double tau, double T) {
  const double k = kappa(T);
  const double T2 = T * T;
  const double T3 = T2 * T;
  RateGradient g;
  g.branch = phi(j, tau, T).branch;
  switch (g.branch) {
  case Branch::quadratic_forward: {
    const double e = j - k * tau;
    g.d_j = e / (2.0 * k * T2);
    g.d_tau = -e / (2.0 * T2);
    g.d_T = -e * tau / (4.0 * T3) - 5.0 * e * e / (8.0 * k * T3);
    break;
  }
  case Branch::plateau:
    break;
  case Branch::linear:
    g.d_j = -tau / (2.0 * T2);
    g.d_tau = -j / (2.0 * T2);
    g.d_T = j * tau / T3;
    break;
  case Branch::quadratic_backward:
  case Branch::tau_zero:
    g.d_j = j / (2.0 * k * T2);
    g.d_tau = k * tau / (2.0 * T2);
    g.d_T = -5.0 * j * j / (8.0 * k * T3) - 3.0 * k * tau * tau / (8.0 * T3);
    break;
  }
  return g;
}

//! phi(j) - phi(-j); identically -j tau / (2 T^2).
inline double gc_defect(double j, double tau, double T) {
  return phi_value(j, tau, T) - phi_value(-j, tau, T);
}

//! |phi(eps j, eps tau, T) - eps^2 phi(j, tau, T)|.
inline double homogeneity_check(double j, double tau, double T, double eps) {
  if (!(eps > 0.0))
    throw std::invalid_argument("homogeneity_check: eps must be positive");
  return std::abs(phi_value(eps * j, eps * tau, T) -
                  eps * eps * phi_value(j, tau, T));
}

// ---------------------------------------------------------------------------
// Convex conjugates on grids

struct ConjugateValue {
  double value = 0.0;
  std::size_t argmax = 0;
  //! The maximiser sits on a grid end: the true conjugate may be larger.
  bool at_boundary = false;
};

//! max_i (slope * x_i - f_i).
inline ConjugateValue legendre(std::span<const double> x,
                               std::span<const double> f, double slope) {
  if (x.size() != f.size() || x.empty())
    throw std::invalid_argument("legendre: grid and values must match");
  ConjugateValue best{-std::numeric_limits<double>::infinity(), 0, false};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = slope * x[i] - f[i];
    if (v > best.value) {
      best.value = v;
      best.argmax = i;
    }
  }
  best.at_boundary = best.argmax == 0 || best.argmax + 1 == x.size();
  return best;
}

//! Conjugate evaluated at every slope of a grid.
inline std::vector<ConjugateValue> legendre(std::span<const double> x,
                                            std::span<const double> f,
                                            std::span<const double> slopes) {
  std::vector<ConjugateValue> out;
  out.reserve(slopes.size());
  for (double s : slopes)
    out.push_back(legendre(x, f, s));
  return out;
}

// ---------------------------------------------------------------------------
// Empirical estimates

struct RateCurve {
  std::vector<double> j;
  std::vector<double> phi_exact;
  std::vector<Branch> branch;
  // Empirical columns; empty for exact-only curves.
  std::vector<double> phi_empirical;
  std::vector<double> se;
  std::vector<bool> censored;
  std::vector<std::int64_t> count;
  std::size_t samples = 0;
  double t = 0.0;
  double bin_width = 0.0;

  bool has_empirical() const noexcept { return !phi_empirical.empty(); }
};

//! Exact phi on a uniform grid of `points` values spanning [jmin, jmax].
inline RateCurve exact_rate_curve(double jmin, double jmax, std::size_t points,
                                  double a, double b) {
  if (points < 2 || !(jmax > jmin))
    throw std::invalid_argument("exact_rate_curve: need jmax > jmin and "
                                "at least two points");
  RateCurve c;
  for (std::size_t i = 0; i < points; ++i) {
    const double j = jmin + (jmax - jmin) * static_cast<double>(i) /
                                static_cast<double>(points - 1);
    const auto r = phi_scaled(j, a, b);
    c.j.push_back(j);
    c.phi_exact.push_back(r.value);
    c.branch.push_back(r.branch);
  }
  return c;
}

//! Histogram estimate -(1/t) log(count / (M h)) of the rate of J/t.
//! `currents` are time-averaged currents J/t; `tau`, `T` select the exact
//! curve printed alongside. A non-positive bin_width selects the
//! Freedman-Diaconis width.
inline RateCurve empirical_rate(std::span<const double> currents, double t,
                                double tau, double T, double bin_width = 0.0) {
  if (currents.empty())
    throw std::invalid_argument("empirical_rate: empty ensemble");
  if (!(t > 0.0))
    throw std::invalid_argument("empirical_rate: t must be positive");
  std::vector<double> sample(currents.begin(), currents.end());
  double h = bin_width;
  if (!(h > 0.0))
    h = freedman_diaconis_width(sample);
  const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
  if (!(h > 0.0))
    h = std::max(1e-12, (*hi_it - *lo_it) / 10.0); // degenerate sample
  // Bins aligned on integer multiples of h.
  const auto first = static_cast<std::int64_t>(std::floor(*lo_it / h));
  const auto last = static_cast<std::int64_t>(std::floor(*hi_it / h));
  const std::size_t nbins = static_cast<std::size_t>(last - first + 1);
  std::vector<std::int64_t> counts(nbins, 0);
  for (double x : sample) {
    auto b = static_cast<std::int64_t>(std::floor(x / h)) - first;
    b = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(nbins) - 1);
    ++counts[static_cast<std::size_t>(b)];
  }

  const double M = static_cast<double>(sample.size());
  RateCurve c;
  c.samples = sample.size();
  c.t = t;
  c.bin_width = h;
  for (std::size_t b = 0; b < nbins; ++b) {
    const double centre = (static_cast<double>(first) +
                           static_cast<double>(b) + 0.5) *
                          h;
    const auto r = phi(centre, tau, T);
    c.j.push_back(centre);
    c.phi_exact.push_back(r.value);
    c.branch.push_back(r.branch);
    c.count.push_back(counts[b]);
    if (counts[b] == 0) {
      c.phi_empirical.push_back(-std::log(1.0 / (M * h)) / t);
      c.se.push_back(0.0);
      c.censored.push_back(true);
    } else {
      const double n = static_cast<double>(counts[b]);
      const double p = n / M;
      c.phi_empirical.push_back(-std::log(n / (M * h)) / t);
      c.se.push_back(std::sqrt((1.0 - p) / n) / t);
      c.censored.push_back(false);
    }
  }
  return c;
}

//! Stable tilt window for the SCGF estimator: 0.9 times the integrability
//! bounds -1/(2 T_right) and 1/(2 T_left).
struct TiltWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double lambda) const noexcept {
    return lambda > lo && lambda < hi;
  }
};

inline TiltWindow scgf_window(const WallPair &w) {
  return {-0.9 / (2.0 * w.T_right()), 0.9 / (2.0 * w.T_left())};
}

struct ScgfCurve {
  std::vector<double> lambda;
  std::vector<double> value;
  std::vector<double> ess;
  std::vector<bool> stable;
};

inline constexpr double kMinEffectiveSamples = 100.0;

//! (1/t) log mean exp(lambda J) with a max shift; ESS = (sum w)^2 / sum w^2.
//! Points outside the window or with ESS below 100 are flagged unstable.
inline ScgfCurve scgf_estimate(std::span<const double> J, double t,
                               std::span<const double> lambdas,
                               const TiltWindow &window) {
  if (J.empty())
    throw std::invalid_argument("scgf_estimate: empty ensemble");
  if (!(t > 0.0))
    throw std::invalid_argument("scgf_estimate: t must be positive");
  const auto [mn, mx] = std::minmax_element(J.begin(), J.end());
  const double M = static_cast<double>(J.size());
  ScgfCurve c;
  for (double lambda : lambdas) {
    const double shift = lambda >= 0.0 ? lambda * *mx : lambda * *mn;
    double s1 = 0.0, s2 = 0.0;
    for (double x : J) {
      const double w = std::exp(lambda * x - shift);
      s1 += w;
      s2 += w * w;
    }
    const double ess = s1 * s1 / s2;
    c.lambda.push_back(lambda);
    c.value.push_back((std::log(s1 / M) + shift) / t);
    c.ess.push_back(ess);
    c.stable.push_back(window.contains(lambda) && ess >= kMinEffectiveSamples);
  }
  return c;
}

} // namespace aerogel
