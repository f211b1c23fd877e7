#pragma once

// Small statistical helpers shared by the estimators.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace aerogel {

//! Welford accumulator. Adding values in a fixed order gives reproducible
//! results.
class RunningStats {
public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double stddev() const noexcept { return std::sqrt(variance()); }
  //! Standard error of the mean.
  double se() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

//! sup |F_n - F| for an unweighted sample; sorts the sample in place.
template <class Cdf>
double ks_distance(std::vector<double> &sample, Cdf &&cdf) {
  if (sample.empty())
    throw std::invalid_argument("ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F,
                  F - static_cast<double>(i) / n});
  }
  return d;
}

//! KS distance of a weighted empirical CDF (value, weight) to cdf.
//! Sorts the pairs in place.
template <class Cdf>
double weighted_ks_distance(std::vector<std::pair<double, double>> &sample,
                            Cdf &&cdf) {
  if (sample.empty())
    throw std::invalid_argument("weighted_ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  double total = 0.0;
  for (const auto &p : sample)
    total += p.second;
  if (!(total > 0.0))
    throw std::invalid_argument("weighted_ks_distance: zero total weight");
  double below = 0.0;
  double d = 0.0;
  for (const auto &[x, w] : sample) {
    const double F = cdf(x);
    d = std::max(d, F - below / total);
    below += w;
    d = std::max(d, below / total - F);
  }
  return d;
}

//! Ordinary least-squares slope and intercept of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("fit_line: degenerate abscissae");
  return {sxy / sxx, my - sxy / sxx * mx};
}

//! Exponent gamma of y ~ c t^gamma from a log-log least-squares fit.
//! Requires positive y.
inline double growth_exponent(std::span<const double> t,
                              std::span<const double> y) {
  std::vector<double> lx, ly;
  lx.reserve(t.size());
  ly.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(y[i] > 0.0) || !(t[i] > 0.0))
      throw std::invalid_argument("growth_exponent: values must be positive");
    lx.push_back(std::log(t[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly).slope;
}

//! Sample quantile with linear interpolation on a sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty())
    throw std::invalid_argument("sorted_quantile: empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

//! Freedman-Diaconis bin width 2 IQR n^{-1/3}.
inline double freedman_diaconis_width(std::vector<double> sample) {
  if (sample.size() < 2)
    throw std::invalid_argument("freedman_diaconis_width: need two samples");
  std::sort(sample.begin(), sample.end());
  const double iqr =
      sorted_quantile(sample, 0.75) - sorted_quantile(sample, 0.25);
  return 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(sample.size()));
}

} // namespace aerogel
