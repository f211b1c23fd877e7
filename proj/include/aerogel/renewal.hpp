#pragma once

// Large deviations of the wall-collision counter N_t / t.
//
// Flight times t_k = 1/v_k have density psi_beta(u) = beta/u^3 exp(-beta/2u^2),
// whose tail P(t_1 > t) ~ 1/(2 T t^2) is only polynomial. One long flight
// therefore suppresses N_t at a polynomial cost, and P(N_t/t <= alpha) decays
// subexponentially for every alpha below the mean rate nu.

#include "aerogel/model.hpp"
#include "aerogel/parallel.hpp"
#include "aerogel/rng.hpp"
#include "aerogel/stats.hpp"
#include "aerogel/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace aerogel {

//! P(N_t/t <= alpha) >= P(t_1 > t); the first flight leaves the left wall.
inline double analytic_lower_bound(double alpha, double t, const WallPair &w) {
  if (!(alpha >= 0.0))
    throw std::invalid_argument("analytic_lower_bound: alpha must be >= 0");
  return waiting_time_tail(t, w.T_left());
}

//! A counting process sampled at fixed times: counts(i, c) = N_{times[c]} of
//! realisation i.
struct CountSample {
  std::vector<double> times;
  std::size_t realisations = 0;
  std::vector<std::int64_t> counts; // row-major, realisation-major

  std::int64_t count(std::size_t i, std::size_t c) const {
    return counts[i * times.size() + c];
  }
};

inline CountSample tracer_counts(const WallPair &w,
                                 std::span<const double> times, std::size_t M,
                                 std::uint64_t master_seed,
                                 unsigned workers = 1) {
  auto ens = run_checkpoints(w, times, M, master_seed, workers);
  return {std::move(ens.times), ens.trajectories, std::move(ens.counts)};
}

//! Light-tailed control: a renewal process with exponential waiting times of
//! the given rate (a Poisson process).
inline CountSample exponential_renewal_counts(double rate,
                                              std::span<const double> times,
                                              std::size_t M,
                                              std::uint64_t master_seed,
                                              unsigned workers = 1) {
  if (!(rate > 0.0))
    throw std::invalid_argument("exponential_renewal_counts: rate must be > 0");
  detail::require_increasing_times(times);
  CountSample out;
  out.times.assign(times.begin(), times.end());
  out.realisations = M;
  const std::size_t K = times.size();
  out.counts.resize(M * K);
  parallel_for(M, workers, [&](std::size_t i) {
    SplitMix64 rng(split(master_seed, i));
    double clock = -std::log(rng.uniform_open()) / rate;
    std::int64_t n = 0;
    for (std::size_t c = 0; c < K; ++c) {
      while (clock <= times[c]) {
        ++n;
        clock += -std::log(rng.uniform_open()) / rate;
      }
      out.counts[i * K + c] = n;
    }
  });
  return out;
}

//! Lower-tail scan of P(N_t/t <= alpha) on an (alpha, t) grid. Matrices are
//! alpha-major: entry (a, c) sits at a * ts.size() + c.
struct DecayScan {
  std::vector<double> alphas;
  std::vector<double> ts;
  std::size_t M = 0;
  //! Mean of N_t/t at the largest t.
  double nu_hat = 0.0;
  double nu_hat_se = 0.0;
  std::vector<std::int64_t> events; // #{N_t <= alpha t}
  //! -log P_hat, or the resolution bound log M when censored.
  std::vector<double> neg_log_prob;
  std::vector<bool> censored;

  std::size_t at(std::size_t a, std::size_t c) const {
    return a * ts.size() + c;
  }
  double probability(std::size_t a, std::size_t c) const {
    return static_cast<double>(events[at(a, c)]) / static_cast<double>(M);
  }
  double neg_log_prob_per_t(std::size_t a, std::size_t c) const {
    return neg_log_prob[at(a, c)] / ts[c];
  }
  //! 1-sigma binomial error of P_hat.
  double probability_se(std::size_t a, std::size_t c) const {
    const double p = probability(a, c);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(M));
  }
};

inline DecayScan decay_scan_from_counts(const CountSample &sample,
                                        std::span<const double> alphas) {
  if (alphas.empty())
    throw std::invalid_argument("decay scan: no alpha values");
  if (sample.realisations < 1)
    throw std::invalid_argument("decay scan: empty sample");
  DecayScan s;
  s.alphas.assign(alphas.begin(), alphas.end());
  s.ts = sample.times;
  s.M = sample.realisations;
  const std::size_t K = s.ts.size();

  RunningStats rate;
  for (std::size_t i = 0; i < s.M; ++i)
    rate.add(static_cast<double>(sample.count(i, K - 1)) / s.ts[K - 1]);
  s.nu_hat = rate.mean();
  s.nu_hat_se = rate.se();

  const double resolution = std::log(static_cast<double>(s.M));
  for (double alpha : s.alphas) {
    if (!(alpha >= 0.0))
      throw std::invalid_argument("decay scan: alpha must be >= 0");
    for (std::size_t c = 0; c < K; ++c) {
      const double limit = alpha * s.ts[c];
      std::int64_t hits = 0;
      for (std::size_t i = 0; i < s.M; ++i)
        hits += static_cast<double>(sample.count(i, c)) <= limit ? 1 : 0;
      s.events.push_back(hits);
      if (hits == 0) {
        s.neg_log_prob.push_back(resolution);
        s.censored.push_back(true);
      } else {
        s.neg_log_prob.push_back(
            -std::log(static_cast<double>(hits) / static_cast<double>(s.M)));
        s.censored.push_back(false);
      }
    }
  }
  return s;
}

inline DecayScan empirical_decay_scan(const WallPair &w,
                                      std::span<const double> alphas,
                                      std::span<const double> ts,
                                      std::size_t M, std::uint64_t master_seed,
                                      unsigned workers = 1) {
  return decay_scan_from_counts(tracer_counts(w, ts, M, master_seed, workers),
                                alphas);
}

enum class DecayClass { subexponential, exponential, inconclusive, censored, typical };

constexpr std::string_view to_string(DecayClass c) noexcept {
  switch (c) {
  case DecayClass::subexponential:
    return "subexponential";
  case DecayClass::exponential:
    return "exponential";
  case DecayClass::inconclusive:
    return "inconclusive";
  case DecayClass::censored:
    return "censored";
  case DecayClass::typical:
    return "typical";
  }
  return "?";
}

//! Growth exponents of -log P below this are subexponential, above the
//! upper threshold exponential.
inline constexpr double kSubexponentialBelow = 0.5;
inline constexpr double kExponentialAbove = 0.9;

inline DecayClass classify_exponent(double gamma) noexcept {
  if (gamma < kSubexponentialBelow)
    return DecayClass::subexponential;
  if (gamma > kExponentialAbove)
    return DecayClass::exponential;
  return DecayClass::inconclusive;
}

struct DecayFit {
  double exponent = 0.0; // NaN unless fitted
  DecayClass decay = DecayClass::inconclusive;
};

//! Classifies a row of -log P values over ts. Censored cells mean the decay
//! outran the Monte Carlo resolution.
inline DecayFit classify_decay(std::span<const double> ts,
                               std::span<const double> neg_log_prob,
                               const std::vector<bool> &censored) {
  DecayFit fit;
  fit.exponent = std::numeric_limits<double>::quiet_NaN();
  if (std::any_of(censored.begin(), censored.end(), [](bool b) { return b; })) {
    fit.decay = DecayClass::censored;
    return fit;
  }
  if (std::all_of(neg_log_prob.begin(), neg_log_prob.end(),
                  [](double y) { return y == 0.0; })) {
    fit.decay = DecayClass::typical;
    return fit;
  }
  if (std::any_of(neg_log_prob.begin(), neg_log_prob.end(),
                  [](double y) { return !(y > 0.0); }))
    return fit;
  fit.exponent = growth_exponent(ts, neg_log_prob);
  fit.decay = classify_exponent(fit.exponent);
  return fit;
}

enum class PlateauStatus { found, not_found, inconclusive };

constexpr std::string_view to_string(PlateauStatus s) noexcept {
  switch (s) {
  case PlateauStatus::found:
    return "found";
  case PlateauStatus::not_found:
    return "not-found";
  case PlateauStatus::inconclusive:
    return "inconclusive";
  }
  return "?";
}

struct PlateauEstimate {
  PlateauStatus status = PlateauStatus::inconclusive;
  double lo = 0.0; // subexponential alphas in [lo, hi] when found
  double hi = 0.0;
  double nu_hat = 0.0;
  double nu_hat_se = 0.0;
  //! Per alpha: the tail used (false = lower, true = upper) and its fit.
  std::vector<bool> upper_tail;
  std::vector<DecayFit> fits;
};

//! Needs at least three times spanning a factor of four.
inline constexpr std::size_t kMinScanTimes = 3;
inline constexpr double kMinScanSpan = 4.0;

//! Run of alphas below nu_hat whose lower-tail probability decays
//! subexponentially, starting at the lowest alpha with an uncensored fit.
//! Alphas above nu_hat are classified on the complementary upper tail
//! P(N_t/t > alpha). A run confined to alphas just below nu_hat is not
//! reported: there the Gaussian regime of the count has -log P = c + I t with
//! small I, which the exponent fit cannot tell apart from slow decay.
inline PlateauEstimate plateau_detect(const DecayScan &scan) {
  PlateauEstimate est;
  est.nu_hat = scan.nu_hat;
  est.nu_hat_se = scan.nu_hat_se;
  const std::size_t K = scan.ts.size();
  if (K < kMinScanTimes || scan.ts.back() / scan.ts.front() < kMinScanSpan)
    return est; // inconclusive

  const double resolution = std::log(static_cast<double>(scan.M));
  std::vector<double> y(K);
  std::vector<bool> cens(K);
  for (std::size_t a = 0; a < scan.alphas.size(); ++a) {
    const bool upper = scan.alphas[a] > scan.nu_hat;
    for (std::size_t c = 0; c < K; ++c) {
      const auto hits = scan.events[scan.at(a, c)];
      const auto n = upper ? static_cast<std::int64_t>(scan.M) - hits : hits;
      cens[c] = n == 0;
      y[c] = n == 0 ? resolution
                    : -std::log(static_cast<double>(n) /
                                static_cast<double>(scan.M));
    }
    est.upper_tail.push_back(upper);
    est.fits.push_back(classify_decay(scan.ts, y, cens));
  }

  std::size_t start = 0;
  while (start < scan.alphas.size() && !est.upper_tail[start] &&
         est.fits[start].decay == DecayClass::censored)
    ++start;
  std::size_t end = start;
  while (end < scan.alphas.size() && !est.upper_tail[end] &&
         est.fits[end].decay == DecayClass::subexponential)
    ++end;
  if (end == start) {
    est.status = PlateauStatus::not_found;
    return est;
  }
  est.status = PlateauStatus::found;
  est.lo = scan.alphas[start];
  est.hi = scan.alphas[end - 1];
  return est;
}

} // namespace aerogel
