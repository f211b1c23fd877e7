#include "aerogel/renewal.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace aerogel;

TEST(LowerBound, ClosedForm) {
  const WallPair w(1.0, 3.0);
  EXPECT_NEAR(analytic_lower_bound(0.3, 1.0, w), 0.39347, 1e-5);
  for (double alpha : {0.0, 0.1, 0.5, 2.0})
    EXPECT_EQ(analytic_lower_bound(alpha, 7.0, w), analytic_lower_bound(0.0, 7.0, w));
  // The bound uses the wall the first flight leaves.
  EXPECT_EQ(analytic_lower_bound(0.1, 2.0, w), analytic_lower_bound(0.1, 2.0, {1.0, 9.0}));
  EXPECT_THROW(analytic_lower_bound(-0.1, 1.0, w), std::invalid_argument);
}

TEST(LowerBound, LogarithmicDecay) {
  // -log(1 - exp(-x)) = -log x + x/2 + O(x^2) with x = 1/(2t^2).
  const WallPair w(1.0, 1.0);
  for (double t : {1e2, 1e3, 1e4}) {
    const double r = -std::log(analytic_lower_bound(0.5, t, w));
    EXPECT_NEAR(r, 2.0 * std::log(t) + std::log(2.0), 1e-4);
  }
  EXPECT_LT(-std::log(analytic_lower_bound(0.5, 1e6, w)) / 1e6, 3e-5);
}

TEST(DecayScan, RejectsBadInput) {
  const std::vector<double> ts{10.0, 20.0};
  const std::vector<double> none;
  const std::vector<double> neg{-0.1};
  EXPECT_THROW(empirical_decay_scan({1.0, 1.0}, none, ts, 10, 1), std::invalid_argument);
  EXPECT_THROW(empirical_decay_scan({1.0, 1.0}, neg, ts, 10, 1), std::invalid_argument);
  const std::vector<double> back{20.0, 10.0};
  const std::vector<double> one{0.5};
  EXPECT_THROW(empirical_decay_scan({1.0, 1.0}, one, back, 10, 1), std::invalid_argument);
}

class ScanInvariants : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    const WallPair w(1.5, 0.5);
    const double nu = oracle::frequency(1.5, 0.5);
    for (int k = 0; k <= 30; ++k)
      alphas.push_back(nu * k / 20.0);
    scan = new DecayScan(empirical_decay_scan(w, alphas, ts, 20000, 8, 8));
  }
  static void TearDownTestSuite() { delete scan; }
  static inline std::vector<double> alphas;
  static inline const std::vector<double> ts{25.0, 50.0, 100.0, 200.0};
  static inline DecayScan *scan = nullptr;
};

TEST_F(ScanInvariants, BoundHoldsEverywhere) {
  const WallPair w(1.5, 0.5);
  for (std::size_t a = 0; a < alphas.size(); ++a)
    for (std::size_t c = 0; c < ts.size(); ++c) {
      // Binomial SE at the bound itself; the plug-in SE vanishes when no
      // event was seen.
      const double b = analytic_lower_bound(alphas[a], ts[c], w);
      EXPECT_GE(scan->probability(a, c), b - 3.0 * std::sqrt(b * (1.0 - b) / 20000.0))
          << "alpha=" << alphas[a] << " t=" << ts[c];
    }
}

TEST_F(ScanInvariants, MonotoneInAlpha) {
  for (std::size_t c = 0; c < ts.size(); ++c)
    for (std::size_t a = 1; a < alphas.size(); ++a)
      EXPECT_GE(scan->events[scan->at(a, c)], scan->events[scan->at(a - 1, c)]);
}

TEST_F(ScanInvariants, CensoringAndResolution) {
  const double resolution = std::log(20000.0);
  for (std::size_t i = 0; i < scan->events.size(); ++i) {
    EXPECT_GE(scan->neg_log_prob[i], 0.0);
    EXPECT_FALSE(std::isnan(scan->neg_log_prob[i]));
    EXPECT_EQ(scan->censored[i], scan->events[i] == 0);
    if (scan->censored[i]) {
      EXPECT_EQ(scan->neg_log_prob[i], resolution);
    }
  }
  // alpha = 0 requires no collision at all before t.
  EXPECT_GT(scan->neg_log_prob[scan->at(0, 0)], 0.0);
}

TEST_F(ScanInvariants, RateEstimate) {
  // Small M keeps the start-up excess of the count inside 3 SE.
  const auto small = empirical_decay_scan({1.0, 1.0}, alphas, ts, 1500, 3, 8);
  EXPECT_LT(std::abs(small.nu_hat - 0.79788), 3.0 * small.nu_hat_se);
}

TEST(DecayScan, AboveEverySampleProbabilityIsOne) {
  const std::vector<double> ts{10.0, 20.0};
  const std::vector<double> alphas{1e6};
  const auto s = empirical_decay_scan({1.0, 1.0}, alphas, ts, 500, 1);
  for (std::size_t c = 0; c < ts.size(); ++c) {
    EXPECT_EQ(s.probability(0, c), 1.0);
    EXPECT_EQ(s.neg_log_prob_per_t(0, c), 0.0);
  }
}

TEST(DecayClassification, Thresholds) {
  EXPECT_EQ(classify_exponent(0.1), DecayClass::subexponential);
  EXPECT_EQ(classify_exponent(0.7), DecayClass::inconclusive);
  EXPECT_EQ(classify_exponent(1.0), DecayClass::exponential);
  const std::vector<double> ts{50, 100, 200, 400};
  const std::vector<double> linear{5, 10, 20, 40};
  const std::vector<double> logarithmic{7.8, 9.2, 10.6, 12.0};
  const std::vector<bool> none(4, false);
  EXPECT_EQ(classify_decay(ts, linear, none).decay, DecayClass::exponential);
  EXPECT_EQ(classify_decay(ts, logarithmic, none).decay, DecayClass::subexponential);
  EXPECT_EQ(classify_decay(ts, linear, {false, false, true, false}).decay,
            DecayClass::censored);
  EXPECT_EQ(classify_decay(ts, std::vector<double>(4, 0.0), none).decay,
            DecayClass::typical);
}

TEST(Plateau, InconclusiveOnShortTimeRange) {
  const std::vector<double> alphas{0.2, 0.4};
  const std::vector<double> narrow{100.0, 150.0, 200.0};
  const auto s = empirical_decay_scan({1.0, 1.0}, alphas, narrow, 200, 1);
  EXPECT_EQ(plateau_detect(s).status, PlateauStatus::inconclusive);
  const std::vector<double> two{50.0, 400.0};
  const auto s2 = empirical_decay_scan({1.0, 1.0}, alphas, two, 200, 1);
  EXPECT_EQ(plateau_detect(s2).status, PlateauStatus::inconclusive);
}

TEST(Plateau, FoundForTheTracer) {
  const double nu = oracle::frequency(1.0, 1.0);
  std::vector<double> alphas;
  for (int k = 1; k <= 24; ++k)
    alphas.push_back(nu * k / 16.0);
  const std::vector<double> ts{50.0, 100.0, 200.0, 400.0};
  const auto scan = empirical_decay_scan({1.0, 1.0}, alphas, ts, 1'000'000, 12, 8);
  const auto est = plateau_detect(scan);
  ASSERT_EQ(est.status, PlateauStatus::found);
  EXPECT_LE(est.lo, nu / 4.0 + 1e-12);
  EXPECT_GE(est.hi, 3.0 * nu / 4.0 - 1e-12);
  // Well above the mean rate the upper tail decays exponentially.
  for (std::size_t a = 0; a < alphas.size(); ++a)
    if (alphas[a] >= 1.3 * nu) {
      EXPECT_TRUE(est.upper_tail[a]);
      EXPECT_NE(est.fits[a].decay, DecayClass::subexponential) << alphas[a];
    }
}

TEST(Plateau, NotFoundForExponentialWaitingTimes) {
  const double nu = oracle::frequency(1.0, 1.0);
  std::vector<double> alphas;
  for (int k = 1; k <= 24; ++k)
    alphas.push_back(nu * k / 16.0);
  const std::vector<double> ts{5.0, 10.0, 20.0, 40.0};
  const auto counts = exponential_renewal_counts(nu, ts, 200000, 13, 8);
  const auto scan = decay_scan_from_counts(counts, alphas);
  EXPECT_NEAR(scan.nu_hat, nu, 3.0 * scan.nu_hat_se);
  EXPECT_EQ(plateau_detect(scan).status, PlateauStatus::not_found);
}
