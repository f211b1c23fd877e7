#pragma once

// Fast invariant checks over every module, sized to finish in a few seconds.

#include "aerogel/chain.hpp"
#include "aerogel/mft.hpp"
#include "aerogel/model.hpp"
#include "aerogel/rate_function.hpp"
#include "aerogel/renewal.hpp"
#include "aerogel/tracer.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace aerogel {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {
inline double simpson(const std::function<double(double)> &f, double a,
                      double b, std::size_t n) {
  n += n % 2;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i)
    s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}
} // namespace detail

inline std::vector<SelfTestResult> run_selftest(unsigned workers = 1) {
  std::vector<SelfTestResult> out;
  auto check = [&](std::string name, auto &&body) {
    SelfTestResult r{std::move(name), false, {}};
    try {
      r.passed = body(r.detail);
    } catch (const std::exception &e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  };

  check("wall density integrates to one", [](std::string &d) {
    const double I = detail::simpson(
        [](double v) { return wall_speed_pdf(v, 1.3); }, 0.0,
        20.0 * std::sqrt(1.3), 20000);
    d = "integral " + detail::fmt(I);
    return std::abs(I - 1.0) < 1e-10;
  });

  check("inverse-CDF sampler matches the wall law", [](std::string &d) {
    SplitMix64 rng(11);
    std::vector<double> v(100000);
    for (auto &x : v)
      x = sample_wall_speed(0.7, rng.uniform_open());
    const double ks = ks_distance(v, [](double s) { return wall_speed_cdf(s, 0.7); });
    d = "KS " + detail::fmt(ks);
    return ks < 0.006;
  });

  check("stationary current is antisymmetric", [](std::string &d) {
    const WallPair w(2.3, 0.4);
    const double a = stationary_current(w), b = stationary_current(w.swapped());
    d = detail::fmt(a) + " vs " + detail::fmt(b);
    return a == -b;
  });

  check("kappa equals half the equal-wall collision frequency",
        [](std::string &d) {
          double worst = 0.0;
          for (double T = 0.1; T < 10.0; T *= 1.7)
            worst = std::max(worst, std::abs(kappa(T) -
                                             collision_frequency({T, T}) / 2.0));
          d = "max deviation " + detail::fmt(worst);
          return worst < 1e-14;
        });

  check("collision log reproduces the online current", [](std::string &d) {
    const auto run = run_tracer({1.7, 0.6}, 500.0, 99, true);
    const auto &log = *run.log;
    bool alternate = true;
    for (std::size_t k = 0; k < log.records.size(); ++k)
      alternate = alternate && log.records[k].wall ==
                                   (k % 2 == 0 ? Side::right : Side::left);
    const double J = current_from_log(log.records, log.sigma0);
    d = "collisions " + std::to_string(log.records.size());
    return alternate && J == run.stats.current;
  });

  check("ensemble current matches the closed form", [workers](std::string &d) {
    const WallPair w(2.0, 1.0);
    const auto ens = run_ensemble(w, 200.0, 2000, 5, workers);
    RunningStats s;
    for (const auto &t : ens)
      s.add(t.current / t.duration);
    d = "mean " + detail::fmt(s.mean()) + " +- " + detail::fmt(s.se()) +
        ", target " + detail::fmt(stationary_current(w));
    return std::abs(s.mean() - stationary_current(w)) < 3.0 * s.se();
  });

  check("ensemble is independent of the worker count", [](std::string &d) {
    const auto a = run_ensemble({1.5, 0.5}, 50.0, 64, 3, 1);
    const auto b = run_ensemble({1.5, 0.5}, 50.0, 64, 3, 4);
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i)
      same = same && a[i].current == b[i].current &&
             a[i].collision_count == b[i].collision_count;
    d = same ? "identical" : "differs";
    return same;
  });

  check("rate function invariants", [](std::string &d) {
    double worst_gc = 0.0, worst_hom = 0.0;
    bool nonneg = true;
    for (double tau : {-1.0, -0.5, 0.5, 1.0})
      for (double T : {0.5, 1.0, 2.0})
        for (int i = 0; i <= 200; ++i) {
          const double j = -3.0 + 6.0 * i / 200.0;
          nonneg = nonneg && phi_value(j, tau, T) >= 0.0;
          worst_gc = std::max(worst_gc, std::abs(gc_defect(j, tau, T) +
                                                 j * tau / (2.0 * T * T)));
          worst_hom = std::max(worst_hom,
                               homogeneity_check(j, tau, T, 0.5) /
                                   (1.0 + 0.25 * phi_value(j, tau, T)));
        }
    d = "gc " + detail::fmt(worst_gc) + ", homogeneity " + detail::fmt(worst_hom);
    return nonneg && worst_gc < 1e-12 && worst_hom < 1e-12;
  });

  check("normalised curve spot values", [](std::string &d) {
    const double a = phi_scaled(2.0, 1.0, 1.0).value;
    const double b = phi_scaled(-1.0, 1.0, 1.0).value;
    const bool flat = phi_scaled(0.0, 1.0, 1.0).value == 0.0 &&
                      phi_scaled(1.0, 1.0, 1.0).value == 0.0;
    d = "phi(2)=" + detail::fmt(a) + " phi(-1)=" + detail::fmt(b);
    return a == 0.25 && b == 0.5 && flat;
  });

  check("chain profile against the continuum limit", [](std::string &d) {
    const auto p = solve_profile(64, 2.0, 1.0, 1e-10);
    const double mid = p.temperature_at(0.5);
    d = "T(1/2) " + detail::fmt(mid) + ", residual " + detail::fmt(p.residual);
    return p.converged && std::abs(mid - 1.5418) < 0.01;
  });

  check("stationary field has zero action", [](std::string &d) {
    const auto p = solve_profile(8, 2.0, 1.0, 1e-12);
    Grid2 j(4, 9, p.bond_currents[0]);
    const auto f = make_conservative(j, p.temperatures, 0.05, {2.0, 1.0});
    const auto r = action(f);
    d = "action " + detail::fmt(r.value);
    return r.conservative && std::abs(r.value) < 1e-10;
  });

  check("renewal bound holds on a small scan", [workers](std::string &d) {
    const WallPair w(1.0, 1.0);
    const std::vector<double> ts{20.0, 40.0, 80.0};
    const std::vector<double> alphas{0.2, 0.4, 0.6};
    const auto scan = empirical_decay_scan(w, alphas, ts, 5000, 17, workers);
    bool ok = true;
    for (std::size_t a = 0; a < alphas.size(); ++a)
      for (std::size_t c = 0; c < ts.size(); ++c)
        ok = ok && scan.probability(a, c) >=
                       analytic_lower_bound(alphas[a], ts[c], w) -
                           3.0 * scan.probability_se(a, c);
    d = "nu_hat " + detail::fmt(scan.nu_hat);
    return ok;
  });

  return out;
}

} // namespace aerogel
