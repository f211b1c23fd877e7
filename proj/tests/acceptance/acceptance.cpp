// Acceptance suite: one PASS/FAIL line per criterion with the measured values.
// Exits nonzero when any criterion fails.

#include "aerogel/aerogel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace aerogel;

namespace {

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

class Clock {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int failures = 0;

void report(const std::string &name, bool ok, const std::string &detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok)
    ++failures;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

template <class F> MeanSe mean_se(const std::vector<TrajectoryStats> &e, F f) {
  RunningStats w;
  for (const auto &s : e)
    w.add(f(s));
  return {w.mean(), w.se()};
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return x;
}

// ---------------------------------------------------------------------------

void stationary_current_and_frequency() {
  const double t = 1e3;
  const std::size_t M = 10'000;
  const WallPair pairs[] = {{2.0, 1.0}, {1.5, 0.5}, {1.0, 1.0}};
  std::ostringstream cur, freq;
  bool cur_ok = true, freq_ok = true;
  double seconds_max = 0.0;
  std::uint64_t seed = 1001;
  for (const auto &w : pairs) {
    Clock clock;
    const auto e = run_ensemble(w, t, M, seed++, workers());
    seconds_max = std::max(seconds_max, clock.seconds());
    const auto j = mean_se(e, [t](const TrajectoryStats &s) { return s.current / t; });
    const auto n = mean_se(e, [t](const TrajectoryStats &s) {
      return static_cast<double>(s.collision_count) / t;
    });
    const double jt = stationary_current(w), nt = collision_frequency(w);
    const double zj = (j.mean - jt) / j.se, zn = (n.mean - nt) / n.se;
    cur_ok = cur_ok && std::abs(zj) < 3.0;
    freq_ok = freq_ok && std::abs(zn) < 3.0;
    char buf[200];
    std::snprintf(buf, sizeof buf, " (%g,%g): %.5f vs %.5f z=%+.2f;", w.T_left(), w.T_right(),
                  j.mean, jt, zj);
    cur << buf;
    std::snprintf(buf, sizeof buf, " (%g,%g): %.5f vs %.5f z=%+.2f;", w.T_left(), w.T_right(),
                  n.mean, nt, zn);
    freq << buf;
  }
  const bool fast = seconds_max < 120.0;
  report("stationary-current", cur_ok && fast,
         cur.str() + " max runtime " + std::to_string(seconds_max) + " s");
  report("collision-frequency", freq_ok, freq.str());
}

void equilibrium_mbg() {
  Clock clock;
  const WallPair w(1.0, 1.0);
  const auto logs = run_logged_ensemble(w, 5000.0, 400, 2024, workers());
  const auto h = equilibrium_histograms(w, logs);
  const double s = clock.seconds();
  const bool ok = h.flight_segments >= 1'000'000 && h.ks_time_weighted_vs_half_gaussian < 0.01 &&
                  h.max_position_deviation < 0.01 && s < 60.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "segments=%zu KS=%.5f (<0.01) max decile deviation=%.5f (<0.01) runtime %.1f s",
                h.flight_segments, h.ks_time_weighted_vs_half_gaussian, h.max_position_deviation,
                s);
  report("equilibrium-mbg", ok, buf);
}

void heavy_tail() {
  const std::size_t draws = 10'000'000;
  const double ts[] = {5.0, 10.0, 20.0};
  std::size_t above[3] = {0, 0, 0};
  SplitMix64 rng(77);
  for (std::size_t i = 0; i < draws; ++i) {
    const double u = 1.0 / sample_wall_speed(1.0, rng.uniform_open());
    for (int k = 0; k < 3; ++k)
      above[k] += u > ts[k];
  }
  bool ok = true;
  std::ostringstream d;
  for (int k = 0; k < 3; ++k) {
    const double v = ts[k] * ts[k] * static_cast<double>(above[k]) / static_cast<double>(draws);
    ok = ok && std::abs(v - 0.5) < 0.025;
    char buf[80];
    std::snprintf(buf, sizeof buf, " t=%g: t^2 P=%.4f;", ts[k], v);
    d << buf;
  }
  report("heavy-tail", ok, d.str() + " target 0.5 +- 5%");
}

void plateau_signature() {
  Clock clock;
  const double tau = 0.2, T = 1.0, kt = kappa(T) * tau;
  const WallPair w(T + tau / 2, T - tau / 2);
  const std::vector<double> ts{50.0, 100.0, 200.0, 400.0};
  const std::size_t M = 1'000'000;
  const auto e = run_checkpoints(w, ts, M, 4242, workers());
  struct Bin {
    const char *name;
    double lo, hi;
    bool subexponential;
  };
  const Bin bins[] = {{"[0.25,0.75]kt", 0.25 * kt, 0.75 * kt, true},
                      {"[1.5,2]kt", 1.5 * kt, 2.0 * kt, false},
                      {"J<0", -HUGE_VAL, 0.0, false}};
  bool ok = true;
  std::ostringstream d;
  for (const auto &b : bins) {
    std::vector<double> y;
    bool empty = false;
    for (std::size_t c = 0; c < ts.size(); ++c) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < M; ++i) {
        const double x = e.current(i, c) / ts[c];
        n += x >= b.lo && x < b.hi;
      }
      if (n == 0)
        empty = true;
      y.push_back(-std::log(static_cast<double>(n) / static_cast<double>(M)));
    }
    char buf[160];
    if (empty) {
      ok = false;
      std::snprintf(buf, sizeof buf, " %s: empty bin;", b.name);
    } else {
      const double g = growth_exponent(ts, y);
      ok = ok && (b.subexponential ? g < 0.5 : g > 0.9);
      std::snprintf(buf, sizeof buf, " %s: exponent %.3f (%s);", b.name, g,
                    b.subexponential ? "<0.5" : ">0.9");
    }
    d << buf;
  }
  const double s = clock.seconds();
  report("plateau-signature", ok && s < 600.0,
         d.str() + " runtime " + std::to_string(s) + " s");
}

void exact_rate_properties() {
  Clock clock;
  const double taus[] = {-1.0, -0.5, 0.5, 1.0};
  const double Ts[] = {0.5, 1.0, 2.0};
  const auto js = linspace(-3.0, 3.0, 1000);
  double neg = 0.0, c0 = 0.0, c1 = 0.0, kink = 0.0, convex = -1.0, homog = 0.0, gc = 0.0;
  bool zero_set = true;
  auto slope = [](double tau, double T, double x, double h, int side) {
    auto D = [&](double s) {
      return side > 0 ? (phi_value(x + s, tau, T) - phi_value(x, tau, T)) / s
                      : (phi_value(x, tau, T) - phi_value(x - s, tau, T)) / s;
    };
    return 2.0 * D(h / 2) - D(h);
  };
  for (double tau : taus)
    for (double T : Ts) {
      const double k = kappa(T);
      std::vector<double> f;
      for (double j : js) {
        const double v = phi_value(j, tau, T);
        f.push_back(v);
        neg = std::min(neg, v);
        zero_set = zero_set && ((v == 0.0) == (j * tau >= 0.0 && j * tau <= k * tau * tau));
        for (double eps : {0.5, 0.01, 3.0})
          homog = std::max(homog, homogeneity_check(j, tau, T, eps) / (1.0 + eps * eps * v));
        gc = std::max(gc, std::abs(gc_defect(j, tau, T) + j * tau / (2.0 * T * T)));
      }
      for (double edge : {k * tau, -k * tau}) {
        const double d = 1e-15 * std::max(1.0, std::abs(edge));
        c0 = std::max(c0, std::abs(phi_value(edge + d, tau, T) - phi_value(edge - d, tau, T)));
        c1 = std::max(c1, std::abs(slope(tau, T, edge, 1e-2, +1) - slope(tau, T, edge, 1e-2, -1)));
      }
      const double jump = slope(tau, T, 0.0, 1e-6, +1) - slope(tau, T, 0.0, 1e-6, -1);
      kink = std::max(kink, std::abs(jump - std::abs(tau) / (2.0 * T * T)));
      for (std::size_t a = 0; a < js.size(); ++a)
        for (std::size_t b = a + 1; b < js.size(); ++b)
          convex = std::max(convex, phi_value(0.5 * (js[a] + js[b]), tau, T) - 0.5 * (f[a] + f[b]));
    }
  const double s = clock.seconds();
  const bool ok = neg >= 0.0 && zero_set && c0 < 1e-12 && c1 < 1e-12 && kink < 1e-8 &&
                  convex <= 1e-12 && homog < 1e-12 && gc < 1e-12 && s < 5.0;
  char buf[300];
  std::snprintf(buf, sizeof buf,
                "min=%.1e zero-set %s C0=%.1e C1=%.1e kink err=%.1e convexity=%.1e "
                "homogeneity=%.1e GC=%.1e runtime %.2f s",
                neg, zero_set ? "exact" : "WRONG", c0, c1, kink, convex, homog, gc, s);
  report("exact-rate-properties", ok, buf);
}

void figure_values() {
  const auto js = linspace(-2.0, 3.0, 501);
  bool flat = true;
  for (double j : js) {
    const double v = phi_scaled(j, 1.0, 1.0).value;
    flat = flat && ((v == 0.0) == (j >= 0.0 && j <= 1.0));
  }
  const double a = phi_scaled(2.0, 1.0, 1.0).value, b = phi_scaled(-1.0, 1.0, 1.0).value;
  char buf[160];
  std::snprintf(buf, sizeof buf, "phi(2)=%.15g phi(-1)=%.15g flat exactly on [0,1]: %s", a, b,
                flat ? "yes" : "no");
  report("figure-values", flat && a == 0.25 && b == 0.5, buf);
}

void scgf_duality() {
  const WallPair w(1.0, 1.0);
  const double t = 1e3;
  const std::size_t M = 100'000;
  const auto e = run_ensemble(w, t, M, 31337, workers());
  std::vector<double> J;
  RunningStats jw;
  for (const auto &s : e) {
    J.push_back(s.current);
    jw.add(s.current / t);
  }
  const auto win = scgf_window(w);
  const auto lambdas = linspace(win.lo, win.hi, 43);
  const std::vector<double> inner(lambdas.begin() + 1, lambdas.end() - 1);
  const auto curve = scgf_estimate(J, t, inner, win);
  std::vector<double> lam, val;
  for (std::size_t i = 0; i < inner.size(); ++i)
    if (curve.stable[i]) {
      lam.push_back(curve.lambda[i]);
      val.push_back(curve.value[i]);
    }
  bool convex = lam.size() >= 3;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < lam.size(); ++i) {
    const double second = val[i + 1] - 2.0 * val[i] + val[i - 1];
    worst = std::min(worst, second);
    convex = convex && second >= -1e-12 * (1.0 + std::abs(val[i]));
  }
  const double h = 1e-5;
  const std::vector<double> near{-h, 0.0, h};
  const auto c0 = scgf_estimate(J, t, near, win);
  const double value0 = c0.value[1];
  const double deriv0 = (c0.value[2] - c0.value[0]) / (2.0 * h);
  const double se = jw.se();
  const bool at_zero = std::abs(value0) <= 3.0 * se && std::abs(deriv0) <= 3.0 * se;

  const double dj = 0.01;
  const auto jgrid = linspace(-1.0, 1.0, 201);
  const auto conj = legendre(lam, val, jgrid);
  double min_rate = HUGE_VAL, near_zero = HUGE_VAL;
  for (std::size_t i = 0; i < jgrid.size(); ++i) {
    min_rate = std::min(min_rate, conj[i].value);
    if (std::abs(jgrid[i]) <= dj + 1e-12)
      near_zero = std::min(near_zero, conj[i].value);
  }
  const double dl = lam.size() >= 2 ? lam[1] - lam[0] : HUGE_VAL;
  const bool legendre_ok = min_rate >= -1e-12 && near_zero <= dl * dj;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "stable points=%zu convex=%s (min 2nd diff %.2e) Lambda(0)=%.2e "
                "Lambda'(0)=%.2e (3 SE=%.2e) min I=%.2e I near 0=%.2e (<= %.2e)",
                lam.size(), convex ? "yes" : "no", worst, value0, deriv0, 3.0 * se, min_rate,
                near_zero, dl * dj);
  report("scgf-duality", convex && at_zero && legendre_ok, buf);
}

void fourier_profile() {
  Clock clock;
  const auto p = solve_profile(64, 2.0, 1.0, 1e-10);
  const double mid = p.temperature_at(0.5);
  const bool newton_ok = p.converged && p.residual < 1e-10 && std::abs(mid - 1.5418) <= 0.01;

  const std::size_t N = 16;
  const auto ref = solve_profile(N, 2.0, 1.0, 1e-12);
  ChainMcOptions opt;
  opt.damping = 0.5;
  opt.t_round = 1e4;
  opt.master_seed = 16;
  opt.workers = workers();
  const auto mc = simulate_chain(N, 2.0, 1.0, opt);
  double worst_z = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    worst_z = std::max(worst_z, std::abs(mc.profile.temperatures[i] - ref.temperatures[i]) /
                                    mc.temperature_se[i]);
  const double s = clock.seconds();
  char buf[300];
  std::snprintf(buf, sizeof buf,
                "Newton N=64 residual=%.2e iterations=%d T(1/2)=%.5f (1.5418+-0.01); "
                "MC N=16 max |z|=%.2f (<3) runtime %.1f s",
                p.residual, p.iterations, mid, worst_z, s);
  report("fourier-profile", newton_ok && worst_z < 3.0 && s < 300.0, buf);
}

void mft_action() {
  const std::size_t Nx = 16, Ns = 16;
  const double ds = 0.01;
  const Reservoirs res{2.0, 1.0};
  const auto p = solve_profile(Nx, res.T_left, res.T_right, 1e-13);
  const double c = p.bond_currents[0];

  const auto stat = make_conservative(Grid2(Ns, Nx + 1, c), p.temperatures, ds, res);
  const double a0 = action(stat).value;

  const auto rev = make_conservative(Grid2(Ns, Nx + 1, -c), p.temperatures, ds, res);
  const double ar = action(rev).value;
  double gc_sum = 0.0;
  for (std::size_t l = 0; l < Ns; ++l)
    for (std::size_t i = 0; i <= Nx; ++i) {
      const double a = i == 0 ? res.T_left : p.temperatures[i - 1];
      const double b = i == Nx ? res.T_right : p.temperatures[i];
      const double T = 0.5 * (a + b);
      gc_sum += ds / static_cast<double>(Nx) * (-gc_defect(c, a - b, T));
    }

  MinimizeProblem prob;
  prob.eps_initial = p.temperatures;
  prob.reservoirs = res;
  prob.N_s = Ns;
  prob.ds = ds;
  MinimizeOptions opt;
  Grid2 start(Ns, Nx + 1);
  for (std::size_t l = 0; l < Ns; ++l)
    for (std::size_t i = 0; i <= Nx; ++i)
      start(l, i) = c + 0.2 * std::sin(0.7 * static_cast<double>(l) + 1.3 * static_cast<double>(i));
  opt.initial_current = start;
  const auto m = minimize_action(prob, opt);

  const bool ok = std::abs(a0) < 1e-10 && std::abs(ar - gc_sum) < 1e-10 && m.report.value < 1e-6;
  char buf[300];
  std::snprintf(buf, sizeof buf,
                "stationary=%.2e reversed=%.12f GC sum=%.12f |diff|=%.1e minimised %.3e -> %.2e "
                "(%s, %d iterations)",
                a0, ar, gc_sum, std::abs(ar - gc_sum), m.accepted_values.front(), m.report.value,
                std::string(to_string(m.status)).c_str(), m.report.iterations);
  report("mft-action", ok, buf);
}

} // namespace

int main() {
  std::printf("aerogel acceptance suite (%u workers)\n", workers());
  figure_values();
  exact_rate_properties();
  heavy_tail();
  mft_action();
  fourier_profile();
  stationary_current_and_frequency();
  equilibrium_mbg();
  scgf_duality();
  plateau_signature();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
