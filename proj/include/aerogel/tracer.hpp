#pragma once

// Event-driven simulation of one confined tracer between two thermal walls.
//
// Conventions:
//  - the particle starts at the left wall at clock 0 with a speed drawn from
//    the left wall, moving right (sigma0 = +1);
//  - collision k = 1 is the first arrival, at the right wall; collisions then
//    alternate, so even k are left-wall hits;
//  - v_k is the speed drawn at collision k and the flight after it lasts
//    exactly 1/v_k;
//  - J[0,t] = sigma0 * 1/2 * sum_{k <= N_t} (-1)^k v_k^2.
// A run to t_max stops at the last collision <= t_max. The unfinished flight
// only feeds the time-weighted speed accumulators.

#include "aerogel/csv.hpp"
#include "aerogel/model.hpp"
#include "aerogel/parallel.hpp"
#include "aerogel/rng.hpp"
#include "aerogel/stats.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace aerogel {

struct CollisionRecord {
  std::int64_t index = 0; // k >= 1
  Side wall = Side::right;
  double time = 0.0;      // s_k
  double new_speed = 0.0; // v_k
};

struct TracerState {
  double position = 0.0;        // in [0,1]
  double signed_velocity = 0.0; // > 0 towards the right wall
  double clock = 0.0;
  Side next_wall = Side::right;
};

struct TrajectoryStats {
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::int64_t collision_count = 0;
  double current = 0.0; // J[0,t]
  int sigma0 = 1;
  std::int64_t left_collisions = 0;
  std::int64_t right_collisions = 0;
  //! Integrals over [0, duration] of v(s)^p ds for p = 0, 1, 2.
  std::array<double, 3> speed_moments{};

  //! Time-weighted mean of v^2; equals T at equilibrium in one dimension.
  double time_weighted_mean_v2() const noexcept {
    return speed_moments[2] / speed_moments[0];
  }
};

//! Initial speed plus every collision of one trajectory.
struct TrajectoryLog {
  double duration = 0.0;
  double initial_speed = 0.0;
  int sigma0 = 1;
  std::vector<CollisionRecord> records;
};

//! Contribution of collision k to the current, before the sigma0 factor.
inline double collision_current_term(std::int64_t k, double v) noexcept {
  const double half = 0.5 * v * v;
  return (k % 2 == 0) ? half : -half;
}

//! The alternating sum over a collision log, in index order.
inline double current_from_log(std::span<const CollisionRecord> log,
                               int sigma0) {
  if (sigma0 != 1 && sigma0 != -1)
    throw std::invalid_argument("current_from_log: sigma0 must be +1 or -1");
  double J = 0.0;
  for (const auto &r : log)
    J += sigma0 * collision_current_term(r.index, r.new_speed);
  return J;
}

//! Stepping engine. Holds the in-flight state between collisions.
class TracerEngine {
public:
  TracerEngine(const WallPair &walls, std::uint64_t seed)
      : walls_(walls), rng_(seed) {
    speed_ = sample_wall_speed_unchecked(walls_.T_left(), rng_.uniform_open());
    initial_speed_ = speed_;
    next_arrival_ = 1.0 / speed_;
  }

  const WallPair &walls() const noexcept { return walls_; }
  double clock() const noexcept { return clock_; }
  double speed() const noexcept { return speed_; }
  double initial_speed() const noexcept { return initial_speed_; }
  double next_arrival() const noexcept { return next_arrival_; }
  Side heading() const noexcept { return heading_; }
  std::int64_t collisions() const noexcept { return collisions_; }
  std::int64_t left_collisions() const noexcept { return left_; }
  std::int64_t right_collisions() const noexcept { return right_; }
  double current() const noexcept { return current_; }
  int sigma0() const noexcept { return sigma0_; }

  //! State at time t with clock() <= t <= next_arrival().
  TracerState state_at(double t) const noexcept {
    const double travelled = std::min(1.0, (t - clock_) * speed_);
    TracerState s;
    s.clock = t;
    s.next_wall = heading_;
    if (heading_ == Side::right) {
      s.position = travelled;
      s.signed_velocity = speed_;
    } else {
      s.position = 1.0 - travelled;
      s.signed_velocity = -speed_;
    }
    return s;
  }

  //! Processes every collision with time <= t. For each completed flight
  //! calls visit.flight(start, end, speed, heading) and then
  //! visit.collision(record).
  template <class Visitor> void advance_to(double t, Visitor &&visit) {
    while (next_arrival_ <= t) {
      if (collisions_ == std::numeric_limits<std::int64_t>::max())
        throw std::overflow_error("TracerEngine: collision count overflow");
      visit.flight(clock_, next_arrival_, speed_, heading_);
      clock_ = next_arrival_;
      const Side wall = heading_;
      const std::int64_t k = ++collisions_;
      speed_ =
          sample_wall_speed_unchecked(walls_.temperature(wall), rng_.uniform_open());
      current_ += sigma0_ * collision_current_term(k, speed_);
      if (wall == Side::left)
        ++left_;
      else
        ++right_;
      heading_ = opposite(wall);
      next_arrival_ = clock_ + 1.0 / speed_;
      visit.collision(CollisionRecord{k, wall, clock_, speed_});
    }
  }

  void advance_to(double t) { advance_to(t, NoVisit{}); }

private:
  struct NoVisit {
    void flight(double, double, double, Side) const noexcept {}
    void collision(const CollisionRecord &) const noexcept {}
  };

  WallPair walls_;
  SplitMix64 rng_;
  double clock_ = 0.0;
  double speed_ = 0.0;
  double initial_speed_ = 0.0;
  double next_arrival_ = 0.0;
  Side heading_ = Side::right;
  std::int64_t collisions_ = 0;
  std::int64_t left_ = 0;
  std::int64_t right_ = 0;
  double current_ = 0.0;
  int sigma0_ = 1;
};

struct TracerRun {
  TrajectoryStats stats;
  std::optional<TrajectoryLog> log;
};

namespace detail {
struct MomentVisitor {
  std::array<double, 3> *moments;
  std::vector<CollisionRecord> *log;

  void flight(double, double, double v, Side) const noexcept {
    // A complete flight lasts 1/v, so it contributes v^{p-1}.
    (*moments)[0] += 1.0 / v;
    (*moments)[1] += 1.0;
    (*moments)[2] += v;
  }
  void collision(const CollisionRecord &r) const {
    if (log)
      log->push_back(r);
  }
};

inline void require_horizon(double t_max) {
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw std::invalid_argument("t_max must be positive and finite");
}
} // namespace detail

//! One trajectory on [0, t_max]; a deterministic function of its arguments.
inline TracerRun run_tracer(const WallPair &w, double t_max, std::uint64_t seed,
                            bool log_collisions = false) {
  detail::require_horizon(t_max);
  TracerEngine engine(w, seed);
  TracerRun run;
  TrajectoryStats &s = run.stats;
  std::vector<CollisionRecord> records;
  engine.advance_to(t_max, detail::MomentVisitor{&s.speed_moments,
                                                 log_collisions ? &records
                                                                : nullptr});
  const double tail = t_max - engine.clock();
  const double v = engine.speed();
  s.speed_moments[0] += tail;
  s.speed_moments[1] += tail * v;
  s.speed_moments[2] += tail * v * v;

  s.seed = seed;
  s.duration = t_max;
  s.collision_count = engine.collisions();
  s.current = engine.current();
  s.sigma0 = engine.sigma0();
  s.left_collisions = engine.left_collisions();
  s.right_collisions = engine.right_collisions();
  if (log_collisions)
    run.log = TrajectoryLog{t_max, engine.initial_speed(), engine.sigma0(),
                            std::move(records)};
  return run;
}

//! M trajectories; trajectory i uses seed split(master_seed, i). Output is in
//! index order and independent of the worker count.
inline std::vector<TrajectoryStats>
run_ensemble(const WallPair &w, double t_max, std::size_t M,
             std::uint64_t master_seed, unsigned workers = 1) {
  detail::require_horizon(t_max);
  if (M < 1)
    throw std::invalid_argument("run_ensemble: M must be at least 1");
  std::vector<TrajectoryStats> out(M);
  parallel_for(M, workers, [&](std::size_t i) {
    out[i] = run_tracer(w, t_max, split(master_seed, i)).stats;
  });
  return out;
}

//! Logged trajectories, for equilibrium histograms and bookkeeping checks.
inline std::vector<TrajectoryLog>
run_logged_ensemble(const WallPair &w, double t_max, std::size_t M,
                    std::uint64_t master_seed, unsigned workers = 1) {
  detail::require_horizon(t_max);
  if (M < 1)
    throw std::invalid_argument("run_logged_ensemble: M must be at least 1");
  std::vector<TrajectoryLog> out(M);
  parallel_for(M, workers, [&](std::size_t i) {
    out[i] = *run_tracer(w, t_max, split(master_seed, i), true).log;
  });
  return out;
}

//! Collision count and current of every trajectory at a list of times.
//! Row-major: entry (i, c) sits at i * times.size() + c.
struct CheckpointEnsemble {
  std::vector<double> times;
  std::size_t trajectories = 0;
  std::vector<std::int64_t> counts;
  std::vector<double> currents;

  std::int64_t count(std::size_t i, std::size_t c) const {
    return counts[i * times.size() + c];
  }
  double current(std::size_t i, std::size_t c) const {
    return currents[i * times.size() + c];
  }
};

namespace detail {
inline void require_increasing_times(std::span<const double> times) {
  if (times.empty())
    throw std::invalid_argument("checkpoint times must be non-empty");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev) || !std::isfinite(t))
      throw std::invalid_argument(
          "checkpoint times must be positive and strictly increasing");
    prev = t;
  }
}
} // namespace detail

inline CheckpointEnsemble run_checkpoints(const WallPair &w,
                                          std::span<const double> times,
                                          std::size_t M,
                                          std::uint64_t master_seed,
                                          unsigned workers = 1) {
  detail::require_increasing_times(times);
  if (M < 1)
    throw std::invalid_argument("run_checkpoints: M must be at least 1");
  CheckpointEnsemble out;
  out.times.assign(times.begin(), times.end());
  out.trajectories = M;
  const std::size_t K = times.size();
  out.counts.resize(M * K);
  out.currents.resize(M * K);
  parallel_for(M, workers, [&](std::size_t i) {
    TracerEngine engine(w, split(master_seed, i));
    for (std::size_t c = 0; c < K; ++c) {
      engine.advance_to(times[c]);
      out.counts[i * K + c] = engine.collisions();
      out.currents[i * K + c] = engine.current();
    }
  });
  return out;
}

inline constexpr std::string_view kEnsembleCsvHeader =
    "trajectory_index,seed,t_max,N_t,J,sigma0,left_collisions,right_collisions";

//! Ensemble CSV with a fixed header, rows in index order.
inline void write_ensemble_csv(std::ostream &os,
                               std::span<const TrajectoryStats> ensemble) {
  os << kEnsembleCsvHeader << '\n';
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto &s = ensemble[i];
    CsvRow row;
    row << static_cast<std::uint64_t>(i) << s.seed << s.duration
        << s.collision_count << s.current << s.sigma0 << s.left_collisions
        << s.right_collisions;
    os << row.str() << '\n';
  }
}

//! Histograms and KS diagnostics of the equilibrium invariant measure.
struct EquilibriumHistograms {
  double temperature = 0.0;
  std::size_t flight_segments = 0;
  std::size_t position_samples = 0;
  std::vector<double> speed_edges;
  std::vector<double> time_weighted_speed_density; // per unit speed
  std::vector<double> position_fraction;           // fraction per bin
  //! KS distance of the time-weighted speed law to the half-Gaussian.
  double ks_time_weighted_vs_half_gaussian = 0.0;
  //! KS distances of the collision-sampled speeds (negative control).
  double ks_collision_vs_wall_law = 0.0;
  double ks_collision_vs_half_gaussian = 0.0;
  //! max_b |fraction_b * bins - 1|.
  double max_position_deviation = 0.0;
};

struct HistogramOptions {
  std::size_t speed_bins = 50;
  double speed_max_sigmas = 5.0; // upper edge = this * sqrt(T)
  std::size_t position_bins = 10;
  double position_stride = 0.25; // time between position observations
};

//! CDF of the half-Gaussian sqrt(2/(pi T)) exp(-v^2/(2T)), v >= 0.
inline double half_gaussian_cdf(double v, double T) {
  return v <= 0.0 ? 0.0 : std::erf(v / std::sqrt(2.0 * T));
}

inline EquilibriumHistograms
equilibrium_histograms(const WallPair &w, std::span<const TrajectoryLog> logs,
                       const HistogramOptions &opt = {}) {
  if (w.T_left() != w.T_right())
    throw std::invalid_argument(
        "equilibrium_histograms: walls must share one temperature");
  if (logs.empty())
    throw std::invalid_argument("equilibrium_histograms: no trajectories");
  if (opt.speed_bins < 1 || opt.position_bins < 1 ||
      !(opt.position_stride > 0.0))
    throw std::invalid_argument("equilibrium_histograms: bad options");

  const double T = w.T_left();
  EquilibriumHistograms h;
  h.temperature = T;
  const double vmax = opt.speed_max_sigmas * std::sqrt(T);
  const double dv = vmax / static_cast<double>(opt.speed_bins);
  h.speed_edges.resize(opt.speed_bins + 1);
  for (std::size_t b = 0; b <= opt.speed_bins; ++b)
    h.speed_edges[b] = dv * static_cast<double>(b);
  h.time_weighted_speed_density.assign(opt.speed_bins, 0.0);
  std::vector<double> position_counts(opt.position_bins, 0.0);

  std::vector<std::pair<double, double>> weighted;
  std::vector<double> collision_speeds;
  double total_time = 0.0;

  for (const auto &log : logs) {
    // Flight i starts at `start` from `from` with speed v.
    auto segment = [&](double start, double v, bool rightward) {
      const double length = std::min(1.0 / v, log.duration - start);
      if (!(length > 0.0))
        return;
      weighted.emplace_back(v, length);
      total_time += length;
      const auto b = static_cast<std::size_t>(v / dv);
      if (b < opt.speed_bins)
        h.time_weighted_speed_density[b] += length;
      // Observations at s = m * stride, m integer, inside [start, start+length).
      double s = std::ceil(start / opt.position_stride) * opt.position_stride;
      for (; s < start + length; s += opt.position_stride) {
        const double x = std::min(1.0, (s - start) * v);
        const double pos = rightward ? x : 1.0 - x;
        auto pb = static_cast<std::size_t>(pos * static_cast<double>(opt.position_bins));
        pb = std::min(pb, opt.position_bins - 1);
        position_counts[pb] += 1.0;
        ++h.position_samples;
      }
    };
    segment(0.0, log.initial_speed, true);
    for (const auto &r : log.records) {
      collision_speeds.push_back(r.new_speed);
      segment(r.time, r.new_speed, r.wall == Side::left);
    }
  }

  h.flight_segments = weighted.size();
  for (auto &d : h.time_weighted_speed_density)
    d /= total_time * dv;
  for (std::size_t b = 0; b < opt.position_bins; ++b) {
    h.position_fraction.push_back(position_counts[b] /
                                  static_cast<double>(h.position_samples));
    h.max_position_deviation =
        std::max(h.max_position_deviation,
                 std::abs(h.position_fraction.back() *
                              static_cast<double>(opt.position_bins) -
                          1.0));
  }

  h.ks_time_weighted_vs_half_gaussian = weighted_ks_distance(
      weighted, [T](double v) { return half_gaussian_cdf(v, T); });
  if (!collision_speeds.empty()) {
    auto copy = collision_speeds;
    h.ks_collision_vs_wall_law =
        ks_distance(copy, [T](double v) { return wall_speed_cdf(v, T); });
    h.ks_collision_vs_half_gaussian = ks_distance(
        collision_speeds, [T](double v) { return half_gaussian_cdf(v, T); });
  }
  return h;
}

} // namespace aerogel
