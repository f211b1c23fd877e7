// aerogel_ldt: command-line driver for the confined-tracer toolkit.
//
// Every run resolves its configuration (defaults < --config file < flags),
// writes its artifacts into --out and finishes with manifest.json. Passing
// that manifest back through --config reproduces the artifacts byte for byte.

#include "aerogel/aerogel.hpp"
#include "aerogel/io.hpp"
#include "aerogel/selftest.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#ifndef AEROGEL_LDT_VERSION
#define AEROGEL_LDT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace aerogel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

const std::vector<std::string> kSubcommands = {
    "tracer",      "ensemble",   "renewal-scan", "rate-exact",
    "rate-empirical", "scgf",    "chain-solve",  "chain-mc",
    "mft-action",  "mft-minimize", "selftest"};

struct RunConfig {
  std::string subcommand;
  double tl = 2.0;
  double tr = 1.0;
  double t = 1000.0;
  std::uint64_t m = 10000;
  std::uint64_t seed = 7;
  std::uint64_t nx = 16;
  std::uint64_t ns = 32;
  double ds = 0.01;
  std::uint64_t cells = 64;
  double tol = 1e-10;
  std::uint64_t workers = 1;
  std::string out = "out";

  // rate-exact
  double tau = 1.0;
  double temp = 1.0;
  std::optional<double> kappa_tau;
  std::optional<double> kappa_T2;
  double jmin = -2.0;
  double jmax = 3.0;
  std::uint64_t points = 501;

  // rate-empirical
  double bin_width = 0.0;

  // renewal-scan; empty alphas select multiples of the collision frequency
  std::vector<double> alphas;
  std::vector<double> ts = {50.0, 100.0, 200.0, 400.0};

  // scgf; unset bounds select the stable tilt window
  std::optional<double> lmin;
  std::optional<double> lmax;
  std::uint64_t lpoints = 41;

  // chain-mc
  std::uint64_t rounds = 200;
  double t_round = 1e4;
  double damping = 0.5;

  // mft
  bool reverse = false;
  std::string eps_file;
  std::string j_file;
  double perturb = 0.0;
  bool fix_end = false;
  std::optional<double> mean_current;
  std::string rule = "polyak";
  std::uint64_t iters = 5000;
};

struct Binding {
  std::string key;
  CLI::Option *option = nullptr;
  std::function<void(RunConfig &)> from_flag;
  std::function<void(RunConfig &, const json &)> from_json;
  std::function<void(const RunConfig &, json &)> to_json;
};

template <class T> struct Unwrap {
  using type = T;
  static constexpr bool optional = false;
};
template <class T> struct Unwrap<std::optional<T>> {
  using type = T;
  static constexpr bool optional = true;
};

template <class Field>
void bind_flag(CLI::App &app, std::vector<Binding> &table, const std::string &flag,
          const std::string &key, Field RunConfig::*member,
          const std::string &help) {
  using V = typename Unwrap<Field>::type;
  constexpr bool is_optional = Unwrap<Field>::optional;
  auto staged = std::make_shared<V>();
  Binding b;
  b.key = key;
  if constexpr (std::is_same_v<V, bool>)
    b.option = app.add_flag(flag, *staged, help);
  else if constexpr (std::is_same_v<V, std::vector<double>>)
    b.option = app.add_option(flag, *staged, help)->delimiter(',');
  else
    b.option = app.add_option(flag, *staged, help);
  b.from_flag = [staged, member](RunConfig &c) { c.*member = *staged; };
  b.from_json = [key, member](RunConfig &c, const json &j) {
    if (j.is_null()) {
      if constexpr (is_optional)
        c.*member = std::nullopt;
      else
        throw std::invalid_argument("key '" + key + "' may not be null");
      return;
    }
    if constexpr (std::is_same_v<V, std::uint64_t>) {
      if (!j.is_number_unsigned())
        throw std::invalid_argument("key '" + key +
                                    "' must be a non-negative integer");
    } else if constexpr (std::is_same_v<V, double>) {
      if (!j.is_number())
        throw std::invalid_argument("key '" + key + "' must be a number");
    }
    c.*member = j.get<V>();
  };
  b.to_json = [key, member](const RunConfig &c, json &j) {
    if constexpr (is_optional) {
      if (c.*member)
        j[key] = *(c.*member);
      else
        j[key] = nullptr;
    } else {
      j[key] = c.*member;
    }
  };
  table.push_back(std::move(b));
}

std::vector<Binding> register_flags(CLI::App &app) {
  std::vector<Binding> t;
  bind_flag(app, t, "--tl", "tl", &RunConfig::tl, "left wall temperature");
  bind_flag(app, t, "--tr", "tr", &RunConfig::tr, "right wall temperature");
  bind_flag(app, t, "--t", "t", &RunConfig::t, "trajectory duration");
  bind_flag(app, t, "--m", "m", &RunConfig::m, "ensemble size");
  bind_flag(app, t, "--seed", "seed", &RunConfig::seed, "master seed");
  bind_flag(app, t, "--nx", "nx", &RunConfig::nx, "spatial cells of the MFT grid");
  bind_flag(app, t, "--ns", "ns", &RunConfig::ns, "time steps of the MFT grid");
  bind_flag(app, t, "--ds", "ds", &RunConfig::ds, "macroscopic time step");
  bind_flag(app, t, "--cells", "cells", &RunConfig::cells, "chain length");
  bind_flag(app, t, "--tol", "tol", &RunConfig::tol, "Newton residual tolerance");
  bind_flag(app, t, "--workers", "workers", &RunConfig::workers,
       "worker threads (default: $AEROGEL_LDT_WORKERS or 1)");
  bind_flag(app, t, "--out", "out", &RunConfig::out, "output directory");
  bind_flag(app, t, "--tau", "tau", &RunConfig::tau, "temperature difference");
  bind_flag(app, t, "--temp", "temp", &RunConfig::temp, "mean temperature");
  bind_flag(app, t, "--kappa-tau", "kappa_tau", &RunConfig::kappa_tau,
       "normalised difference kappa*tau");
  bind_flag(app, t, "--kappa-T2", "kappa_T2", &RunConfig::kappa_T2,
       "normalised temperature kappa*T^2");
  bind_flag(app, t, "--jmin", "jmin", &RunConfig::jmin, "current grid start");
  bind_flag(app, t, "--jmax", "jmax", &RunConfig::jmax, "current grid end");
  bind_flag(app, t, "--points", "points", &RunConfig::points, "current grid size");
  bind_flag(app, t, "--bin-width", "bin_width", &RunConfig::bin_width,
       "histogram bin width (<= 0: Freedman-Diaconis)");
  bind_flag(app, t, "--alphas", "alphas", &RunConfig::alphas,
       "comma-separated rate thresholds");
  bind_flag(app, t, "--ts", "ts", &RunConfig::ts, "comma-separated scan times");
  bind_flag(app, t, "--lmin", "lmin", &RunConfig::lmin, "smallest tilt");
  bind_flag(app, t, "--lmax", "lmax", &RunConfig::lmax, "largest tilt");
  bind_flag(app, t, "--lpoints", "lpoints", &RunConfig::lpoints, "tilt grid size");
  bind_flag(app, t, "--rounds", "rounds", &RunConfig::rounds, "chain-mc rounds");
  bind_flag(app, t, "--t-round", "t_round", &RunConfig::t_round,
       "tracer time per chain-mc round");
  bind_flag(app, t, "--damping", "damping", &RunConfig::damping,
       "chain-mc update damping in (0,1]");
  bind_flag(app, t, "--reverse", "reverse", &RunConfig::reverse,
       "reverse the current of the stationary field");
  bind_flag(app, t, "--eps-file", "eps_file", &RunConfig::eps_file,
       "energy field file");
  bind_flag(app, t, "--j-file", "j_file", &RunConfig::j_file, "current field file");
  bind_flag(app, t, "--perturb", "perturb", &RunConfig::perturb,
       "relative sine bump on the initial profile");
  bind_flag(app, t, "--fix-end", "fix_end", &RunConfig::fix_end,
       "pin the final profile to the stationary one");
  bind_flag(app, t, "--mean-current", "mean_current", &RunConfig::mean_current,
       "space-time mean current constraint");
  bind_flag(app, t, "--rule", "rule", &RunConfig::rule, "step rule: polyak|diminishing");
  bind_flag(app, t, "--iters", "iters", &RunConfig::iters, "maximum iterations");
  return t;
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Accepts a plain config object or a manifest written by a previous run.
void apply_config_file(const std::string &path, RunConfig &cfg,
                       const std::vector<Binding> &table) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(e.what());
  }
  if (!doc.is_object())
    throw ConfigError("top level must be an object");
  json body = doc;
  if (doc.contains("config")) {
    body = doc["config"];
    if (!body.is_object())
      throw ConfigError("'config' must be an object");
  }
  if (doc.contains("subcommand")) {
    if (!doc["subcommand"].is_string())
      throw ConfigError("'subcommand' must be a string");
    cfg.subcommand = doc["subcommand"].get<std::string>();
  }
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (it.key() == "subcommand")
      continue;
    const auto b = std::find_if(table.begin(), table.end(),
                                [&](const Binding &x) { return x.key == it.key(); });
    if (b == table.end())
      throw ConfigError("unknown key '" + it.key() + "'");
    try {
      b->from_json(cfg, it.value());
    } catch (const std::exception &e) {
      throw ConfigError(e.what());
    }
  }
}

class Output {
public:
  explicit Output(const fs::path &dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_))
      throw OutputError("cannot write output directory '" + dir_.string() +
                        "': " + (ec ? ec.message() : "not a directory"));
    const fs::path probe = dir_ / ".aerogel_ldt_probe";
    {
      std::ofstream p(probe);
      if (!p)
        throw OutputError("cannot write output directory '" + dir_.string() +
                          "': permission denied");
    }
    fs::remove(probe, ec);
  }

  template <class Fn>
  void write(const std::string &name, const std::string &schema, Fn &&fn) {
    std::ostringstream buf;
    fn(buf);
    std::ofstream os(dir_ / name, std::ios::binary);
    os << buf.str();
    if (!os)
      throw OutputError("cannot write '" + (dir_ / name).string() + "'");
    artifacts_.push_back({{"file", name}, {"schema", schema}});
  }

  void write_json(const std::string &name, const std::string &schema,
                  const json &j) {
    write(name, schema, [&](std::ostream &os) { os << j.dump(2) << '\n'; });
  }

  const json &artifacts() const { return artifacts_; }

private:
  fs::path dir_;
  json artifacts_ = json::array();
};

json number_or_null(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

unsigned worker_count(const RunConfig &c) {
  return static_cast<unsigned>(std::max<std::uint64_t>(1, c.workers));
}

std::size_t positive_size(std::uint64_t v, const char *name) {
  if (v < 1)
    throw std::invalid_argument(std::string("--") + name + " must be >= 1");
  return static_cast<std::size_t>(v);
}

WallPair walls(const RunConfig &c) { return WallPair(c.tl, c.tr); }

// ---------------------------------------------------------------------------
// Subcommands

void cmd_tracer(RunConfig &c, Output &out) {
  const auto run = run_tracer(walls(c), c.t, c.seed, true);
  const auto &s = run.stats;
  json j;
  j["seed"] = s.seed;
  j["t_max"] = s.duration;
  j["N_t"] = s.collision_count;
  j["J"] = s.current;
  j["sigma0"] = s.sigma0;
  j["left_collisions"] = s.left_collisions;
  j["right_collisions"] = s.right_collisions;
  j["initial_speed"] = run.log->initial_speed;
  j["time_weighted_mean_v2"] = s.time_weighted_mean_v2();
  out.write_json("tracer.json", "tracer/1", j);
  out.write("collisions.csv", "collisions/1", [&](std::ostream &os) {
    os << "index,wall,time,new_speed\n";
    for (const auto &r : run.log->records) {
      CsvRow row;
      row << r.index << (r.wall == Side::left ? "left" : "right") << r.time
          << r.new_speed;
      os << row.str() << '\n';
    }
  });
}

void cmd_ensemble(RunConfig &c, Output &out) {
  const WallPair w = walls(c);
  const auto ens = run_ensemble(w, c.t, positive_size(c.m, "m"), c.seed,
                                worker_count(c));
  out.write("ensemble.csv", "ensemble/1",
            [&](std::ostream &os) { write_ensemble_csv(os, ens); });
  RunningStats current, rate;
  for (const auto &s : ens) {
    current.add(s.current / s.duration);
    rate.add(static_cast<double>(s.collision_count) / s.duration);
  }
  json j;
  j["mean_current"] = current.mean();
  j["mean_current_se"] = current.se();
  j["stationary_current"] = stationary_current(w);
  j["mean_rate"] = rate.mean();
  j["mean_rate_se"] = rate.se();
  j["collision_frequency"] = collision_frequency(w);
  out.write_json("summary.json", "ensemble-summary/1", j);
}

void cmd_renewal_scan(RunConfig &c, Output &out) {
  const WallPair w = walls(c);
  if (c.alphas.empty()) {
    const double nu = collision_frequency(w);
    for (int k = 1; k <= 30; ++k)
      c.alphas.push_back(nu * k / 20.0);
  }
  const auto scan = empirical_decay_scan(w, c.alphas, c.ts,
                                         positive_size(c.m, "m"), c.seed,
                                         worker_count(c));
  out.write("scan.csv", "scan/1",
            [&](std::ostream &os) { write_scan_csv(os, scan); });
  const auto est = plateau_detect(scan);
  json j;
  j["status"] = to_string(est.status);
  j["lo"] = est.status == PlateauStatus::found ? json(est.lo) : json(nullptr);
  j["hi"] = est.status == PlateauStatus::found ? json(est.hi) : json(nullptr);
  j["nu_hat"] = est.nu_hat;
  j["nu_hat_se"] = est.nu_hat_se;
  j["collision_frequency"] = collision_frequency(w);
  json fits = json::array();
  for (std::size_t a = 0; a < est.fits.size(); ++a)
    fits.push_back({{"alpha", scan.alphas[a]},
                    {"tail", est.upper_tail[a] ? "upper" : "lower"},
                    {"exponent", number_or_null(est.fits[a].exponent)},
                    {"class", to_string(est.fits[a].decay)}});
  j["fits"] = fits;
  json bounds = json::array();
  for (double t : scan.ts)
    bounds.push_back({{"t", t}, {"lower_bound", analytic_lower_bound(0.0, t, w)}});
  j["analytic_lower_bound"] = bounds;
  out.write_json("plateau.json", "plateau/1", j);
}

void cmd_rate_exact(RunConfig &c, Output &out) {
  detail::require_temperature(c.temp, "--temp");
  const double k = kappa(c.temp);
  const double a = c.kappa_tau ? *c.kappa_tau : k * c.tau;
  const double b = c.kappa_T2 ? *c.kappa_T2 : k * c.temp * c.temp;
  const auto curve = exact_rate_curve(c.jmin, c.jmax,
                                      positive_size(c.points, "points"), a, b);
  out.write("rate_curve.csv", "rate_curve/1",
            [&](std::ostream &os) { write_rate_curve_csv(os, curve); });
}

std::vector<double> ensemble_currents(const RunConfig &c, bool per_time) {
  const auto ens = run_ensemble(walls(c), c.t, positive_size(c.m, "m"), c.seed,
                                worker_count(c));
  std::vector<double> J;
  J.reserve(ens.size());
  for (const auto &s : ens)
    J.push_back(per_time ? s.current / s.duration : s.current);
  return J;
}

void cmd_rate_empirical(RunConfig &c, Output &out) {
  const WallPair w = walls(c);
  const auto J = ensemble_currents(c, true);
  const auto curve = empirical_rate(J, c.t, w.tau(), w.T_mean(), c.bin_width);
  out.write("rate_curve.csv", "rate_curve/1",
            [&](std::ostream &os) { write_rate_curve_csv(os, curve); });
}

void cmd_scgf(RunConfig &c, Output &out) {
  const WallPair w = walls(c);
  const TiltWindow window = scgf_window(w);
  if (!c.lmin)
    c.lmin = window.lo;
  if (!c.lmax)
    c.lmax = window.hi;
  const std::size_t n = positive_size(c.lpoints, "lpoints");
  if (n < 2 || !(*c.lmax > *c.lmin))
    throw std::invalid_argument("scgf: need lmax > lmin and at least two points");
  std::vector<double> lambdas(n);
  for (std::size_t i = 0; i < n; ++i)
    lambdas[i] = *c.lmin + (*c.lmax - *c.lmin) * static_cast<double>(i) /
                               static_cast<double>(n - 1);
  const auto J = ensemble_currents(c, false);
  const auto curve = scgf_estimate(J, c.t, lambdas, window);
  out.write("scgf.csv", "scgf/1",
            [&](std::ostream &os) { write_scgf_csv(os, curve); });

  std::vector<double> x, f;
  for (std::size_t i = 0; i < curve.lambda.size(); ++i)
    if (curve.stable[i]) {
      x.push_back(curve.lambda[i]);
      f.push_back(curve.value[i]);
    }
  if (x.empty())
    throw NumericalFailure("scgf: no stable tilt points");
  const std::size_t pts = positive_size(c.points, "points");
  out.write("legendre.csv", "legendre/1", [&](std::ostream &os) {
    os << "j,value,at_boundary\n";
    for (std::size_t i = 0; i < pts; ++i) {
      const double j = pts == 1 ? c.jmin
                                : c.jmin + (c.jmax - c.jmin) *
                                               static_cast<double>(i) /
                                               static_cast<double>(pts - 1);
      const auto v = legendre(x, f, j);
      CsvRow row;
      row << j << v.value << v.at_boundary;
      os << row.str() << '\n';
    }
  });
}

ChainProfile newton_profile(const RunConfig &c, std::size_t N) {
  return solve_profile(N, c.tl, c.tr, c.tol);
}

void cmd_chain_solve(RunConfig &c, Output &out) {
  const auto p = newton_profile(c, positive_size(c.cells, "cells"));
  out.write("profile.csv", "profile/1",
            [&](std::ostream &os) { write_profile_csv(os, p); });
  out.write_json("solver_report.json", "solver_report/1", solver_report(p));
}

void cmd_chain_mc(RunConfig &c, Output &out) {
  const std::size_t N = positive_size(c.cells, "cells");
  const auto p = newton_profile(c, N);
  ChainMcOptions opt;
  opt.rounds = positive_size(c.rounds, "rounds");
  opt.t_round = c.t_round;
  opt.damping = c.damping;
  opt.master_seed = c.seed;
  opt.workers = worker_count(c);
  const auto mc = simulate_chain(N, c.tl, c.tr, opt);
  out.write("profile.csv", "profile/1",
            [&](std::ostream &os) { write_profile_csv(os, p, &mc); });
  out.write_json("solver_report.json", "solver_report/1", solver_report(p));
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    worst = std::max(worst, std::abs(mc.profile.temperatures[i] - p.temperatures[i]) /
                                mc.temperature_se[i]);
  json j;
  j["rounds_run"] = mc.rounds_run;
  j["averaged_rounds"] = mc.averaged_rounds;
  j["max_deviation_in_se"] = number_or_null(worst);
  out.write_json("chain_mc.json", "chain_mc/1", j);
}

SpaceTimeField stationary_field(const RunConfig &c, bool reverse) {
  const std::size_t Nx = positive_size(c.nx, "nx");
  const std::size_t Ns = positive_size(c.ns, "ns");
  const auto p = newton_profile(c, Nx);
  double current = 0.0;
  for (double b : p.bond_currents)
    current += b;
  current /= static_cast<double>(p.bond_currents.size());
  Grid2 j(Ns, Nx + 1, reverse ? -current : current);
  return make_conservative(j, p.temperatures, c.ds, {c.tl, c.tr});
}

FieldFile load_field(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot read field file '" + path + "'");
  return read_field_csv(in);
}

void write_fields(Output &out, const SpaceTimeField &f) {
  out.write("field_eps.csv", "field/1",
            [&](std::ostream &os) { write_field_csv(os, f, FieldKind::eps); });
  out.write("field_j.csv", "field/1",
            [&](std::ostream &os) { write_field_csv(os, f, FieldKind::j); });
}

void cmd_mft_action(RunConfig &c, Output &out) {
  std::optional<SpaceTimeField> field;
  if (!c.eps_file.empty() || !c.j_file.empty()) {
    if (c.eps_file.empty() || c.j_file.empty())
      throw std::invalid_argument("mft-action: --eps-file and --j-file go together");
    field = field_from_files(load_field(c.eps_file), load_field(c.j_file),
                             {c.tl, c.tr});
  } else {
    field = stationary_field(c, c.reverse);
  }
  write_fields(out, *field);
  out.write_json("action_report.json", "action_report/1",
                 action_report_json(action(*field)));
}

void cmd_mft_minimize(RunConfig &c, Output &out) {
  const std::size_t Nx = positive_size(c.nx, "nx");
  const auto p = newton_profile(c, Nx);
  MinimizeProblem problem;
  problem.eps_initial = p.temperatures;
  for (std::size_t i = 0; i < Nx; ++i)
    problem.eps_initial[i] *=
        1.0 + c.perturb * std::sin(std::numbers::pi * cell_position(i, Nx));
  if (c.fix_end)
    problem.eps_final = p.temperatures;
  problem.reservoirs = {c.tl, c.tr};
  problem.N_s = positive_size(c.ns, "ns");
  problem.ds = c.ds;
  problem.mean_current = c.mean_current;
  MinimizeOptions opt;
  if (c.rule == "polyak")
    opt.rule = StepRule::polyak;
  else if (c.rule == "diminishing")
    opt.rule = StepRule::diminishing;
  else
    throw std::invalid_argument("--rule must be polyak or diminishing");
  opt.max_iterations = static_cast<int>(std::min<std::uint64_t>(c.iters, 1u << 30));
  const auto r = minimize_action(problem, opt);
  write_fields(out, r.field);
  auto j = action_report_json(r.report);
  j["status"] = to_string(r.status);
  j["gap"] = r.gap;
  j["accepted_steps"] = r.accepted_values.size() - 1;
  out.write_json("action_report.json", "action_report/1", j);
}

bool cmd_selftest(RunConfig &c, Output &out) {
  const auto results = run_selftest(worker_count(c));
  std::size_t passed = 0;
  json checks = json::array();
  for (const auto &r : results) {
    passed += r.passed ? 1 : 0;
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail
              << ")\n";
    checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  const std::size_t failed = results.size() - passed;
  std::cout << passed << " passed, " << failed << " failed\n";
  json j;
  j["passed"] = passed;
  j["failed"] = failed;
  j["checks"] = checks;
  out.write_json("selftest.json", "selftest/1", j);
  return failed == 0;
}

bool dispatch(RunConfig &c, Output &out) {
  const std::string &s = c.subcommand;
  if (s == "tracer")
    cmd_tracer(c, out);
  else if (s == "ensemble")
    cmd_ensemble(c, out);
  else if (s == "renewal-scan")
    cmd_renewal_scan(c, out);
  else if (s == "rate-exact")
    cmd_rate_exact(c, out);
  else if (s == "rate-empirical")
    cmd_rate_empirical(c, out);
  else if (s == "scgf")
    cmd_scgf(c, out);
  else if (s == "chain-solve")
    cmd_chain_solve(c, out);
  else if (s == "chain-mc")
    cmd_chain_mc(c, out);
  else if (s == "mft-action")
    cmd_mft_action(c, out);
  else if (s == "mft-minimize")
    cmd_mft_minimize(c, out);
  else if (s == "selftest")
    return cmd_selftest(c, out);
  return true;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Simulation and large-deviation analysis of a confined "
               "tracer between thermal walls"};
  app.set_version_flag("--version", AEROGEL_LDT_VERSION);
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config or manifest; flags override its values");
  auto table = register_flags(app);
  for (const auto &name : kSubcommands)
    app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ExtrasError &e) {
    std::cerr << "error: unknown flag or argument: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: invalid arguments: " << e.what() << '\n';
    return kExitValidation;
  }

  RunConfig cfg;
  if (const char *env = std::getenv("AEROGEL_LDT_WORKERS"); env && *env)
    cfg.workers = workers_from_env();
  try {
    if (!config_path.empty())
      apply_config_file(config_path, cfg, table);
  } catch (const ConfigError &e) {
    std::cerr << "error: invalid config '" << config_path << "': " << e.what()
              << '\n';
    return kExitValidation;
  }
  for (const auto &b : table)
    if (b.option->count() > 0)
      b.from_flag(cfg);
  for (const auto *sub : app.get_subcommands())
    cfg.subcommand = sub->get_name();
  if (cfg.subcommand.empty()) {
    std::cerr << "error: no subcommand given (one of";
    for (const auto &s : kSubcommands)
      std::cerr << ' ' << s;
    std::cerr << ")\n";
    return kExitValidation;
  }
  if (std::find(kSubcommands.begin(), kSubcommands.end(), cfg.subcommand) ==
      kSubcommands.end()) {
    std::cerr << "error: invalid config: unknown subcommand '" << cfg.subcommand
              << "'\n";
    return kExitValidation;
  }

  try {
    Output out(cfg.out);
    const bool ok = dispatch(cfg, out);
    json manifest;
    manifest["tool"] = "aerogel_ldt";
    manifest["version"] = AEROGEL_LDT_VERSION;
    manifest["subcommand"] = cfg.subcommand;
    json config;
    for (const auto &b : table)
      b.to_json(cfg, config);
    manifest["config"] = config;
    manifest["artifacts"] = out.artifacts();
    std::ofstream(fs::path(cfg.out) / "manifest.json", std::ios::binary)
        << manifest.dump(2) << '\n';
    if (!ok) {
      std::cerr << "error: selftest failures\n";
      return kExitNumerical;
    }
    return kExitOk;
  } catch (const OutputError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalFailure &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const BatchFailure &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::overflow_error &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: invalid parameters: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
