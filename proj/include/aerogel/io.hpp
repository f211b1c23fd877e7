#pragma once

// Writers and readers for the CSV/JSON artifacts.

#include "aerogel/chain.hpp"
#include "aerogel/csv.hpp"
#include "aerogel/mft.hpp"
#include "aerogel/rate_function.hpp"
#include "aerogel/renewal.hpp"

#include <json.hpp>

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>

namespace aerogel {

// rate_curve.csv -------------------------------------------------------------

inline constexpr std::string_view kRateCurveHeader =
    "j,phi_exact,branch,phi_empirical,se,censored,count";

//! Exact-only curves leave the empirical columns empty.
inline void write_rate_curve_csv(std::ostream &os, const RateCurve &c) {
  os << kRateCurveHeader << '\n';
  for (std::size_t i = 0; i < c.j.size(); ++i) {
    CsvRow row;
    row << c.j[i] << c.phi_exact[i] << to_string(c.branch[i]);
    if (c.has_empirical())
      row << c.phi_empirical[i] << c.se[i] << static_cast<bool>(c.censored[i])
          << c.count[i];
    else
      row << "" << "" << "" << "";
    os << row.str() << '\n';
  }
}

// scgf.csv -------------------------------------------------------------------

inline constexpr std::string_view kScgfHeader = "lambda,value,ess,stable";

inline void write_scgf_csv(std::ostream &os, const ScgfCurve &c) {
  os << kScgfHeader << '\n';
  for (std::size_t i = 0; i < c.lambda.size(); ++i) {
    CsvRow row;
    row << c.lambda[i] << c.value[i] << c.ess[i] << static_cast<bool>(c.stable[i]);
    os << row.str() << '\n';
  }
}

// decay scan -----------------------------------------------------------------

inline constexpr std::string_view kScanHeader =
    "alpha,t,M,events,neg_log_prob_per_t,censored";

inline void write_scan_csv(std::ostream &os, const DecayScan &s) {
  os << kScanHeader << '\n';
  for (std::size_t a = 0; a < s.alphas.size(); ++a)
    for (std::size_t c = 0; c < s.ts.size(); ++c) {
      CsvRow row;
      row << s.alphas[a] << s.ts[c] << static_cast<std::uint64_t>(s.M)
          << s.events[s.at(a, c)] << s.neg_log_prob_per_t(a, c)
          << static_cast<bool>(s.censored[s.at(a, c)]);
      os << row.str() << '\n';
    }
}

// profile.csv ----------------------------------------------------------------

inline constexpr std::string_view kProfileHeader =
    "cell_index,x,T_newton,T_mc,se,bond_current_left";
inline constexpr std::string_view kProfileHeaderNewtonOnly =
    "cell_index,x,T_newton,bond_current_left";

//! Without a Monte Carlo result the T_mc and se columns are omitted and the
//! bond current is Newton's; otherwise it is the measured one. Cell indices
//! start at 1.
inline void write_profile_csv(std::ostream &os, const ChainProfile &newton,
                              const ChainMcResult *mc = nullptr) {
  os << (mc ? kProfileHeader : kProfileHeaderNewtonOnly) << '\n';
  for (std::size_t i = 0; i < newton.N_cells; ++i) {
    CsvRow row;
    row << static_cast<std::uint64_t>(i + 1)
        << cell_position(i, newton.N_cells) << newton.temperatures[i];
    if (mc)
      row << mc->profile.temperatures[i] << mc->temperature_se[i]
          << mc->measured_currents[i];
    else
      row << newton.bond_currents[i];
    os << row.str() << '\n';
  }
}

inline nlohmann::ordered_json solver_report(const ChainProfile &p) {
  nlohmann::ordered_json j;
  j["iterations"] = p.iterations;
  j["residual"] = p.residual;
  j["converged"] = p.converged;
  return j;
}

// field files ----------------------------------------------------------------
//
//   kind,N_x,N_s,ds
//   eps,<N_x>,<N_s>,<ds>
//   <row-major values, one time level per line>
//
// eps files hold N_s+1 rows of N_x values, j files N_s rows of N_x+1 values.

enum class FieldKind { eps, j };

inline void write_field_csv(std::ostream &os, const SpaceTimeField &f,
                            FieldKind kind) {
  os << "kind,N_x,N_s,ds\n";
  CsvRow head;
  head << (kind == FieldKind::eps ? "eps" : "j")
       << static_cast<std::uint64_t>(f.N_x())
       << static_cast<std::uint64_t>(f.N_s()) << f.ds();
  os << head.str() << '\n';
  const Grid2 &g = kind == FieldKind::eps ? f.eps() : f.j();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    CsvRow row;
    for (std::size_t c = 0; c < g.cols(); ++c)
      row << g(r, c);
    os << row.str() << '\n';
  }
}

struct FieldFile {
  FieldKind kind = FieldKind::eps;
  std::size_t N_x = 0;
  std::size_t N_s = 0;
  double ds = 0.0;
  Grid2 values;
};

inline FieldFile read_field_csv(std::istream &is) {
  std::string line;
  if (!std::getline(is, line) || split_csv_line(line) !=
                                     std::vector<std::string>{"kind", "N_x",
                                                              "N_s", "ds"})
    throw std::invalid_argument("field file: expected header kind,N_x,N_s,ds");
  if (!std::getline(is, line))
    throw std::invalid_argument("field file: missing metadata row");
  const auto meta = split_csv_line(line);
  if (meta.size() != 4)
    throw std::invalid_argument("field file: malformed metadata row");
  FieldFile f;
  if (meta[0] == "eps")
    f.kind = FieldKind::eps;
  else if (meta[0] == "j")
    f.kind = FieldKind::j;
  else
    throw std::invalid_argument("field file: kind must be eps or j");
  const double nx = parse_double(meta[1]), ns = parse_double(meta[2]);
  if (!(nx >= 1) || !(ns >= 1) || nx != std::floor(nx) || ns != std::floor(ns))
    throw std::invalid_argument("field file: N_x and N_s must be positive integers");
  f.N_x = static_cast<std::size_t>(nx);
  f.N_s = static_cast<std::size_t>(ns);
  f.ds = parse_double(meta[3]);
  const std::size_t rows = f.kind == FieldKind::eps ? f.N_s + 1 : f.N_s;
  const std::size_t cols = f.kind == FieldKind::eps ? f.N_x : f.N_x + 1;
  f.values = Grid2(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(is, line))
      throw std::invalid_argument("field file: expected " +
                                  std::to_string(rows) + " value rows");
    const auto cells = split_csv_line(line);
    if (cells.size() != cols)
      throw std::invalid_argument("field file: row " + std::to_string(r) +
                                  " has " + std::to_string(cells.size()) +
                                  " values, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c)
      f.values(r, c) = parse_double(cells[c]);
  }
  return f;
}

inline SpaceTimeField field_from_files(const FieldFile &eps, const FieldFile &j,
                                       Reservoirs res) {
  if (eps.kind != FieldKind::eps || j.kind != FieldKind::j)
    throw std::invalid_argument("field files: need one eps and one j file");
  if (eps.N_x != j.N_x || eps.N_s != j.N_s || eps.ds != j.ds)
    throw std::invalid_argument("field files: eps and j grids disagree");
  return SpaceTimeField(eps.values, j.values, eps.ds, res);
}

inline nlohmann::ordered_json action_report_json(const ActionReport &r) {
  nlohmann::ordered_json j;
  if (r.conservative)
    j["value"] = r.value;
  else
    j["value"] = "inf";
  j["conservation_residual"] = r.conservation_residual;
  j["plateau_active_fraction"] = r.plateau_active_fraction;
  j["iterations"] = r.iterations;
  return j;
}

} // namespace aerogel
