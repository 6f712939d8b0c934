#pragma once

// Scenario runner: turns a validated config into CSV files and a flat
// numeric summary. Used by the command-line tool and by the tests.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bsosim/analytic.hpp"
#include "bsosim/composite.hpp"
#include "bsosim/config.hpp"
#include "bsosim/csv.hpp"
#include "bsosim/floquet.hpp"
#include "bsosim/semiclassical.hpp"
#include "bsosim/signal.hpp"

namespace bsosim {

struct RunResult {
  std::map<std::string, double> summary;
  std::vector<std::string> files;  // relative to the output directory
  std::vector<std::string> warnings;
};

namespace detail {

class OutputDir {
 public:
  OutputDir(std::filesystem::path root, RunResult& r)
      : root_(std::move(root)), result_(r) {
    std::filesystem::create_directories(root_);
  }
  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    std::ofstream os(root_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (root_ / name).string());
    fn(os);
    result_.files.push_back(name);
  }

 private:
  std::filesystem::path root_;
  RunResult& result_;
};

inline double resolve_end(const ScenarioConfig& c, const DriveField& f) {
  switch (c.t_end.kind) {
    case EndTime::pi_half: return pi_half_time(f);
    case EndTime::rabi_periods: return time_for_area(f, 2.0 * pi * c.t_end.value);
    case EndTime::fixed: break;
  }
  return c.t_end.value;
}

// Step to use: the configured one, checked against the model bound.
inline double resolve_dt(const ScenarioConfig& c, double dt_max) {
  if (!c.dt) return dt_max;
  try {
    check_step(*c.dt, dt_max);
  } catch (const CoarseStepError& e) {
    throw ConfigError("dt", e.what());
  }
  return *c.dt;
}

// Amplitude of a tone over the trailing 3.25 periods, if they fit.
inline void trailing_tone(const TimeSeries& s, double freq,
                          const std::string& tag,
                          std::map<std::string, double>& out) {
  const double window = 3.25 * 2.0 * pi / freq;
  if (s.span() < window) return;
  const auto p = demodulate(s.window(s.t.back() - window, s.t.back()), freq);
  out["amp_" + tag] = p.amplitude;
  out["phase_" + tag] = p.phase;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline void run_rabi(const ScenarioConfig& c, OutputDir& out, RunResult& r) {
  const DriveField& f = c.field;
  IntegratorOptions io;
  io.steps_per_cycle = c.steps_per_cycle;
  const double t_end = resolve_end(c, f);
  const double dt = resolve_dt(c, max_step(f, c.steps_per_cycle));
  const auto init = TwoLevelState::basis(c.init_level);
  const auto num = evolve_two_level_dc(f, init, t_end, dt, io);
  const auto rwa = rwa_reference(f, init, t_end, dt, io);
  const TimeSeries res = residual(num.population_series(1), rwa.population_series(1));

  out.write("trajectory.csv", [&](std::ostream& os) { csv::write_trajectory(os, to_lab(f, num)); });
  out.write("rwa.csv", [&](std::ostream& os) { csv::write_trajectory(os, to_lab(f, rwa)); });
  out.write("residual.csv", [&](std::ostream& os) { csv::write_residual(os, res); });

  auto& s = r.summary;
  s["t_end"] = t_end;
  s["dt"] = dt;
  s["eta"] = f.eta();
  s["pop1_end"] = num.states.back().population(1);
  s["rwa_pop1_end"] = rwa.states.back().population(1);
  s["residual_end"] = res.y.back();
  s["residual_max"] = max_abs(res.y);
  s["norm_drift"] = num.max_norm_drift();
  trailing_tone(res, 2.0 * f.omega, "2w", s);
  if (f.g_dc != 0.0) trailing_tone(res, f.omega, "1w", s);

  if (c.ladder_order) {
    const int N = *c.ladder_order;
    const double dtl = resolve_dt(c, max_step_ladder(f, N, c.steps_per_cycle));
    const auto lad = evolve_ladder(f, N, init, t_end, dtl, io);
    out.write("ladder.csv", [&](std::ostream& os) { csv::write_ladder(os, lad); });
    s["ladder_weight_end"] = lad.back().weight();
  }
}

inline void run_analytic(const ScenarioConfig& c, OutputDir& out, RunResult& r) {
  const DriveField& f = c.field;
  const double t_end = resolve_end(c, f);
  const double dt = resolve_dt(c, max_step(f, c.steps_per_cycle));
  const StepGrid grid = StepGrid::cover(t_end, dt);
  TwoLevelTrajectory tr;
  tr.frame = Frame::lab;
  for (std::size_t k = 0; k <= grid.steps; ++k) {
    const double t = grid.time(k);
    tr.times.push_back(t);
    tr.states.push_back(amplitudes_adiabatic(f, t));
  }
  out.write("trajectory.csv", [&](std::ostream& os) { csv::write_trajectory(os, tr); });
  r.summary["t_end"] = t_end;
  r.summary["eta"] = f.eta();
  r.summary["pop1_end"] = tr.states.back().population(1);
}

inline void run_arbitrary_init(const ScenarioConfig& c, OutputDir& out,
                               RunResult& r) {
  const DriveField& f = c.field;
  IntegratorOptions io;
  io.steps_per_cycle = c.steps_per_cycle;
  const double t_end = resolve_end(c, f);
  const double dt = resolve_dt(c, max_step(f, c.steps_per_cycle));
  const TimeSeries num = excited_population_mixed(f, c.A0, t_end, dt, false, io);
  const TimeSeries rwa = excited_population_mixed(f, c.A0, t_end, dt, true, io);
  const TimeSeries res = residual(num, rwa);
  std::vector<double> analytic;
  double err2 = 0.0, ref2 = 0.0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    analytic.push_back(bso_term(f, c.A0, res.t[k]));
    err2 += (res.y[k] - analytic.back()) * (res.y[k] - analytic.back());
    ref2 += analytic.back() * analytic.back();
  }
  out.write("residual.csv", [&](std::ostream& os) { csv::write_residual(os, res, &analytic); });
  r.summary["t_end"] = t_end;
  r.summary["A0"] = c.A0;
  r.summary["eta"] = f.eta();
  r.summary["residual_max"] = max_abs(res.y);
  r.summary["relative_rms"] = ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2);
}

inline std::vector<double> resolve_tau_grid(const TauGrid& g, const DriveField& f) {
  if (!g.values.empty()) return g.values;
  if (g.ratio)
    return harmonic_scan_grid(f.omega, f.tau_sw, *g.ratio, g.periods, g.per_period);
  return uniform_grid(*g.lo, *g.hi, *g.step);
}

inline void run_gbso_scan(const ScenarioConfig& c, OutputDir& out, RunResult& r) {
  const DriveField& f = c.field;
  ScanOptions so;
  so.steps_per_cycle = c.steps_per_cycle;
  so.integrator.steps_per_cycle = c.steps_per_cycle;
  so.jobs = c.jobs;
  const auto grid = resolve_tau_grid(*c.tau_grid, f);
  const GbsoScan scan = gbso_scan(f, grid, so);
  const bool dc = f.g_dc != 0.0;
  out.write("scan.csv", [&](std::ostream& os) { csv::write_scan(os, scan, dc); });

  auto& s = r.summary;
  std::size_t ok = 0;
  for (const auto& p : scan.points) ok += p.ok ? 1 : 0;
  s["points"] = static_cast<double>(scan.points.size());
  s["reachable_points"] = static_cast<double>(ok);
  if (ok < scan.points.size())
    r.warnings.push_back("some tau points need g0M above the reachable limit; marked nan");
  const TimeSeries series = scan.gbso_series();
  if (series.size() >= 64 && series.uniform()) {
    const Spectrum sp = spectrum(series);
    out.write("spectrum.csv", [&](std::ostream& os) { csv::write_spectrum(os, sp); });
    const double tol = 1.5 * 2.0 * pi / series.span();
    s["floor"] = sp.floor;
    s["peak_ratio_2w"] = sp.peak_ratio(2.0 * f.omega, tol);
    s["peak_ratio_4w"] = sp.peak_ratio(4.0 * f.omega, tol);
    if (dc) s["peak_ratio_1w"] = sp.peak_ratio(f.omega, tol);
  } else {
    r.warnings.push_back("spectrum skipped: needs >= 64 uniform reachable points");
  }
}

inline void run_lambda(const ScenarioConfig& c, OutputDir& out, RunResult& r) {
  const LambdaConfig& cfg = c.lambda->cfg;
  LambdaOptions lo;
  lo.steps_per_cycle = c.steps_per_cycle;
  lo.cross_coupling = c.lambda->cross_coupling;
  const double t_end = c.t_end.value;
  const double dt = resolve_dt(c, max_step(cfg, c.steps_per_cycle));
  const auto init = ThreeLevelState::basis(c.init_level);
  const auto num = evolve_lambda(cfg, init, t_end, dt, lo);
  lo.rwa = true;
  const auto rwa = evolve_lambda(cfg, init, t_end, dt, lo);
  const TimeSeries res = residual(num.population_series(2), rwa.population_series(2));
  out.write("trajectory.csv", [&](std::ostream& os) { csv::write_trajectory(os, num); });
  out.write("rwa.csv", [&](std::ostream& os) { csv::write_trajectory(os, rwa); });
  out.write("residual.csv", [&](std::ostream& os) { csv::write_residual(os, res); });
  r.warnings.insert(r.warnings.end(), num.warnings.begin(), num.warnings.end());
  auto& s = r.summary;
  s["t_end"] = t_end;
  s["dt"] = dt;
  s["raman_rabi"] = cfg.raman_rabi();
  s["pop2_end"] = num.states.back().population(2);
  s["pop1_max"] = max_abs(num.populations(1));
  s["residual_max"] = max_abs(res.y);
  s["norm_drift"] = num.max_norm_drift();
}

inline void run_composite(const ScenarioConfig& c, OutputDir& out, RunResult& r) {
  const CompositeParams& p = *c.composite;
  const DriveField& f = c.field;
  const FockWindow w = FockWindow::around(p.alpha2, p.k);
  const SparseH H = build_2L_hamiltonian(p.g, f.omega, f.transition(), w);
  FockComposite init;
  try {
    init = coherent_composite(2, c.init_level, std::sqrt(p.alpha2), w);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("composite.k", e.what());
  }
  const double t_end = resolve_end(c, f);
  const double dt = resolve_dt(
      c, std::min(composite_step(H), max_step(f, c.steps_per_cycle)));
  const PopulationSeries ps = evolve_composite(H, init, t_end, dt);

  IntegratorOptions io;
  io.steps_per_cycle = c.steps_per_cycle;
  const auto sc = evolve_two_level(f, TwoLevelState::basis(c.init_level), t_end, dt, io);
  const auto rwa = rwa_reference(f, TwoLevelState::basis(c.init_level), t_end, dt, io);
  const TimeSeries res = residual(ps.series(1), rwa.population_series(1));

  out.write("populations.csv", [&](std::ostream& os) { csv::write_populations(os, ps); });
  out.write("semiclassical.csv", [&](std::ostream& os) { csv::write_trajectory(os, to_lab(f, sc)); });
  out.write("residual.csv", [&](std::ostream& os) { csv::write_residual(os, res); });
  if (p.export_hamiltonian)
    out.write("hamiltonian.csv", [&](std::ostream& os) { csv::write_triplets(os, H); });

  auto& s = r.summary;
  double dev = 0.0;
  for (std::size_t k = 0; k < ps.t.size(); ++k)
    dev = std::max(dev, std::abs(ps.pop[1][k] - sc.states[k].population(1)));
  s["t_end"] = t_end;
  s["dt"] = dt;
  s["dim"] = static_cast<double>(init.dim());
  s["g_eff"] = f.g0M;
  s["eta"] = f.eta();
  s["max_deviation"] = dev;
  s["norm_drift"] = ps.max_norm_drift();
  s["max_leakage"] = ps.max_leakage();
  if (f.g0M > 0.0) {
    // 2 omega component around the pi/2 point, where it is largest.
    const double tq = pi_half_time(f);
    const double half = 1.75 * pi / f.omega;
    if (tq - half >= 0.0 && tq + half <= t_end) {
      const auto pk = demodulate(res.window(tq - half, tq + half), 2.0 * f.omega);
      s["amp_2w"] = pk.amplitude;
    }
  }
}

inline void run_raman(const ScenarioConfig& c, OutputDir& out, RunResult& r) {
  const RamanParams& p = *c.raman;
  struct Row {
    double ratio;
    LambdaConfig cfg;
    RamanReport rep;
  };
  std::vector<Row> rows;
  RamanOptions ro;
  ro.steps_per_cycle = c.steps_per_cycle;
  for (double k : p.omega_ratios) {
    const LambdaConfig cfg = raman_config(k * p.delta_omega, p.delta_omega, p.rabi, p.kappa);
    DriveField direct;
    direct.omega = p.delta_omega;
    direct.g0M = p.rabi;
    rows.push_back({k, cfg, raman_bso_compare(cfg, direct, ro)});
    for (const auto& w : rows.back().rep.warnings)
      r.warnings.push_back("omega/delta_omega = " + csv::num(k) + ": " + w);
  }
  out.write("raman.csv", [&](std::ostream& os) {
    csv::Writer w(os);
    w.header({"omega_ratio", "g", "delta", "raman_bso_amp", "direct_bso_amp", "ratio"});
    for (const auto& row : rows)
      w.row({row.ratio, row.cfg.g, row.cfg.delta, row.rep.raman_bso_amp,
             row.rep.direct_bso_amp, row.rep.ratio});
  });
  bool mono = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    mono = mono && (rows[i].ratio > rows[i - 1].ratio
                        ? rows[i].rep.raman_bso_amp < rows[i - 1].rep.raman_bso_amp
                        : true);
  r.summary["monotonic"] = mono ? 1.0 : 0.0;
  r.summary["direct_bso_amp"] = rows.front().rep.direct_bso_amp;
  r.summary["ratio_last"] = rows.back().rep.ratio;
}

}  // namespace detail

/// Checks that the configured step resolves the model before any run.
inline void preflight(const ScenarioConfig& c) {
  try {
    switch (c.scenario) {
      case Scenario::lambda: c.lambda->cfg.validate(); break;
      case Scenario::raman_compare: break;
      default: c.field.validate(); break;
    }
  } catch (const std::domain_error& e) {
    throw ConfigError("", e.what());
  }
  if (!c.dt) return;
  switch (c.scenario) {
    case Scenario::lambda:
      detail::resolve_dt(c, max_step(c.lambda->cfg, c.steps_per_cycle));
      break;
    case Scenario::raman_compare:
      throw ConfigError("dt", "raman_compare chooses its own steps; remove dt");
    default:
      detail::resolve_dt(c, max_step(c.field, c.steps_per_cycle));
      if (c.ladder_order)
        detail::resolve_dt(c, max_step_ladder(c.field, *c.ladder_order, c.steps_per_cycle));
      break;
  }
}

/// Runs the scenario and writes its CSVs into out_dir.
inline RunResult run_scenario(const ScenarioConfig& c,
                              const std::filesystem::path& out_dir) {
  preflight(c);
  RunResult r;
  detail::OutputDir out(out_dir, r);
  switch (c.scenario) {
    case Scenario::rabi:
    case Scenario::rabi_dc: detail::run_rabi(c, out, r); break;
    case Scenario::analytic: detail::run_analytic(c, out, r); break;
    case Scenario::arbitrary_init: detail::run_arbitrary_init(c, out, r); break;
    case Scenario::gbso_scan: detail::run_gbso_scan(c, out, r); break;
    case Scenario::lambda: detail::run_lambda(c, out, r); break;
    case Scenario::composite_2l: detail::run_composite(c, out, r); break;
    case Scenario::raman_compare: detail::run_raman(c, out, r); break;
  }
  return r;
}

}  // namespace bsosim
