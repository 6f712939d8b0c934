#pragma once

// Observables built on trajectories: residual against the RWA baseline,
// least-squares tone fits, windowed spectra and the pi/2 observation-time
// scan.

#include <algorithm>
#include <cstdint>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <boost/math/tools/roots.hpp>

#include "bsosim/analytic.hpp"
#include "bsosim/model.hpp"
#include "bsosim/semiclassical.hpp"

namespace bsosim {

struct ResidualSeries {
  TimeSeries series;
  DriveField field;
  double A0 = 0.0;
};

inline TimeSeries residual(const TimeSeries& numeric, const TimeSeries& rwa) {
  if (numeric.size() != rwa.size())
    throw std::invalid_argument("residual: time grids differ in length");
  TimeSeries out{numeric.t, std::vector<double>(numeric.size())};
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double scale = std::max(1.0, std::abs(numeric.t[i]));
    if (std::abs(numeric.t[i] - rwa.t[i]) > 1e-12 * scale)
      throw std::invalid_argument("residual: time grids differ");
    out.y[i] = numeric.y[i] - rwa.y[i];
  }
  return out;
}

/// Excited-state population difference numeric - rwa on a shared grid.
template <int N>
ResidualSeries bso_residual(const Trajectory<N>& numeric,
                            const Trajectory<N>& rwa, int level = 1,
                            const DriveField& field = {}, double A0 = 0.0) {
  return ResidualSeries{residual(numeric.population_series(level),
                                 rwa.population_series(level)),
                        field, A0};
}

// ---------------------------------------------------------------------------
// Tone fitting

namespace detail {

inline void require_window(const TimeSeries& s, double freq,
                           double min_periods) {
  if (!(freq > 0.0)) throw std::domain_error("tone frequency must be > 0");
  const double periods = s.span() * freq / (2.0 * pi);
  if (s.size() < 4 || periods < min_periods - 1e-9)
    throw std::invalid_argument("window too short for the requested tone");
}

}  // namespace detail

/// Joint least-squares fit  y ~ c + sum_k A_k sin(f_k t + theta_k).
/// Every tone must complete at least min_periods cycles in the window.
inline std::vector<SpectralPeak> fit_tones(const TimeSeries& s,
                                           const std::vector<double>& freqs,
                                           double min_periods = 1.0) {
  s.validate();
  if (freqs.empty()) return {};
  for (double f : freqs) detail::require_window(s, f, min_periods);
  const auto n = static_cast<Eigen::Index>(s.size());
  const auto m = static_cast<Eigen::Index>(2 * freqs.size() + 1);
  Eigen::MatrixXd M(n, m);
  Eigen::VectorXd y(n);
  // Centre the time origin for conditioning; phases are shifted back below.
  const double t0 = s.t.front();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = s.t[static_cast<std::size_t>(i)] - t0;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      M(i, static_cast<Eigen::Index>(2 * k)) = std::sin(freqs[k] * t);
      M(i, static_cast<Eigen::Index>(2 * k + 1)) = std::cos(freqs[k] * t);
    }
    M(i, m - 1) = 1.0;
    y(i) = s.y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = M.colPivHouseholderQr().solve(y);
  std::vector<SpectralPeak> out;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const double sc = c(static_cast<Eigen::Index>(2 * k));
    const double cc = c(static_cast<Eigen::Index>(2 * k + 1));
    SpectralPeak p;
    p.freq = freqs[k];
    p.amplitude = std::hypot(sc, cc);
    p.phase = wrap_phase(std::atan2(cc, sc) - freqs[k] * t0);
    out.push_back(p);
  }
  return out;
}

/// Lock-in style amplitude and phase of A sin(freq t + theta) (with a free
/// offset) over the whole series. Needs at least 3 periods of freq.
inline SpectralPeak demodulate(const TimeSeries& s, double freq) {
  return fit_tones(s, {freq}, 3.0).front();
}

/// Sum of fitted amplitudes at carrier and carrier +- rabi: the envelope of
/// a carrier modulated by a Rabi oscillation.
inline double band_amplitude(const TimeSeries& s, double carrier,
                             double rabi) {
  std::vector<double> freqs;
  for (double f : {carrier - rabi, carrier, carrier + rabi}) {
    if (f <= 0.0) continue;
    bool dup = false;
    for (double g : freqs) dup = dup || std::abs(f - g) < 1e-9 * carrier;
    if (!dup) freqs.push_back(f);
  }
  double sum = 0.0;
  for (const auto& p : fit_tones(s, freqs)) sum += p.amplitude;
  return sum;
}

// ---------------------------------------------------------------------------
// Spectrum

struct SpectrumOptions {
  double noise_floor_factor = 10.0;
  int zero_pad = 4;
};

struct Spectrum {
  std::vector<double> freq;   // rad/time
  std::vector<double> power;  // |X_k|^2 of the Hann-windowed series
  double floor = 0.0;         // median bin power
  std::vector<SpectralPeak> peaks;

  // Power ratio of the strongest local maximum within +-tol of f to the
  // median floor; 0 when none.
  double peak_ratio(double f, double tol) const {
    double r = 0.0;
    for (std::size_t k = 1; k + 1 < power.size(); ++k) {
      if (std::abs(freq[k] - f) > tol) continue;
      if (power[k] >= power[k - 1] && power[k] >= power[k + 1])
        r = std::max(r, power[k] / floor);
    }
    return r;
  }
  bool has_peak(double f, double tol) const {
    for (const auto& p : peaks)
      if (std::abs(p.freq - f) <= tol) return true;
    return false;
  }
  double bin_width() const { return freq.size() > 1 ? freq[1] - freq[0] : 0.0; }
};

namespace detail {

// Hann kernel magnitude relative to its peak at an offset of d bins.
inline double hann_gain(double d) {
  if (std::abs(d) < 1e-12) return 1.0;
  if (std::abs(std::abs(d) - 1.0) < 1e-12) return 0.5;
  return std::sin(pi * d) / (pi * d * (1.0 - d * d));
}

}  // namespace detail

/// Hann-windowed DFT of the mean-removed series. Peaks are local maxima
/// above noise_floor_factor * median bin power, refined by a parabola
/// through the log power of the peak bin and its neighbours.
inline Spectrum spectrum(const TimeSeries& s, const SpectrumOptions& opt = {}) {
  s.validate();
  if (s.size() < 64) throw std::invalid_argument("spectrum: need >= 64 samples");
  if (!s.uniform()) throw std::invalid_argument("spectrum: non-uniform grid");
  const std::size_t n = s.size();
  const std::size_t pad = static_cast<std::size_t>(std::max(1, opt.zero_pad));
  const double dt = s.span() / static_cast<double>(n - 1);

  double mean = 0.0;
  for (double v : s.y) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> x(n * pad, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w =
        0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) /
                             static_cast<double>(n - 1));
    x[i] = w * (s.y[i] - mean);
    wsum += w;
  }
  Eigen::FFT<double> fft;
  std::vector<cplx> X;
  fft.fwd(X, x);

  Spectrum sp;
  const std::size_t nbins = n * pad / 2 + 1;
  const double df = 2.0 * pi / (dt * static_cast<double>(n * pad));
  sp.freq.resize(nbins);
  sp.power.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    sp.freq[k] = df * static_cast<double>(k);
    sp.power[k] = std::norm(X[k]);
  }
  std::vector<double> sorted = sp.power;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(nbins / 2),
                   sorted.end());
  sp.floor = sorted[nbins / 2];

  const double thresh = opt.noise_floor_factor * sp.floor;
  for (std::size_t k = 1; k + 1 < nbins; ++k) {
    const double p = sp.power[k];
    if (!(p > thresh) || p < sp.power[k - 1] || p < sp.power[k + 1]) continue;
    const double lm = std::log(std::max(sp.power[k - 1], 1e-300));
    const double l0 = std::log(p);
    const double lp = std::log(std::max(sp.power[k + 1], 1e-300));
    const double den = lm - 2.0 * l0 + lp;
    double d = den != 0.0 ? 0.5 * (lm - lp) / den : 0.0;
    d = std::clamp(d, -0.5, 0.5);
    const double d_bins = d / static_cast<double>(pad);
    SpectralPeak pk;
    pk.freq = df * (static_cast<double>(k) + d);
    pk.amplitude =
        2.0 * std::abs(X[k]) / wsum / std::abs(detail::hann_gain(d_bins));
    pk.phase = wrap_phase(std::arg(X[k]) + 0.5 * pi);
    sp.peaks.push_back(pk);
  }
  return sp;
}

// ---------------------------------------------------------------------------
// pi/2 observation-time scan

struct ScanOptions {
  IntegratorOptions integrator;
  int steps_per_cycle = 40;
  // Points whose required g0M exceeds this multiple of omega are marked
  // unreachable.
  double max_drive_ratio = 2.0;
  unsigned jobs = 1;
};

struct ScanPoint {
  double tau = 0.0;
  double g0M = 0.0;
  bool ok = false;
  double gbso = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  SpectralPeak tone_2w, tone_4w, tone_1w;  // NaN amplitude when unavailable
};

struct GbsoScan {
  std::vector<ScanPoint> points;
  DriveField field_template;

  // Successful points only.
  TimeSeries gbso_series() const {
    TimeSeries s;
    for (const auto& p : points)
      if (p.ok) {
        s.t.push_back(p.tau);
        s.y.push_back(p.gbso);
      }
    return s;
  }
};

namespace detail {

inline SpectralPeak tail_tone(const TimeSeries& res, double freq) {
  SpectralPeak nan_peak{freq, std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN()};
  // A quarter period of margin so the sampled window still covers 3 periods.
  const double window = 3.25 * 2.0 * pi / freq;
  if (res.span() < window) return nan_peak;
  return demodulate(res.window(res.t.back() - window, res.t.back()), freq);
}

inline ScanPoint scan_point(const DriveField& tmpl, double tau,
                            const ScanOptions& opt) {
  ScanPoint p;
  p.tau = tau;
  if (!(tau > 0.0)) return p;
  p.g0M = pi_half_g0M(tmpl.tau_sw, tau);
  if (!(p.g0M <= opt.max_drive_ratio * tmpl.omega)) return p;
  DriveField f = tmpl;
  f.g0M = p.g0M;
  const double dt = max_step(f, opt.steps_per_cycle);
  const auto num = evolve_two_level_dc(f, TwoLevelState::basis(0), tau, dt,
                                       opt.integrator);
  const auto rwa =
      rwa_reference(f, TwoLevelState::basis(0), tau, dt, opt.integrator);
  const auto res = residual(num.population_series(1), rwa.population_series(1));
  p.ok = true;
  p.gbso = num.states.back().population(1) - 0.5;
  p.residual = res.y.back();
  p.tone_2w = tail_tone(res, 2.0 * f.omega);
  p.tone_4w = tail_tone(res, 4.0 * f.omega);
  if (f.g_dc != 0.0) p.tone_1w = tail_tone(res, f.omega);
  else p.tone_1w = {f.omega, std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN()};
  return p;
}

}  // namespace detail

/// For each tau, rescales g0M so the pulse area at tau is pi/2, runs the
/// full and RWA evolutions, and records GBSO(tau) = pop1(tau) - 1/2.
inline GbsoScan gbso_scan(const DriveField& tmpl,
                          const std::vector<double>& tau_grid,
                          const ScanOptions& opt = {}) {
  tmpl.validate();
  GbsoScan scan;
  scan.field_template = tmpl;
  scan.points.resize(tau_grid.size());
  const unsigned jobs = std::max(1u, opt.jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tau_grid.size(); i = next++)
      scan.points[i] = detail::scan_point(tmpl, tau_grid[i], opt);
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return scan;
}

/// Observation time at which the pi/2-rescaled drive equals ratio * omega.
/// pi_half_g0M falls monotonically with tau, so the root is unique.
inline double tau_for_drive_ratio(double omega, double tau_sw, double ratio) {
  if (!(omega > 0.0) || !(ratio > 0.0))
    throw std::domain_error("tau_for_drive_ratio: omega and ratio must be > 0");
  const double target = ratio * omega;
  auto fn = [&](double tau) { return pi_half_g0M(tau_sw, tau) - target; };
  double hi = 0.5 * pi / target + tau_sw + 1.0;
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(fn, 1e-9 * hi, hi, tol, iters);
  return 0.5 * (a + b);
}

/// Uniform tau grid [lo, hi] with the given spacing.
inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo))
    throw std::invalid_argument("uniform_grid: bad bounds");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
  return g;
}

/// Harmonic-analysis grid: starts where the rescaled drive is ratio * omega,
/// spans `periods` cycles of 2 omega, `per_period` samples per cycle
/// (8 puts Nyquist at 8 omega, twice the 4 omega harmonic).
inline std::vector<double> harmonic_scan_grid(double omega, double tau_sw,
                                              double ratio, int periods = 32,
                                              int per_period = 8) {
  const double t0 = tau_for_drive_ratio(omega, tau_sw, ratio);
  const double P = pi / omega;
  std::vector<double> g(static_cast<std::size_t>(periods * per_period));
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = t0 + P * static_cast<double>(i) / per_period;
  return g;
}

}  // namespace bsosim
