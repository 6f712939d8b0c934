#pragma once

// Quantized-field models: atom levels tensored with one or two truncated
// photon-number windows, evolved with a Lanczos short-time propagator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bsosim/model.hpp"
#include "bsosim/semiclassical.hpp"
#include "bsosim/signal.hpp"

namespace bsosim {

using SparseH = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Photon-number window [lo, hi] (inclusive).
struct FockWindow {
  int lo = 0;
  int hi = 0;

  int size() const { return hi - lo + 1; }
  void validate() const {
    if (lo < 0 || hi < lo) throw std::invalid_argument("invalid photon window");
  }
  static FockWindow around(double mean_n, double k = 7.0) {
    const double spread = k * std::sqrt(mean_n);
    FockWindow w;
    w.lo = std::max(0, static_cast<int>(std::floor(mean_n - spread)));
    w.hi = std::max(w.lo + 1, static_cast<int>(std::ceil(mean_n + spread)));
    return w;
  }
};

/// Joint atom (x) photon amplitudes. With one mode the index is
/// level * N1 + (n - lo1); with two it is level * N1 * N2 + (n - lo1) * N2 + (m - lo2).
struct FockComposite {
  int levels = 2;
  std::vector<FockWindow> modes;
  Eigen::VectorXcd amps;

  FockComposite() = default;
  FockComposite(int levels_, std::vector<FockWindow> modes_)
      : levels(levels_), modes(std::move(modes_)) {
    if (levels != 2 && levels != 3)
      throw std::invalid_argument("composite: levels must be 2 or 3");
    if (modes.empty() || modes.size() > 2)
      throw std::invalid_argument("composite: one or two photon modes");
    for (const auto& w : modes) w.validate();
    amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim()));
  }

  std::size_t photon_states() const {
    std::size_t n = 1;
    for (const auto& w : modes) n *= static_cast<std::size_t>(w.size());
    return n;
  }
  std::size_t dim() const { return photon_states() * static_cast<std::size_t>(levels); }

  std::size_t index(int level, int n, int m = 0) const {
    if (level < 0 || level >= levels)
      throw std::out_of_range("composite: atomic level");
    const auto& w1 = modes[0];
    if (n < w1.lo || n > w1.hi) throw std::out_of_range("composite: photon n");
    std::size_t i = static_cast<std::size_t>(n - w1.lo);
    if (modes.size() == 2) {
      const auto& w2 = modes[1];
      if (m < w2.lo || m > w2.hi) throw std::out_of_range("composite: photon m");
      i = i * static_cast<std::size_t>(w2.size()) +
          static_cast<std::size_t>(m - w2.lo);
    }
    return static_cast<std::size_t>(level) * photon_states() + i;
  }

  double population(int level, const Eigen::VectorXcd& v) const {
    const auto block = static_cast<Eigen::Index>(photon_states());
    return v.segment(level * block, block).squaredNorm();
  }

  /// Probability in the outermost shells of each window. A lower edge at
  /// n = 0 is physical and does not count.
  double leakage(const Eigen::VectorXcd& v) const {
    double p = 0.0;
    const std::size_t ps = photon_states();
    for (int l = 0; l < levels; ++l)
      for (std::size_t k = 0; k < ps; ++k) {
        int n, m = 0;
        if (modes.size() == 2) {
          const auto n2 = static_cast<std::size_t>(modes[1].size());
          n = modes[0].lo + static_cast<int>(k / n2);
          m = modes[1].lo + static_cast<int>(k % n2);
        } else {
          n = modes[0].lo + static_cast<int>(k);
        }
        bool edge = (n == modes[0].hi) || (n == modes[0].lo && n > 0);
        if (modes.size() == 2)
          edge = edge || (m == modes[1].hi) || (m == modes[1].lo && m > 0);
        if (edge)
          p += std::norm(v(static_cast<Eigen::Index>(
              static_cast<std::size_t>(l) * ps + k)));
      }
    return p;
  }
};

/// Coherent-state amplitudes e^{-|a|^2/2} a^n / sqrt(n!) over [lo, hi],
/// renormalized. Throws if the window misses more than 1e-9 of the weight.
inline Eigen::VectorXcd coherent_amplitudes(cplx alpha, const FockWindow& w) {
  w.validate();
  const double r = std::abs(alpha);
  const double arg = std::arg(alpha);
  Eigen::VectorXcd c(w.size());
  double captured = 0.0;
  for (int n = w.lo; n <= w.hi; ++n) {
    double mag;
    if (r == 0.0) {
      mag = n == 0 ? 1.0 : 0.0;
    } else {
      const double logm = -0.5 * r * r + n * std::log(r) -
                          0.5 * std::lgamma(static_cast<double>(n) + 1.0);
      mag = std::exp(logm);
    }
    c(n - w.lo) = std::polar(mag, n * arg);
    captured += mag * mag;
  }
  if (captured < 1.0 - 1e-9) {
    std::ostringstream msg;
    msg << "coherent_amplitudes: window [" << w.lo << ", " << w.hi
        << "] misses " << 1.0 - captured
        << " of the photon distribution (limit 1e-9); widen it";
    throw std::invalid_argument(msg.str());
  }
  return c / std::sqrt(captured);
}

/// Atom in `level`, field in a coherent state.
inline FockComposite coherent_composite(int levels, int level, cplx alpha,
                                        const FockWindow& w) {
  FockComposite s(levels, {w});
  const Eigen::VectorXcd c = coherent_amplitudes(alpha, w);
  for (int n = w.lo; n <= w.hi; ++n)
    s.amps(static_cast<Eigen::Index>(s.index(level, n))) = c(n - w.lo);
  return s;
}

/// Atom in `level`, modes in coherent states alpha1 and alpha2.
inline FockComposite coherent_composite(int level, cplx alpha1,
                                        const FockWindow& w1, cplx alpha2,
                                        const FockWindow& w2) {
  FockComposite s(3, {w1, w2});
  const Eigen::VectorXcd c1 = coherent_amplitudes(alpha1, w1);
  const Eigen::VectorXcd c2 = coherent_amplitudes(alpha2, w2);
  for (int n = w1.lo; n <= w1.hi; ++n)
    for (int m = w2.lo; m <= w2.hi; ++m)
      s.amps(static_cast<Eigen::Index>(s.index(level, n, m))) =
          c1(n - w1.lo) * c2(m - w2.lo);
  return s;
}

/// H = omega n + atom_freq S11 + g (S01 + S10)(a + a^dagger).
inline SparseH build_2L_hamiltonian(double g, double omega, double atom_freq,
                                    const FockWindow& w) {
  w.validate();
  const FockComposite layout(2, {w});
  std::vector<Eigen::Triplet<cplx>> trip;
  auto put = [&](std::size_t r, std::size_t c, double v) {
    trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v);
  };
  for (int n = w.lo; n <= w.hi; ++n) {
    put(layout.index(0, n), layout.index(0, n), omega * n);
    put(layout.index(1, n), layout.index(1, n), omega * n + atom_freq);
    if (g == 0.0) continue;
    // |0,n> -> |1,n-1> (co-rotating) and |1,n+1> (counter-rotating)
    for (int np : {n - 1, n + 1}) {
      if (np < w.lo || np > w.hi) continue;
      const double me = g * std::sqrt(static_cast<double>(std::max(n, np)));
      put(layout.index(1, np), layout.index(0, n), me);
      put(layout.index(0, n), layout.index(1, np), me);
    }
  }
  SparseH H(static_cast<Eigen::Index>(layout.dim()),
            static_cast<Eigen::Index>(layout.dim()));
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

/// Two-mode lambda operator: mode 1 (frequency nu1) drives 0<->1, mode 2
/// (nu2) drives 1<->2; level energies 0, omega01, omega01 - omega12. There
/// is no term connecting 0 and 2.
inline SparseH build_3L_hamiltonian(const LambdaConfig& cfg,
                                    const FockWindow& w1,
                                    const FockWindow& w2) {
  cfg.validate();
  const FockComposite layout(3, {w1, w2});
  const double e[3] = {0.0, cfg.omega01, cfg.omega01 - cfg.omega12};
  const double nu1 = cfg.nu1(), nu2 = cfg.nu2();
  std::vector<Eigen::Triplet<cplx>> trip;
  auto put = [&](std::size_t r, std::size_t c, double v) {
    trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v);
  };
  for (int n = w1.lo; n <= w1.hi; ++n)
    for (int m = w2.lo; m <= w2.hi; ++m) {
      for (int l = 0; l < 3; ++l)
        put(layout.index(l, n, m), layout.index(l, n, m),
            e[l] + nu1 * n + nu2 * m);
      if (cfg.g == 0.0) continue;
      for (int np : {n - 1, n + 1}) {
        if (np < w1.lo || np > w1.hi) continue;
        const double me = cfg.g * std::sqrt(static_cast<double>(std::max(n, np)));
        put(layout.index(1, np, m), layout.index(0, n, m), me);
        put(layout.index(0, n, m), layout.index(1, np, m), me);
      }
      for (int mp : {m - 1, m + 1}) {
        if (mp < w2.lo || mp > w2.hi) continue;
        const double me = cfg.g * std::sqrt(static_cast<double>(std::max(m, mp)));
        put(layout.index(2, n, mp), layout.index(1, n, m), me);
        put(layout.index(1, n, m), layout.index(2, n, mp), me);
      }
    }
  SparseH H(static_cast<Eigen::Index>(layout.dim()),
            static_cast<Eigen::Index>(layout.dim()));
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

/// Largest |H - H^dagger| entry.
inline double hermiticity_defect(const SparseH& H) {
  const SparseH D = SparseH(H.adjoint()) - H;
  double m = 0.0;
  for (Eigen::Index k = 0; k < D.outerSize(); ++k)
    for (SparseH::InnerIterator it(D, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

struct CompositeOptions {
  double leak_tol = 1e-6;
  double norm_tol = 1e-8;
  double krylov_tol = 1e-10;  // local error per step
  int krylov_max = 40;
};

struct PopulationSeries {
  std::vector<double> t;
  std::vector<std::vector<double>> pop;  // pop[level][k]
  std::vector<double> norm;
  std::vector<double> leakage;

  TimeSeries series(int level) const {
    return TimeSeries{t, pop.at(static_cast<std::size_t>(level))};
  }
  double max_norm_drift() const {
    double m = 0.0;
    for (double n : norm) m = std::max(m, std::abs(n - 1.0));
    return m;
  }
  double max_leakage() const {
    double m = 0.0;
    for (double l : leakage) m = std::max(m, l);
    return m;
  }
};

namespace detail {

// One Lanczos step psi <- exp(-i H h) psi. Returns false when the
// a-posteriori error estimate misses tol within kmax vectors.
inline bool lanczos_step(const SparseH& H, Eigen::VectorXcd& psi, double h,
                         double tol, int kmax) {
  const double beta0 = psi.norm();
  if (beta0 == 0.0) return true;
  const Eigen::Index n = psi.size();
  const int kcap = static_cast<int>(std::min<Eigen::Index>(kmax, n));
  Eigen::MatrixXcd V(n, kcap + 1);
  std::vector<double> alpha, beta;
  V.col(0) = psi / beta0;
  for (int j = 0; j < kcap; ++j) {
    Eigen::VectorXcd w = H * V.col(j);
    alpha.push_back(V.col(j).dot(w).real());
    // Full reorthogonalization, twice.
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) w -= V.col(i) * V.col(i).dot(w);
    const double b = w.norm();
    const int m = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) T(i, i) = alpha[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < m; ++i)
      T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXcd ph =
        (-I * h * es.eigenvalues().cast<cplx>()).array().exp();
    const Eigen::VectorXcd y = es.eigenvectors().cast<cplx>() *
                               (ph.asDiagonal() *
                                es.eigenvectors().row(0).transpose().cast<cplx>());
    const double err = b * std::abs(y(m - 1));
    if (err < tol || b < 1e-14 || m == n) {
      psi = beta0 * (V.leftCols(m) * y);
      return true;
    }
    beta.push_back(b);
    V.col(j + 1) = w / b;
  }
  return false;
}

inline void krylov_advance(const SparseH& H, Eigen::VectorXcd& psi, double h,
                           const CompositeOptions& opt, int depth = 0) {
  Eigen::VectorXcd trial = psi;
  if (lanczos_step(H, trial, h, opt.krylov_tol, opt.krylov_max)) {
    psi = trial;
    return;
  }
  if (depth > 20) throw NumericFailure("Krylov step failed to converge");
  krylov_advance(H, psi, 0.5 * h, opt, depth + 1);
  krylov_advance(H, psi, 0.5 * h, opt, depth + 1);
}

}  // namespace detail

/// Evolves init under H on the uniform grid covering [0, t_end]. The
/// diagonal is shifted by its mean (a global phase) to shrink the Krylov
/// spectrum. Throws NumericFailure on leakage or norm breaches.
inline PopulationSeries evolve_composite(const SparseH& H,
                                         const FockComposite& init,
                                         double t_end, double dt,
                                         const CompositeOptions& opt = {}) {
  if (H.rows() != static_cast<Eigen::Index>(init.dim()) || H.cols() != H.rows())
    throw std::invalid_argument("evolve_composite: operator/state size mismatch");
  if (std::abs(init.amps.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("evolve_composite: initial state not normalized");
  const StepGrid grid = StepGrid::cover(t_end, dt);

  cplx shift = H.diagonal().mean();
  SparseH Hs = H;
  for (Eigen::Index i = 0; i < Hs.rows(); ++i) Hs.coeffRef(i, i) -= shift.real();

  PopulationSeries out;
  out.pop.assign(static_cast<std::size_t>(init.levels), {});
  Eigen::VectorXcd psi = init.amps;
  auto record = [&](double t) {
    out.t.push_back(t);
    for (int l = 0; l < init.levels; ++l)
      out.pop[static_cast<std::size_t>(l)].push_back(init.population(l, psi));
    out.norm.push_back(psi.squaredNorm());
    const double leak = init.leakage(psi);
    out.leakage.push_back(leak);
    if (leak > opt.leak_tol) {
      std::ostringstream msg;
      msg << "photon-window leakage " << leak << " exceeds " << opt.leak_tol
          << " at t = " << t;
      throw NumericFailure(msg.str());
    }
    if (std::abs(out.norm.back() - 1.0) > opt.norm_tol)
      throw NumericFailure("composite norm drift exceeds tolerance");
  };
  record(0.0);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    detail::krylov_advance(Hs, psi, grid.h, opt);
    record(grid.time(k + 1));
  }
  return out;
}

/// Step that keeps ||H - shift|| h of order unity; Lanczos handles the rest.
inline double composite_step(const SparseH& H, double target = 2.0) {
  const Eigen::VectorXcd d = H.diagonal();
  double lo = d.real().minCoeff(), hi = d.real().maxCoeff();
  double offmax = 0.0;
  for (Eigen::Index k = 0; k < H.outerSize(); ++k) {
    double row = 0.0;
    for (SparseH::InnerIterator it(H, k); it; ++it)
      if (it.row() != it.col()) row += std::abs(it.value());
    offmax = std::max(offmax, row);
  }
  const double scale = 0.5 * (hi - lo) + offmax;
  return scale > 0.0 ? target / scale : 1.0;
}

// ---------------------------------------------------------------------------
// Raman versus direct two-level comparison

struct RamanReport {
  double raman_bso_amp = 0.0;
  double direct_bso_amp = 0.0;
  double ratio = 0.0;
  double raman_rabi = 0.0;
  double t_end = 0.0;
  std::vector<std::string> warnings;
};

struct RamanOptions {
  int steps_per_cycle = 40;
  double rabi_periods = 2.0;
};

/// BSO-band amplitude (tones at 2 Dw and 2 Dw +- Omega) in the residual of
/// P2 against the three-level RWA run, versus the same band in P1 of the
/// resonant two-level system with splitting Dw and Rabi frequency Omega.
/// Both start in |0> with sudden switch-on.
inline RamanReport raman_bso_compare(const LambdaConfig& cfg,
                                     const DriveField& direct,
                                     const RamanOptions& opt = {}) {
  cfg.validate();
  direct.validate();
  const double Om = cfg.raman_rabi();
  if (!(direct.g0M > 0.0) || std::abs(Om - direct.g0M) > 0.01 * direct.g0M) {
    std::ostringstream msg;
    msg << "raman_bso_compare: effective Rabi frequencies differ (raman "
        << Om << ", direct " << direct.g0M << ")";
    throw std::invalid_argument(msg.str());
  }
  const double dw = cfg.delta_omega();
  if (std::abs(direct.transition() - dw) > 1e-9 * dw)
    throw std::invalid_argument("raman_bso_compare: splittings differ");

  RamanReport rep;
  rep.raman_rabi = Om;
  rep.t_end = opt.rabi_periods * 2.0 * pi / Om;

  DriveField f = direct;
  f.tau_sw = 0.0;
  f.g_dc = 0.0;
  const double dt2 = max_step(f, opt.steps_per_cycle);
  IntegratorOptions io;
  io.steps_per_cycle = opt.steps_per_cycle;
  const auto full2 = evolve_two_level(f, TwoLevelState::basis(0), rep.t_end, dt2, io);
  const auto rwa2 = rwa_reference(f, TwoLevelState::basis(0), rep.t_end, dt2, io);
  const TimeSeries r2 =
      residual(full2.population_series(1), rwa2.population_series(1));
  rep.direct_bso_amp = band_amplitude(r2, 2.0 * f.omega, Om);

  LambdaOptions lo;
  lo.steps_per_cycle = opt.steps_per_cycle;
  const double dt3 = max_step(cfg, opt.steps_per_cycle);
  const auto full3 = evolve_lambda(cfg, ThreeLevelState::basis(0), rep.t_end, dt3, lo);
  lo.rwa = true;
  const auto rwa3 = evolve_lambda(cfg, ThreeLevelState::basis(0), rep.t_end, dt3, lo);
  const TimeSeries r3 =
      residual(full3.population_series(2), rwa3.population_series(2));
  rep.raman_bso_amp = band_amplitude(r3, 2.0 * dw, Om);
  rep.ratio = rep.raman_bso_amp / rep.direct_bso_amp;
  rep.warnings = full3.warnings;
  return rep;
}

/// Desk-scale lambda configuration: splitting dw, optical scale omega,
/// single-photon detuning kappa * omega, and g chosen so the Raman Rabi
/// frequency equals rabi.
inline LambdaConfig raman_config(double omega, double dw, double rabi,
                                 double kappa = 0.2) {
  LambdaConfig c;
  c.omega01 = omega;
  c.omega12 = omega - dw;
  c.delta = kappa * omega;
  c.g = std::sqrt(2.0 * c.delta * rabi);
  return c;
}

}  // namespace bsosim
