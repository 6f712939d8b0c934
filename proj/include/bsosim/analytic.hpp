#pragma once

// Closed-form adiabatic solutions to lowest order in eta = g0M / (4 omega).

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "bsosim/model.hpp"

namespace bsosim {

struct AnalyticTerms {
  DriveField field;
  double eta = 0.0;

  explicit AnalyticTerms(const DriveField& f) : field(f), eta(f.eta()) {}

  /// Sigma(t) = (i/2) exp(-i(2 omega t + 2 phi)); |Sigma| = 1/2.
  cplx sigma_term(double t) const {
    return 0.5 * I * std::polar(1.0, -2.0 * (field.omega * t + field.phi));
  }
  double g_mean(double t) const { return bsosim::g_mean(field, t); }
};

/// Lab-frame amplitudes under adiabatic excitation:
///   C0 = cos(A/2) - 2 eta Sigma sin(A/2)
///   C1 = i e^{-i(wt+phi)} [sin(A/2) + 2 eta Sigma* cos(A/2)]
/// with A = g'_0(t) t. Normalized only to O(eta).
inline TwoLevelState amplitudes_adiabatic(const DriveField& f, double t) {
  if (t < 0.0) throw std::domain_error("amplitudes_adiabatic: t < 0");
  const AnalyticTerms terms(f);
  const double half = 0.5 * pulse_area(f, t);
  const cplx sig = terms.sigma_term(t);
  const cplx c0 = std::cos(half) - 2.0 * terms.eta * sig * std::sin(half);
  const cplx c1 = I * std::polar(1.0, -(f.omega * t + f.phi)) *
                  (std::sin(half) + 2.0 * terms.eta * std::conj(sig) *
                                        std::cos(half));
  return make_state(c0, c1);
}

/// Excited population after a pi/2 pulse observed at tau:
///   1/2 [1 + 2 eta sin(2 omega tau + 2 phi)].
inline double pi_half_signal(const DriveField& f, double tau, double phi) {
  return 0.5 * (1.0 + 2.0 * f.eta() *
                          std::sin(2.0 * f.omega * tau + 2.0 * phi));
}

/// Pulse area per unit peak Rabi frequency at time tau.
inline double unit_pulse_area(double tau_sw, double tau) {
  DriveField unit;
  unit.g0M = 1.0;
  unit.tau_sw = tau_sw;
  return pulse_area(unit, tau);
}

/// Peak Rabi frequency that gives pulse area pi/2 at tau.
inline double pi_half_g0M(double tau_sw, double tau) {
  if (!(tau > 0.0)) throw std::domain_error("pi_half_g0M: tau must be > 0");
  return 0.5 * pi / unit_pulse_area(tau_sw, tau);
}

/// Time at which the pulse area reaches `area` for the given field.
inline double time_for_area(const DriveField& f, double area) {
  if (!(f.g0M > 0.0)) throw std::domain_error("time_for_area: g0M must be > 0");
  if (!(area >= 0.0)) throw std::domain_error("time_for_area: area < 0");
  if (area == 0.0) return 0.0;
  // pulse_area(t) >= g0M (t - tau_sw), so the root lies below this bound.
  const double hi = area / f.g0M + f.tau_sw + 1.0;
  auto fn = [&](double t) { return pulse_area(f, t) - area; };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(fn, 0.0, hi, tol, iters);
  return 0.5 * (a + b);
}

inline double pi_half_time(const DriveField& f) {
  return time_for_area(f, 0.5 * pi);
}

struct ArbitraryInitResult {
  cplx c1;
  double pop1 = 0.0;
};

/// Excited amplitude and population for initial populations (1 - A0, A0):
///   |C1|^2 = A0 + (1 - 2A0) sin^2(A/2)
///            + eta (1 - 2A0) sin(A) sin(2 omega t + 2 phi).
/// The amplitude follows the modulus form with 2 eta Sigma* in the sideband.
inline ArbitraryInitResult amplitudes_arbitrary_init(const DriveField& f,
                                                     double A0, double t) {
  if (!(A0 >= 0.0 && A0 <= 1.0))
    throw std::domain_error("A0 must lie in [0, 1]");
  if (t < 0.0) throw std::domain_error("amplitudes_arbitrary_init: t < 0");
  const double eta = f.eta();
  const double area = pulse_area(f, t);
  const double s2 = std::sin(0.5 * area) * std::sin(0.5 * area);
  const double c2 = 1.0 - s2;
  const double theta2 = 2.0 * (f.omega * t + f.phi);
  const cplx sig = 0.5 * I * std::polar(1.0, -theta2);

  ArbitraryInitResult r;
  r.c1 = I * std::polar(1.0, -(f.omega * t + f.phi)) *
         (std::sqrt(A0 + (1.0 - 2.0 * A0) * s2) +
          2.0 * eta * std::conj(sig) * std::sqrt(A0 + (1.0 - 2.0 * A0) * c2));
  r.pop1 = A0 + (1.0 - 2.0 * A0) * s2 +
           eta * (1.0 - 2.0 * A0) * std::sin(area) * std::sin(theta2);
  return r;
}

/// The oscillatory part of amplitudes_arbitrary_init's population.
inline double bso_term(const DriveField& f, double A0, double t) {
  return f.eta() * (1.0 - 2.0 * A0) * std::sin(pulse_area(f, t)) *
         std::sin(2.0 * (f.omega * t + f.phi));
}

}  // namespace bsosim
