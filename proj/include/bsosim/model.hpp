#pragma once

// Domain types shared by every solver. Units: hbar = 1, all frequencies are
// angular and share one arbitrary time unit.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bsosim {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Thrown when a requested step cannot resolve the fastest frequency in the
// model. Carries the largest step that would have been accepted.
class CoarseStepError : public std::invalid_argument {
 public:
  CoarseStepError(double requested, double required)
      : std::invalid_argument("time step " + std::to_string(requested) +
                              " too coarse; need dt <= " +
                              std::to_string(required)),
        requested_(requested),
        required_(required) {}
  double requested() const { return requested_; }
  double required() const { return required_; }

 private:
  double requested_;
  double required_;
};

// Norm or leakage breach during an evolution.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Classical drive: -g(t) cos(omega t + phi) on sigma_x, with the envelope
/// g(t) = g0M (1 - exp(-t / tau_sw)) and an optional static x field g_dc.
struct DriveField {
  double omega = 1.0;
  double g0M = 0.0;
  double phi = 0.0;
  double tau_sw = 0.0;
  double g_dc = 0.0;
  std::optional<double> epsilon;  // transition frequency; defaults to omega

  double transition() const { return epsilon.value_or(omega); }
  double detuning() const { return transition() - omega; }
  double eta() const { return g0M / (4.0 * omega); }

  void validate() const {
    if (!(omega > 0.0)) throw std::domain_error("omega must be > 0");
    if (!(g0M >= 0.0)) throw std::domain_error("g0M must be >= 0");
    if (!(tau_sw >= 0.0)) throw std::domain_error("tau_sw must be >= 0");
    if (!std::isfinite(phi) || !std::isfinite(g_dc))
      throw std::domain_error("phi and g_dc must be finite");
    if (epsilon && !std::isfinite(*epsilon))
      throw std::domain_error("epsilon must be finite");
  }
};

/// Rabi envelope g_o(t).
inline double g_envelope(const DriveField& f, double t) {
  if (t < 0.0) throw std::domain_error("g_envelope: t < 0");
  if (f.tau_sw == 0.0) return f.g0M;
  return -f.g0M * std::expm1(-t / f.tau_sw);
}

/// Pulse area  int_0^t g_o(t') dt'.
inline double pulse_area(const DriveField& f, double t) {
  if (t < 0.0) throw std::domain_error("pulse_area: t < 0");
  if (f.tau_sw == 0.0) return f.g0M * t;
  const double x = t / f.tau_sw;
  // t - tau (1 - e^{-x}) loses digits for small x; use the series there.
  if (x < 1e-3) {
    return f.g0M * f.tau_sw * x * x * (0.5 - x / 6.0 + x * x / 24.0);
  }
  return f.g0M * (t + f.tau_sw * std::expm1(-x));
}

/// Time-averaged Rabi frequency g'_0(t) = pulse_area(t) / t; 0 at t = 0.
inline double g_mean(const DriveField& f, double t) {
  if (t < 0.0) throw std::domain_error("g_mean: t < 0");
  if (f.tau_sw == 0.0) return f.g0M;
  if (t == 0.0) return 0.0;
  return pulse_area(f, t) / t;
}

/// Complex amplitudes over N levels.
template <int N>
struct State {
  Eigen::Matrix<cplx, N, 1> amp = Eigen::Matrix<cplx, N, 1>::Zero();

  State() = default;
  explicit State(const Eigen::Matrix<cplx, N, 1>& a) : amp(a) {}

  static State basis(int level) {
    State s;
    s.amp(level) = 1.0;
    return s;
  }

  cplx operator[](int i) const { return amp(i); }
  cplx& operator[](int i) { return amp(i); }
  double population(int i) const { return std::norm(amp(i)); }
  double norm() const { return amp.squaredNorm(); }
};

using TwoLevelState = State<2>;
using ThreeLevelState = State<3>;

inline TwoLevelState make_state(cplx c0, cplx c1) {
  TwoLevelState s;
  s.amp << c0, c1;
  return s;
}

inline ThreeLevelState make_state(cplx c0, cplx c1, cplx c2) {
  ThreeLevelState s;
  s.amp << c0, c1, c2;
  return s;
}

/// Lambda system: |0>, |2> low-lying, |1> an optical frequency above both.
/// Field 1 (omega01 + delta) drives 0<->1, field 2 (omega12 + delta) drives
/// 1<->2. Level energies are 0, omega01, omega01 - omega12.
struct LambdaConfig {
  double omega01 = 0.0;
  double omega12 = 0.0;
  double delta = 0.0;
  double g = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;

  double delta_omega() const { return std::abs(omega01 - omega12); }
  double nu1() const { return omega01 + delta; }
  double nu2() const { return omega12 + delta; }
  // Adiabatic elimination of |1> with couplings g/2 on each leg.
  double raman_rabi() const { return g * g / (2.0 * delta); }

  void validate() const {
    if (!(omega01 > 0.0) || !(omega12 > 0.0))
      throw std::domain_error("optical transition frequencies must be > 0");
    if (!(g >= 0.0)) throw std::domain_error("g must be >= 0");
    if (!std::isfinite(delta)) throw std::domain_error("delta must be finite");
    if (!(nu1() > 0.0) || !(nu2() > 0.0))
      throw std::domain_error("drive frequencies omega + delta must be > 0");
  }
};

/// Sampled real observable.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> y;

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
  double span() const { return t.empty() ? 0.0 : t.back() - t.front(); }

  void validate() const {
    if (t.size() != y.size())
      throw std::invalid_argument("TimeSeries: length mismatch");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1]))
        throw std::invalid_argument("TimeSeries: times not strictly increasing");
  }

  bool uniform(double rel_tol = 1e-9) const {
    if (t.size() < 2) return true;
    const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i)
      if (std::abs((t[i] - t[i - 1]) - h) > rel_tol * h) return false;
    return true;
  }

  // Samples with t0 <= t <= t1.
  TimeSeries window(double t0, double t1) const {
    TimeSeries out;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] >= t0 && t[i] <= t1) {
        out.t.push_back(t[i]);
        out.y.push_back(y[i]);
      }
    }
    return out;
  }
};

struct SpectralPeak {
  double freq = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;  // (-pi, pi]
};

inline double wrap_phase(double x) {
  double r = std::remainder(x, 2.0 * pi);
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

}  // namespace bsosim
