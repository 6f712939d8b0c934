#pragma once

// Direct integration of the driven two-level and lambda systems, with and
// without the counter-rotating terms.
//
// Two-level integration runs in the frame rotating at the drive,
//   c~0 = c0,  c~1 = exp(i(omega t + phi)) c1,
// where the interaction is
//   H~01 = -[g_o(t) (1 + e^{-2i(wt+phi)}) + g_dc e^{-i(wt+phi)}] / 2,
//   H~11 = epsilon - omega.
// Populations are frame independent.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bsosim/model.hpp"
#include "bsosim/propagator.hpp"

namespace bsosim {

enum class Frame { lab, rotating };

inline const char* to_string(Frame f) {
  return f == Frame::lab ? "lab" : "rotating";
}

template <int N>
struct Trajectory {
  std::vector<double> times;
  std::vector<State<N>> states;
  Frame frame = Frame::rotating;
  std::vector<std::string> warnings;

  std::size_t size() const { return times.size(); }

  std::vector<double> populations(int level) const {
    std::vector<double> p(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
      p[i] = states[i].population(level);
    return p;
  }

  TimeSeries population_series(int level) const {
    return TimeSeries{times, populations(level)};
  }

  double max_norm_drift() const {
    double m = 0.0;
    for (const auto& s : states) m = std::max(m, std::abs(s.norm() - 1.0));
    return m;
  }
};

using TwoLevelTrajectory = Trajectory<2>;
using ThreeLevelTrajectory = Trajectory<3>;

struct IntegratorOptions {
  int steps_per_cycle = 40;
  double norm_tol = 1e-9;
  bool check_norm = true;
};

/// Largest step resolving the 2 omega counter-rotating term (and any
/// detuning) with steps_per_cycle samples per period.
inline double max_step(const DriveField& f, int steps_per_cycle = 40) {
  const double fastest = 2.0 * f.omega + std::abs(f.detuning());
  return 2.0 * pi / (fastest * steps_per_cycle);
}

/// Switch-on time constant used for "adiabatic" excitation.
inline double adiabatic_tau_sw(double omega) { return 10.0 / omega; }

namespace detail {

template <int N>
void require_normalized(const State<N>& s) {
  if (std::abs(s.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("initial state is not normalized (norm " +
                                std::to_string(s.norm()) + ")");
}

template <int N>
void check_norm(const Trajectory<N>& tr, const IntegratorOptions& opt) {
  if (!opt.check_norm) return;
  const double drift = tr.max_norm_drift();
  if (drift > opt.norm_tol)
    throw NumericFailure("norm drift " + std::to_string(drift) +
                         " exceeds tolerance");
}

enum class Terms { full, rwa };

inline CMat<2> rotating_hamiltonian(const DriveField& f, double g_dc,
                                    Terms terms, double t) {
  const double theta = f.omega * t + f.phi;
  const double g = g_envelope(f, t);
  cplx h01 = -0.5 * g;
  if (terms == Terms::full) {
    h01 += -0.5 * g * std::polar(1.0, -2.0 * theta);
    if (g_dc != 0.0) h01 += -0.5 * g_dc * std::polar(1.0, -theta);
  }
  CMat<2> H;
  H << 0.0, h01, std::conj(h01), f.detuning();
  return H;
}

template <int N, class Ham>
Trajectory<N> record(Ham&& ham, const State<N>& init, double t_end, double dt,
                     Frame frame) {
  Trajectory<N> tr;
  tr.frame = frame;
  const StepGrid grid = StepGrid::cover(t_end, dt);
  tr.times.reserve(grid.steps + 1);
  tr.states.reserve(grid.steps + 1);
  propagate<N>(ham, init.amp, t_end, dt,
               [&](std::size_t, double t, const CVec<N>& psi) {
                 tr.times.push_back(t);
                 tr.states.emplace_back(psi);
               });
  return tr;
}

inline TwoLevelTrajectory evolve_rotating(const DriveField& f, double g_dc,
                                          Terms terms,
                                          const TwoLevelState& init,
                                          double t_end, double dt,
                                          const IntegratorOptions& opt) {
  f.validate();
  check_step(dt, max_step(f, opt.steps_per_cycle));
  require_normalized(init);
  auto tr = record<2>(
      [&](double t) { return rotating_hamiltonian(f, g_dc, terms, t); }, init,
      t_end, dt, Frame::rotating);
  check_norm(tr, opt);
  return tr;
}

}  // namespace detail

/// Counter-rotating dynamics without the static field (g_dc ignored).
inline TwoLevelTrajectory evolve_two_level(const DriveField& f,
                                           const TwoLevelState& init,
                                           double t_end, double dt,
                                           const IntegratorOptions& opt = {}) {
  return detail::evolve_rotating(f, 0.0, detail::Terms::full, init, t_end, dt,
                                 opt);
}

/// Counter-rotating dynamics including the static field g_dc. Identical to
/// evolve_two_level when g_dc == 0.
inline TwoLevelTrajectory evolve_two_level_dc(
    const DriveField& f, const TwoLevelState& init, double t_end, double dt,
    const IntegratorOptions& opt = {}) {
  return detail::evolve_rotating(f, f.g_dc, detail::Terms::full, init, t_end,
                                 dt, opt);
}

/// Same equations with the e^{-2i(wt+phi)} and dc terms deleted.
inline TwoLevelTrajectory rwa_reference(const DriveField& f,
                                        const TwoLevelState& init,
                                        double t_end, double dt,
                                        const IntegratorOptions& opt = {}) {
  return detail::evolve_rotating(f, 0.0, detail::Terms::rwa, init, t_end, dt,
                                 opt);
}

/// Rotating <-> lab conversion: c1_lab = exp(-i(omega t + phi)) c1_rot.
inline TwoLevelState rotating_to_lab(const DriveField& f, double t,
                                     const TwoLevelState& s) {
  return make_state(s[0], std::polar(1.0, -(f.omega * t + f.phi)) * s[1]);
}

inline TwoLevelState lab_to_rotating(const DriveField& f, double t,
                                     const TwoLevelState& s) {
  return make_state(s[0], std::polar(1.0, f.omega * t + f.phi) * s[1]);
}

inline TwoLevelTrajectory to_lab(const DriveField& f,
                                 const TwoLevelTrajectory& tr) {
  if (tr.frame == Frame::lab) return tr;
  TwoLevelTrajectory out = tr;
  out.frame = Frame::lab;
  for (std::size_t i = 0; i < tr.size(); ++i)
    out.states[i] = rotating_to_lab(f, tr.times[i], tr.states[i]);
  return out;
}

inline TwoLevelTrajectory to_rotating(const DriveField& f,
                                      const TwoLevelTrajectory& tr) {
  if (tr.frame == Frame::rotating) return tr;
  TwoLevelTrajectory out = tr;
  out.frame = Frame::rotating;
  for (std::size_t i = 0; i < tr.size(); ++i)
    out.states[i] = lab_to_rotating(f, tr.times[i], tr.states[i]);
  return out;
}

/// Lab-frame integration of H = eps |1><1| - (g_o(t) cos(wt+phi) + g_dc/2)
/// sigma_x. Needs dt resolving epsilon as well; used to cross-check the
/// rotating-frame path.
inline TwoLevelTrajectory evolve_two_level_lab(
    const DriveField& f, const TwoLevelState& init, double t_end, double dt,
    const IntegratorOptions& opt = {}) {
  f.validate();
  const double fastest = 2.0 * f.omega + std::abs(f.transition());
  check_step(dt, 2.0 * pi / (fastest * opt.steps_per_cycle));
  detail::require_normalized(init);
  auto ham = [&](double t) {
    const double x =
        -g_envelope(f, t) * std::cos(f.omega * t + f.phi) - 0.5 * f.g_dc;
    CMat<2> H;
    H << 0.0, x, x, f.transition();
    return H;
  };
  auto tr = detail::record<2>(ham, init, t_end, dt, Frame::lab);
  detail::check_norm(tr, opt);
  return tr;
}

/// Excited-state population for an incoherent initial mixture
/// rho(0) = (1 - A0)|0><0| + A0 |1><1|, i.e.
///   P1(t) = (1 - A0)|U10(t)|^2 + A0 |U11(t)|^2.
inline TimeSeries excited_population_mixed(const DriveField& f, double A0,
                                           double t_end, double dt,
                                           bool rwa = false,
                                           const IntegratorOptions& opt = {}) {
  if (!(A0 >= 0.0 && A0 <= 1.0))
    throw std::domain_error("A0 must lie in [0, 1]");
  const auto terms = rwa ? detail::Terms::rwa : detail::Terms::full;
  const auto from0 = detail::evolve_rotating(f, f.g_dc, terms,
                                             TwoLevelState::basis(0), t_end,
                                             dt, opt);
  const auto from1 = detail::evolve_rotating(f, f.g_dc, terms,
                                             TwoLevelState::basis(1), t_end,
                                             dt, opt);
  TimeSeries out{from0.times, std::vector<double>(from0.size())};
  for (std::size_t i = 0; i < from0.size(); ++i)
    out.y[i] = (1.0 - A0) * from0.states[i].population(1) +
               A0 * from1.states[i].population(1);
  return out;
}

// ---------------------------------------------------------------------------
// Lambda system

struct LambdaOptions {
  int steps_per_cycle = 40;
  double norm_tol = 1e-9;
  bool rwa = false;
  // Let each field also drive the other leg (off-resonantly).
  bool cross_coupling = false;
};

inline double max_step(const LambdaConfig& c, int steps_per_cycle = 40) {
  double fastest = 2.0 * std::max(c.nu1(), c.nu2()) + std::abs(c.delta);
  return 2.0 * pi / (fastest * steps_per_cycle);
}

namespace detail {

// Frame: c~1 = e^{i nu1 t} c1, c~2 = e^{i (nu1 - nu2) t} c2. Diagonal
// becomes (0, -delta, 0) exactly on two-photon resonance.
inline CMat<3> lambda_rotating_hamiltonian(const LambdaConfig& c,
                                           const LambdaOptions& opt,
                                           double t) {
  const double nu1 = c.nu1(), nu2 = c.nu2();
  const double e2 = c.omega01 - c.omega12;
  cplx h01 = -0.5 * c.g * std::polar(1.0, c.phi1);
  cplx h12 = -0.5 * c.g * std::polar(1.0, -c.phi2);
  if (!opt.rwa) {
    h01 += -0.5 * c.g * std::polar(1.0, -(2.0 * nu1 * t + c.phi1));
    h12 += -0.5 * c.g * std::polar(1.0, 2.0 * nu2 * t + c.phi2);
  }
  if (opt.cross_coupling) {
    // field 2 on 0<->1: -g cos(nu2 t + phi2) e^{-i nu1 t}
    h01 += -0.5 * c.g *
           (std::polar(1.0, (nu2 - nu1) * t + c.phi2) +
            std::polar(1.0, -(nu2 + nu1) * t - c.phi2));
    // field 1 on 1<->2: -g cos(nu1 t + phi1) e^{i nu2 t}
    h12 += -0.5 * c.g *
           (std::polar(1.0, (nu1 + nu2) * t + c.phi1) +
            std::polar(1.0, (nu2 - nu1) * t - c.phi1));
  }
  CMat<3> H;
  H << 0.0, h01, 0.0,                                              //
      std::conj(h01), c.omega01 - nu1, h12,                        //
      0.0, std::conj(h12), e2 - (nu1 - nu2);
  return H;
}

}  // namespace detail

/// Three-level lambda dynamics. Returned in the lab frame.
inline ThreeLevelTrajectory evolve_lambda(const LambdaConfig& c,
                                          const ThreeLevelState& init,
                                          double t_end, double dt,
                                          const LambdaOptions& opt = {}) {
  c.validate();
  check_step(dt, max_step(c, opt.steps_per_cycle));
  detail::require_normalized(init);
  auto tr = detail::record<3>(
      [&](double t) { return detail::lambda_rotating_hamiltonian(c, opt, t); },
      init, t_end, dt, Frame::lab);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    tr.states[i][1] *= std::polar(1.0, -c.nu1() * t);
    tr.states[i][2] *= std::polar(1.0, -(c.nu1() - c.nu2()) * t);
  }
  if (c.g > 0.0 && c.delta <= 0.0)
    tr.warnings.push_back(
        "delta <= 0: the Raman Rabi frequency g^2/(2 delta) is not valid");
  else if (c.g > 0.0 && c.delta < 3.0 * c.g)
    tr.warnings.push_back("delta is not >> g: |1> is appreciably populated");
  IntegratorOptions io;
  io.norm_tol = opt.norm_tol;
  detail::check_norm(tr, io);
  return tr;
}

}  // namespace bsosim
