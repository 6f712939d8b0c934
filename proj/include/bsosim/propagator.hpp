#pragma once

// Fourth-order Magnus stepping for i d psi/dt = H(t) psi.
//
// Each step evaluates H at the two Gauss-Legendre nodes and applies
//   U = exp(-i K),  K = h/2 (H1 + H2) - i sqrt(3)/12 h^2 [H2, H1].
// K is Hermitian, so U is unitary to rounding: no renormalization is ever
// applied and any norm drift is reported as-is.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "bsosim/model.hpp"

namespace bsosim {

template <int N>
using CMat = Eigen::Matrix<cplx, N, N>;
template <int N>
using CVec = Eigen::Matrix<cplx, N, 1>;

/// exp(-i K) for Hermitian K.
template <int N>
CMat<N> expm_minus_i(const CMat<N>& K) {
  if constexpr (N == 2) {
    // K = k0 + kx sx + ky sy + kz sz
    const double k0 = 0.5 * (K(0, 0).real() + K(1, 1).real());
    const double kz = 0.5 * (K(0, 0).real() - K(1, 1).real());
    const cplx off = K(0, 1);  // kx - i ky
    const double r = std::sqrt(kz * kz + std::norm(off));
    const double c = std::cos(r);
    const double s = r > 0.0 ? std::sin(r) / r : 1.0;
    const cplx ph = std::polar(1.0, -k0);
    CMat<2> U;
    U(0, 0) = ph * cplx(c, -s * kz);
    U(1, 1) = ph * cplx(c, s * kz);
    U(0, 1) = ph * (-I * s * off);
    U(1, 0) = ph * (-I * s * std::conj(off));
    return U;
  } else {
    Eigen::SelfAdjointEigenSolver<CMat<N>> es(K);
    const auto& v = es.eigenvectors();
    const auto ph = (-I * es.eigenvalues().template cast<cplx>()).array().exp();
    return v * ph.matrix().asDiagonal() * v.adjoint();
  }
}

/// Uniform grid of n steps covering [0, t_end] with step <= dt.
struct StepGrid {
  std::size_t steps = 0;
  double h = 0.0;

  static StepGrid cover(double t_end, double dt) {
    if (!(t_end >= 0.0)) throw std::domain_error("t_end must be >= 0");
    if (!(dt > 0.0)) throw std::domain_error("dt must be > 0");
    StepGrid g;
    if (t_end == 0.0) return g;
    // Tolerate t_end being an exact multiple of dt up to rounding.
    g.steps = static_cast<std::size_t>(std::ceil(t_end / dt * (1.0 - 1e-12)));
    if (g.steps == 0) g.steps = 1;
    g.h = t_end / static_cast<double>(g.steps);
    return g;
  }
  double time(std::size_t k) const { return static_cast<double>(k) * h; }
};

inline void check_step(double dt, double dt_max) {
  if (!(dt > 0.0)) throw std::domain_error("dt must be > 0");
  if (dt > dt_max * (1.0 + 1e-12)) throw CoarseStepError(dt, dt_max);
}

/// One Magnus-4 propagator over [t, t + h].
template <int N, class Ham>
CMat<N> magnus4_step(Ham&& hamiltonian, double t, double h) {
  constexpr double node = 0.28867513459481288225;  // sqrt(3)/6
  constexpr double comm = 0.14433756729740644113;  // sqrt(3)/12
  const CMat<N> H1 = hamiltonian(t + (0.5 - node) * h);
  const CMat<N> H2 = hamiltonian(t + (0.5 + node) * h);
  const CMat<N> K =
      (0.5 * h) * (H1 + H2) - I * (comm * h * h) * (H2 * H1 - H1 * H2);
  return expm_minus_i<N>(K);
}

/// Integrates from t = 0 to t_end on a uniform grid, calling
/// observe(k, t_k, psi_k) at every grid point including t = 0.
template <int N, class Ham, class Observer>
CVec<N> propagate(Ham&& hamiltonian, CVec<N> psi, double t_end, double dt,
                  Observer&& observe) {
  const StepGrid grid = StepGrid::cover(t_end, dt);
  observe(std::size_t{0}, 0.0, psi);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    psi = magnus4_step<N>(hamiltonian, grid.time(k), grid.h) * psi;
    observe(k + 1, grid.time(k + 1), psi);
  }
  return psi;
}

}  // namespace bsosim
