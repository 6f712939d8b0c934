#pragma once

// Truncated Floquet ladder. The rotating-frame state is expanded as
//   c~0 = sum_n a_n beta^n,  c~1 = sum_n b_n beta^n,
//   beta = exp(-i(2 omega t + 2 phi)),
// with
//   da_n/dt = i 2n omega a_n + i g_o (b_n + b_{n-1}) / 2
//   db_n/dt = i 2n omega b_n + i g_o (a_n + a_{n+1}) / 2
// for n in [-N, N]; couplings that leave the window are dropped.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bsosim/model.hpp"
#include "bsosim/propagator.hpp"
#include "bsosim/semiclassical.hpp"

namespace bsosim {

struct HarmonicLadder {
  int order = 0;
  double t = 0.0;
  DriveField field;
  std::vector<cplx> a;  // index n + order
  std::vector<cplx> b;

  HarmonicLadder() = default;
  HarmonicLadder(int N, const DriveField& f)
      : order(checked(N)), field(f), a(2 * N + 1), b(2 * N + 1) {}

  std::size_t index(int n) const {
    if (n < -order || n > order)
      throw std::out_of_range("harmonic index outside ladder");
    return static_cast<std::size_t>(n + order);
  }
  cplx& a_at(int n) { return a[index(n)]; }
  cplx& b_at(int n) { return b[index(n)]; }
  cplx a_at(int n) const { return a[index(n)]; }
  cplx b_at(int n) const { return b[index(n)]; }

  static int checked(int N) {
    if (N < 0) throw std::domain_error("ladder order must be >= 0");
    return N;
  }

  double weight() const {
    double w = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      w += std::norm(a[i]) + std::norm(b[i]);
    return w;
  }
};

inline double max_step_ladder(const DriveField& f, int N,
                              int steps_per_cycle = 40) {
  const double fastest =
      2.0 * std::max(N, 1) * f.omega + std::abs(f.detuning());
  return 2.0 * pi / (fastest * steps_per_cycle);
}

namespace detail {

// Generator in i d x/dt = H x form, x = (a_{-N..N}, b_{-N..N}).
inline Eigen::MatrixXcd ladder_hamiltonian(const DriveField& f, int N,
                                           double t) {
  const int M = 2 * N + 1;
  const double g = g_envelope(f, t);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(2 * M, 2 * M);
  for (int n = -N; n <= N; ++n) {
    const int ia = n + N;
    const int ib = M + n + N;
    H(ia, ia) = -2.0 * n * f.omega;
    H(ib, ib) = -2.0 * n * f.omega + f.detuning();
    H(ia, ib) = H(ib, ia) = -0.5 * g;
    if (n - 1 >= -N) {
      const int ib_prev = M + (n - 1) + N;
      H(ia, ib_prev) = H(ib_prev, ia) = -0.5 * g;
    }
  }
  return H;
}

}  // namespace detail

/// Integrates the ladder from a_0 = c0(0), b_0 = c1(0) (rotating frame).
/// Returns the coefficients at every grid point.
inline std::vector<HarmonicLadder> evolve_ladder(
    const DriveField& f, int N, const TwoLevelState& init, double t_end,
    double dt, const IntegratorOptions& opt = {}) {
  f.validate();
  if (N < 0) throw std::domain_error("ladder order must be >= 0");
  check_step(dt, max_step_ladder(f, N, opt.steps_per_cycle));
  detail::require_normalized(init);

  const int M = 2 * N + 1;
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(2 * M);
  x(N) = init[0];
  x(M + N) = init[1];

  std::vector<HarmonicLadder> out;
  out.reserve(StepGrid::cover(t_end, dt).steps + 1);
  auto ham = [&](double t) { return detail::ladder_hamiltonian(f, N, t); };
  propagate<Eigen::Dynamic>(
      ham, x, t_end, dt, [&](std::size_t, double t, const Eigen::VectorXcd& v) {
        HarmonicLadder L(N, f);
        L.t = t;
        for (int i = 0; i < M; ++i) {
          L.a[static_cast<std::size_t>(i)] = v(i);
          L.b[static_cast<std::size_t>(i)] = v(M + i);
        }
        out.push_back(std::move(L));
      });
  if (opt.check_norm) {
    for (const auto& L : out)
      if (std::abs(L.weight() - 1.0) > opt.norm_tol)
        throw NumericFailure("ladder weight drift exceeds tolerance");
  }
  return out;
}

/// Rotating-frame amplitudes at time t from the ladder coefficients.
inline TwoLevelState reconstruct(const HarmonicLadder& L, double t) {
  const cplx beta =
      std::polar(1.0, -(2.0 * L.field.omega * t + 2.0 * L.field.phi));
  cplx c0 = 0.0, c1 = 0.0;
  for (int n = -L.order; n <= L.order; ++n) {
    const cplx bn = std::pow(beta, n);
    c0 += L.a_at(n) * bn;
    c1 += L.b_at(n) * bn;
  }
  return make_state(c0, c1);
}

inline TwoLevelState reconstruct(const HarmonicLadder& L) {
  return reconstruct(L, L.t);
}

inline TwoLevelState reconstruct_lab(const HarmonicLadder& L) {
  return rotating_to_lab(L.field, L.t, reconstruct(L, L.t));
}

inline TwoLevelTrajectory ladder_trajectory(
    const std::vector<HarmonicLadder>& ladders) {
  TwoLevelTrajectory tr;
  tr.frame = Frame::rotating;
  tr.times.reserve(ladders.size());
  tr.states.reserve(ladders.size());
  for (const auto& L : ladders) {
    tr.times.push_back(L.t);
    tr.states.push_back(reconstruct(L));
  }
  return tr;
}

struct TruncationRow {
  int order = 0;
  double deviation = 0.0;  // max_t |pop1_N - pop1_Nmax|
};

/// Convergence table against the N_max ladder, all on one step size.
inline std::vector<TruncationRow> truncation_scan(
    const DriveField& f, int N_max, double t_end,
    const TwoLevelState& init = TwoLevelState::basis(0),
    const IntegratorOptions& opt = {}) {
  if (N_max < 2) throw std::domain_error("truncation_scan: N_max must be >= 2");
  const double dt = max_step_ladder(f, N_max, opt.steps_per_cycle);
  const auto ref = ladder_trajectory(evolve_ladder(f, N_max, init, t_end, dt,
                                                   opt));
  const auto p_ref = ref.populations(1);
  std::vector<TruncationRow> rows;
  for (int N = 0; N <= N_max; ++N) {
    TruncationRow row{N, 0.0};
    if (N < N_max) {
      const auto tr =
          ladder_trajectory(evolve_ladder(f, N, init, t_end, dt, opt));
      for (std::size_t i = 0; i < tr.size(); ++i)
        row.deviation =
            std::max(row.deviation, std::abs(tr.states[i].population(1) -
                                             p_ref[i]));
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bsosim
