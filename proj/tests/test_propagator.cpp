#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "bsosim/propagator.hpp"

using namespace bsosim;

namespace {

template <int N>
CMat<N> random_hermitian(std::mt19937& rng, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  CMat<N> A;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) A(i, j) = cplx(d(rng), d(rng));
  return 0.5 * (A + A.adjoint());
}

template <int N>
CMat<N> reference_exp(const CMat<N>& K) {
  const CMat<N> M = -I * K;
  return M.exp();
}

// Driven two-level generator with a time-dependent off-diagonal.
CMat<2> driven(double t) {
  CMat<2> H;
  const cplx off = 0.7 * std::cos(3.0 * t) + 0.2 * I * std::sin(t);
  H << 0.0, off, std::conj(off), 1.1;
  return H;
}

CVec<2> run(double h_target, double t_end) {
  CVec<2> psi(1.0, 0.0);
  return propagate<2>(driven, psi, t_end, h_target,
                      [](std::size_t, double, const CVec<2>&) {});
}

}  // namespace

TEST(MatrixExponential, TwoByTwoClosedFormMatchesPade) {
  std::mt19937 rng(7);
  for (double scale : {1e-8, 0.1, 1.0, 5.0}) {
    for (int k = 0; k < 20; ++k) {
      const CMat<2> K = random_hermitian<2>(rng, scale);
      const CMat<2> U = expm_minus_i<2>(K);
      EXPECT_LT((U - reference_exp<2>(K)).norm(), 1e-13) << "scale " << scale;
      EXPECT_LT((U.adjoint() * U - CMat<2>::Identity()).norm(), 1e-14);
    }
  }
}

TEST(MatrixExponential, ZeroGeneratorGivesIdentity) {
  EXPECT_LT((expm_minus_i<2>(CMat<2>::Zero()) - CMat<2>::Identity()).norm(), 1e-16);
}

TEST(MatrixExponential, EigenPathMatchesPadeForLargerMatrices) {
  std::mt19937 rng(11);
  for (int k = 0; k < 10; ++k) {
    const CMat<3> K3 = random_hermitian<3>(rng, 1.0);
    EXPECT_LT((expm_minus_i<3>(K3) - reference_exp<3>(K3)).norm(), 1e-12);
    const Eigen::MatrixXcd Kd = random_hermitian<6>(rng, 1.0);
    const Eigen::MatrixXcd Md = -I * Kd;
    const Eigen::MatrixXcd ref = Md.exp();
    EXPECT_LT((expm_minus_i<Eigen::Dynamic>(Kd) - ref).norm(), 1e-12);
  }
}

TEST(StepGrid, CoversEndExactlyWithoutExceedingStep) {
  const auto g = StepGrid::cover(1.0, 0.3);
  EXPECT_EQ(g.steps, 4u);
  EXPECT_DOUBLE_EQ(g.h, 0.25);
  EXPECT_DOUBLE_EQ(g.time(g.steps), 1.0);
  // Exact multiples do not gain a spurious extra step from rounding.
  EXPECT_EQ(StepGrid::cover(1.0, 0.1).steps, 10u);
  EXPECT_EQ(StepGrid::cover(0.0, 0.1).steps, 0u);
  EXPECT_THROW(StepGrid::cover(-1.0, 0.1), std::domain_error);
  EXPECT_THROW(StepGrid::cover(1.0, 0.0), std::domain_error);
}

TEST(StepCheck, CoarseStepCarriesRequiredBound) {
  EXPECT_NO_THROW(check_step(0.01, 0.01));
  try {
    check_step(0.02, 0.01);
    FAIL() << "expected CoarseStepError";
  } catch (const CoarseStepError& e) {
    EXPECT_DOUBLE_EQ(e.requested(), 0.02);
    EXPECT_DOUBLE_EQ(e.required(), 0.01);
  }
  EXPECT_THROW(check_step(0.0, 0.01), std::domain_error);
}

TEST(Magnus, StaticGeneratorIsExactForAnyStep) {
  CMat<2> H;
  H << 0.3, 0.5, 0.5, -0.2;
  const CVec<2> psi0(1.0, 0.0);
  const CVec<2> exact = reference_exp<2>(H * 2.0) * psi0;
  const CVec<2> got = propagate<2>([&](double) { return H; }, psi0, 2.0, 0.7,
                                   [](std::size_t, double, const CVec<2>&) {});
  EXPECT_LT((got - exact).norm(), 1e-14);
}

TEST(Magnus, GlobalErrorIsFourthOrder) {
  const double t_end = 3.0;
  const CVec<2> ref = run(1e-4, t_end);
  const double e1 = (run(0.1, t_end) - ref).norm();
  const double e2 = (run(0.05, t_end) - ref).norm();
  const double order = std::log2(e1 / e2);
  EXPECT_NEAR(order, 4.0, 0.3) << "e1=" << e1 << " e2=" << e2;
}

TEST(Magnus, NormIsPreservedWithoutRenormalization) {
  CVec<2> psi(1.0, 0.0);
  double worst = 0.0;
  propagate<2>(driven, psi, 200.0, 0.05,
               [&](std::size_t, double, const CVec<2>& v) {
                 worst = std::max(worst, std::abs(v.squaredNorm() - 1.0));
               });
  EXPECT_LT(worst, 1e-12);
}

TEST(Magnus, ObserverSeesEveryGridPointIncludingStart) {
  std::vector<double> times;
  CVec<2> psi(1.0, 0.0);
  propagate<2>(driven, psi, 1.0, 0.3,
               [&](std::size_t k, double t, const CVec<2>&) {
                 EXPECT_EQ(k, times.size());
                 times.push_back(t);
               });
  ASSERT_EQ(times.size(), 5u);
  EXPECT_EQ(times.front(), 0.0);
  EXPECT_DOUBLE_EQ(times.back(), 1.0);
}
