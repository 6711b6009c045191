#include <doctest.h>

#include <cmath>

#include "embalance/carleman.hpp"
#include "embalance/ode.hpp"
#include "oracles.hpp"

using namespace embalance;

TEST_SUITE("carleman") {
  TEST_CASE("ladder taylor coefficients come from the resistor law") {
    // g(v) = e^{40v} - 1 + v: g'(0) = 41, g''(0)/2 = 800.
    const double h = 1e-5;
    const double g1 = (resistor_current(h) - resistor_current(-h)) / (2 * h);
    const double g2 = (resistor_current(h) - 2 * resistor_current(0) + resistor_current(-h)) / (h * h) / 2;
    CHECK(g1 == doctest::Approx(41.0).epsilon(1e-6));
    CHECK(g2 == doctest::Approx(800.0).epsilon(1e-4));

    const PolynomialDrift pd = taylor_drift(build_rc_ladder(3), 2);
    Mat A1(3, 3);
    A1 << -82, 41, 0, 41, -82, 41, 0, 41, -41;
    CHECK(pd.A1 == A1);
    // Node 1: -800 v1^2 - 800 (v1 - v2)^2.
    CHECK(pd.A2(0, 0 * 3 + 0) == -1600.0);
    CHECK(pd.A2(0, 0 * 3 + 1) == 800.0);
    CHECK(pd.A2(0, 1 * 3 + 0) == 800.0);
    CHECK(pd.A2(0, 1 * 3 + 1) == -800.0);
    CHECK(pd.A2(2, 2 * 3 + 2) == 800.0);
    CHECK(taylor_drift(build_rc_ladder(3), 1).A2.isZero(0.0));
  }

  TEST_CASE("second-order term is symmetric") {
    const PolynomialDrift pd = taylor_drift(build_rc_ladder(5), 2);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j) CHECK((pd.A2.col(i * 5 + j) - pd.A2.col(j * 5 + i)).norm() == 0.0);
  }

  TEST_CASE("finite differences match the analytic ladder path") {
    const NonlinearModel m = build_rc_ladder(2);
    const PolynomialDrift a = taylor_drift(m, 2);
    const PolynomialDrift f = taylor_drift_numeric(m, 2);
    CHECK(oracle::rel_fro(f.A1, a.A1) <= 1e-4);
    CHECK(oracle::rel_fro(f.A2, a.A2) <= 1e-4);
  }

  TEST_CASE("linear model has no quadratic term") {
    const NonlinearModel m = random_stable_lti(3, 4).to_nonlinear();
    const PolynomialDrift pd = taylor_drift(m, 2);
    CHECK(pd.A2.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(oracle::rel_fro(pd.A1, random_stable_lti(3, 4).lti->A) <= 1e-9);
  }

  TEST_CASE("benchmark lift dimension and nilpotency") {
    const BilinearModel bl = carleman_lift(build_rc_ladder(30));
    CHECK(bl.dim() == 930);
    CHECK(bl.nilpotency_index == 2);
    CHECK((bl.N * bl.N).cwiseAbs().maxCoeff() == 0.0);
    CHECK(bl.N.cwiseAbs().maxCoeff() > 0.0);
    CHECK(bl.B == Vec::Unit(930, 0));
    CHECK(bl.C == RowVec::Unit(930, 0));
  }

  TEST_CASE("lifted spectrum contains the pairwise sums") {
    PolynomialDrift pd;
    pd.A1 = Vec((Vec(3) << -1.0, -2.5, -4.0).finished()).asDiagonal();
    pd.A2 = Mat::Zero(3, 9);
    pd.A2(0, 4) = 0.3;
    const BilinearModel bl = carleman_lift(pd, Vec::Ones(3), RowVec::Ones(3));
    // Block-triangular with diagonal blocks, so the diagonal is the spectrum.
    Vec expected(12);
    expected.head(3) = pd.A1.diagonal();
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) expected(3 + i * 3 + j) = pd.A1(i, i) + pd.A1(j, j);
    CHECK(bl.A.diagonal() == expected);
    Mat lower = bl.A;
    lower.topRightCorner(3, 9).setZero();
    CHECK(lower.isDiagonal(0.0));
  }

  TEST_CASE("lift of a scalar quadratic system tracks the original") {
    PolynomialDrift pd;
    pd.A1 = Mat::Constant(1, 1, -1.0);
    pd.A2 = Mat::Constant(1, 1, 0.5);
    const Vec B = Vec::Ones(1);
    const RowVec C = RowVec::Ones(1);
    const NonlinearModel orig = polynomial_model(pd, B, C);
    const BilinearModel lift = carleman_lift(pd, B, C);
    IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-14;
    const Trajectory a = integrate(orig, Vec::Zero(1), [](double t) { return Vec::Constant(1, 0.01 * std::exp(-t)); },
                                   0.0, 1.0, 100, cfg);
    const Trajectory b = simulate(lift, Vec::Zero(2), [](double t) { return 0.01 * std::exp(-t); }, 0.0, 1.0, 100, cfg);
    CHECK(a.outputs.cwiseAbs().maxCoeff() <= 0.01);
    for (Index k = 1; k <= 100; ++k)
      CHECK(std::abs(a.outputs(k, 0) - b.outputs(k, 0)) <= 1e-3 * std::abs(a.outputs(k, 0)));
  }

  TEST_CASE("zero state lifts to zero") {
    CHECK(lift_state(Vec::Zero(4)).isZero(0.0));
    const Vec x = (Vec(2) << 2.0, 3.0).finished();
    const Vec l = lift_state(x);
    CHECK(l.size() == 6);
    CHECK(l(2) == 4.0);
    CHECK(l(3) == 6.0);
    CHECK(l(4) == 6.0);
    CHECK(l(5) == 9.0);
  }
}
