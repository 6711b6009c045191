#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "embalance/errors.hpp"
#include "embalance/model.hpp"
#include "embalance/ode.hpp"
#include "oracles.hpp"

using namespace embalance;

namespace {

double g(double v) { return std::exp(40.0 * v) - 1.0 + v; }

Vec random_point(std::mt19937_64& rng, Index n, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Vec x(n);
  for (Index i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("rc ladder has the benchmark shape") {
    const NonlinearModel m = build_rc_ladder(30);
    CHECK(m.n == 30);
    CHECK(m.p == 1);
    CHECK(m.q == 1);
    const Mat B = m.input_map(0.0);
    CHECK(B.rows() == 30);
    CHECK(B.cols() == 1);
    CHECK(B.isApprox(Mat(Vec::Unit(30, 0))));
    Vec x = Vec::LinSpaced(30, 0.0, 0.029);
    CHECK(m.output_map(0.0, x)(0) == doctest::Approx(x(0)));
    CHECK(m.equilibrium.isZero(0.0));
  }

  TEST_CASE("drift vanishes at the equilibrium") {
    const NonlinearModel m = build_rc_ladder(30);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t(-10.0, 10.0);
    for (int k = 0; k < 10; ++k) CHECK(m.drift(t(rng), m.equilibrium).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("two-node ladder drift follows the resistor law") {
    const NonlinearModel m = build_rc_ladder(2);
    const Vec x = (Vec(2) << 0.01, 0.0).finished();
    const Vec d = m.drift(0.0, x);
    CHECK(d(0) == doctest::Approx(-g(0.01) - g(0.01)).epsilon(1e-13));
    CHECK(d(1) == doctest::Approx(g(0.01)).epsilon(1e-13));
    const RcLadderInfo info{2};
    const Vec grad = oracle::fd_gradient([&](const Vec& y) { return potential(info, y); }, x, 1e-7);
    CHECK((grad + d).norm() <= 1e-6 * d.norm());
  }

  TEST_CASE("ladder rejects fewer than two nodes") {
    CHECK_THROWS_AS(build_rc_ladder(1), ConfigError);
    CHECK_THROWS_AS(build_rc_ladder(0), ConfigError);
  }

  TEST_CASE("potential at zero is n/40") {
    CHECK(potential(RcLadderInfo{30}, Vec::Zero(30)) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(potential(RcLadderInfo{5}, Vec::Zero(5)) == doctest::Approx(5.0 / 40.0));
  }

  TEST_CASE("potential guards the exponent") {
    Vec x = Vec::Zero(4);
    x(0) = 18.0;  // 40 * 18 = 720 > 700
    CHECK_THROWS_AS(potential(RcLadderInfo{4}, x), ExponentOverflow);
    x(0) = 17.0;
    CHECK(std::isfinite(potential(RcLadderInfo{4}, x)));
    Vec y = Vec::Zero(4);
    y(2) = -18.0;  // branch 2-3 carries 40 * 18
    CHECK_THROWS_AS(potential(RcLadderInfo{4}, y), ExponentOverflow);
  }

  TEST_CASE("gradient of the potential equals minus the drift") {
    const NonlinearModel m = build_rc_ladder(30);
    const RcLadderInfo info{30};
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20; ++k) {
      const Vec x = random_point(rng, 30, 0.1);
      const Vec grad = oracle::fd_gradient([&](const Vec& y) { return potential(info, y); }, x, 1e-6);
      const Vec d = m.drift(0.0, x);
      CHECK((grad + d).norm() <= 1e-5 * d.norm());
      CHECK((potential_gradient(info, x) + d).norm() == 0.0);
    }
  }

  TEST_CASE("potential decreases along a zero-input trajectory") {
    const NonlinearModel m = build_rc_ladder(30);
    const Trajectory tr = integrate(m, Vec::Constant(30, 0.1), {}, 0.0, 1.0, 99, IntegratorConfig{});
    const RcLadderInfo info{30};
    double prev = potential(info, tr.states.row(0).transpose());
    for (Index k = 1; k < tr.samples(); ++k) {
      const double v = potential(info, tr.states.row(k).transpose());
      CHECK(v <= prev + 1e-14);
      prev = v;
    }
    CHECK(tr.states.row(tr.samples() - 1).norm() < tr.states.row(0).norm());
  }

  TEST_CASE("random stable lti") {
    const LTVModel one = random_stable_lti(1, 5);
    CHECK(one.lti->A(0, 0) < 0.0);
    const LTVModel a = random_stable_lti(5, 7), b = random_stable_lti(5, 7);
    CHECK(a.lti->A == b.lti->A);
    CHECK(a.lti->B == b.lti->B);
    CHECK(a.lti->C == b.lti->C);
    CHECK(random_stable_lti(5, 8).lti->A != a.lti->A);
    const LTVModel c = random_stable_lti(8, 1);
    CHECK(c.lti->A.eigenvalues().real().maxCoeff() <= -0.1);
    CHECK(c.A(3.0) == c.lti->A);
  }

  TEST_CASE("ltv conversion commutes with evaluation") {
    LTVModel m;
    m.n = 2;
    m.p = 1;
    m.q = 1;
    m.A = [](double t) { return Mat((Mat(2, 2) << -1.0, std::sin(t), 0.0, -2.0).finished()); };
    m.B = [](double t) { return Mat((Mat(2, 1) << 1.0, t).finished()); };
    m.C = [](double) { return Mat((Mat(1, 2) << 1.0, 1.0).finished()); };
    const NonlinearModel nl = m.to_nonlinear();
    const Vec x = (Vec(2) << 0.3, -0.7).finished();
    for (double t : {0.0, 0.4, 2.5}) {
      CHECK((nl.drift(t, x) - m.A(t) * x).norm() == 0.0);
      CHECK((nl.input_map(t) - m.B(t)).norm() == 0.0);
      CHECK((nl.output_map(t, x) - m.C(t) * x).norm() == 0.0);
    }
  }

  TEST_CASE("perturbation sets") {
    CHECK_NOTHROW(PerturbationSets::identity({-5, -0.5, 0.5, 5}).validate(3));
    CHECK_THROWS_AS(PerturbationSets::identity({0.1, 0.0}).validate(3), ConfigError);
    CHECK_THROWS_AS(PerturbationSets::identity({}).validate(3), ConfigError);
    PerturbationSets bad{{1.0}, {Mat::Constant(2, 2, 1.0)}};
    CHECK_THROWS_AS(bad.validate(2), ConfigError);
    const auto rot = random_rotations(4, 3, 9);
    REQUIRE(rot.size() == 3);
    for (const Mat& T : rot) CHECK((T.transpose() * T - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(random_rotations(4, 3, 9)[1] == rot[1]);
    PerturbationSets good{{1.0}, rot};
    CHECK_NOTHROW(good.validate(4));
    CHECK_THROWS_AS(good.validate(3), ConfigError);
    CHECK(PerturbationSets::identity({1.0}).rotations_for(3)[0] == Mat::Identity(3, 3));
  }

  TEST_CASE("nilpotency index") {
    Mat shift = Mat::Zero(4, 4);
    for (Index i = 0; i + 1 < 4; ++i) shift(i + 1, i) = 1.0;
    CHECK(nilpotency_index(shift) == 4);
    CHECK(nilpotency_index(Mat::Zero(3, 3)) == 1);
    CHECK(nilpotency_index(Mat::Identity(3, 3)) == 0);
  }

  TEST_CASE("bilinear impulse jump is the terminating series") {
    BilinearModel bl;
    bl.A = -Mat::Identity(3, 3);
    bl.N = Mat::Zero(3, 3);
    bl.N(1, 0) = 2.0;
    bl.N(2, 1) = 1.0;  // N^3 = 0
    bl.B = Vec::Unit(3, 0);
    bl.C = RowVec::Unit(3, 2);
    bl.nilpotency_index = nilpotency_index(bl.N);
    REQUIRE(bl.nilpotency_index == 3);
    const double c = 0.4;
    const Vec expected = c * (bl.B + (c / 2) * bl.N * bl.B + (c / 2) * (c / 2) * bl.N * bl.N * bl.B);
    CHECK((bl.impulse_jump(c) - expected).norm() <= 1e-15);
    const NonlinearModel view = bl.impulse_view();
    CHECK((view.impulse_increment(c, Vec::Ones(1)) - expected).norm() <= 1e-15);
  }

  TEST_CASE("lti and bilinear files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "embalance_model_test";
    std::filesystem::create_directories(dir);
    const LTVModel m = random_stable_lti(4, 2, 2, 3);
    save_lti((dir / "m.txt").string(), *m.lti);
    const LtiMatrices back = load_lti((dir / "m.txt").string());
    CHECK(back.A == m.lti->A);
    CHECK(back.B == m.lti->B);
    CHECK(back.C == m.lti->C);

    BilinearModel bl;
    bl.A = m.lti->A;
    bl.N = Mat::Zero(4, 4);
    bl.N(3, 0) = 0.5;
    bl.B = m.lti->B.col(0);
    bl.C = m.lti->C.row(0);
    bl.nilpotency_index = 2;
    save_bilinear((dir / "b.txt").string(), bl);
    const BilinearModel bb = load_bilinear((dir / "b.txt").string());
    CHECK(bb.A == bl.A);
    CHECK(bb.N == bl.N);
    CHECK(bb.B == bl.B);
    CHECK(bb.C == bl.C);
    CHECK(bb.nilpotency_index == 2);
    CHECK_THROWS_AS(load_lti((dir / "missing.txt").string()), ConfigError);
  }

  TEST_CASE("presets") {
    CHECK(model_preset("rc-ladder", 30, 0).n == 30);
    CHECK(model_preset("random-lti", 6, 3).n == 6);
    CHECK_THROWS_AS(model_preset("van-der-pol", 2, 0), ConfigError);
  }
}
