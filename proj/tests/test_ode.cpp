#include <doctest.h>

#include <cmath>
#include <sstream>

#include "embalance/errors.hpp"
#include "embalance/model.hpp"
#include "embalance/ode.hpp"
#include "oracles.hpp"

using namespace embalance;

namespace {

RhsFn decay() {
  return [](double, const Vec& x) -> Vec { return -x; };
}

RhsFn cubic() {
  return [](double, const Vec& x) -> Vec { return -x.array().cube().matrix(); };
}

IntegratorConfig rk4(double h) {
  IntegratorConfig c;
  c.method = IntegratorMethod::rk4_fixed;
  c.step = h;
  return c;
}

}  // namespace

TEST_SUITE("ode") {
  TEST_CASE("uniform grid") {
    const auto g = uniform_grid(0.0, 1.0, 7);
    REQUIRE(g.size() == 8);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(std::abs((g[i] - g[i - 1]) - 1.0 / 7.0) <= 1e-12);
    const auto b = uniform_grid(0.0, -2.0, 4);
    CHECK(b.back() == -2.0);
    CHECK(b[1] == doctest::Approx(-0.5));
  }

  TEST_CASE("exponential decay") {
    const Vec x0 = Vec::Ones(1);
    const Trajectory a = integrate(decay(), x0, 0.0, 1.0, 10, IntegratorConfig{});
    CHECK(std::abs(a.states(10, 0) - std::exp(-1.0)) <= 1e-8);
    for (Index k = 0; k <= 10; ++k) CHECK(std::abs(a.states(k, 0) - std::exp(-a.grid[k])) <= 1e-8);
    const Trajectory b = integrate(decay(), x0, 0.0, 1.0, 10, rk4(1e-3));
    CHECK(std::abs(b.states(10, 0) - std::exp(-1.0)) <= 1e-8);
    CHECK(a.t0 == 0.0);
    CHECK(a.t1 == 1.0);
    CHECK(a.states.rows() == 11);
  }

  TEST_CASE("cubic decay forward closed form") {
    const double c = 0.1;
    const Trajectory tr = integrate(cubic(), Vec::Constant(1, c), 0.0, 1.0, 20, IntegratorConfig{});
    CHECK(tr.states(20, 0) == doctest::Approx(0.0990148).epsilon(1e-6));
    for (Index k = 0; k <= 20; ++k)
      CHECK(std::abs(tr.states(k, 0) - c / std::sqrt(1.0 + 2.0 * c * c * tr.grid[k])) <= 1e-10);
  }

  TEST_CASE("cubic decay blows up backward") {
    try {
      integrate(cubic(), Vec::Ones(1), 0.0, -0.6, 60, IntegratorConfig{});
      FAIL("expected NonFiniteState");
    } catch (const NonFiniteState& e) {
      CHECK(e.time() < -0.45);
      CHECK(e.time() > -0.55);
    }
    CHECK_THROWS_AS(integrate(cubic(), Vec::Ones(1), 0.0, -0.6, 60, rk4(1e-3)), NonFiniteState);
    const Trajectory ok = integrate(cubic(), Vec::Ones(1), 0.0, -0.4, 40, IntegratorConfig{});
    CHECK(ok.states(40, 0) == doctest::Approx(1.0 / std::sqrt(1.0 - 0.8)).epsilon(1e-7));
  }

  TEST_CASE("rk4 order") {
    auto err = [](double h) {
      return std::abs(integrate(decay(), Vec::Ones(1), 0.0, 1.0, 1, rk4(h)).states(1, 0) - std::exp(-1.0));
    };
    CHECK(err(0.1) / err(0.05) >= 12.0);
  }

  TEST_CASE("time reversal returns to the start") {
    const LTVModel lti = random_stable_lti(4, 3);
    const Mat A = lti.lti->A;
    const RhsFn f = [A](double, const Vec& x) -> Vec { return A * x; };
    const Vec x0 = (Vec(4) << 1.0, -0.5, 0.25, 2.0).finished();
    const Trajectory fwd = integrate(f, x0, 0.0, 2.0, 10, IntegratorConfig{});
    const Trajectory back = integrate(f, fwd.states.row(10).transpose(), 2.0, 0.0, 10, IntegratorConfig{});
    CHECK((back.states.row(10).transpose() - x0).norm() <= 1e-6);
  }

  TEST_CASE("integration is deterministic") {
    const NonlinearModel m = build_rc_ladder(10);
    const Vec x0 = Vec::Constant(10, 0.05);
    const InputSignal u = [](double t) { return Vec::Constant(1, std::exp(-t)); };
    const Trajectory a = integrate(m, x0, u, 0.0, 1.0, 100, IntegratorConfig{});
    const Trajectory b = integrate(m, x0, u, 0.0, 1.0, 100, IntegratorConfig{});
    CHECK(a.states == b.states);
    CHECK(a.outputs == b.outputs);
  }

  TEST_CASE("step limit") {
    IntegratorConfig cfg;
    cfg.max_steps = 5;
    CHECK_THROWS_AS(integrate(decay(), Vec::Ones(1), 0.0, 100.0, 10, cfg), StepLimitExceeded);
  }

  TEST_CASE("config validation") {
    IntegratorConfig cfg;
    cfg.rtol = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = IntegratorConfig{};
    cfg.max_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(integrator_method_from_string("rk4-fixed") == IntegratorMethod::rk4_fixed);
    CHECK_THROWS_AS(integrator_method_from_string("euler"), ConfigError);
  }

  TEST_CASE("impulse response of an lti system starts at B") {
    const LTVModel lti = random_stable_lti(3, 4);
    const NonlinearModel m = lti.to_nonlinear();
    const Trajectory tr = impulse_response(m, 1.0, Vec::Ones(1), 1.0, 10, IntegratorConfig{});
    CHECK((tr.states.row(0).transpose() - lti.lti->B.col(0)).norm() == 0.0);
    const Mat e = oracle::expm(lti.lti->A * 1.0);
    CHECK((tr.states.row(10).transpose() - e * lti.lti->B.col(0)).norm() <= 1e-8);
  }

  TEST_CASE("ladder impulse response decays") {
    const NonlinearModel m = build_rc_ladder(30);
    const Trajectory tr = impulse_response(m, 0.1, Vec::Ones(1), 40.0, 400, IntegratorConfig{});
    CHECK((tr.states.row(0).transpose() - 0.1 * Vec::Unit(30, 0)).norm() == 0.0);
    CHECK(tr.states.row(400).norm() < 1e-4);
    CHECK(tr.states.row(400).norm() < tr.states.row(200).norm());
  }

  TEST_CASE("ladder impulse response is not linear in the scale") {
    const NonlinearModel m = build_rc_ladder(30);
    const Trajectory a = impulse_response(m, 0.1, Vec::Ones(1), 1.0, 100, IntegratorConfig{});
    const Trajectory b = impulse_response(m, 0.2, Vec::Ones(1), 1.0, 100, IntegratorConfig{});
    CHECK((b.states - 2.0 * a.states).cwiseAbs().maxCoeff() > 1e-6);
  }

  TEST_CASE("mean value") {
    Trajectory k;
    k.grid = uniform_grid(0.0, 3.0, 30);
    k.states = Mat::Constant(31, 2, 0.0);
    k.states.col(0).setConstant(2.5);
    k.states.col(1).setConstant(-1.0);
    const Vec mk = mean_value(k);
    CHECK(mk(0) == doctest::Approx(2.5));
    CHECK(mk(1) == doctest::Approx(-1.0));

    const auto grid = uniform_grid(0.0, 20.0, 20000);
    Mat w(20001, 1);
    for (Index i = 0; i <= 20000; ++i) w(i, 0) = std::exp(-grid[static_cast<std::size_t>(i)]);
    CHECK(std::abs(mean_value(grid, w)(0) - (1.0 - std::exp(-20.0)) / 20.0) <= 1e-4);

    const LTVModel lti = random_stable_lti(4, 6);
    const double lam = lti.lti->A.eigenvalues().real().cwiseAbs().minCoeff();
    const NonlinearModel m = lti.to_nonlinear();
    const Trajectory tr = impulse_response(m, 1.0, Vec::Ones(1), 40.0 / lam, 8000, IntegratorConfig{});
    // The finite-horizon average of a decaying response is A^{-1}(e^{AT} - I) x0 / T, O(1/T).
    const double T = 40.0 / lam;
    const Mat& A = lti.lti->A;
    const Vec x0 = lti.lti->B.col(0);
    const Vec closed = A.partialPivLu().solve((oracle::expm(A * T) - Mat::Identity(4, 4)) * x0) / T;
    CHECK((mean_value(tr) - closed).norm() <= 1e-5 * closed.norm());
    CHECK(mean_value(tr).norm() <= A.inverse().norm() * x0.norm() / T);
  }

  TEST_CASE("trajectory csv") {
    const NonlinearModel m = build_rc_ladder(2);
    const Trajectory tr = integrate(m, Vec::Constant(2, 0.01), {}, 0.0, 1.0, 2, IntegratorConfig{});
    std::ostringstream os;
    write_csv(os, tr);
    std::istringstream is(os.str());
    std::string header, row;
    std::getline(is, header);
    CHECK(header == "t,x1,x2,y1");
    std::getline(is, row);
    CHECK(row == "0,0.01,0.01,0.01");
    CHECK(os.str().find('\r') == std::string::npos);
  }
}
