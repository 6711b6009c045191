#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "embalance/gramians.hpp"
#include "embalance/parallel.hpp"

using namespace embalance;

TEST_SUITE("parallel") {
  TEST_CASE("every member runs exactly once") {
    for (Execution e : {Execution::serial, Execution::parallel}) {
      std::vector<int> hits(37, 0);
      for_each_member(hits.size(), [&](std::size_t i) { hits[i] += 1; }, e);
      for (int h : hits) CHECK(h == 1);
    }
    for_each_member(0, [](std::size_t) { FAIL("no members"); }, Execution::parallel);
  }

  TEST_CASE("lowest failing member is reported") {
    for (Execution e : {Execution::serial, Execution::parallel}) {
      std::atomic<int> ran{0};
      try {
        for_each_member(
            20,
            [&](std::size_t i) {
              ++ran;
              if (i == 13 || i == 4) throw std::runtime_error("member " + std::to_string(i));
            },
            e);
        FAIL("expected an exception");
      } catch (const std::runtime_error& err) {
        CHECK(std::string(err.what()) == "member 4");
      }
      CHECK(ran.load() == 20);
    }
  }

  TEST_CASE("thread count honours the environment") {
    setenv("EMBALANCE_THREADS", "3", 1);
    CHECK(thread_count() == 3);
    setenv("EMBALANCE_THREADS", "junk", 1);
    CHECK(thread_count() >= 1);
    unsetenv("EMBALANCE_THREADS");
    CHECK(thread_count() >= 1);
  }

  TEST_CASE("serial and parallel gramians are bit-identical") {
    setenv("EMBALANCE_THREADS", "4", 1);
    const NonlinearModel m = build_rc_ladder(6);
    const QuadratureConfig quad{1.0, 21, QuadratureRule::simpson};
    EmpiricalOptions serial, parallel;
    serial.exec = Execution::serial;
    parallel.exec = Execution::parallel;
    const auto sets = PerturbationSets::identity({-0.05, 0.05});
    CHECK(lall_observability(m, sets, quad, serial).matrix == lall_observability(m, sets, quad, parallel).matrix);
    CHECK(lall_controllability(m, sets, quad, serial).matrix == lall_controllability(m, sets, quad, parallel).matrix);
    CHECK(nonlinear_observability(m, sets, quad, serial).matrix ==
          nonlinear_observability(m, sets, quad, parallel).matrix);
    const QuadratureConfig back{0.05, 11, QuadratureRule::simpson};
    const auto tiny = PerturbationSets::identity({-1e-6, 1e-6});
    CHECK(nonlinear_controllability(m, tiny, back, serial).matrix ==
          nonlinear_controllability(m, tiny, back, parallel).matrix);
    unsetenv("EMBALANCE_THREADS");
  }
}
