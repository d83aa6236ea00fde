#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "trinorm/optimizer.hpp"

using namespace trinorm;

namespace {

std::vector<ParamRef> refs(std::vector<double>& v) { return {{v.data(), v.size()}}; }

}  // namespace

TEST_CASE("momentum 0 reduces to vanilla SGD") {
  std::vector<double> p{1.0, -2.0};
  std::vector<double> g{0.5, 0.25};
  SgdOptimizer opt;
  opt.learning_rate = 0.1;
  opt.momentum = 0.0;
  auto pr = refs(p);
  opt.init(pr);
  auto gr = refs(g);
  CHECK(opt.step(pr, gr));
  CHECK(p[0] == 1.0 - 0.1 * 0.5);
  CHECK(p[1] == -2.0 - 0.1 * 0.25);
}

TEST_CASE("zero gradient still moves the parameter by the velocity") {
  std::vector<double> p{1.0};
  std::vector<double> g{1.0};
  SgdOptimizer opt;
  opt.learning_rate = 0.1;
  opt.momentum = 0.9;
  auto pr = refs(p);
  opt.init(pr);
  auto gr = refs(g);
  CHECK(opt.step(pr, gr));  // v = 1, p = 1 - 0.1
  g[0] = 0.0;
  const double before = p[0];
  CHECK(opt.step(pr, gr));  // v = 0.9, p -= 0.09
  CHECK(p[0] == before - 0.1 * 0.9 * 1.0);
}

TEST_CASE("100 momentum steps on f(p)=p^2 shrink |p|") {
  // independent scalar simulation of the same recurrence
  double sim_p = 1.0, sim_v = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double g = 2.0 * sim_p;
    sim_v = 0.9 * sim_v + g;
    sim_p -= 0.01 * sim_v;
  }
  REQUIRE(std::abs(sim_p) < 1.0);

  std::vector<double> p{1.0};
  SgdOptimizer opt;
  opt.learning_rate = 0.01;
  opt.momentum = 0.9;
  auto pr = refs(p);
  opt.init(pr);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> g{2.0 * p[0]};
    auto gr = refs(g);
    CHECK(opt.step(pr, gr));
  }
  CHECK(std::abs(p[0]) < 1.0);
  CHECK(p[0] == doctest::Approx(sim_p));
}

TEST_CASE("non-finite gradient skips the step and leaves state untouched") {
  std::vector<double> p{1.0, 2.0};
  SgdOptimizer opt;
  opt.learning_rate = 0.1;
  opt.momentum = 0.9;
  auto pr = refs(p);
  opt.init(pr);
  std::vector<double> g{0.5, std::numeric_limits<double>::quiet_NaN()};
  auto gr = refs(g);
  CHECK_FALSE(opt.step(pr, gr));
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 2.0);
  CHECK(opt.velocity[0][0] == 0.0);
}

TEST_CASE("plateau: three stagnant epochs reduce lr from 0.01 to 0.001") {
  PlateauScheduler s;
  s.learning_rate = 0.01;
  CHECK(s.update(1.0) == 0.01);  // first metric becomes best
  CHECK(s.update(1.0) == 0.01);
  CHECK(s.update(1.0) == 0.01);
  CHECK(s.update(1.0) == doctest::Approx(0.001));
  CHECK(s.stagnant_count == 0);
}

TEST_CASE("plateau: steady improvement never reduces the rate") {
  PlateauScheduler s;
  s.learning_rate = 0.01;
  CHECK(s.update(1.0) == 0.01);
  CHECK(s.update(0.9) == 0.01);
  CHECK(s.update(0.8) == 0.01);
  CHECK(s.update(0.7) == 0.01);
}

TEST_CASE("plateau: improvement after two stagnant epochs resets the counter") {
  PlateauScheduler s;
  s.learning_rate = 0.01;
  s.update(1.0);
  s.update(1.0);  // stagnant 1
  s.update(1.0);  // stagnant 2
  CHECK(s.update(0.5) == 0.01);  // improvement on the third
  CHECK(s.stagnant_count == 0);
  // and the rate is non-increasing and positive over a long scripted run
  double prev = s.learning_rate;
  for (int i = 0; i < 30; ++i) {
    const double lr = s.update(0.5);  // equal to best: stagnant
    CHECK(lr > 0.0);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK(prev == doctest::Approx(0.01 * std::pow(0.1, 10)));
}

TEST_CASE("plateau: tiny non-improvements below 1e-12 count as stagnant") {
  PlateauScheduler s;
  s.learning_rate = 0.01;
  s.update(1.0);
  s.update(1.0 - 1e-14);
  s.update(1.0 - 2e-14);
  const double lr = s.update(1.0 - 3e-14);
  CHECK(lr == doctest::Approx(0.001));
}
