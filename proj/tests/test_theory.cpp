// Copyright 2026 The biased-sgd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include <cmath>

#include "bsgd/problems.hpp"
#include "bsgd/rng.hpp"
#include "bsgd/theory.hpp"
#include "doctest.h"

using namespace bsgd;
using namespace bsgd::theory;

namespace {

OracleBounds B(double m, double zeta_sq, double M, double sigma_sq) {
  return {m, zeta_sq, M, sigma_sq};
}

OracleBounds RandomBounds(Rng& rng) {
  const auto pick = [&](double lo, double hi) { return lo * std::pow(hi / lo, rng.Uniform()); };
  OracleBounds b;
  b.m = rng.Uniform() < 0.3 ? 0.0 : 0.99 * rng.Uniform();
  b.zeta_sq = rng.Uniform() < 0.3 ? 0.0 : pick(1e-6, 1.0);
  b.M = rng.Uniform() < 0.3 ? 0.0 : pick(1e-3, 100.0);
  b.sigma_sq = rng.Uniform() < 0.3 ? 0.0 : pick(1e-4, 100.0);
  return b;
}

}  // namespace

TEST_CASE("smooth stepsize examples") {
  CHECK(SmoothStepsize(0.1, 1.0, B(0, 0, 0, 0)) == 1.0);
  CHECK(SmoothStepsize(0.1, 1.0, B(0, 0, 0, 1)) == doctest::Approx(0.05));
  CHECK(SmoothStepsize(0.1, 1.0, B(0.9, 0, 9, 0)) == doctest::Approx(0.1));
  CHECK(SmoothStepsize(0.1, 1.0, B(0, 0.1, 0, 1)) == doctest::Approx(0.1));
  CHECK(SmoothStepsizeProof(0.1, 1.0, B(0, 0.1, 0, 1)) == doctest::Approx(0.05));
  CHECK_THROWS_AS(SmoothStepsize(0.1, 1.0, B(1.0, 0, 0, 0)), std::invalid_argument);
}

TEST_CASE("smooth iteration examples") {
  CHECK(SmoothIterations(0.1, 1.0, 1.0, B(0, 0, 0, 0)) == 40);
  CHECK(SmoothIterations(0.1, 1.0, 1.0, B(0, 0, 0, 1)) == 800);
  CHECK(SmoothIterations(0.01, 2.0, 3.0, B(0, 0, 0, 0)) == 2400);
  // m = 0.5: first term doubles, second quadruples.
  CHECK(SmoothIterations(0.1, 1.0, 1.0, B(0.5, 0, 0, 0)) == 80);
  CHECK(SmoothIterations(0.1, 1.0, 1.0, B(0.5, 0, 0, 1)) == 3200);
  CHECK_THROWS_AS(SmoothIterations(0.0, 1.0, 1.0, B(0, 0, 0, 0)), std::invalid_argument);
}

TEST_CASE("PL stepsize and iteration examples") {
  CHECK(PlStepsize(0.01, 1.0, 0.1, B(0, 0, 0, 1)) == doctest::Approx(0.001));
  const auto p = MakeNesterovWorst(10);
  const double L = p->smoothness(), mu = *p->pl_constant();
  CHECK(PlStepsize(1e-3, L, mu, B(0, 0, 0, 0)) == doctest::Approx(1.0 / L));
  CHECK(PlIterations(1e-3, L, mu, 1.0, B(0, 0, 0, 0)) ==
        static_cast<std::int64_t>(std::ceil(L / mu * std::log(2.0 / 1e-3))));
  const auto gd = PlIterations(1e-3, L, mu, 1.0, B(0, 0, 0, 0));
  const auto topk = PlIterations(1e-3, L, mu, 1.0, B(0.9, 0, 0, 0));
  CHECK(static_cast<double>(topk) / gd == doctest::Approx(10.0).epsilon(0.01));
  CHECK(PlIterations(1.0, L, mu, 0.1, B(0, 0, 0, 0)) == 1);
}

TEST_CASE("error floor examples") {
  CHECK(ErrorFloor(0.5, 1.0, 0.1, B(0, 0, 0, 0)) == 0.0);
  CHECK(ErrorFloor(0.01, 1.0, 0.1, B(0, 0, 0, 1)) == doctest::Approx(0.05));
  CHECK(ErrorFloor(0.01, 1.0, 0.1, B(0, 0.01, 0, 0)) == doctest::Approx(0.05));
  CHECK(ErrorFloor(0.5, 1.0, 0.1, B(0, 0.01, 0, 0)) == doctest::Approx(0.05));
  CHECK_THROWS_AS(ErrorFloor(2.0, 1.0, 0.1, B(0, 0, 0, 0)), std::invalid_argument);
}

TEST_CASE("psi bound examples") {
  CHECK(PsiBound(100, 1.0, 1.0, 1.0, B(0, 0, 0, 0)) == doctest::Approx(0.02));
  const double limit = PsiBound(1LL << 60, 0.1, 1.0, 1.0, B(0, 0.2, 0, 3));
  CHECK(limit == doctest::Approx(0.1 * 3 + 0.2).epsilon(1e-9));
  CHECK(PsiBound(50, 0.1, 1.0, 1.0, B(0.9, 0.01, 0, 1)) ==
        doctest::Approx(10.0 * PsiBound(50, 0.1, 1.0, 1.0, B(0.0, 0.01, 0, 1))));
}

TEST_CASE("descent lemma examples") {
  CHECK(DescentLemmaRhs(4.0, 0.5, 2.0, B(0, 0, 0, 0)) == doctest::Approx(-4.0 / 4.0));
  CHECK(DescentLemmaRhs(0.0, 0.5, 2.0, B(0, 0, 0, 0)) == 0.0);
  CHECK(DescentLemmaRhs(1.0, 0.1, 1.0, B(0.5, 0.2, 1, 2)) ==
        doctest::Approx(0.1 * -0.5 / 2 + 0.1 * 0.2 / 2 + 0.01 * 2 / 2));
}

TEST_CASE("zeroth-order budget") {
  const double L = 2.0;
  const auto b = GaussianSmoothingBounds(10, L, 0.01);
  CHECK(MaxStepsize(L, b) == doctest::Approx(1.0 / (57.0 * L)));
  CHECK(ZerothOrderBudget(0.1, 10, L, 0.1, 0.01, 1.0) == PlIterations(0.1, L, 0.1, 1.0, b));
  // The zeta^2 part of the floor: L^2 tau^2 (d+3)^3 / 4 over 2 mu.
  const double floor = ErrorFloor(MaxStepsize(L, b), L, 0.1, B(b.m, b.zeta_sq, b.M, 0.0));
  CHECK(floor == doctest::Approx(1e-4 * L * L * 2197.0 / (8.0 * 0.1)));
  const auto small = ZerothOrderBudget(1.0, 5, L, 0.5, 1e-4, 1.0);
  const auto large = ZerothOrderBudget(1.0, 20, L, 0.5, 1e-4, 1.0);
  CHECK(large > small);
}

TEST_CASE("all-zero bounds recover textbook gradient descent") {
  const auto s = PredictSmooth(0.01, 2.0, 1.0, B(0, 0, 0, 0));
  CHECK(s.stepsize == 0.5);
  CHECK(s.iterations == 800);
  CHECK(s.floor == 0.0);
  CHECK(s.measure == Measure::kGradNormAverage);
  const auto pl = PredictPl(0.01, 2.0, 0.5, 1.0, B(0, 0, 0, 0));
  CHECK(pl.stepsize == 0.5);
  CHECK(pl.iterations == static_cast<std::int64_t>(std::ceil(4.0 * std::log(200.0))));
  CHECK(pl.floor == 0.0);
}

TEST_CASE("proof consistency on random parameter tuples") {
  Rng rng(20, 0);
  for (int i = 0; i < 1000; ++i) {
    const OracleBounds b = RandomBounds(rng);
    const double L = std::pow(10.0, 2.0 * rng.Uniform() - 1.0);
    const double mu = L * std::pow(10.0, -3.0 * rng.Uniform());
    const double F0 = std::pow(10.0, 2.0 * rng.Uniform() - 1.0);
    const double eps = std::pow(10.0, -4.0 * rng.Uniform());

    const double gs = SmoothStepsizeProof(eps, L, b);
    const auto Ts = SmoothIterations(eps, L, F0, b);
    REQUIRE(gs <= MaxStepsize(L, b));
    REQUIRE(PsiBound(Ts, gs, F0, L, b) <= (eps + b.zeta_sq / (1.0 - b.m)) * (1.0 + 1e-12));

    const double gp = PlStepsize(eps, L, mu, b);
    const auto Tp = PlIterations(eps, L, mu, F0, b);
    REQUIRE(gp <= MaxStepsize(L, b));
    const double pl_gap = PlGapBound(Tp, gp, F0, L, mu, b);
    const double pl_target = eps + b.zeta_sq / (2.0 * mu * (1.0 - b.m));
    INFO("gap - target = ", pl_gap - pl_target, " target = ", pl_target);
    REQUIRE(pl_gap <= pl_target * (1.0 + 1e-12));
  }
}

TEST_CASE("budgets are monotone in their parameters") {
  Rng rng(21, 0);
  for (int i = 0; i < 300; ++i) {
    const OracleBounds b = RandomBounds(rng);
    const double L = 1.0 + rng.Uniform(), mu = 0.1, F0 = 1.0, eps = 0.01 + 0.1 * rng.Uniform();
    const auto s = SmoothIterations(eps, L, F0, b);
    const auto p = PlIterations(eps, L, mu, F0, b);
    REQUIRE(SmoothIterations(2 * eps, L, F0, b) <= s);
    REQUIRE(PlIterations(2 * eps, L, mu, F0, b) <= p);
    OracleBounds up = b;
    up.sigma_sq = 2 * b.sigma_sq + 0.1;
    REQUIRE(SmoothIterations(eps, L, F0, up) >= s);
    REQUIRE(PlIterations(eps, L, mu, F0, up) >= p);
    up = b;
    up.M = 2 * b.M + 0.1;
    REQUIRE(SmoothIterations(eps, L, F0, up) >= s);
    REQUIRE(PlIterations(eps, L, mu, F0, up) >= p);
    up = b;
    up.m = b.m + 0.5 * (1.0 - b.m);
    REQUIRE(SmoothIterations(eps, L, F0, up) >= s);
    REQUIRE(PlIterations(eps, L, mu, F0, up) >= p);
    REQUIRE(SmoothIterations(eps, L, 2 * F0, b) >= s);
    REQUIRE(PlIterations(eps, L, mu, 2 * F0, b) >= p);
  }
}

TEST_CASE("stepsize invariant") {
  Rng rng(22, 0);
  for (int i = 0; i < 200; ++i) {
    const OracleBounds b = RandomBounds(rng);
    const double L = 0.5 + rng.Uniform();
    const auto s = PredictSmooth(0.05, L, 1.0, b);
    REQUIRE(s.stepsize <= MaxStepsize(L, b));
    REQUIRE(s.floor >= 0.0);
    REQUIRE(SmoothStepsize(0.05, L, b) >= SmoothStepsizeProof(0.05, L, b));
    REQUIRE(PlStepsizeTheorem(0.05, L, 0.1, b) >= PlStepsize(0.05, L, 0.1, b));
  }
}
