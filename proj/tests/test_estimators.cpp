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

#include "bsgd/compressors.hpp"
#include "bsgd/estimators.hpp"
#include "doctest.h"

using namespace bsgd;

namespace {

std::shared_ptr<const QuadraticProblem> Quad(int d = 10) { return MakeNesterovWorst(d); }

Vector PointFor(int d) {
  Vector x(d);
  for (int i = 0; i < d; ++i) x[i] = std::sin(1.0 + i);
  return x;
}

}  // namespace

TEST_CASE("exact oracle has no bias and no noise") {
  const auto o = MakeExactOracle(Quad());
  Rng rng(1, 0);
  const auto e = SampleAtPoint(*o, PointFor(10), 5000, rng);
  CHECK(e.bias_exact);
  CHECK(e.bias_norm_sq == 0.0);
  CHECK(e.noise_var == 0.0);
  CHECK(e.samples == 1);
  CHECK(e.mean_norm_sq == doctest::Approx(e.grad_norm_sq));
}

TEST_CASE("additive bias is recovered exactly") {
  const auto o = MakeAdditiveBiasOracle(MakeExactOracle(Quad()), 0.1, UniformDirection(10));
  Rng rng(1, 0);
  const auto e = SampleAtPoint(*o, PointFor(10), 1000, rng);
  CHECK(e.bias_norm_sq == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("gaussian noise variance") {
  const auto o = MakeGaussianNoiseOracle(MakeExactOracle(Quad()), 1.0);
  Rng rng(2, 0);
  const auto e = SampleAtPoint(*o, PointFor(10), 100000, rng);
  CHECK(e.bias_exact);
  CHECK(e.bias_norm_sq == doctest::Approx(0.0));
  CHECK(std::abs(e.noise_var - 1.0) < 5.0 * e.noise_se);
  // chi-square with 10 degrees of freedom, scaled by 1/10: sd of |n|^2 is sqrt(0.2).
  CHECK(e.noise_se == doctest::Approx(std::sqrt(0.2 / 100000)).epsilon(0.05));
}

TEST_CASE("rand-k noise to signal ratio is d/k - 1") {
  const auto o = MakeCompressedOracle(MakeRandK(2), MakeExactOracle(Quad()));
  Rng rng(3, 0);
  const auto e = SampleAtPoint(*o, PointFor(10), 200000, rng);
  REQUIRE(e.bias_exact);
  CHECK(e.noise_var / e.mean_norm_sq == doctest::Approx(4.0).epsilon(0.02));
  CHECK(e.bias_norm_sq == doctest::Approx(0.64 * e.grad_norm_sq).epsilon(1e-12));
}

TEST_CASE("top-k bias stays within its contraction bound") {
  const auto o = MakeCompressedOracle(MakeTopK(3), MakeExactOracle(Quad()));
  Rng rng(4, 0);
  for (const auto& x : SelectPoints(*o->problem(), 10, 4)) {
    const auto e = SampleAtPoint(*o, x, 1000, rng);
    REQUIRE(e.bias_exact);
    REQUIRE(e.bias_norm_sq <= 0.7 * e.grad_norm_sq * (1.0 + 1e-12));
  }
}

TEST_CASE("sample-mean bias correction is unbiased") {
  // Gaussian smoothing of a quadratic is unbiased, so the estimate must be
  // zero to within its standard error.
  const auto o = MakeGaussianSmoothingOracle(Quad(5), 0.1);
  REQUIRE_FALSE(o->Expected(PointFor(5)));
  Rng rng(5, 0);
  int outside = 0;
  for (int i = 0; i < 20; ++i) {
    const auto e = SampleAtPoint(*o, PointFor(5), 5000, rng);
    REQUIRE_FALSE(e.bias_exact);
    REQUIRE(e.bias_se > 0.0);
    REQUIRE(std::abs(e.bias_norm_sq) < 5.0 * e.bias_se);
    if (std::abs(e.bias_norm_sq) > 2.0 * e.bias_se) ++outside;
  }
  CHECK(outside <= 5);
}

TEST_CASE("point selection spans the requested radii") {
  const auto p = Quad();
  const auto pts = SelectPoints(*p, 8, 1, 0.01, 10.0);
  REQUIRE(pts.size() == 8);
  CHECK(pts.front().norm() == doctest::Approx(0.01));
  CHECK(pts.back().norm() == doctest::Approx(10.0));
  CHECK(SelectPoints(*p, 8, 1) == pts);
  CHECK_THROWS_AS(SelectPoints(*p, 0, 1), std::invalid_argument);
  const auto o = MakeExactOracle(p);
  CHECK_THROWS_AS(EstimateBias(*o, pts, 999, 1), std::invalid_argument);
  CHECK_THROWS_AS(EstimateNoise(*o, pts, 10, 1), std::invalid_argument);
}

TEST_CASE("envelope fitting") {
  SUBCASE("collinear points are reproduced") {
    const auto e = FitEnvelope({0.1, 1.0, 10.0}, {0.15, 0.6, 5.1});
    CHECK(e.slope == doctest::Approx(0.5));
    CHECK(e.intercept == doctest::Approx(0.1));
  }
  SUBCASE("constant data gives a flat line") {
    const auto e = FitEnvelope({1.0, 2.0, 3.0}, {0.2, 0.2, 0.2});
    CHECK(e.slope == 0.0);
    CHECK(e.intercept == doctest::Approx(0.2));
  }
  SUBCASE("data through the origin gives a pure slope") {
    const auto e = FitEnvelope({1.0, 2.0, 4.0}, {0.5, 1.0, 2.0});
    CHECK(e.slope == doctest::Approx(0.5));
    CHECK(e.intercept == doctest::Approx(0.0));
  }
  SUBCASE("random clouds are always covered") {
    Rng rng(6, 0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> a, u;
      for (int i = 0; i < 12; ++i) {
        a.push_back(std::pow(10.0, 4.0 * rng.Uniform() - 2.0));
        u.push_back(0.3 * a.back() + 0.01 + 0.05 * rng.Normal());
      }
      const auto e = FitEnvelope(a, u);
      REQUIRE(e.slope >= 0.0);
      REQUIRE(e.intercept >= 0.0);
      for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(e.slope * a[i] + e.intercept >= u[i]);
    }
  }
  CHECK_THROWS_AS(FitEnvelope({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(FitEnvelope({-1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("fitting recovers the tightness constants") {
  const auto p = Quad();
  const auto o = MakeTightnessOracle(p, 0.5, 0.01, 0.1 * UniformDirection(10));
  const auto pts = SelectPoints(*p, 20, 7);
  const auto fit = FitBounds(EstimateBias(*o, pts, 1000, 7));
  CHECK(fit.bias_feasible);
  CHECK(fit.m == doctest::Approx(0.5).epsilon(0.05));
  CHECK(fit.zeta_sq == doctest::Approx(0.01).epsilon(0.05));
  CHECK(fit.M == doctest::Approx(0.0));
  CHECK(fit.sigma_sq == doctest::Approx(0.0));
}

TEST_CASE("fit preconditions") {
  const auto p = Quad();
  const auto o = MakeExactOracle(p);
  CHECK_THROWS_AS(FitBounds(EstimateBias(*o, SelectPoints(*p, 4, 1), 1000, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(FitBounds(EstimateBias(*o, SelectPoints(*p, 10, 1, 1.0, 2.0), 1000, 1)),
                  std::invalid_argument);
}

TEST_CASE("biased bias envelopes are flagged infeasible") {
  // Sign flip: b = -2 grad f, so |b|^2 = 4 |grad f|^2.
  const auto p = Quad();
  const auto flipped = MakeInexactOracle(p, 1.0, [p](const Vector& x) { return Vector(-2.0 * p->Gradient(x)); });
  const auto fit = FitBounds(EstimateBias(*flipped, SelectPoints(*p, 10, 2), 1000, 2));
  CHECK_FALSE(fit.bias_feasible);
  CHECK(fit.m == doctest::Approx(4.0));
}

TEST_CASE("verification of declared bounds") {
  VerifyOptions opt;
  opt.points = 20;
  opt.samples = 20000;

  SUBCASE("gaussian smoothing in d = 2") {
    const auto o = MakeGaussianSmoothingOracle(Quad(2), 0.1);
    const auto report = VerifyDeclared(*o, opt);
    CHECK(report.verified());
    REQUIRE(report.fitted);
    CHECK(report.fitted->bias_feasible);
    CHECK(report.bias.margin <= 0.0);
  }
  SUBCASE("noisy additive bias") {
    const auto o = MakeAdditiveBiasOracle(MakeGaussianNoiseOracle(MakeExactOracle(Quad()), 1.0),
                                          0.1, UniformDirection(10));
    const auto report = VerifyDeclared(*o, opt);
    CHECK(report.verified());
    REQUIRE(report.fitted);
    CHECK(report.fitted->zeta_sq == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(report.fitted->m == doctest::Approx(0.0));
  }
  SUBCASE("planted bias violation") {
    const auto inner = MakeAdditiveBiasOracle(MakeExactOracle(Quad()), 0.1, UniformDirection(10));
    auto declared = inner->RequireBounds();
    declared.zeta_sq *= 0.5;
    const auto report = VerifyDeclared(*WithDeclaredBounds(inner, declared), opt);
    CHECK_FALSE(report.bias.verified);
    CHECK(report.bias.margin == doctest::Approx(0.005));
    CHECK(report.noise.verified);
    CHECK_FALSE(report.verified());
  }
  SUBCASE("planted noise violation") {
    const auto inner = MakeGaussianNoiseOracle(MakeExactOracle(Quad()), 1.0);
    auto declared = inner->RequireBounds();
    declared.sigma_sq = 0.9;
    const auto report = VerifyDeclared(*WithDeclaredBounds(inner, declared), opt);
    CHECK(report.bias.verified);
    CHECK_FALSE(report.noise.verified);
    CHECK_FALSE(report.relative_noise.verified);
  }
  SUBCASE("oracles without bounds are rejected") {
    const auto inner = MakeExactOracle(Quad());
    CHECK_THROWS_AS(VerifyDeclared(*WithDeclaredBounds(inner, std::nullopt), opt), std::logic_error);
  }
}
