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
#include "bsgd/kernels.hpp"
#include "doctest.h"

using namespace bsgd;

namespace {

void RequireSame(const AggregateTrace& a, const AggregateTrace& b) {
  REQUIRE(a.t == b.t);
  REQUIRE(a.count == b.count);
  REQUIRE(a.mean_f_gap == b.mean_f_gap);
  REQUIRE(a.se_f_gap == b.se_f_gap);
  REQUIRE(a.mean_grad_norm_sq == b.mean_grad_norm_sq);
  REQUIRE(a.se_grad_norm_sq == b.se_grad_norm_sq);
  REQUIRE(a.reps.size() == b.reps.size());
  for (std::size_t i = 0; i < a.reps.size(); ++i) {
    REQUIRE(a.reps[i].status == b.reps[i].status);
    REQUIRE(a.reps[i].psi == b.reps[i].psi);
    const double ta = a.reps[i].tail_mean_f_gap, tb = b.reps[i].tail_mean_f_gap;
    REQUIRE((ta == tb || (std::isnan(ta) && std::isnan(tb))));
  }
}

RepeatedRunConfig NoisyConfig() {
  RepeatedRunConfig cfg;
  const auto problem = MakeNesterovWorst(10);
  cfg.oracle = MakeCompressedOracle(
      MakeRandK(3), MakeGaussianNoiseOracle(MakeExactOracle(problem), 1.0));
  cfg.schedule = StepSchedule::Constant(0.02);
  cfg.steps = 300;
  cfg.reps = 7;
  cfg.seed = 42;
  cfg.cell = 3;
  return cfg;
}

}  // namespace

TEST_CASE("parallel repetitions match the serial reference bit for bit") {
  const auto cfg = NoisyConfig();
  const auto serial = kernels::RepeatedRunsSerial(cfg);
  for (int workers : {1, 2, 3, 4, 8}) {
    CAPTURE(workers);
    RequireSame(serial, kernels::RepeatedRunsParallel(cfg, workers));
  }
  RequireSame(serial, SgdRunRepeated(cfg, 0));
}

TEST_CASE("partial divergence keeps the surviving prefix") {
  auto cfg = NoisyConfig();
  cfg.schedule = StepSchedule::Constant(30.0 / cfg.oracle->problem()->smoothness());
  cfg.steps = 5000;
  const auto serial = kernels::RepeatedRunsSerial(cfg);
  CHECK(serial.diverged_reps() == cfg.reps);
  CHECK(serial.t.size() < 5001);
  RequireSame(serial, kernels::RepeatedRunsParallel(cfg, 3));
}

TEST_CASE("errors in a worker propagate") {
  auto cfg = NoisyConfig();
  cfg.options.x0 = Vector::Zero(3);
  CHECK_THROWS_AS(kernels::RepeatedRunsParallel(cfg, 2), std::invalid_argument);
  CHECK_THROWS_AS(kernels::RepeatedRunsSerial(cfg), std::invalid_argument);
  cfg.reps = 0;
  CHECK_THROWS_AS(kernels::RepeatedRunsParallel(cfg, 2), std::invalid_argument);
}

TEST_CASE("parallel point sampling matches the serial reference") {
  const auto oracle = MakeGaussianSmoothingOracle(MakeNesterovWorst(5), 0.1);
  const auto points = SelectPoints(*oracle->problem(), 6, 9);
  const auto serial = kernels::SamplePointsSerial(*oracle, points, 2000, 17);
  for (int workers : {1, 2, 4}) {
    const auto par = kernels::SamplePointsParallel(*oracle, points, 2000, 17, workers);
    REQUIRE(par.size() == serial.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      REQUIRE(par[i].x == serial[i].x);
      REQUIRE(par[i].bias_norm_sq == serial[i].bias_norm_sq);
      REQUIRE(par[i].bias_se == serial[i].bias_se);
      REQUIRE(par[i].noise_var == serial[i].noise_var);
      REQUIRE(par[i].noise_se == serial[i].noise_se);
      REQUIRE(par[i].mean_norm_sq == serial[i].mean_norm_sq);
    }
  }
}
