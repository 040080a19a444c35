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

#include "bsgd/optimizer.hpp"
#include "doctest.h"

using namespace bsgd;

namespace {

OraclePtr NoisyQuadratic(double sigma_sq) {
  return MakeGaussianNoiseOracle(MakeExactOracle(MakeNesterovWorst(10)), sigma_sq);
}

}  // namespace

TEST_CASE("checkpoint indices") {
  const auto full = CheckpointIndices(50, 100);
  REQUIRE(full.size() == 51);
  CHECK(full.front() == 0);
  CHECK(full.back() == 50);

  const auto thin = CheckpointIndices(5000000, 1000000);
  CHECK(thin.size() < 3000);
  CHECK(thin.front() == 0);
  CHECK(thin.back() == 5000000);
  for (std::size_t i = 1; i < thin.size(); ++i) REQUIRE(thin[i] > thin[i - 1]);
  for (std::int64_t t = 0; t <= 1000; ++t) REQUIRE(thin[static_cast<std::size_t>(t)] == t);
}

TEST_CASE("step schedules") {
  CHECK_THROWS_AS(StepSchedule::Constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(StepSchedule::Sequence({}), std::invalid_argument);
  const auto seq = StepSchedule::Sequence({0.1, 0.2, 0.3});
  CHECK(seq.At(1) == 0.2);
  CHECK_THROWS_AS(seq.CheckCovers(4), std::invalid_argument);
  CHECK(StepSchedule::Constant(0.5).At(123456) == 0.5);

  const auto oracle = MakeExactOracle(MakeNesterovWorst(10));
  Rng r1(1, 0), r2(1, 0);
  CHECK_THROWS_AS(SgdRun(*oracle, seq, 4, r1), std::invalid_argument);
  const auto a = SgdRun(*oracle, StepSchedule::Constant(0.2), 30, r1);
  const auto b = SgdRun(*oracle, StepSchedule::Sequence(std::vector<double>(30, 0.2)), 30, r2);
  CHECK(a.final_iterate == b.final_iterate);
}

TEST_CASE("gradient descent on the quadratic contracts at the PL rate") {
  const auto problem = MakeNesterovWorst(10);
  const auto oracle = MakeExactOracle(problem);
  const double L = problem->smoothness(), mu = *problem->pl_constant();
  Rng rng(3, 0);
  const auto trace = SgdRun(*oracle, StepSchedule::Constant(1.0 / L), 2000, rng);
  CHECK(trace.status == RunStatus::kCompleted);
  REQUIRE(trace.records.size() == 2001);
  CHECK(trace.records[0].f_gap == doctest::Approx(1.0));
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    const auto& rec = trace.records[i];
    REQUIRE(rec.f_gap <= trace.records[i - 1].f_gap);
    REQUIRE(rec.f_gap <= std::pow(1.0 - mu / L, static_cast<double>(rec.t)) * (1.0 + 1e-9));
  }
  CHECK(trace.records.back().stepsize == 0.0);
  CHECK(trace.records.front().stepsize == 1.0 / L);
}

TEST_CASE("psi and tail means count every step") {
  const auto oracle = MakeExactOracle(MakeNesterovWorst(10));
  Rng rng(3, 0);
  SgdOptions opt;
  opt.tail_fraction = 0.5;
  const auto trace = SgdRun(*oracle, StepSchedule::Constant(0.1), 20, rng, opt);
  double psi = 0.0, tail = 0.0;
  int n = 0;
  for (const auto& r : trace.records) {
    if (r.t < 20) psi += r.grad_norm_sq;
    if (r.t >= 10) {
      tail += r.f_gap;
      ++n;
    }
  }
  CHECK(trace.psi == doctest::Approx(psi / 20));
  CHECK(trace.tail_mean_f_gap == doctest::Approx(tail / n));
  CHECK(n == 11);
}

TEST_CASE("tightness oracle pins the gradient norm") {
  const auto problem = MakeNesterovWorst(10);
  const double zeta_sq = 0.01;
  const auto oracle = MakeTightnessOracle(problem, 0.5, zeta_sq, std::sqrt(zeta_sq) * UniformDirection(10));
  Rng rng(1, 0);
  const auto trace = SgdRun(*oracle, StepSchedule::Constant(1.0 / problem->smoothness()), 20000, rng);
  CHECK(trace.records.back().grad_norm_sq == doctest::Approx(0.02).epsilon(0.01));
}

TEST_CASE("shifted Huber oracle walks away linearly") {
  const auto oracle = MakeHuberShiftedOracle();
  for (double gamma : {1.0, 0.1, 0.01}) {
    Rng rng(1, 0);
    SgdOptions opt;
    opt.x0 = Vector::Constant(1, 2.0);
    const auto trace = SgdRun(*oracle, StepSchedule::Constant(gamma), 100, rng, opt);
    CHECK(trace.status == RunStatus::kDivergedInValue);
    CHECK(Diverged(trace.status));
    for (const auto& r : trace.records)
      REQUIRE(r.f_gap + 0.5 == doctest::Approx(2.0 + gamma * r.t).epsilon(1e-12));
    CHECK(trace.final_iterate[0] == doctest::Approx(2.0 + 100 * gamma).epsilon(1e-12));
  }
}

TEST_CASE("overflow divergence stops early") {
  const auto problem = MakeNesterovWorst(10);
  const auto oracle = MakeExactOracle(problem);
  Rng rng(1, 0);
  const auto trace = SgdRun(*oracle, StepSchedule::Constant(3.0 / problem->smoothness()), 100000, rng);
  CHECK(trace.status == RunStatus::kDivergedOverflow);
  CHECK(trace.steps_taken < 100000);
  // The iterate that tripped the guard is not recorded.
  CHECK(trace.records.size() == static_cast<std::size_t>(trace.steps_taken));
}

TEST_CASE("runs are deterministic in the stream") {
  const auto oracle = NoisyQuadratic(1.0);
  Rng a(9, 4), b(9, 4), c(9, 5);
  const auto ta = SgdRun(*oracle, StepSchedule::Constant(0.01), 500, a);
  const auto tb = SgdRun(*oracle, StepSchedule::Constant(0.01), 500, b);
  const auto tc = SgdRun(*oracle, StepSchedule::Constant(0.01), 500, c);
  CHECK(ta.final_iterate == tb.final_iterate);
  CHECK(ta.final_iterate != tc.final_iterate);
  for (std::size_t i = 0; i < ta.records.size(); ++i) REQUIRE(ta.records[i].f_gap == tb.records[i].f_gap);
}

TEST_CASE("uniform random iterate") {
  const auto oracle = MakeExactOracle(MakeNesterovWorst(10));
  Rng run_rng(1, 0);
  const auto trace = SgdRun(*oracle, StepSchedule::Constant(0.1), 10, run_rng);
  Rng rng(2, 0);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto t = UniformRandomIterate(trace, rng);
    REQUIRE(t >= 0);
    REQUIRE(t < 10);
    ++counts[static_cast<std::size_t>(t)];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK_THROWS_AS(UniformRandomIterate(RunTrace{}, rng), std::invalid_argument);
}

TEST_CASE("aggregation of repetitions") {
  RepeatedRunConfig cfg;
  cfg.schedule = StepSchedule::Constant(0.05);
  cfg.steps = 200;
  cfg.seed = 11;

  SUBCASE("a deterministic oracle has zero spread") {
    cfg.oracle = MakeExactOracle(MakeNesterovWorst(10));
    cfg.reps = 4;
    const auto agg = SgdRunRepeated(cfg, 1);
    REQUIRE(agg.t.size() == 201);
    for (std::size_t i = 0; i < agg.t.size(); ++i) {
      REQUIRE(agg.se_f_gap[i] == 0.0);
      REQUIRE(agg.count[i] == 4);
    }
    Rng rng(11, StreamId(0, 0));
    const auto single = SgdRun(*cfg.oracle, cfg.schedule, cfg.steps, rng);
    CHECK(agg.mean_f_gap.back() == doctest::Approx(single.records.back().f_gap).epsilon(1e-14));
  }

  SUBCASE("one repetition reproduces the single run") {
    cfg.oracle = NoisyQuadratic(1.0);
    cfg.reps = 1;
    const auto agg = SgdRunRepeated(cfg, 1);
    Rng rng(11, StreamId(0, 0));
    const auto single = SgdRun(*cfg.oracle, cfg.schedule, cfg.steps, rng);
    for (std::size_t i = 0; i < agg.t.size(); ++i) {
      REQUIRE(agg.mean_f_gap[i] == single.records[i].f_gap);
      REQUIRE(agg.se_f_gap[i] == 0.0);
    }
    CHECK(agg.diverged_reps() == 0);
  }

  SUBCASE("standard errors match the sample spread") {
    cfg.oracle = NoisyQuadratic(1.0);
    cfg.reps = 30;
    cfg.keep_traces = true;
    const auto agg = SgdRunRepeated(cfg, 1);
    REQUIRE(agg.traces.size() == 30);
    for (std::size_t i : {std::size_t{1}, std::size_t{50}, std::size_t{200}}) {
      double mean = 0.0;
      for (const auto& tr : agg.traces) mean += tr.records[i].f_gap / 30.0;
      double ss = 0.0;
      for (const auto& tr : agg.traces) ss += std::pow(tr.records[i].f_gap - mean, 2);
      REQUIRE(agg.mean_f_gap[i] == doctest::Approx(mean).epsilon(1e-12));
      REQUIRE(agg.se_f_gap[i] == doctest::Approx(std::sqrt(ss / 29.0 / 30.0)).epsilon(1e-10));
      REQUIRE(agg.se_f_gap[i] > 0.0);
    }
    const auto [floor, se] = agg.TailFloor();
    CHECK(floor > 0.0);
    CHECK(se > 0.0);
  }
}

TEST_CASE("racing to a target agrees with the plain run") {
  const auto problem = MakeNesterovWorst(10);
  const auto oracle = MakeExactOracle(problem);
  const double gamma = 1.0 / problem->smoothness();
  const auto hit = RunUntilTarget(*oracle, gamma, 3, 5, 0, 1e-2, 100000, std::nullopt);
  REQUIRE(hit.reached);
  Rng rng(5, 0);
  const auto trace = SgdRun(*oracle, StepSchedule::Constant(gamma), hit.iterations, rng);
  CHECK(trace.records.back().f_gap <= 1e-2);
  CHECK(trace.records[trace.records.size() - 2].f_gap > 1e-2);

  const auto miss = RunUntilTarget(*oracle, gamma, 2, 5, 0, 1e-2, 10, std::nullopt);
  CHECK_FALSE(miss.reached);
  CHECK(miss.steps_run == 10);
  CHECK(miss.best_mean_gap > 1e-2);
}
