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

#include "bsgd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bsgd::theory {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Stepsizes computed as exactly 1/((M+1)L) must pass the range check.
constexpr double kStepsizeRoundoff = 1e-12;

void CheckCommon(double smoothness, const OracleBounds& b) {
  b.Validate();
  if (!(smoothness > 0.0)) throw std::invalid_argument("smoothness constant must be positive");
}

void CheckEps(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("target accuracy eps must be positive");
}

void CheckMu(double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("PL constant mu must be positive");
}

void CheckStepsize(double gamma, double smoothness, const OracleBounds& b) {
  if (!(gamma > 0.0) || gamma > MaxStepsize(smoothness, b) * (1.0 + kStepsizeRoundoff))
    throw std::invalid_argument("stepsize must lie in (0, 1/((M+1)L)]");
}

// sigma^2-denominated branches are +inf when sigma^2 = 0.
double NoiseBranch(double numerator, double denominator) {
  return denominator == 0.0 ? kInf : numerator / denominator;
}

std::int64_t CeilCount(double value) {
  if (!std::isfinite(value)) throw std::overflow_error("iteration budget is not finite");
  if (value > static_cast<double>(std::numeric_limits<std::int64_t>::max() / 2))
    throw std::overflow_error("iteration budget overflows");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(value)));
}

}  // namespace

std::string_view ToString(Measure m) {
  return m == Measure::kGradNormAverage ? "grad_norm_avg" : "function_gap";
}

double MaxStepsize(double smoothness, const OracleBounds& b) {
  return 1.0 / ((b.M + 1.0) * smoothness);
}

double SmoothStepsize(double eps, double smoothness, const OracleBounds& b) {
  CheckCommon(smoothness, b);
  if (!(eps >= 0.0)) throw std::invalid_argument("target accuracy eps must be nonnegative");
  return std::min(MaxStepsize(smoothness, b),
                  NoiseBranch(eps * (1.0 - b.m) + b.zeta_sq, 2.0 * smoothness * b.sigma_sq));
}

double SmoothStepsizeProof(double eps, double smoothness, const OracleBounds& b) {
  CheckCommon(smoothness, b);
  CheckEps(eps);
  return std::min(MaxStepsize(smoothness, b),
                  NoiseBranch(eps * (1.0 - b.m), 2.0 * smoothness * b.sigma_sq));
}

std::int64_t SmoothIterations(double eps, double smoothness, double initial_gap,
                              const OracleBounds& b) {
  CheckCommon(smoothness, b);
  CheckEps(eps);
  if (!(initial_gap >= 0.0)) throw std::invalid_argument("initial gap must be nonnegative");
  const double one_minus_m = 1.0 - b.m;
  const double optimization =
      4.0 * (b.M + 1.0) * initial_gap * smoothness / (eps * one_minus_m);
  const double noise =
      8.0 * initial_gap * smoothness * b.sigma_sq / (eps * eps * one_minus_m * one_minus_m);
  return CeilCount(std::max(optimization, noise));
}

double PlStepsize(double eps, double smoothness, double mu, const OracleBounds& b) {
  CheckCommon(smoothness, b);
  CheckEps(eps);
  CheckMu(mu);
  return std::min(MaxStepsize(smoothness, b),
                  NoiseBranch(eps * mu * (1.0 - b.m), smoothness * b.sigma_sq));
}

double PlStepsizeTheorem(double eps, double smoothness, double mu, const OracleBounds& b) {
  CheckCommon(smoothness, b);
  CheckMu(mu);
  if (!(eps >= 0.0)) throw std::invalid_argument("target accuracy eps must be nonnegative");
  return std::min(MaxStepsize(smoothness, b),
                  NoiseBranch(eps * mu * (1.0 - b.m) + b.zeta_sq, smoothness * b.sigma_sq));
}

std::int64_t PlIterations(double eps, double smoothness, double mu, double initial_gap,
                          const OracleBounds& b) {
  CheckCommon(smoothness, b);
  CheckEps(eps);
  CheckMu(mu);
  if (!(initial_gap >= 0.0)) throw std::invalid_argument("initial gap must be nonnegative");
  const double one_minus_m = 1.0 - b.m;
  const double log_term = std::log(2.0 * initial_gap / eps);
  if (!(log_term > 0.0)) return 1;
  const double optimization = (b.M + 1.0) * smoothness / (mu * one_minus_m);
  const double noise =
      smoothness * b.sigma_sq / (eps * mu * mu * one_minus_m * one_minus_m);
  return CeilCount(std::max(optimization, noise) * log_term);
}

double ErrorFloor(double gamma, double smoothness, double mu, const OracleBounds& b) {
  CheckCommon(smoothness, b);
  CheckMu(mu);
  CheckStepsize(gamma, smoothness, b);
  return (b.zeta_sq + gamma * smoothness * b.sigma_sq) / (2.0 * mu * (1.0 - b.m));
}

double PlGapBound(std::int64_t steps, double gamma, double initial_gap, double smoothness,
                  double mu, const OracleBounds& b) {
  const double floor = ErrorFloor(gamma, smoothness, mu, b);
  // log1p keeps the rate exact when gamma mu (1-m) is far below machine epsilon.
  const double rate = gamma * mu * (1.0 - b.m);
  return std::exp(static_cast<double>(steps) * std::log1p(-rate)) * initial_gap + floor;
}

double PsiBound(std::int64_t steps, double gamma, double initial_gap, double smoothness,
                const OracleBounds& b) {
  CheckCommon(smoothness, b);
  CheckStepsize(gamma, smoothness, b);
  if (steps < 1) throw std::invalid_argument("step count must be positive");
  const double one_minus_m = 1.0 - b.m;
  return 2.0 * initial_gap / (static_cast<double>(steps) * gamma * one_minus_m) +
         gamma * smoothness * b.sigma_sq / one_minus_m + b.zeta_sq / one_minus_m;
}

double DescentLemmaRhs(double grad_norm_sq, double gamma, double smoothness,
                       const OracleBounds& b) {
  CheckCommon(smoothness, b);
  CheckStepsize(gamma, smoothness, b);
  return gamma * (b.m - 1.0) / 2.0 * grad_norm_sq + gamma * b.zeta_sq / 2.0 +
         gamma * gamma * smoothness * b.sigma_sq / 2.0;
}

std::int64_t ZerothOrderBudget(double eps, int dim, double smoothness, double mu, double tau,
                               double initial_gap) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("smoothing parameter tau must be positive");
  return PlIterations(eps, smoothness, mu, initial_gap,
                      GaussianSmoothingBounds(dim, smoothness, tau));
}

RatePrediction PredictSmooth(double eps, double smoothness, double initial_gap,
                             const OracleBounds& b) {
  RatePrediction r;
  r.measure = Measure::kGradNormAverage;
  r.stepsize = SmoothStepsizeProof(eps, smoothness, b);
  r.iterations = SmoothIterations(eps, smoothness, initial_gap, b);
  r.floor = (r.stepsize * smoothness * b.sigma_sq + b.zeta_sq) / (1.0 - b.m);
  return r;
}

RatePrediction PredictPl(double eps, double smoothness, double mu, double initial_gap,
                         const OracleBounds& b) {
  RatePrediction r;
  r.measure = Measure::kFunctionGap;
  r.stepsize = PlStepsize(eps, smoothness, mu, b);
  r.iterations = PlIterations(eps, smoothness, mu, initial_gap, b);
  r.floor = ErrorFloor(r.stepsize, smoothness, mu, b);
  return r;
}

}  // namespace bsgd::theory
