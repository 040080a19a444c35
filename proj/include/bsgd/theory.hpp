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

#pragma once

#include <cstdint>
#include <string_view>

#include "bsgd/oracles.hpp"

namespace bsgd::theory {

// Closed-form stepsizes, iteration budgets and error floors for SGD with a
// biased oracle. All functions are pure; preconditions raise
// std::invalid_argument. Iteration counts are ceilings, floored at 1.
//
// Two stepsize variants exist for each regime. The "theorem" forms include
// the additive bias in the noise branch; the "proof" forms are the ones the
// iteration budgets are derived for and are what the consistency checks use.

enum class Measure { kGradNormAverage, kFunctionGap };

std::string_view ToString(Measure m);

struct RatePrediction {
  double stepsize = 0.0;
  std::int64_t iterations = 0;
  double floor = 0.0;
  Measure measure = Measure::kFunctionGap;
};

/// 1 / ((M + 1) L): the largest stepsize the descent lemma admits.
double MaxStepsize(double smoothness, const OracleBounds& b);

/// min{1/((M+1)L), (eps(1-m) + zeta^2) / (2 L sigma^2)}.
double SmoothStepsize(double eps, double smoothness, const OracleBounds& b);
/// min{1/((M+1)L), eps(1-m) / (2 L sigma^2)}.
double SmoothStepsizeProof(double eps, double smoothness, const OracleBounds& b);
/// ceil(max{4(M+1)F L / (eps(1-m)), 8 F L sigma^2 / (eps^2 (1-m)^2)}).
std::int64_t SmoothIterations(double eps, double smoothness, double initial_gap,
                              const OracleBounds& b);

/// min{1/((M+1)L), eps mu (1-m) / (L sigma^2)}.
double PlStepsize(double eps, double smoothness, double mu, const OracleBounds& b);
/// min{1/((M+1)L), (eps mu (1-m) + zeta^2) / (L sigma^2)}.
double PlStepsizeTheorem(double eps, double smoothness, double mu, const OracleBounds& b);
/// ceil(max{(M+1)L/(mu(1-m)), L sigma^2/(eps mu^2 (1-m)^2)} * log(2 F0 / eps)).
std::int64_t PlIterations(double eps, double smoothness, double mu, double initial_gap,
                          const OracleBounds& b);

/// (zeta^2 + gamma L sigma^2) / (2 mu (1-m)): the constant in
/// F_T <= (1 - gamma mu (1-m))^T F_0 + floor.
double ErrorFloor(double gamma, double smoothness, double mu, const OracleBounds& b);

/// Upper bound on the function gap after T steps:
/// (1 - gamma mu (1-m))^T F_0 + ErrorFloor(gamma, ...).
double PlGapBound(std::int64_t steps, double gamma, double initial_gap, double smoothness,
                  double mu, const OracleBounds& b);

/// 2 F_0 / (T gamma (1-m)) + gamma L sigma^2 / (1-m) + zeta^2 / (1-m).
double PsiBound(std::int64_t steps, double gamma, double initial_gap, double smoothness,
                const OracleBounds& b);

/// gamma (m-1)/2 |grad f|^2 + gamma zeta^2 / 2 + gamma^2 L sigma^2 / 2: bound
/// on the expected one-step change of f.
double DescentLemmaRhs(double grad_norm_sq, double gamma, double smoothness,
                       const OracleBounds& b);

/// PL iteration budget for the Gaussian-smoothing oracle in dimension d.
std::int64_t ZerothOrderBudget(double eps, int dim, double smoothness, double mu, double tau,
                               double initial_gap);

/// Proof-form stepsize, budget and limiting value of Psi_T.
RatePrediction PredictSmooth(double eps, double smoothness, double initial_gap,
                             const OracleBounds& b);
/// Proof-form stepsize, budget and the error floor at that stepsize.
RatePrediction PredictPl(double eps, double smoothness, double mu, double initial_gap,
                         const OracleBounds& b);

}  // namespace bsgd::theory
