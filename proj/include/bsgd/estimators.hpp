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
#include <string>
#include <vector>

#include "bsgd/oracles.hpp"

namespace bsgd {

/// Monte-Carlo statistics of an oracle at one point x.
///
/// The bias is b(x) = E g(x) - grad f(x) and the noise is g(x) - E g(x), so
/// for oracles whose bias is itself random (rand-k) the split follows the
/// deviation-of-the-mean convention. `*_se` are standard errors.
struct PointEstimate {
  Vector x;
  double grad_norm_sq = 0.0;
  double bias_norm_sq = 0.0;  // |b(x)|^2, bias-corrected for finite samples
  double bias_se = 0.0;
  bool bias_exact = false;     // closed-form mean was available
  double noise_var = 0.0;      // E|g - E g|^2
  double noise_se = 0.0;
  double mean_norm_sq = 0.0;   // |grad f(x) + b(x)|^2
  double mean_norm_sq_se = 0.0;
  std::int64_t samples = 0;
};

/// Samples `samples` oracle queries at x. The squared norm of the sample mean
/// is biased upward by tr(Cov)/N, which is subtracted.
PointEstimate SampleAtPoint(const BiasedOracle& o, const Vector& x, std::int64_t samples,
                            Rng& rng);

/// Evaluation points at geometric distances in [r_min, r_max] from the
/// minimizer (origin when unknown) along random unit directions, so that
/// |grad f|^2 spans several orders of magnitude.
std::vector<Vector> SelectPoints(const Problem& p, int count, std::uint64_t seed,
                                 double r_min = 1e-2, double r_max = 10.0);

/// Per-point bias estimates; requires samples >= 1000.
std::vector<PointEstimate> EstimateBias(const BiasedOracle& o, const std::vector<Vector>& points,
                                        std::int64_t samples, std::uint64_t seed, int workers = 0);
/// Per-point noise estimates (the same sampling pass as EstimateBias).
std::vector<PointEstimate> EstimateNoise(const BiasedOracle& o, const std::vector<Vector>& points,
                                         std::int64_t samples, std::uint64_t seed,
                                         int workers = 0);

/// Line c + s a lying above every (a_i, u_i).
struct LinearEnvelope {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-slack envelope: minimises sum_i (s a_i + c - u_i) over s, c >= 0
/// subject to s a_i + c >= u_i, ties broken by smaller intercept, then smaller
/// slope. The result satisfies every constraint exactly.
LinearEnvelope FitEnvelope(const std::vector<double>& a, const std::vector<double>& u);

struct FittedBounds {
  double m = 0.0;
  double zeta_sq = 0.0;
  double M = 0.0;
  double sigma_sq = 0.0;
  /// False when the least-slack bias envelope needs slope m >= 1
  /// ("assumption-4-infeasible").
  bool bias_feasible = true;
};

/// Envelope fits of the upper confidence values (estimate + 5 SE) against
/// |grad f|^2 (bias) and |grad f + b|^2 (noise). Needs >= 5 points whose
/// |grad f|^2 spans >= 2 orders of magnitude; throws std::invalid_argument
/// otherwise.
FittedBounds FitBounds(const std::vector<PointEstimate>& estimates);

struct Verdict {
  bool verified = true;
  /// Largest (estimate - declared bound - slack) over the points; <= 0 when
  /// verified.
  double margin = 0.0;
};

struct VerifyOptions {
  int points = 20;
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct VerificationReport {
  std::string oracle;
  OracleBounds declared;
  Verdict bias;             // |b|^2 <= m |grad f|^2 + zeta^2
  Verdict noise;            // E|n|^2 <= M |grad f + b|^2 + sigma^2
  Verdict relative_noise;   // E|n|^2 <= 2M(1+m) |grad f|^2 + sigma^2 + 2 M zeta^2
  std::optional<FittedBounds> fitted;
  std::vector<PointEstimate> points;

  bool verified() const { return bias.verified && noise.verified && relative_noise.verified; }
};

/// Checks each per-point estimate against the declared bounds with 5-SE
/// slack (exact comparison, up to rounding, where the mean is closed-form).
/// Violations are reported, not thrown. Throws std::logic_error if the oracle
/// declares no bounds.
VerificationReport VerifyDeclared(const BiasedOracle& o, const VerifyOptions& options = {});

}  // namespace bsgd
