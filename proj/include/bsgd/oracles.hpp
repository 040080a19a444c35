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

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "bsgd/problems.hpp"
#include "bsgd/rng.hpp"

namespace bsgd {

/// Constants of the two oracle assumptions:
///   noise:  E|n(x)|^2 <= M |grad f(x) + b(x)|^2 + sigma_sq
///   bias:   |b(x)|^2  <= m |grad f(x)|^2 + zeta_sq,   0 <= m < 1
struct OracleBounds {
  double m = 0.0;
  double zeta_sq = 0.0;
  double M = 0.0;
  double sigma_sq = 0.0;

  /// Throws std::invalid_argument unless 0 <= m < 1 and the rest are >= 0.
  void Validate() const;
  bool operator==(const OracleBounds&) const = default;
};

/// Noise constants measured against |grad f(x)|^2 instead of
/// |grad f(x) + b(x)|^2: E|n|^2 <= M_bar |grad f|^2 + sigma_bar_sq with
/// M_bar = 2M(1+m) and sigma_bar_sq = sigma_sq + 2 M zeta_sq.
struct GradientRelativeNoise {
  double M_bar = 0.0;
  double sigma_bar_sq = 0.0;
};

GradientRelativeNoise RelativeToGradient(const OracleBounds& b);

/// A stochastic map x -> grad f(x) + b(x) + n(x, xi) with E n = 0.
///
/// Oracles are immutable; all randomness comes from the `Rng` passed to
/// `Query`, so a single instance can serve many concurrent runs as long as
/// each run owns its stream.
class BiasedOracle {
 public:
  virtual ~BiasedOracle() = default;

  int dim() const { return problem_->dim(); }
  virtual void Query(const Vector& x, Rng& rng, Vector& out) const = 0;
  Vector Query(const Vector& x, Rng& rng) const;

  /// grad f(x) + b(x) in closed form, when known.
  virtual std::optional<Vector> Expected(const Vector& /*x*/) const { return std::nullopt; }
  /// True when Query ignores the random stream.
  virtual bool deterministic() const { return false; }

  /// Declared constants; empty when the composition has no derived bounds.
  const std::optional<OracleBounds>& bounds() const { return bounds_; }
  /// Declared constants or std::logic_error.
  const OracleBounds& RequireBounds() const;
  const std::string& name() const { return name_; }
  const ProblemPtr& problem() const { return problem_; }

 protected:
  BiasedOracle(std::string name, ProblemPtr problem, std::optional<OracleBounds> bounds);

 private:
  std::string name_;
  ProblemPtr problem_;
  std::optional<OracleBounds> bounds_;
};

using OraclePtr = std::shared_ptr<const BiasedOracle>;

/// Returns grad f(x); bounds (0, 0, 0, 0).
OraclePtr MakeExactOracle(ProblemPtr p);

/// Adds isotropic Gaussian noise with E|n|^2 = sigma_sq + relative_M |E inner(x)|^2
/// (per-coordinate variance 1/d of that). `relative_M > 0` needs a
/// deterministic inner oracle with a closed-form mean. Throws
/// std::invalid_argument on negative parameters.
OraclePtr MakeGaussianNoiseOracle(OraclePtr inner, double sigma_sq, double relative_M = 0.0);

/// Adds the constant zeta * direction; `direction` must be a unit vector to
/// within 1e-12.
OraclePtr MakeAdditiveBiasOracle(OraclePtr inner, double zeta, const Vector& direction);

/// (1/sqrt(d)) (1, ..., 1).
Vector UniformDirection(int dim);

/// g(x) = grad f(x) + rho(x) b with rho(x)^2 = 1 + (m / zeta_sq) |grad f(x)|^2.
/// The bias bound holds with equality at every x. |b|^2 must equal zeta_sq.
OraclePtr MakeTightnessOracle(ProblemPtr p, double m, double zeta_sq, const Vector& b);

/// Declared constants of the Gaussian-smoothing estimator in dimension d.
OracleBounds GaussianSmoothingBounds(int dim, double smoothness, double tau);

/// g(x) = (f(x + tau u) - f(x)) / tau * u with u ~ N(0, I).
OraclePtr MakeGaussianSmoothingOracle(ProblemPtr p, double tau);

using BiasMap = std::function<Vector(const Vector&)>;

/// Inexact first-order oracle: grad f(x) + b(x), optionally plus Gaussian
/// noise with E|n|^2 = noise_sigma_sq. The caller guarantees
/// |b(x)|^2 <= 2 delta L; bounds are (0, 2 delta L, 0, noise_sigma_sq).
OraclePtr MakeInexactOracle(ProblemPtr p, double delta, BiasMap bias, double noise_sigma_sq = 0.0);

/// b(x) = sqrt(2 delta L) cos(<u, x>) u with u the uniform direction; attains
/// |b|^2 = 2 delta L wherever <u, x> is a multiple of pi.
BiasMap DefaultInexactBias(const Problem& p, double delta);

/// g(x) = h'(x) - 2 on the Huber problem; bounds (0, 4, 0, 0).
OraclePtr MakeHuberShiftedOracle();

/// Same queries as `inner`, different declared bounds. Used to plant
/// violations in the verification harness.
OraclePtr WithDeclaredBounds(OraclePtr inner, std::optional<OracleBounds> bounds);

}  // namespace bsgd
