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

#include "bsgd/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace bsgd {

void OracleBounds::Validate() const {
  if (!(m >= 0.0 && m < 1.0)) throw std::invalid_argument("bias constant m must lie in [0, 1)");
  if (!(zeta_sq >= 0.0 && M >= 0.0 && sigma_sq >= 0.0))
    throw std::invalid_argument("oracle bound constants must be nonnegative");
}

GradientRelativeNoise RelativeToGradient(const OracleBounds& b) {
  return {2.0 * b.M * (1.0 + b.m), b.sigma_sq + 2.0 * b.M * b.zeta_sq};
}

BiasedOracle::BiasedOracle(std::string name, ProblemPtr problem,
                           std::optional<OracleBounds> bounds)
    : name_(std::move(name)), problem_(std::move(problem)), bounds_(bounds) {
  if (!problem_) throw std::invalid_argument("oracle needs a problem");
  if (bounds_) bounds_->Validate();
}

Vector BiasedOracle::Query(const Vector& x, Rng& rng) const {
  Vector g(dim());
  Query(x, rng, g);
  return g;
}

const OracleBounds& BiasedOracle::RequireBounds() const {
  if (!bounds_) throw std::logic_error("oracle '" + name_ + "' has no derived bounds");
  return *bounds_;
}

namespace {

class ExactOracle final : public BiasedOracle {
 public:
  explicit ExactOracle(ProblemPtr p) : BiasedOracle("exact", std::move(p), OracleBounds{}) {}

  void Query(const Vector& x, Rng&, Vector& out) const override { problem()->Gradient(x, out); }
  std::optional<Vector> Expected(const Vector& x) const override {
    return problem()->Gradient(x);
  }
  bool deterministic() const override { return true; }
};

class GaussianNoiseOracle final : public BiasedOracle {
 public:
  GaussianNoiseOracle(OraclePtr inner, double sigma_sq, double relative_M,
                      std::optional<OracleBounds> bounds)
      : BiasedOracle(inner->name() + "+noise", inner->problem(), bounds),
        inner_(std::move(inner)),
        sigma_sq_(sigma_sq),
        relative_M_(relative_M) {}

  void Query(const Vector& x, Rng& rng, Vector& out) const override {
    inner_->Query(x, rng, out);
    double second_moment = sigma_sq_;
    if (relative_M_ > 0.0) second_moment += relative_M_ * out.squaredNorm();
    if (second_moment == 0.0) return;
    const double sd = std::sqrt(second_moment / static_cast<double>(out.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sd * rng.Normal();
  }

  std::optional<Vector> Expected(const Vector& x) const override { return inner_->Expected(x); }

 private:
  OraclePtr inner_;
  double sigma_sq_;
  double relative_M_;
};

class AdditiveBiasOracle final : public BiasedOracle {
 public:
  AdditiveBiasOracle(OraclePtr inner, Vector shift, std::optional<OracleBounds> bounds)
      : BiasedOracle(inner->name() + "+bias", inner->problem(), bounds),
        inner_(std::move(inner)),
        shift_(std::move(shift)) {}

  void Query(const Vector& x, Rng& rng, Vector& out) const override {
    inner_->Query(x, rng, out);
    out += shift_;
  }

  std::optional<Vector> Expected(const Vector& x) const override {
    auto e = inner_->Expected(x);
    if (e) *e += shift_;
    return e;
  }
  bool deterministic() const override { return inner_->deterministic(); }

 private:
  OraclePtr inner_;
  Vector shift_;
};

class TightnessOracle final : public BiasedOracle {
 public:
  TightnessOracle(ProblemPtr p, double m, double zeta_sq, Vector b)
      : BiasedOracle("tightness", std::move(p), OracleBounds{m, zeta_sq, 0.0, 0.0}),
        ratio_(m / zeta_sq),
        b_(std::move(b)) {}

  void Query(const Vector& x, Rng&, Vector& out) const override {
    problem()->Gradient(x, out);
    const double rho = std::sqrt(1.0 + ratio_ * out.squaredNorm());
    out += rho * b_;
  }

  std::optional<Vector> Expected(const Vector& x) const override {
    Vector g(dim());
    Rng unused(0, 0);
    Query(x, unused, g);
    return g;
  }
  bool deterministic() const override { return true; }

 private:
  double ratio_;
  Vector b_;
};

class GaussianSmoothingOracle final : public BiasedOracle {
 public:
  GaussianSmoothingOracle(ProblemPtr p, double tau)
      : BiasedOracle("gaussian_smoothing", p,
                     GaussianSmoothingBounds(p->dim(), p->smoothness(), tau)),
        tau_(tau) {}

  void Query(const Vector& x, Rng& rng, Vector& out) const override {
    const int d = dim();
    thread_local Vector u;
    thread_local Vector probe;
    u.resize(d);
    for (int i = 0; i < d; ++i) u[i] = rng.Normal();
    probe = x + tau_ * u;
    const double slope = (problem()->Value(probe) - problem()->Value(x)) / tau_;
    out = slope * u;
  }

 private:
  double tau_;
};

class InexactOracle final : public BiasedOracle {
 public:
  InexactOracle(ProblemPtr p, double delta, BiasMap bias, double noise_sigma_sq)
      : BiasedOracle(noise_sigma_sq > 0.0 ? "stochastic_inexact" : "inexact", p,
                     OracleBounds{0.0, 2.0 * delta * p->smoothness(), 0.0, noise_sigma_sq}),
        bias_(std::move(bias)),
        noise_sigma_sq_(noise_sigma_sq) {}

  void Query(const Vector& x, Rng& rng, Vector& out) const override {
    problem()->Gradient(x, out);
    if (bias_) out += bias_(x);
    if (noise_sigma_sq_ > 0.0) {
      const double sd = std::sqrt(noise_sigma_sq_ / static_cast<double>(out.size()));
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sd * rng.Normal();
    }
  }

  std::optional<Vector> Expected(const Vector& x) const override {
    Vector g = problem()->Gradient(x);
    if (bias_) g += bias_(x);
    return g;
  }
  bool deterministic() const override { return noise_sigma_sq_ == 0.0; }

 private:
  BiasMap bias_;
  double noise_sigma_sq_;
};

class HuberShiftedOracle final : public BiasedOracle {
 public:
  HuberShiftedOracle()
      : BiasedOracle("huber_shifted", MakeHuberProblem(), OracleBounds{0.0, 4.0, 0.0, 0.0}) {}

  void Query(const Vector& x, Rng&, Vector& out) const override {
    problem()->Gradient(x, out);
    out[0] -= 2.0;
  }

  std::optional<Vector> Expected(const Vector& x) const override {
    Vector g = problem()->Gradient(x);
    g[0] -= 2.0;
    return g;
  }
  bool deterministic() const override { return true; }
};

class RedeclaredOracle final : public BiasedOracle {
 public:
  RedeclaredOracle(OraclePtr inner, std::optional<OracleBounds> bounds)
      : BiasedOracle(inner->name(), inner->problem(), bounds), inner_(std::move(inner)) {}

  void Query(const Vector& x, Rng& rng, Vector& out) const override {
    inner_->Query(x, rng, out);
  }
  std::optional<Vector> Expected(const Vector& x) const override { return inner_->Expected(x); }
  bool deterministic() const override { return inner_->deterministic(); }

 private:
  OraclePtr inner_;
};

}  // namespace

OraclePtr MakeExactOracle(ProblemPtr p) { return std::make_shared<ExactOracle>(std::move(p)); }

OraclePtr MakeGaussianNoiseOracle(OraclePtr inner, double sigma_sq, double relative_M) {
  if (!inner) throw std::invalid_argument("noise oracle needs an inner oracle");
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("noise variance must be nonnegative");
  if (!(relative_M >= 0.0)) throw std::invalid_argument("relative noise constant must be nonnegative");
  if (relative_M > 0.0 && !inner->deterministic())
    throw std::invalid_argument("relative noise requires a deterministic inner oracle");
  if (sigma_sq == 0.0 && relative_M == 0.0) return inner;
  std::optional<OracleBounds> bounds = inner->bounds();
  if (bounds) {
    bounds->sigma_sq += sigma_sq;
    bounds->M += relative_M;
  }
  return std::make_shared<GaussianNoiseOracle>(std::move(inner), sigma_sq, relative_M, bounds);
}

OraclePtr MakeAdditiveBiasOracle(OraclePtr inner, double zeta, const Vector& direction) {
  if (!inner) throw std::invalid_argument("bias oracle needs an inner oracle");
  if (direction.size() != inner->dim())
    throw std::invalid_argument("bias direction has the wrong dimension");
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("bias direction must be a unit vector");
  if (!(zeta >= 0.0)) throw std::invalid_argument("bias magnitude must be nonnegative");
  if (zeta == 0.0) return inner;

  std::optional<OracleBounds> bounds = inner->bounds();
  if (bounds) {
    OracleBounds b = *bounds;
    if (b.m == 0.0) {
      // |b_in + zeta u| <= |b_in| + zeta.
      const double root = std::sqrt(b.zeta_sq) + zeta;
      b.zeta_sq = root * root;
    } else if (2.0 * b.m < 1.0) {
      b.m *= 2.0;
      b.zeta_sq = 2.0 * b.zeta_sq + 2.0 * zeta * zeta;
    } else {
      bounds.reset();
    }
    // The noise bound is stated against the mean, which just moved by zeta.
    if (bounds && b.M > 0.0) {
      b.sigma_sq += 2.0 * b.M * zeta * zeta;
      b.M *= 2.0;
    }
    if (bounds) bounds = b;
  }
  return std::make_shared<AdditiveBiasOracle>(std::move(inner), zeta * direction, bounds);
}

Vector UniformDirection(int dim) {
  return Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
}

OraclePtr MakeTightnessOracle(ProblemPtr p, double m, double zeta_sq, const Vector& b) {
  if (!p) throw std::invalid_argument("tightness oracle needs a problem");
  if (!(m >= 0.0 && m < 1.0)) throw std::invalid_argument("tightness oracle needs 0 <= m < 1");
  if (!(zeta_sq > 0.0)) throw std::invalid_argument("tightness oracle needs zeta_sq > 0");
  if (b.size() != p->dim()) throw std::invalid_argument("bias vector has the wrong dimension");
  if (std::abs(b.squaredNorm() - zeta_sq) > 1e-12 * zeta_sq)
    throw std::invalid_argument("bias vector must have squared norm zeta_sq");
  return std::make_shared<TightnessOracle>(std::move(p), m, zeta_sq, b);
}

OracleBounds GaussianSmoothingBounds(int dim, double smoothness, double tau) {
  const double d = dim;
  const double l_sq = smoothness * smoothness;
  const double tau_sq = tau * tau;
  return {0.0, tau_sq / 4.0 * l_sq * std::pow(d + 3.0, 3), 4.0 * (d + 4.0),
          3.0 * tau_sq * l_sq * std::pow(d + 4.0, 3)};
}

OraclePtr MakeGaussianSmoothingOracle(ProblemPtr p, double tau) {
  if (!p) throw std::invalid_argument("smoothing oracle needs a problem");
  if (!(tau > 0.0)) throw std::invalid_argument("smoothing parameter tau must be positive");
  return std::make_shared<GaussianSmoothingOracle>(std::move(p), tau);
}

OraclePtr MakeInexactOracle(ProblemPtr p, double delta, BiasMap bias, double noise_sigma_sq) {
  if (!p) throw std::invalid_argument("inexact oracle needs a problem");
  if (!(delta >= 0.0)) throw std::invalid_argument("oracle accuracy delta must be nonnegative");
  if (!(noise_sigma_sq >= 0.0)) throw std::invalid_argument("noise variance must be nonnegative");
  if (delta == 0.0) bias = nullptr;
  return std::make_shared<InexactOracle>(std::move(p), delta, std::move(bias), noise_sigma_sq);
}

BiasMap DefaultInexactBias(const Problem& p, double delta) {
  const Vector u = UniformDirection(p.dim());
  const double magnitude = std::sqrt(2.0 * delta * p.smoothness());
  return [u, magnitude](const Vector& x) -> Vector {
    return (magnitude * std::cos(u.dot(x))) * u;
  };
}

OraclePtr MakeHuberShiftedOracle() { return std::make_shared<HuberShiftedOracle>(); }

OraclePtr WithDeclaredBounds(OraclePtr inner, std::optional<OracleBounds> bounds) {
  if (!inner) throw std::invalid_argument("cannot redeclare a null oracle");
  return std::make_shared<RedeclaredOracle>(std::move(inner), bounds);
}

}  // namespace bsgd
