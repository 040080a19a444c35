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

#include "bsgd/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bsgd {

Problem::Problem(std::string name, double smoothness, std::optional<double> pl_constant,
                 std::optional<double> optimal_value, std::optional<Vector> minimizer)
    : name_(std::move(name)),
      smoothness_(smoothness),
      pl_constant_(pl_constant),
      optimal_value_(optimal_value),
      minimizer_(std::move(minimizer)) {
  if (!(smoothness_ > 0.0)) throw std::invalid_argument("smoothness constant must be positive");
  if (pl_constant_ && !(*pl_constant_ > 0.0))
    throw std::invalid_argument("PL constant must be positive");
}

double Problem::ValueAndGradient(const Vector& x, Vector& grad) const {
  Gradient(x, grad);
  return Value(x);
}

Vector Problem::Gradient(const Vector& x) const {
  Vector g(dim());
  Gradient(x, g);
  return g;
}

QuadraticProblem::QuadraticProblem(std::string name, Matrix a, double lambda_max,
                                   double lambda_min)
    : Problem(std::move(name), lambda_max,
              lambda_min > 0.0 ? std::optional<double>(lambda_min) : std::nullopt, 0.0,
              lambda_min > 0.0 ? std::optional<Vector>(Vector::Zero(a.cols())) : std::nullopt),
      a_(std::move(a)),
      hessian_(a_.transpose() * a_) {}

double QuadraticProblem::Value(const Vector& x) const { return 0.5 * (a_ * x).squaredNorm(); }

void QuadraticProblem::Gradient(const Vector& x, Vector& out) const {
  out.noalias() = hessian_ * x;
}

double QuadraticProblem::ValueAndGradient(const Vector& x, Vector& grad) const {
  grad.noalias() = hessian_ * x;
  return 0.5 * x.dot(grad);
}

double TridiagonalEigenvalue(int dim, int j) {
  return 2.0 - 2.0 * std::cos(j * std::numbers::pi / (dim + 1));
}

std::shared_ptr<const QuadraticProblem> MakeNesterovWorst(int dim) {
  if (dim < 2) throw std::invalid_argument("nesterov-worst problem needs dim >= 2");
  // Rows: e_1, e_2 - e_1, ..., e_d - e_{d-1}, -e_d. A^T A = tridiag(-1, 2, -1).
  Matrix a = Matrix::Zero(dim + 1, dim);
  for (int i = 0; i < dim; ++i) {
    a(i, i) = 1.0;
    a(i + 1, i) = -1.0;
  }
  return std::make_shared<QuadraticProblem>("nesterov_worst_d" + std::to_string(dim),
                                            std::move(a), TridiagonalEigenvalue(dim, dim),
                                            TridiagonalEigenvalue(dim, 1));
}

namespace {

class HuberProblem final : public Problem {
 public:
  HuberProblem() : Problem("huber", 1.0, std::nullopt, 0.5, Vector::Zero(1)) {}

  int dim() const override { return 1; }

  double Value(const Vector& x) const override {
    const double v = x[0];
    return std::abs(v) > 1.0 ? std::abs(v) : 0.5 * v * v + 0.5;
  }

  void Gradient(const Vector& x, Vector& out) const override {
    const double v = x[0];
    out.resize(1);
    out[0] = std::abs(v) > 1.0 ? (v > 0.0 ? 1.0 : -1.0) : v;
  }
};

class LinearProblem final : public Problem {
 public:
  LinearProblem(Vector c, double smoothness)
      : Problem("linear", smoothness, std::nullopt, std::nullopt, std::nullopt), c_(std::move(c)) {}

  int dim() const override { return static_cast<int>(c_.size()); }
  double Value(const Vector& x) const override { return c_.dot(x); }
  void Gradient(const Vector&, Vector& out) const override { out = c_; }

 private:
  Vector c_;
};

}  // namespace

ProblemPtr MakeHuberProblem() { return std::make_shared<HuberProblem>(); }

ProblemPtr MakeLinearProblem(Vector c, double smoothness) {
  return std::make_shared<LinearProblem>(std::move(c), smoothness);
}

double FiniteDiffCheck(const Problem& p, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const Vector g = p.Gradient(x);
  Vector probe = x;
  double worst = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    probe[i] = x[i] + h;
    const double up = p.Value(probe);
    probe[i] = x[i] - h;
    const double down = p.Value(probe);
    probe[i] = x[i];
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / (1.0 + std::abs(g[i])));
  }
  return worst;
}

Vector DefaultStart(const Problem& p) {
  const int d = p.dim();
  Vector x = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  if (!p.optimal_value()) return Vector::Ones(d);
  const double gap = p.Value(x) - *p.optimal_value();
  // Only homogeneous quadratics scale as c^2; anything else keeps the ones vector.
  if (dynamic_cast<const QuadraticProblem*>(&p) == nullptr || !(gap > 0.0)) return Vector::Ones(d);
  return x / std::sqrt(gap);
}

}  // namespace bsgd
