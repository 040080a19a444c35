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

#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace bsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A differentiable objective with known constants.
///
/// Problems are immutable after construction and are shared between runs via
/// `ProblemPtr`. `smoothness()` is the L of the quadratic upper bound
/// f(y) <= f(x) + <grad f(x), y - x> + L/2 |y - x|^2; `pl_constant()` is the
/// mu of |grad f(x)|^2 >= 2 mu (f(x) - f*) when the objective satisfies it.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int dim() const = 0;
  virtual double Value(const Vector& x) const = 0;
  virtual void Gradient(const Vector& x, Vector& out) const = 0;
  /// Writes the gradient into `grad` and returns f(x). Overridden where the
  /// two share work.
  virtual double ValueAndGradient(const Vector& x, Vector& grad) const;

  Vector Gradient(const Vector& x) const;

  double smoothness() const { return smoothness_; }
  const std::optional<double>& pl_constant() const { return pl_constant_; }
  const std::optional<double>& optimal_value() const { return optimal_value_; }
  const std::optional<Vector>& minimizer() const { return minimizer_; }
  const std::string& name() const { return name_; }

 protected:
  Problem(std::string name, double smoothness, std::optional<double> pl_constant,
          std::optional<double> optimal_value, std::optional<Vector> minimizer);

 private:
  std::string name_;
  double smoothness_;
  std::optional<double> pl_constant_;
  std::optional<double> optimal_value_;
  std::optional<Vector> minimizer_;
};

using ProblemPtr = std::shared_ptr<const Problem>;

/// f(x) = 1/2 |A x|^2 with L and mu the extreme eigenvalues of A^T A.
class QuadraticProblem final : public Problem {
 public:
  /// `lambda_max`/`lambda_min` are the extreme eigenvalues of A^T A, supplied
  /// by the caller so that closed forms can be used when available.
  QuadraticProblem(std::string name, Matrix a, double lambda_max, double lambda_min);

  int dim() const override { return static_cast<int>(hessian_.rows()); }
  double Value(const Vector& x) const override;
  using Problem::Gradient;
  void Gradient(const Vector& x, Vector& out) const override;
  double ValueAndGradient(const Vector& x, Vector& grad) const override;

  const Matrix& matrix() const { return a_; }
  const Matrix& hessian() const { return hessian_; }

 private:
  Matrix a_;
  Matrix hessian_;
};

/// Quadratic whose Hessian is tridiag(-1, 2, -1) of size `dim`, realised by
/// the (dim+1) x dim first-difference matrix. Eigenvalues are
/// 2 - 2 cos(j pi / (dim + 1)), j = 1..dim. Throws std::invalid_argument for
/// dim < 2.
std::shared_ptr<const QuadraticProblem> MakeNesterovWorst(int dim);

/// Closed-form j-th eigenvalue (1-based) of tridiag(-1, 2, -1) of size `dim`.
double TridiagonalEigenvalue(int dim, int j);

/// 1-D Huber-type objective: |x| for |x| > 1, x^2/2 + 1/2 otherwise.
/// L = 1, f* = 1/2 at x* = 0; only weakly convex, so no PL constant.
ProblemPtr MakeHuberProblem();

/// f(x) = <c, x>. Used to check estimators that must be exact on linear
/// objectives; `smoothness` is any positive value since the curvature is zero.
ProblemPtr MakeLinearProblem(Vector c, double smoothness = 1.0);

/// max_i |central difference_i - grad_i| / (1 + |grad_i|) with step `h`.
/// Throws std::invalid_argument when h <= 0.
double FiniteDiffCheck(const Problem& p, const Vector& x, double h);

/// The reference starting point for a problem: the all-ones direction scaled
/// so that f(x0) - f* = 1 when f* is known and the direction is not flat.
/// Returns the ones vector otherwise.
Vector DefaultStart(const Problem& p);

}  // namespace bsgd
