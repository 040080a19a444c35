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

#include "bsgd/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bsgd/kernels.hpp"

namespace bsgd {

namespace {

constexpr double kSlackSe = 5.0;
// Closed-form comparisons allow this much relative rounding.
constexpr double kRoundoff = 1e-10;

double Sq(double v) { return v * v; }

}  // namespace

PointEstimate SampleAtPoint(const BiasedOracle& o, const Vector& x, std::int64_t samples,
                            Rng& rng) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  const Problem& p = *o.problem();
  PointEstimate est;
  est.x = x;
  const Vector grad = p.Gradient(x);
  est.grad_norm_sq = grad.squaredNorm();

  if (o.deterministic()) {
    const Vector g = o.Query(x, rng);
    est.bias_norm_sq = (g - grad).squaredNorm();
    est.bias_exact = true;
    est.mean_norm_sq = g.squaredNorm();
    est.samples = 1;
    return est;
  }

  const int d = p.dim();
  const auto n = static_cast<Eigen::Index>(samples);
  Matrix draws(d, n);
  Vector g(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    o.Query(x, rng, g);
    draws.col(i) = g;
  }
  est.samples = samples;
  const double nd = static_cast<double>(samples);
  const auto closed_form = o.Expected(x);

  // Spread around the exact mean when it is known, the sample mean otherwise.
  const Vector center = closed_form ? *closed_form : Vector(draws.rowwise().mean());
  Matrix centered = draws.colwise() - center;
  const Eigen::ArrayXd sq = centered.colwise().squaredNorm().transpose().array();
  const double denom = closed_form ? nd : nd - 1.0;
  est.noise_var = sq.sum() / std::max(denom, 1.0);
  const double sq_mean = sq.mean();
  const double sq_var = samples > 1 ? (sq - sq_mean).square().sum() / (nd - 1.0) : 0.0;
  est.noise_se = std::sqrt(sq_var / nd);

  if (closed_form) {
    est.bias_norm_sq = (*closed_form - grad).squaredNorm();
    est.bias_exact = true;
    est.mean_norm_sq = closed_form->squaredNorm();
    return est;
  }

  // |mean|^2 overshoots |E g|^2 by tr(Cov)/N; the standard error uses the
  // delta method for a quadratic form of the sample mean.
  const Matrix cov = centered * centered.transpose() / std::max(nd - 1.0, 1.0);
  const double tr = cov.trace();
  const double tr_sq = (cov * cov).trace();
  const auto corrected = [&](const Vector& v, double& value, double& se) {
    value = v.squaredNorm() - tr / nd;
    se = std::sqrt(std::max(0.0, 4.0 * v.dot(cov * v) / nd + 2.0 * tr_sq / (nd * nd)));
  };
  corrected(center - grad, est.bias_norm_sq, est.bias_se);
  corrected(center, est.mean_norm_sq, est.mean_norm_sq_se);
  return est;
}

std::vector<Vector> SelectPoints(const Problem& p, int count, std::uint64_t seed, double r_min,
                                 double r_max) {
  if (count < 1) throw std::invalid_argument("need at least one point");
  if (!(r_min > 0.0) || !(r_max >= r_min)) throw std::invalid_argument("bad radius range");
  const int d = p.dim();
  const Vector origin = p.minimizer() ? *p.minimizer() : Vector::Zero(d);
  Rng rng(seed, 0x706f696e7473ULL);
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double frac = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    const double r = r_min * std::pow(r_max / r_min, frac);
    Vector u(d);
    do {
      for (int j = 0; j < d; ++j) u[j] = rng.Normal();
    } while (u.norm() == 0.0);
    points.push_back(origin + r * u.normalized());
  }
  return points;
}

std::vector<PointEstimate> EstimateBias(const BiasedOracle& o, const std::vector<Vector>& points,
                                        std::int64_t samples, std::uint64_t seed, int workers) {
  if (samples < 1000) throw std::invalid_argument("bias estimation needs at least 1000 samples");
  return kernels::SamplePointsParallel(o, points, samples, seed, workers);
}

std::vector<PointEstimate> EstimateNoise(const BiasedOracle& o, const std::vector<Vector>& points,
                                         std::int64_t samples, std::uint64_t seed, int workers) {
  if (samples < 1000) throw std::invalid_argument("noise estimation needs at least 1000 samples");
  return kernels::SamplePointsParallel(o, points, samples, seed, workers);
}

LinearEnvelope FitEnvelope(const std::vector<double>& a, const std::vector<double>& u) {
  if (a.size() != u.size() || a.empty()) throw std::invalid_argument("envelope needs matched points");
  const std::size_t n = a.size();
  for (double v : a)
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("abscissae must be >= 0");
  double sum_a = 0.0;
  double max_u = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_a += a[i];
    max_u = std::max(max_u, u[i]);
  }
  double scale = max_u;
  for (double v : a) scale = std::max(scale, v);
  const double tol = 1e-12 * std::max(scale, 1e-300);

  const auto violation = [&](double s, double c) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, u[i] - (s * a[i] + c));
    return worst;
  };

  std::vector<LinearEnvelope> candidates;
  candidates.push_back({0.0, max_u});
  double s_only = 0.0;
  bool s_only_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (u[i] <= 0.0) continue;
    if (a[i] == 0.0) {
      s_only_ok = false;
      break;
    }
    s_only = std::max(s_only, u[i] / a[i]);
  }
  if (s_only_ok) candidates.push_back({s_only, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (a[i] == a[j]) continue;
      const double s = (u[i] - u[j]) / (a[i] - a[j]);
      const double c = u[i] - s * a[i];
      if (s >= 0.0 && c >= 0.0) candidates.push_back({s, c});
    }
  }

  const auto objective = [&](const LinearEnvelope& e) {
    return e.slope * sum_a + static_cast<double>(n) * e.intercept;
  };
  LinearEnvelope best{0.0, max_u};
  double best_obj = std::numeric_limits<double>::infinity();
  for (const auto& e : candidates) {
    if (violation(e.slope, e.intercept) > tol) continue;
    const double obj = objective(e);
    const double obj_tol = 1e-12 * std::max(std::abs(obj), std::abs(best_obj));
    const bool better = obj < best_obj - obj_tol;
    const bool tie = std::abs(obj - best_obj) <= obj_tol;
    if (better || (tie && (e.intercept < best.intercept ||
                           (e.intercept == best.intercept && e.slope < best.slope)))) {
      best = e;
      best_obj = std::min(obj, best_obj);
    }
  }
  // Lift until every constraint holds in floating point, not just to within tol.
  for (double v = violation(best.slope, best.intercept); v > 0.0;
       v = violation(best.slope, best.intercept)) {
    best.intercept = std::nextafter(best.intercept + v, std::numeric_limits<double>::infinity());
  }
  return best;
}

FittedBounds FitBounds(const std::vector<PointEstimate>& estimates) {
  if (estimates.size() < 5) throw std::invalid_argument("bound fit needs at least 5 points");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& e : estimates) {
    lo = std::min(lo, e.grad_norm_sq);
    hi = std::max(hi, e.grad_norm_sq);
  }
  if (!(lo > 0.0) || hi < 100.0 * lo)
    throw std::invalid_argument("bound fit needs |grad f|^2 spanning two orders of magnitude");

  std::vector<double> a_bias, u_bias, a_noise, u_noise;
  for (const auto& e : estimates) {
    a_bias.push_back(e.grad_norm_sq);
    u_bias.push_back(e.bias_norm_sq + kSlackSe * e.bias_se);
    a_noise.push_back(std::max(0.0, e.mean_norm_sq));
    u_noise.push_back(e.noise_var + kSlackSe * e.noise_se);
  }
  const LinearEnvelope bias = FitEnvelope(a_bias, u_bias);
  const LinearEnvelope noise = FitEnvelope(a_noise, u_noise);
  FittedBounds fit;
  fit.m = bias.slope;
  fit.zeta_sq = bias.intercept;
  fit.M = noise.slope;
  fit.sigma_sq = noise.intercept;
  fit.bias_feasible = bias.slope < 1.0;
  return fit;
}

namespace {

void Record(Verdict& v, double excess) {
  v.margin = std::max(v.margin, excess);
  if (excess > 0.0) v.verified = false;
}

}  // namespace

VerificationReport VerifyDeclared(const BiasedOracle& o, const VerifyOptions& options) {
  const OracleBounds& declared = o.RequireBounds();
  VerificationReport report;
  report.oracle = o.name();
  report.declared = declared;
  const auto points = SelectPoints(*o.problem(), options.points, options.seed);
  report.points = EstimateBias(o, points, options.samples, options.seed, options.workers);

  const GradientRelativeNoise rel = RelativeToGradient(declared);
  report.bias.margin = -std::numeric_limits<double>::infinity();
  report.noise.margin = -std::numeric_limits<double>::infinity();
  report.relative_noise.margin = -std::numeric_limits<double>::infinity();
  for (const auto& e : report.points) {
    const double bias_rhs = declared.m * e.grad_norm_sq + declared.zeta_sq;
    const double bias_slack = e.bias_exact
                                  ? kRoundoff * std::max(bias_rhs, e.bias_norm_sq)
                                  : kSlackSe * e.bias_se;
    Record(report.bias, e.bias_norm_sq - bias_rhs - bias_slack);

    const double noise_rhs = declared.M * std::max(0.0, e.mean_norm_sq) + declared.sigma_sq;
    const double noise_slack =
        kSlackSe * std::sqrt(Sq(e.noise_se) + Sq(declared.M * e.mean_norm_sq_se)) +
        kRoundoff * noise_rhs;
    Record(report.noise, e.noise_var - noise_rhs - noise_slack);

    const double rel_rhs = rel.M_bar * e.grad_norm_sq + rel.sigma_bar_sq;
    Record(report.relative_noise,
           e.noise_var - rel_rhs - kSlackSe * e.noise_se - kRoundoff * rel_rhs);
  }
  try {
    report.fitted = FitBounds(report.points);
    if (!report.fitted->bias_feasible) report.bias.verified = false;
  } catch (const std::invalid_argument&) {
    report.fitted.reset();
  }
  return report;
}

}  // namespace bsgd
