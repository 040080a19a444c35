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

#include "bsgd/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bsgd/kernels.hpp"

namespace bsgd {

StepSchedule::StepSchedule(std::vector<double> values, bool constant)
    : values_(std::move(values)), constant_(constant) {
  if (values_.empty()) throw std::invalid_argument("step schedule is empty");
  for (double v : values_)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("stepsizes must be positive");
}

StepSchedule StepSchedule::Constant(double gamma) { return StepSchedule({gamma}, true); }

StepSchedule StepSchedule::Sequence(std::vector<double> gammas) {
  return StepSchedule(std::move(gammas), false);
}

double StepSchedule::At(std::int64_t t) const {
  if (constant_) return values_.front();
  return values_.at(static_cast<std::size_t>(t));
}

void StepSchedule::CheckCovers(std::int64_t steps) const {
  if (!constant_ && static_cast<std::int64_t>(values_.size()) < steps)
    throw std::invalid_argument("stepsize sequence is shorter than the number of steps");
}

std::string StepSchedule::Describe() const {
  std::ostringstream os;
  os.precision(17);
  if (constant_) {
    os << "constant:" << values_.front();
  } else {
    os << "sequence[" << values_.size() << "]";
  }
  return os.str();
}

const char* ToString(RunStatus s) {
  switch (s) {
    case RunStatus::kCompleted:
      return "completed";
    case RunStatus::kDivergedOverflow:
      return "diverged-overflow";
    case RunStatus::kDivergedInValue:
      return "diverged-in-value";
  }
  return "unknown";
}

std::vector<std::int64_t> CheckpointIndices(std::int64_t steps, std::int64_t full_trace_limit) {
  std::vector<std::int64_t> idx;
  if (steps <= full_trace_limit) {
    idx.reserve(static_cast<std::size_t>(steps + 1));
    for (std::int64_t t = 0; t <= steps; ++t) idx.push_back(t);
    return idx;
  }
  constexpr std::int64_t kDense = 1000;
  constexpr double kRatio = 1.01;
  std::int64_t t = 0;
  while (t < steps) {
    idx.push_back(t);
    t = t < kDense ? t + 1
                   : std::max(t + 1, static_cast<std::int64_t>(std::floor(t * kRatio)));
  }
  idx.push_back(steps);
  return idx;
}

RunTrace SgdRun(const BiasedOracle& oracle, const StepSchedule& schedule, std::int64_t steps,
                Rng& rng, const SgdOptions& options) {
  if (steps < 1) throw std::invalid_argument("number of steps must be positive");
  schedule.CheckCovers(steps);
  const Problem& p = *oracle.problem();
  const double f_star = p.optimal_value().value_or(0.0);

  RunTrace trace;
  trace.steps_requested = steps;
  trace.fingerprint = options.fingerprint;
  trace.thinned = steps > options.full_trace_limit;
  const auto checkpoints = CheckpointIndices(steps, options.full_trace_limit);
  trace.records.reserve(checkpoints.size());
  std::size_t next_checkpoint = 0;

  Vector x = options.x0 ? *options.x0 : DefaultStart(p);
  if (x.size() != p.dim()) throw std::invalid_argument("starting point has the wrong dimension");
  Vector grad(p.dim());
  Vector g(p.dim());

  const auto start = std::chrono::steady_clock::now();
  const auto tail_start = static_cast<std::int64_t>(
      std::ceil((1.0 - options.tail_fraction) * static_cast<double>(steps)));
  double psi_sum = 0.0;
  double tail_gap_sum = 0.0;
  double tail_grad_sum = 0.0;
  std::int64_t tail_count = 0;
  bool strictly_increasing = true;
  double prev_value = 0.0;

  std::int64_t t = 0;
  for (;; ++t) {
    const double value = p.ValueAndGradient(x, grad);
    const double grad_norm_sq = grad.squaredNorm();
    const double x_norm = x.norm();
    if (!std::isfinite(value) || !std::isfinite(grad_norm_sq) || !std::isfinite(x_norm) ||
        std::abs(value) > options.divergence_guard || x_norm > options.divergence_guard) {
      trace.status = RunStatus::kDivergedOverflow;
      break;
    }
    const double gap = value - f_star;
    if (t > 0 && !(value > prev_value)) strictly_increasing = false;
    prev_value = value;
    if (t >= tail_start) {
      tail_gap_sum += gap;
      tail_grad_sum += grad_norm_sq;
      ++tail_count;
    }
    const double gamma = t < steps ? schedule.At(t) : 0.0;
    if (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == t) {
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      trace.records.push_back({t, gap, grad_norm_sq, gamma, wall});
      ++next_checkpoint;
    }
    if (t == steps) break;
    psi_sum += grad_norm_sq;
    oracle.Query(x, rng, g);
    x.noalias() -= gamma * g;
  }

  trace.steps_taken = trace.status == RunStatus::kCompleted ? steps : t;
  trace.final_iterate = std::move(x);
  trace.psi = trace.steps_taken > 0 ? psi_sum / static_cast<double>(trace.steps_taken) : 0.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  trace.tail_mean_f_gap = tail_count > 0 ? tail_gap_sum / tail_count : nan;
  trace.tail_mean_grad_norm_sq = tail_count > 0 ? tail_grad_sum / tail_count : nan;
  if (trace.status == RunStatus::kCompleted && steps >= 2 && strictly_increasing)
    trace.status = RunStatus::kDivergedInValue;
  return trace;
}

std::int64_t UniformRandomIterate(const RunTrace& trace, Rng& rng) {
  if (trace.records.empty()) throw std::invalid_argument("trace is empty");
  if (trace.steps_taken <= 0) return 0;
  return static_cast<std::int64_t>(rng.UniformIndex(static_cast<std::uint64_t>(trace.steps_taken)));
}

std::int64_t AggregateTrace::diverged_reps() const {
  std::int64_t n = 0;
  for (const auto& r : reps) n += Diverged(r.status) ? 1 : 0;
  return n;
}

namespace {

std::pair<double, double> MeanAndSe(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  double mean = 0.0;
  double m2 = 0.0;
  double k = 0.0;
  for (double v : xs) {
    k += 1.0;
    const double d = v - mean;
    mean += d / k;
    m2 += d * (v - mean);
  }
  const double se = n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  return {mean, se};
}

}  // namespace

std::pair<double, double> AggregateTrace::TailFloor() const {
  std::vector<double> xs;
  xs.reserve(reps.size());
  for (const auto& r : reps) xs.push_back(r.tail_mean_f_gap);
  return MeanAndSe(xs);
}

std::pair<double, double> AggregateTrace::TailGradNormSq() const {
  std::vector<double> xs;
  xs.reserve(reps.size());
  for (const auto& r : reps) xs.push_back(r.tail_mean_grad_norm_sq);
  return MeanAndSe(xs);
}

double AggregateTrace::MeanCurveTail(double fraction) const {
  if (t.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double cutoff = (1.0 - fraction) * static_cast<double>(t.back());
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (static_cast<double>(t[i]) >= cutoff) {
      sum += mean_f_gap[i];
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

AggregateTrace SgdRunRepeated(const RepeatedRunConfig& config, int workers) {
  return kernels::RepeatedRunsParallel(config, workers);
}

TargetHit RunUntilTarget(const BiasedOracle& oracle, double gamma, std::int64_t reps,
                         std::uint64_t seed, std::uint64_t cell, double target,
                         std::int64_t max_steps, const std::optional<Vector>& x0) {
  if (reps < 1) throw std::invalid_argument("need at least one repetition");
  if (!(gamma > 0.0)) throw std::invalid_argument("stepsize must be positive");
  const Problem& p = *oracle.problem();
  const double f_star = p.optimal_value().value_or(0.0);
  const Vector start = x0 ? *x0 : DefaultStart(p);

  std::vector<Vector> xs(static_cast<std::size_t>(reps), start);
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(reps));
  for (std::int64_t r = 0; r < reps; ++r)
    rngs.emplace_back(seed, StreamId(cell, static_cast<std::uint64_t>(r)));
  Vector g(p.dim());

  TargetHit hit;
  hit.best_mean_gap = std::numeric_limits<double>::infinity();
  const double inv_reps = 1.0 / static_cast<double>(reps);
  for (std::int64_t t = 0;; ++t) {
    double mean_gap = 0.0;
    for (const auto& x : xs) mean_gap += (p.Value(x) - f_star) * inv_reps;
    if (!std::isfinite(mean_gap)) {
      hit.steps_run = t;
      return hit;
    }
    hit.best_mean_gap = std::min(hit.best_mean_gap, mean_gap);
    if (mean_gap <= target) {
      hit.reached = true;
      hit.iterations = t;
      hit.steps_run = t;
      return hit;
    }
    if (t == max_steps) {
      hit.steps_run = t;
      return hit;
    }
    for (std::size_t r = 0; r < xs.size(); ++r) {
      oracle.Query(xs[r], rngs[r], g);
      xs[r].noalias() -= gamma * g;
    }
  }
}

}  // namespace bsgd
