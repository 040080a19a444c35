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

#include "bsgd/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <stdexcept>

namespace bsgd::kernels {

namespace {

// Welford accumulators, one per checkpoint.
class TraceAccumulator {
 public:
  explicit TraceAccumulator(const RepeatedRunConfig& config)
      : t_(CheckpointIndices(config.steps, config.options.full_trace_limit)),
        n_(t_.size(), 0),
        mean_gap_(t_.size(), 0.0),
        m2_gap_(t_.size(), 0.0),
        mean_grad_(t_.size(), 0.0),
        m2_grad_(t_.size(), 0.0) {}

  void Fold(RunTrace trace, bool keep, AggregateTrace& out) {
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
      const auto& r = trace.records[i];
      const double k = static_cast<double>(++n_[i]);
      const double dg = r.f_gap - mean_gap_[i];
      mean_gap_[i] += dg / k;
      m2_gap_[i] += dg * (r.f_gap - mean_gap_[i]);
      const double dn = r.grad_norm_sq - mean_grad_[i];
      mean_grad_[i] += dn / k;
      m2_grad_[i] += dn * (r.grad_norm_sq - mean_grad_[i]);
    }
    RepSummary s;
    s.status = trace.status;
    s.steps_taken = trace.steps_taken;
    s.psi = trace.psi;
    s.tail_mean_f_gap = trace.tail_mean_f_gap;
    s.tail_mean_grad_norm_sq = trace.tail_mean_grad_norm_sq;
    s.final_f_gap = trace.records.empty() ? std::nan("") : trace.records.back().f_gap;
    out.reps.push_back(s);
    if (keep) out.traces.push_back(std::move(trace));
  }

  void Finish(AggregateTrace& out) const {
    std::size_t used = 0;
    while (used < t_.size() && n_[used] > 0) ++used;
    out.t.assign(t_.begin(), t_.begin() + static_cast<std::ptrdiff_t>(used));
    out.count.assign(n_.begin(), n_.begin() + static_cast<std::ptrdiff_t>(used));
    out.mean_f_gap.resize(used);
    out.se_f_gap.resize(used);
    out.mean_grad_norm_sq.resize(used);
    out.se_grad_norm_sq.resize(used);
    for (std::size_t i = 0; i < used; ++i) {
      const double n = static_cast<double>(n_[i]);
      out.mean_f_gap[i] = mean_gap_[i];
      out.mean_grad_norm_sq[i] = mean_grad_[i];
      out.se_f_gap[i] = n > 1.0 ? std::sqrt(m2_gap_[i] / (n - 1.0) / n) : 0.0;
      out.se_grad_norm_sq[i] = n > 1.0 ? std::sqrt(m2_grad_[i] / (n - 1.0) / n) : 0.0;
    }
  }

 private:
  std::vector<std::int64_t> t_;
  std::vector<std::int64_t> n_;
  std::vector<double> mean_gap_, m2_gap_, mean_grad_, m2_grad_;
};

void CheckConfig(const RepeatedRunConfig& config) {
  if (!config.oracle) throw std::invalid_argument("repeated run needs an oracle");
  if (config.reps < 1) throw std::invalid_argument("need at least one repetition");
  if (config.steps < 1) throw std::invalid_argument("number of steps must be positive");
}

RunTrace RunOne(const RepeatedRunConfig& config, std::int64_t rep) {
  Rng rng(config.seed, StreamId(config.cell, static_cast<std::uint64_t>(rep)));
  return SgdRun(*config.oracle, config.schedule, config.steps, rng, config.options);
}

}  // namespace

AggregateTrace RepeatedRunsSerial(const RepeatedRunConfig& config) {
  CheckConfig(config);
  AggregateTrace out;
  TraceAccumulator acc(config);
  for (std::int64_t r = 0; r < config.reps; ++r) acc.Fold(RunOne(config, r), config.keep_traces, out);
  acc.Finish(out);
  return out;
}

AggregateTrace RepeatedRunsParallel(const RepeatedRunConfig& config, int workers) {
  CheckConfig(config);
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  AggregateTrace out;
  TraceAccumulator acc(config);
  std::vector<RunTrace> block(static_cast<std::size_t>(threads));
  std::exception_ptr failure;
  for (std::int64_t first = 0; first < config.reps; first += threads) {
    const int width = static_cast<int>(std::min<std::int64_t>(threads, config.reps - first));
#pragma omp parallel for num_threads(threads) schedule(static, 1)
    for (int i = 0; i < width; ++i) {
      try {
        block[static_cast<std::size_t>(i)] = RunOne(config, first + i);
      } catch (...) {
#pragma omp critical(bsgd_kernel_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    for (int i = 0; i < width; ++i)
      acc.Fold(std::move(block[static_cast<std::size_t>(i)]), config.keep_traces, out);
  }
  acc.Finish(out);
  return out;
}

std::vector<PointEstimate> SamplePointsSerial(const BiasedOracle& o,
                                              const std::vector<Vector>& points,
                                              std::int64_t samples, std::uint64_t seed) {
  std::vector<PointEstimate> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    Rng rng(seed, i);
    out.push_back(SampleAtPoint(o, points[i], samples, rng));
  }
  return out;
}

std::vector<PointEstimate> SamplePointsParallel(const BiasedOracle& o,
                                                const std::vector<Vector>& points,
                                                std::int64_t samples, std::uint64_t seed,
                                                int workers) {
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  std::vector<PointEstimate> out(points.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      Rng rng(seed, static_cast<std::uint64_t>(i));
      out[static_cast<std::size_t>(i)] =
          SampleAtPoint(o, points[static_cast<std::size_t>(i)], samples, rng);
    } catch (...) {
#pragma omp critical(bsgd_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace bsgd::kernels
