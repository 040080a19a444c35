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
#include <optional>
#include <string>
#include <vector>

#include "bsgd/oracles.hpp"

namespace bsgd {

/// Stepsizes gamma_t, either constant or an explicit sequence.
class StepSchedule {
 public:
  static StepSchedule Constant(double gamma);
  static StepSchedule Sequence(std::vector<double> gammas);

  double At(std::int64_t t) const;
  bool constant() const { return values_.size() == 1 && constant_; }
  /// Throws std::invalid_argument if a sequence is shorter than `steps`.
  void CheckCovers(std::int64_t steps) const;
  std::string Describe() const;

 private:
  StepSchedule(std::vector<double> values, bool constant);
  std::vector<double> values_;
  bool constant_;
};

struct TraceRecord {
  std::int64_t t = 0;
  double f_gap = 0.0;         // f(x_t) - f*, or f(x_t) when f* is unknown
  double grad_norm_sq = 0.0;  // |grad f(x_t)|^2
  double stepsize = 0.0;      // gamma_t used to leave x_t (0 at the last record)
  double wall_seconds = 0.0;
};

enum class RunStatus {
  kCompleted,
  kDivergedOverflow,  // iterate or value became non-finite or exceeded the guard
  kDivergedInValue,   // f increased strictly at every step of the run
};

const char* ToString(RunStatus s);
inline bool Diverged(RunStatus s) { return s != RunStatus::kCompleted; }

struct RunTrace {
  std::vector<TraceRecord> records;
  Vector final_iterate;
  std::string fingerprint;
  RunStatus status = RunStatus::kCompleted;
  std::int64_t steps_requested = 0;
  std::int64_t steps_taken = 0;
  /// Mean of |grad f(x_t)|^2 over t = 0..steps_taken-1, over every step even
  /// when the stored records are thinned.
  double psi = 0.0;
  /// Means over t in [ceil((1 - tail_fraction) T), T], every step included.
  double tail_mean_f_gap = 0.0;
  double tail_mean_grad_norm_sq = 0.0;
  bool thinned = false;
};

struct SgdOptions {
  std::optional<Vector> x0;                // DefaultStart(problem) when empty
  std::int64_t full_trace_limit = 1000000;  // longer runs keep log-spaced checkpoints
  double divergence_guard = 1e12;
  double tail_fraction = 0.1;
  std::string fingerprint;
};

/// The recorded iteration indices for a run of `steps` updates.
std::vector<std::int64_t> CheckpointIndices(std::int64_t steps, std::int64_t full_trace_limit);

/// Runs x_{t+1} = x_t - gamma_t g(x_t) for `steps` updates, drawing all oracle
/// randomness from `rng`. Bit-deterministic given the oracle, schedule and
/// stream. Divergence ends the run early with a partial trace instead of
/// throwing.
RunTrace SgdRun(const BiasedOracle& oracle, const StepSchedule& schedule, std::int64_t steps,
                Rng& rng, const SgdOptions& options = {});

/// Uniform index in [0, T-1] where T = trace.steps_taken (0 when T = 0).
std::int64_t UniformRandomIterate(const RunTrace& trace, Rng& rng);

/// Everything needed to reproduce a set of independent repetitions.
struct RepeatedRunConfig {
  OraclePtr oracle;
  StepSchedule schedule = StepSchedule::Constant(1.0);
  std::int64_t steps = 1;
  std::int64_t reps = 1;
  std::uint64_t seed = 0;
  std::uint64_t cell = 0;  // stream namespace; repetition r uses StreamId(cell, r)
  SgdOptions options;
  bool keep_traces = false;
};

struct RepSummary {
  RunStatus status = RunStatus::kCompleted;
  std::int64_t steps_taken = 0;
  double psi = 0.0;
  double tail_mean_f_gap = 0.0;
  double tail_mean_grad_norm_sq = 0.0;
  double final_f_gap = 0.0;
};

/// Per-checkpoint mean and standard error across repetitions. Repetitions are
/// folded in index order, so the result does not depend on scheduling.
struct AggregateTrace {
  std::vector<std::int64_t> t;
  std::vector<double> mean_f_gap;
  std::vector<double> se_f_gap;
  std::vector<double> mean_grad_norm_sq;
  std::vector<double> se_grad_norm_sq;
  std::vector<std::int64_t> count;
  std::vector<RepSummary> reps;
  std::vector<RunTrace> traces;  // filled when keep_traces

  std::int64_t diverged_reps() const;
  /// Mean and standard error across repetitions of the tail-averaged gap.
  std::pair<double, double> TailFloor() const;
  std::pair<double, double> TailGradNormSq() const;
  /// Tail mean of `mean_f_gap` over recorded indices with t >= (1 - frac) T.
  double MeanCurveTail(double fraction) const;
};

/// Repetitions of `config`, run on up to `workers` OpenMP threads
/// (0 = runtime default).
AggregateTrace SgdRunRepeated(const RepeatedRunConfig& config, int workers = 0);

/// Result of racing a set of repetitions to a target mean gap.
struct TargetHit {
  bool reached = false;
  std::int64_t iterations = 0;  // first t with mean f_gap <= target, when reached
  double best_mean_gap = 0.0;   // smallest mean f_gap seen
  std::int64_t steps_run = 0;
};

/// Runs `reps` repetitions in lockstep (same streams as SgdRunRepeated) and
/// stops at the first t whose mean gap across repetitions is <= `target`, or
/// after `max_steps` updates.
TargetHit RunUntilTarget(const BiasedOracle& oracle, double gamma, std::int64_t reps,
                         std::uint64_t seed, std::uint64_t cell, double target,
                         std::int64_t max_steps, const std::optional<Vector>& x0);

}  // namespace bsgd
