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

// Repetition-level kernels. Each has a plain serial reference and an OpenMP
// version; the two must agree bit for bit, which the tests check and the
// benchmark times.

#include <vector>

#include "bsgd/estimators.hpp"
#include "bsgd/optimizer.hpp"

namespace bsgd::kernels {

AggregateTrace RepeatedRunsSerial(const RepeatedRunConfig& config);
/// Runs repetitions in blocks of `workers` threads and folds each block in
/// repetition order. `workers` <= 0 uses the OpenMP default.
AggregateTrace RepeatedRunsParallel(const RepeatedRunConfig& config, int workers);

/// Point i uses stream (seed, i).
std::vector<PointEstimate> SamplePointsSerial(const BiasedOracle& o,
                                              const std::vector<Vector>& points,
                                              std::int64_t samples, std::uint64_t seed);
std::vector<PointEstimate> SamplePointsParallel(const BiasedOracle& o,
                                                const std::vector<Vector>& points,
                                                std::int64_t samples, std::uint64_t seed,
                                                int workers);

}  // namespace bsgd::kernels
