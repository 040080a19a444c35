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

// Experiment configuration: a flat `key = value` text format with [section]
// headers and `#` comments. Every key has a default, so an empty file is a
// valid configuration (the exact oracle on the d = 10 quadratic).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bsgd/oracles.hpp"

namespace bsgd::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0, std::string key = {});
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

struct ProblemSpec {
  std::string kind = "nesterov";  // nesterov | huber
  int dim = 10;
  bool operator==(const ProblemSpec&) const = default;
};

/// Composition chain: base -> gaussian noise -> compressor -> additive bias.
struct OracleSpec {
  std::string base = "exact";  // exact | gaussian_smoothing | tightness | inexact | huber_shifted
  double noise_sigma_sq = 0.0;
  std::string compressor = "none";  // none | top_k | rand_k | rand_k_unbiased | scaled_sign
  double k_ratio = 1.0;
  double zeta = 0.0;      // additive bias along (1, ..., 1)/sqrt(d)
  double tau = 0.01;      // gaussian_smoothing
  double m = 0.5;         // tightness
  double zeta_sq = 0.01;  // tightness
  double delta = 1e-3;    // inexact
  /// Declared zeta^2 is multiplied by this; values < 1 plant a violation.
  double declared_zeta_sq_factor = 1.0;
  bool operator==(const OracleSpec&) const = default;
};

enum class StepsizeKind { kFixed, kTheorem, kTune };

struct RunSpec {
  StepsizeKind stepsize = StepsizeKind::kFixed;
  double stepsize_value = 0.01;  // gamma for fixed, eps for theorem
  std::int64_t steps = 10000;
  std::int64_t reps = 20;
  std::uint64_t seed = 1;
  std::vector<double> x0;  // empty: problem default; one value: broadcast
  bool operator==(const RunSpec&) const = default;
};

struct TuneSpec {
  double target = 5e-4;
  std::int64_t max_steps = 1000000;
  int grid_min_exp = -20;  // grid 2^min .. 2^max, clipped to <= 1/L
  int grid_max_exp = 0;
  bool operator==(const TuneSpec&) const = default;
};

struct SweepAxis {
  std::string key;  // "section.key"
  std::vector<std::string> values;
  bool operator==(const SweepAxis&) const = default;
};

struct ExperimentConfig {
  ProblemSpec problem;
  OracleSpec oracle;
  RunSpec run;
  TuneSpec tune;
  std::vector<SweepAxis> axes;
  /// One SVG per combination of these axes' values; empty: a single panel.
  std::vector<std::string> panel_axes;
  std::string figure;      // label carried into the manifest
  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfig(const std::string& path);
/// Canonical text: every key, fixed order, shortest round-trip numbers.
std::string SerializeConfig(const ExperimentConfig& config);
/// FNV-1a of the canonical text, as 16 hex digits.
std::string Fingerprint(const ExperimentConfig& config);

/// Sets `section.key` from text, as the parser would.
void ApplySetting(ExperimentConfig& config, const std::string& dotted_key, const std::string& value,
                  int line = 0);

/// Cartesian product of the axes, first axis slowest. Each cell carries its
/// (key, value) assignments; axes are cleared in the cell configs.
struct SweepCell {
  std::size_t index = 0;
  std::vector<std::pair<std::string, std::string>> assignment;
  ExperimentConfig config;
  std::string Label() const;
  /// Assignments restricted to `keys`, joined as "k=v,k=v".
  std::string LabelFor(const std::vector<std::string>& keys) const;
};
std::vector<SweepCell> ExpandSweep(const ExperimentConfig& config);

/// Presets for fig1, fig2, fig3, fig5, fig6; throws ConfigError otherwise.
ExperimentConfig FigurePreset(const std::string& figure);

ProblemPtr BuildProblem(const ProblemSpec& spec);
OraclePtr BuildOracle(const OracleSpec& spec, const ProblemPtr& problem);
std::optional<Vector> StartingPoint(const RunSpec& run, const Problem& problem);

/// Shortest text that parses back to the same double.
std::string FormatNumber(double v);

}  // namespace bsgd::cli
