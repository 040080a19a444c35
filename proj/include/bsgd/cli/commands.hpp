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
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsgd/cli/config.hpp"
#include "bsgd/estimators.hpp"
#include "bsgd/optimizer.hpp"

namespace bsgd::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

inline constexpr const char* kTraceCsvHeader =
    "t,mean_f_gap,se_f_gap,mean_grad_norm_sq,se_grad_norm_sq";

struct CommandOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> figure;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int workers = 0;
};

/// Preset or file (not both), with the seed override applied.
ExperimentConfig ResolveConfig(const CommandOptions& options);

/// Powers of two 2^min..2^max, values above 1/L replaced by 1/L, ascending
/// and without duplicates.
std::vector<double> StepsizeGrid(const TuneSpec& spec, double smoothness);

struct GridOutcome {
  double stepsize = 0.0;
  TargetHit hit;
};

struct TuneResult {
  bool reached = false;
  double stepsize = 0.0;         // fastest to target, or lowest gap when not reached
  std::int64_t iterations = 0;   // valid when reached
  double best_gap = 0.0;
  std::vector<GridOutcome> grid;  // in evaluation order
};

/// Races the grid to `spec.target`. The grid point nearest the theory
/// stepsize runs first; later points are capped one step below the best
/// count found so far, so only strict improvements can win.
TuneResult TuneStepsize(const BiasedOracle& oracle, const ExperimentConfig& config,
                        std::uint64_t cell);

struct CellResult {
  SweepCell cell;
  bool failed = false;
  std::string error;
  double stepsize = 0.0;
  std::optional<TuneResult> tune;
  AggregateTrace trace;
  std::optional<double> predicted_floor;
  std::string oracle_name;
  std::string fingerprint;
};

/// Resolves the stepsize and runs the repetitions of one configuration.
CellResult ExecuteCell(const SweepCell& cell, int workers);

void WriteTraceCsv(const std::string& path, const AggregateTrace& trace);
std::string SummaryText(const CellResult& result);

/// Oracles of the bound-verification table, keyed by row label.
std::vector<std::pair<std::string, OraclePtr>> VerificationOracles();
std::string VerificationTable(const std::vector<std::pair<std::string, VerificationReport>>& rows);

int CmdRun(const ExperimentConfig& config, const std::string& out_dir, int workers,
           std::ostream& log);
int CmdSweep(const ExperimentConfig& config, const std::string& out_dir, int workers,
             std::ostream& log);
int CmdTune(const ExperimentConfig& config, const std::string& out_dir, int workers,
            std::ostream& log);
/// Without a config, verifies every row of VerificationOracles().
int CmdVerify(const std::optional<ExperimentConfig>& config, const std::string& out_dir,
              int workers, std::ostream& log);
int CmdBudget(const ExperimentConfig& config, std::ostream& log);

/// Runs a subcommand and maps exceptions to exit codes.
int Dispatch(const std::string& command, const CommandOptions& options, std::ostream& out,
             std::ostream& err);

}  // namespace bsgd::cli
