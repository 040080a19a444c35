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

#include "bsgd/cli/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <limits>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "bsgd/cli/svg.hpp"
#include "bsgd/compressors.hpp"
#include "bsgd/theory.hpp"

namespace bsgd::cli {

namespace fs = std::filesystem;

namespace {

void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

double InitialGap(const Problem& p, const std::optional<Vector>& x0) {
  const Vector x = x0 ? *x0 : DefaultStart(p);
  return p.Value(x) - p.optimal_value().value_or(0.0);
}

std::string Sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
  return out;
}

std::string CellDir(const SweepCell& cell) {
  char idx[16];
  std::snprintf(idx, sizeof(idx), "%03zu", cell.index);
  return std::string("cell_") + idx + (cell.assignment.empty() ? "" : "_" + Sanitize(cell.Label()));
}

double ResolveStepsize(const ExperimentConfig& config, const BiasedOracle& oracle,
                       std::optional<TuneResult>& tune) {
  const Problem& p = *oracle.problem();
  switch (config.run.stepsize) {
    case StepsizeKind::kFixed:
      return config.run.stepsize_value;
    case StepsizeKind::kTheorem: {
      if (!oracle.bounds())
        throw ConfigError("theorem stepsize needs an oracle with declared bounds", 0, "run.stepsize");
      const double eps = config.run.stepsize_value;
      const double f0 = InitialGap(p, StartingPoint(config.run, p));
      if (p.pl_constant())
        return theory::PredictPl(eps, p.smoothness(), *p.pl_constant(), f0, *oracle.bounds())
            .stepsize;
      return theory::PredictSmooth(eps, p.smoothness(), f0, *oracle.bounds()).stepsize;
    }
    case StepsizeKind::kTune:
      tune = TuneStepsize(oracle, config, 0);
      return tune->stepsize;
  }
  return config.run.stepsize_value;
}

std::string Num(double v) { return FormatNumber(v); }

}  // namespace

ExperimentConfig ResolveConfig(const CommandOptions& options) {
  if (options.figure && options.config_path)
    throw ConfigError("--figure and --config are mutually exclusive");
  ExperimentConfig config;
  if (options.figure) config = FigurePreset(*options.figure);
  else if (options.config_path) config = LoadConfig(*options.config_path);
  if (options.seed) config.run.seed = *options.seed;
  return config;
}

std::vector<double> StepsizeGrid(const TuneSpec& spec, double smoothness) {
  std::vector<double> grid;
  const double cap = 1.0 / smoothness;
  for (int e = spec.grid_min_exp; e <= spec.grid_max_exp; ++e) {
    const double g = std::min(std::ldexp(1.0, e), cap);
    if (grid.empty() || g > grid.back()) grid.push_back(g);
  }
  return grid;
}

TuneResult TuneStepsize(const BiasedOracle& oracle, const ExperimentConfig& config,
                        std::uint64_t cell) {
  const Problem& p = *oracle.problem();
  const auto grid = StepsizeGrid(config.tune, p.smoothness());
  const auto x0 = StartingPoint(config.run, p);

  double hint = grid.back();
  if (oracle.bounds() && p.pl_constant()) {
    try {
      hint = theory::PlStepsizeTheorem(config.tune.target, p.smoothness(), *p.pl_constant(),
                                       *oracle.bounds());
    } catch (const std::invalid_argument&) {
    }
  }
  std::size_t start = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (std::abs(std::log(grid[i] / hint)) < std::abs(std::log(grid[start] / hint))) start = i;

  // Outward from the hint: start, start+1, start-1, start+2, ...
  std::vector<std::size_t> order{start};
  for (std::size_t r = 1; order.size() < grid.size(); ++r) {
    if (start + r < grid.size()) order.push_back(start + r);
    if (r <= start) order.push_back(start - r);
  }

  TuneResult result;
  result.best_gap = std::numeric_limits<double>::infinity();
  std::int64_t cap = config.tune.max_steps;
  double best_gap_stepsize = grid[start];
  for (std::size_t i : order) {
    if (cap < 0) break;
    const TargetHit hit = RunUntilTarget(oracle, grid[i], config.run.reps, config.run.seed, cell,
                                         config.tune.target, cap, x0);
    result.grid.push_back({grid[i], hit});
    if (hit.best_mean_gap < result.best_gap) {
      result.best_gap = hit.best_mean_gap;
      best_gap_stepsize = grid[i];
    }
    if (hit.reached) {
      result.reached = true;
      result.stepsize = grid[i];
      result.iterations = hit.iterations;
      cap = hit.iterations - 1;
    }
  }
  if (!result.reached) result.stepsize = best_gap_stepsize;
  return result;
}

CellResult ExecuteCell(const SweepCell& cell, int workers) {
  CellResult result;
  result.cell = cell;
  result.fingerprint = Fingerprint(cell.config);
  const ExperimentConfig& config = cell.config;
  const ProblemPtr problem = BuildProblem(config.problem);
  const OraclePtr oracle = BuildOracle(config.oracle, problem);
  result.oracle_name = oracle->name();
  result.stepsize = ResolveStepsize(config, *oracle, result.tune);

  RepeatedRunConfig run;
  run.oracle = oracle;
  run.schedule = StepSchedule::Constant(result.stepsize);
  run.steps = config.run.steps;
  run.reps = config.run.reps;
  run.seed = config.run.seed;
  run.cell = 0;
  run.options.x0 = StartingPoint(config.run, *problem);
  run.options.fingerprint = result.fingerprint;
  result.trace = SgdRunRepeated(run, workers);

  if (oracle->bounds() && problem->pl_constant()) {
    try {
      result.predicted_floor = theory::ErrorFloor(result.stepsize, problem->smoothness(),
                                                  *problem->pl_constant(), *oracle->bounds());
    } catch (const std::invalid_argument&) {
      result.predicted_floor.reset();
    }
  }
  return result;
}

void WriteTraceCsv(const std::string& path, const AggregateTrace& trace) {
  std::string text = std::string(kTraceCsvHeader) + "\n";
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    text += std::to_string(trace.t[i]) + "," + Num(trace.mean_f_gap[i]) + "," +
            Num(trace.se_f_gap[i]) + "," + Num(trace.mean_grad_norm_sq[i]) + "," +
            Num(trace.se_grad_norm_sq[i]) + "\n";
  }
  WriteFile(path, text);
}

std::string SummaryText(const CellResult& r) {
  std::ostringstream os;
  os << "fingerprint = " << r.fingerprint << "\n";
  os << "cell = " << r.cell.Label() << "\n";
  if (r.failed) {
    os << "status = failed\nerror = " << r.error << "\n";
    return os.str();
  }
  const auto& tr = r.trace;
  const auto [floor, floor_se] = tr.TailFloor();
  const auto diverged = tr.diverged_reps();
  os << "oracle = " << r.oracle_name << "\n"
     << "stepsize = " << Num(r.stepsize) << "\n"
     << "steps = " << r.cell.config.run.steps << "\n"
     << "reps = " << r.cell.config.run.reps << "\n"
     << "seed = " << r.cell.config.run.seed << "\n"
     << "recorded_rows = " << tr.t.size() << "\n"
     << "final_t = " << (tr.t.empty() ? 0 : tr.t.back()) << "\n"
     << "final_mean_f_gap = " << (tr.t.empty() ? "nan" : Num(tr.mean_f_gap.back())) << "\n"
     << "final_mean_grad_norm_sq = " << (tr.t.empty() ? "nan" : Num(tr.mean_grad_norm_sq.back()))
     << "\n"
     << "tail_floor = " << Num(floor) << "\n"
     << "tail_floor_se = " << Num(floor_se) << "\n"
     << "predicted_floor = " << (r.predicted_floor ? Num(*r.predicted_floor) : "n/a") << "\n"
     << "diverged = " << (diverged > 0 ? "true" : "false") << "\n"
     << "diverged_reps = " << diverged << "\n";
  if (diverged > 0) {
    for (const auto& rep : tr.reps) {
      if (Diverged(rep.status)) {
        os << "divergence = " << ToString(rep.status) << "\n";
        break;
      }
    }
  }
  if (r.tune) {
    os << "tune_reached = " << (r.tune->reached ? "true" : "false") << "\n"
       << "tune_iterations = " << (r.tune->reached ? std::to_string(r.tune->iterations) : "did-not-reach")
       << "\n"
       << "tune_best_gap = " << Num(r.tune->best_gap) << "\n";
  }
  os << "status = ok\n";
  return os.str();
}

int CmdRun(const ExperimentConfig& config, const std::string& out_dir, int workers,
           std::ostream& log) {
  if (!config.axes.empty()) throw ConfigError("run does not take sweep axes; use sweep");
  SweepCell cell;
  cell.config = config;
  const CellResult r = ExecuteCell(cell, workers);
  const fs::path out(out_dir);
  WriteTraceCsv((out / "trace.csv").string(), r.trace);
  WriteFile(out / "summary.txt", SummaryText(r));
  WriteFile(out / "config.cfg", SerializeConfig(config));
  const auto [floor, se] = r.trace.TailFloor();
  log << "run " << r.fingerprint << ": gamma=" << Num(r.stepsize) << " tail_floor=" << Num(floor)
      << " diverged_reps=" << r.trace.diverged_reps() << "\n";
  return kExitOk;
}

namespace {

std::vector<CellResult> RunCells(const std::vector<SweepCell>& cells, int workers,
                                 bool tune_only) {
  std::vector<CellResult> results(cells.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const int outer = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  const int inner = std::max(1, threads / outer);
  const auto n = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for num_threads(outer) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    auto& r = results[static_cast<std::size_t>(i)];
    const auto& cell = cells[static_cast<std::size_t>(i)];
    try {
      if (tune_only) {
        r.cell = cell;
        r.fingerprint = Fingerprint(cell.config);
        const ProblemPtr problem = BuildProblem(cell.config.problem);
        const OraclePtr oracle = BuildOracle(cell.config.oracle, problem);
        r.oracle_name = oracle->name();
        r.tune = TuneStepsize(*oracle, cell.config, 0);
        r.stepsize = r.tune->stepsize;
      } else {
        r = ExecuteCell(cell, inner);
      }
    } catch (const std::exception& e) {
      r.cell = cell;
      r.failed = true;
      r.error = e.what();
    }
  }
  return results;
}

std::string TuneCell(const TuneResult& t) {
  if (t.reached) return std::to_string(t.iterations);
  return "did-not-reach (best gap " + Num(t.best_gap) + ")";
}

}  // namespace

int CmdSweep(const ExperimentConfig& config, const std::string& out_dir, int workers,
             std::ostream& log) {
  const auto cells = ExpandSweep(config);
  const auto results = RunCells(cells, workers, false);
  const fs::path out(out_dir);

  std::ostringstream manifest;
  manifest << "figure = " << (config.figure.empty() ? "custom" : config.figure) << "\n"
           << "fingerprint = " << Fingerprint(config) << "\n"
           << "cells = " << results.size() << "\n\n"
           << "| cell | dir | panel | stepsize | tail floor | floor se | predicted floor | diverged | "
              "status |\n"
           << "|---|---|---|---|---|---|---|---|---|\n";
  std::map<std::string, std::vector<PlotSeries>> panels;
  bool any_failed = false;
  for (const auto& r : results) {
    const std::string dir = CellDir(r.cell);
    const std::string panel = r.cell.LabelFor(config.panel_axes);
    if (!r.failed) {
      WriteTraceCsv((out / dir / "trace.csv").string(), r.trace);
      PlotSeries s;
      std::vector<std::string> rest;
      for (const auto& [k, v] : r.cell.assignment) {
        if (std::find(config.panel_axes.begin(), config.panel_axes.end(), k) == config.panel_axes.end())
          rest.push_back(k);
      }
      s.label = r.cell.LabelFor(rest);
      if (s.label.empty()) s.label = r.oracle_name;
      for (std::size_t i = 0; i < r.trace.t.size(); ++i) {
        s.x.push_back(static_cast<double>(r.trace.t[i]));
        s.y.push_back(r.trace.mean_f_gap[i]);
      }
      panels[panel].push_back(std::move(s));
    }
    any_failed = any_failed || r.failed;
    WriteFile(out / dir / "summary.txt", SummaryText(r));
    const auto [floor, se] = r.failed ? std::pair<double, double>{0.0, 0.0} : r.trace.TailFloor();
    manifest << "| " << r.cell.Label() << " | " << dir << " | " << (panel.empty() ? "all" : panel)
             << " | " << (r.failed ? "-" : Num(r.stepsize)) << " | " << (r.failed ? "-" : Num(floor))
             << " | " << (r.failed ? "-" : Num(se)) << " | "
             << (r.predicted_floor ? Num(*r.predicted_floor) : "n/a") << " | "
             << (r.failed ? "-" : std::to_string(r.trace.diverged_reps())) << " | "
             << (r.failed ? "failed: " + r.error : std::string("ok")) << " |\n";
  }
  manifest << "\n";
  for (const auto& [panel, series] : panels) {
    const std::string file = "panel_" + (panel.empty() ? std::string("all") : Sanitize(panel)) + ".svg";
    const std::string title =
        (config.figure.empty() ? std::string("sweep") : config.figure) + (panel.empty() ? "" : ": " + panel);
    WriteFile(out / file, RenderLogYPlot(title, "iteration t", "mean f(x_t) - f*", series));
    manifest << "svg " << file << " <- " << (panel.empty() ? "all cells" : panel) << "\n";
  }
  WriteFile(out / "manifest.txt", manifest.str());
  WriteFile(out / "config.cfg", SerializeConfig(config));
  log << "sweep: " << results.size() << " cells written to " << out_dir << "\n";
  return any_failed ? kExitRuntime : kExitOk;
}

int CmdTune(const ExperimentConfig& config, const std::string& out_dir, int workers,
            std::ostream& log) {
  const auto cells = ExpandSweep(config);
  const auto results = RunCells(cells, workers, true);
  std::string csv = "cell,reached,stepsize,iterations,best_gap\n";
  std::ostringstream md;
  md << "| cell | oracle | stepsize | iterations to " << Num(config.tune.target) << " |\n"
     << "|---|---|---|---|\n";
  bool any_failed = false;
  for (const auto& r : results) {
    if (r.failed) {
      any_failed = true;
      md << "| " << r.cell.Label() << " | - | - | failed: " << r.error << " |\n";
      continue;
    }
    const auto& t = *r.tune;
    csv += "\"" + r.cell.Label() + "\"," + (t.reached ? "true" : "false") + "," + Num(t.stepsize) +
           "," + (t.reached ? std::to_string(t.iterations) : "did-not-reach") + "," +
           Num(t.best_gap) + "\n";
    md << "| " << r.cell.Label() << " | " << r.oracle_name << " | " << Num(t.stepsize) << " | "
       << TuneCell(t) << " |\n";
  }
  const fs::path out(out_dir);
  WriteFile(out / "tune.csv", csv);
  WriteFile(out / "tune.md", md.str());
  WriteFile(out / "config.cfg", SerializeConfig(config));
  log << md.str();
  return any_failed ? kExitRuntime : kExitOk;
}

std::vector<std::pair<std::string, OraclePtr>> VerificationOracles() {
  const auto quad = MakeNesterovWorst(10);
  const int d = quad->dim();
  const int k = KFromRatio(0.1, d);
  const auto exact = MakeExactOracle(quad);
  std::vector<std::pair<std::string, OraclePtr>> rows;
  rows.emplace_back("exact", exact);
  rows.emplace_back("top-k", MakeCompressedOracle(MakeTopK(k), exact));
  rows.emplace_back("rand-k", MakeCompressedOracle(MakeRandK(k), exact));
  rows.emplace_back("rand-k (stochastic)",
                    MakeCompressedOracle(MakeRandK(k), MakeGaussianNoiseOracle(exact, 1.0)));
  for (int dim : {2, 5}) {
    for (double tau : {0.1, 0.01}) {
      rows.emplace_back("gaussian smoothing d=" + std::to_string(dim) + " tau=" + Num(tau),
                        MakeGaussianSmoothingOracle(MakeNesterovWorst(dim), tau));
    }
  }
  const double delta = 1e-3;
  rows.emplace_back("(delta,L) oracle",
                    MakeInexactOracle(quad, delta, DefaultInexactBias(*quad, delta)));
  rows.emplace_back("stochastic (delta,L) oracle",
                    MakeInexactOracle(quad, delta, DefaultInexactBias(*quad, delta), 1.0));
  rows.emplace_back("delta-compressor (scaled sign)",
                    MakeCompressedOracle(MakeScaledSignCompressor(d), exact));
  return rows;
}

std::string VerificationTable(const std::vector<std::pair<std::string, VerificationReport>>& rows) {
  const auto verdict = [](const Verdict& v) {
    return (v.verified ? std::string("verified") : std::string("violated")) + " (" + Num(v.margin) + ")";
  };
  std::ostringstream os;
  os << "| row | oracle | declared m, zeta^2, M, sigma^2 | fitted m, zeta^2, M, sigma^2 | bias | noise | "
        "noise vs grad | verdict |\n"
     << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& [label, r] : rows) {
    const auto& b = r.declared;
    os << "| " << label << " | " << r.oracle << " | " << Num(b.m) << ", " << Num(b.zeta_sq) << ", "
       << Num(b.M) << ", " << Num(b.sigma_sq) << " | ";
    if (r.fitted) {
      const auto& f = *r.fitted;
      os << Num(f.m) << ", " << Num(f.zeta_sq) << ", " << Num(f.M) << ", " << Num(f.sigma_sq)
         << (f.bias_feasible ? "" : " (assumption-4-infeasible)");
    } else {
      os << "n/a";
    }
    os << " | " << verdict(r.bias) << " | " << verdict(r.noise) << " | " << verdict(r.relative_noise)
       << " | " << (r.verified() ? "verified" : "violated") << " |\n";
  }
  os << "\nMargins are the largest (estimate - bound - 5 SE) over the points; bias is the "
        "deviation of the oracle mean from the gradient.\n";
  return os.str();
}

int CmdVerify(const std::optional<ExperimentConfig>& config, const std::string& out_dir,
              int workers, std::ostream& log) {
  std::vector<std::pair<std::string, OraclePtr>> oracles;
  VerifyOptions options;
  options.workers = workers;
  if (config) {
    const auto problem = BuildProblem(config->problem);
    auto oracle = BuildOracle(config->oracle, problem);
    if (!oracle->bounds())
      throw ConfigError("oracle '" + oracle->name() + "' declares no bounds to verify", 0, "oracle");
    oracles.emplace_back(oracle->name(), std::move(oracle));
    options.seed = config->run.seed;
  } else {
    oracles = VerificationOracles();
  }
  std::vector<std::pair<std::string, VerificationReport>> reports;
  bool all = true;
  for (const auto& [label, oracle] : oracles) {
    reports.emplace_back(label, VerifyDeclared(*oracle, options));
    all = all && reports.back().second.verified();
  }
  const std::string table = VerificationTable(reports);
  WriteFile(fs::path(out_dir) / "verify.md", table);
  log << table;
  log << (all ? "all rows verified\n" : "some rows violated\n");
  return kExitOk;
}

int CmdBudget(const ExperimentConfig& config, std::ostream& log) {
  const auto problem = BuildProblem(config.problem);
  const auto oracle = BuildOracle(config.oracle, problem);
  if (!oracle->bounds())
    throw ConfigError("oracle '" + oracle->name() + "' has no derived bounds; no budget available", 0,
                      "oracle");
  const OracleBounds& b = *oracle->bounds();
  if (!(b.m < 1.0))
    throw ConfigError("bias slope m = " + Num(b.m) + " >= 1: no convergence guarantee", 0, "oracle");
  const double eps = config.run.stepsize == StepsizeKind::kTheorem ? config.run.stepsize_value
                                                                  : config.tune.target;
  const double f0 = InitialGap(*problem, StartingPoint(config.run, *problem));
  log << "oracle = " << oracle->name() << "\n"
      << "bounds = m " << Num(b.m) << ", zeta^2 " << Num(b.zeta_sq) << ", M " << Num(b.M)
      << ", sigma^2 " << Num(b.sigma_sq) << "\n"
      << "L = " << Num(problem->smoothness()) << "\n"
      << "F0 = " << Num(f0) << "\n"
      << "eps = " << Num(eps) << "\n";
  const auto smooth = theory::PredictSmooth(eps, problem->smoothness(), f0, b);
  log << "smooth: stepsize = " << Num(smooth.stepsize) << ", T = " << smooth.iterations
      << ", floor = " << Num(smooth.floor) << " (" << theory::ToString(smooth.measure) << ")\n";
  if (problem->pl_constant()) {
    const auto pl = theory::PredictPl(eps, problem->smoothness(), *problem->pl_constant(), f0, b);
    log << "pl: mu = " << Num(*problem->pl_constant()) << ", stepsize = " << Num(pl.stepsize)
        << ", T = " << pl.iterations << ", floor = " << Num(pl.floor) << " ("
        << theory::ToString(pl.measure) << ")\n";
  }
  return kExitOk;
}

int Dispatch(const std::string& command, const CommandOptions& options, std::ostream& out,
             std::ostream& err) {
  try {
    if (command == "verify" && !options.config_path && !options.figure)
      return CmdVerify(std::nullopt, options.out_dir, options.workers, out);
    const ExperimentConfig config = ResolveConfig(options);
    if (command == "run") return CmdRun(config, options.out_dir, options.workers, out);
    if (command == "sweep") return CmdSweep(config, options.out_dir, options.workers, out);
    if (command == "tune") return CmdTune(config, options.out_dir, options.workers, out);
    if (command == "verify") return CmdVerify(config, options.out_dir, options.workers, out);
    if (command == "budget") return CmdBudget(config, out);
    err << "unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace bsgd::cli
