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

// Command-line front end: run, sweep, tune, verify, budget.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "bsgd/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Biased SGD experiments: runs, sweeps, stepsize tuning, bound checks, budgets"};
  app.require_subcommand(1, 1);

  bsgd::cli::CommandOptions options;
  std::string config_path;
  std::string figure;
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config file");
    sub->add_option("--out", options.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Base seed (overrides run.seed)");
    sub->add_option("--workers", options.workers, "Worker threads (0 = all)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--figure", figure, "Figure preset")
        ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig5", "fig6"}));
  };
  for (const char* name : {"run", "sweep", "tune", "verify", "budget"}) {
    static const std::map<std::string, std::string> help = {
        {"run", "Repeated SGD runs of one configuration"},
        {"sweep", "Cartesian sweep over config axes with per-panel plots"},
        {"tune", "Stepsize race to a target accuracy"},
        {"verify", "Check declared oracle bounds by Monte Carlo"},
        {"budget", "Theoretical stepsize, iteration count and floor"}};
    add_common(app.add_subcommand(name, help.at(name)));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? bsgd::cli::kExitOk : bsgd::cli::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--config") > 0) options.config_path = config_path;
  if (sub->count("--figure") > 0) options.figure = figure;
  if (sub->count("--seed") > 0) options.seed = seed;
  return bsgd::cli::Dispatch(sub->get_name(), options, std::cout, std::cerr);
}
