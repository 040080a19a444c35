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

#include "bsgd/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "bsgd/compressors.hpp"

namespace bsgd::cli {

ConfigError::ConfigError(const std::string& message, int line, std::string key)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line),
      key_(std::move(key)) {}

namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double ParseDouble(const std::string& v, int line, const std::string& key) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'", line, key);
  return out;
}

template <typename Int>
Int ParseInt(const std::string& v, int line, const std::string& key) {
  Int out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'", line, key);
  return out;
}

void Require(bool ok, const std::string& what, int line, const std::string& key) {
  if (!ok) throw ConfigError("'" + key + "' " + what, line, key);
}

void RequireOneOf(const std::string& v, std::initializer_list<const char*> allowed, int line,
                  const std::string& key) {
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return;
    list += list.empty() ? a : std::string(", ") + a;
  }
  throw ConfigError("'" + key + "' must be one of {" + list + "}, got '" + v + "'", line, key);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int, const std::string&)>;

double NonNegative(const std::string& v, int line, const std::string& key) {
  const double d = ParseDouble(v, line, key);
  Require(d >= 0.0, "must be >= 0", line, key);
  return d;
}

double Positive(const std::string& v, int line, const std::string& key) {
  const double d = ParseDouble(v, line, key);
  Require(d > 0.0, "must be > 0", line, key);
  return d;
}

const std::map<std::string, Setter>& Setters() {
  static const std::map<std::string, Setter> table = {
      {"problem.kind",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         RequireOneOf(v, {"nesterov", "huber"}, l, k);
         c.problem.kind = v;
       }},
      {"problem.dim",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.problem.dim = ParseInt<int>(v, l, k);
         Require(c.problem.dim >= 1, "must be >= 1", l, k);
       }},
      {"oracle.base",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         RequireOneOf(v, {"exact", "gaussian_smoothing", "tightness", "inexact", "huber_shifted"},
                      l, k);
         c.oracle.base = v;
       }},
      {"oracle.noise_sigma_sq",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.oracle.noise_sigma_sq = NonNegative(v, l, k);
       }},
      {"oracle.compressor",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         RequireOneOf(v, {"none", "top_k", "rand_k", "rand_k_unbiased", "scaled_sign"}, l, k);
         c.oracle.compressor = v;
       }},
      {"oracle.k_ratio",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.oracle.k_ratio = ParseDouble(v, l, k);
         Require(c.oracle.k_ratio > 0.0 && c.oracle.k_ratio <= 1.0, "must lie in (0, 1]", l, k);
       }},
      {"oracle.zeta",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.oracle.zeta = NonNegative(v, l, k);
       }},
      {"oracle.tau",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.oracle.tau = Positive(v, l, k);
       }},
      {"oracle.m",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.oracle.m = ParseDouble(v, l, k);
         Require(c.oracle.m >= 0.0 && c.oracle.m < 1.0, "must lie in [0, 1)", l, k);
       }},
      {"oracle.zeta_sq",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.oracle.zeta_sq = Positive(v, l, k);
       }},
      {"oracle.delta",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.oracle.delta = Positive(v, l, k);
       }},
      {"oracle.declared_zeta_sq_factor",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.oracle.declared_zeta_sq_factor = NonNegative(v, l, k);
       }},
      {"run.stepsize",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         if (v == "tune") {
           c.run.stepsize = StepsizeKind::kTune;
           return;
         }
         const auto colon = v.find(':');
         if (colon == std::string::npos)
           throw ConfigError("'" + k + "' must be fixed:<gamma>, theorem:<eps> or tune", l, k);
         const std::string kind = v.substr(0, colon);
         RequireOneOf(kind, {"fixed", "theorem"}, l, k);
         c.run.stepsize = kind == "fixed" ? StepsizeKind::kFixed : StepsizeKind::kTheorem;
         c.run.stepsize_value = Positive(v.substr(colon + 1), l, k);
       }},
      {"run.T",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.run.steps = ParseInt<std::int64_t>(v, l, k);
         Require(c.run.steps >= 1, "must be >= 1", l, k);
       }},
      {"run.reps",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.run.reps = ParseInt<std::int64_t>(v, l, k);
         Require(c.run.reps >= 1, "must be >= 1", l, k);
       }},
      {"run.seed",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.run.seed = ParseInt<std::uint64_t>(v, l, k);
       }},
      {"run.x0",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.run.x0.clear();
         if (v == "default") return;
         for (const auto& item : SplitList(v)) c.run.x0.push_back(ParseDouble(item, l, k));
         Require(!c.run.x0.empty(), "must be 'default' or a list of numbers", l, k);
       }},
      {"tune.target",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.tune.target = Positive(v, l, k);
       }},
      {"tune.max_T",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.tune.max_steps = ParseInt<std::int64_t>(v, l, k);
         Require(c.tune.max_steps >= 1, "must be >= 1", l, k);
       }},
      {"tune.grid_min_exp",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.tune.grid_min_exp = ParseInt<int>(v, l, k);
       }},
      {"tune.grid_max_exp",
       [](ExperimentConfig& c, const std::string& v, int l, const std::string& k) {
         c.tune.grid_max_exp = ParseInt<int>(v, l, k);
       }},
      {"output.figure",
       [](ExperimentConfig& c, const std::string& v, int, const std::string&) { c.figure = v; }},
  };
  return table;
}

void CheckConsistency(const ExperimentConfig& c) {
  if (c.tune.grid_min_exp > c.tune.grid_max_exp)
    throw ConfigError("tune.grid_min_exp exceeds tune.grid_max_exp", 0, "tune.grid_min_exp");
  for (const auto& key : c.panel_axes) {
    bool found = false;
    for (const auto& a : c.axes) found = found || a.key == key;
    if (!found) throw ConfigError("panel axis '" + key + "' is not a sweep axis", 0, "sweep.panel");
  }
}

}  // namespace

void ApplySetting(ExperimentConfig& config, const std::string& dotted_key, const std::string& value,
                  int line) {
  const auto& table = Setters();
  const auto it = table.find(dotted_key);
  if (it == table.end()) throw ConfigError("unknown key '" + dotted_key + "'", line, dotted_key);
  it->second(config, value, line, dotted_key);
}

ExperimentConfig ParseConfig(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = Trim(s.substr(1, s.size() - 2));
      RequireOneOf(section, {"problem", "oracle", "run", "tune", "sweep", "output"}, line,
                   "section");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = Trim(s.substr(0, eq));
    const std::string value = Trim(s.substr(eq + 1));
    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line, key);

    if (section == "sweep") {
      if (key == "panel") {
        config.panel_axes = SplitList(value);
      } else if (key.rfind("axis.", 0) == 0) {
        SweepAxis axis{key.substr(5), SplitList(value)};
        if (axis.values.empty()) throw ConfigError("sweep axis has no values", line, key);
        for (const auto& a : config.axes)
          if (a.key == axis.key) throw ConfigError("duplicate sweep axis", line, key);
        ExperimentConfig probe = config;
        for (const auto& v : axis.values) ApplySetting(probe, axis.key, v, line);
        config.axes.push_back(std::move(axis));
      } else {
        throw ConfigError("unknown key '" + key + "' in [sweep]", line, key);
      }
      continue;
    }
    ApplySetting(config, section + "." + key, value, line);
  }
  CheckConsistency(config);
  return config;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

std::string FormatNumber(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

std::string SerializeConfig(const ExperimentConfig& c) {
  std::ostringstream os;
  const auto num = FormatNumber;
  os << "[problem]\n"
     << "kind = " << c.problem.kind << "\n"
     << "dim = " << c.problem.dim << "\n\n";
  os << "[oracle]\n"
     << "base = " << c.oracle.base << "\n"
     << "noise_sigma_sq = " << num(c.oracle.noise_sigma_sq) << "\n"
     << "compressor = " << c.oracle.compressor << "\n"
     << "k_ratio = " << num(c.oracle.k_ratio) << "\n"
     << "zeta = " << num(c.oracle.zeta) << "\n"
     << "tau = " << num(c.oracle.tau) << "\n"
     << "m = " << num(c.oracle.m) << "\n"
     << "zeta_sq = " << num(c.oracle.zeta_sq) << "\n"
     << "delta = " << num(c.oracle.delta) << "\n"
     << "declared_zeta_sq_factor = " << num(c.oracle.declared_zeta_sq_factor) << "\n\n";
  os << "[run]\n" << "stepsize = ";
  switch (c.run.stepsize) {
    case StepsizeKind::kFixed:
      os << "fixed:" << num(c.run.stepsize_value);
      break;
    case StepsizeKind::kTheorem:
      os << "theorem:" << num(c.run.stepsize_value);
      break;
    case StepsizeKind::kTune:
      os << "tune";
      break;
  }
  os << "\nT = " << c.run.steps << "\n"
     << "reps = " << c.run.reps << "\n"
     << "seed = " << c.run.seed << "\n"
     << "x0 = ";
  if (c.run.x0.empty()) {
    os << "default";
  } else {
    for (std::size_t i = 0; i < c.run.x0.size(); ++i) os << (i ? ", " : "") << num(c.run.x0[i]);
  }
  os << "\n\n[tune]\n"
     << "target = " << num(c.tune.target) << "\n"
     << "max_T = " << c.tune.max_steps << "\n"
     << "grid_min_exp = " << c.tune.grid_min_exp << "\n"
     << "grid_max_exp = " << c.tune.grid_max_exp << "\n\n";
  os << "[sweep]\n" << "panel = ";
  for (std::size_t i = 0; i < c.panel_axes.size(); ++i) os << (i ? ", " : "") << c.panel_axes[i];
  os << "\n";
  for (const auto& a : c.axes) {
    os << "axis." << a.key << " =";
    for (std::size_t i = 0; i < a.values.size(); ++i) os << (i ? ", " : " ") << a.values[i];
    os << "\n";
  }
  os << "\n[output]\n" << "figure = " << c.figure << "\n";
  return os.str();
}

std::string Fingerprint(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : SerializeConfig(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string SweepCell::Label() const {
  if (assignment.empty()) return "base";
  std::string out;
  for (const auto& [k, v] : assignment) out += (out.empty() ? "" : ",") + k + "=" + v;
  return out;
}

std::string SweepCell::LabelFor(const std::vector<std::string>& keys) const {
  std::string out;
  for (const auto& [k, v] : assignment) {
    bool wanted = false;
    for (const auto& key : keys) wanted = wanted || key == k;
    if (wanted) out += (out.empty() ? "" : ",") + k + "=" + v;
  }
  return out;
}

std::vector<SweepCell> ExpandSweep(const ExperimentConfig& config) {
  ExperimentConfig base = config;
  base.axes.clear();
  base.panel_axes.clear();
  std::vector<SweepCell> cells;
  std::vector<std::size_t> pos(config.axes.size(), 0);
  for (;;) {
    SweepCell cell;
    cell.index = cells.size();
    cell.config = base;
    for (std::size_t a = 0; a < config.axes.size(); ++a) {
      const auto& axis = config.axes[a];
      cell.assignment.emplace_back(axis.key, axis.values[pos[a]]);
      ApplySetting(cell.config, axis.key, axis.values[pos[a]]);
    }
    cells.push_back(std::move(cell));
    std::size_t a = config.axes.size();
    while (a > 0) {
      --a;
      if (++pos[a] < config.axes[a].values.size()) break;
      pos[a] = 0;
      if (a == 0) return cells;
    }
    if (config.axes.empty()) return cells;
  }
}

ExperimentConfig FigurePreset(const std::string& figure) {
  ExperimentConfig c;
  c.figure = figure;
  c.run.stepsize = StepsizeKind::kFixed;
  c.run.stepsize_value = 0.01;
  c.run.reps = 20;
  if (figure == "fig1") {
    c.run.steps = 20000;
    c.axes = {{"oracle.noise_sigma_sq", {"0", "1"}}, {"oracle.zeta", {"0", "0.001", "0.1"}}};
    c.panel_axes = {"oracle.noise_sigma_sq"};
  } else if (figure == "fig2" || figure == "fig3") {
    c.run.steps = 50000;
    c.oracle.compressor = figure == "fig2" ? "rand_k" : "top_k";
    c.axes = {{"oracle.noise_sigma_sq", {"0", "1", "100"}}, {"oracle.k_ratio", {"0.1", "1"}}};
    c.panel_axes = {"oracle.noise_sigma_sq"};
  } else if (figure == "fig5") {
    c.run.steps = 20000;
    c.oracle.base = "gaussian_smoothing";
    c.axes = {{"oracle.tau", {"0.1", "0.01"}}};
  } else if (figure == "fig6") {
    c.run.stepsize = StepsizeKind::kTune;
    c.run.reps = 5;
    c.tune.target = 5e-4;
    c.tune.max_steps = 1000000;
    c.axes = {{"oracle.noise_sigma_sq", {"0", "1", "100"}},
              {"oracle.k_ratio", {"0.1", "1"}},
              {"oracle.compressor", {"none", "top_k", "rand_k"}}};
    c.panel_axes = {"oracle.noise_sigma_sq", "oracle.k_ratio"};
  } else {
    throw ConfigError("unknown figure preset '" + figure + "' (expected fig1, fig2, fig3, fig5, fig6)",
                      0, "figure");
  }
  return c;
}

ProblemPtr BuildProblem(const ProblemSpec& spec) {
  try {
    if (spec.kind == "huber") return MakeHuberProblem();
    return MakeNesterovWorst(spec.dim);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what(), 0, "problem.dim");
  }
}

OraclePtr BuildOracle(const OracleSpec& spec, const ProblemPtr& problem) {
  try {
    const int d = problem->dim();
    OraclePtr o;
    bool noise_consumed = false;
    if (spec.base == "exact") {
      o = MakeExactOracle(problem);
    } else if (spec.base == "gaussian_smoothing") {
      o = MakeGaussianSmoothingOracle(problem, spec.tau);
    } else if (spec.base == "tightness") {
      o = MakeTightnessOracle(problem, spec.m, spec.zeta_sq,
                              std::sqrt(spec.zeta_sq) * UniformDirection(d));
    } else if (spec.base == "inexact") {
      o = MakeInexactOracle(problem, spec.delta, DefaultInexactBias(*problem, spec.delta),
                            spec.noise_sigma_sq);
      noise_consumed = true;
    } else if (spec.base == "huber_shifted") {
      if (problem->name() != MakeHuberProblem()->name())
        throw ConfigError("oracle.base = huber_shifted needs problem.kind = huber", 0, "oracle.base");
      o = MakeHuberShiftedOracle();
    } else {
      throw ConfigError("unknown oracle base '" + spec.base + "'", 0, "oracle.base");
    }
    if (!noise_consumed && spec.noise_sigma_sq > 0.0)
      o = MakeGaussianNoiseOracle(o, spec.noise_sigma_sq);
    if (spec.compressor != "none") {
      const int k = KFromRatio(spec.k_ratio, d);
      CompressorPtr c;
      if (spec.compressor == "top_k") c = MakeTopK(k);
      else if (spec.compressor == "rand_k") c = MakeRandK(k);
      else if (spec.compressor == "rand_k_unbiased") c = MakeRandKUnbiased(k);
      else c = MakeScaledSignCompressor(d);
      o = MakeCompressedOracle(c, o, CompositionMode::kBestEffort);
    }
    if (spec.zeta > 0.0) o = MakeAdditiveBiasOracle(o, spec.zeta, UniformDirection(d));
    if (spec.declared_zeta_sq_factor != 1.0 && o->bounds()) {
      OracleBounds b = *o->bounds();
      b.zeta_sq *= spec.declared_zeta_sq_factor;
      o = WithDeclaredBounds(o, b);
    }
    return o;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("oracle: ") + e.what(), 0, "oracle");
  }
}

std::optional<Vector> StartingPoint(const RunSpec& run, const Problem& problem) {
  if (run.x0.empty()) return std::nullopt;
  const int d = problem.dim();
  if (run.x0.size() == 1) return Vector::Constant(d, run.x0.front());
  if (static_cast<int>(run.x0.size()) != d)
    throw ConfigError("run.x0 has " + std::to_string(run.x0.size()) + " entries, problem has dim " +
                          std::to_string(d),
                      0, "run.x0");
  return Eigen::Map<const Vector>(run.x0.data(), d);
}

}  // namespace bsgd::cli
