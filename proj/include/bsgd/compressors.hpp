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

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "bsgd/oracles.hpp"

namespace bsgd {

/// Vector compression operator C. A delta-compressor satisfies
/// E|C(g) - g|^2 <= (1 - delta) |g|^2 for all g.
class Compressor {
 public:
  virtual ~Compressor() = default;

  /// Compresses `g` in place.
  virtual void Apply(Vector& g, Rng& rng) const = 0;
  Vector Apply(const Vector& g, Rng& rng) const;

  virtual bool deterministic() const = 0;
  /// Contraction parameter for vectors of dimension `dim`, if the operator is
  /// a delta-compressor at all.
  virtual std::optional<double> Delta(int dim) const = 0;
  const std::string& name() const { return name_; }

 protected:
  explicit Compressor(std::string name) : name_(std::move(name)) {}

 private:
  std::string name_;
};

using CompressorPtr = std::shared_ptr<const Compressor>;

/// Keeps the k entries of largest magnitude; ties keep the lower index.
Vector TopK(const Vector& g, int k);
/// Keeps a uniformly random k-subset of coordinates (partial Fisher-Yates).
/// Consumes no randomness when k == dim.
Vector RandK(const Vector& g, int k, Rng& rng);
/// (d / k) RandK(g, k).
Vector RandKUnbiased(const Vector& g, int k, Rng& rng);

CompressorPtr MakeTopK(int k);
CompressorPtr MakeRandK(int k);
CompressorPtr MakeRandKUnbiased(int k);

using CompressFn = std::function<void(Vector&, Rng&)>;

/// Wraps a user-supplied operator with a declared contraction `delta`. The
/// declaration is a promise; `CheckContraction` tests it.
CompressorPtr MakeGenericCompressor(std::string name, CompressFn fn, double delta,
                                   bool deterministic);

/// C(g) = (|g|_1 / d) sign(g). A deterministic delta-compressor with
/// delta = |g|_1^2 / (d |g|^2) >= 1/d; declared with delta = 1/dim.
CompressorPtr MakeScaledSignCompressor(int dim);

/// Resolves a fraction k/d to an integer k in [1, dim].
int KFromRatio(double ratio, int dim);

struct ContractionCheck {
  double worst_excess = 0.0;  // max over vectors of (err - (1-delta)|g|^2 - slack)
  bool verified = true;
};

/// Monte-Carlo check of E|C(g) - g|^2 <= (1 - delta) |g|^2 on random
/// Gaussian vectors. Deterministic compressors are checked exactly (one
/// sample, 1e-12 relative rounding allowance); stochastic ones with a
/// 5-standard-error slack.
ContractionCheck CheckContraction(const Compressor& c, double delta, int dim, int vectors,
                                  int samples, std::uint64_t seed);

class UnsupportedComposition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class CompositionMode {
  kDerived,     // throw UnsupportedComposition if no closed-form bounds apply
  kBestEffort,  // leave bounds undeclared instead
};

/// g(x) = C(inner(x)) with bounds composed from the sparsification lemmas:
///   delta-compressor (top-k: delta = k/d) over the exact gradient:
///       (1 - delta, 0, 0, 0)
///   rand-k over an unbiased (M_b, sigma_b^2) oracle:
///       (1 - k/d, 0, (1 + M_b) d/k - 1, (k/d) sigma_b^2)
///   unbiased rand-k over an unbiased (M_b, sigma_b^2) oracle:
///       (0, 0, (1 + M_b) d/k - 1, (d/k) sigma_b^2)
OraclePtr MakeCompressedOracle(CompressorPtr c, OraclePtr inner,
                               CompositionMode mode = CompositionMode::kDerived);

}  // namespace bsgd
