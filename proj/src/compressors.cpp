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

#include "bsgd/compressors.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <vector>

namespace bsgd {

namespace {

void CheckK(int k, Eigen::Index dim) {
  if (k < 1 || k > dim) throw std::invalid_argument("compression level k must lie in [1, dim]");
}

void TopKInPlace(Vector& g, int k) {
  const auto d = static_cast<int>(g.size());
  CheckK(k, d);
  if (k == d) return;
  thread_local std::vector<int> order;
  order.resize(d);
  std::iota(order.begin(), order.end(), 0);
  // Larger magnitude first, lower index on ties.
  auto before = [&g](int a, int b) {
    const double ma = std::abs(g[a]);
    const double mb = std::abs(g[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), before);
  for (int i = k; i < d; ++i) g[order[i]] = 0.0;
}

void RandKInPlace(Vector& g, int k, Rng& rng, double scale) {
  const auto d = static_cast<int>(g.size());
  CheckK(k, d);
  if (k == d) return;
  thread_local std::vector<int> order;
  order.resize(d);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(d - i)));
    std::swap(order[i], order[j]);
  }
  thread_local std::vector<char> keep;
  keep.assign(d, 0);
  for (int i = 0; i < k; ++i) keep[order[i]] = 1;
  for (int i = 0; i < d; ++i) g[i] = keep[i] ? scale * g[i] : 0.0;
}

class TopKCompressor final : public Compressor {
 public:
  explicit TopKCompressor(int k) : Compressor("top_k"), k_(k) {}
  void Apply(Vector& g, Rng&) const override { TopKInPlace(g, k_); }
  bool deterministic() const override { return true; }
  std::optional<double> Delta(int dim) const override {
    CheckK(k_, dim);
    return static_cast<double>(k_) / dim;
  }
  int k() const { return k_; }

 private:
  int k_;
};

class RandKCompressor final : public Compressor {
 public:
  RandKCompressor(int k, bool unbiased)
      : Compressor(unbiased ? "rand_k_unbiased" : "rand_k"), k_(k), unbiased_(unbiased) {}

  void Apply(Vector& g, Rng& rng) const override {
    const double scale = unbiased_ ? static_cast<double>(g.size()) / k_ : 1.0;
    RandKInPlace(g, k_, rng, scale);
  }
  bool deterministic() const override { return false; }
  std::optional<double> Delta(int dim) const override {
    CheckK(k_, dim);
    const double ratio = static_cast<double>(k_) / dim;
    if (!unbiased_) return ratio;
    // E|C(g) - g|^2 = (d/k - 1)|g|^2, a contraction only when k > d/2.
    const double delta = 2.0 - 1.0 / ratio;
    if (delta > 0.0) return delta;
    return std::nullopt;
  }
  int k() const { return k_; }
  bool unbiased() const { return unbiased_; }

 private:
  int k_;
  bool unbiased_;
};

class GenericCompressor final : public Compressor {
 public:
  GenericCompressor(std::string name, CompressFn fn, double delta, bool deterministic)
      : Compressor(std::move(name)), fn_(std::move(fn)), delta_(delta), deterministic_(deterministic) {}

  void Apply(Vector& g, Rng& rng) const override { fn_(g, rng); }
  bool deterministic() const override { return deterministic_; }
  std::optional<double> Delta(int) const override { return delta_; }

 private:
  CompressFn fn_;
  double delta_;
  bool deterministic_;
};

class CompressedOracle final : public BiasedOracle {
 public:
  CompressedOracle(CompressorPtr c, OraclePtr inner, std::optional<OracleBounds> bounds)
      : BiasedOracle(c->name() + "(" + inner->name() + ")", inner->problem(), bounds),
        c_(std::move(c)),
        inner_(std::move(inner)) {}

  void Query(const Vector& x, Rng& rng, Vector& out) const override {
    inner_->Query(x, rng, out);
    c_->Apply(out, rng);
  }

  std::optional<Vector> Expected(const Vector& x) const override {
    auto mean = inner_->Expected(x);
    if (!mean) return std::nullopt;
    if (const auto* rk = dynamic_cast<const RandKCompressor*>(c_.get())) {
      if (rk->unbiased()) return mean;
      return (static_cast<double>(rk->k()) / dim()) * *mean;
    }
    if (c_->deterministic() && inner_->deterministic()) {
      Rng unused(0, 0);
      c_->Apply(*mean, unused);
      return mean;
    }
    return std::nullopt;
  }

  bool deterministic() const override { return c_->deterministic() && inner_->deterministic(); }

 private:
  CompressorPtr c_;
  OraclePtr inner_;
};

std::optional<OracleBounds> ComposeBounds(const Compressor& c, const BiasedOracle& inner) {
  const auto& ib = inner.bounds();
  if (!ib) return std::nullopt;
  const bool unbiased = ib->m == 0.0 && ib->zeta_sq == 0.0;
  if (!unbiased) return std::nullopt;
  const int d = inner.dim();

  if (const auto* rk = dynamic_cast<const RandKCompressor*>(&c)) {
    const double ratio = static_cast<double>(rk->k()) / d;
    const double M = (1.0 + ib->M) / ratio - 1.0;
    if (rk->unbiased()) return OracleBounds{0.0, 0.0, M, ib->sigma_sq / ratio};
    return OracleBounds{1.0 - ratio, 0.0, M, ratio * ib->sigma_sq};
  }

  const bool exact_inner = inner.deterministic() && ib->M == 0.0 && ib->sigma_sq == 0.0;
  if (c.deterministic() && exact_inner) {
    const auto delta = c.Delta(d);
    if (!delta || !(*delta > 0.0 && *delta <= 1.0)) return std::nullopt;
    return OracleBounds{1.0 - *delta, 0.0, 0.0, 0.0};
  }
  return std::nullopt;
}

}  // namespace

Vector Compressor::Apply(const Vector& g, Rng& rng) const {
  Vector out = g;
  Apply(out, rng);
  return out;
}

Vector TopK(const Vector& g, int k) {
  Vector out = g;
  TopKInPlace(out, k);
  return out;
}

Vector RandK(const Vector& g, int k, Rng& rng) {
  Vector out = g;
  RandKInPlace(out, k, rng, 1.0);
  return out;
}

Vector RandKUnbiased(const Vector& g, int k, Rng& rng) {
  Vector out = g;
  RandKInPlace(out, k, rng, static_cast<double>(g.size()) / k);
  return out;
}

CompressorPtr MakeTopK(int k) {
  if (k < 1) throw std::invalid_argument("compression level k must be positive");
  return std::make_shared<TopKCompressor>(k);
}

CompressorPtr MakeRandK(int k) {
  if (k < 1) throw std::invalid_argument("compression level k must be positive");
  return std::make_shared<RandKCompressor>(k, false);
}

CompressorPtr MakeRandKUnbiased(int k) {
  if (k < 1) throw std::invalid_argument("compression level k must be positive");
  return std::make_shared<RandKCompressor>(k, true);
}

CompressorPtr MakeGenericCompressor(std::string name, CompressFn fn, double delta,
                                   bool deterministic) {
  if (!fn) throw std::invalid_argument("generic compressor needs an operator");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
  return std::make_shared<GenericCompressor>(std::move(name), std::move(fn), delta, deterministic);
}

CompressorPtr MakeScaledSignCompressor(int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  auto fn = [](Vector& g, Rng&) {
    const double scale = g.lpNorm<1>() / static_cast<double>(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
      g[i] = g[i] > 0.0 ? scale : (g[i] < 0.0 ? -scale : 0.0);
  };
  return MakeGenericCompressor("scaled_sign", fn, 1.0 / dim, true);
}

int KFromRatio(double ratio, int dim) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("k/d ratio must lie in (0, 1]");
  const int k = static_cast<int>(std::lround(ratio * dim));
  return std::clamp(k, 1, dim);
}

ContractionCheck CheckContraction(const Compressor& c, double delta, int dim, int vectors,
                                  int samples, std::uint64_t seed) {
  ContractionCheck result;
  result.worst_excess = -std::numeric_limits<double>::infinity();
  Rng vec_rng(seed, 0);
  Rng op_rng(seed, 1);
  Vector g(dim);
  Vector out(dim);
  for (int v = 0; v < vectors; ++v) {
    for (int i = 0; i < dim; ++i) g[i] = vec_rng.Normal();
    const double allowed = (1.0 - delta) * g.squaredNorm();
    double excess;
    if (c.deterministic()) {
      out = g;
      c.Apply(out, op_rng);
      excess = (out - g).squaredNorm() - allowed - 1e-12 * g.squaredNorm();
    } else {
      double mean = 0.0;
      double m2 = 0.0;
      for (int s = 0; s < samples; ++s) {
        out = g;
        c.Apply(out, op_rng);
        const double e = (out - g).squaredNorm();
        const double dlt = e - mean;
        mean += dlt / (s + 1);
        m2 += dlt * (e - mean);
      }
      const double se = samples > 1 ? std::sqrt(m2 / (samples - 1) / samples) : 0.0;
      excess = mean - allowed - 5.0 * se;
    }
    result.worst_excess = std::max(result.worst_excess, excess);
    if (excess > 0.0) result.verified = false;
  }
  return result;
}

OraclePtr MakeCompressedOracle(CompressorPtr c, OraclePtr inner, CompositionMode mode) {
  if (!c || !inner) throw std::invalid_argument("compressed oracle needs a compressor and an oracle");
  auto bounds = ComposeBounds(*c, *inner);
  if (!bounds && mode == CompositionMode::kDerived)
    throw UnsupportedComposition("no derived bounds for " + c->name() + " over " + inner->name() +
                                 "; estimate them instead");
  return std::make_shared<CompressedOracle>(std::move(c), std::move(inner), bounds);
}

}  // namespace bsgd
