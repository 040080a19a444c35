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

#include <array>
#include <cstdint>

namespace bsgd {

/// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
/// Maps a 128-bit counter and a 64-bit key to 128 random bits.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter Encrypt(Counter ctr, Key key);
};

/// A reproducible random stream identified by (seed, stream id).
///
/// Draws are a pure function of (seed, stream, position): two streams built
/// from the same pair produce bit-identical sequences on every platform with
/// an IEEE-754 libm. Uniform and Gaussian transforms are implemented here
/// rather than taken from <random>, whose distributions are
/// implementation-defined.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t NextU64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double Uniform();
  /// Uniform on the open interval (0, 1).
  double UniformOpen();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double Normal();
  /// Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
  std::uint64_t UniformIndex(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void Refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Stream id for repetition `rep` of sweep cell `cell`.
constexpr std::uint64_t StreamId(std::uint64_t cell, std::uint64_t rep) {
  return (cell << 32) ^ rep;
}

}  // namespace bsgd
