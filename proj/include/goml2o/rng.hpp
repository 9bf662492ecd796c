// Copyright 2026 The gom-l2o Authors.
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

#ifndef GOML2O_RNG_HPP
#define GOML2O_RNG_HPP

#include <cstdint>
#include <vector>

namespace goml2o {

// SplitMix64 with polar Box-Muller normals. Hand-rolled instead of <random>
// so that streams are bit-reproducible across platforms and standard
// library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed), have_spare_(false), spare_(0.0) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform01();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Integer in [0, n), n >= 1.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via the Marsaglia polar transform.
  double normal();

  std::vector<double> normal_vector(std::size_t n);

  // Uniformly random direction on the unit sphere in R^n.
  std::vector<double> unit_vector(std::size_t n);

  // Derives an independent deterministic stream for (seed, index).
  static Rng derive(std::uint64_t seed, std::uint64_t index);

  // The raw derived seed for (seed, index); used for dataset manifests.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t state_;
  bool have_spare_;
  double spare_;
};

}  // namespace goml2o

#endif  // GOML2O_RNG_HPP
