// Copyright 2026 The DPFL Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPFL_RNG_H_
#define DPFL_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dpfl {

// Seeded generator with portable derived distributions.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The std:: distributions are not, so uniform, normal and gamma
// variates are computed here: uniforms from the top 53 bits, normals by the
// Box-Muller transform (both outputs of a pair are used), gammas by
// Marsaglia-Tsang.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1).
  double Uniform();

  // Uniform on (0, 1].
  double UniformPositive() { return 1.0 - Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformIndex(uint64_t n);

  double Gaussian();
  double Gaussian(double mean, double stddev) {
    return mean + stddev * Gaussian();
  }

  // log of a Gamma(shape, 1) variate; stays finite for tiny shapes where
  // the variate itself underflows.
  double LogGamma(double shape);

  bool Bernoulli(double p) { return Uniform() < p; }

  // Fisher-Yates, portable across standard libraries.
  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = UniformIndex(i);
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void Shuffle(std::vector<T>& items) {
    Shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer.
uint64_t MixBits(uint64_t x);

// Independent random substreams keyed by (purpose, client, round).
//
// Every stream is reproducible from the master seed alone, so per-client
// work can be replayed or reordered without changing any draw.
class RngStreams {
 public:
  enum class Purpose : uint64_t {
    kDataShuffle = 1,
    kSampling = 2,
    kClientNoise = 3,
    kServerNoise = 4,
    kQuantileNoise = 5,
    kInit = 6,
    kPartition = 7,
    kSynthetic = 8,
    kMonteCarlo = 9,
    kPermutation = 10,
  };

  explicit RngStreams(uint64_t master_seed) : master_seed_(master_seed) {}

  uint64_t master_seed() const { return master_seed_; }

  Rng Stream(Purpose purpose, uint64_t client = 0, uint64_t round = 0) const;

 private:
  uint64_t master_seed_;
};

}  // namespace dpfl

#endif  // DPFL_RNG_H_
