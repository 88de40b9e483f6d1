#pragma once

#include <cstdint>
#include <random>

namespace tagscope {

// Stream ids for deriving subsystem seeds from the single run seed.
// Keeping these fixed makes every derived seed reproducible and loggable.
enum : std::uint64_t {
  kSeedStreamInit = 1,
  kSeedStreamShuffle = 2,
  kSeedStreamReplacement = 3,
  kSeedStreamOov = 4,
  kSeedStreamSynthetic = 5,
  kSeedStreamFiller = 6,
  kSeedStreamSyntheticEmb = 7,
};

// splitmix64 finalizer; mixes a run seed with a stream/sentence id.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// mt19937_64 with a hand-rolled uniform mapping. The standard distributions
// are implementation-defined, so all draws go through next_u64 to keep output
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tagscope
