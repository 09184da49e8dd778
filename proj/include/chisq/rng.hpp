#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace chisq {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for block `block` of stream `stream`. Path j of a run always lands
// in the same block, so results do not depend on how blocks are scheduled.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t block) {
  return splitmix64(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL)) ^
                    (block * 0x8cb92ba72f3d8dd7ULL));
}

// mt19937_64 with Boost's ziggurat normal sampler, which unlike the std
// distributions produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t block) : engine_(derive_seed(seed, stream, block)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace chisq
