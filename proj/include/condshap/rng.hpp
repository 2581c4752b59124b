#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace condshap {

// SplitMix64 step function (Steele, Lea & Flood 2014). Advances a 64-bit
// state by the golden-ratio increment and finalizes it; also used as the
// mixing step for stream keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives a substream seed from an ordered list of parts (master seed, domain
// tag, coalition mask, observation index, ...). The fold is
//   key <- mix64(key ^ part)
// starting from key = 0. Substreams are therefore reproducible from the
// master seed alone, independent of evaluation order and thread schedule.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t key = 0;
  for (std::uint64_t part : parts) key = mix64(key ^ part);
  return key;
}

// FNV-1a hash of a string, used to salt substreams by estimator name.
std::uint64_t name_salt(const char* text);

// Domain tags keeping independent pipeline stages on disjoint streams.
namespace stream_tag {
inline constexpr std::uint64_t kTrainData = 0x01;
inline constexpr std::uint64_t kTestData = 0x02;
inline constexpr std::uint64_t kTruth = 0x03;
inline constexpr std::uint64_t kEstimator = 0x04;
inline constexpr std::uint64_t kSurrogateMasks = 0x05;
}  // namespace stream_tag

// Sequential SplitMix64 generator: state advances by the golden-ratio
// increment, outputs are the finalized states. Uniform doubles use the top
// 53 bits offset by 1/2 so they lie strictly inside (0, 1); normals use the
// Box-Muller transform. Both are documented here so any language can
// reproduce the streams bit-for-bit from the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t out = mix64(state_);
    state_ += 0x9E3779B97F4A7C15ULL;
    return out;
  }

  // Uniform on the open interval (0, 1).
  double uniform() { return ((next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  // One standard normal via Box-Muller (cosine branch only).
  double normal();

  // Fills dst[0..n) with standard normals, consuming uniforms pairwise and
  // emitting both Box-Muller branches. Faster than n calls to normal() and
  // the draw order is part of the documented stream layout.
  void fill_normals(double* dst, std::ptrdiff_t n);

  // Unbiased integer in [0, n) by rejection sampling.
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t state_;
};

}  // namespace condshap
