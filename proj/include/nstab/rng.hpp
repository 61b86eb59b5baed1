#pragma once

#include <cstdint>

namespace nstab {

/// Counter-based random stream.  Draw i of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, i), so identical parameters reproduce the
/// sequence bit for bit and independent stream ids can be handed to parallel
/// workers without coordination.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    key_ = mix(mix(seed + 0x9e3779b97f4a7c15ull) ^
               mix(stream_id * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ull;
    return mix(key_ ^ counter_);
  }

  /// Uniform in [0, 1), 53 random bits.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes exactly two uniforms per pair.
  double next_normal();

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nstab
