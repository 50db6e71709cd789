#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace topo {

/// SplitMix64 (Steele, Lea & Flood 2014). The generator and the seed-splitting
/// scheme below are part of the file-format contract: any reimplementation
/// that follows them reproduces the same disorder offsets bit for bit.
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;

  /// Uniform double on [0, 1) from the top 53 bits: (next() >> 11) * 2^-53.
  double uniform01() noexcept;

 private:
  std::uint64_t state_;
};

/// The SplitMix64 output finalizer applied to a single word.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Seed of realization `k` (1-based) at disorder-grid index `delta_index`
/// (0-based):
///
///   h   = mix64(master_seed ^ (0xD1B54A32D192ED03 * (delta_index + 1)))
///   sub = mix64(h ^ (0x9E3779B97F4A7C15 * k))
std::uint64_t split_seed(std::uint64_t master_seed, std::size_t delta_index,
                         std::size_t k) noexcept;

/// Static bond offsets added to the clean couplings at every time.
struct DisorderRealization {
  std::vector<double> offsets;  ///< one per bond, |offset| <= strength
  double strength = 0.0;
  std::uint64_t seed = 0;

  /// All-zero disorder on `n_bonds` bonds.
  static DisorderRealization clean(std::size_t n_bonds);
};

/// i.i.d. offsets uniform on [-strength, strength]: offset_n = strength * (2u - 1)
/// with u drawn in bond order from SplitMix64(sub_seed).uniform01().
DisorderRealization sample_disorder(std::size_t n_bonds, double strength, std::uint64_t sub_seed);

}  // namespace topo
