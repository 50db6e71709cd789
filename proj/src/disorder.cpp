#include "topoqst/disorder.hpp"

#include <cmath>
#include <string>

#include "topoqst/errors.hpp"

namespace topo {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  return mix64(state_);
}

double SplitMix64::uniform01() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t split_seed(std::uint64_t master_seed, std::size_t delta_index,
                         std::size_t k) noexcept {
  const std::uint64_t h =
      mix64(master_seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(delta_index) + 1)));
  return mix64(h ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(k)));
}

DisorderRealization DisorderRealization::clean(std::size_t n_bonds) {
  return DisorderRealization{std::vector<double>(n_bonds, 0.0), 0.0, 0};
}

DisorderRealization sample_disorder(std::size_t n_bonds, double strength, std::uint64_t sub_seed) {
  if (!(strength >= 0.0) || !std::isfinite(strength)) {
    throw ConfigError("disorder strength must be finite and non-negative, got " +
                      std::to_string(strength));
  }
  DisorderRealization out{std::vector<double>(n_bonds, 0.0), strength, sub_seed};
  if (strength == 0.0) return out;
  SplitMix64 rng(sub_seed);
  for (double& x : out.offsets) x = strength * (2.0 * rng.uniform01() - 1.0);
  return out;
}

}  // namespace topo
