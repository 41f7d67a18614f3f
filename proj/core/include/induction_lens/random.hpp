#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ilens {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; all derived streams hang off one root seed through this.
std::uint64_t mix_seed(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0);
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

// Uniform index in [0, n) that does not depend on the standard library's distribution code.
std::size_t uniform_index(Rng& rng, std::size_t n);
double uniform_unit(Rng& rng);
// Box–Muller; portable across standard library implementations.
double standard_normal(Rng& rng);

}  // namespace ilens
