#include "induction_lens/random.hpp"

#include <cmath>
#include <numbers>

namespace ilens {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(mix_seed(root) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index) {
    // FNV-1a over the tag
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return derive_seed(root, h, index);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n <= 1) return 0;
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = Rng::max() - (Rng::max() % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double standard_normal(Rng& rng) {
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0) u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ilens
