#include "adsrc/rng.hpp"

#include <cmath>
#include <numbers>

namespace adsrc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t step, std::uint64_t node,
                      std::uint64_t lane) {
    std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ull);
    h = splitmix64(h ^ step);
    h = splitmix64(h ^ node);
    return splitmix64(h ^ lane);
}

double to_unit(std::uint64_t bits) {  // [0, 1)
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t step, std::uint64_t node,
                       std::uint64_t lane) {
    return to_unit(mix_key(seed, step, node, lane));
}

double counter_gaussian(std::uint64_t seed, std::uint64_t step, std::uint64_t node) {
    const double u1 = 1.0 - counter_uniform(seed, step, node, 0);  // (0, 1]
    const double u2 = counter_uniform(seed, step, node, 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace adsrc
