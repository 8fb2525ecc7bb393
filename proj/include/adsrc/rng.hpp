#pragma once

#include <cstdint>

namespace adsrc {

/// Standard normal draw from a counter-based generator keyed by
/// (seed, step, node): no stream state, so any sample can be produced
/// independently and runs are reproducible under any evaluation order.
double counter_gaussian(std::uint64_t seed, std::uint64_t step, std::uint64_t node);

/// Uniform in [0, 1) from the same keyed generator (lane selects independent values).
double counter_uniform(std::uint64_t seed, std::uint64_t step, std::uint64_t node,
                       std::uint64_t lane = 0);

}  // namespace adsrc
