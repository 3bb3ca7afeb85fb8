#pragma once

#include <cstdint>
#include <vector>

#include "telemafuse/config.hpp"
#include "telemafuse/types.hpp"

namespace tmf::app {

// Mean-reverting random walks per channel at spec.rate_hz, one stream of
// draws (class, driver, trip, sample, channel order) so output is a pure
// function of (spec, seed). Values are rounded to 1e-5 before emission to
// keep trip CSVs compact; speed is floored at 0 and heading wrapped to
// [0, 360).
std::vector<TripStream> generate_trips(const SynthSpec& spec, std::uint64_t seed);

} // namespace tmf::app
