#include "telemafuse/synth.hpp"

#include <cmath>
#include <cstdio>

#include "telemafuse/rng.hpp"
#include "telemafuse/util.hpp"

namespace tmf::app {

namespace {

constexpr std::uint64_t kSynthSalt = 0x5D47;

double quantize(double v) {
    double q = std::round(v * 1e5) / 1e5;
    if (q == 0.0) q = 0.0; // normalize -0
    return q;
}

double wrap_heading(double h) {
    h = std::fmod(h, 360.0);
    if (h < 0) h += 360.0;
    if (h >= 360.0) h = 0.0;
    return h;
}

double wrap_signed_deg(double d) {
    d = std::fmod(d, 360.0);
    if (d >= 180.0) d -= 360.0;
    if (d < -180.0) d += 360.0;
    return d;
}

std::string padded(int value, int width) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%0*d", width, value);
    return buf;
}

} // namespace

std::vector<TripStream> generate_trips(const SynthSpec& spec, std::uint64_t seed) {
    Rng rng(mix_seed(seed, kSynthSalt));
    std::vector<TripStream> trips;
    trips.reserve(static_cast<std::size_t>(2 * spec.drivers_per_class * spec.trips_per_driver));

    const auto n_samples = static_cast<std::size_t>(spec.duration_s * spec.rate_hz);
    const double dt = 1.0 / static_cast<double>(spec.rate_hz);
    const auto heading_idx = static_cast<std::size_t>(Channel::heading);
    const auto speed_idx = static_cast<std::size_t>(Channel::speed);

    for (int cls = 0; cls < 2; ++cls) {
        for (int d = 0; d < spec.drivers_per_class; ++d) {
            const std::string driver_id = "c" + std::to_string(cls) + "_d" + padded(d, 3);

            // Per-driver channel levels: class level, class-1 offset, and a
            // persistent driver-specific shift shared by all of the
            // driver's trips.
            std::array<double, kNumChannels> levels;
            for (std::size_t c = 0; c < kNumChannels; ++c) {
                const auto& p = spec.channels[c];
                levels[c] = p.level + (cls == 1 ? p.class1_offset : 0.0) +
                            p.driver_sigma * rng.normal();
            }
            levels[heading_idx] = wrap_heading(levels[heading_idx]);

            for (int t = 0; t < spec.trips_per_driver; ++t) {
                TripStream trip;
                trip.driver_id = driver_id;
                trip.trip_id = driver_id + "_t" + std::to_string(t);
                trip.label = cls == 0 ? BinaryLabel::class0 : BinaryLabel::class1;
                trip.rate_hz = spec.rate_hz;
                trip.samples.reserve(n_samples);

                std::array<double, kNumChannels> state = levels;
                for (std::size_t k = 0; k < n_samples; ++k) {
                    RawSample sample;
                    sample.t = quantize(static_cast<double>(k) * dt);
                    for (std::size_t c = 0; c < kNumChannels; ++c) {
                        const auto& p = spec.channels[c];
                        double& x = state[c];
                        if (c == heading_idx) {
                            const double pull = wrap_signed_deg(levels[c] - x);
                            x = wrap_heading(x + p.reversion * pull + p.noise * rng.normal());
                        } else {
                            x += p.reversion * (levels[c] - x) + p.noise * rng.normal();
                            if (c == speed_idx && x < 0) x = 0;
                        }
                        double emitted = quantize(x);
                        if (c == heading_idx && emitted >= 360.0) emitted = 0.0;
                        sample.channel(c) = emitted;
                    }
                    trip.samples.push_back(sample);
                }
                trips.push_back(std::move(trip));
            }
        }
    }
    return trips;
}

} // namespace tmf::app
