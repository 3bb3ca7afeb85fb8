#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "telemafuse/types.hpp"

namespace tmf::ingest {

/// Trip CSV schema. One row per raw sample, gender in {M, F, ?}.
inline constexpr std::string_view kTripCsvHeader =
    "trip_id,driver_id,gender,t,speed,accel_x,accel_y,yaw_rate,pitch_rate,roll_rate,heading";

/// Parse a trip CSV into one TripStream per distinct trip_id, in order of
/// first appearance. Samples are sorted by t; rate_hz inferred per trip from
/// the median inter-sample gap. Throws DataError on malformed rows (with line
/// numbers), invariant violations, non-monotone timestamps, or empty input.
std::vector<TripStream> parse_trip_csv(const std::string& path);
std::vector<TripStream> parse_trip_csv(std::istream& in, const std::string& source_name);

/// Write streams in the same schema. Numbers use shortest round-trip
/// formatting so parse -> write -> parse is the identity.
void write_trip_csv(const std::vector<TripStream>& streams, const std::string& path);
void write_trip_csv(const std::vector<TripStream>& streams, std::ostream& out);

/// Reduce a 15 Hz stream to 1 Hz. Each whole-second bucket [k, k+1) with at
/// least one sample yields one sample at t = k: plain means for the six
/// linear channels, circular mean for heading. Already-1 Hz input is returned
/// unchanged with a warning; input spanning less than one second throws.
TripStream downsample_to_1hz(const TripStream& stream);

/// Circular mean of headings in degrees, result in [0, 360).
double circular_mean_deg(const std::vector<double>& headings_deg);

struct Violation {
    std::size_t sample_index = 0;
    std::string message;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

/// Report-only check: non-finite values, negative speed, timestamp
/// regressions, heading out of range. Never throws, never mutates.
ValidationReport validate_stream(const TripStream& stream);

} // namespace tmf::ingest
