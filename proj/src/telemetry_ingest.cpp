#include "telemafuse/telemetry_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "telemafuse/errors.hpp"
#include "telemafuse/util.hpp"

namespace tmf::ingest {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double parse_field(std::string_view text, std::size_t line_no, std::string_view column) {
    double value = 0;
    if (!try_parse_double(text, value)) {
        throw DataError("parse error at line " + std::to_string(line_no) + ": non-numeric value '" +
                        std::string(text) + "' in column " + std::string(column));
    }
    return value;
}

int infer_rate_hz(const std::vector<RawSample>& samples) {
    if (samples.size() < 2) return 15;
    std::vector<double> gaps;
    gaps.reserve(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        gaps.push_back(samples[i].t - samples[i - 1].t);
    }
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
    const double median = gaps[gaps.size() / 2];
    // Nearest of the two supported rates.
    return median < 0.125 ? 15 : 1;
}

} // namespace

std::vector<TripStream> parse_trip_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open trip file: " + path);
    return parse_trip_csv(in, path);
}

std::vector<TripStream> parse_trip_csv(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty input: " + source_name);
    line = strip_cr(std::move(line));
    if (line != kTripCsvHeader) {
        throw DataError("bad header in " + source_name + ": expected '" + std::string(kTripCsvHeader) + "'");
    }

    std::vector<TripStream> streams;
    std::map<std::string, std::size_t> trip_index; // trip_id -> position in streams

    std::size_t line_no = 1;
    bool any_row = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 11) {
            throw DataError("parse error at line " + std::to_string(line_no) + ": expected 11 columns, got " +
                            std::to_string(fields.size()));
        }
        any_row = true;

        RawSample sample;
        sample.t = parse_field(fields[3], line_no, "t");
        sample.speed = parse_field(fields[4], line_no, "speed");
        sample.accel_x = parse_field(fields[5], line_no, "accel_x");
        sample.accel_y = parse_field(fields[6], line_no, "accel_y");
        sample.yaw_rate = parse_field(fields[7], line_no, "yaw_rate");
        sample.pitch_rate = parse_field(fields[8], line_no, "pitch_rate");
        sample.roll_rate = parse_field(fields[9], line_no, "roll_rate");
        sample.heading = parse_field(fields[10], line_no, "heading");

        if (!std::isfinite(sample.t) || sample.t < 0) {
            throw DataError("line " + std::to_string(line_no) + ": t must be a finite non-negative value");
        }
        for (std::size_t c = 0; c < kNumChannels; ++c) {
            if (!std::isfinite(sample.channel(c))) {
                throw DataError("line " + std::to_string(line_no) + ": non-finite " +
                                std::string(channel_names()[c]));
            }
        }
        if (sample.heading < 0 || sample.heading >= 360.0) {
            throw DataError("line " + std::to_string(line_no) + ": heading must be in [0, 360), got " +
                            format_double(sample.heading));
        }

        bool gender_ok = false;
        const auto label = parse_gender_code(fields[2], gender_ok);
        if (!gender_ok) {
            throw DataError("line " + std::to_string(line_no) + ": gender must be one of M, F, ?");
        }

        const std::string trip_id(fields[0]);
        const std::string driver_id(fields[1]);
        auto it = trip_index.find(trip_id);
        if (it == trip_index.end()) {
            trip_index.emplace(trip_id, streams.size());
            TripStream stream;
            stream.trip_id = trip_id;
            stream.driver_id = driver_id;
            stream.label = label;
            streams.push_back(std::move(stream));
            it = trip_index.find(trip_id);
        } else {
            TripStream& stream = streams[it->second];
            if (stream.driver_id != driver_id) {
                throw DataError("line " + std::to_string(line_no) + ": trip " + trip_id +
                                " has conflicting driver ids");
            }
            if (stream.label != label) {
                throw DataError("line " + std::to_string(line_no) + ": trip " + trip_id +
                                " has conflicting gender values");
            }
        }
        streams[it->second].samples.push_back(sample);
    }
    if (!any_row) throw DataError("empty input: " + source_name + " has a header but no rows");

    for (TripStream& stream : streams) {
        std::sort(stream.samples.begin(), stream.samples.end(),
                  [](const RawSample& a, const RawSample& b) { return a.t < b.t; });
        for (std::size_t i = 1; i < stream.samples.size(); ++i) {
            if (stream.samples[i].t <= stream.samples[i - 1].t) {
                throw DataError("trip " + stream.trip_id + ": duplicate timestamp t=" +
                                format_double(stream.samples[i].t));
            }
        }
        stream.rate_hz = infer_rate_hz(stream.samples);
    }
    return streams;
}

void write_trip_csv(const std::vector<TripStream>& streams, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_trip_csv(streams, out);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

void write_trip_csv(const std::vector<TripStream>& streams, std::ostream& out) {
    std::string buffer;
    buffer.reserve(1 << 20);
    buffer.append(kTripCsvHeader);
    buffer.push_back('\n');
    for (const TripStream& stream : streams) {
        const std::string prefix =
            stream.trip_id + "," + stream.driver_id + "," + std::string(gender_code(stream.label)) + ",";
        for (const RawSample& s : stream.samples) {
            buffer.append(prefix);
            buffer.append(format_double(s.t));
            for (std::size_t c = 0; c < kNumChannels; ++c) {
                buffer.push_back(',');
                buffer.append(format_double(s.channel(c)));
            }
            buffer.push_back('\n');
            if (buffer.size() > (1 << 20)) {
                out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
                buffer.clear();
            }
        }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

double circular_mean_deg(const std::vector<double>& headings_deg) {
    double sum_cos = 0, sum_sin = 0;
    for (double h : headings_deg) {
        const double rad = h * kPi / 180.0;
        sum_cos += std::cos(rad);
        sum_sin += std::sin(rad);
    }
    const double n = static_cast<double>(headings_deg.size());
    const double mc = sum_cos / n;
    const double ms = sum_sin / n;
    if (std::abs(mc) < 1e-15 && std::abs(ms) < 1e-15) return 0.0;
    double deg = std::atan2(ms, mc) * 180.0 / kPi;
    if (deg < 0) deg += 360.0;
    if (deg >= 360.0) deg = 0.0;
    return deg;
}

TripStream downsample_to_1hz(const TripStream& stream) {
    if (stream.rate_hz == 1) {
        warn("downsample: stream " + stream.trip_id + " is already at 1 Hz, returning unchanged");
        return stream;
    }
    if (stream.samples.empty()) {
        throw DataError("downsample: trip " + stream.trip_id + " is empty");
    }
    const double span =
        stream.samples.back().t - stream.samples.front().t + 1.0 / static_cast<double>(stream.rate_hz);
    if (span < 1.0) {
        throw DataError("downsample: trip " + stream.trip_id + " spans less than one second");
    }

    TripStream out;
    out.trip_id = stream.trip_id;
    out.driver_id = stream.driver_id;
    out.label = stream.label;
    out.rate_hz = 1;

    std::size_t i = 0;
    std::vector<double> headings;
    while (i < stream.samples.size()) {
        const double bucket = std::floor(stream.samples[i].t);
        double sums[6] = {};
        headings.clear();
        std::size_t count = 0;
        while (i < stream.samples.size() && std::floor(stream.samples[i].t) == bucket) {
            const RawSample& s = stream.samples[i];
            for (std::size_t c = 0; c < 6; ++c) sums[c] += s.channel(c);
            headings.push_back(s.heading);
            ++count;
            ++i;
        }
        RawSample reduced;
        reduced.t = bucket;
        for (std::size_t c = 0; c < 6; ++c) reduced.channel(c) = sums[c] / static_cast<double>(count);
        reduced.heading = circular_mean_deg(headings);
        out.samples.push_back(reduced);
    }
    return out;
}

ValidationReport validate_stream(const TripStream& stream) {
    ValidationReport report;
    for (std::size_t i = 0; i < stream.samples.size(); ++i) {
        const RawSample& s = stream.samples[i];
        if (!std::isfinite(s.t)) {
            report.violations.push_back({i, "non-finite t"});
        }
        for (std::size_t c = 0; c < kNumChannels; ++c) {
            if (!std::isfinite(s.channel(c))) {
                report.violations.push_back({i, "non-finite " + std::string(channel_names()[c])});
            }
        }
        if (s.speed < 0) {
            report.violations.push_back({i, "negative speed"});
        }
        if (!(s.heading >= 0 && s.heading < 360.0)) {
            if (std::isfinite(s.heading)) {
                report.violations.push_back({i, "heading out of range"});
            }
        }
        if (i > 0 && !(s.t > stream.samples[i - 1].t)) {
            report.violations.push_back({i, "timestamp regression"});
        }
    }
    return report;
}

} // namespace tmf::ingest
