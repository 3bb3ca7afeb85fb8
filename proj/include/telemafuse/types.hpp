#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tmf {

/// Binary target. class1 is the positive class for AUC. Display names follow
/// the gender-detection origin of the pipeline but nothing downstream depends
/// on them being genders.
enum class BinaryLabel : int {
    class0 = 0, // "male",   CSV gender code "M"
    class1 = 1, // "female", CSV gender code "F"
};

constexpr std::size_t kNumClasses = 2;

std::string_view label_name(BinaryLabel label);                 // "male" / "female"
std::string_view gender_code(std::optional<BinaryLabel> label); // "M" / "F" / "?"
std::optional<BinaryLabel> parse_gender_code(std::string_view code, bool& ok);
std::optional<BinaryLabel> parse_label_name(std::string_view name, bool& ok);

// ---- telemetry -----------------------------------------------------------

constexpr std::size_t kNumChannels = 7;

/// Channel order is fixed everywhere: CSV schema, feature naming, windows.
enum class Channel : int {
    speed = 0,
    accel_x,
    accel_y,
    yaw_rate,
    pitch_rate,
    roll_rate,
    heading,
};

const std::array<std::string_view, kNumChannels>& channel_names();

/// One telemetry sample. Units: t seconds since trip start, speed km/h,
/// accelerations m/s^2, angular rates deg/s, heading degrees in [0, 360).
struct RawSample {
    double t = 0;
    double speed = 0;
    double accel_x = 0;
    double accel_y = 0;
    double yaw_rate = 0;
    double pitch_rate = 0;
    double roll_rate = 0;
    double heading = 0;

    double channel(std::size_t index) const;
    double& channel(std::size_t index);

    bool operator==(const RawSample&) const = default;
};

struct TripStream {
    std::string trip_id;
    std::string driver_id;
    std::optional<BinaryLabel> label;
    int rate_hz = 15; // 15 = raw, 1 = downsampled
    std::vector<RawSample> samples;

    bool operator==(const TripStream&) const = default;
};

} // namespace tmf
