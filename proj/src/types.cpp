#include "telemafuse/types.hpp"

namespace tmf {

std::string_view label_name(BinaryLabel label) {
    return label == BinaryLabel::class0 ? "male" : "female";
}

std::string_view gender_code(std::optional<BinaryLabel> label) {
    if (!label) return "?";
    return *label == BinaryLabel::class0 ? "M" : "F";
}

std::optional<BinaryLabel> parse_gender_code(std::string_view code, bool& ok) {
    ok = true;
    if (code == "M") return BinaryLabel::class0;
    if (code == "F") return BinaryLabel::class1;
    if (code == "?") return std::nullopt;
    ok = false;
    return std::nullopt;
}

std::optional<BinaryLabel> parse_label_name(std::string_view name, bool& ok) {
    ok = true;
    if (name == "male") return BinaryLabel::class0;
    if (name == "female") return BinaryLabel::class1;
    if (name == "?") return std::nullopt;
    ok = false;
    return std::nullopt;
}

const std::array<std::string_view, kNumChannels>& channel_names() {
    static const std::array<std::string_view, kNumChannels> names = {
        "speed", "accel_x", "accel_y", "yaw_rate", "pitch_rate", "roll_rate", "heading",
    };
    return names;
}

double RawSample::channel(std::size_t index) const {
    switch (index) {
        case 0: return speed;
        case 1: return accel_x;
        case 2: return accel_y;
        case 3: return yaw_rate;
        case 4: return pitch_rate;
        case 5: return roll_rate;
        default: return heading;
    }
}

double& RawSample::channel(std::size_t index) {
    switch (index) {
        case 0: return speed;
        case 1: return accel_x;
        case 2: return accel_y;
        case 3: return yaw_rate;
        case 4: return pitch_rate;
        case 5: return roll_rate;
        default: return heading;
    }
}

} // namespace tmf
