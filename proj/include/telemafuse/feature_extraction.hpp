#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "telemafuse/dataset.hpp"
#include "telemafuse/types.hpp"

namespace tmf::features {

struct WindowSpec {
    int length_s = 256;
    int stride_s = 256;

    friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

enum class HeadingMode { raw, delta };

struct FeatureConfig {
    int entropy_bins = 16;
    int autocorr_lag = 1;
    HeadingMode heading_mode = HeadingMode::raw;

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

inline constexpr std::size_t kNumStats = 14;

const std::array<std::string_view, kNumStats>& stat_names();

// channel-major: speed_min, speed_max, ..., heading_energy (7 x 14 names)
const std::vector<std::string>& full_feature_catalog();

struct RawWindow {
    std::string trip_id;
    std::string driver_id;
    std::optional<BinaryLabel> label;
    double start_t = 0.0;
    std::array<std::vector<double>, kNumChannels> channels;
};

struct FeatureWindow {
    std::string trip_id;
    std::string driver_id;
    std::optional<BinaryLabel> label;
    double start_t = 0.0;
    std::vector<double> values; // full_feature_catalog order
};

// Fixed-length windows at start offsets t_first + m*stride_s; a window
// survives only if it holds exactly length_s one-second samples (gaps drop
// the whole window). Requires a 1 Hz stream.
std::vector<RawWindow> segment_windows(const TripStream& stream, const WindowSpec& spec);

std::array<double, kNumStats> compute_stats(std::span<const double> values,
                                            const FeatureConfig& cfg);

FeatureWindow compute_window_features(const RawWindow& window, const FeatureConfig& cfg);

std::vector<FeatureWindow> compute_all_features(const std::vector<RawWindow>& windows,
                                                const FeatureConfig& cfg);

Dataset to_dataset(const std::vector<FeatureWindow>& windows);

// Names of columns whose population variance falls below threshold.
std::vector<std::string> low_variance_filter(const Dataset& dataset, double threshold = 1e-12);

struct SelectionReport {
    std::vector<std::string> variance_dropped;
    // (name, point-biserial r) for every surviving column, in column order.
    std::vector<std::pair<std::string, double>> correlations;
    // |r| >= threshold, sorted by |r| descending, ties in column order.
    std::vector<std::string> selected;
    double threshold = 0.1;

    double correlation_of(const std::string& name) const;
};

SelectionReport point_biserial_select(const Dataset& dataset, double threshold = 0.1,
                                      const std::vector<std::string>& variance_dropped = {});

// The selected list, padded with the highest-|r| leftovers when fewer than
// min_features passed the threshold (weak data must still feed the bagger).
std::vector<std::string> selection_catalog(const SelectionReport& report,
                                           std::size_t min_features);

// Header: trip_id,driver_id,label,<feature names...>
void write_feature_csv(const Dataset& dataset, const std::string& path);
Dataset read_feature_csv(const std::string& path);

// Header: feature,correlation; one row per selected feature.
void write_selection_csv(const SelectionReport& report, const std::string& path);

} // namespace tmf::features
