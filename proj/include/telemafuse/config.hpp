#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "telemafuse/choquet_fusion.hpp"
#include "telemafuse/evaluation.hpp"
#include "telemafuse/feature_extraction.hpp"
#include "telemafuse/random_forest.hpp"
#include "telemafuse/types.hpp"
#include "telemafuse/vertical_bagging.hpp"

namespace tmf::app {

struct SynthChannelParams {
    double level = 0.0;
    double reversion = 0.1;
    double noise = 0.1;
    double driver_sigma = 0.0;
    double class1_offset = 0.0;

    friend bool operator==(const SynthChannelParams&, const SynthChannelParams&) = default;
};

struct SynthSpec {
    int drivers_per_class = 100;
    int trips_per_driver = 1;
    int duration_s = 1024;
    int rate_hz = 15;
    std::array<SynthChannelParams, kNumChannels> channels;

    friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

SynthSpec default_synth_spec();

struct PipelineConfig {
    features::WindowSpec window;
    features::FeatureConfig features;
    double variance_threshold = 1e-12;
    double correlation_threshold = 0.1;
    forest::ForestHyperparams forest; // seed field governed by [run] seed
    bagging::BaggingConfig bagging;   // ditto
    fusion::FusionParams fusion;
    int folds = 5;
    eval::SplitMode split = eval::SplitMode::by_driver;
    eval::SelectionMode selection = eval::SelectionMode::per_fold;
    SynthSpec synth;
    std::uint64_t seed = 42;
    int threads = 1;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

    void validate() const; // throws ConfigError
    eval::ExperimentSpec experiment() const;
};

// Strict INI: unknown sections or keys, duplicate keys, and malformed
// values are all configuration errors. serialize(parse(serialize(c))) ==
// serialize(c) exactly.
PipelineConfig parse_config_text(std::string_view text, std::string_view source_name = "<string>");
PipelineConfig load_config(const std::string& path);
std::string serialize_config(const PipelineConfig& cfg);
void save_config(const PipelineConfig& cfg, const std::string& path);

} // namespace tmf::app
