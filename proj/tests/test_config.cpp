#include <string>

#include "doctest.h"

#include "telemafuse/config.hpp"
#include "telemafuse/errors.hpp"
#include "test_support.hpp"

using namespace tmf::app;

namespace {

PipelineConfig tweaked() {
    PipelineConfig cfg;
    cfg.window.length_s = 128;
    cfg.window.stride_s = 64;
    cfg.features.entropy_bins = 8;
    cfg.features.autocorr_lag = 3;
    cfg.features.heading_mode = tmf::features::HeadingMode::delta;
    cfg.variance_threshold = 1e-9;
    cfg.correlation_threshold = 0.25;
    cfg.forest.n_trees = 33;
    cfg.forest.max_depth = 7;
    cfg.forest.min_samples_split = 4;
    cfg.forest.split_features = 5;
    cfg.bagging.max_features = 6;
    cfg.bagging.max_iterations = 12;
    cfg.bagging.ranking = tmf::bagging::RankingMode::resubstitution;
    cfg.fusion.w1 = 0.5;
    cfg.fusion.w2 = 0.25;
    cfg.fusion.epsilon = 0.001;
    cfg.folds = 4;
    cfg.split = tmf::eval::SplitMode::by_window;
    cfg.selection = tmf::eval::SelectionMode::global;
    cfg.synth.drivers_per_class = 3;
    cfg.synth.trips_per_driver = 2;
    cfg.synth.duration_s = 300;
    cfg.synth.rate_hz = 1;
    cfg.synth.channels[0].level = 70.0;
    cfg.synth.channels[6].driver_sigma = 12.5;
    cfg.seed = 777;
    cfg.threads = 2;
    return cfg;
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("empty text parses to the defaults") {
    const auto cfg = parse_config_text("");
    PipelineConfig expected;
    expected.synth = default_synth_spec(); // INI-less runs get the shipped synth profile
    CHECK(cfg == expected);
    CHECK(cfg.window.length_s == 256);
    CHECK(cfg.folds == 5);
    CHECK(cfg.seed == 42);
}

TEST_CASE("serialize then parse is the identity") {
    testsup::WarnCapture warnings; // tweaked() trips the short-duration advisory
    for (const auto& cfg : {PipelineConfig{}, tweaked()}) {
        const auto text = serialize_config(cfg);
        const auto parsed = parse_config_text(text);
        CHECK(parsed == cfg);
        CHECK(serialize_config(parsed) == text);
    }
}

TEST_CASE("serialized text is organized in sections") {
    const auto text = serialize_config(PipelineConfig{});
    CHECK(text.find("[window]") != std::string::npos);
    CHECK(text.find("[forest]") != std::string::npos);
    CHECK(text.find("[run]") != std::string::npos);
    CHECK(text.find("length_s = 256") != std::string::npos);
    CHECK(text.find("ranking = oob") != std::string::npos);
    CHECK(text.find("split = by-driver") != std::string::npos);
    // window section precedes the run section
    CHECK(text.find("[window]") < text.find("[run]"));
}

TEST_CASE("partial files override only what they mention") {
    const auto cfg = parse_config_text("[forest]\nn_trees = 9\n\n[run]\nseed = 5\n");
    CHECK(cfg.forest.n_trees == 9);
    CHECK(cfg.seed == 5);
    CHECK(cfg.window.length_s == 256);
    CHECK(cfg.folds == 5);
}

TEST_CASE("comments and blank lines are ignored") {
    const auto cfg = parse_config_text(
        "# leading comment\n\n[run]\n; another comment\nseed = 8\n  \n");
    CHECK(cfg.seed == 8);
}

TEST_CASE("crlf files parse") {
    const auto cfg = parse_config_text("[run]\r\nseed = 9\r\n");
    CHECK(cfg.seed == 9);
}

TEST_CASE("parse errors carry the source and line") {
    using tmf::ConfigError;
    CHECK_THROWS_WITH_AS((void)parse_config_text("[florp]\n", "my.ini"),
                         doctest::Contains("my.ini:1"), ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config_text("[run]\nwat = 1\n", "my.ini"),
                         doctest::Contains("my.ini:2"), ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config_text("[run]\nseed = 1\nseed = 2\n", "my.ini"),
                         doctest::Contains("my.ini:3"), ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config_text("[run]\nseed = banana\n", "my.ini"),
                         doctest::Contains("my.ini:2"), ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config_text("seed = 1\n", "my.ini"),
                         doctest::Contains("my.ini:1"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[run\nseed = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[run]\njust some words\n"), ConfigError);
}

TEST_CASE("unknown keys name the offender") {
    CHECK_THROWS_WITH_AS((void)parse_config_text("[run]\nwat = 1\n"), doctest::Contains("wat"),
                         tmf::ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config_text("[florp]\nx = 1\n"), doctest::Contains("florp"),
                         tmf::ConfigError);
}

TEST_CASE("enum values are validated") {
    CHECK(parse_config_text("[features]\nheading_mode = delta\n").features.heading_mode ==
          tmf::features::HeadingMode::delta);
    CHECK_THROWS_AS((void)parse_config_text("[features]\nheading_mode = sideways\n"),
                    tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[bagging]\nranking = vibes\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[evaluation]\nsplit = by-vibe\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[evaluation]\nselection = sometimes\n"),
                    tmf::ConfigError);
}

TEST_CASE("range validation rejects nonsense") {
    CHECK_THROWS_AS((void)parse_config_text("[window]\nlength_s = 1\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[window]\nstride_s = 0\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[features]\nentropy_bins = 0\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[features]\nautocorr_lag = 0\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[features]\nautocorr_lag = 256\n"),
                    tmf::ConfigError); // must stay below the window length
    CHECK_THROWS_AS((void)parse_config_text("[forest]\nn_trees = 0\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[forest]\nmin_samples_split = 1\n"),
                    tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[bagging]\nmax_iterations = 2\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[fusion]\nw1 = 0\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[fusion]\nepsilon = 0.5\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[evaluation]\nfolds = 1\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[selection]\ncorrelation_threshold = 2\n"),
                    tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[synth]\nrate_hz = 7\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[synth]\nspeed_noise = 0\n"), tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[synth]\nspeed_reversion = 1.5\n"),
                    tmf::ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[run]\nthreads = -1\n"), tmf::ConfigError);
}

TEST_CASE("short trips warn against the window length") {
    testsup::WarnCapture warnings;
    const auto cfg = parse_config_text("[synth]\nduration_s = 300\n");
    CHECK(cfg.synth.duration_s == 300);
    CHECK(warnings.any_contains("duration"));
}

TEST_CASE("load and save round-trip through a file") {
    testsup::WarnCapture warnings;
    testsup::TempDir dir;
    const auto cfg = tweaked();
    const auto path = dir.file("pipeline.ini");
    save_config(cfg, path);
    const auto loaded = load_config(path);
    CHECK(loaded == cfg);
    CHECK_THROWS_AS((void)load_config(dir.file("missing.ini")), tmf::ConfigError);
}

TEST_CASE("experiment spec mirrors the config") {
    const auto cfg = tweaked();
    const auto spec = cfg.experiment();
    CHECK(spec.folds == cfg.folds);
    CHECK(spec.split == cfg.split);
    CHECK(spec.selection == cfg.selection);
    CHECK(spec.variance_threshold == cfg.variance_threshold);
    CHECK(spec.correlation_threshold == cfg.correlation_threshold);
    CHECK(spec.forest == cfg.forest);
    CHECK(spec.bagging == cfg.bagging);
    CHECK(spec.fusion == cfg.fusion);
    CHECK(spec.seed == cfg.seed);
    CHECK(spec.threads == cfg.threads);
}

TEST_CASE("synth channel keys map by channel name") {
    const auto cfg = parse_config_text(
        "[synth]\nspeed_level = 80\nheading_driver_sigma = 45\nyaw_rate_offset = -2\n");
    CHECK(cfg.synth.channels[0].level == 80.0);
    CHECK(cfg.synth.channels[6].driver_sigma == 45.0);
    CHECK(cfg.synth.channels[3].class1_offset == -2.0);
}

} // TEST_SUITE("config")
