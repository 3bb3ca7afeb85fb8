#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "oracle_support.hpp"
#include "telemafuse/errors.hpp"
#include "telemafuse/feature_extraction.hpp"
#include "telemafuse/rng.hpp"
#include "test_support.hpp"

using namespace tmf::features;
using tmf::BinaryLabel;
using tmf::Channel;
using tmf::RawSample;
using tmf::TripStream;

namespace {

TripStream stream_1hz(int n_samples, double first_t = 0.0) {
    TripStream s;
    s.trip_id = "t";
    s.driver_id = "d";
    s.label = BinaryLabel::class0;
    s.rate_hz = 1;
    tmf::Rng rng(17);
    for (int i = 0; i < n_samples; ++i) {
        RawSample r;
        r.t = first_t + i;
        r.speed = 50.0 + rng.normal();
        r.heading = 180.0;
        s.samples.push_back(r);
    }
    return s;
}

RawWindow window_with(std::vector<double> values) {
    RawWindow w;
    w.trip_id = "t";
    w.driver_id = "d";
    w.label = BinaryLabel::class0;
    for (auto& ch : w.channels) ch = values;
    return w;
}

tmf::Dataset labeled_dataset(const std::vector<std::vector<double>>& columns,
                             const std::vector<int>& labels,
                             std::vector<std::string> names = {}) {
    tmf::Dataset ds;
    if (names.empty()) {
        for (std::size_t c = 0; c < columns.size(); ++c) names.push_back("f" + std::to_string(c));
    }
    ds.feature_names = std::move(names);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        std::vector<double> row;
        for (const auto& col : columns) row.push_back(col[r]);
        ds.rows.push_back(std::move(row));
        ds.labels.push_back(static_cast<std::int8_t>(labels[r]));
        ds.trip_ids.push_back("t" + std::to_string(r));
        ds.driver_ids.push_back("d" + std::to_string(r));
        ds.window_starts.push_back(0.0);
    }
    return ds;
}

} // namespace

TEST_SUITE("features") {

TEST_CASE("catalog is channel-major, 98 names") {
    const auto& catalog = full_feature_catalog();
    REQUIRE(catalog.size() == 98);
    CHECK(catalog[0] == "speed_min");
    CHECK(catalog[1] == "speed_max");
    CHECK(catalog[13] == "speed_energy");
    CHECK(catalog[14] == "accel_x_min");
    CHECK(catalog[97] == "heading_energy");
    const std::set<std::string> uniq(catalog.begin(), catalog.end());
    CHECK(uniq.size() == 98);
}

TEST_CASE("segmentation counts follow length and stride") {
    WindowSpec spec; // 256 / 256
    CHECK(segment_windows(stream_1hz(512), spec).size() == 2);
    CHECK(segment_windows(stream_1hz(300), spec).size() == 1);
    CHECK(segment_windows(stream_1hz(255), spec).size() == 0);

    WindowSpec overlapping{256, 128};
    CHECK(segment_windows(stream_1hz(512), overlapping).size() == 3);

    WindowSpec small{4, 2};
    const auto windows = segment_windows(stream_1hz(10), small);
    REQUIRE(windows.size() == 4);
    CHECK(windows[0].start_t == 0.0);
    CHECK(windows[1].start_t == 2.0);
    CHECK(windows[0].channels[0].size() == 4);
}

TEST_CASE("windows with gaps are discarded") {
    auto s = stream_1hz(12);
    s.samples.erase(s.samples.begin() + 5); // second 5 missing
    WindowSpec spec{4, 4};
    // candidate starts 0,4,8: the 4..7 window loses its sample, others stay
    const auto windows = segment_windows(s, spec);
    REQUIRE(windows.size() == 2);
    CHECK(windows[0].start_t == 0.0);
    CHECK(windows[1].start_t == 8.0);
}

TEST_CASE("window offsets follow the first sample") {
    const auto windows = segment_windows(stream_1hz(8, 100.0), WindowSpec{4, 4});
    REQUIRE(windows.size() == 2);
    CHECK(windows[0].start_t == 100.0);
    CHECK(windows[1].start_t == 104.0);
}

TEST_CASE("segmentation requires a 1 Hz stream") {
    auto s = stream_1hz(300);
    s.rate_hz = 15;
    CHECK_THROWS_AS((void)segment_windows(s, WindowSpec{}), tmf::DataError);
}

TEST_CASE("constant channel resolves the degenerate stats to zero") {
    FeatureConfig cfg;
    const auto stats = compute_stats(std::vector<double>(24, 5.0), cfg);
    const auto& names = stat_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double v = stats[i];
        if (names[i] == "min" || names[i] == "max" || names[i] == "mean" ||
            names[i] == "median" || names[i] == "q1" || names[i] == "q3") {
            CHECK(v == 5.0);
        } else if (names[i] == "energy") {
            CHECK(v == doctest::Approx(25.0));
        } else {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("alternating series matches the stated formulas") {
    FeatureConfig cfg;
    const auto stats = compute_stats(std::vector<double>{1, -1, 1, -1}, cfg);
    const auto& names = stat_names();
    auto stat = [&](std::string_view name) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return stats[i];
        REQUIRE(false);
        return 0.0;
    };
    CHECK(stat("zero_crossing") == 3.0);
    CHECK(stat("energy") == doctest::Approx(1.0));
    // Lag-1 autocovariance sum over n-1 terms divided by the full power sum:
    // (-1 -1 -1) / 4. The estimator is normalized by all n squared deviations.
    CHECK(stat("autocorr") == doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(stat("mean") == 0.0);
}

TEST_CASE("quantiles interpolate at rank (n-1)p") {
    FeatureConfig cfg;
    const auto stats = compute_stats(std::vector<double>{1, 2, 3}, cfg);
    const auto& names = stat_names();
    auto stat = [&](std::string_view name) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return stats[i];
        REQUIRE(false);
        return 0.0;
    };
    CHECK(stat("q1") == doctest::Approx(1.5));
    CHECK(stat("q3") == doctest::Approx(2.5));
    CHECK(stat("energy") == doctest::Approx(14.0 / 3.0));
    CHECK(stat("median") == doctest::Approx(2.0));

    // even n: median is the mean of the middle two
    const auto even = compute_stats(std::vector<double>{4, 1, 3, 2}, cfg);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "median") CHECK(even[i] == doctest::Approx(2.5));
    }
}

TEST_CASE("stats agree with the independent oracle") {
    FeatureConfig cfg;
    tmf::Rng rng(1234);
    for (int round = 0; round < 100; ++round) {
        const int n = 2 + static_cast<int>(rng.uniform_below(255));
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& v : x) v = rng.uniform(-40.0, 60.0);
        if (round % 7 == 0) x[0] = x[n / 2]; // exercise ties
        const auto got = compute_stats(x, cfg);
        const auto want = oracle::stat_oracle(x, cfg.entropy_bins, cfg.autocorr_lag).in_catalog_order();
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("stat order invariants hold on random windows") {
    FeatureConfig cfg;
    tmf::Rng rng(77);
    const auto& names = stat_names();
    for (int round = 0; round < 20; ++round) {
        const int n = 2 + static_cast<int>(rng.uniform_below(100));
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& v : x) v = rng.uniform(-5.0, 5.0);
        const auto stats = compute_stats(x, cfg);
        auto stat = [&](std::string_view name) {
            for (std::size_t i = 0; i < names.size(); ++i)
                if (names[i] == name) return stats[i];
            return 0.0;
        };
        CHECK(stat("min") <= stat("q1"));
        CHECK(stat("q1") <= stat("median"));
        CHECK(stat("median") <= stat("q3"));
        CHECK(stat("q3") <= stat("max"));
        CHECK(stat("std") >= 0.0);
        CHECK(stat("aad") >= 0.0);
        CHECK(stat("entropy") >= 0.0);
        CHECK(stat("entropy") <= 4.0 + 1e-12);
        CHECK(stat("zero_crossing") >= 0.0);
        CHECK(stat("zero_crossing") <= n - 1.0);
    }
}

TEST_CASE("autocorr lag is configurable") {
    FeatureConfig cfg;
    cfg.autocorr_lag = 2;
    const std::vector<double> x{1, -1, 1, -1, 1, -1, 1, -1};
    const auto got = compute_stats(x, cfg);
    const auto want = oracle::stat_oracle(x, cfg.entropy_bins, 2).in_catalog_order();
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9).scale(1.0));
    }
    // lag beyond the window yields 0 by the degenerate rule
    cfg.autocorr_lag = 50;
    const auto far = compute_stats(std::vector<double>{1, 2, 3, 4}, cfg);
    const auto& names = stat_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "autocorr") CHECK(far[i] == 0.0);
    }
}

TEST_CASE("degenerate windows are rejected") {
    FeatureConfig cfg;
    RawWindow w = window_with({1.0});
    CHECK_THROWS_AS((void)compute_window_features(w, cfg), tmf::DataError);
    RawWindow nan_window = window_with({1.0, std::nan("")});
    CHECK_THROWS_AS((void)compute_window_features(nan_window, cfg), tmf::DataError);
}

TEST_CASE("feature window lays out channel-major values") {
    FeatureConfig cfg;
    RawWindow w = window_with({1, 2, 3, 4});
    w.channels[static_cast<std::size_t>(Channel::speed)] = {10, 20, 30, 40};
    const auto fw = compute_window_features(w, cfg);
    REQUIRE(fw.values.size() == 98);
    CHECK(fw.values[0] == 10.0);  // speed_min
    CHECK(fw.values[1] == 40.0);  // speed_max
    CHECK(fw.values[14] == 1.0);  // accel_x_min
}

TEST_CASE("heading delta mode works on wrapped differences") {
    FeatureConfig cfg;
    cfg.heading_mode = HeadingMode::delta;
    RawWindow w = window_with({0, 0, 0});
    w.channels[static_cast<std::size_t>(Channel::heading)] = {359.0, 1.0, 3.0};
    const auto fw = compute_window_features(w, cfg);
    const std::size_t base = static_cast<std::size_t>(Channel::heading) * kNumStats;
    // deltas are {+2, +2}: min = max = mean = 2
    CHECK(fw.values[base + 0] == doctest::Approx(2.0));
    CHECK(fw.values[base + 1] == doctest::Approx(2.0));
    CHECK(fw.values[base + 2] == doctest::Approx(2.0));

    // raw mode sees the discontinuity instead
    cfg.heading_mode = HeadingMode::raw;
    const auto raw = compute_window_features(w, cfg);
    CHECK(raw.values[base + 0] == 1.0);
    CHECK(raw.values[base + 1] == 359.0);
}

TEST_CASE("low variance filter drops constants") {
    const auto ds = labeled_dataset({{1, 1, 1, 1}, {0, 1, 2, 3}}, {0, 0, 1, 1});
    const auto dropped = low_variance_filter(ds, 1e-12);
    CHECK(dropped == std::vector<std::string>{"f0"});
    CHECK(low_variance_filter(ds, 10.0) == std::vector<std::string>({"f0", "f1"}));
    CHECK_THROWS_AS((void)low_variance_filter(tmf::Dataset{}, 1e-12), tmf::DataError);
}

TEST_CASE("point biserial matches the worked examples") {
    // perfect alignment
    auto report = point_biserial_select(labeled_dataset({{0, 0, 1, 1}}, {0, 0, 1, 1}), 0.1);
    REQUIRE(report.correlations.size() == 1);
    CHECK(report.correlations[0].second == doctest::Approx(1.0));
    CHECK(report.selected == std::vector<std::string>{"f0"});

    // centered products cancel
    report = point_biserial_select(labeled_dataset({{2, 1, 1, 2}}, {0, 0, 1, 1}), 0.1);
    CHECK(report.correlations[0].second == doctest::Approx(0.0));
    CHECK(report.selected.empty());
}

TEST_CASE("selection requires both classes") {
    CHECK_THROWS_AS((void)point_biserial_select(labeled_dataset({{1, 2, 3}}, {0, 0, 0}), 0.1),
                    tmf::DataError);
}

TEST_CASE("selection sorts by absolute correlation") {
    // f0 strongly negative, f1 strongly positive but weaker, f2 noise
    const auto ds = labeled_dataset(
        {{9, 8, 1, 2, 9, 1}, {0, 1, 2, 3, 0.5, 2.5}, {5, 1, 4, 2, 3, 3.3}}, {0, 0, 1, 1, 0, 1});
    const auto report = point_biserial_select(ds, 0.1);
    REQUIRE(report.selected.size() >= 2);
    CHECK(report.selected[0] == "f0");
    CHECK(std::abs(report.correlation_of("f0")) >= std::abs(report.correlation_of("f1")));
    for (const auto& name : report.selected) {
        CHECK(std::abs(report.correlation_of(name)) >= 0.1);
    }
    CHECK(std::abs(report.correlations[0].second) <= 1.0);
}

TEST_CASE("raising the threshold never adds features") {
    tmf::Rng rng(5);
    std::vector<std::vector<double>> cols(6, std::vector<double>(30));
    std::vector<int> labels(30);
    for (int r = 0; r < 30; ++r) labels[r] = static_cast<int>(rng.uniform_below(2));
    for (auto& col : cols)
        for (int r = 0; r < 30; ++r) col[r] = rng.normal() + labels[r] * rng.uniform01();
    const auto ds = labeled_dataset(cols, labels);
    const auto loose = point_biserial_select(ds, 0.05).selected;
    const auto tight = point_biserial_select(ds, 0.3).selected;
    for (const auto& name : tight) {
        CHECK(std::find(loose.begin(), loose.end(), name) != loose.end());
    }
}

TEST_CASE("variance-dropped features stay out of the report") {
    const auto ds = labeled_dataset({{1, 1, 1, 1}, {0, 1, 2, 3}}, {0, 0, 1, 1});
    const auto dropped = low_variance_filter(ds, 1e-12);
    const auto report = point_biserial_select(ds, 0.1, dropped);
    CHECK(report.variance_dropped == dropped);
    for (const auto& [name, r] : report.correlations) CHECK(name != "f0");
    for (const auto& name : report.selected) CHECK(name != "f0");
}

TEST_CASE("zero-variance survivor correlates to zero with a warning") {
    testsup::WarnCapture warnings;
    const auto ds = labeled_dataset({{3, 3, 3, 3}}, {0, 0, 1, 1});
    const auto report = point_biserial_select(ds, 0.0);
    CHECK(report.correlations[0].second == 0.0);
    CHECK(warnings.any_contains("f0"));
}

TEST_CASE("selection catalog pads to the requested size") {
    // only f0 passes 0.5; padding must pull the next-best by |r|
    const auto ds = labeled_dataset(
        {{0, 0, 0, 1, 1, 1}, {0.1, 0.4, 0.2, 0.9, 0.6, 0.4}, {5, 1, 4, 2, 3, 3.1}},
        {0, 0, 0, 1, 1, 1});
    const auto report = point_biserial_select(ds, 0.9);
    REQUIRE(report.selected.size() < 3);
    const auto catalog = selection_catalog(report, 3);
    CHECK(catalog.size() == 3);
    const std::set<std::string> uniq(catalog.begin(), catalog.end());
    CHECK(uniq.size() == 3);

    testsup::WarnCapture warnings;
    const auto too_many = selection_catalog(report, 10);
    CHECK(too_many.size() == 3); // only 3 columns exist
    CHECK_FALSE(warnings.messages().empty());
}

TEST_CASE("feature csv round-trips") {
    testsup::TempDir dir;
    auto ds = labeled_dataset({{1.5, -2.25, 1.0 / 3.0}, {4, 5, 6}}, {0, 1, 0});
    ds.labels[2] = -1; // unlabeled row
    const auto path = dir.file("features.csv");
    write_feature_csv(ds, path);

    const auto back = read_feature_csv(path);
    CHECK(back.feature_names == ds.feature_names);
    CHECK(back.rows == ds.rows);
    CHECK(back.labels == ds.labels);
    CHECK(back.trip_ids == ds.trip_ids);
    CHECK(back.driver_ids == ds.driver_ids);

    const auto text = testsup::read_file(path);
    CHECK(text.rfind("trip_id,driver_id,label,f0,f1", 0) == 0);
}

TEST_CASE("feature csv rejects malformed input") {
    testsup::TempDir dir;
    const auto path = dir.file("bad.csv");
    testsup::write_file(path, "trip_id,driver_id,label,f0\nt,d,male,not_a_number\n");
    CHECK_THROWS_AS((void)read_feature_csv(path), tmf::DataError);
    testsup::write_file(path, "wrong,header\n");
    CHECK_THROWS_AS((void)read_feature_csv(path), tmf::DataError);
    testsup::write_file(path, "trip_id,driver_id,label,f0\n");
    CHECK_THROWS_AS((void)read_feature_csv(path), tmf::DataError);
    CHECK_THROWS_AS((void)read_feature_csv(dir.file("missing.csv")), tmf::DataError);
}

TEST_CASE("selection csv lists selected features with correlations") {
    testsup::TempDir dir;
    const auto ds = labeled_dataset({{0, 0, 1, 1}, {1, 0, 1, 0}}, {0, 0, 1, 1});
    const auto report = point_biserial_select(ds, 0.1);
    const auto path = dir.file("selection.csv");
    write_selection_csv(report, path);
    const auto text = testsup::read_file(path);
    CHECK(text.rfind("feature,correlation", 0) == 0);
    CHECK(text.find("f0,1") != std::string::npos);
}

TEST_CASE("to_dataset carries identity and label") {
    FeatureConfig cfg;
    RawWindow w = window_with({1, 2, 3, 4});
    w.start_t = 7.0;
    auto fw = compute_window_features(w, cfg);
    fw.label = BinaryLabel::class1;
    const auto ds = to_dataset({fw});
    REQUIRE(ds.n_rows() == 1);
    CHECK(ds.feature_names == full_feature_catalog());
    CHECK(ds.labels[0] == 1);
    CHECK(ds.trip_ids[0] == "t");
    CHECK(ds.window_starts[0] == 7.0);
}

} // TEST_SUITE("features")
