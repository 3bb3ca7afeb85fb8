#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "telemafuse/app.hpp"
#include "telemafuse/config.hpp"
#include "telemafuse/dataset.hpp"
#include "telemafuse/errors.hpp"
#include "telemafuse/feature_extraction.hpp"
#include "telemafuse/model_io.hpp"
#include "telemafuse/rng.hpp"
#include "telemafuse/util.hpp"

#include "test_support.hpp"

using namespace tmf;

namespace {

// Eight-feature two-Gaussian dataset; even features carry the class signal.
Dataset wide_gaussian(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.feature_names = {"f0", "f1", "f2", "f3", "f4", "f5", "f6", "f7"};
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        std::vector<double> row(8);
        for (auto& v : row) v = rng.normal();
        if (label == 1) {
            for (std::size_t f = 0; f < row.size(); f += 2) row[f] += 1.5;
        }
        d.rows.push_back(std::move(row));
        d.labels.push_back(label);
        char trip[16];
        std::snprintf(trip, sizeof(trip), "t%04zu", i);
        char driver[16];
        std::snprintf(driver, sizeof(driver), "d%04zu", i);
        d.trip_ids.emplace_back(trip);
        d.driver_ids.emplace_back(driver);
        d.window_starts.push_back(static_cast<double>(i) * 64.0);
    }
    return d;
}

app::PipelineConfig train_config() {
    app::PipelineConfig cfg;
    cfg.seed = 11;
    cfg.forest.n_trees = 12;
    cfg.bagging.max_features = 3;
    cfg.bagging.max_iterations = 6;
    return cfg;
}

struct Fixture {
    testsup::TempDir dir;
    std::string features_path = dir.file("features.csv");
    std::string model_path = dir.file("model.json");
    app::PipelineConfig cfg = train_config();

    Fixture() {
        features::write_feature_csv(wide_gaussian(120, 5), features_path);
        app::cmd_train(cfg, features_path, model_path);
    }
};

nlohmann::json load_json(const std::string& path) {
    return nlohmann::json::parse(testsup::read_file(path));
}

void dump_json(const nlohmann::json& doc, const std::string& path) {
    testsup::write_file(path, doc.dump(1, '\t') + "\n");
}

} // namespace

TEST_SUITE("model_io") {

TEST_CASE("save/load round trip is byte stable") {
    const Fixture fx;
    const auto artifact = app::load_model(fx.model_path);

    CHECK(artifact.format_version == 1);
    CHECK(artifact.seed == 11);
    CHECK(artifact.ensemble.models.size() == 3);
    CHECK(artifact.ensemble.prob_matrices.size() == 3);
    CHECK(artifact.catalog.size() >= 3);
    CHECK(artifact.config_text == app::serialize_config(fx.cfg));

    const std::string copy_path = fx.dir.path() + "/model_copy.json";
    app::save_model(artifact, copy_path);
    CHECK(testsup::read_file(copy_path) == testsup::read_file(fx.model_path));
}

TEST_CASE("stored digest matches the canonicalized training set") {
    const Fixture fx;
    const auto artifact = app::load_model(fx.model_path);
    Dataset dataset = features::read_feature_csv(fx.features_path);
    dataset.canonicalize();
    CHECK(artifact.dataset_digest == app::dataset_digest(dataset));
}

TEST_CASE("probe prediction reproduces exactly") {
    const Fixture fx;
    const auto artifact = app::load_model(fx.model_path);
    const auto result = app::predict_probe(artifact, artifact.probe.values);
    CHECK(result.label == artifact.probe.label);
    CHECK(format_double(result.score) == format_double(artifact.probe.score));
    CHECK(format_double(result.integrals[0]) == format_double(artifact.probe.c0));
    CHECK(format_double(result.integrals[1]) == format_double(artifact.probe.c1));

    std::vector<double> short_row(artifact.catalog.size() - 1, 0.0);
    CHECK_THROWS_AS(app::predict_probe(artifact, short_row), DataError);
}

TEST_CASE("tampered probe fields fail the reproduction check") {
    const Fixture fx;
    const std::string tampered = fx.dir.path() + "/tampered.json";

    auto doc = load_json(fx.model_path);
    doc["probe"]["score"] = "0.123456789";
    dump_json(doc, tampered);
    CHECK_THROWS_AS(app::load_model(tampered), NumericError);

    doc = load_json(fx.model_path);
    const std::string label = doc["probe"]["label"].get<std::string>();
    doc["probe"]["label"] = (label == "male") ? "female" : "male";
    dump_json(doc, tampered);
    CHECK_THROWS_AS(app::load_model(tampered), NumericError);

    // Perturbing a leaf distribution changes the arithmetic the probe pins.
    doc = load_json(fx.model_path);
    auto& dists = doc["models"][0]["trees"][0]["leaf_dists"];
    for (auto& entry : dists) entry = "0.5";
    dump_json(doc, tampered);
    CHECK_THROWS_AS(app::load_model(tampered), NumericError);
}

TEST_CASE("structural corruption is rejected as DataError") {
    const Fixture fx;
    const std::string tampered = fx.dir.path() + "/tampered.json";

    auto doc = load_json(fx.model_path);
    doc["models"][0]["trees"][0]["nodes"][0][1] = 100000;
    dump_json(doc, tampered);
    CHECK_THROWS_AS(app::load_model(tampered), DataError);

    doc = load_json(fx.model_path);
    doc["catalog"] = nlohmann::json::array({"bogus"});
    dump_json(doc, tampered);
    CHECK_THROWS_AS(app::load_model(tampered), DataError);

    doc = load_json(fx.model_path);
    doc.erase("models");
    dump_json(doc, tampered);
    CHECK_THROWS_AS(app::load_model(tampered), DataError);

    doc = load_json(fx.model_path);
    doc["format_version"] = 99;
    dump_json(doc, tampered);
    CHECK_THROWS_AS(app::load_model(tampered), DataError);

    doc = load_json(fx.model_path);
    doc["fusion"]["w1"] = 0.5;  // numbers must be stored as strings
    dump_json(doc, tampered);
    CHECK_THROWS_AS(app::load_model(tampered), DataError);

    testsup::write_file(tampered, "this is not json\n");
    CHECK_THROWS_AS(app::load_model(tampered), DataError);

    CHECK_THROWS_AS(app::load_model(fx.dir.path() + "/no_such.json"), DataError);
}

TEST_CASE("save_model reports unwritable destinations") {
    const Fixture fx;
    const auto artifact = app::load_model(fx.model_path);
    CHECK_THROWS_AS(app::save_model(artifact, fx.dir.path() + "/missing_dir/model.json"),
                    IoError);
}

TEST_CASE("dataset_digest tracks content") {
    Dataset d = wide_gaussian(10, 3);
    const std::string base = app::dataset_digest(d);
    CHECK(base == app::dataset_digest(d));

    Dataset flipped = d;
    flipped.labels[4] = 1 - flipped.labels[4];
    CHECK(app::dataset_digest(flipped) != base);

    Dataset moved = d;
    moved.rows[2][1] += 1e-9;
    CHECK(app::dataset_digest(moved) != base);

    Dataset renamed = d;
    renamed.feature_names[0] = "g0";
    CHECK(app::dataset_digest(renamed) != base);
}

} // TEST_SUITE
