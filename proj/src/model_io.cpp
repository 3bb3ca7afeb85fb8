#include "telemafuse/model_io.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "telemafuse/errors.hpp"
#include "telemafuse/evaluation.hpp"
#include "telemafuse/util.hpp"

namespace tmf::app {

namespace {

using nlohmann::json;

json encode_double(double v) { return format_double(v); }

double decode_double(const json& j, const char* what) {
    if (!j.is_string()) throw DataError(std::string("model artifact: ") + what + " is not a string");
    double out = 0;
    if (!try_parse_double(j.get_ref<const std::string&>(), out)) {
        throw DataError(std::string("model artifact: cannot parse ") + what + " value '" +
                        j.get_ref<const std::string&>() + "'");
    }
    return out;
}

json encode_forest(const forest::ForestModel& model) {
    json hyper;
    hyper["n_trees"] = model.hyper.n_trees;
    hyper["max_depth"] = model.hyper.max_depth;
    hyper["min_samples_split"] = model.hyper.min_samples_split;
    hyper["split_features"] = model.hyper.split_features;

    json trees = json::array();
    for (const auto& tree : model.trees) {
        json nodes = json::array();
        for (const auto& node : tree.nodes) {
            nodes.push_back(json::array({node.feature, node.left, node.right, node.dist_offset,
                                         encode_double(node.threshold)}));
        }
        json dists = json::array();
        for (double d : tree.leaf_dists) dists.push_back(encode_double(d));
        trees.push_back(json{{"nodes", std::move(nodes)}, {"leaf_dists", std::move(dists)}});
    }

    json out;
    out["hyper"] = std::move(hyper);
    out["seed"] = format_u64(model.seed);
    out["oob_accuracy"] = encode_double(model.oob_accuracy);
    out["features"] = model.feature_names;
    out["trees"] = std::move(trees);
    return out;
}

forest::ForestModel decode_forest(const json& j) {
    forest::ForestModel model;
    const auto& hyper = j.at("hyper");
    model.hyper.n_trees = hyper.at("n_trees").get<int>();
    model.hyper.max_depth = hyper.at("max_depth").get<int>();
    model.hyper.min_samples_split = hyper.at("min_samples_split").get<int>();
    model.hyper.split_features = hyper.at("split_features").get<int>();
    if (!try_parse_u64(j.at("seed").get_ref<const std::string&>(), model.seed)) {
        throw DataError("model artifact: bad forest seed");
    }
    model.hyper.seed = model.seed;
    model.oob_accuracy = decode_double(j.at("oob_accuracy"), "oob_accuracy");
    model.feature_names = j.at("features").get<std::vector<std::string>>();

    for (const auto& jt : j.at("trees")) {
        forest::DecisionTree tree;
        for (const auto& jn : jt.at("nodes")) {
            if (!jn.is_array() || jn.size() != 5) {
                throw DataError("model artifact: malformed tree node");
            }
            forest::TreeNode node;
            node.feature = jn[0].get<std::int32_t>();
            node.left = jn[1].get<std::int32_t>();
            node.right = jn[2].get<std::int32_t>();
            node.dist_offset = jn[3].get<std::int32_t>();
            node.threshold = decode_double(jn[4], "threshold");
            tree.nodes.push_back(node);
        }
        for (const auto& jd : jt.at("leaf_dists")) {
            tree.leaf_dists.push_back(decode_double(jd, "leaf distribution"));
        }
        for (const auto& node : tree.nodes) {
            const bool is_leaf = node.feature < 0;
            if (is_leaf) {
                if (node.dist_offset < 0 ||
                    static_cast<std::size_t>(node.dist_offset) + kNumClasses >
                        tree.leaf_dists.size()) {
                    throw DataError("model artifact: leaf distribution offset out of range");
                }
            } else {
                const auto n = static_cast<std::int32_t>(tree.nodes.size());
                if (node.left < 0 || node.left >= n || node.right < 0 || node.right >= n ||
                    static_cast<std::size_t>(node.feature) >= model.feature_names.size()) {
                    throw DataError("model artifact: tree node references out of range");
                }
            }
        }
        if (tree.nodes.empty()) throw DataError("model artifact: empty tree");
        model.trees.push_back(std::move(tree));
    }
    return model;
}

json encode_matrix(const fusion::ProbabilityMatrix& pm) {
    json rows = json::array();
    for (const auto& row : pm.rates) {
        json r = json::array();
        for (double v : row) r.push_back(encode_double(v));
        rows.push_back(std::move(r));
    }
    return rows;
}

fusion::ProbabilityMatrix decode_matrix(const json& j) {
    fusion::ProbabilityMatrix pm;
    if (!j.is_array() || j.size() != kNumClasses) {
        throw DataError("model artifact: probability matrix must have one row per class");
    }
    for (std::size_t r = 0; r < kNumClasses; ++r) {
        if (!j[r].is_array() || j[r].size() != kNumClasses) {
            throw DataError("model artifact: probability matrix row has wrong length");
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            pm.rates[r][c] = decode_double(j[r][c], "probability matrix entry");
        }
    }
    return pm;
}

} // namespace

std::string dataset_digest(const Dataset& dataset) {
    Fnv1a digest;
    for (const auto& name : dataset.feature_names) {
        digest.update(name);
        digest.update("|");
    }
    for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
        digest.update(dataset.trip_ids[i]);
        digest.update("|");
        digest.update(dataset.driver_ids[i]);
        digest.update("|");
        digest.update(format_i64(dataset.labels[i]));
        for (double v : dataset.rows[i]) {
            digest.update(",");
            digest.update(format_double(v));
        }
        digest.update("\n");
    }
    return digest.hex();
}

fusion::FuseResult predict_probe(const ModelArtifact& artifact, const std::vector<double>& row) {
    if (row.size() != artifact.catalog.size()) {
        throw DataError("probe row length does not match the artifact catalog");
    }
    Dataset probe_set;
    probe_set.feature_names = artifact.catalog;
    probe_set.rows.push_back(row);
    probe_set.labels.push_back(-1);
    probe_set.trip_ids.emplace_back("probe");
    probe_set.driver_ids.emplace_back("probe");
    probe_set.window_starts.push_back(0.0);
    const eval::EnsemblePredictor predictor(artifact.ensemble, probe_set);
    return predictor.predict_row(probe_set, 0);
}

void save_model(const ModelArtifact& artifact, const std::string& path) {
    json doc;
    doc["format_version"] = artifact.format_version;
    doc["config"] = artifact.config_text;
    doc["catalog"] = artifact.catalog;

    json models = json::array();
    for (const auto& model : artifact.ensemble.models) models.push_back(encode_forest(model));
    doc["models"] = std::move(models);

    json matrices = json::array();
    for (const auto& pm : artifact.ensemble.prob_matrices) matrices.push_back(encode_matrix(pm));
    doc["prob_matrices"] = std::move(matrices);

    doc["fusion"] = json{{"w1", encode_double(artifact.ensemble.params.w1)},
                         {"w2", encode_double(artifact.ensemble.params.w2)},
                         {"epsilon", encode_double(artifact.ensemble.params.epsilon)}};
    doc["provenance"] =
        json{{"seed", format_u64(artifact.seed)}, {"dataset_digest", artifact.dataset_digest}};

    json probe_values = json::array();
    for (double v : artifact.probe.values) probe_values.push_back(encode_double(v));
    doc["probe"] = json{{"values", std::move(probe_values)},
                        {"label", std::string(label_name(artifact.probe.label))},
                        {"score", encode_double(artifact.probe.score)},
                        {"c0", encode_double(artifact.probe.c0)},
                        {"c1", encode_double(artifact.probe.c1)}};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << doc.dump(1, '\t') << '\n';
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

ModelArtifact load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("model artifact " + path + " is not valid JSON: " + e.what());
    }

    ModelArtifact artifact;
    try {
        artifact.format_version = doc.at("format_version").get<int>();
        if (artifact.format_version != 1) {
            throw DataError("model artifact: unsupported format_version " +
                            std::to_string(artifact.format_version));
        }
        artifact.config_text = doc.at("config").get<std::string>();
        artifact.catalog = doc.at("catalog").get<std::vector<std::string>>();
        for (const auto& jm : doc.at("models")) {
            artifact.ensemble.models.push_back(decode_forest(jm));
        }
        for (const auto& jm : doc.at("prob_matrices")) {
            artifact.ensemble.prob_matrices.push_back(decode_matrix(jm));
        }
        artifact.ensemble.params.w1 = decode_double(doc.at("fusion").at("w1"), "w1");
        artifact.ensemble.params.w2 = decode_double(doc.at("fusion").at("w2"), "w2");
        artifact.ensemble.params.epsilon = decode_double(doc.at("fusion").at("epsilon"), "epsilon");
        if (!try_parse_u64(doc.at("provenance").at("seed").get_ref<const std::string&>(),
                           artifact.seed)) {
            throw DataError("model artifact: bad provenance seed");
        }
        artifact.dataset_digest = doc.at("provenance").at("dataset_digest").get<std::string>();

        const auto& jp = doc.at("probe");
        for (const auto& jv : jp.at("values")) {
            artifact.probe.values.push_back(decode_double(jv, "probe value"));
        }
        bool ok = false;
        const auto label = parse_label_name(jp.at("label").get_ref<const std::string&>(), ok);
        if (!ok || !label) throw DataError("model artifact: bad probe label");
        artifact.probe.label = *label;
        artifact.probe.score = decode_double(jp.at("score"), "probe score");
        artifact.probe.c0 = decode_double(jp.at("c0"), "probe c0");
        artifact.probe.c1 = decode_double(jp.at("c1"), "probe c1");
    } catch (const json::exception& e) {
        throw DataError("model artifact " + path + " is malformed: " + e.what());
    }

    if (artifact.ensemble.models.size() != artifact.ensemble.prob_matrices.size() ||
        artifact.ensemble.models.size() < 2) {
        throw DataError("model artifact: expected matching model and matrix lists (>= 2 entries)");
    }
    for (const auto& model : artifact.ensemble.models) {
        for (const auto& name : model.feature_names) {
            if (std::find(artifact.catalog.begin(), artifact.catalog.end(), name) ==
                artifact.catalog.end()) {
                throw DataError("model artifact: model consumes feature '" + name +
                                "' missing from the catalog");
            }
        }
    }

    // The stored probe prediction must reproduce bit-for-bit, otherwise the
    // artifact does not describe this build's arithmetic.
    const auto result = predict_probe(artifact, artifact.probe.values);
    const bool same = result.label == artifact.probe.label &&
                      format_double(result.score) == format_double(artifact.probe.score) &&
                      format_double(result.integrals[0]) == format_double(artifact.probe.c0) &&
                      format_double(result.integrals[1]) == format_double(artifact.probe.c1);
    if (!same) {
        throw NumericError("model artifact probe mismatch: stored prediction does not reproduce");
    }
    return artifact;
}

} // namespace tmf::app
