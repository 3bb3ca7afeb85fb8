#include "telemafuse/app.hpp"

#include <fstream>

#include "telemafuse/errors.hpp"
#include "telemafuse/feature_extraction.hpp"
#include "telemafuse/model_io.hpp"
#include "telemafuse/synth.hpp"
#include "telemafuse/telemetry_ingest.hpp"
#include "telemafuse/util.hpp"

namespace tmf::app {

namespace {

std::string first_line_of(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file: " + path);
    std::string line;
    std::getline(in, line);
    return strip_cr(std::move(line));
}

} // namespace

void cmd_synth(const PipelineConfig& cfg, const std::string& out_path) {
    cfg.validate();
    const auto trips = generate_trips(cfg.synth, cfg.seed);
    ingest::write_trip_csv(trips, out_path);
}

Dataset extract_features(const PipelineConfig& cfg, const std::vector<TripStream>& trips) {
    cfg.validate();
    std::vector<features::FeatureWindow> windows;
    for (const auto& trip : trips) {
        const auto report = ingest::validate_stream(trip);
        if (!report.ok()) {
            const auto& v = report.violations.front();
            throw DataError("trip " + trip.trip_id + " sample " + std::to_string(v.sample_index) +
                            ": " + v.message);
        }
        const TripStream at_1hz = trip.rate_hz == 1 ? trip : ingest::downsample_to_1hz(trip);
        for (const auto& raw : features::segment_windows(at_1hz, cfg.window)) {
            windows.push_back(features::compute_window_features(raw, cfg.features));
        }
    }
    if (windows.empty()) {
        throw DataError("no windows survived segmentation; trips may be shorter than the window");
    }
    return features::to_dataset(windows);
}

void cmd_extract(const PipelineConfig& cfg, const std::string& in_path,
                 const std::string& out_path, const std::string& selection_out) {
    const auto trips = ingest::parse_trip_csv(in_path);
    const Dataset dataset = extract_features(cfg, trips);
    features::write_feature_csv(dataset, out_path);

    const bool want_selection =
        !selection_out.empty() || cfg.selection == eval::SelectionMode::global;
    if (want_selection) {
        const auto dropped = features::low_variance_filter(dataset, cfg.variance_threshold);
        const auto report =
            features::point_biserial_select(dataset, cfg.correlation_threshold, dropped);
        const std::string path = selection_out.empty() ? out_path + ".selection" : selection_out;
        features::write_selection_csv(report, path);
    }
}

void cmd_train(const PipelineConfig& cfg, const std::string& features_path,
               const std::string& model_path) {
    cfg.validate();
    Dataset dataset = features::read_feature_csv(features_path);
    if (!dataset.all_labeled()) {
        throw DataError("training features contain unlabeled rows ('?' labels)");
    }
    dataset.canonicalize();

    const auto spec = cfg.experiment();
    const auto trained =
        train_pipeline(dataset, spec, mix_seed(cfg.seed, eval::kBaggingSalt), nullptr);

    ModelArtifact artifact;
    artifact.config_text = serialize_config(cfg);
    artifact.catalog = trained.selected;
    artifact.ensemble = trained.ensemble;
    artifact.seed = cfg.seed;
    artifact.dataset_digest = dataset_digest(dataset);

    const Dataset probe_view = dataset.project(artifact.catalog);
    artifact.probe.values = probe_view.rows.front();
    const auto probe_result = predict_probe(artifact, artifact.probe.values);
    artifact.probe.label = probe_result.label;
    artifact.probe.score = probe_result.score;
    artifact.probe.c0 = probe_result.integrals[0];
    artifact.probe.c1 = probe_result.integrals[1];

    save_model(artifact, model_path);
}

void cmd_predict(const std::string& model_path, const std::string& features_path,
                 const std::string& out_path) {
    const ModelArtifact artifact = load_model(model_path);
    const Dataset dataset = features::read_feature_csv(features_path);
    const eval::EnsemblePredictor predictor(artifact.ensemble, dataset);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + out_path);
    out << "trip_id,driver_id,fused_label,score,c0,c1";
    for (std::size_t m = 0; m < artifact.ensemble.models.size(); ++m) {
        out << ",forest_" << (m + 1);
    }
    out << '\n';
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        const auto result = predictor.predict_row(dataset, r);
        out << dataset.trip_ids[r] << ',' << dataset.driver_ids[r] << ','
            << label_name(result.label) << ',' << format_double(result.score) << ','
            << format_double(result.integrals[0]) << ',' << format_double(result.integrals[1]);
        for (auto vote : result.votes) out << ',' << label_name(vote);
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed: " + out_path);
}

eval::MetricsReport cmd_evaluate(const PipelineConfig& cfg, const std::string& in_path,
                                 const std::string& report_prefix) {
    cfg.validate();
    const std::string header = first_line_of(in_path);

    Dataset dataset;
    if (header == ingest::kTripCsvHeader) {
        const auto trips = ingest::parse_trip_csv(in_path);
        dataset = extract_features(cfg, trips);
    } else if (header.starts_with("trip_id,driver_id,label")) {
        dataset = features::read_feature_csv(in_path);
    } else {
        throw DataError("unrecognized input header in " + in_path +
                        ": expected a trip CSV or a feature CSV");
    }
    if (!dataset.all_labeled()) {
        throw DataError("evaluation input contains unlabeled rows ('?' labels)");
    }

    const auto report = eval::run_experiment(dataset, cfg.experiment());
    eval::write_metrics_csv(report, report_prefix + ".csv");

    const std::string table = eval::format_metrics_table(report);
    std::ofstream txt(report_prefix + ".txt", std::ios::binary);
    if (!txt) throw IoError("cannot open for writing: " + report_prefix + ".txt");
    txt << table;
    txt.flush();
    if (!txt) throw IoError("write failed: " + report_prefix + ".txt");
    return report;
}

} // namespace tmf::app
