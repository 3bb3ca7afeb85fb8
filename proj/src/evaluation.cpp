#include "telemafuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "telemafuse/errors.hpp"
#include "telemafuse/rng.hpp"
#include "telemafuse/util.hpp"

namespace tmf::eval {

namespace {

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

double mean_of(const std::vector<double>& values) {
    double sum = 0;
    std::size_t n = 0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        ++n;
    }
    return n == 0 ? nan_value() : sum / static_cast<double>(n);
}

double sample_std_of(const std::vector<double>& values) {
    const double mean = mean_of(values);
    if (std::isnan(mean)) return 0.0;
    double ss = 0;
    std::size_t n = 0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        const double d = v - mean;
        ss += d * d;
        ++n;
    }
    return n < 2 ? 0.0 : std::sqrt(ss / static_cast<double>(n - 1));
}

bool both_classes(std::span<const BinaryLabel> labels) {
    bool c0 = false, c1 = false;
    for (auto l : labels) (l == BinaryLabel::class0 ? c0 : c1) = true;
    return c0 && c1;
}

} // namespace

FoldPlan make_folds(const Dataset& dataset, int k, SplitMode mode, std::uint64_t seed) {
    if (dataset.n_rows() == 0) throw DataError("make_folds: empty dataset");
    if (k < 2) throw ConfigError("make_folds: need at least 2 folds");

    FoldPlan plan;
    plan.k = k;
    plan.mode = mode;
    plan.seed = seed;
    plan.row_folds.assign(dataset.n_rows(), 0);

    Rng rng(seed);
    if (mode == SplitMode::by_driver) {
        std::vector<std::string> drivers = dataset.driver_ids;
        std::sort(drivers.begin(), drivers.end());
        drivers.erase(std::unique(drivers.begin(), drivers.end()), drivers.end());
        if (drivers.size() < static_cast<std::size_t>(k)) {
            throw DataError("make_folds: " + std::to_string(drivers.size()) +
                            " distinct drivers cannot fill " + std::to_string(k) + " folds");
        }
        rng.shuffle(drivers);
        for (std::size_t i = 0; i < drivers.size(); ++i) {
            plan.driver_folds[drivers[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
        }
        for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
            plan.row_folds[r] = plan.driver_folds.at(dataset.driver_ids[r]);
        }
    } else {
        if (dataset.n_rows() < static_cast<std::size_t>(k)) {
            throw DataError("make_folds: " + std::to_string(dataset.n_rows()) +
                            " windows cannot fill " + std::to_string(k) + " folds");
        }
        std::vector<std::size_t> order(dataset.n_rows());
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            plan.row_folds[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
        }
    }
    return plan;
}

double accuracy_score(std::span<const BinaryLabel> truth, std::span<const BinaryLabel> predicted) {
    if (truth.empty()) throw DataError("accuracy_score: empty inputs");
    if (truth.size() != predicted.size()) {
        throw DataError("accuracy_score: length mismatch " + std::to_string(truth.size()) +
                        " vs " + std::to_string(predicted.size()));
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double auc_score(std::span<const BinaryLabel> truth, std::span<const double> scores) {
    if (truth.empty()) throw DataError("auc_score: empty inputs");
    if (truth.size() != scores.size()) throw DataError("auc_score: length mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (auto l : truth) (l == BinaryLabel::class1 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) {
        throw NumericError("auc_score: undefined with a single class present");
    }

    const std::size_t n = truth.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups, then Mann-Whitney U from the positive
    // rank sum.
    double rank_sum_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t t = i; t < j; ++t) {
            if (truth[order[t]] == BinaryLabel::class1) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                        (static_cast<double>(n_pos) + 1.0);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

TrainedPipeline train_pipeline(const Dataset& train, const ExperimentSpec& spec,
                               std::uint64_t bagging_seed,
                               const std::vector<std::string>* preselected) {
    TrainedPipeline out;
    if (preselected != nullptr) {
        out.selected = *preselected;
    } else {
        const auto dropped = features::low_variance_filter(train, spec.variance_threshold);
        out.selection =
            features::point_biserial_select(train, spec.correlation_threshold, dropped);
        out.selected = features::selection_catalog(
            out.selection, static_cast<std::size_t>(spec.bagging.max_features));
    }

    bagging::BaggingConfig cfg = spec.bagging;
    cfg.seed = bagging_seed;
    const auto subsets = bagging::sample_subsets(out.selected, cfg);
    auto candidates =
        bagging::train_candidates(train, subsets, spec.forest, cfg, spec.threads);
    out.top = bagging::select_top(std::move(candidates), 3);

    out.ensemble.params = spec.fusion;
    out.ensemble.params.validate();
    for (const auto& cand : out.top) {
        const Dataset projected = train.project(cand.model.feature_names);
        const auto cm = cfg.ranking == bagging::RankingMode::oob
                            ? fusion::oob_confusion_matrix(cand.model, projected)
                            : fusion::confusion_matrix(cand.model, projected);
        out.ensemble.models.push_back(cand.model);
        out.ensemble.prob_matrices.push_back(fusion::probability_matrix(cm));
    }
    return out;
}

std::string digest_pipeline(const TrainedPipeline& pipeline) {
    Fnv1a digest;
    for (const auto& name : pipeline.selected) {
        digest.update(name);
        digest.update("|");
    }
    for (const auto& cand : pipeline.top) {
        digest.update(format_u64(cand.index));
        digest.update(format_double(cand.score));
    }
    for (const auto& model : pipeline.ensemble.models) {
        digest.update(forest::forest_digest(model));
    }
    for (const auto& pm : pipeline.ensemble.prob_matrices) {
        for (const auto& row : pm.rates) {
            for (double v : row) digest.update(format_double(v));
        }
    }
    digest.update(format_double(pipeline.ensemble.params.w1));
    digest.update(format_double(pipeline.ensemble.params.w2));
    digest.update(format_double(pipeline.ensemble.params.epsilon));
    return digest.hex();
}

EnsemblePredictor::EnsemblePredictor(const fusion::FusionEnsemble& ensemble,
                                     const Dataset& dataset)
    : ensemble_(&ensemble) {
    cols_.reserve(ensemble.models.size());
    for (const auto& model : ensemble.models) {
        std::vector<std::size_t> cols;
        cols.reserve(model.feature_names.size());
        for (const auto& name : model.feature_names) cols.push_back(dataset.col_index(name));
        cols_.push_back(std::move(cols));
    }
}

std::vector<double> EnsemblePredictor::model_proba(std::size_t model_index, const Dataset& dataset,
                                                   std::size_t row) const {
    const auto& cols = cols_[model_index];
    std::vector<double> x(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) x[i] = dataset.rows[row][cols[i]];
    return forest::predict_proba(ensemble_->models[model_index], x);
}

fusion::FuseResult EnsemblePredictor::predict_row(const Dataset& dataset, std::size_t row) const {
    std::vector<std::vector<double>> probs;
    probs.reserve(ensemble_->models.size());
    for (std::size_t m = 0; m < ensemble_->models.size(); ++m) {
        probs.push_back(model_proba(m, dataset, row));
    }
    return fusion::fuse_predict(*ensemble_, probs);
}

const ModelScores& MetricsReport::model(std::string_view name) const {
    for (const auto& m : models) {
        if (m.name == name) return m;
    }
    throw DataError("metrics report has no model named " + std::string(name));
}

MetricsReport run_experiment(const Dataset& input, const ExperimentSpec& spec) {
    if (input.n_rows() == 0) throw DataError("run_experiment: empty dataset");
    if (!input.all_labeled()) throw DataError("run_experiment: dataset has unlabeled rows");

    Dataset dataset = input;
    dataset.canonicalize();

    const FoldPlan plan =
        make_folds(dataset, spec.folds, spec.split, mix_seed(spec.seed, kFoldSalt));

    const std::vector<std::string>* preselected = nullptr;
    std::vector<std::string> global_catalog;
    if (spec.selection == SelectionMode::global) {
        const auto dropped = features::low_variance_filter(dataset, spec.variance_threshold);
        const auto report =
            features::point_biserial_select(dataset, spec.correlation_threshold, dropped);
        global_catalog = features::selection_catalog(
            report, static_cast<std::size_t>(spec.bagging.max_features));
        preselected = &global_catalog;
    }

    static constexpr std::array<std::string_view, 5> kModelNames = {
        "fused", "forest_1", "forest_2", "forest_3", "baseline"};

    MetricsReport report;
    report.k = spec.folds;
    for (auto name : kModelNames) {
        ModelScores scores;
        scores.name = std::string(name);
        report.models.push_back(std::move(scores));
    }

    for (int fold = 0; fold < spec.folds; ++fold) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
            (plan.row_folds[r] == fold ? test_rows : train_rows).push_back(r);
        }
        if (train_rows.empty() || test_rows.empty()) {
            throw DataError("run_experiment: fold " + std::to_string(fold) + " is empty");
        }
        const Dataset train = dataset.select_rows(train_rows);
        const Dataset test = dataset.select_rows(test_rows);
        if (!train.has_both_classes()) {
            throw DataError("run_experiment: fold " + std::to_string(fold) +
                            " training split holds a single class");
        }

        const TrainedPipeline trained = train_pipeline(
            train, spec, mix_seed(spec.seed, kBaggingSalt, static_cast<std::uint64_t>(fold)),
            preselected);

        forest::ForestHyperparams baseline_hp = spec.forest;
        baseline_hp.seed = mix_seed(spec.seed, kBaselineSalt, static_cast<std::uint64_t>(fold));
        const Dataset baseline_train = train.project(trained.selected);
        const forest::ForestModel baseline = forest::train_forest(baseline_train, baseline_hp,
                                                                  spec.threads);

        {
            Fnv1a digest;
            digest.update(digest_pipeline(trained));
            digest.update(forest::forest_digest(baseline));
            report.fold_digests.push_back(digest.hex());
        }

        std::vector<BinaryLabel> truth;
        truth.reserve(test.n_rows());
        for (auto l : test.labels) truth.push_back(static_cast<BinaryLabel>(l));

        // model predictions: fused + the three forests + baseline
        const EnsemblePredictor predictor(trained.ensemble, test);
        const Dataset baseline_test = test.project(trained.selected);
        std::array<std::vector<BinaryLabel>, 5> predicted;
        std::array<std::vector<double>, 5> scored;
        for (auto& p : predicted) p.reserve(test.n_rows());
        for (auto& s : scored) s.reserve(test.n_rows());
        for (std::size_t r = 0; r < test.n_rows(); ++r) {
            const auto fused = predictor.predict_row(test, r);
            predicted[0].push_back(fused.label);
            scored[0].push_back(fused.score);
            for (std::size_t m = 0; m < 3; ++m) {
                const auto proba = predictor.model_proba(m, test, r);
                predicted[m + 1].push_back(forest::argmax_label(proba));
                scored[m + 1].push_back(proba[1]);
            }
            const auto proba = forest::predict_proba(baseline, baseline_test.rows[r]);
            predicted[4].push_back(forest::argmax_label(proba));
            scored[4].push_back(proba[1]);
        }

        const bool auc_defined = both_classes(truth);
        if (!auc_defined) {
            warn("run_experiment: fold " + std::to_string(fold) +
                 " test split holds a single class, AUC recorded as nan");
        }
        for (std::size_t m = 0; m < kModelNames.size(); ++m) {
            report.models[m].fold_accuracy.push_back(accuracy_score(truth, predicted[m]));
            report.models[m].fold_auc.push_back(auc_defined ? auc_score(truth, scored[m])
                                                            : nan_value());
        }
    }

    for (auto& model : report.models) {
        model.mean_accuracy = mean_of(model.fold_accuracy);
        model.std_accuracy = sample_std_of(model.fold_accuracy);
        model.mean_auc = mean_of(model.fold_auc);
        model.std_auc = sample_std_of(model.fold_auc);
    }
    return report;
}

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "model,fold,accuracy,auc\n";
    for (const auto& model : report.models) {
        for (std::size_t f = 0; f < model.fold_accuracy.size(); ++f) {
            out << model.name << ',' << f << ',' << format_double(model.fold_accuracy[f]) << ','
                << format_double(model.fold_auc[f]) << '\n';
        }
        out << model.name << ",mean," << format_double(model.mean_accuracy) << ','
            << format_double(model.mean_auc) << '\n';
        out << model.name << ",std," << format_double(model.std_accuracy) << ','
            << format_double(model.std_auc) << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

std::string format_metrics_table(const MetricsReport& report) {
    std::string text = "model      accuracy            auc\n";
    char line[128];
    for (const auto& model : report.models) {
        std::snprintf(line, sizeof(line), "%-10s %.4f +/- %.4f  %.4f +/- %.4f\n",
                      model.name.c_str(), model.mean_accuracy, model.std_accuracy, model.mean_auc,
                      model.std_auc);
        text += line;
    }
    return text;
}

} // namespace tmf::eval
