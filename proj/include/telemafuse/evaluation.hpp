#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "telemafuse/choquet_fusion.hpp"
#include "telemafuse/dataset.hpp"
#include "telemafuse/feature_extraction.hpp"
#include "telemafuse/random_forest.hpp"
#include "telemafuse/types.hpp"
#include "telemafuse/vertical_bagging.hpp"

namespace tmf::eval {

// Salts mixed with the master seed so each stochastic stage gets an
// independent deterministic stream.
inline constexpr std::uint64_t kFoldSalt = 0xF01D;
inline constexpr std::uint64_t kBaggingSalt = 0xBA66;
inline constexpr std::uint64_t kBaselineSalt = 0xBA5E;

enum class SplitMode { by_driver, by_window };
enum class SelectionMode { per_fold, global };

struct FoldPlan {
    int k = 5;
    SplitMode mode = SplitMode::by_driver;
    std::uint64_t seed = 0;
    std::vector<int> row_folds;              // one entry per dataset row
    std::map<std::string, int> driver_folds; // populated in by-driver mode
};

// by-driver: sorted distinct drivers shuffled then dealt round-robin (all of
// a driver's windows share a fold); by-window: rows shuffled and dealt.
FoldPlan make_folds(const Dataset& dataset, int k, SplitMode mode, std::uint64_t seed);

double accuracy_score(std::span<const BinaryLabel> truth, std::span<const BinaryLabel> predicted);

// Mann-Whitney AUC via rank sums with average ranks on ties.
double auc_score(std::span<const BinaryLabel> truth, std::span<const double> scores);

struct ExperimentSpec {
    int folds = 5;
    SplitMode split = SplitMode::by_driver;
    SelectionMode selection = SelectionMode::per_fold;
    double variance_threshold = 1e-12;
    double correlation_threshold = 0.1;
    forest::ForestHyperparams forest;
    bagging::BaggingConfig bagging;
    fusion::FusionParams fusion;
    std::uint64_t seed = 42;
    int threads = 1;
};

// Selection, vertical bagging, top-3 pick, and probability matrices on one
// training set. When preselected is non-null the selection stage is skipped
// and the given catalog is used (global-selection fidelity mode).
struct TrainedPipeline {
    features::SelectionReport selection;
    std::vector<std::string> selected;
    std::vector<bagging::RankedCandidate> top;
    fusion::FusionEnsemble ensemble;
};

TrainedPipeline train_pipeline(const Dataset& train, const ExperimentSpec& spec,
                               std::uint64_t bagging_seed,
                               const std::vector<std::string>* preselected = nullptr);

std::string digest_pipeline(const TrainedPipeline& pipeline);

// Per-model column gather prepared against a dataset's feature layout, so
// per-row prediction avoids name lookups.
class EnsemblePredictor {
public:
    EnsemblePredictor(const fusion::FusionEnsemble& ensemble, const Dataset& dataset);

    fusion::FuseResult predict_row(const Dataset& dataset, std::size_t row) const;
    std::vector<double> model_proba(std::size_t model_index, const Dataset& dataset,
                                    std::size_t row) const;

private:
    const fusion::FusionEnsemble* ensemble_;
    std::vector<std::vector<std::size_t>> cols_;
};

struct ModelScores {
    std::string name;
    std::vector<double> fold_accuracy;
    std::vector<double> fold_auc; // NaN where a fold's truth had one class
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_auc = 0.0;
    double std_auc = 0.0;
};

struct MetricsReport {
    int k = 0;
    std::vector<ModelScores> models;       // fused, forest_1..3, baseline
    std::vector<std::string> fold_digests; // trained-state digest per fold

    const ModelScores& model(std::string_view name) const;
};

MetricsReport run_experiment(const Dataset& dataset, const ExperimentSpec& spec);

void write_metrics_csv(const MetricsReport& report, const std::string& path);
std::string format_metrics_table(const MetricsReport& report);

} // namespace tmf::eval
