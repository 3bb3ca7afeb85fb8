#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "telemafuse/dataset.hpp"
#include "telemafuse/types.hpp"

namespace tmf::forest {

struct ForestHyperparams {
    int n_trees = 100;
    int max_depth = 0; // 0 = unbounded
    int min_samples_split = 2;
    int split_features = 0; // 0 = ceil(sqrt(feature count))
    std::uint64_t seed = 0;

    friend bool operator==(const ForestHyperparams&, const ForestHyperparams&) = default;
};

// Internal nodes hold a feature/threshold pair; leaves hold an offset into
// the tree's flat class-frequency pool and feature = -1.
struct TreeNode {
    std::int32_t feature = -1;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t dist_offset = -1;
    double threshold = 0.0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    std::vector<double> leaf_dists; // kNumClasses entries per leaf

    std::span<const double> leaf_dist(const TreeNode& node) const;
    std::span<const double> predict_dist(std::span<const double> x) const;
};

struct ForestModel {
    ForestHyperparams hyper;
    std::vector<std::string> feature_names;
    std::vector<DecisionTree> trees;
    double oob_accuracy = 0.0;
    std::uint64_t seed = 0;
};

// Trains on dataset.rows projected beforehand to the subset this forest
// should consume; dataset.feature_names become model.feature_names. Trees
// use per-tree seeds hyper.seed + tree_index so results are identical for
// any worker-thread count.
ForestModel train_forest(const Dataset& dataset, const ForestHyperparams& hyper,
                         int n_threads = 1);

// x must be ordered as model.feature_names. Mean of reached leaf
// distributions; sums to 1 within 1e-9.
std::vector<double> predict_proba(const ForestModel& model, std::span<const double> x);

// Argmax of predict_proba, ties to class0.
BinaryLabel predict_label(const ForestModel& model, std::span<const double> x);

BinaryLabel argmax_label(std::span<const double> proba);

// Structural digest over every node, threshold, leaf distribution, and the
// metadata; equal digests mean behaviorally identical models.
std::string forest_digest(const ForestModel& model);

} // namespace tmf::forest
