#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "telemafuse/dataset.hpp"
#include "telemafuse/random_forest.hpp"

namespace tmf::bagging {

enum class RankingMode { oob, resubstitution };

struct BaggingConfig {
    int max_features = 10;    // F: features per subset
    int max_iterations = 100; // K: candidate count
    RankingMode ranking = RankingMode::oob;
    std::uint64_t seed = 0;

    friend bool operator==(const BaggingConfig&, const BaggingConfig&) = default;
};

struct RankedCandidate {
    std::size_t index = 0;
    std::vector<std::string> subset; // catalog order, distinct
    forest::ForestModel model;
    double score = 0.0;
};

// K subsets of F distinct catalog features from one stream seeded by
// cfg.seed. An exact duplicate of an earlier subset is re-drawn up to 100
// times, then accepted (one aggregated warning covers all acceptances).
std::vector<std::vector<std::string>> sample_subsets(const std::vector<std::string>& catalog,
                                                     const BaggingConfig& cfg);

// Candidate i trains on the dataset projected to subsets[i] with seed
// cfg.seed + i; score is oob_accuracy or training-set accuracy depending on
// cfg.ranking.
std::vector<RankedCandidate> train_candidates(const Dataset& dataset,
                                              const std::vector<std::vector<std::string>>& subsets,
                                              const forest::ForestHyperparams& hp,
                                              const BaggingConfig& cfg, int n_threads = 1);

// First `count` by score descending, ties by ascending candidate index.
std::vector<RankedCandidate> select_top(std::vector<RankedCandidate> candidates,
                                        std::size_t count = 3);

// Header: index,score,features (features joined with ';').
void write_candidates_csv(const std::vector<RankedCandidate>& candidates, const std::string& path);

} // namespace tmf::bagging
