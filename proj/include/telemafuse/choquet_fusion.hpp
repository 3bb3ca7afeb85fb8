#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "telemafuse/dataset.hpp"
#include "telemafuse/random_forest.hpp"
#include "telemafuse/types.hpp"

namespace tmf::fusion {

struct ConfusionMatrix {
    // counts[true_class][predicted_class]
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    std::uint64_t total() const;
};

struct ProbabilityMatrix {
    // Row-normalized counts; every row sums to 1 within 1e-9.
    std::array<std::array<double, kNumClasses>, kNumClasses> rates{};

    double initial_density(std::size_t cls) const { return rates[cls][cls]; }
};

struct FusionParams {
    double w1 = 0.9;
    double w2 = 0.6;
    double epsilon = 0.0001;

    void validate() const; // throws ConfigError outside the documented ranges
    friend bool operator==(const FusionParams&, const FusionParams&) = default;
};

struct FuzzyMeasure {
    std::vector<double> densities;
    double lambda = 0.0;
};

struct FusionEnsemble {
    std::vector<forest::ForestModel> models;
    std::vector<ProbabilityMatrix> prob_matrices;
    FusionParams params;

    std::size_t size() const { return models.size(); }
};

struct FuseResult {
    BinaryLabel label = BinaryLabel::class0;
    std::array<double, kNumClasses> integrals{}; // C_0, C_1
    double score = 0.5;                          // C_1 / (C_0 + C_1)
    std::vector<BinaryLabel> votes;              // per-classifier argmax labels
};

// Cell [j1][j2] counts samples of true class j1 that model labels j2.
ConfusionMatrix confusion_matrix(const forest::ForestModel& model, const Dataset& eval_set);

// Confusion over out-of-bag votes on the training set: each sample is
// labeled by the majority of trees whose bootstrap excluded it (replayed
// from the per-tree seeds), and never-out-of-bag samples are skipped. Falls
// back to plain resubstitution with a warning if nothing was ever
// out-of-bag.
ConfusionMatrix oob_confusion_matrix(const forest::ForestModel& model, const Dataset& train_set);

ProbabilityMatrix probability_matrix(const ConfusionMatrix& cm);

// Per-classifier updated densities for class j, given each classifier's
// predicted label on the current sample. Pure in everything but the
// epsilon/weight parameters; outputs clamped to [eps, 1-eps].
std::vector<double> adaptive_densities(const FusionEnsemble& ensemble,
                                       std::span<const BinaryLabel> predicted, std::size_t cls);

// Unique root lambda > -1 of prod(1 + lambda*g_i) = 1 + lambda, excluding
// the trivial root 0 unless sum(g) = 1. Residual at the returned root is at
// most 1e-10.
double solve_lambda(std::span<const double> densities);

FuzzyMeasure make_measure(std::vector<double> densities);

// Fold of g(A + {x}) = g(A) + g_x + lambda*g(A)*g_x over the subset.
double measure_of_subset(const FuzzyMeasure& measure, std::span<const std::size_t> subset);

double choquet_integral(std::span<const double> support, const FuzzyMeasure& measure);

// probs[i] is classifier i's class-probability vector for one sample.
FuseResult fuse_predict(const FusionEnsemble& ensemble,
                        const std::vector<std::vector<double>>& probs);

} // namespace tmf::fusion
