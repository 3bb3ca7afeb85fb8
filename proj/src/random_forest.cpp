#include "telemafuse/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "telemafuse/errors.hpp"
#include "telemafuse/rng.hpp"
#include "telemafuse/util.hpp"

namespace tmf::forest {

namespace {

constexpr double kMinGiniDecrease = 1e-12;

struct ClassCounts {
    std::array<std::size_t, kNumClasses> c{};

    std::size_t total() const {
        std::size_t t = 0;
        for (auto v : c) t += v;
        return t;
    }
    double gini() const {
        const auto n = static_cast<double>(total());
        if (n == 0) return 0.0;
        double sum_sq = 0;
        for (auto v : c) {
            const double p = static_cast<double>(v) / n;
            sum_sq += p * p;
        }
        return 1.0 - sum_sq;
    }
    bool pure() const {
        int nonzero = 0;
        for (auto v : c) nonzero += v > 0;
        return nonzero <= 1;
    }
};

struct SplitChoice {
    bool found = false;
    std::int32_t feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

struct TreeBuilder {
    const std::vector<std::vector<double>>& rows;
    const std::vector<std::int8_t>& labels;
    const ForestHyperparams& hp;
    int mtry;
    Rng rng;
    DecisionTree tree;

    // Scratch reused across nodes to keep allocation churn down.
    std::vector<std::uint32_t> sorted_idx;

    ClassCounts count_classes(std::span<const std::uint32_t> idx) const {
        ClassCounts counts;
        for (auto i : idx) ++counts.c[static_cast<std::size_t>(labels[i])];
        return counts;
    }

    // Candidate features are scanned in ascending index order and thresholds
    // in ascending value order with strictly-greater acceptance, so equal
    // decreases resolve to the lowest feature then lowest threshold.
    SplitChoice best_split(std::span<const std::uint32_t> idx, const ClassCounts& parent) {
        const auto n_features = static_cast<std::uint32_t>(rows.front().size());
        auto candidates = rng.sample_without_replacement(n_features, static_cast<std::uint32_t>(mtry));
        std::sort(candidates.begin(), candidates.end());

        const auto n = static_cast<double>(idx.size());
        const double parent_gini = parent.gini();
        SplitChoice best;

        for (auto f : candidates) {
            sorted_idx.assign(idx.begin(), idx.end());
            std::sort(sorted_idx.begin(), sorted_idx.end(), [&](std::uint32_t a, std::uint32_t b) {
                return rows[a][f] < rows[b][f];
            });

            ClassCounts left;
            ClassCounts right = parent;
            for (std::size_t i = 0; i + 1 < sorted_idx.size(); ++i) {
                const auto label = static_cast<std::size_t>(labels[sorted_idx[i]]);
                ++left.c[label];
                --right.c[label];
                const double lo = rows[sorted_idx[i]][f];
                const double hi = rows[sorted_idx[i + 1]][f];
                if (!(lo < hi)) continue;
                const double n_left = static_cast<double>(i + 1);
                const double n_right = n - n_left;
                const double decrease =
                    parent_gini - (n_left / n) * left.gini() - (n_right / n) * right.gini();
                if (decrease > best.decrease && decrease > kMinGiniDecrease) {
                    best.found = true;
                    best.feature = static_cast<std::int32_t>(f);
                    best.threshold = 0.5 * (lo + hi);
                    best.decrease = decrease;
                }
            }
        }
        return best;
    }

    std::int32_t make_leaf(const ClassCounts& counts) {
        const auto offset = static_cast<std::int32_t>(tree.leaf_dists.size());
        const auto n = static_cast<double>(counts.total());
        for (auto c : counts.c) tree.leaf_dists.push_back(static_cast<double>(c) / n);
        TreeNode node;
        node.dist_offset = offset;
        tree.nodes.push_back(node);
        return static_cast<std::int32_t>(tree.nodes.size() - 1);
    }

    std::int32_t build(std::vector<std::uint32_t>& idx, int depth) {
        const ClassCounts counts = count_classes(idx);
        const bool depth_capped = hp.max_depth > 0 && depth >= hp.max_depth;
        if (counts.pure() || idx.size() < static_cast<std::size_t>(hp.min_samples_split) ||
            depth_capped) {
            return make_leaf(counts);
        }
        const SplitChoice split = best_split(idx, counts);
        if (!split.found) return make_leaf(counts);

        std::vector<std::uint32_t> left_idx, right_idx;
        left_idx.reserve(idx.size());
        right_idx.reserve(idx.size());
        for (auto i : idx) {
            (rows[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left_idx
                                                                                 : right_idx)
                .push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();

        TreeNode node;
        node.feature = split.feature;
        node.threshold = split.threshold;
        tree.nodes.push_back(node);
        const auto self = static_cast<std::int32_t>(tree.nodes.size() - 1);
        tree.nodes[static_cast<std::size_t>(self)].left = build(left_idx, depth + 1);
        tree.nodes[static_cast<std::size_t>(self)].right = build(right_idx, depth + 1);
        return self;
    }
};

struct TrainedTree {
    DecisionTree tree;
    std::vector<bool> in_bag;
};

TrainedTree train_one_tree(const Dataset& dataset, const ForestHyperparams& hp, int mtry,
                           std::size_t tree_index) {
    const std::size_t n = dataset.n_rows();
    TreeBuilder builder{dataset.rows, dataset.labels, hp, mtry,
                        Rng(hp.seed + static_cast<std::uint64_t>(tree_index)), {}, {}};

    TrainedTree out;
    out.in_bag.assign(n, false);
    std::vector<std::uint32_t> bootstrap;
    bootstrap.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto pick = builder.rng.uniform_below(static_cast<std::uint64_t>(n));
        bootstrap.push_back(static_cast<std::uint32_t>(pick));
        out.in_bag[pick] = true;
    }
    builder.build(bootstrap, 0);
    out.tree = std::move(builder.tree);
    return out;
}

} // namespace

std::span<const double> DecisionTree::leaf_dist(const TreeNode& node) const {
    return {leaf_dists.data() + node.dist_offset, kNumClasses};
}

std::span<const double> DecisionTree::predict_dist(std::span<const double> x) const {
    std::size_t at = 0;
    while (nodes[at].feature >= 0) {
        const auto& node = nodes[at];
        at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                          ? node.left
                                          : node.right);
    }
    return leaf_dist(nodes[at]);
}

ForestModel train_forest(const Dataset& dataset, const ForestHyperparams& hyper, int n_threads) {
    const std::size_t n = dataset.n_rows();
    if (n < 2) throw DataError("train_forest: need at least 2 samples");
    if (dataset.n_features() == 0) throw DataError("train_forest: dataset has zero features");
    if (!dataset.all_labeled()) throw DataError("train_forest: dataset has unlabeled rows");
    if (!dataset.has_both_classes()) {
        throw DataError("train_forest: single-class dataset, nothing to separate");
    }
    if (hyper.n_trees < 1 || hyper.min_samples_split < 2 || hyper.max_depth < 0) {
        throw ConfigError("train_forest: invalid hyperparameters");
    }
    const auto n_features = static_cast<int>(dataset.n_features());
    int mtry = hyper.split_features;
    if (mtry == 0) {
        mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
    }
    if (mtry < 1 || mtry > n_features) {
        throw ConfigError("train_forest: split_features must be in [1, feature count]");
    }

    const auto n_trees = static_cast<std::size_t>(hyper.n_trees);
    std::vector<TrainedTree> trained(n_trees);
    if (n_threads <= 1) {
        for (std::size_t t = 0; t < n_trees; ++t) {
            trained[t] = train_one_tree(dataset, hyper, mtry, t);
        }
    } else {
        const auto workers = static_cast<std::size_t>(n_threads);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < n_trees; t += workers) {
                    trained[t] = train_one_tree(dataset, hyper, mtry, t);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    ForestModel model;
    model.hyper = hyper;
    model.feature_names = dataset.feature_names;
    model.seed = hyper.seed;
    model.trees.reserve(n_trees);
    for (auto& t : trained) model.trees.push_back(std::move(t.tree));

    // OOB vote: per sample, majority over trees whose bootstrap missed it.
    std::size_t counted = 0, correct = 0;
    std::array<std::size_t, kNumClasses> votes{};
    for (std::size_t i = 0; i < n; ++i) {
        votes.fill(0);
        bool any = false;
        for (std::size_t t = 0; t < n_trees; ++t) {
            if (trained[t].in_bag[i]) continue;
            any = true;
            const auto dist = model.trees[t].predict_dist(dataset.rows[i]);
            std::size_t best = 0;
            for (std::size_t c = 1; c < kNumClasses; ++c) {
                if (dist[c] > dist[best]) best = c;
            }
            ++votes[best];
        }
        if (!any) continue;
        std::size_t vote = 0;
        for (std::size_t c = 1; c < kNumClasses; ++c) {
            if (votes[c] > votes[vote]) vote = c;
        }
        ++counted;
        correct += vote == static_cast<std::size_t>(dataset.labels[i]);
    }
    if (counted == 0) {
        warn("train_forest: no sample was ever out-of-bag, oob_accuracy reported as 0");
        model.oob_accuracy = 0.0;
    } else {
        model.oob_accuracy = static_cast<double>(correct) / static_cast<double>(counted);
    }
    return model;
}

std::vector<double> predict_proba(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.feature_names.size()) {
        throw DataError("predict_proba: expected " + std::to_string(model.feature_names.size()) +
                        " features, got " + std::to_string(x.size()));
    }
    std::vector<double> proba(kNumClasses, 0.0);
    for (const auto& tree : model.trees) {
        const auto dist = tree.predict_dist(x);
        for (std::size_t c = 0; c < kNumClasses; ++c) proba[c] += dist[c];
    }
    const auto n = static_cast<double>(model.trees.size());
    for (auto& p : proba) p /= n;
    return proba;
}

BinaryLabel argmax_label(std::span<const double> proba) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < proba.size(); ++c) {
        if (proba[c] > proba[best]) best = c;
    }
    return static_cast<BinaryLabel>(best);
}

BinaryLabel predict_label(const ForestModel& model, std::span<const double> x) {
    const auto proba = predict_proba(model, x);
    return argmax_label(proba);
}

std::string forest_digest(const ForestModel& model) {
    Fnv1a digest;
    digest.update(format_u64(model.seed));
    digest.update(format_i64(model.hyper.n_trees));
    digest.update(format_i64(model.hyper.max_depth));
    digest.update(format_i64(model.hyper.min_samples_split));
    digest.update(format_i64(model.hyper.split_features));
    digest.update(format_double(model.oob_accuracy));
    for (const auto& name : model.feature_names) {
        digest.update(name);
        digest.update("|");
    }
    for (const auto& tree : model.trees) {
        digest.update("T");
        for (const auto& node : tree.nodes) {
            digest.update(format_i64(node.feature));
            digest.update(format_i64(node.left));
            digest.update(format_i64(node.right));
            digest.update(format_i64(node.dist_offset));
            digest.update(format_double(node.threshold));
        }
        for (double d : tree.leaf_dists) digest.update(format_double(d));
    }
    return digest.hex();
}

} // namespace tmf::forest
