#include "telemafuse/vertical_bagging.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "telemafuse/errors.hpp"
#include "telemafuse/rng.hpp"
#include "telemafuse/util.hpp"

namespace tmf::bagging {

namespace {

void validate_config(const BaggingConfig& cfg, std::size_t catalog_size) {
    if (cfg.max_features < 1) throw ConfigError("bagging max_features must be >= 1");
    if (static_cast<std::size_t>(cfg.max_features) > catalog_size) {
        throw ConfigError("bagging max_features " + std::to_string(cfg.max_features) +
                          " exceeds catalog size " + std::to_string(catalog_size));
    }
    if (cfg.max_iterations < 3) {
        throw ConfigError("bagging max_iterations must be >= 3 to yield a top-3");
    }
}

[[noreturn]] void throw_with_candidate(const Error& e, std::size_t index) {
    const std::string msg = "candidate " + std::to_string(index) + ": " + e.what();
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
    if (dynamic_cast<const NumericError*>(&e)) throw NumericError(msg);
    if (dynamic_cast<const IoError*>(&e)) throw IoError(msg);
    throw DataError(msg);
}

double resubstitution_accuracy(const forest::ForestModel& model, const Dataset& dataset) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
        correct += forest::predict_label(model, dataset.rows[i]) ==
                   static_cast<BinaryLabel>(dataset.labels[i]);
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.n_rows());
}

} // namespace

std::vector<std::vector<std::string>> sample_subsets(const std::vector<std::string>& catalog,
                                                     const BaggingConfig& cfg) {
    validate_config(cfg, catalog.size());
    const auto n = static_cast<std::uint32_t>(catalog.size());
    const auto f = static_cast<std::uint32_t>(cfg.max_features);

    Rng rng(cfg.seed);
    std::set<std::vector<std::uint32_t>> seen;
    std::vector<std::vector<std::string>> subsets;
    subsets.reserve(static_cast<std::size_t>(cfg.max_iterations));
    std::size_t accepted_duplicates = 0;

    for (int k = 0; k < cfg.max_iterations; ++k) {
        std::vector<std::uint32_t> pick;
        bool duplicate = false;
        for (int attempt = 0;; ++attempt) {
            pick = rng.sample_without_replacement(n, f);
            std::sort(pick.begin(), pick.end());
            duplicate = seen.contains(pick);
            if (!duplicate || attempt >= 100) break;
        }
        if (duplicate) ++accepted_duplicates;
        seen.insert(pick);
        std::vector<std::string> names;
        names.reserve(f);
        for (auto idx : pick) names.push_back(catalog[idx]);
        subsets.push_back(std::move(names));
    }
    if (accepted_duplicates > 0) {
        warn("sample_subsets: accepted " + std::to_string(accepted_duplicates) +
             " duplicate subset(s) after exhausting re-draws");
    }
    return subsets;
}

std::vector<RankedCandidate> train_candidates(const Dataset& dataset,
                                              const std::vector<std::vector<std::string>>& subsets,
                                              const forest::ForestHyperparams& hp,
                                              const BaggingConfig& cfg, int n_threads) {
    if (subsets.empty()) throw ConfigError("train_candidates: no subsets to train");
    std::vector<RankedCandidate> candidates(subsets.size());
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto train_one = [&](std::size_t i) {
        try {
            RankedCandidate cand;
            cand.index = i;
            cand.subset = subsets[i];
            const Dataset projected = dataset.project(subsets[i]);
            forest::ForestHyperparams local = hp;
            local.seed = cfg.seed + static_cast<std::uint64_t>(i);
            cand.model = forest::train_forest(projected, local);
            cand.score = cfg.ranking == RankingMode::oob
                             ? cand.model.oob_accuracy
                             : resubstitution_accuracy(cand.model, projected);
            candidates[i] = std::move(cand);
        } catch (const Error& e) {
            std::lock_guard lock(error_mutex);
            if (!first_error) {
                try {
                    throw_with_candidate(e, i);
                } catch (...) {
                    first_error = std::current_exception();
                }
            }
        }
    };

    if (n_threads <= 1) {
        for (std::size_t i = 0; i < subsets.size(); ++i) {
            if (first_error) break;
            train_one(i);
        }
    } else {
        const auto workers = static_cast<std::size_t>(n_threads);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < subsets.size(); i += workers) train_one(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return candidates;
}

std::vector<RankedCandidate> select_top(std::vector<RankedCandidate> candidates,
                                        std::size_t count) {
    if (candidates.size() < count) {
        throw ConfigError("select_top: need at least " + std::to_string(count) +
                          " candidates, have " + std::to_string(candidates.size()));
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (candidates[a].score != candidates[b].score) {
            return candidates[a].score > candidates[b].score;
        }
        return candidates[a].index < candidates[b].index;
    });

    std::vector<RankedCandidate> top;
    top.reserve(count);
    for (std::size_t i = 0; i < count; ++i) top.push_back(std::move(candidates[order[i]]));
    return top;
}

void write_candidates_csv(const std::vector<RankedCandidate>& candidates,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "index,score,features\n";
    for (const auto& cand : candidates) {
        out << cand.index << ',' << format_double(cand.score) << ',';
        for (std::size_t i = 0; i < cand.subset.size(); ++i) {
            if (i > 0) out << ';';
            out << cand.subset[i];
        }
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

} // namespace tmf::bagging
