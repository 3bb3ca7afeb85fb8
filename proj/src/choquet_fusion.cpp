#include "telemafuse/choquet_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "telemafuse/errors.hpp"
#include "telemafuse/rng.hpp"
#include "telemafuse/util.hpp"

namespace tmf::fusion {

namespace {

double clamp_density(double g, double eps) { return std::clamp(g, eps, 1.0 - eps); }

// prod(1 + lambda*g_i) - (1 + lambda)
double lambda_residual(double lambda, std::span<const double> g) {
    double prod = 1.0;
    for (double gi : g) prod *= 1.0 + lambda * gi;
    return prod - (1.0 + lambda);
}

// The residual factors as lambda * S(lambda) with S a polynomial in the
// elementary symmetric functions e_k of the densities:
//   S(lambda) = (e_1 - 1) + e_2*lambda + e_3*lambda^2 + ... + e_n*lambda^(n-1)
// Root-finding on S instead of the raw residual removes both the trivial
// root at 0 and the cancellation between prod(1+lambda*g) and 1+lambda,
// which otherwise leaves lambda poorly determined when sum(g) is close
// to 1. Coefficients of S, constant term first:
std::vector<double> reduced_poly(std::span<const double> g) {
    std::vector<double> e(g.size() + 1, 0.0); // e[k] = k-th elementary symmetric
    e[0] = 1.0;
    std::size_t seen = 0;
    for (double gi : g) {
        ++seen;
        for (std::size_t k = seen; k >= 1; --k) e[k] += gi * e[k - 1];
    }
    std::vector<double> coeffs(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) coeffs[k] = e[k + 1];
    coeffs[0] -= 1.0;
    return coeffs;
}

double poly_eval(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
    return acc;
}

double poly_slope(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 1;) acc = acc * x + static_cast<double>(i) * coeffs[i];
    return acc;
}

} // namespace

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts) {
        for (auto v : row) t += v;
    }
    return t;
}

void FusionParams::validate() const {
    if (!(w1 > 0.0 && w1 <= 1.0) || !(w2 > 0.0 && w2 <= 1.0)) {
        throw ConfigError("fusion weights w1, w2 must lie in (0, 1]");
    }
    if (!(epsilon > 0.0 && epsilon < 0.01)) {
        throw ConfigError("fusion epsilon must lie in (0, 0.01)");
    }
}

ConfusionMatrix confusion_matrix(const forest::ForestModel& model, const Dataset& eval_set) {
    if (eval_set.n_rows() == 0) throw DataError("confusion_matrix: empty evaluation set");
    if (!eval_set.all_labeled()) throw DataError("confusion_matrix: unlabeled evaluation rows");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < eval_set.n_rows(); ++i) {
        const auto truth = static_cast<std::size_t>(eval_set.labels[i]);
        const auto pred = static_cast<std::size_t>(forest::predict_label(model, eval_set.rows[i]));
        ++cm.counts[truth][pred];
    }
    return cm;
}

ConfusionMatrix oob_confusion_matrix(const forest::ForestModel& model, const Dataset& train_set) {
    const std::size_t n = train_set.n_rows();
    if (n == 0) throw DataError("oob_confusion_matrix: empty training set");
    if (!train_set.all_labeled()) throw DataError("oob_confusion_matrix: unlabeled training rows");

    // Bootstrap membership is a pure function of the per-tree seed, so it
    // can be replayed without having stored the bags.
    const std::size_t n_trees = model.trees.size();
    std::vector<std::vector<bool>> in_bag(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        Rng rng(model.seed + static_cast<std::uint64_t>(t));
        in_bag[t].assign(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            in_bag[t][rng.uniform_below(static_cast<std::uint64_t>(n))] = true;
        }
    }

    ConfusionMatrix cm;
    std::uint64_t counted = 0;
    std::array<std::size_t, kNumClasses> votes{};
    for (std::size_t i = 0; i < n; ++i) {
        votes.fill(0);
        bool any = false;
        for (std::size_t t = 0; t < n_trees; ++t) {
            if (in_bag[t][i]) continue;
            any = true;
            const auto dist = model.trees[t].predict_dist(train_set.rows[i]);
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
        ++cm.counts[static_cast<std::size_t>(train_set.labels[i])][vote];
        ++counted;
    }
    if (counted == 0) {
        warn("oob_confusion_matrix: no sample was ever out-of-bag, falling back to resubstitution");
        return confusion_matrix(model, train_set);
    }
    return cm;
}

ProbabilityMatrix probability_matrix(const ConfusionMatrix& cm) {
    ProbabilityMatrix pm;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
        std::uint64_t row_sum = 0;
        for (auto v : cm.counts[j]) row_sum += v;
        if (row_sum == 0) {
            warn("probability_matrix: class " + std::string(label_name(static_cast<BinaryLabel>(j))) +
                 " has no evaluated samples, row set to uniform");
            for (auto& r : pm.rates[j]) r = 1.0 / static_cast<double>(kNumClasses);
            continue;
        }
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            pm.rates[j][k] = static_cast<double>(cm.counts[j][k]) / static_cast<double>(row_sum);
        }
    }
    return pm;
}

std::vector<double> adaptive_densities(const FusionEnsemble& ensemble,
                                       std::span<const BinaryLabel> predicted, std::size_t cls) {
    const std::size_t p = ensemble.size();
    if (predicted.size() != p) {
        throw NumericError("adaptive_densities: need one predicted label per classifier");
    }
    if (ensemble.prob_matrices.size() != p) {
        throw NumericError("adaptive_densities: ensemble has " +
                           format_u64(ensemble.prob_matrices.size()) + " probability matrices for " +
                           format_u64(p) + " classifiers");
    }
    if (cls >= kNumClasses) throw NumericError("adaptive_densities: class index out of range");
    const double eps = ensemble.params.epsilon;
    const double w1 = ensemble.params.w1;
    const double w2 = ensemble.params.w2;

    std::vector<double> out(p);
    for (std::size_t i = 0; i < p; ++i) {
        const auto& pm_i = ensemble.prob_matrices[i].rates;
        const double g = pm_i[cls][cls];
        double delta_prod = 1.0;
        double gamma_prod = 1.0;
        for (std::size_t m = 0; m < p; ++m) {
            if (m == i || predicted[i] == predicted[m]) continue;
            const auto claimed = static_cast<std::size_t>(predicted[m]);

            // delta: how often classifier i historically confused true
            // class `cls` with the class m is claiming now.
            double delta;
            if (pm_i[cls][cls] == 0.0) {
                delta = eps;
            } else {
                delta = std::clamp((pm_i[cls][cls] - pm_i[cls][claimed]) / pm_i[cls][cls], eps, 1.0);
            }
            delta_prod *= delta;

            // gamma: i's error rate on that confusion cell relative to m's.
            const double e_i = pm_i[cls][claimed];
            const double e_m = ensemble.prob_matrices[m].rates[cls][claimed];
            double gamma;
            if (e_i <= e_m) {
                gamma = 1.0;
            } else if (e_m > 0.0) {
                gamma = e_m / e_i;
            } else {
                gamma = eps;
            }
            gamma_prod *= gamma;
        }
        out[i] = clamp_density(g * std::pow(delta_prod, w1) * std::pow(gamma_prod, w2), eps);
    }
    return out;
}

double solve_lambda(std::span<const double> densities) {
    if (densities.size() < 2) throw NumericError("solve_lambda: need at least 2 densities");
    double sum = 0.0;
    for (double g : densities) {
        if (!(g > 0.0 && g < 1.0)) {
            throw NumericError("solve_lambda: density " + format_double(g) + " outside (0,1)");
        }
        sum += g;
    }
    if (std::abs(sum - 1.0) <= 1e-12) return 0.0;

    const auto coeffs = reduced_poly(densities);

    double lo, hi;
    if (sum > 1.0) {
        lo = -1.0 + 1e-12;
        hi = -1e-12;
    } else {
        lo = 1e-12;
        hi = 1.0;
        while (poly_eval(coeffs, hi) <= 0.0) {
            hi *= 2.0;
            if (hi > 1e300) throw NumericError("solve_lambda: failed to bracket a root");
        }
    }

    double f_lo = poly_eval(coeffs, lo);
    if ((f_lo > 0.0) == (poly_eval(coeffs, hi) > 0.0)) {
        // Densities this close to 1 push the root below double resolution
        // next to -1; refuse rather than return garbage.
        throw NumericError("solve_lambda: could not bracket the root for the given densities");
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = poly_eval(coeffs, mid);
        if (f_mid == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((f_lo > 0.0) == (f_mid > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15 * std::max(1.0, std::abs(mid))) break;
    }

    double lambda = 0.5 * (lo + hi);
    for (int iter = 0; iter < 8; ++iter) {
        const double r = poly_eval(coeffs, lambda);
        if (r == 0.0) break;
        const double d = poly_slope(coeffs, lambda);
        if (d == 0.0) break;
        const double next = lambda - r / d;
        if (!(next > -1.0) || !std::isfinite(next) || next == lambda) break;
        lambda = next;
    }
    // Both residual terms have magnitude ~(1+lambda), so an absolute 1e-10
    // check is unattainable for the huge lambdas tiny densities produce.
    const double tol = 1e-10 * std::max(1.0, std::abs(1.0 + lambda));
    if (std::abs(lambda_residual(lambda, densities)) > tol) {
        throw NumericError("solve_lambda: residual above tolerance at lambda = " +
                           format_double(lambda));
    }
    return lambda;
}

FuzzyMeasure make_measure(std::vector<double> densities) {
    FuzzyMeasure m;
    m.lambda = solve_lambda(densities);
    m.densities = std::move(densities);
    return m;
}

double measure_of_subset(const FuzzyMeasure& measure, std::span<const std::size_t> subset) {
    double g = 0.0;
    bool first = true;
    for (std::size_t idx : subset) {
        if (idx >= measure.densities.size()) {
            throw NumericError("measure_of_subset: classifier index out of range");
        }
        const double gi = measure.densities[idx];
        if (first) {
            g = gi;
            first = false;
        } else {
            g = g + gi + measure.lambda * g * gi;
        }
    }
    return g;
}

double choquet_integral(std::span<const double> support, const FuzzyMeasure& measure) {
    const std::size_t n = support.size();
    if (n != measure.densities.size()) {
        throw NumericError("choquet_integral: support size does not match measure");
    }
    for (double f : support) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw NumericError("choquet_integral: support value " + format_double(f) +
                               " outside [0,1]");
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });

    double integral = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const std::size_t> upper(order.data() + i, n - i);
        integral += (support[order[i]] - prev) * measure_of_subset(measure, upper);
        prev = support[order[i]];
    }
    return integral;
}

FuseResult fuse_predict(const FusionEnsemble& ensemble,
                        const std::vector<std::vector<double>>& probs) {
    const std::size_t p = ensemble.size();
    if (p < 2) throw NumericError("fuse_predict: ensemble needs at least 2 classifiers");
    if (probs.size() != p) {
        throw NumericError("fuse_predict: need one probability vector per classifier");
    }
    for (const auto& h : probs) {
        if (h.size() != kNumClasses) {
            throw NumericError("fuse_predict: probability vector has wrong length");
        }
        double s = 0.0;
        for (double v : h) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw NumericError("fuse_predict: malformed probability vector");
            }
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6) {
            throw NumericError("fuse_predict: probability vector sums to " + format_double(s));
        }
    }

    FuseResult result;
    result.votes.reserve(p);
    for (const auto& h : probs) result.votes.push_back(forest::argmax_label(h));

    std::vector<double> column(p);
    for (std::size_t cls = 0; cls < kNumClasses; ++cls) {
        auto densities = adaptive_densities(ensemble, result.votes, cls);
        const FuzzyMeasure measure = make_measure(std::move(densities));
        for (std::size_t i = 0; i < p; ++i) column[i] = std::clamp(probs[i][cls], 0.0, 1.0);
        result.integrals[cls] = choquet_integral(column, measure);
    }

    result.label = BinaryLabel::class0;
    for (std::size_t cls = 1; cls < kNumClasses; ++cls) {
        if (result.integrals[cls] > result.integrals[static_cast<std::size_t>(result.label)]) {
            result.label = static_cast<BinaryLabel>(cls);
        }
    }
    const double denom = result.integrals[0] + result.integrals[1];
    result.score = denom == 0.0 ? 0.5 : result.integrals[1] / denom;
    return result;
}

} // namespace tmf::fusion
