#include "telemafuse/feature_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "telemafuse/errors.hpp"
#include "telemafuse/util.hpp"

namespace tmf::features {

namespace {

double interpolated_quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double rank = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double wrap_signed_deg(double d) {
    d = std::fmod(d, 360.0);
    if (d >= 180.0) d -= 360.0;
    if (d < -180.0) d += 360.0;
    return d;
}

} // namespace

const std::array<std::string_view, kNumStats>& stat_names() {
    static const std::array<std::string_view, kNumStats> names = {
        "min",  "max",      "mean",    "median",   "q1",       "q3",            "std",
        "aad",  "skewness", "entropy", "kurtosis", "autocorr", "zero_crossing", "energy",
    };
    return names;
}

const std::vector<std::string>& full_feature_catalog() {
    static const std::vector<std::string> catalog = [] {
        std::vector<std::string> names;
        names.reserve(kNumChannels * kNumStats);
        for (const auto channel : channel_names()) {
            for (const auto stat : stat_names()) {
                names.push_back(std::string(channel) + "_" + std::string(stat));
            }
        }
        return names;
    }();
    return catalog;
}

std::vector<RawWindow> segment_windows(const TripStream& stream, const WindowSpec& spec) {
    if (stream.rate_hz != 1) {
        throw DataError("segment_windows: trip " + stream.trip_id + " is not at 1 Hz");
    }
    if (spec.length_s < 2 || spec.stride_s < 1) {
        throw ConfigError("window spec requires length_s >= 2 and stride_s >= 1");
    }
    std::vector<RawWindow> windows;
    if (stream.samples.empty()) return windows;

    const double t_first = stream.samples.front().t;
    const double t_last = stream.samples.back().t;
    const auto length = static_cast<double>(spec.length_s);

    std::size_t cursor = 0;
    for (double start = t_first; start + length - 1.0 <= t_last;
         start += static_cast<double>(spec.stride_s)) {
        while (cursor < stream.samples.size() && stream.samples[cursor].t < start) ++cursor;
        std::size_t end = cursor;
        while (end < stream.samples.size() && stream.samples[end].t < start + length) ++end;
        if (end - cursor != static_cast<std::size_t>(spec.length_s)) continue; // gap inside the window

        RawWindow window;
        window.trip_id = stream.trip_id;
        window.driver_id = stream.driver_id;
        window.label = stream.label;
        window.start_t = start;
        for (auto& channel : window.channels) channel.reserve(static_cast<std::size_t>(spec.length_s));
        for (std::size_t i = cursor; i < end; ++i) {
            for (std::size_t c = 0; c < kNumChannels; ++c) {
                window.channels[c].push_back(stream.samples[i].channel(c));
            }
        }
        windows.push_back(std::move(window));
    }
    return windows;
}

std::array<double, kNumStats> compute_stats(std::span<const double> values, const FeatureConfig& cfg) {
    const std::size_t n = values.size();
    if (n == 0) throw DataError("compute_stats: empty series");

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double vmin = sorted.front();
    const double vmax = sorted.back();

    double sum = 0, sum_sq = 0;
    for (double v : values) {
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double energy = sum_sq / static_cast<double>(n);

    const double median =
        (n % 2 == 0) ? 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) : sorted[n / 2];
    const double q1 = interpolated_quantile(sorted, 0.25);
    const double q3 = interpolated_quantile(sorted, 0.75);

    double d2 = 0, d3 = 0, d4 = 0, abs_dev = 0;
    for (double v : values) {
        const double d = v - mean;
        const double dd = d * d;
        d2 += dd;
        d3 += dd * d;
        d4 += dd * dd;
        abs_dev += std::abs(d);
    }
    const double stddev = n >= 2 ? std::sqrt(d2 / static_cast<double>(n - 1)) : 0.0;
    const double aad = abs_dev / static_cast<double>(n);
    const double m2 = d2 / static_cast<double>(n);
    const double m3 = d3 / static_cast<double>(n);
    const double m4 = d4 / static_cast<double>(n);
    const double skewness = m2 == 0 ? 0.0 : m3 / std::pow(m2, 1.5);
    const double kurtosis = m2 == 0 ? 0.0 : m4 / (m2 * m2) - 3.0;

    double entropy = 0.0;
    if (vmax > vmin) {
        const int bins = cfg.entropy_bins;
        std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
        const double range = vmax - vmin;
        for (double v : values) {
            auto idx = static_cast<long>((v - vmin) / range * static_cast<double>(bins));
            if (idx >= bins) idx = bins - 1;
            if (idx < 0) idx = 0;
            ++counts[static_cast<std::size_t>(idx)];
        }
        for (std::size_t c : counts) {
            if (c == 0) continue;
            const double p = static_cast<double>(c) / static_cast<double>(n);
            entropy -= p * std::log2(p);
        }
    }

    double autocorr = 0.0;
    const auto lag = static_cast<std::size_t>(cfg.autocorr_lag);
    if (d2 != 0 && lag < n) {
        double num = 0;
        for (std::size_t t = 0; t + lag < n; ++t) {
            num += (values[t] - mean) * (values[t + lag] - mean);
        }
        autocorr = num / d2;
    }

    // Strict sign changes of the mean-centered series; exact zeros inherit
    // the previous nonzero sign.
    long crossings = 0;
    int prev_sign = 0;
    for (double v : values) {
        const double d = v - mean;
        int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
        if (s == 0) s = prev_sign;
        if (s != 0 && prev_sign != 0 && s != prev_sign) ++crossings;
        if (s != 0) prev_sign = s;
    }

    return {vmin,     vmax,     mean,    median,   q1,
            q3,       stddev,   aad,     skewness, entropy,
            kurtosis, autocorr, static_cast<double>(crossings), energy};
}

FeatureWindow compute_window_features(const RawWindow& window, const FeatureConfig& cfg) {
    const std::size_t n = window.channels[0].size();
    if (n < 2) throw DataError("degenerate window: fewer than 2 samples");
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        if (window.channels[c].size() != n) {
            throw DataError("window channels have mismatched lengths");
        }
        for (double v : window.channels[c]) {
            if (!std::isfinite(v)) {
                throw DataError("non-finite value in channel " + std::string(channel_names()[c]));
            }
        }
    }

    FeatureWindow out;
    out.trip_id = window.trip_id;
    out.driver_id = window.driver_id;
    out.label = window.label;
    out.start_t = window.start_t;
    out.values.reserve(kNumChannels * kNumStats);

    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const std::vector<double>* series = &window.channels[c];
        std::vector<double> deltas;
        if (c == static_cast<std::size_t>(Channel::heading) && cfg.heading_mode == HeadingMode::delta) {
            deltas.reserve(n - 1);
            for (std::size_t i = 1; i < n; ++i) {
                deltas.push_back(wrap_signed_deg(window.channels[c][i] - window.channels[c][i - 1]));
            }
            series = &deltas;
        }
        const auto stats = compute_stats(*series, cfg);
        out.values.insert(out.values.end(), stats.begin(), stats.end());
    }
    return out;
}

std::vector<FeatureWindow> compute_all_features(const std::vector<RawWindow>& windows,
                                                const FeatureConfig& cfg) {
    std::vector<FeatureWindow> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(compute_window_features(w, cfg));
    return out;
}

double SelectionReport::correlation_of(const std::string& name) const {
    for (const auto& [n, r] : correlations) {
        if (n == name) return r;
    }
    throw DataError("no correlation recorded for feature: " + name);
}

std::vector<std::string> low_variance_filter(const Dataset& dataset, double threshold) {
    if (dataset.n_rows() == 0) throw DataError("low_variance_filter: empty dataset");
    const double n = static_cast<double>(dataset.n_rows());

    std::vector<std::string> dropped;
    for (std::size_t f = 0; f < dataset.n_features(); ++f) {
        double sum = 0;
        for (const auto& row : dataset.rows) sum += row[f];
        const double mean = sum / n;
        double var = 0;
        for (const auto& row : dataset.rows) {
            const double d = row[f] - mean;
            var += d * d;
        }
        var /= n;
        if (var < threshold) dropped.push_back(dataset.feature_names[f]);
    }
    return dropped;
}

SelectionReport point_biserial_select(const Dataset& dataset, double threshold,
                                      const std::vector<std::string>& variance_dropped) {
    if (dataset.n_rows() == 0) throw DataError("point_biserial_select: empty dataset");
    if (!dataset.all_labeled()) {
        throw DataError("point_biserial_select: unlabeled row in dataset");
    }
    if (!dataset.has_both_classes()) {
        throw DataError("point_biserial_select: correlation undefined on a single-class dataset");
    }

    const double n = static_cast<double>(dataset.n_rows());
    double label_sum = 0;
    for (auto l : dataset.labels) label_sum += l;
    const double label_mean = label_sum / n;
    double label_ss = 0;
    for (auto l : dataset.labels) {
        const double d = static_cast<double>(l) - label_mean;
        label_ss += d * d;
    }

    SelectionReport report;
    report.variance_dropped = variance_dropped;
    report.threshold = threshold;

    for (std::size_t f = 0; f < dataset.n_features(); ++f) {
        const std::string& name = dataset.feature_names[f];
        if (std::find(variance_dropped.begin(), variance_dropped.end(), name) !=
            variance_dropped.end()) {
            continue;
        }
        double sum = 0;
        for (const auto& row : dataset.rows) sum += row[f];
        const double mean = sum / n;
        double ss = 0, cross = 0;
        for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
            const double dx = dataset.rows[i][f] - mean;
            const double dy = static_cast<double>(dataset.labels[i]) - label_mean;
            ss += dx * dx;
            cross += dx * dy;
        }
        double r = 0;
        if (ss > 0 && label_ss > 0) {
            r = std::clamp(cross / std::sqrt(ss * label_ss), -1.0, 1.0);
        } else {
            warn("point_biserial_select: zero-variance feature " + name +
                 " reached selection, r set to 0");
        }
        report.correlations.emplace_back(name, r);
    }

    auto ranked = report.correlations;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return std::abs(a.second) > std::abs(b.second);
    });
    for (const auto& [name, r] : ranked) {
        if (std::abs(r) >= threshold) report.selected.push_back(name);
    }
    return report;
}

std::vector<std::string> selection_catalog(const SelectionReport& report,
                                           std::size_t min_features) {
    std::vector<std::string> catalog = report.selected;
    if (catalog.size() >= min_features) return catalog;

    auto ranked = report.correlations;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return std::abs(a.second) > std::abs(b.second);
    });
    for (const auto& [name, r] : ranked) {
        if (catalog.size() >= min_features) break;
        if (std::find(catalog.begin(), catalog.end(), name) == catalog.end()) {
            catalog.push_back(name);
        }
    }
    if (catalog.size() < min_features) {
        warn("selection_catalog: only " + std::to_string(catalog.size()) +
             " features available, fewer than requested " + std::to_string(min_features));
    }
    return catalog;
}

Dataset to_dataset(const std::vector<FeatureWindow>& windows) {
    Dataset out;
    out.feature_names = full_feature_catalog();
    out.rows.reserve(windows.size());
    for (const auto& w : windows) {
        out.rows.push_back(w.values);
        out.labels.push_back(w.label ? static_cast<std::int8_t>(*w.label) : std::int8_t{-1});
        out.trip_ids.push_back(w.trip_id);
        out.driver_ids.push_back(w.driver_id);
        out.window_starts.push_back(w.start_t);
    }
    return out;
}

void write_feature_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    std::string buffer = "trip_id,driver_id,label";
    for (const auto& name : dataset.feature_names) {
        buffer.push_back(',');
        buffer.append(name);
    }
    buffer.push_back('\n');
    for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
        buffer.append(dataset.trip_ids[i]);
        buffer.push_back(',');
        buffer.append(dataset.driver_ids[i]);
        buffer.push_back(',');
        if (dataset.labels[i] < 0) {
            buffer.push_back('?');
        } else {
            buffer.append(label_name(static_cast<BinaryLabel>(dataset.labels[i])));
        }
        for (double v : dataset.rows[i]) {
            buffer.push_back(',');
            buffer.append(format_double(v));
        }
        buffer.push_back('\n');
        if (buffer.size() > (1 << 20)) {
            out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
            buffer.clear();
        }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

Dataset read_feature_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open feature file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty input: " + path);
    line = strip_cr(std::move(line));
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "trip_id" || header[1] != "driver_id" ||
        header[2] != "label") {
        throw DataError("bad feature CSV header in " + path +
                        ": expected trip_id,driver_id,label,<features...>");
    }

    Dataset out;
    for (std::size_t i = 3; i < header.size(); ++i) out.feature_names.emplace_back(header[i]);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("parse error at line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " columns, got " +
                            std::to_string(fields.size()));
        }
        bool ok = false;
        const auto label = parse_label_name(fields[2], ok);
        if (!ok) {
            throw DataError("line " + std::to_string(line_no) +
                            ": label must be one of male, female, ?");
        }
        std::vector<double> row;
        row.reserve(out.feature_names.size());
        for (std::size_t i = 3; i < fields.size(); ++i) {
            double v = 0;
            if (!try_parse_double(fields[i], v)) {
                throw DataError("parse error at line " + std::to_string(line_no) +
                                ": non-numeric value '" + std::string(fields[i]) + "'");
            }
            if (!std::isfinite(v)) {
                throw DataError("line " + std::to_string(line_no) + ": non-finite feature value");
            }
            row.push_back(v);
        }
        out.rows.push_back(std::move(row));
        out.labels.push_back(label ? static_cast<std::int8_t>(*label) : std::int8_t{-1});
        out.trip_ids.emplace_back(fields[0]);
        out.driver_ids.emplace_back(fields[1]);
        out.window_starts.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    if (out.rows.empty()) throw DataError("empty input: " + path + " has a header but no rows");
    return out;
}

void write_selection_csv(const SelectionReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "feature,correlation\n";
    for (const auto& name : report.selected) {
        out << name << ',' << format_double(report.correlation_of(name)) << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

} // namespace tmf::features
