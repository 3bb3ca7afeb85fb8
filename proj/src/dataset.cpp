#include "telemafuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "telemafuse/errors.hpp"

namespace tmf {

std::size_t Dataset::col_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        if (feature_names[i] == name) return i;
    }
    throw DataError("missing feature: " + name);
}

Dataset Dataset::project(const std::vector<std::string>& names) const {
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& name : names) cols.push_back(col_index(name));

    Dataset out;
    out.feature_names = names;
    out.labels = labels;
    out.trip_ids = trip_ids;
    out.driver_ids = driver_ids;
    out.window_starts = window_starts;
    out.rows.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<double> projected;
        projected.reserve(cols.size());
        for (std::size_t c : cols) projected.push_back(row[c]);
        out.rows.push_back(std::move(projected));
    }
    return out;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.feature_names = feature_names;
    out.rows.reserve(indices.size());
    for (std::size_t i : indices) {
        out.rows.push_back(rows[i]);
        out.labels.push_back(labels[i]);
        out.trip_ids.push_back(trip_ids[i]);
        out.driver_ids.push_back(driver_ids[i]);
        out.window_starts.push_back(window_starts[i]);
    }
    return out;
}

void Dataset::canonicalize() {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
        if (driver_ids[a] != driver_ids[b]) return driver_ids[a] < driver_ids[b];
        if (trip_ids[a] != trip_ids[b]) return trip_ids[a] < trip_ids[b];
        const double sa = window_starts[a];
        const double sb = window_starts[b];
        if (std::isfinite(sa) && std::isfinite(sb) && sa != sb) return sa < sb;
        if (rows[a] != rows[b]) return rows[a] < rows[b];
        return labels[a] < labels[b];
    });
    *this = select_rows(order);
}

bool Dataset::all_labeled() const {
    return std::all_of(labels.begin(), labels.end(), [](std::int8_t l) { return l >= 0; });
}

bool Dataset::has_both_classes() const {
    bool c0 = false, c1 = false;
    for (std::int8_t l : labels) {
        if (l == 0) c0 = true;
        if (l == 1) c1 = true;
    }
    return c0 && c1;
}

} // namespace tmf
