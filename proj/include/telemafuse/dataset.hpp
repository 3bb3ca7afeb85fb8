#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "telemafuse/types.hpp"

namespace tmf {

/// Labeled feature matrix shared by the forest, bagging, and evaluation
/// stages. Rows carry trip/driver identity so folds can group by driver and
/// rows can be put into a canonical order.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<std::int8_t> labels; // -1 = unlabeled, else 0/1
    std::vector<std::string> trip_ids;
    std::vector<std::string> driver_ids;
    std::vector<double> window_starts; // NaN when unknown (e.g. CSV-loaded)

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_features() const { return feature_names.size(); }

    /// Column index of a named feature; throws DataError naming the feature.
    std::size_t col_index(const std::string& name) const;

    /// New dataset holding only the named columns, in the given order.
    Dataset project(const std::vector<std::string>& names) const;

    /// New dataset holding only the given rows, in the given order.
    Dataset select_rows(const std::vector<std::size_t>& indices) const;

    /// Sort rows into the canonical order: (driver_id, trip_id, window
    /// start, row values, label). Content-determined, so any input row
    /// permutation converges to the same matrix.
    void canonicalize();

    bool all_labeled() const;
    bool has_both_classes() const;
};

} // namespace tmf
