#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ice/error.hpp"

namespace ice {

/// Immutable N x M numeric feature matrix with named columns and optional
/// ground-truth class labels. Values are stored column-major so threshold
/// scans walk contiguous memory. Safe to share across threads once built.
class Dataset {
public:
    Dataset(std::vector<std::string> feature_names,
            std::vector<double> column_major_values,
            std::size_t n_samples,
            std::vector<std::int32_t> labels = {},
            std::vector<std::string> label_names = {})
        : names_(std::move(feature_names)),
          values_(std::move(column_major_values)),
          n_(n_samples),
          labels_(std::move(labels)),
          label_names_(std::move(label_names)) {
        const std::size_t m = names_.size();
        detail::require_input(n_ > 0, "dataset must contain at least one sample");
        detail::require_input(m > 0, "dataset must contain at least one feature");
        detail::require_input(values_.size() == n_ * m,
                              "feature matrix size does not match n*m");
        std::unordered_set<std::string> seen;
        for (const auto& name : names_)
            detail::require_input(seen.insert(name).second,
                                  "duplicate feature name: " + name);
        for (double v : values_)
            detail::require_input(std::isfinite(v),
                                  "dataset contains a non-finite value");
        if (!labels_.empty()) {
            detail::require_input(labels_.size() == n_,
                                  "label vector length does not match sample count");
            for (auto l : labels_)
                detail::require_input(
                    l >= 0 && static_cast<std::size_t>(l) < label_names_.size(),
                    "label id out of range of label names");
        }
    }

    std::size_t n() const { return n_; }
    std::size_t m() const { return names_.size(); }

    double value(std::size_t sample, std::size_t feature) const {
        return values_[feature * n_ + sample];
    }

    std::span<const double> column(std::size_t feature) const {
        return {values_.data() + feature * n_, n_};
    }

    const std::vector<std::string>& feature_names() const { return names_; }
    const std::vector<double>& raw_values() const { return values_; }

    bool has_labels() const { return !labels_.empty(); }
    const std::vector<std::int32_t>& labels() const { return labels_; }
    const std::vector<std::string>& label_names() const { return label_names_; }
    std::size_t class_count() const { return label_names_.size(); }

private:
    std::vector<std::string> names_;
    std::vector<double> values_;
    std::size_t n_;
    std::vector<std::int32_t> labels_;
    std::vector<std::string> label_names_;
};

/// The sample set owned by one tree node: distinct dataset row indices in
/// stable (ascending original) order. Value-semantic snapshot.
struct NodeSubset {
    std::vector<std::int32_t> indices;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }

    static NodeSubset full(std::size_t n) {
        NodeSubset s;
        s.indices.resize(n);
        std::iota(s.indices.begin(), s.indices.end(), 0);
        return s;
    }
};

/// Strictly increasing list of the distinct values feature j takes over the
/// subset: the candidate threshold pool of a node.
inline std::vector<double> distinct_values(const Dataset& ds,
                                           const NodeSubset& subset,
                                           std::size_t feature) {
    detail::require(!subset.empty(), "distinct_values: empty subset");
    detail::require(feature < ds.m(), "distinct_values: feature index out of range");
    std::vector<double> vals;
    vals.reserve(subset.size());
    const auto col = ds.column(feature);
    for (auto i : subset.indices) vals.push_back(col[static_cast<std::size_t>(i)]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

/// Splits a subset on "feature <= threshold". Left gets the samples
/// satisfying the predicate, right the rest; both keep the parent's index
/// order. Either side may be empty.
inline std::pair<NodeSubset, NodeSubset> apply_split(const Dataset& ds,
                                                     const NodeSubset& subset,
                                                     std::size_t feature,
                                                     double threshold) {
    detail::require(feature < ds.m(), "apply_split: feature index out of range");
    NodeSubset left, right;
    const auto col = ds.column(feature);
    for (auto i : subset.indices) {
        if (col[static_cast<std::size_t>(i)] <= threshold)
            left.indices.push_back(i);
        else
            right.indices.push_back(i);
    }
    return {std::move(left), std::move(right)};
}

} // namespace ice
