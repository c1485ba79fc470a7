#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "ice/contingency.hpp"
#include "ice/dataset.hpp"
#include "ice/ensemble.hpp"
#include "ice/parallel.hpp"
#include "ice/tree.hpp"

namespace ice {

struct SearchOutcome {
    std::optional<CandidateSplit> best;
    std::size_t evaluated = 0; // admissible candidates actually scored
};

namespace detail {

struct FeatureScan {
    bool found = false;
    double statistic = 0.0;
    double threshold = 0.0;
    std::size_t evaluated = 0;
};

// Sorted incremental scan of one feature. Starts with every sample on the
// right, then moves each ascending value-group to the left as a unit, so
// each scored state is exactly the realizable predicate "feature <= v". One
// table set serves all thresholds of the feature.
inline FeatureScan scan_feature(const Dataset& ds,
                                const NodeSubset& subset,
                                std::size_t feature,
                                ContingencyTableSet tables,
                                std::size_t min_side) {
    FeatureScan result;
    const auto col = ds.column(feature);
    std::vector<std::int32_t> order = subset.indices;
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        return col[static_cast<std::size_t>(a)] < col[static_cast<std::size_t>(b)];
    });

    tables.reset_all(Side::right);
    const std::size_t n_sub = order.size();
    std::size_t i = 0;
    while (i < n_sub) {
        const double v = col[static_cast<std::size_t>(order[i])];
        do {
            tables.shift_sample(order[i], Side::right, Side::left);
            ++i;
        } while (i < n_sub && col[static_cast<std::size_t>(order[i])] == v);

        const std::size_t left = i;
        const std::size_t right = n_sub - i;
        if (right == 0) break; // v is the max: right side empty, nothing left to score
        if (left < min_side || right < min_side) continue;

        ++result.evaluated;
        const double stat = tables.aggregate_statistic();
        if (!result.found || stat > result.statistic) {
            result.found = true;
            result.statistic = stat;
            result.threshold = v;
        }
    }
    return result;
}

} // namespace detail

/// Exhaustive best-split search over every (feature, observed threshold)
/// pair in the subset, skipping candidates that would leave either side
/// smaller than min_side. Features may be scanned concurrently; the
/// reduction is by descending statistic with ties broken toward the lower
/// feature index, then the lower threshold, so the outcome does not depend
/// on thread count. Returns an empty outcome when no candidate is
/// admissible (tiny subset or all-constant features).
inline SearchOutcome optimal_split(const Dataset& ds,
                                   const Ensemble& ensemble,
                                   const NodeSubset& subset,
                                   std::size_t min_side = 5,
                                   unsigned threads = 1) {
    detail::require(!subset.empty(), "optimal_split: empty subset");
    SearchOutcome outcome;
    if (subset.size() < 2 * min_side) return outcome;

    const ContingencyTableSet node_tables(ensemble, subset);
    std::vector<detail::FeatureScan> per_feature(ds.m());
    parallel_for(ds.m(), threads, [&](std::size_t j) {
        per_feature[j] = detail::scan_feature(ds, subset, j, node_tables, min_side);
    });

    std::int32_t best_feature = -1;
    double best_stat = 0.0;
    double best_threshold = 0.0;
    for (std::size_t j = 0; j < per_feature.size(); ++j) {
        const auto& scan = per_feature[j];
        outcome.evaluated += scan.evaluated;
        if (!scan.found) continue;
        if (best_feature < 0 || scan.statistic > best_stat) {
            best_feature = static_cast<std::int32_t>(j);
            best_stat = scan.statistic;
            best_threshold = scan.threshold;
        }
    }
    if (best_feature < 0) return outcome;

    // dof depends only on the node's label support, not on the candidate, so
    // the tail probability is needed just once, for the winner.
    SplitScore score;
    score.statistic = best_stat;
    for (std::size_t t = 0; t < node_tables.table_count(); ++t)
        score.dof += node_tables.width(t) - 1;
    score.log_p = score.dof >= 1 ? chi_sq_log_sf(score.statistic, score.dof) : 0.0;

    outcome.best = CandidateSplit{best_feature, best_threshold, score.statistic,
                                  score.dof, score.log_p};
    return outcome;
}

} // namespace ice
