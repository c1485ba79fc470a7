#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ice/chi_square.hpp"
#include "ice/dataset.hpp"
#include "ice/ensemble.hpp"
#include "ice/error.hpp"

namespace ice {

/// Where a sample sits relative to the current candidate split.
enum class Side : std::uint8_t { left = 0, right = 1 };

/// Aggregated association of one candidate split with every base partition:
/// sum of per-partition chi-squared statistics, summed degrees of freedom,
/// and the log upper-tail probability of that sum.
struct SplitScore {
    double statistic = 0.0;
    std::int64_t dof = 0;
    double log_p = 0.0;
};

/// One 2 x p_t contingency table per base partition, restricted to the
/// labels actually present in a node subset. Row 0 counts left-side samples,
/// row 1 right-side. Columns are node-local label ids; label_map translates
/// a partition's global labels (-1 = absent from the node). Mutable only
/// inside the single scan that owns it.
class ContingencyTableSet {
public:
    ContingencyTableSet(const Ensemble& ensemble, const NodeSubset& subset)
        : ensemble_(&ensemble) {
        const std::size_t c = ensemble.c();
        tables_.resize(c);
        label_maps_.resize(c);
        row_totals_.assign(c, {0, 0});
        col_totals_.resize(c);
        local_widths_.assign(c, 0);
        total_ = static_cast<std::int64_t>(subset.size());
        for (std::size_t t = 0; t < c; ++t) {
            const auto part = ensemble.partition(t);
            auto& map = label_maps_[t];
            map.assign(static_cast<std::size_t>(ensemble.alphabet_size(t)), -1);
            std::vector<std::int64_t> counts(map.size(), 0);
            for (auto i : subset.indices)
                ++counts[static_cast<std::size_t>(part[static_cast<std::size_t>(i)])];
            std::int32_t next_local = 0;
            for (std::size_t g = 0; g < counts.size(); ++g)
                if (counts[g] > 0) map[g] = next_local++;
            local_widths_[t] = next_local;
            tables_[t].assign(2 * static_cast<std::size_t>(next_local), 0);
            col_totals_[t].assign(static_cast<std::size_t>(next_local), 0);
            for (std::size_t g = 0; g < counts.size(); ++g)
                if (counts[g] > 0)
                    col_totals_[t][static_cast<std::size_t>(map[g])] = counts[g];
        }
    }

    std::size_t table_count() const { return tables_.size(); }
    std::int32_t width(std::size_t t) const { return local_widths_[t]; }
    std::int64_t total() const { return total_; }

    std::span<const std::int64_t> table(std::size_t t) const { return tables_[t]; }
    std::span<const std::int64_t> column_totals(std::size_t t) const { return col_totals_[t]; }
    std::pair<std::int64_t, std::int64_t> row_totals(std::size_t t) const { return row_totals_[t]; }

    /// Seats every subset sample on one side in O(c*p) using the cached
    /// column totals; the starting state of a sorted threshold scan.
    void reset_all(Side side) {
        const std::size_t row = side == Side::left ? 0 : 1;
        for (std::size_t t = 0; t < tables_.size(); ++t) {
            const auto width = static_cast<std::size_t>(local_widths_[t]);
            for (std::size_t l = 0; l < width; ++l) {
                tables_[t][row * width + l] = col_totals_[t][l];
                tables_[t][(1 - row) * width + l] = 0;
            }
            row_totals_[t] = side == Side::left
                                 ? std::pair<std::int64_t, std::int64_t>{total_, 0}
                                 : std::pair<std::int64_t, std::int64_t>{0, total_};
        }
    }

    /// Seats a sample on a side for the first time (table build-up).
    void place(std::int32_t sample, Side side) {
        const std::size_t row = side == Side::left ? 0 : 1;
        for (std::size_t t = 0; t < tables_.size(); ++t) {
            const std::int32_t local = local_label(t, sample);
            ++tables_[t][row * static_cast<std::size_t>(local_widths_[t]) +
                         static_cast<std::size_t>(local)];
            if (side == Side::left) ++row_totals_[t].first; else ++row_totals_[t].second;
        }
    }

    /// Moves one already-placed sample between sides, updating every table
    /// and its marginals. Equivalent to rebuilding from scratch with the new
    /// side assignment.
    void shift_sample(std::int32_t sample, Side from, Side to) {
        detail::require(from != to, "shift_sample: from and to sides are equal");
        const std::size_t from_row = from == Side::left ? 0 : 1;
        const std::size_t to_row = 1 - from_row;
        for (std::size_t t = 0; t < tables_.size(); ++t) {
            const std::int32_t local = local_label(t, sample);
            const auto width = static_cast<std::size_t>(local_widths_[t]);
            auto& from_cell = tables_[t][from_row * width + static_cast<std::size_t>(local)];
            detail::require(from_cell >= 1, "shift_sample: decrementing an empty cell");
            --from_cell;
            ++tables_[t][to_row * width + static_cast<std::size_t>(local)];
            auto& [left_total, right_total] = row_totals_[t];
            if (from == Side::left) { --left_total; ++right_total; }
            else                    { ++left_total; --right_total; }
        }
    }

    /// Sum of per-table statistics, summed dof (labels present in the node
    /// minus one, per table), and the tail probability of the sum. A node
    /// where every partition is single-label has dof 0 and p = 1 by
    /// definition.
    SplitScore aggregate_score() const {
        SplitScore score;
        score.statistic = aggregate_statistic();
        for (std::size_t t = 0; t < tables_.size(); ++t)
            score.dof += local_widths_[t] - 1;
        score.log_p = score.dof >= 1 ? chi_sq_log_sf(score.statistic, score.dof) : 0.0;
        return score;
    }

    /// Just the summed statistic; the cheap inner-loop form for ranking
    /// candidates within one node, where dof is constant.
    double aggregate_statistic() const {
        double stat = 0.0;
        for (std::size_t t = 0; t < tables_.size(); ++t)
            stat += chi_squared_stat(tables_[t], static_cast<std::size_t>(local_widths_[t]));
        return stat;
    }

private:
    std::int32_t local_label(std::size_t t, std::int32_t sample) const {
        const auto global = ensemble_->partition(t)[static_cast<std::size_t>(sample)];
        const auto local = label_maps_[t][static_cast<std::size_t>(global)];
        detail::require(local >= 0, "contingency: sample label not present in node");
        return local;
    }

    const Ensemble* ensemble_;
    std::vector<std::vector<std::int64_t>> tables_;
    std::vector<std::vector<std::int32_t>> label_maps_;
    std::vector<std::pair<std::int64_t, std::int64_t>> row_totals_;
    std::vector<std::vector<std::int64_t>> col_totals_;
    std::vector<std::int32_t> local_widths_;
    std::int64_t total_;
};

/// Builds the table set for a node subset with every sample pre-seated on
/// its given side.
inline ContingencyTableSet build_tables(const Ensemble& ensemble,
                                        const NodeSubset& subset,
                                        std::span<const Side> side_assignment) {
    detail::require(side_assignment.size() == subset.size(),
                    "build_tables: one side flag per subset sample required");
    ContingencyTableSet tables(ensemble, subset);
    for (std::size_t pos = 0; pos < subset.indices.size(); ++pos)
        tables.place(subset.indices[pos], side_assignment[pos]);
    return tables;
}

} // namespace ice
