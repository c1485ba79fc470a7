#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ice/dataset.hpp"
#include "ice/ensemble.hpp"
#include "ice/error.hpp"
#include "ice/split_search.hpp"
#include "ice/tree.hpp"

namespace ice {

struct BuildConfig {
    std::size_t k_target = 1;
    std::size_t min_side = 5;
    unsigned threads = 1;
};

namespace detail {

struct FrontierEntry {
    std::int32_t node_id = -1;
    std::optional<SearchOutcome> outcome; // scored at most once per node
};

} // namespace detail

/// Grows the clustering tree: the frontier holds current leaves, each leaf
/// is scored by optimal_split exactly once, and the leaf whose best split
/// has the smallest log tail probability (ties to the older node) expands
/// until k_target leaves exist or no frontier node admits a split. Running
/// out of splittable nodes is a normal outcome reported via
/// Tree::early_stop, not an error.
inline Tree build_tree(const Dataset& ds,
                       const Ensemble& ensemble,
                       const BuildConfig& config) {
    detail::require_input(config.k_target >= 1, "build_tree: k_target must be >= 1");
    detail::require_input(config.min_side >= 1, "build_tree: min_side must be >= 1");
    detail::require_input(ensemble.n() == ds.n(),
                          "build_tree: ensemble length does not match dataset");

    std::vector<TreeNode> nodes;
    nodes.push_back(TreeNode{0, 0, NodeSubset::full(ds.n()), std::nullopt, -1, -1, -1});

    std::vector<detail::FrontierEntry> frontier;
    frontier.push_back({0, std::nullopt});
    std::vector<ExpansionRecord> trace;
    std::size_t leaves = 1;
    bool early_stop = false;

    while (leaves < config.k_target) {
        // Score any frontier node that has not been scored yet; subsets are
        // immutable, so a cached outcome never changes.
        for (auto& entry : frontier)
            if (!entry.outcome)
                entry.outcome = optimal_split(ds, ensemble, nodes[entry.node_id].subset,
                                              config.min_side, config.threads);
        std::erase_if(frontier, [](const detail::FrontierEntry& e) {
            return !e.outcome->best.has_value();
        });
        if (frontier.empty()) {
            early_stop = true;
            break;
        }

        // Minimal log_p wins; exact float comparison with creation order as
        // the tie-breaker keeps the choice reproducible.
        std::size_t pick = 0;
        for (std::size_t i = 1; i < frontier.size(); ++i)
            if (frontier[i].outcome->best->log_p < frontier[pick].outcome->best->log_p)
                pick = i;

        const std::int32_t parent_id = frontier[pick].node_id;
        const CandidateSplit split = *frontier[pick].outcome->best;
        auto [left_subset, right_subset] =
            apply_split(ds, nodes[parent_id].subset, split.feature, split.threshold);
        detail::require(left_subset.size() >= config.min_side &&
                            right_subset.size() >= config.min_side,
                        "build_tree: selected split violates the size guard");

        const auto left_id = static_cast<std::int32_t>(nodes.size());
        const auto right_id = left_id + 1;
        const std::int32_t child_depth = nodes[parent_id].depth + 1;
        nodes[parent_id].split = split;
        nodes[parent_id].left = left_id;
        nodes[parent_id].right = right_id;
        nodes.push_back(TreeNode{left_id, child_depth, std::move(left_subset),
                                 std::nullopt, -1, -1, -1});
        nodes.push_back(TreeNode{right_id, child_depth, std::move(right_subset),
                                 std::nullopt, -1, -1, -1});
        trace.push_back(ExpansionRecord{parent_id, split.feature, split.threshold,
                                        split.statistic, split.dof, split.log_p});

        frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));
        frontier.push_back({left_id, std::nullopt});
        frontier.push_back({right_id, std::nullopt});
        ++leaves;
    }

    std::int32_t next_cluster = 0;
    for (auto& node : nodes)
        if (node.is_leaf()) node.leaf_cluster = next_cluster++;

    return Tree(std::move(nodes), config.k_target, early_stop, std::move(trace));
}

} // namespace ice
