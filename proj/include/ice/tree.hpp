#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ice/dataset.hpp"
#include "ice/error.hpp"

namespace ice {

/// A "feature <= threshold" predicate together with its association score
/// against the ensemble: aggregated chi-squared statistic, total degrees of
/// freedom, and the natural-log upper-tail probability.
struct CandidateSplit {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double statistic = 0.0;
    std::int64_t dof = 0;
    double log_p = 0.0;
};

struct TreeNode {
    std::int32_t id = -1;
    std::int32_t depth = 0;
    NodeSubset subset;
    std::optional<CandidateSplit> split; // present iff internal
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf_cluster = -1;      // assigned iff leaf

    bool is_leaf() const { return left < 0; }
};

/// One tree expansion, in execution order.
struct ExpansionRecord {
    std::int32_t node_id = -1;
    std::int32_t feature = -1;
    double threshold = 0.0;
    double statistic = 0.0;
    std::int64_t dof = 0;
    double log_p = 0.0;
};

/// Finalized binary clustering tree. Node ids are creation-order; leaf
/// cluster ids run 0..leaves-1 in leaf creation order. Immutable and safe to
/// share across threads.
class Tree {
public:
    Tree(std::vector<TreeNode> nodes,
         std::size_t k_target,
         bool early_stop,
         std::vector<ExpansionRecord> trace)
        : nodes_(std::move(nodes)),
          k_target_(k_target),
          early_stop_(early_stop),
          trace_(std::move(trace)) {
        for (const auto& node : nodes_)
            if (node.is_leaf()) leaf_ids_.push_back(node.id);
        validate();
    }

    const TreeNode& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const TreeNode& root() const { return nodes_.front(); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t n() const { return root().subset.size(); }

    std::size_t k_target() const { return k_target_; }
    bool early_stop() const { return early_stop_; }

    const std::vector<std::int32_t>& leaf_ids() const { return leaf_ids_; }
    std::size_t leaf_count() const { return leaf_ids_.size(); }

    const std::vector<ExpansionRecord>& expansion_trace() const { return trace_; }

    /// Cluster id per sample, taken from the unique leaf containing it.
    std::vector<std::int32_t> assign_clusters() const {
        std::vector<std::int32_t> labels(n(), -1);
        for (auto id : leaf_ids_) {
            const auto& leaf = node(id);
            for (auto i : leaf.subset.indices) {
                detail::require(i >= 0 && static_cast<std::size_t>(i) < labels.size(),
                                "assign_clusters: sample index out of range");
                detail::require(labels[static_cast<std::size_t>(i)] == -1,
                                "assign_clusters: sample appears in two leaves");
                labels[static_cast<std::size_t>(i)] = leaf.leaf_cluster;
            }
        }
        for (auto l : labels)
            detail::require(l >= 0, "assign_clusters: sample missing from every leaf");
        return labels;
    }

private:
    // Structural contract: exactly the invariants the builder and the file
    // loader both promise. Runs once at construction.
    void validate() const {
        detail::require(!nodes_.empty(), "tree: no nodes");
        detail::require(!leaf_ids_.empty(), "tree: no leaves");
        detail::require(leaf_ids_.size() <= k_target_, "tree: more leaves than k_target");
        detail::require(trace_.size() + 1 == leaf_ids_.size(),
                        "tree: trace length must be #leaves - 1");
        std::int32_t next_cluster = 0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& node = nodes_[i];
            detail::require(node.id == static_cast<std::int32_t>(i),
                            "tree: node ids must be dense creation order");
            detail::require(!node.subset.empty(), "tree: node with empty subset");
            if (node.is_leaf()) {
                detail::require(!node.split && node.right < 0, "tree: leaf with split state");
                detail::require(node.leaf_cluster == next_cluster++,
                                "tree: leaf cluster ids must follow leaf creation order");
            } else {
                detail::require(node.split.has_value() && node.right >= 0 &&
                                    node.leaf_cluster < 0,
                                "tree: internal node missing split or children");
                const auto& l = nodes_[static_cast<std::size_t>(node.left)];
                const auto& r = nodes_[static_cast<std::size_t>(node.right)];
                detail::require(l.depth == node.depth + 1 && r.depth == node.depth + 1,
                                "tree: child depth mismatch");
                detail::require(l.subset.size() + r.subset.size() == node.subset.size(),
                                "tree: children do not cover parent subset");
            }
        }
        // Leaf subsets partition the root subset: assign_clusters re-checks
        // exactness per sample; here we only need it to not throw.
        (void)assign_clusters();
    }

    std::vector<TreeNode> nodes_;
    std::size_t k_target_;
    bool early_stop_;
    std::vector<ExpansionRecord> trace_;
    std::vector<std::int32_t> leaf_ids_;
};

} // namespace ice
