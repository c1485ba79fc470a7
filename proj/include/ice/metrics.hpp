#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ice/error.hpp"
#include "ice/tree.hpp"

namespace ice {

struct MetricsReport {
    double purity = 0.0;
    double f1 = 0.0;
    double nmi = 0.0;
    std::size_t max_depth = 0;
    double avg_depth = 0.0;
    std::size_t n = 0;
    std::size_t leaves = 0;
};

namespace detail {

// Joint count matrix of two label vectors after dense relabeling, plus the
// marginals. The backbone of all three partition-quality metrics.
struct JointCounts {
    std::vector<std::int64_t> joint; // a_classes x b_classes, row-major
    std::vector<std::int64_t> a_sizes;
    std::vector<std::int64_t> b_sizes;
    std::size_t n = 0;

    JointCounts(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
        require_input(a.size() == b.size(), "metrics: label vectors differ in length");
        require_input(!a.empty(), "metrics: empty label vectors");
        n = a.size();
        const auto dense = [](std::span<const std::int32_t> v) {
            std::vector<std::int32_t> sorted(v.begin(), v.end());
            std::sort(sorted.begin(), sorted.end());
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            return sorted;
        };
        const auto ua = dense(a);
        const auto ub = dense(b);
        const auto index_of = [](const std::vector<std::int32_t>& u, std::int32_t x) {
            return static_cast<std::size_t>(
                std::lower_bound(u.begin(), u.end(), x) - u.begin());
        };
        a_sizes.assign(ua.size(), 0);
        b_sizes.assign(ub.size(), 0);
        joint.assign(ua.size() * ub.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ia = index_of(ua, a[i]);
            const auto ib = index_of(ub, b[i]);
            ++a_sizes[ia];
            ++b_sizes[ib];
            ++joint[ia * ub.size() + ib];
        }
    }

    std::size_t rows() const { return a_sizes.size(); }
    std::size_t cols() const { return b_sizes.size(); }
};

inline std::int64_t pairs_of(std::int64_t count) { return count * (count - 1) / 2; }

} // namespace detail

/// Fraction of samples falling in the majority true class of their
/// predicted cluster.
inline double purity(std::span<const std::int32_t> pred,
                     std::span<const std::int32_t> truth) {
    const detail::JointCounts jc(pred, truth);
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < jc.rows(); ++i) {
        std::int64_t best = 0;
        for (std::size_t j = 0; j < jc.cols(); ++j)
            best = std::max(best, jc.joint[i * jc.cols() + j]);
        hits += best;
    }
    return static_cast<double>(hits) / static_cast<double>(jc.n);
}

/// Pairwise (co-clustering) F1: precision and recall over all C(N,2) sample
/// pairs, a pair counting as positive when its two samples share a cluster.
/// When neither side co-clusters any pair at all the score is defined as 1;
/// it is 0 whenever precision + recall is 0.
inline double pairwise_f1(std::span<const std::int32_t> pred,
                          std::span<const std::int32_t> truth) {
    const detail::JointCounts jc(pred, truth);
    detail::require_input(jc.n >= 2, "pairwise_f1: need at least two samples");
    std::int64_t tp = 0, pred_pairs = 0, true_pairs = 0;
    for (auto v : jc.joint) tp += detail::pairs_of(v);
    for (auto v : jc.a_sizes) pred_pairs += detail::pairs_of(v);
    for (auto v : jc.b_sizes) true_pairs += detail::pairs_of(v);
    if (pred_pairs == 0 && true_pairs == 0) return 1.0;
    const double precision =
        pred_pairs > 0 ? static_cast<double>(tp) / static_cast<double>(pred_pairs) : 0.0;
    const double recall =
        true_pairs > 0 ? static_cast<double>(tp) / static_cast<double>(true_pairs) : 0.0;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

/// Mutual information normalized by the arithmetic mean of the two
/// entropies (natural logs). Two degenerate single-cluster partitions score
/// 1; exactly one degenerate side scores 0.
inline double nmi(std::span<const std::int32_t> pred,
                  std::span<const std::int32_t> truth) {
    const detail::JointCounts jc(pred, truth);
    const auto total = static_cast<double>(jc.n);
    const auto entropy = [&](std::vector<std::int64_t> sizes) {
        std::sort(sizes.begin(), sizes.end()); // order-free sum, see below
        double h = 0.0;
        for (auto s : sizes)
            if (s > 0) {
                const double p = static_cast<double>(s) / total;
                h -= p * std::log(p);
            }
        return h;
    };
    const double h_pred = entropy(jc.a_sizes);
    const double h_true = entropy(jc.b_sizes);
    if (h_pred == 0.0 && h_true == 0.0) return 1.0;
    if (h_pred == 0.0 || h_true == 0.0) return 0.0;
    // Summing the cell terms in sorted order makes the result a function of
    // the partition structure alone, so relabeling either side cannot move
    // even the last bit.
    std::vector<double> terms;
    terms.reserve(jc.joint.size());
    for (std::size_t i = 0; i < jc.rows(); ++i)
        for (std::size_t j = 0; j < jc.cols(); ++j) {
            const auto count = jc.joint[i * jc.cols() + j];
            if (count == 0) continue;
            const double p = static_cast<double>(count) / total;
            const double pa = static_cast<double>(jc.a_sizes[i]) / total;
            const double pb = static_cast<double>(jc.b_sizes[j]) / total;
            terms.push_back(p * std::log(p / (pa * pb)));
        }
    std::sort(terms.begin(), terms.end());
    double info = 0.0;
    for (double t : terms) info += t;
    return std::clamp(info / (0.5 * (h_pred + h_true)), 0.0, 1.0);
}

/// Maximum and mean leaf depth in edges from the root (a root-only tree is
/// depth 0).
inline std::pair<std::size_t, double> depth_metrics(const Tree& tree) {
    std::size_t max_depth = 0;
    double sum = 0.0;
    for (auto id : tree.leaf_ids()) {
        const auto d = static_cast<std::size_t>(tree.node(id).depth);
        max_depth = std::max(max_depth, d);
        sum += static_cast<double>(d);
    }
    return {max_depth, sum / static_cast<double>(tree.leaf_count())};
}

/// Full report against ground truth.
inline MetricsReport evaluate(const Tree& tree, std::span<const std::int32_t> truth) {
    detail::require_input(truth.size() == tree.n(),
                          "evaluate: truth labels do not match tree sample count");
    const auto pred = tree.assign_clusters();
    MetricsReport report;
    report.purity = purity(pred, truth);
    report.f1 = pairwise_f1(pred, truth);
    report.nmi = nmi(pred, truth);
    const auto [max_depth, avg_depth] = depth_metrics(tree);
    report.max_depth = max_depth;
    report.avg_depth = avg_depth;
    report.n = tree.n();
    report.leaves = tree.leaf_count();
    return report;
}

} // namespace ice
