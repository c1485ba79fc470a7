#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ice/dataset.hpp"
#include "ice/ensemble.hpp"
#include "ice/error.hpp"
#include "ice/rng.hpp"

namespace ice {

/// Z-scores every feature with the population standard deviation; constant
/// features map to all zeros. The result feeds the base learners only —
/// tree thresholds always live in the original feature space.
inline Dataset standardize(const Dataset& ds) {
    const std::size_t n = ds.n();
    std::vector<double> values;
    values.reserve(n * ds.m());
    for (std::size_t j = 0; j < ds.m(); ++j) {
        const auto col = ds.column(j);
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double std_dev = std::sqrt(var);
        if (std_dev == 0.0) {
            values.insert(values.end(), n, 0.0);
        } else {
            for (double v : col) values.push_back((v - mean) / std_dev);
        }
    }
    return Dataset(ds.feature_names(), std::move(values), n,
                   ds.labels(), ds.label_names());
}

struct KMeansResult {
    std::vector<std::int32_t> labels; // dense ids in [0, realized_k)
    std::vector<double> centroids;    // realized_k x m, row-major
    std::size_t realized_k = 0;       // clusters left after empty-cluster handling
    double inertia = 0.0;
    int iterations = 0;
};

namespace detail {

inline double sq_distance(const double* a, const double* b, std::size_t m) {
    double d = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double diff = a[j] - b[j];
        d += diff * diff;
    }
    return d;
}

// Distance-weighted randomized seeding: each next centroid is drawn with
// probability proportional to squared distance from the chosen ones.
// https://en.wikipedia.org/wiki/K-means%2B%2B
inline std::vector<double> seed_centroids(const std::vector<double>& points,
                                          std::size_t n, std::size_t m,
                                          std::size_t k, Rng& rng) {
    std::vector<double> centroids;
    centroids.reserve(k * m);
    const auto first = static_cast<std::size_t>(rng.next_below(n));
    centroids.insert(centroids.end(), points.begin() + first * m,
                     points.begin() + (first + 1) * m);
    std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t picked = 1; picked < k; ++picked) {
        const double* last = centroids.data() + (picked - 1) * m;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            best_d2[i] = std::min(best_d2[i], sq_distance(&points[i * m], last, m));
            total += best_d2[i];
        }
        std::size_t chosen;
        if (total > 0.0) {
            const double u = rng.next_unit() * total;
            double cum = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += best_d2[i];
                if (u < cum) { chosen = i; break; }
            }
        } else {
            chosen = static_cast<std::size_t>(rng.next_below(n)); // all points duplicated
        }
        centroids.insert(centroids.end(), points.begin() + chosen * m,
                         points.begin() + (chosen + 1) * m);
    }
    return centroids;
}

inline double assign_labels(const std::vector<double>& points,
                            const std::vector<double>& centroids,
                            std::size_t n, std::size_t m, std::size_t k,
                            std::vector<std::int32_t>& labels) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::int32_t best_c = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = sq_distance(&points[i * m], &centroids[c * m], m);
            if (d < best) { best = d; best_c = static_cast<std::int32_t>(c); }
        }
        labels[i] = best_c;
        inertia += best;
    }
    return inertia;
}

} // namespace detail

/// Lloyd iterations from distance-weighted random seeding. Stops on stable
/// assignments, total squared centroid movement below 1e-4, or 100
/// iterations. Clusters that empty out are re-seeded from the point
/// currently farthest from its own centroid; labels are densely renumbered
/// at the end if any cluster stayed empty. Fully deterministic per seed.
inline KMeansResult kmeans(const Dataset& points, std::size_t k, std::uint64_t seed) {
    const std::size_t n = points.n();
    const std::size_t m = points.m();
    detail::require_input(k >= 1 && k <= n, "kmeans: k must be in [1, n]");

    // Row-major copy keeps each point contiguous for the distance loops.
    std::vector<double> rows(n * m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto col = points.column(j);
        for (std::size_t i = 0; i < n; ++i) rows[i * m + j] = col[i];
    }

    Rng rng(seed);
    std::vector<double> centroids = detail::seed_centroids(rows, n, m, k, rng);
    std::vector<std::int32_t> labels(n);
    double inertia = detail::assign_labels(rows, centroids, n, m, k, labels);

    constexpr int max_iterations = 100;
    constexpr double movement_tolerance = 1e-4;
    int iterations = 0;
    std::vector<double> next(k * m);
    std::vector<std::int64_t> counts(k);
    std::vector<std::int32_t> next_labels(n);
    while (iterations < max_iterations) {
        ++iterations;
        std::fill(next.begin(), next.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            ++counts[c];
            for (std::size_t j = 0; j < m; ++j) next[c * m + j] += rows[i * m + j];
        }
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] > 0)
                for (std::size_t j = 0; j < m; ++j)
                    next[c * m + j] /= static_cast<double>(counts[c]);

        // Re-seed empty clusters from the point farthest from its centroid,
        // excluding points already used for a re-seed this round.
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                const auto owner = static_cast<std::size_t>(labels[i]);
                const double d = detail::sq_distance(&rows[i * m], &next[owner * m], m);
                if (d > worst) { worst = d; worst_i = i; }
            }
            taken[worst_i] = true;
            for (std::size_t j = 0; j < m; ++j) next[c * m + j] = rows[worst_i * m + j];
        }

        double movement = 0.0;
        for (std::size_t v = 0; v < centroids.size(); ++v) {
            const double diff = next[v] - centroids[v];
            movement += diff * diff;
        }
        centroids.swap(next);

        const double next_inertia =
            detail::assign_labels(rows, centroids, n, m, k, next_labels);
        detail::require(next_inertia <= inertia * (1.0 + 1e-12) + 1e-9,
                        "kmeans: inertia increased across an iteration");
        const bool stable = next_labels == labels;
        labels.swap(next_labels);
        inertia = next_inertia;
        if (stable || movement < movement_tolerance) break;
    }

    // Dense renumbering in ascending original cluster id.
    std::vector<std::int32_t> remap(k, -1);
    for (auto l : labels) remap[static_cast<std::size_t>(l)] = 0;
    std::int32_t next_id = 0;
    KMeansResult result;
    for (std::size_t c = 0; c < k; ++c) {
        if (remap[c] < 0) continue;
        remap[c] = next_id++;
        result.centroids.insert(result.centroids.end(), centroids.begin() + c * m,
                                centroids.begin() + (c + 1) * m);
    }
    result.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        result.labels[i] = remap[static_cast<std::size_t>(labels[i])];
    result.realized_k = static_cast<std::size_t>(next_id);
    result.inertia = inertia;
    result.iterations = iterations;
    return result;
}

/// Base-partition protocol parameters: c runs with per-run cluster counts
/// drawn uniformly from [k_min, k_max].
struct EnsembleSpec {
    std::size_t c = 30;
    std::size_t k_min = 2;
    std::size_t k_max = 6;
    std::uint64_t seed = 0;
};

struct BaseRunPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
};

/// Expands an EnsembleSpec into the per-run cluster counts and seeds. Run t
/// draws its count from a stream derived from (seed, t) and hands an
/// independently derived seed to its k-means run, so any prefix of the plan
/// is stable under changes to c.
inline std::vector<BaseRunPlan> plan_ensemble(const EnsembleSpec& spec) {
    detail::require_input(spec.c >= 1, "ensemble spec: c must be >= 1");
    detail::require_input(spec.k_min >= 1 && spec.k_min <= spec.k_max,
                          "ensemble spec: empty cluster-count range");
    std::vector<BaseRunPlan> plan(spec.c);
    for (std::size_t t = 0; t < spec.c; ++t) {
        Rng draw(derive_seed(spec.seed, t, 0x6b)); // cluster-count stream
        plan[t].k = static_cast<std::size_t>(
            draw.next_in_range(static_cast<std::int64_t>(spec.k_min),
                               static_cast<std::int64_t>(spec.k_max)));
        plan[t].seed = derive_seed(spec.seed, t, 0x6d); // k-means stream
    }
    return plan;
}

/// The full base-generation protocol: standardize, then run one seeded
/// k-means per plan entry. Independent derived seeds make the result
/// identical whether runs execute sequentially or concurrently.
inline Ensemble generate_ensemble(const Dataset& ds, const EnsembleSpec& spec) {
    const Dataset standardized = standardize(ds);
    const auto plan = plan_ensemble(spec);
    std::vector<std::vector<std::int32_t>> partitions(plan.size());
    for (std::size_t t = 0; t < plan.size(); ++t)
        partitions[t] = kmeans(standardized, plan[t].k, plan[t].seed).labels;
    return Ensemble(std::move(partitions));
}

} // namespace ice
