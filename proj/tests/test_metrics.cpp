#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "ice/metrics.hpp"
#include "oracles.hpp"

using namespace ice;

namespace {

Tree chain_tree(const std::vector<std::size_t>& leaf_sizes) {
    // caterpillar: each internal node splits off leaf_sizes[i] on the left
    std::size_t n = 0;
    for (auto s : leaf_sizes) n += s;
    std::vector<double> values(n);
    std::size_t at = 0;
    for (std::size_t g = 0; g < leaf_sizes.size(); ++g)
        for (std::size_t i = 0; i < leaf_sizes[g]; ++i) values[at++] = static_cast<double>(g);
    const std::size_t count = n;
    const Dataset ds({"x"}, std::move(values), count);

    std::vector<TreeNode> nodes;
    std::vector<ExpansionRecord> trace;
    nodes.push_back(TreeNode{0, 0, NodeSubset::full(count), std::nullopt, -1, -1, -1});
    std::int32_t open = 0;
    for (std::size_t g = 0; g + 1 < leaf_sizes.size(); ++g) {
        const auto threshold = static_cast<double>(g);
        auto [left, right] = apply_split(ds, nodes[static_cast<std::size_t>(open)].subset, 0, threshold);
        const auto left_id = static_cast<std::int32_t>(nodes.size());
        const auto right_id = left_id + 1;
        auto& parent = nodes[static_cast<std::size_t>(open)];
        parent.split = CandidateSplit{0, threshold, 1.0, 1, -1.0};
        parent.left = left_id;
        parent.right = right_id;
        const auto depth = parent.depth + 1;
        trace.push_back(ExpansionRecord{open, 0, threshold, 1.0, 1, -1.0});
        nodes.push_back(TreeNode{left_id, depth, std::move(left), std::nullopt, -1, -1, -1});
        nodes.push_back(TreeNode{right_id, depth, std::move(right), std::nullopt, -1, -1, -1});
        open = right_id;
    }
    std::int32_t cluster = 0;
    for (auto& node : nodes)
        if (node.is_leaf()) node.leaf_cluster = cluster++;
    return Tree(std::move(nodes), leaf_sizes.size(), false, std::move(trace));
}

Tree balanced_four_leaf() {
    std::vector<double> values;
    for (int g = 0; g < 4; ++g)
        for (int i = 0; i < 6; ++i) values.push_back(g);
    const Dataset ds({"x"}, std::move(values), 24);
    std::vector<TreeNode> nodes(7);
    const auto cut = [&](std::int32_t id, double thr, std::int32_t l, std::int32_t r) {
        auto [left, right] = apply_split(ds, nodes[static_cast<std::size_t>(id)].subset, 0, thr);
        nodes[static_cast<std::size_t>(id)].split = CandidateSplit{0, thr, 1.0, 1, -1.0};
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        nodes[static_cast<std::size_t>(l)] =
            TreeNode{l, nodes[static_cast<std::size_t>(id)].depth + 1, std::move(left),
                     std::nullopt, -1, -1, -1};
        nodes[static_cast<std::size_t>(r)] =
            TreeNode{r, nodes[static_cast<std::size_t>(id)].depth + 1, std::move(right),
                     std::nullopt, -1, -1, -1};
    };
    nodes[0] = TreeNode{0, 0, NodeSubset::full(24), std::nullopt, -1, -1, -1};
    cut(0, 1.0, 1, 2);
    cut(1, 0.0, 3, 4);
    cut(2, 2.0, 5, 6);
    std::int32_t cluster = 0;
    for (auto& node : nodes)
        if (node.is_leaf()) node.leaf_cluster = cluster++;
    std::vector<ExpansionRecord> trace{{0, 0, 1.0, 1.0, 1, -1.0},
                                       {1, 0, 0.0, 1.0, 1, -1.0},
                                       {2, 0, 2.0, 1.0, 1, -1.0}};
    return Tree(std::move(nodes), 4, false, std::move(trace));
}

} // namespace

TEST_CASE("purity pinned examples") {
    const std::vector<std::int32_t> same{0, 1, 2, 0, 1, 2};
    CHECK(purity(same, same) == 1.0);

    // clusters {A,A,A,B} and {B,B,B,B,A,A}: majorities 3 and 4 of 10
    const std::vector<std::int32_t> pred{0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
    const std::vector<std::int32_t> truth{0, 0, 0, 1, 1, 1, 1, 1, 0, 0};
    CHECK(purity(pred, truth) == Catch::Approx(0.7));

    // one predicted cluster: frequency of the majority class
    const std::vector<std::int32_t> one(6, 0);
    const std::vector<std::int32_t> classes{0, 0, 0, 0, 1, 2};
    CHECK(purity(one, classes) == Catch::Approx(4.0 / 6.0));
}

TEST_CASE("pairwise_f1 pinned examples") {
    const std::vector<std::int32_t> same{0, 0, 1, 1, 2};
    CHECK(pairwise_f1(same, same) == 1.0);

    // pred = one cluster, truth = two pairs: P = 2/6, R = 1
    const std::vector<std::int32_t> lumped{0, 0, 0, 0};
    const std::vector<std::int32_t> pairs{0, 0, 1, 1};
    CHECK(pairwise_f1(lumped, pairs) == Catch::Approx(0.5));

    // all singletons against co-clustered truth: zero recall
    const std::vector<std::int32_t> singletons{0, 1, 2, 3};
    CHECK(pairwise_f1(singletons, pairs) == 0.0);

    // no positive pairs on either side at all
    CHECK(pairwise_f1(singletons, std::vector<std::int32_t>{3, 2, 1, 0}) == 1.0);
}

TEST_CASE("nmi pinned examples") {
    const std::vector<std::int32_t> same{0, 0, 1, 1, 2, 2};
    CHECK(nmi(same, same) == 1.0);

    const std::vector<std::int32_t> one(6, 0);
    const std::vector<std::int32_t> multi{0, 0, 1, 1, 2, 2};
    CHECK(nmi(one, multi) == 0.0);
    CHECK(nmi(multi, one) == 0.0);
    CHECK(nmi(one, one) == 1.0); // both degenerate

    const std::vector<std::int32_t> a{0, 0, 1, 1};
    const std::vector<std::int32_t> b{0, 1, 0, 1};
    CHECK(nmi(a, b) == Catch::Approx(0.0).margin(1e-15)); // independent
}

TEST_CASE("metrics are invariant under relabeling") {
    Rng rng(60611);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.next_below(49);
        const auto pred = oracle::random_labels(rng, n, 5);
        const auto truth = oracle::random_labels(rng, n, 4);
        // bijective relabel: x -> 7 - x on [0,5), order-scrambling
        auto scrambled = pred;
        for (auto& l : scrambled) l = 7 - l;
        CHECK(purity(pred, truth) == purity(scrambled, truth));
        CHECK(pairwise_f1(pred, truth) == pairwise_f1(scrambled, truth));
        CHECK(nmi(pred, truth) == nmi(scrambled, truth));
        auto truth_scrambled = truth;
        for (auto& l : truth_scrambled) l = 9 - l;
        CHECK(purity(pred, truth) == purity(pred, truth_scrambled));
        CHECK(pairwise_f1(pred, truth) == pairwise_f1(pred, truth_scrambled));
        CHECK(nmi(pred, truth) == nmi(pred, truth_scrambled));
    }
}

TEST_CASE("metrics match the from-definition references") {
    Rng rng(424243);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.next_below(49);
        const auto pred = oracle::random_labels(rng, n, 1 + rng.next_below(6));
        const auto truth = oracle::random_labels(rng, n, 1 + rng.next_below(6));
        CHECK(purity(pred, truth) ==
              Catch::Approx(oracle::purity_reference(pred, truth)).margin(1e-12));
        CHECK(pairwise_f1(pred, truth) ==
              Catch::Approx(oracle::pairwise_f1_reference(pred, truth)).margin(1e-12));
        CHECK(nmi(pred, truth) ==
              Catch::Approx(oracle::nmi_reference(pred, truth)).margin(1e-12));
    }
}

TEST_CASE("self-comparison identities") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.next_below(30);
        const auto labels = oracle::random_labels(rng, n, 4);
        CHECK(purity(labels, labels) == 1.0);
        CHECK(pairwise_f1(labels, labels) == 1.0);
        bool multi = false;
        for (auto l : labels) multi |= l != labels[0];
        if (multi) CHECK(nmi(labels, labels) == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("metrics reject mismatched lengths") {
    const std::vector<std::int32_t> a{0, 1, 2};
    const std::vector<std::int32_t> b{0, 1};
    CHECK_THROWS_AS(purity(a, b), input_error);
    CHECK_THROWS_AS(pairwise_f1(a, b), input_error);
    CHECK_THROWS_AS(nmi(a, b), input_error);
}

TEST_CASE("depth metrics replicate the pinned tree shapes") {
    const auto two = chain_tree({6, 6});
    CHECK(depth_metrics(two) == std::pair<std::size_t, double>{1, 1.0});

    const auto four = balanced_four_leaf();
    CHECK(depth_metrics(four) == std::pair<std::size_t, double>{2, 2.0});

    const auto caterpillar = chain_tree({8, 8, 8}); // leaves at depths 1, 2, 2
    const auto [max_depth, avg_depth] = depth_metrics(caterpillar);
    CHECK(max_depth == 2);
    CHECK(avg_depth == Catch::Approx(5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("evaluate bundles the full report") {
    const auto tree = balanced_four_leaf();
    std::vector<std::int32_t> truth(24);
    for (std::size_t i = 0; i < 24; ++i) truth[i] = static_cast<std::int32_t>(i / 6);
    const auto report = evaluate(tree, truth);
    CHECK(report.purity == 1.0);
    CHECK(report.f1 == 1.0);
    CHECK(report.nmi == Catch::Approx(1.0));
    CHECK(report.max_depth == 2);
    CHECK(report.avg_depth == 2.0);
    CHECK(report.leaves == 4);
    CHECK(report.n == 24);
    CHECK(report.avg_depth <= static_cast<double>(report.max_depth));
}
