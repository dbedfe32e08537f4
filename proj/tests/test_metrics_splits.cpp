#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "test_util.hpp"

using namespace tpgc;
using tpgc::testing::random_graph;

TEST(AucAp, FourPointCase) {
    auto m = auc_ap({{0.9, 1}, {0.8, 0}, {0.7, 1}, {0.1, 0}});
    EXPECT_NEAR(m.auc, 0.75, 1e-15);
    EXPECT_NEAR(m.ap, (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
}

TEST(AucAp, PerfectAndReversed) {
    auto perfect = auc_ap({{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}});
    EXPECT_DOUBLE_EQ(perfect.auc, 1.0);
    EXPECT_DOUBLE_EQ(perfect.ap, 1.0);
    auto reversed = auc_ap({{0.1, 1}, {0.9, 0}});
    EXPECT_DOUBLE_EQ(reversed.auc, 0.0);
    EXPECT_DOUBLE_EQ(reversed.ap, 0.5);
}

TEST(AucAp, TiesCountHalf) {
    auto m = auc_ap({{0.5, 1}, {0.5, 0}});
    EXPECT_DOUBLE_EQ(m.auc, 0.5);
    EXPECT_DOUBLE_EQ(m.ap, 0.5);
}

TEST(AucAp, SingleClassOrBadLabelThrows) {
    EXPECT_THROW(auc_ap({{0.1, 1}, {0.2, 1}}), InvalidArgument);
    EXPECT_THROW(auc_ap({{0.1, 0}}), InvalidArgument);
    EXPECT_THROW(auc_ap({{0.1, 0}, {0.2, 2}}), InvalidArgument);
}

TEST(AucAp, InvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<ScoredLabel> s, t;
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng);
        const int y = u(rng) + 0.8 * x > 0 ? 1 : 0;
        s.push_back({x, y});
        t.push_back({1.0 / (1.0 + std::exp(-2.0 * x)), y});
    }
    auto a = auc_ap(s), b = auc_ap(t);
    EXPECT_NEAR(a.auc, b.auc, 1e-12);
    EXPECT_NEAR(a.ap, b.ap, 1e-12);
}

TEST(AucAp, AucMatchesPairCount) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> d(0, 9);
    std::vector<ScoredLabel> s;
    for (int i = 0; i < 60; ++i) s.push_back({static_cast<double>(d(rng)), d(rng) < 4 ? 1 : 0});
    double wins = 0, pairs = 0;
    for (const auto& p : s)
        for (const auto& n : s)
            if (p.label == 1 && n.label == 0) {
                pairs += 1;
                wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
            }
    EXPECT_NEAR(auc_ap(s).auc, wins / pairs, 1e-12);
}

TEST(Accuracy, ArgmaxOverMask) {
    DenseMatrix p{{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}};
    EXPECT_DOUBLE_EQ(accuracy(p, {0, 1, 1}, {0, 1, 2}), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(accuracy(p, {0, 1, 1}, {0, 1}), 1.0);
    EXPECT_THROW(accuracy(p, {0, 1, 1}, {}), InvalidArgument);
}

TEST(Homophily, SameLabelEverywhereIsOne) {
    std::mt19937_64 rng(5);
    auto g = random_graph(rng, 15, 0.3);
    EXPECT_DOUBLE_EQ(homophily(g, std::vector<int>(15, 2)), 1.0);
}

TEST(Homophily, BipartiteAcrossLabelsIsZero) {
    std::vector<Entry> e;
    for (Index i = 0; i < 4; ++i)
        for (Index j = 4; j < 8; ++j) e.push_back({i, j, 1.0});
    auto g = SparseAdjacency::from_undirected(8, e);
    EXPECT_DOUBLE_EQ(homophily(g, {0, 0, 0, 0, 1, 1, 1, 1}), 0.0);
    EXPECT_DOUBLE_EQ(homophily(renormalize(g), {0, 0, 0, 0, 1, 1, 1, 1}), 0.0);  // diagonal ignored
}

TEST(Homophily, MatchesCountOracleAndPermutationInvariant) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> lab(-1, 2);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 12 + t;
        auto g = random_graph(rng, n, 0.3, true);
        std::vector<int> labels(n);
        for (int& l : labels) l = lab(rng);
        double same = 0, total = 0, wsame = 0, wtotal = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double w = g.at(i, j);
                if (i == j || w == 0.0 || labels[i] < 0 || labels[j] < 0) continue;
                total += 1;
                wtotal += w;
                if (labels[i] == labels[j]) {
                    same += 1;
                    wsame += w;
                }
            }
        if (total == 0) continue;
        EXPECT_NEAR(homophily(g, labels), same / total, 1e-14);
        EXPECT_NEAR(weighted_homophily(g, labels), wsame / wtotal, 1e-14);

        std::vector<Index> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Entry> pe;
        for (const auto& e : g.entries()) pe.push_back({perm[e.row], perm[e.col], e.weight});
        std::vector<int> pl(n);
        for (std::size_t i = 0; i < n; ++i) pl[perm[i]] = labels[i];
        auto pg = SparseAdjacency::from_entries(n, pe, true);
        EXPECT_NEAR(homophily(pg, pl), homophily(g, labels), 1e-14);
    }
}

TEST(Homophily, Errors) {
    auto g = SparseAdjacency::identity(3);
    EXPECT_THROW(homophily(g, {0, 1, 0}), InvalidArgument);
    EXPECT_THROW(homophily(g, {0, 1}), DimensionError);
    auto neg = SparseAdjacency::from_undirected(2, {{0, 1, -1.0}});
    EXPECT_THROW(weighted_homophily(neg, {0, 1}), InvalidArgument);
}

TEST(MeanStd, PopulationFormula) {
    auto r = mean_std({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(r.mean, 2.5);
    EXPECT_DOUBLE_EQ(r.std, std::sqrt(1.25));
    EXPECT_DOUBLE_EQ(mean_std({7.0}).std, 0.0);
    EXPECT_THROW(mean_std({}), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Splits

namespace {

std::vector<int> cora_like_labels() {
    const std::vector<std::size_t> sizes{351, 217, 418, 818, 426, 298, 180};
    std::vector<int> labels;
    for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), sizes[c], static_cast<int>(c));
    return labels;
}

}  // namespace

TEST(SplitNodes, OnePercentOfCoraScale) {
    auto labels = cora_like_labels();
    ASSERT_EQ(labels.size(), 2708u);
    auto s = split_nodes(labels, TrainSpec::fraction_of_class(0.01), 0.5, 1);
    EXPECT_EQ(s.train.size(), 27u);
    EXPECT_EQ(s.val.size(), 1354u);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), 2708u);
    std::vector<int> per_class(7, 0);
    for (Index i : s.train) ++per_class[labels[i]];
    EXPECT_EQ(per_class, (std::vector<int>{4, 2, 4, 8, 4, 3, 2}));
}

TEST(SplitNodes, DisjointSortedDeterministic) {
    auto labels = cora_like_labels();
    auto a = split_nodes(labels, TrainSpec::per_class(20), 0.2, 9);
    auto b = split_nodes(labels, TrainSpec::per_class(20), 0.2, 9);
    auto c = split_nodes(labels, TrainSpec::per_class(20), 0.2, 10);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.val, b.val);
    EXPECT_NE(a.train, c.train);
    EXPECT_EQ(a.train.size(), 140u);
    std::set<Index> all;
    for (const auto* part : {&a.train, &a.val, &a.test}) {
        EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
        all.insert(part->begin(), part->end());
    }
    EXPECT_EQ(all.size(), labels.size());
}

TEST(SplitNodes, UnlabeledNeverSplit) {
    std::vector<int> labels{0, 0, kUnlabeled, 1, 1, kUnlabeled, 0, 1};
    auto s = split_nodes(labels, TrainSpec::per_class(1), 0.5, 2);
    for (const auto* part : {&s.train, &s.val, &s.test})
        for (Index i : *part) EXPECT_NE(labels[i], kUnlabeled);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), 6u);
}

TEST(SplitNodes, Errors) {
    EXPECT_THROW(split_nodes({0, 0, 0, 1}, TrainSpec::per_class(2), 0.0, 1), InvalidArgument);   // class 1 too small
    EXPECT_NO_THROW(split_nodes({0, 0, 2, 2}, TrainSpec::per_class(1), 0.0, 1));  // unused label id is not a class
    EXPECT_THROW(split_nodes({0, 1, 0, 1}, TrainSpec::fraction_of_class(0.01), 0.0, 1), InvalidArgument);
    EXPECT_THROW(split_nodes({0, 1, 0, 1}, TrainSpec::per_class(1), 0.9, 1), InvalidArgument);  // overflow
    EXPECT_THROW(split_nodes({0, 1}, TrainSpec::per_class(1), 1.5, 1), InvalidArgument);
}

TEST(LinkSplit, FourCycle) {
    auto a = SparseAdjacency::from_undirected(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 0, 1}});
    auto s = link_split(a, 0.25, 0.25, 3);
    EXPECT_EQ(s.test_pos.size(), 1u);
    EXPECT_EQ(s.val_pos.size(), 1u);
    EXPECT_EQ(s.test_neg.size(), 1u);
    EXPECT_EQ(s.val_neg.size(), 1u);
    EXPECT_EQ(undirected_edges(s.train).size(), 2u);
    for (const auto& [i, j] : s.test_pos) EXPECT_FALSE(s.train.support().contains(i, j));
    // the only non-edges are the diagonals (0,2) and (1,3)
    std::set<NodePair> negs{s.test_neg[0], s.val_neg[0]};
    EXPECT_EQ(negs, (std::set<NodePair>{{0, 2}, {1, 3}}));
}

TEST(LinkSplit, ZeroFractionsKeepGraph) {
    std::mt19937_64 rng(8);
    auto a = random_graph(rng, 20, 0.3, true);
    auto s = link_split(a, 0.0, 0.0, 1);
    EXPECT_EQ(s.train.entries(), a.entries());
    EXPECT_TRUE(s.test_pos.empty());
}

TEST(LinkSplit, PartitionAndNegatives) {
    auto g = sbm_generate({40, 40}, 0.2, 0.02, 11);
    auto s = link_split(g.adjacency, 0.1, 0.05, 2);
    const auto E = undirected_edges(g.adjacency).size();
    EXPECT_EQ(s.test_pos.size(), E / 10);
    EXPECT_EQ(s.val_pos.size(), static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(E))));
    EXPECT_EQ(undirected_edges(s.train).size() + s.test_pos.size() + s.val_pos.size(), E);
    std::set<NodePair> neg(s.test_neg.begin(), s.test_neg.end());
    for (const auto& p : s.val_neg) EXPECT_FALSE(neg.count(p));
    for (const auto* part : {&s.test_neg, &s.val_neg})
        for (const auto& [i, j] : *part) {
            EXPECT_LT(i, j);
            EXPECT_FALSE(g.adjacency.support().contains(i, j));
        }
}

TEST(LinkSplit, KeepsSelfLoopsAndRejectsBadFractions) {
    auto a = SparseAdjacency::from_entries(3, {{0, 0, 2.0}, {0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}}, true);
    auto s = link_split(a, 0.0, 0.0, 1);
    EXPECT_DOUBLE_EQ(s.train.at(0, 0), 2.0);
    EXPECT_THROW(link_split(a, 0.6, 0.5, 1), InvalidArgument);
    EXPECT_THROW(link_split(SparseAdjacency::identity(3), 0.1, 0.1, 1), InvalidArgument);
}

TEST(SampleNonEdges, ExhaustionThrows) {
    auto a = SparseAdjacency::from_undirected(3, {{0, 1, 1}, {1, 2, 1}});
    Rng rng(1);
    EXPECT_EQ(sample_non_edges(a, 1, rng).front(), (NodePair{0, 2}));
    EXPECT_THROW(sample_non_edges(a, 2, rng), InvalidArgument);
}
