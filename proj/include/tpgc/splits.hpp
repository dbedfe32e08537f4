#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "tpgc/error.hpp"
#include "tpgc/graph.hpp"
#include "tpgc/random.hpp"

namespace tpgc {

/// How many training nodes to draw per class: a fixed count, or a fraction of
/// each class's size (rounded to nearest).
struct TrainSpec {
    enum class Kind { per_class_count, fraction } kind = Kind::fraction;
    double value = 0.01;

    static TrainSpec per_class(std::size_t count) { return {Kind::per_class_count, static_cast<double>(count)}; }
    static TrainSpec fraction_of_class(double f) { return {Kind::fraction, f}; }
};

/// Stratified train draw, then `val_fraction` of all labeled nodes for
/// validation from the remainder; everything left is test. Unlabeled nodes are
/// never placed in a split.
inline Splits split_nodes(const std::vector<int>& labels, TrainSpec train, double val_fraction, std::uint64_t seed) {
    if (val_fraction < 0.0 || val_fraction > 1.0) throw InvalidArgument("split_nodes: val_fraction must lie in [0, 1]");
    std::vector<Index> labeled;
    int classes = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) continue;
        labeled.push_back(static_cast<Index>(i));
        classes = std::max(classes, labels[i] + 1);
    }
    std::vector<std::size_t> class_size(static_cast<std::size_t>(classes), 0);
    for (Index i : labeled) ++class_size[static_cast<std::size_t>(labels[i])];

    std::vector<std::size_t> quota(class_size.size());
    for (std::size_t c = 0; c < class_size.size(); ++c) {
        if (class_size[c] == 0) continue;
        quota[c] = train.kind == TrainSpec::Kind::per_class_count
                       ? static_cast<std::size_t>(train.value)
                       : static_cast<std::size_t>(std::llround(train.value * static_cast<double>(class_size[c])));
        if (quota[c] == 0) throw InvalidArgument("split_nodes: class " + std::to_string(c) + " gets no training nodes");
        if (quota[c] > class_size[c]) throw InvalidArgument("split_nodes: class " + std::to_string(c) + " is too small");
    }

    Rng rng(seed);
    std::vector<Index> order = labeled;
    rng.shuffle(order);

    Splits s;
    std::vector<Index> rest;
    std::vector<std::size_t> taken(quota.size(), 0);
    for (Index i : order) {
        auto c = static_cast<std::size_t>(labels[i]);
        if (taken[c] < quota[c]) {
            ++taken[c];
            s.train.push_back(i);
        } else {
            rest.push_back(i);
        }
    }
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(labeled.size())));
    if (n_val > rest.size()) throw InvalidArgument("split_nodes: train + validation exceed the labeled node count");
    s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

using NodePair = std::pair<Index, Index>;

struct LinkSplit {
    SparseAdjacency train;
    std::vector<NodePair> val_pos, val_neg, test_pos, test_neg;
};

/// Undirected off-diagonal edges (i < j) of a symmetric adjacency.
inline std::vector<NodePair> undirected_edges(const SparseAdjacency& a) {
    std::vector<NodePair> out;
    const auto& p = a.support();
    for (std::size_t k = 0; k < a.nnz(); ++k)
        if (p.row_of(k) < p.col_of(k)) out.emplace_back(p.row_of(k), p.col_of(k));
    return out;
}

/// `count` distinct unordered non-edges (i < j) of `graph`, avoiding `exclude`.
inline std::vector<NodePair> sample_non_edges(const SparseAdjacency& graph, std::size_t count, Rng& rng,
                                              const std::set<NodePair>& exclude = {}) {
    const std::size_t n = graph.n();
    const std::size_t possible = n * (n - 1) / 2;
    const std::size_t edges = undirected_edges(graph).size();
    if (count + exclude.size() + edges > possible) throw InvalidArgument("sample_non_edges: not enough non-edges");
    std::set<NodePair> chosen;
    std::vector<NodePair> out;
    while (out.size() < count) {
        auto i = static_cast<Index>(rng.index(n));
        auto j = static_cast<Index>(rng.index(n));
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        const NodePair pr{i, j};
        if (graph.support().contains(i, j) || exclude.count(pr) || chosen.count(pr)) continue;
        chosen.insert(pr);
        out.push_back(pr);
    }
    return out;
}

/// Holds out floor(test_fraction·|E|) and floor(val_fraction·|E|) undirected
/// edges as positives and draws as many non-edges of the full graph as negatives.
inline LinkSplit link_split(const SparseAdjacency& adjacency, double test_fraction, double val_fraction, std::uint64_t seed) {
    if (test_fraction < 0.0 || val_fraction < 0.0 || test_fraction + val_fraction >= 1.0) {
        throw InvalidArgument("link_split: fractions must be nonnegative and sum below 1");
    }
    auto edges = undirected_edges(adjacency);
    const auto E = edges.size();
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(E)));
    const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(E)));
    if (E == 0 || n_test + n_val >= E) throw InvalidArgument("link_split: insufficient edges");

    Rng rng(seed);
    rng.shuffle(edges);
    LinkSplit s;
    s.test_pos.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.val_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_test),
                     edges.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    std::vector<Entry> kept;
    for (std::size_t k = n_test + n_val; k < E; ++k) {
        const auto [i, j] = edges[k];
        kept.push_back({i, j, adjacency.at(i, j)});
    }
    for (std::size_t i = 0; i < adjacency.n(); ++i)  // existing self-loops stay in the train graph
        if (adjacency.support().contains(i, i)) kept.push_back({static_cast<Index>(i), static_cast<Index>(i), adjacency.at(i, i)});
    s.train = SparseAdjacency::from_undirected(adjacency.n(), kept);
    s.test_neg = sample_non_edges(adjacency, n_test, rng);
    std::set<NodePair> used(s.test_neg.begin(), s.test_neg.end());
    s.val_neg = sample_non_edges(adjacency, n_val, rng, used);
    return s;
}

}  // namespace tpgc
