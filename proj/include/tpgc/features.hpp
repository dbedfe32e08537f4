#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tpgc/edge_tensor.hpp"
#include "tpgc/error.hpp"
#include "tpgc/graph.hpp"
#include "tpgc/layers.hpp"
#include "tpgc/ops.hpp"

namespace tpgc {

enum class EdgeFeatureKind { concat, subtract, stack_graphs };

inline std::string to_string(EdgeFeatureKind k) {
    switch (k) {
        case EdgeFeatureKind::subtract: return "subtract";
        case EdgeFeatureKind::stack_graphs: return "stack";
        default: return "concat";
    }
}

inline EdgeFeatureKind parse_edge_feature_kind(const std::string& s) {
    if (s == "concat") return EdgeFeatureKind::concat;
    if (s == "subtract") return EdgeFeatureKind::subtract;
    if (s == "stack") return EdgeFeatureKind::stack_graphs;
    throw InvalidArgument("unknown edge_features '" + s + "' (expected concat|subtract|stack)");
}

struct EdgeFeatureRecipe {
    EdgeFeatureKind kind = EdgeFeatureKind::concat;
    std::size_t reduce_dim = 8;

    /// Per-slot feature width the recipe produces.
    std::size_t edge_dim(std::size_t num_graphs = 1) const {
        if (reduce_dim == 0) throw InvalidArgument("EdgeFeatureRecipe: reduce_dim must be >= 1");
        switch (kind) {
            case EdgeFeatureKind::concat: return 2 * reduce_dim;
            case EdgeFeatureKind::subtract: return reduce_dim;
            default: return num_graphs;
        }
    }
};

namespace ad {

inline Var<EdgeTensor> build_pair_features(Tape& tape, EdgeFeatureKind kind, const Var<Matrix>& h,
                                           const Var<Adjacency>& a_tilde, const Var<Matrix>& reducer,
                                           Activation reducer_activation) {
    auto reduced = gc_forward(tape, h, a_tilde, reducer, reducer_activation);
    if (kind == EdgeFeatureKind::concat) return concat_pairs(tape, reduced, a_tilde->value.pattern());
    if (kind == EdgeFeatureKind::subtract) return subtract_pairs(tape, reduced, a_tilde->value.pattern());
    throw InvalidArgument("build_pair_features: stacked graphs do not use node features");
}

}  // namespace ad

/// Slot (i,j) ← [H̃_i ∥ H̃_j] with H̃ = gc_forward(h, Ã, reducer); support = support(Ã).
inline EdgeFeatureTensor build_concat_features(const DenseMatrix& h, const SparseAdjacency& a_tilde, const GCLayer& reducer) {
    ad::Tape tape;
    return ad::build_pair_features(tape, EdgeFeatureKind::concat, ad::constant(h), ad::constant(a_tilde),
                                   ad::constant(reducer.weight), reducer.activation)
        ->value;
}

/// Slot (i,j) ← H̃_i − H̃_j.
inline EdgeFeatureTensor build_subtract_features(const DenseMatrix& h, const SparseAdjacency& a_tilde,
                                                 const GCLayer& reducer) {
    ad::Tape tape;
    return ad::build_pair_features(tape, EdgeFeatureKind::subtract, ad::constant(h), ad::constant(a_tilde),
                                   ad::constant(reducer.weight), reducer.activation)
        ->value;
}

/// Union of all graph supports plus the diagonal.
inline PatternPtr union_support(const std::vector<SparseAdjacency>& graphs) {
    if (graphs.empty()) throw InvalidArgument("union_support: no graphs");
    const std::size_t n = graphs.front().n();
    std::vector<std::pair<Index, Index>> pairs;
    for (const auto& g : graphs) {
        if (g.n() != n) throw DimensionError("union_support: node count mismatch");
        for (std::size_t k = 0; k < g.nnz(); ++k) pairs.emplace_back(g.support().row_of(k), g.support().col_of(k));
    }
    for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(static_cast<Index>(i), static_cast<Index>(i));
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return SupportPattern::from_pairs(n, std::move(pairs));
}

/// Binary graph with an edge wherever any view has one (diagonal excluded).
inline SparseAdjacency union_binary_graph(const std::vector<SparseAdjacency>& graphs) {
    auto sup = union_support(graphs);
    std::vector<Entry> e;
    for (std::size_t k = 0; k < sup->nnz(); ++k)
        if (sup->row_of(k) != sup->col_of(k)) e.push_back({sup->row_of(k), sup->col_of(k), 1.0});
    return SparseAdjacency::from_entries(sup->n(), std::move(e), true);
}

/// Channel v of slot (i,j) = weight of (i,j) in graph v, 0 where absent.
inline EdgeFeatureTensor build_stacked_graph_features(const std::vector<SparseAdjacency>& graphs, const PatternPtr& support) {
    if (graphs.empty()) throw InvalidArgument("build_stacked_graph_features: no graphs");
    const std::size_t m = graphs.size();
    EdgeFeatureTensor s(support, m);
    for (std::size_t v = 0; v < m; ++v) {
        const auto& g = graphs[v];
        if (g.n() != support->n()) {
            throw DimensionError("build_stacked_graph_features: graph " + std::to_string(v) + " has n=" +
                                 std::to_string(g.n()) + ", expected " + std::to_string(support->n()));
        }
        for (std::size_t k = 0; k < g.nnz(); ++k) {
            auto slot = support->find(g.support().row_of(k), g.support().col_of(k));
            if (!slot) throw SupportError("build_stacked_graph_features: graph entry outside reference support");
            s.values()[*slot * m + v] = g.values()[k];
        }
    }
    return s;
}

}  // namespace tpgc
