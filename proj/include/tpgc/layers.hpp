#pragma once

#include <span>
#include <string>
#include <vector>

#include "tpgc/autodiff.hpp"
#include "tpgc/dense.hpp"
#include "tpgc/edge_tensor.hpp"
#include "tpgc/error.hpp"
#include "tpgc/graph.hpp"
#include "tpgc/ops.hpp"

namespace tpgc {

enum class Activation { identity, relu, softmax_rows };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::softmax_rows: return "softmax";
        default: return "identity";
    }
}

/// Default negative slope inside the attention scorer.
inline constexpr double kAttentionLeakySlope = 0.2;

/// H' = act(Ã H W).
struct GCLayer {
    DenseMatrix weight;
    Activation activation = Activation::relu;
};

/// S' = act((S ×₁ Ã ×₂ Ã + ε S) ×₃ W).
struct TPGCLayer {
    DenseMatrix weight;
    double epsilon = 0.2;
    Activation activation = Activation::relu;
};

/// Single-layer scorer on concatenated endpoint features.
struct AttentionHead {
    DenseMatrix theta;  // (2d)×1
    double leaky_slope = kAttentionLeakySlope;
};

namespace ad {

template <class T>
Var<T> activate(Tape& tape, const Var<T>& x, Activation act) {
    if (act == Activation::relu) return relu(tape, x);
    if (act == Activation::softmax_rows) {
        if constexpr (std::is_same_v<T, DenseMatrix>) {
            return softmax_rows(tape, x);
        } else {
            throw InvalidArgument("softmax activation is only defined for node feature matrices");
        }
    }
    return x;
}

inline Var<Matrix> gc_forward(Tape& tape, const Var<Matrix>& h, const Var<Adjacency>& a_tilde, const Var<Matrix>& weight,
                              Activation act) {
    if (h->value.cols() != weight->value.rows()) {
        throw DimensionError("gc_forward: features " + shape_str(h->value) + " vs weight " + shape_str(weight->value));
    }
    // Ã(HW) is the cheaper association when the layer shrinks the width.
    auto hw = matmul(tape, h, weight);
    return activate(tape, spmm(tape, a_tilde, hw), act);
}

inline Var<EdgeTensor> tpgc_forward(Tape& tape, const Var<EdgeTensor>& s, const Var<Adjacency>& a,
                                    const Var<Matrix>& weight, double epsilon, Activation act) {
    if (epsilon < 0.0) throw InvalidArgument("tpgc_forward: epsilon must be nonnegative");
    auto m1 = propagate_mode1(tape, s, a);
    auto m2 = propagate_mode2(tape, m1, a);
    auto mixed = epsilon == 0.0 ? m2 : axpy(tape, m2, s, epsilon);
    return activate(tape, project_mode3(tape, mixed, weight), act);
}

}  // namespace ad

inline DenseMatrix gc_forward(const DenseMatrix& h, const SparseAdjacency& a_tilde, const GCLayer& layer) {
    ad::Tape tape;
    return ad::gc_forward(tape, ad::constant(h), ad::constant(a_tilde), ad::constant(layer.weight), layer.activation)
        ->value;
}

// Tape-free path with the same arithmetic as the differentiable version. Intermediates live in
// per-thread buffers: fresh multi-MB temporaries make glibc map and fault pages on every call.
inline EdgeFeatureTensor tpgc_forward(const EdgeFeatureTensor& s, const SparseAdjacency& a_tilde, const TPGCLayer& layer) {
    if (layer.epsilon < 0.0) throw InvalidArgument("tpgc_forward: epsilon must be nonnegative");
    if (layer.activation == Activation::softmax_rows)
        throw InvalidArgument("softmax activation is only defined for node feature matrices");
    if (layer.weight.rows() != s.p()) {
        throw DimensionError("project_mode3: weight has " + std::to_string(layer.weight.rows()) + " rows, tensor p=" +
                             std::to_string(s.p()));
    }
    detail::require_compatible(s, a_tilde, "propagate_mode1");
    std::vector<double> expanded;
    std::span<const double> adj = a_tilde.values();
    if (!same_support(a_tilde.pattern(), s.pattern())) {
        expanded = detail::adjacency_on_support(s, a_tilde, "propagate_mode1");
        adj = expanded;
    }
    thread_local std::vector<double> m1, m2;
    const auto& plan = s.support().plan();
    const std::size_t p = s.p();
    m1.assign(s.values().size(), 0.0);
    m2.assign(s.values().size(), 0.0);
    detail::propagate_kernel(plan.mode1_offsets, plan.mode1_adj, plan.mode1_src, adj, s.values(), p, m1);
    detail::propagate_kernel(plan.mode2_offsets, plan.mode2_adj, plan.mode2_src, adj, m1, p, m2);
    if (layer.epsilon != 0.0)
        for (std::size_t k = 0; k < m2.size(); ++k) m2[k] += layer.epsilon * s.values()[k];
    EdgeFeatureTensor y(s.pattern(), layer.weight.cols());
    detail::project_kernel(m2, p, layer.weight, y.values());
    if (layer.activation == Activation::relu)
        for (double& v : y.values())
            if (v < 0.0) v = 0.0;
    return y;
}

/// Row-normalized attention over support(A) ∪ diagonal.
inline SparseAdjacency attention_forward(const DenseMatrix& h, const SparseAdjacency& a, const AttentionHead& head) {
    if (h.rows() != a.n()) throw DimensionError("attention_forward: feature rows != n");
    auto support = a.support().has_full_diagonal() ? a.pattern() : a.support().with_diagonal();
    ad::Tape tape;
    return ad::attention(tape, ad::constant(h), support, ad::constant(head.theta), head.leaky_slope)->value;
}

/// Same as tpgc_forward with α in place of Ã.
inline EdgeFeatureTensor tpgat_forward(const EdgeFeatureTensor& s, const SparseAdjacency& alpha, const TPGCLayer& layer) {
    return tpgc_forward(s, alpha, layer);
}

inline SparseAdjacency blend_edge_weights(const SparseAdjacency& a_tilde, const SparseAdjacency& alpha) {
    ad::Tape tape;
    return ad::blend(tape, ad::constant(a_tilde), ad::constant(alpha))->value;
}

}  // namespace tpgc
