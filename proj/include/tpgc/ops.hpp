#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpgc/autodiff.hpp"
#include "tpgc/dense.hpp"
#include "tpgc/edge_tensor.hpp"
#include "tpgc/graph.hpp"

// Differentiable versions of every forward operation. Each op computes its
// value with the same kernels as the plain API and, when any input requires a
// gradient, records the adjoint on the tape.

namespace tpgc::ad {

using Matrix = DenseMatrix;
using EdgeTensor = EdgeFeatureTensor;
using Adjacency = SparseAdjacency;

inline std::vector<double>& flat(DenseMatrix& m) { return m.data(); }
inline const std::vector<double>& flat(const DenseMatrix& m) { return m.data(); }
inline std::vector<double>& flat(EdgeFeatureTensor& t) { return t.values(); }
inline const std::vector<double>& flat(const EdgeFeatureTensor& t) { return t.values(); }
inline std::vector<double>& flat(SparseAdjacency& a) { return a.values(); }
inline const std::vector<double>& flat(const SparseAdjacency& a) { return a.values(); }

template <class T>
Var<T> make_output(T value, bool rg) {
    return std::make_shared<Node<T>>(std::move(value), rg);
}

// ---------------------------------------------------------------------------
// Dense algebra

inline Var<Matrix> matmul(Tape& tape, const Var<Matrix>& a, const Var<Matrix>& b) {
    auto out = make_output(tpgc::matmul(a->value, b->value), any_requires_grad(a, b));
    if (out->requires_grad) {
        tape.record("matmul", [a, b, out] {
            if (!out->has_grad()) return;
            const auto& dy = out->grad();
            if (a->requires_grad) a->grad() += matmul_nt(dy, b->value);
            if (b->requires_grad) b->grad() += matmul_tn(a->value, dy);
        });
    }
    return out;
}

/// A·H for sparse A (any pattern).
inline Var<Matrix> spmm(Tape& tape, const Var<Adjacency>& a, const Var<Matrix>& h) {
    const auto& A = a->value;
    const auto& H = h->value;
    if (A.n() != H.rows()) {
        throw DimensionError("spmm: adjacency n=" + std::to_string(A.n()) + " but features have " +
                             std::to_string(H.rows()) + " rows");
    }
    Matrix y(H.rows(), H.cols());
    const auto& p = A.support();
    for (std::size_t k = 0; k < A.nnz(); ++k) {
        const double w = A.values()[k];
        auto yr = y.row(p.row_of(k));
        auto hc = H.row(p.col_of(k));
        for (std::size_t f = 0; f < H.cols(); ++f) yr[f] += w * hc[f];
    }
    auto out = make_output(std::move(y), any_requires_grad(a, h));
    if (out->requires_grad) {
        tape.record("spmm", [a, h, out] {
            if (!out->has_grad()) return;
            const auto& dy = out->grad();
            const auto& A = a->value;
            const auto& H = h->value;
            const auto& p = A.support();
            Matrix* dh = h->requires_grad ? &h->grad() : nullptr;
            std::vector<double>* da = a->requires_grad ? &a->grad().values() : nullptr;
            for (std::size_t k = 0; k < A.nnz(); ++k) {
                auto dyr = dy.row(p.row_of(k));
                if (dh) {
                    auto dhc = dh->row(p.col_of(k));
                    const double w = A.values()[k];
                    for (std::size_t f = 0; f < H.cols(); ++f) dhc[f] += w * dyr[f];
                }
                if (da) {
                    auto hc = H.row(p.col_of(k));
                    double acc = 0.0;
                    for (std::size_t f = 0; f < H.cols(); ++f) acc += dyr[f] * hc[f];
                    (*da)[k] += acc;
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pointwise

/// max(x, 0) with subgradient 0 at x = 0.
template <class T>
Var<T> relu(Tape& tape, const Var<T>& x) {
    T y = x->value;
    double margin = std::numeric_limits<double>::infinity();
    for (double& v : flat(y)) {
        margin = std::min(margin, std::abs(v));
        if (v < 0.0) v = 0.0;
    }
    tape.note_kink_distance(margin);
    auto out = make_output(std::move(y), x->requires_grad);
    if (out->requires_grad) {
        tape.record("relu", [x, out] {
            if (!out->has_grad()) return;
            const auto& xv = flat(x->value);
            const auto& dy = flat(out->grad());
            auto& dx = flat(x->grad());
            for (std::size_t i = 0; i < xv.size(); ++i)
                if (xv[i] > 0.0) dx[i] += dy[i];
        });
    }
    return out;
}

inline Var<Matrix> softmax_rows(Tape& tape, const Var<Matrix>& x) {
    Matrix y = x->value;
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        if (row.empty()) continue;
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double& v : row) z += (v = std::exp(v - mx));
        for (double& v : row) v /= z;
    }
    auto out = make_output(std::move(y), x->requires_grad);
    if (out->requires_grad) {
        tape.record("softmax_rows", [x, out] {
            if (!out->has_grad()) return;
            const auto& y = out->value;
            const auto& dy = out->grad();
            auto& dx = x->grad();
            for (std::size_t r = 0; r < y.rows(); ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < y.cols(); ++c) dot += dy(r, c) * y(r, c);
                for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) += y(r, c) * (dy(r, c) - dot);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Edge tensor products

namespace detail {

inline void require_same_support(const EdgeTensor& s, const Adjacency& a, const char* op) {
    if (!same_support(s.pattern(), a.pattern())) {
        throw SupportError(std::string(op) + ": differentiable adjacency must share the tensor's support");
    }
}

inline Var<EdgeTensor> propagate(Tape& tape, const Var<EdgeTensor>& s, const Var<Adjacency>& a, int mode) {
    const char* name = mode == 1 ? "propagate_mode1" : "propagate_mode2";
    EdgeTensor y = mode == 1 ? propagate_mode1(s->value, a->value) : propagate_mode2(s->value, a->value);
    if (a->requires_grad) require_same_support(s->value, a->value, name);
    auto out = make_output(std::move(y), any_requires_grad(s, a));
    if (out->requires_grad) {
        tape.record(name, [s, a, out, mode] {
            if (!out->has_grad()) return;
            const auto& plan = s->value.support().plan();
            const auto adj = tpgc::detail::adjacency_on_support(s->value, a->value, "propagate");
            std::span<double> ds = s->requires_grad ? std::span<double>(s->grad().values()) : std::span<double>();
            std::span<double> da = a->requires_grad ? std::span<double>(a->grad().values()) : std::span<double>();
            if (mode == 1) {
                tpgc::detail::propagate_adjoint(plan.mode1_offsets, plan.mode1_adj, plan.mode1_src, adj,
                                                s->value.values(), s->value.p(), out->grad().values(), ds, da);
            } else {
                tpgc::detail::propagate_adjoint(plan.mode2_offsets, plan.mode2_adj, plan.mode2_src, adj,
                                                s->value.values(), s->value.p(), out->grad().values(), ds, da);
            }
        });
    }
    return out;
}

}  // namespace detail

inline Var<EdgeTensor> propagate_mode1(Tape& tape, const Var<EdgeTensor>& s, const Var<Adjacency>& a) {
    return detail::propagate(tape, s, a, 1);
}

inline Var<EdgeTensor> propagate_mode2(Tape& tape, const Var<EdgeTensor>& s, const Var<Adjacency>& a) {
    return detail::propagate(tape, s, a, 2);
}

inline Var<EdgeTensor> project_mode3(Tape& tape, const Var<EdgeTensor>& s, const Var<Matrix>& w) {
    auto out = make_output(tpgc::project_mode3(s->value, w->value), any_requires_grad(s, w));
    if (out->requires_grad) {
        tape.record("project_mode3", [s, w, out] {
            if (!out->has_grad()) return;
            const std::size_t p = s->value.p(), q = w->value.cols();
            const auto& dy = out->grad().values();
            const auto& x = s->value.values();
            const std::size_t slots = s->value.slots();
            if (s->requires_grad) {
                auto& dx = s->grad().values();
                for (std::size_t k = 0; k < slots; ++k)
                    for (std::size_t f = 0; f < p; ++f) {
                        auto wrow = w->value.row(f);
                        double acc = 0.0;
                        for (std::size_t g = 0; g < q; ++g) acc += wrow[g] * dy[k * q + g];
                        dx[k * p + f] += acc;
                    }
            }
            if (w->requires_grad) {
                auto& dw = w->grad();
                for (std::size_t k = 0; k < slots; ++k)
                    for (std::size_t f = 0; f < p; ++f) {
                        const double xf = x[k * p + f];
                        if (xf == 0.0) continue;
                        auto dwrow = dw.row(f);
                        for (std::size_t g = 0; g < q; ++g) dwrow[g] += xf * dy[k * q + g];
                    }
            }
        });
    }
    return out;
}

inline Var<EdgeTensor> axpy(Tape& tape, const Var<EdgeTensor>& s1, const Var<EdgeTensor>& s2, double epsilon) {
    auto out = make_output(tpgc::axpy(s1->value, s2->value, epsilon), any_requires_grad(s1, s2));
    if (out->requires_grad) {
        tape.record("axpy", [s1, s2, out, epsilon] {
            if (!out->has_grad()) return;
            const auto& dy = out->grad().values();
            if (s1->requires_grad) {
                auto& d = s1->grad().values();
                for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
            }
            if (s2->requires_grad) {
                auto& d = s2->grad().values();
                for (std::size_t i = 0; i < dy.size(); ++i) d[i] += epsilon * dy[i];
            }
        });
    }
    return out;
}

inline Var<Adjacency> collapse_to_weighted_graph(Tape& tape, const Var<EdgeTensor>& s) {
    auto out = make_output(tpgc::collapse_to_weighted_graph(s->value), s->requires_grad);
    if (out->requires_grad) {
        tape.record("collapse_to_weighted_graph", [s, out] {
            if (!out->has_grad()) return;
            const auto& dy = out->grad().values();
            auto& d = s->grad().values();
            for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Learned-graph post-processing

enum class SignMode { clamp, absolute };

/// w_ij = f((x_ij + x_ji) / 2) with f = max(·, 0) or |·|. Requires a symmetric pattern.
inline Var<Adjacency> symmetrize_nonnegative(Tape& tape, const Var<Adjacency>& x, SignMode mode) {
    const auto& tr = x->value.support().transpose_slots();
    const auto& xv = x->value.values();
    std::vector<double> w(xv.size());
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < xv.size(); ++k) {
        const double u = 0.5 * (xv[k] + xv[tr[k]]);
        margin = std::min(margin, std::abs(u));
        w[k] = mode == SignMode::clamp ? std::max(u, 0.0) : std::abs(u);
    }
    tape.note_kink_distance(margin);
    auto out = make_output(Adjacency(x->value.pattern(), std::move(w), true), x->requires_grad);
    if (out->requires_grad) {
        tape.record("symmetrize_nonnegative", [x, out, mode] {
            if (!out->has_grad()) return;
            const auto& tr = x->value.support().transpose_slots();
            const auto& xv = x->value.values();
            const auto& dy = out->grad().values();
            auto& dx = x->grad().values();
            for (std::size_t k = 0; k < xv.size(); ++k) {
                const double u = 0.5 * (xv[k] + xv[tr[k]]);
                double slope = 0.0;
                if (mode == SignMode::clamp) slope = u > 0.0 ? 1.0 : 0.0;
                else slope = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
                const double g = 0.5 * slope * dy[k];
                dx[k] += g;
                dx[tr[k]] += g;
            }
        });
    }
    return out;
}

/// D̄^{-1/2}(S + I)D̄^{-1/2} for a nonnegative S whose pattern contains the diagonal.
inline Var<Adjacency> renormalize(Tape& tape, const Var<Adjacency>& s) {
    const auto& pat = s->value.support();
    if (!pat.has_full_diagonal()) throw SupportError("renormalize: differentiable input must contain the diagonal");
    for (double w : s->value.values())
        if (w < 0.0) throw InvalidArgument("renormalize: weights must be nonnegative");
    auto deg = std::make_shared<std::vector<double>>();
    auto values = tpgc::detail::renormalized_values(pat, s->value.values(), deg.get());
    auto out = make_output(Adjacency(s->value.pattern(), std::move(values), false), s->requires_grad);
    if (out->requires_grad) {
        tape.record("renormalize", [s, out, deg] {
            if (!out->has_grad()) return;
            const auto& pat = s->value.support();
            const auto& at = out->value.values();
            const auto& dy = out->grad().values();
            auto& ds = s->grad().values();
            std::vector<double> c(pat.n(), 0.0);
            for (std::size_t k = 0; k < at.size(); ++k) {
                const double t = dy[k] * at[k];
                c[pat.row_of(k)] += t;
                c[pat.col_of(k)] += t;
            }
            for (std::size_t k = 0; k < at.size(); ++k) {
                const std::size_t i = pat.row_of(k), j = pat.col_of(k);
                const double direct = dy[k] / std::sqrt((*deg)[i] * (*deg)[j]);
                ds[k] += direct - 0.5 * c[i] / (*deg)[i];
            }
        });
    }
    return out;
}

/// ½(a + b) on a shared support.
inline Var<Adjacency> blend(Tape& tape, const Var<Adjacency>& a, const Var<Adjacency>& b) {
    if (!same_support(a->value.pattern(), b->value.pattern())) throw SupportError("blend_edge_weights: supports differ");
    std::vector<double> v(a->value.nnz());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.5 * (a->value.values()[k] + b->value.values()[k]);
    auto out = make_output(Adjacency(a->value.pattern(), std::move(v), false), any_requires_grad(a, b));
    if (out->requires_grad) {
        tape.record("blend_edge_weights", [a, b, out] {
            if (!out->has_grad()) return;
            const auto& dy = out->grad().values();
            for (const auto* src : {&a, &b}) {
                if (!(*src)->requires_grad) continue;
                auto& d = (*src)->grad().values();
                for (std::size_t k = 0; k < dy.size(); ++k) d[k] += 0.5 * dy[k];
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Attention

/// α_ij = softmax over j in row i's support of leaky_relu(θ_srcᵀ H_i + θ_dstᵀ H_j).
/// theta is a (2d)×1 column: the first d entries act on H_i, the rest on H_j.
inline Var<Adjacency> attention(Tape& tape, const Var<Matrix>& h, const PatternPtr& support, const Var<Matrix>& theta,
                                double leaky_slope) {
    const auto& H = h->value;
    const std::size_t d = H.cols();
    if (support->n() != H.rows()) throw DimensionError("attention: feature rows != n");
    if (theta->value.rows() != 2 * d || theta->value.cols() != 1) {
        throw DimensionError("attention: theta must be " + std::to_string(2 * d) + "x1, got " + shape_str(theta->value));
    }
    const auto& th = theta->value.data();
    std::vector<double> src_score(H.rows()), dst_score(H.rows());
    for (std::size_t i = 0; i < H.rows(); ++i) {
        auto r = H.row(i);
        double a = 0.0, b = 0.0;
        for (std::size_t f = 0; f < d; ++f) {
            a += th[f] * r[f];
            b += th[d + f] * r[f];
        }
        src_score[i] = a;
        dst_score[i] = b;
    }
    const std::size_t nnz = support->nnz();
    std::vector<double> raw(nnz), alpha(nnz);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < support->n(); ++i) {
        const std::size_t b = support->row_begin(i), e = support->row_end(i);
        if (b == e) continue;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = b; k < e; ++k) {
            raw[k] = src_score[i] + dst_score[support->col_of(k)];
            margin = std::min(margin, std::abs(raw[k]));
            const double z = raw[k] > 0.0 ? raw[k] : leaky_slope * raw[k];
            alpha[k] = z;
            mx = std::max(mx, z);
        }
        double sum = 0.0;
        for (std::size_t k = b; k < e; ++k) sum += (alpha[k] = std::exp(alpha[k] - mx));
        for (std::size_t k = b; k < e; ++k) alpha[k] /= sum;
    }
    tape.note_kink_distance(margin);
    auto out = make_output(Adjacency(support, std::move(alpha), false), any_requires_grad(h, theta));
    if (out->requires_grad) {
        tape.record("attention", [h, theta, out, raw = std::move(raw), leaky_slope] {
            if (!out->has_grad()) return;
            const auto& H = h->value;
            const std::size_t d = H.cols();
            const auto& sup = out->value.support();
            const auto& al = out->value.values();
            const auto& da = out->grad().values();
            const auto& th = theta->value.data();
            std::vector<double> d_src(H.rows(), 0.0), d_dst(H.rows(), 0.0);
            for (std::size_t i = 0; i < sup.n(); ++i) {
                const std::size_t b = sup.row_begin(i), e = sup.row_end(i);
                double dot = 0.0;
                for (std::size_t k = b; k < e; ++k) dot += al[k] * da[k];
                for (std::size_t k = b; k < e; ++k) {
                    const double de = al[k] * (da[k] - dot);
                    const double dz = de * (raw[k] > 0.0 ? 1.0 : leaky_slope);
                    d_src[i] += dz;
                    d_dst[sup.col_of(k)] += dz;
                }
            }
            if (theta->requires_grad) {
                auto& dth = theta->grad().data();
                for (std::size_t i = 0; i < H.rows(); ++i) {
                    auto r = H.row(i);
                    for (std::size_t f = 0; f < d; ++f) {
                        dth[f] += d_src[i] * r[f];
                        dth[d + f] += d_dst[i] * r[f];
                    }
                }
            }
            if (h->requires_grad) {
                auto& dh = h->grad();
                for (std::size_t i = 0; i < H.rows(); ++i) {
                    auto r = dh.row(i);
                    for (std::size_t f = 0; f < d; ++f) r[f] += d_src[i] * th[f] + d_dst[i] * th[d + f];
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Edge features from node features

/// Slot (i,j) ← [H_i ∥ H_j].
inline Var<EdgeTensor> concat_pairs(Tape& tape, const Var<Matrix>& h, const PatternPtr& support) {
    const auto& H = h->value;
    const std::size_t d = H.cols();
    if (support->n() != H.rows()) throw DimensionError("concat_pairs: feature rows != n");
    EdgeTensor s(support, 2 * d);
    for (std::size_t k = 0; k < s.slots(); ++k) {
        auto v = s.slot(k);
        auto hi = H.row(support->row_of(k));
        auto hj = H.row(support->col_of(k));
        std::copy(hi.begin(), hi.end(), v.begin());
        std::copy(hj.begin(), hj.end(), v.begin() + static_cast<std::ptrdiff_t>(d));
    }
    auto out = make_output(std::move(s), h->requires_grad);
    if (out->requires_grad) {
        tape.record("concat_pairs", [h, out] {
            if (!out->has_grad()) return;
            const auto& g = out->grad();
            const auto& sup = g.support();
            const std::size_t d = h->value.cols();
            auto& dh = h->grad();
            for (std::size_t k = 0; k < g.slots(); ++k) {
                auto v = g.slot(k);
                auto di = dh.row(sup.row_of(k));
                for (std::size_t f = 0; f < d; ++f) di[f] += v[f];
                auto dj = dh.row(sup.col_of(k));
                for (std::size_t f = 0; f < d; ++f) dj[f] += v[d + f];
            }
        });
    }
    return out;
}

/// Slot (i,j) ← H_i − H_j.
inline Var<EdgeTensor> subtract_pairs(Tape& tape, const Var<Matrix>& h, const PatternPtr& support) {
    const auto& H = h->value;
    const std::size_t d = H.cols();
    if (support->n() != H.rows()) throw DimensionError("subtract_pairs: feature rows != n");
    EdgeTensor s(support, d);
    for (std::size_t k = 0; k < s.slots(); ++k) {
        auto v = s.slot(k);
        auto hi = H.row(support->row_of(k));
        auto hj = H.row(support->col_of(k));
        for (std::size_t f = 0; f < d; ++f) v[f] = hi[f] - hj[f];
    }
    auto out = make_output(std::move(s), h->requires_grad);
    if (out->requires_grad) {
        tape.record("subtract_pairs", [h, out] {
            if (!out->has_grad()) return;
            const auto& g = out->grad();
            const auto& sup = g.support();
            const std::size_t d = h->value.cols();
            auto& dh = h->grad();
            for (std::size_t k = 0; k < g.slots(); ++k) {
                auto v = g.slot(k);
                auto di = dh.row(sup.row_of(k));
                auto dj = dh.row(sup.col_of(k));
                for (std::size_t f = 0; f < d; ++f) {
                    di[f] += v[f];
                    dj[f] -= v[f];
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Losses

/// Mean −log p(true class) over `mask`. Probabilities are floored at 1e-300
/// so a zero probability gives a large finite loss.
inline Var<double> cross_entropy_masked(Tape& tape, const Var<Matrix>& probs, const std::vector<int>& labels,
                                        const std::vector<Index>& mask) {
    if (mask.empty()) throw InvalidArgument("cross_entropy_masked: empty mask");
    const auto& P = probs->value;
    double loss = 0.0;
    for (Index i : mask) {
        if (i >= P.rows()) throw DimensionError("cross_entropy_masked: mask index out of range");
        const int y = labels.at(i);
        if (y < 0 || static_cast<std::size_t>(y) >= P.cols()) throw InvalidArgument("cross_entropy_masked: node without a valid label in mask");
        loss -= std::log(std::max(P(i, static_cast<std::size_t>(y)), 1e-300));
    }
    loss /= static_cast<double>(mask.size());
    auto out = make_output(loss, probs->requires_grad);
    if (out->requires_grad) {
        tape.record("cross_entropy_masked", [probs, labels, mask, out] {
            const double g = out->grad() / static_cast<double>(mask.size());
            auto& dp = probs->grad();
            for (Index i : mask) {
                const auto y = static_cast<std::size_t>(labels[i]);
                dp(i, y) -= g / std::max(probs->value(i, y), 1e-300);
            }
        });
    }
    return out;
}

/// Logits Z_u·Z_v for every requested pair, as an m×1 column.
inline Var<Matrix> pair_scores(Tape& tape, const Var<Matrix>& z, const std::vector<std::pair<Index, Index>>& pairs) {
    const auto& Z = z->value;
    Matrix s(pairs.size(), 1);
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        const auto [u, v] = pairs[t];
        if (u >= Z.rows() || v >= Z.rows()) throw InvalidArgument("pair_scores: pair references unknown node");
        auto zu = Z.row(u);
        auto zv = Z.row(v);
        double acc = 0.0;
        for (std::size_t f = 0; f < Z.cols(); ++f) acc += zu[f] * zv[f];
        s(t, 0) = acc;
    }
    auto out = make_output(std::move(s), z->requires_grad);
    if (out->requires_grad) {
        tape.record("pair_scores", [z, pairs, out] {
            if (!out->has_grad()) return;
            const auto& Z = z->value;
            auto& dz = z->grad();
            const auto& ds = out->grad();
            for (std::size_t t = 0; t < pairs.size(); ++t) {
                const auto [u, v] = pairs[t];
                const double g = ds(t, 0);
                auto du = dz.row(u);
                auto dv = dz.row(v);
                auto zu = Z.row(u);
                auto zv = Z.row(v);
                for (std::size_t f = 0; f < Z.cols(); ++f) {
                    du[f] += g * zv[f];
                    dv[f] += g * zu[f];
                }
            }
        });
    }
    return out;
}

inline double sigmoid(double x) noexcept {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// Mean binary cross-entropy of sigmoid(logit) against 0/1 targets, computed
/// in the numerically stable log-sum-exp form.
inline Var<double> bce_with_logits(Tape& tape, const Var<Matrix>& logits, const std::vector<double>& targets) {
    const auto& x = logits->value.data();
    if (x.empty()) throw InvalidArgument("bce_with_logits: empty sample set");
    if (x.size() != targets.size()) throw DimensionError("bce_with_logits: target count mismatch");
    double loss = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) loss += std::max(x[t], 0.0) - x[t] * targets[t] + std::log1p(std::exp(-std::abs(x[t])));
    loss /= static_cast<double>(x.size());
    auto out = make_output(loss, logits->requires_grad);
    if (out->requires_grad) {
        tape.record("bce_with_logits", [logits, targets, out] {
            const auto& x = logits->value.data();
            auto& dx = logits->grad().data();
            const double g = out->grad() / static_cast<double>(x.size());
            for (std::size_t t = 0; t < x.size(); ++t) dx[t] += g * (sigmoid(x[t]) - targets[t]);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scalar reductions

/// Σ_k c_k x_k over the flat storage of x.
template <class T>
Var<double> weighted_sum(Tape& tape, const Var<T>& x, std::vector<double> coeffs) {
    const auto& v = flat(x->value);
    if (v.size() != coeffs.size()) throw DimensionError("weighted_sum: coefficient count mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) acc += coeffs[k] * v[k];
    auto out = make_output(acc, x->requires_grad);
    if (out->requires_grad) {
        tape.record("weighted_sum", [x, coeffs = std::move(coeffs), out] {
            auto& dx = flat(x->grad());
            const double g = out->grad();
            for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += g * coeffs[k];
        });
    }
    return out;
}

/// Σ_k x_k².
template <class T>
Var<double> sum_squares(Tape& tape, const Var<T>& x) {
    double acc = 0.0;
    for (double v : flat(x->value)) acc += v * v;
    auto out = make_output(acc, x->requires_grad);
    if (out->requires_grad) {
        tape.record("sum_squares", [x, out] {
            auto& dx = flat(x->grad());
            const auto& v = flat(x->value);
            const double g = out->grad();
            for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += 2.0 * g * v[k];
        });
    }
    return out;
}

}  // namespace tpgc::ad
