#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tpgc/dense.hpp"
#include "tpgc/error.hpp"
#include "tpgc/graph.hpp"

namespace tpgc {

/// n×n×p tensor whose first two modes are restricted to a symmetric support
/// that contains the diagonal. Values are slot-major: the p features of slot
/// k occupy [k·p, (k+1)·p).
class EdgeFeatureTensor {
public:
    EdgeFeatureTensor() = default;
    EdgeFeatureTensor(PatternPtr support, std::size_t p, std::vector<double> values)
        : support_(std::move(support)), p_(p), values_(std::move(values)) {
        if (!support_) throw InvalidArgument("EdgeFeatureTensor: null support");
        if (values_.size() != support_->nnz() * p_) {
            throw DimensionError("EdgeFeatureTensor: expected " + std::to_string(support_->nnz() * p_) +
                                 " values, got " + std::to_string(values_.size()));
        }
    }
    EdgeFeatureTensor(PatternPtr support, std::size_t p) : EdgeFeatureTensor(support, p, std::vector<double>(support->nnz() * p)) {}

    std::size_t n() const noexcept { return support_ ? support_->n() : 0; }
    std::size_t p() const noexcept { return p_; }
    std::size_t slots() const noexcept { return support_ ? support_->nnz() : 0; }
    const PatternPtr& pattern() const noexcept { return support_; }
    const SupportPattern& support() const noexcept { return *support_; }

    std::span<double> slot(std::size_t k) noexcept { return {values_.data() + k * p_, p_}; }
    std::span<const double> slot(std::size_t k) const noexcept { return {values_.data() + k * p_, p_}; }

    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Checks the structural invariants: symmetric support with full diagonal, finite values.
    void validate() const {
        if (!support_->is_symmetric()) throw SupportError("EdgeFeatureTensor: support is not symmetric");
        if (!support_->has_full_diagonal()) throw SupportError("EdgeFeatureTensor: support lacks diagonal");
        if (!all_finite(values_)) throw NumericError("EdgeFeatureTensor: non-finite value");
    }

    DenseTensor3 to_dense() const {
        DenseTensor3 d(n(), n(), p_);
        for (std::size_t k = 0; k < slots(); ++k)
            for (std::size_t f = 0; f < p_; ++f) d(support_->row_of(k), support_->col_of(k), f) = values_[k * p_ + f];
        return d;
    }

    /// Restriction of a dense tensor to `support` (entries elsewhere dropped).
    static EdgeFeatureTensor mask(const DenseTensor3& d, PatternPtr support) {
        if (d.dim(1) != support->n() || d.dim(2) != support->n()) throw DimensionError("mask: dense tensor size mismatch");
        const std::size_t p = d.dim(3);
        EdgeFeatureTensor out(support, p);
        for (std::size_t k = 0; k < out.slots(); ++k)
            for (std::size_t f = 0; f < p; ++f) out.values_[k * p + f] = d(support->row_of(k), support->col_of(k), f);
        return out;
    }

    bool operator==(const EdgeFeatureTensor& o) const {
        return p_ == o.p_ && same_support(support_, o.support_) && values_ == o.values_;
    }

private:
    PatternPtr support_;
    std::size_t p_ = 0;
    std::vector<double> values_;
};

inline EdgeFeatureTensor zeros_like(const EdgeFeatureTensor& t) { return EdgeFeatureTensor(t.pattern(), t.p()); }

namespace detail {

inline void require_compatible(const EdgeFeatureTensor& s, const SparseAdjacency& a, const char* op) {
    if (a.n() != s.n()) {
        throw DimensionError(std::string(op) + ": adjacency has n=" + std::to_string(a.n()) + ", tensor has n=" +
                             std::to_string(s.n()));
    }
}

/// Adjacency values laid out on the tensor's support. Throws SupportError when
/// the adjacency has an entry outside it.
inline std::vector<double> adjacency_on_support(const EdgeFeatureTensor& s, const SparseAdjacency& a, const char* op) {
    require_compatible(s, a, op);
    if (same_support(a.pattern(), s.pattern())) return a.values();
    try {
        return a.expand_to(s.pattern()).values();
    } catch (const SupportError& e) {
        throw SupportError(std::string(op) + ": " + e.what());
    }
}

/// out[o] = Σ_t adj[a_t] · src[s_t] over the plan terms of slot o.
inline void propagate_kernel(std::span<const std::size_t> offsets, std::span<const Index> adj_idx,
                             std::span<const Index> src_idx, std::span<const double> adj, std::span<const double> src,
                             std::size_t p, std::span<double> out) {
    const std::size_t slots = offsets.size() - 1;
    for (std::size_t o = 0; o < slots; ++o) {
        double* y = out.data() + o * p;
        for (std::size_t t = offsets[o]; t < offsets[o + 1]; ++t) {
            const double w = adj[adj_idx[t]];
            const double* x = src.data() + static_cast<std::size_t>(src_idx[t]) * p;
            for (std::size_t f = 0; f < p; ++f) y[f] += w * x[f];
        }
    }
}

/// Adjoint of propagate_kernel: accumulates into d_src and/or d_adj (either may be empty).
inline void propagate_adjoint(std::span<const std::size_t> offsets, std::span<const Index> adj_idx,
                              std::span<const Index> src_idx, std::span<const double> adj, std::span<const double> src,
                              std::size_t p, std::span<const double> d_out, std::span<double> d_src,
                              std::span<double> d_adj) {
    const std::size_t slots = offsets.size() - 1;
    for (std::size_t o = 0; o < slots; ++o) {
        const double* dy = d_out.data() + o * p;
        for (std::size_t t = offsets[o]; t < offsets[o + 1]; ++t) {
            const std::size_t si = static_cast<std::size_t>(src_idx[t]) * p;
            if (!d_src.empty()) {
                const double w = adj[adj_idx[t]];
                double* dx = d_src.data() + si;
                for (std::size_t f = 0; f < p; ++f) dx[f] += w * dy[f];
            }
            if (!d_adj.empty()) {
                const double* x = src.data() + si;
                double acc = 0.0;
                for (std::size_t f = 0; f < p; ++f) acc += dy[f] * x[f];
                d_adj[adj_idx[t]] += acc;
            }
        }
    }
}

inline void project_kernel(std::span<const double> src, std::size_t p, const DenseMatrix& w, std::span<double> out) {
    const std::size_t q = w.cols();
    const std::size_t slots = src.size() / p;
    for (std::size_t k = 0; k < slots; ++k) {
        const double* x = src.data() + k * p;
        double* y = out.data() + k * q;
        for (std::size_t f = 0; f < p; ++f) {
            const double xf = x[f];
            auto wrow = w.row(f);
            for (std::size_t g = 0; g < q; ++g) y[g] += xf * wrow[g];
        }
    }
}

}  // namespace detail

/// (S ×₁ A) restricted to S's support: slot (h,j) ← Σ_i A(h,i) S(i,j,:).
inline EdgeFeatureTensor propagate_mode1(const EdgeFeatureTensor& s, const SparseAdjacency& a) {
    const auto adj = detail::adjacency_on_support(s, a, "propagate_mode1");
    const auto& plan = s.support().plan();
    EdgeFeatureTensor out(s.pattern(), s.p());
    detail::propagate_kernel(plan.mode1_offsets, plan.mode1_adj, plan.mode1_src, adj, s.values(), s.p(), out.values());
    return out;
}

/// (S ×₂ A) restricted to S's support: slot (i,h) ← Σ_j A(h,j) S(i,j,:).
inline EdgeFeatureTensor propagate_mode2(const EdgeFeatureTensor& s, const SparseAdjacency& a) {
    const auto adj = detail::adjacency_on_support(s, a, "propagate_mode2");
    const auto& plan = s.support().plan();
    EdgeFeatureTensor out(s.pattern(), s.p());
    detail::propagate_kernel(plan.mode2_offsets, plan.mode2_adj, plan.mode2_src, adj, s.values(), s.p(), out.values());
    return out;
}

/// S ×₃ Wᵀ: every slot vector v becomes Wᵀv. W is p×p'.
inline EdgeFeatureTensor project_mode3(const EdgeFeatureTensor& s, const DenseMatrix& w) {
    if (w.rows() != s.p()) {
        throw DimensionError("project_mode3: weight has " + std::to_string(w.rows()) + " rows, tensor p=" +
                             std::to_string(s.p()));
    }
    EdgeFeatureTensor out(s.pattern(), w.cols());
    detail::project_kernel(s.values(), s.p(), w, out.values());
    return out;
}

/// s1 + epsilon·s2, slotwise.
inline EdgeFeatureTensor axpy(const EdgeFeatureTensor& s1, const EdgeFeatureTensor& s2, double epsilon) {
    if (s1.p() != s2.p() || !same_support(s1.pattern(), s2.pattern())) throw SupportError("axpy: operands differ in support or p");
    std::vector<double> v = s1.values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += epsilon * s2.values()[k];
    return EdgeFeatureTensor(s1.pattern(), s1.p(), std::move(v));
}

/// Scalar-per-slot tensor to a weighted adjacency on the same support.
inline SparseAdjacency collapse_to_weighted_graph(const EdgeFeatureTensor& s) {
    if (s.p() != 1) throw DimensionError("collapse_to_weighted_graph: requires p = 1, got p=" + std::to_string(s.p()));
    return SparseAdjacency(s.pattern(), s.values(), false);
}

/// Text snapshot: header `n p slots`, then `i j v_1 ... v_p` per slot.
inline void write_snapshot(std::ostream& os, const EdgeFeatureTensor& s) {
    os.precision(17);
    os << s.n() << ' ' << s.p() << ' ' << s.slots() << '\n';
    for (std::size_t k = 0; k < s.slots(); ++k) {
        os << s.support().row_of(k) << ' ' << s.support().col_of(k);
        for (double v : s.slot(k)) os << ' ' << v;
        os << '\n';
    }
}

/// Generic snapshot record as read from text, before any structural validation.
struct SnapshotData {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<std::pair<Index, Index>> slots;
    std::vector<double> values;
};

inline SnapshotData read_snapshot_data(std::istream& is, const std::string& name = "<snapshot>") {
    SnapshotData d;
    std::string line;
    std::size_t lineno = 0;
    std::size_t count = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(is, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    };
    if (!next_line()) throw ParseError(name, lineno, "missing header");
    {
        std::istringstream hs(line);
        if (!(hs >> d.n >> d.p >> count)) throw ParseError(name, lineno, "header must be `n p slots`");
    }
    d.slots.reserve(count);
    d.values.reserve(count * d.p);
    for (std::size_t k = 0; k < count; ++k) {
        if (!next_line()) throw ParseError(name, lineno, "expected " + std::to_string(count) + " slot lines");
        std::istringstream ls(line);
        long long i = -1, j = -1;
        if (!(ls >> i >> j)) throw ParseError(name, lineno, "slot line must start with `i j`");
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= d.n) throw ParseError(name, lineno, "slot index out of range");
        d.slots.emplace_back(static_cast<Index>(i), static_cast<Index>(j));
        for (std::size_t f = 0; f < d.p; ++f) {
            double v;
            if (!(ls >> v)) throw ParseError(name, lineno, "expected " + std::to_string(d.p) + " values");
            d.values.push_back(v);
        }
    }
    return d;
}

inline EdgeFeatureTensor read_snapshot(std::istream& is, const std::string& name = "<snapshot>") {
    auto d = read_snapshot_data(is, name);
    for (const auto& [i, j] : d.slots)
        if (j >= d.n) throw ParseError(name, 0, "slot column out of range");
    auto pattern = SupportPattern::from_pairs(d.n, d.slots);
    // from_pairs sorts; reorder values to canonical order.
    std::vector<double> values(d.values.size());
    for (std::size_t k = 0; k < d.slots.size(); ++k) {
        auto t = pattern->find(d.slots[k].first, d.slots[k].second);
        std::copy_n(d.values.begin() + static_cast<std::ptrdiff_t>(k * d.p), d.p,
                    values.begin() + static_cast<std::ptrdiff_t>(*t * d.p));
    }
    EdgeFeatureTensor s(std::move(pattern), d.p, std::move(values));
    s.validate();
    return s;
}

}  // namespace tpgc
