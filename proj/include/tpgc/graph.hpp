#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpgc/dense.hpp"
#include "tpgc/error.hpp"
#include "tpgc/random.hpp"

namespace tpgc {

using Index = std::uint32_t;

struct Entry {
    Index row;
    Index col;
    double weight;

    bool operator==(const Entry&) const = default;
};

/// Precomputed contraction terms for the two masked sample-mode products on a
/// symmetric pattern. For every output slot the contributing (adjacency slot,
/// tensor slot) pairs are listed in increasing neighbor order:
///   mode 1: out (h,j) = Σ_i A(h,i) S(i,j)
///   mode 2: out (i,h) = Σ_j A(h,j) S(i,j)
/// Only neighbors i (resp. j) whose partner slot is itself in the pattern
/// contribute, so the cost of a product is proportional to the term count
/// rather than to Σ deg².
struct PropagationPlan {
    std::vector<std::size_t> mode1_offsets;
    std::vector<Index> mode1_adj;
    std::vector<Index> mode1_src;
    std::vector<std::size_t> mode2_offsets;
    std::vector<Index> mode2_adj;
    std::vector<Index> mode2_src;

    std::size_t term_count() const noexcept { return mode1_adj.size(); }
};

/// Sparsity pattern in compressed-row form. Columns are sorted within each
/// row, so entry order is the canonical (row, col) order.
class SupportPattern {
public:
    SupportPattern(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<Index> cols)
        : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)) {
        if (row_ptr_.size() != n_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != cols_.size()) {
            throw InvalidArgument("SupportPattern: malformed row pointer");
        }
        rows_.resize(cols_.size());
        for (std::size_t r = 0; r < n_; ++r) {
            if (row_ptr_[r] > row_ptr_[r + 1]) throw InvalidArgument("SupportPattern: row pointer not monotone");
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                if (cols_[k] >= n_) {
                    throw InvalidArgument("SupportPattern: column " + std::to_string(cols_[k]) + " out of range [0, " +
                                          std::to_string(n_) + ")");
                }
                if (k > row_ptr_[r] && cols_[k] <= cols_[k - 1]) {
                    throw InvalidArgument("SupportPattern: duplicate or unsorted entry (" + std::to_string(r) + ", " +
                                          std::to_string(cols_[k]) + ")");
                }
                rows_[k] = static_cast<Index>(r);
            }
        }
    }

    /// Build from unsorted (row, col) pairs; duplicates are rejected.
    static std::shared_ptr<const SupportPattern> from_pairs(std::size_t n, std::vector<std::pair<Index, Index>> pairs) {
        std::sort(pairs.begin(), pairs.end());
        std::vector<std::size_t> row_ptr(n + 1, 0);
        std::vector<Index> cols;
        cols.reserve(pairs.size());
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto [r, c] = pairs[k];
            if (r >= n || c >= n) {
                throw InvalidArgument("SupportPattern: index (" + std::to_string(r) + ", " + std::to_string(c) +
                                      ") out of range for n=" + std::to_string(n));
            }
            if (k > 0 && pairs[k - 1] == pairs[k]) {
                throw InvalidArgument("SupportPattern: duplicate entry (" + std::to_string(r) + ", " + std::to_string(c) + ")");
            }
            ++row_ptr[r + 1];
            cols.push_back(c);
        }
        for (std::size_t r = 0; r < n; ++r) row_ptr[r + 1] += row_ptr[r];
        return std::make_shared<const SupportPattern>(n, std::move(row_ptr), std::move(cols));
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t nnz() const noexcept { return cols_.size(); }

    std::size_t row_begin(std::size_t r) const noexcept { return row_ptr_[r]; }
    std::size_t row_end(std::size_t r) const noexcept { return row_ptr_[r + 1]; }
    std::size_t row_size(std::size_t r) const noexcept { return row_ptr_[r + 1] - row_ptr_[r]; }

    Index row_of(std::size_t k) const noexcept { return rows_[k]; }
    Index col_of(std::size_t k) const noexcept { return cols_[k]; }
    std::span<const Index> cols(std::size_t r) const noexcept {
        return {cols_.data() + row_ptr_[r], row_size(r)};
    }
    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<Index>& col_indices() const noexcept { return cols_; }

    /// Slot index of (r, c), if present.
    std::optional<std::size_t> find(std::size_t r, std::size_t c) const noexcept {
        if (r >= n_) return std::nullopt;
        auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
        auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
        auto it = std::lower_bound(first, last, static_cast<Index>(c));
        if (it == last || *it != c) return std::nullopt;
        return static_cast<std::size_t>(it - cols_.begin());
    }
    bool contains(std::size_t r, std::size_t c) const noexcept { return find(r, c).has_value(); }

    bool is_symmetric() const noexcept {
        for (std::size_t k = 0; k < nnz(); ++k)
            if (!contains(cols_[k], rows_[k])) return false;
        return true;
    }

    bool has_full_diagonal() const noexcept {
        for (std::size_t i = 0; i < n_; ++i)
            if (!contains(i, i)) return false;
        return true;
    }

    /// For a symmetric pattern: slot index of (j, i) for every slot (i, j).
    const std::vector<std::size_t>& transpose_slots() const {
        std::call_once(transpose_once_, [this] {
            transpose_.resize(nnz());
            for (std::size_t k = 0; k < nnz(); ++k) {
                auto t = find(cols_[k], rows_[k]);
                if (!t) throw SupportError("transpose_slots: pattern is not symmetric");
                transpose_[k] = *t;
            }
        });
        return transpose_;
    }

    /// Pattern ∪ diagonal.
    std::shared_ptr<const SupportPattern> with_diagonal() const {
        std::vector<std::pair<Index, Index>> pairs;
        pairs.reserve(nnz() + n_);
        for (std::size_t k = 0; k < nnz(); ++k)
            if (rows_[k] != cols_[k]) pairs.emplace_back(rows_[k], cols_[k]);
        for (std::size_t i = 0; i < n_; ++i) pairs.emplace_back(static_cast<Index>(i), static_cast<Index>(i));
        return from_pairs(n_, std::move(pairs));
    }

    bool operator==(const SupportPattern& o) const noexcept {
        return n_ == o.n_ && row_ptr_ == o.row_ptr_ && cols_ == o.cols_;
    }

    /// Mode-1/mode-2 contraction plan over this pattern; built on first use.
    const PropagationPlan& plan() const;

private:
    std::size_t n_;
    std::vector<std::size_t> row_ptr_;
    std::vector<Index> cols_;
    std::vector<Index> rows_;

    mutable std::once_flag transpose_once_;
    mutable std::vector<std::size_t> transpose_;
    mutable std::once_flag plan_once_;
    mutable std::unique_ptr<PropagationPlan> plan_;
};

using PatternPtr = std::shared_ptr<const SupportPattern>;

inline const PropagationPlan& SupportPattern::plan() const {
    std::call_once(plan_once_, [this] {
        if (nnz() > UINT32_MAX) throw InvalidArgument("plan: pattern too large for 32-bit slot ids");
        const auto& tr = transpose_slots();
        auto out = std::make_unique<PropagationPlan>();
        out->mode1_offsets.assign(nnz() + 1, 0);
        out->mode2_offsets.assign(nnz() + 1, 0);
        for (std::size_t o = 0; o < nnz(); ++o) {
            const std::size_t r = rows_[o], c = cols_[o];
            // Walk row r and row c together; a shared column m means both
            // (r, m) and (c, m) are slots.
            std::size_t pr = row_ptr_[r], er = row_ptr_[r + 1];
            std::size_t pc = row_ptr_[c], ec = row_ptr_[c + 1];
            while (pr < er && pc < ec) {
                if (cols_[pr] < cols_[pc]) {
                    ++pr;
                } else if (cols_[pc] < cols_[pr]) {
                    ++pc;
                } else {
                    // mode 1, out (h=r, j=c), i=m: A(h,i)=pr, S(i,j)=transpose of (j,i)=pc.
                    out->mode1_adj.push_back(static_cast<Index>(pr));
                    out->mode1_src.push_back(static_cast<Index>(tr[pc]));
                    // mode 2, out (i=r, h=c), j=m: A(h,j)=pc, S(i,j)=pr.
                    out->mode2_adj.push_back(static_cast<Index>(pc));
                    out->mode2_src.push_back(static_cast<Index>(pr));
                    ++pr;
                    ++pc;
                }
            }
            out->mode1_offsets[o + 1] = out->mode1_adj.size();
            out->mode2_offsets[o + 1] = out->mode2_adj.size();
        }
        plan_ = std::move(out);
    });
    return *plan_;
}

inline bool same_support(const PatternPtr& a, const PatternPtr& b) noexcept {
    return a == b || (a && b && *a == *b);
}

/// n×n sparse real matrix; houses A, Ã and attention coefficients.
/// Values are stored per slot of the shared pattern.
class SparseAdjacency {
public:
    SparseAdjacency() = default;
    SparseAdjacency(PatternPtr pattern, std::vector<double> values, bool symmetric = false)
        : pattern_(std::move(pattern)), values_(std::move(values)), symmetric_(symmetric) {
        if (!pattern_) throw InvalidArgument("SparseAdjacency: null pattern");
        if (values_.size() != pattern_->nnz()) throw DimensionError("SparseAdjacency: value count != nnz");
        if (!all_finite(values_)) throw NumericError("SparseAdjacency: non-finite weight");
        if (symmetric_) {
            const auto& t = pattern_->transpose_slots();
            for (std::size_t k = 0; k < values_.size(); ++k) {
                if (values_[k] != values_[t[k]]) {
                    throw InvalidArgument("SparseAdjacency: symmetric flag set but weight (" +
                                          std::to_string(pattern_->row_of(k)) + ", " +
                                          std::to_string(pattern_->col_of(k)) + ") differs from its transpose");
                }
            }
        }
    }

    /// Entries in any order; validated and stored canonically.
    static SparseAdjacency from_entries(std::size_t n, std::vector<Entry> entries, bool symmetric) {
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
        std::vector<std::pair<Index, Index>> pairs;
        std::vector<double> values;
        pairs.reserve(entries.size());
        values.reserve(entries.size());
        for (const auto& e : entries) {
            pairs.emplace_back(e.row, e.col);
            values.push_back(e.weight);
        }
        return SparseAdjacency(SupportPattern::from_pairs(n, std::move(pairs)), std::move(values), symmetric);
    }

    /// Undirected edge list, each edge stored in both directions.
    static SparseAdjacency from_undirected(std::size_t n, const std::vector<Entry>& edges) {
        std::vector<Entry> all;
        all.reserve(edges.size() * 2);
        for (const auto& e : edges) {
            all.push_back(e);
            if (e.row != e.col) all.push_back({e.col, e.row, e.weight});
        }
        return from_entries(n, std::move(all), true);
    }

    static SparseAdjacency identity(std::size_t n) {
        std::vector<Entry> e;
        for (std::size_t i = 0; i < n; ++i) e.push_back({static_cast<Index>(i), static_cast<Index>(i), 1.0});
        return from_entries(n, std::move(e), true);
    }

    std::size_t n() const noexcept { return pattern_ ? pattern_->n() : 0; }
    std::size_t nnz() const noexcept { return values_.size(); }
    const PatternPtr& pattern() const noexcept { return pattern_; }
    const SupportPattern& support() const noexcept { return *pattern_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }
    bool symmetric() const noexcept { return symmetric_; }

    double at(std::size_t r, std::size_t c) const noexcept {
        auto k = pattern_->find(r, c);
        return k ? values_[*k] : 0.0;
    }

    std::vector<Entry> entries() const {
        std::vector<Entry> out;
        out.reserve(nnz());
        for (std::size_t k = 0; k < nnz(); ++k) out.push_back({pattern_->row_of(k), pattern_->col_of(k), values_[k]});
        return out;
    }

    /// Number of off-diagonal stored entries.
    std::size_t off_diagonal_count() const noexcept {
        std::size_t c = 0;
        for (std::size_t k = 0; k < nnz(); ++k) c += pattern_->row_of(k) != pattern_->col_of(k);
        return c;
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(n(), n());
        for (std::size_t k = 0; k < nnz(); ++k) d(pattern_->row_of(k), pattern_->col_of(k)) = values_[k];
        return d;
    }

    /// Same values scattered onto a superset pattern (zero where absent).
    SparseAdjacency expand_to(const PatternPtr& target) const {
        if (target->n() != n()) throw DimensionError("expand_to: node count mismatch");
        if (same_support(pattern_, target)) return SparseAdjacency(target, values_, symmetric_);
        std::vector<double> v(target->nnz(), 0.0);
        for (std::size_t k = 0; k < nnz(); ++k) {
            auto t = target->find(pattern_->row_of(k), pattern_->col_of(k));
            if (!t) {
                throw SupportError("expand_to: entry (" + std::to_string(pattern_->row_of(k)) + ", " +
                                   std::to_string(pattern_->col_of(k)) + ") not in target support");
            }
            v[*t] = values_[k];
        }
        return SparseAdjacency(target, std::move(v), symmetric_);
    }

    /// Transpose on a symmetric pattern (values permuted).
    SparseAdjacency transposed() const {
        const auto& t = pattern_->transpose_slots();
        std::vector<double> v(nnz());
        for (std::size_t k = 0; k < nnz(); ++k) v[k] = values_[t[k]];
        return SparseAdjacency(pattern_, std::move(v), symmetric_);
    }

private:
    PatternPtr pattern_;
    std::vector<double> values_;
    bool symmetric_ = false;
};

/// D̄_ii = Σ_j (A + I)_ij.
struct DegreeVector {
    std::vector<double> values;
};

inline DegreeVector degree_vector(const SparseAdjacency& a) {
    DegreeVector d{std::vector<double>(a.n(), 1.0)};
    const auto& p = a.support();
    for (std::size_t k = 0; k < a.nnz(); ++k) {
        if (a.values()[k] < 0.0) throw InvalidArgument("degree_vector: negative weight");
        d.values[p.row_of(k)] += a.values()[k];
    }
    return d;
}

namespace detail {

/// Ã values on a pattern that already contains the diagonal; `base` holds A
/// on that pattern and the identity is added here.
inline std::vector<double> renormalized_values(const SupportPattern& p, std::span<const double> base,
                                               std::vector<double>* degrees_out = nullptr) {
    std::vector<double> deg(p.n(), 0.0);
    std::vector<double> bar(base.begin(), base.end());
    for (std::size_t k = 0; k < p.nnz(); ++k) {
        if (p.row_of(k) == p.col_of(k)) bar[k] += 1.0;
        deg[p.row_of(k)] += bar[k];
    }
    std::vector<double> inv_sqrt(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) {
        if (!(deg[i] > 0.0)) throw InternalError("renormalize: zero degree at node " + std::to_string(i));
        inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
    }
    for (std::size_t k = 0; k < p.nnz(); ++k) bar[k] *= inv_sqrt[p.row_of(k)] * inv_sqrt[p.col_of(k)];
    if (degrees_out) *degrees_out = std::move(deg);
    return bar;
}

}  // namespace detail

/// Ã = D̄^{-1/2}(A + I)D̄^{-1/2}. Support of the result is support(A) ∪ diagonal.
/// Existing self-loops are summed with the injected identity.
inline SparseAdjacency renormalize(const SparseAdjacency& a) {
    for (double w : a.values())
        if (w < 0.0) throw InvalidArgument("renormalize: adjacency weights must be nonnegative");
    auto pattern = a.support().has_full_diagonal() ? a.pattern() : a.support().with_diagonal();
    const auto base = a.expand_to(pattern);
    auto values = detail::renormalized_values(*pattern, base.values());
    if (a.symmetric()) {
        // Symmetrize exactly so the symmetric flag's bitwise check holds.
        const auto& t = pattern->transpose_slots();
        for (std::size_t k = 0; k < values.size(); ++k)
            if (k < t[k]) values[t[k]] = values[k];
    }
    return SparseAdjacency(std::move(pattern), std::move(values), a.symmetric());
}

/// Node splits; disjoint index sets.
struct Splits {
    std::vector<Index> train;
    std::vector<Index> val;
    std::vector<Index> test;
};

inline constexpr int kUnlabeled = -1;

struct LabeledGraph {
    SparseAdjacency adjacency;
    DenseMatrix features;
    std::vector<int> labels;
    Splits splits;

    std::size_t n() const noexcept { return adjacency.n(); }

    int num_classes() const noexcept {
        int c = 0;
        for (int l : labels) c = std::max(c, l + 1);
        return c;
    }

    void validate() const {
        if (features.rows() != n()) {
            throw DimensionError("LabeledGraph: feature rows " + std::to_string(features.rows()) + " != n " +
                                 std::to_string(n()));
        }
        if (labels.size() != n()) throw DimensionError("LabeledGraph: label count != n");
        std::vector<char> seen(n(), 0);
        for (const auto* set : {&splits.train, &splits.val, &splits.test}) {
            for (Index i : *set) {
                if (i >= n()) throw InvalidArgument("LabeledGraph: split index out of range");
                if (seen[i]) throw InvalidArgument("LabeledGraph: node " + std::to_string(i) + " in more than one split");
                seen[i] = 1;
            }
        }
    }
};

/// Stochastic block model sampler. Node features are the one-hot block id
/// plus uniform noise in [-0.1, 0.1], drawn after the edges from the same stream.
inline LabeledGraph sbm_generate(const std::vector<std::size_t>& block_sizes, double p_in, double p_out,
                                 std::uint64_t seed) {
    if (block_sizes.size() < 2) throw InvalidArgument("sbm_generate: need at least 2 blocks");
    if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
        throw InvalidArgument("sbm_generate: probabilities must lie in [0, 1]");
    }
    std::vector<int> labels;
    for (std::size_t b = 0; b < block_sizes.size(); ++b) labels.insert(labels.end(), block_sizes[b], static_cast<int>(b));
    const std::size_t n = labels.size();

    Rng rng(seed);
    std::vector<Entry> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.bernoulli(labels[i] == labels[j] ? p_in : p_out))
                edges.push_back({static_cast<Index>(i), static_cast<Index>(j), 1.0});

    DenseMatrix features(n, block_sizes.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < block_sizes.size(); ++c)
            features(i, c) = (static_cast<int>(c) == labels[i] ? 1.0 : 0.0) + rng.uniform(-0.1, 0.1);

    LabeledGraph g{SparseAdjacency::from_undirected(n, edges), std::move(features), std::move(labels), {}};
    return g;
}

}  // namespace tpgc
