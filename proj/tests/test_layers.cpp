#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace tpgc;
using namespace tpgc::testing;

namespace {

SparseAdjacency path3() { return SparseAdjacency::from_undirected(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

DenseMatrix dense_chain(const DenseMatrix& a, const DenseMatrix& h, const DenseMatrix& w) {
    DenseMatrix out(a.rows(), w.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t g = 0; g < w.cols(); ++g) {
            double acc = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j)
                for (std::size_t f = 0; f < h.cols(); ++f) acc += a(i, j) * h(j, f) * w(f, g);
            out(i, g) = acc;
        }
    return out;
}

double max_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

TEST(GcForward, IdentityCase) {
    std::mt19937_64 rng(1);
    auto h = random_matrix(rng, 4, 3);
    auto out = gc_forward(h, SparseAdjacency::identity(4), {DenseMatrix::identity(3), Activation::identity});
    EXPECT_EQ(out, h);
}

TEST(GcForward, ZeroFeatures) {
    std::mt19937_64 rng(2);
    auto out = gc_forward(DenseMatrix(3, 2), renormalize(path3()), {random_matrix(rng, 2, 4), Activation::identity});
    for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(GcForward, PathMatchesDenseChain) {
    std::mt19937_64 rng(3);
    auto at = renormalize(path3());
    auto h = random_matrix(rng, 3, 4);
    auto w = random_matrix(rng, 4, 2);
    auto want = dense_chain(at.to_dense(), h, w);
    EXPECT_LE(max_diff(gc_forward(h, at, {w, Activation::identity}), want), 1e-12);
    auto relu = gc_forward(h, at, {w, Activation::relu});
    for (std::size_t i = 0; i < want.data().size(); ++i) EXPECT_NEAR(relu.data()[i], std::max(want.data()[i], 0.0), 1e-12);
    auto sm = gc_forward(h, at, {w, Activation::softmax_rows});
    for (std::size_t i = 0; i < 3; ++i) {
        const double z = std::exp(want(i, 0)) + std::exp(want(i, 1));
        EXPECT_NEAR(sm(i, 0), std::exp(want(i, 0)) / z, 1e-12);
        EXPECT_NEAR(sm(i, 0) + sm(i, 1), 1.0, 1e-12);
    }
    EXPECT_THROW(gc_forward(h, at, {DenseMatrix(3, 2), Activation::identity}), DimensionError);
}

TEST(TpgcForward, IdentityAndScaling) {
    std::mt19937_64 rng(4);
    auto at = renormalize(random_graph(rng, 6, 0.4));
    auto id = SparseAdjacency::identity(6).expand_to(at.pattern());
    auto s = random_tensor(rng, at.pattern(), 3);
    EXPECT_EQ(tpgc_forward(s, id, {DenseMatrix::identity(3), 0.0, Activation::identity}).values(), s.values());
    auto scaled = tpgc_forward(s, id, {DenseMatrix::identity(3), 0.5, Activation::identity});
    for (std::size_t i = 0; i < s.values().size(); ++i) EXPECT_NEAR(scaled.values()[i], 1.5 * s.values()[i], 1e-15);
    EXPECT_THROW(tpgc_forward(s, at, {DenseMatrix::identity(3), -0.1, Activation::identity}), Error);
}

TEST(TpgcForward, MatchesDenseLayerRule) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 2 + t % 19, p = 1 + t % 5, q = 1 + t % 4;
        auto at = renormalize(random_graph(rng, n, 0.15 + 0.03 * (t % 7), t % 2 == 0));
        auto s = random_tensor(rng, at.pattern(), p);
        auto w = random_matrix(rng, p, q);
        const double eps = t % 3 == 0 ? 0.0 : 0.2;
        const bool relu = t % 2 == 1;
        // dense then mask, after each mode product
        auto want = tpgc_oracle(dense3_of(s), dense_of(at), w, eps, relu, at.support());
        auto got = tpgc_forward(s, at, {w, eps, relu ? Activation::relu : Activation::identity});
        EXPECT_LE(tensor_rel_error(got, want), 1e-10) << "instance " << t;
    }
}

TEST(TpgcForward, DecompositionWithZeroEpsilon) {
    std::mt19937_64 rng(6);
    auto at = renormalize(random_graph(rng, 10, 0.3, true));
    auto s = random_tensor(rng, at.pattern(), 4);
    auto w = random_matrix(rng, 4, 2);
    auto lhs = tpgc_forward(s, at, {w, 0.0, Activation::identity});
    auto rhs = project_mode3(propagate_mode2(propagate_mode1(s, at), at), w);
    EXPECT_EQ(lhs.values(), rhs.values());
}

TEST(TpgcForward, TapeFreePathMatchesDifferentiable) {
    std::mt19937_64 rng(11);
    auto at = renormalize(random_graph(rng, 15, 0.25, true));
    auto s = random_tensor(rng, at.pattern(), 3);
    auto w = random_matrix(rng, 3, 4);
    // second adjacency lives on a strict subset of the tensor support
    for (const auto& a : {at, SparseAdjacency::identity(15)})
        for (double eps : {0.0, 0.2})
            for (auto act : {Activation::identity, Activation::relu}) {
                ad::Tape tape;
                auto want = ad::tpgc_forward(tape, ad::constant(s), ad::constant(a), ad::constant(w), eps, act)->value;
                EXPECT_EQ(tpgc_forward(s, a, {w, eps, act}).values(), want.values());
            }
    auto outside = SparseAdjacency::from_undirected(15, {{0, 1, 1.0}});
    auto sparse_s = random_tensor(rng, SparseAdjacency::identity(15).pattern(), 3);
    EXPECT_THROW(tpgc_forward(sparse_s, outside, {w, 0.2, Activation::identity}), SupportError);
    EXPECT_THROW(tpgc_forward(s, at, {random_matrix(rng, 2, 2), 0.2, Activation::identity}), DimensionError);
    EXPECT_THROW(tpgc_forward(s, at, {w, -0.1, Activation::identity}), InvalidArgument);
}

TEST(TpgcForward, Homogeneity) {
    std::mt19937_64 rng(7);
    auto at = renormalize(random_graph(rng, 12, 0.3));
    auto s = random_tensor(rng, at.pattern(), 3);
    auto w = random_matrix(rng, 3, 2);
    const TPGCLayer layer{w, 0.2, Activation::identity};
    auto base = tpgc_forward(s, at, layer);
    for (double c : {-2.5, 0.0, 0.3, 7.0}) {
        auto sc = s;
        for (double& v : sc.values()) v *= c;
        auto out = tpgc_forward(sc, at, layer);
        for (std::size_t i = 0; i < out.values().size(); ++i) EXPECT_NEAR(out.values()[i], c * base.values()[i], 1e-12);
    }
}

TEST(Attention, ZeroThetaIsUniform) {
    std::mt19937_64 rng(8);
    auto a = random_graph(rng, 10, 0.3);
    auto h = random_matrix(rng, 10, 3);
    auto alpha = attention_forward(h, a, {DenseMatrix(6, 1)});
    for (const auto& e : alpha.entries()) {
        const double deg = static_cast<double>(a.support().row_size(e.row) - (a.support().contains(e.row, e.row) ? 1 : 0));
        EXPECT_NEAR(e.weight, 1.0 / (deg + 1.0), 1e-15);
    }
}

TEST(Attention, SingleNode) {
    auto alpha = attention_forward(DenseMatrix{{0.3, -1.0}}, SparseAdjacency::from_entries(1, {}, true),
                                   {DenseMatrix{{1.0}, {2.0}, {3.0}, {4.0}}});
    ASSERT_EQ(alpha.nnz(), 1u);
    EXPECT_DOUBLE_EQ(alpha.at(0, 0), 1.0);
}

TEST(Attention, MatchesLoopOracleAndRowsSumToOne) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = t == 0 ? 3 : 2 + t % 15, d = 1 + t % 4;
        auto a = t == 0 ? path3() : random_graph(rng, n, 0.3);
        auto h = random_matrix(rng, n, d);
        auto theta = random_matrix(rng, 2 * d, 1, 2.0);
        auto alpha = attention_forward(h, a, {theta});
        auto sup = a.support().with_diagonal();
        auto want = attention_oracle(h, theta, *sup, kAttentionLeakySlope);
        EXPECT_TRUE(alpha.support() == *sup);
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                EXPECT_NEAR(alpha.at(i, j), want[i][j], 1e-12);
                row += alpha.at(i, j);
            }
            EXPECT_NEAR(row, 1.0, 1e-12);
        }
    }
    EXPECT_THROW(attention_forward(DenseMatrix(3, 2), path3(), {DenseMatrix(3, 1)}), DimensionError);
    EXPECT_THROW(attention_forward(DenseMatrix(2, 2), path3(), {DenseMatrix(4, 1)}), DimensionError);
}

TEST(Tpgat, IdentityAlphaScalesThenProjects) {
    std::mt19937_64 rng(10);
    auto at = renormalize(random_graph(rng, 7, 0.4));
    auto s = random_tensor(rng, at.pattern(), 2);
    auto w = random_matrix(rng, 2, 3);
    auto id = SparseAdjacency::identity(7).expand_to(at.pattern());
    auto got = tpgat_forward(s, id, {w, 0.2, Activation::identity});
    auto scaled = s;
    for (double& v : scaled.values()) v *= 1.2;
    auto want = project_mode3(scaled, w);
    for (std::size_t i = 0; i < got.values().size(); ++i) EXPECT_NEAR(got.values()[i], want.values()[i], 1e-14);
}

TEST(Tpgat, SubstitutingATildeEqualsTpgc) {
    std::mt19937_64 rng(11);
    auto at = renormalize(random_graph(rng, 9, 0.3));
    auto s = random_tensor(rng, at.pattern(), 3);
    const TPGCLayer layer{random_matrix(rng, 3, 2), 0.2, Activation::relu};
    EXPECT_EQ(tpgat_forward(s, at, layer).values(), tpgc_forward(s, at, layer).values());
}

TEST(Tpgat, MatchesDenseRuleWithAttention) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 2 + t % 15, d = 2, p = 1 + t % 4;
        auto a = random_graph(rng, n, 0.3);
        auto at = renormalize(a);
        auto alpha = attention_forward(random_matrix(rng, n, d), a, {random_matrix(rng, 2 * d, 1)});
        auto s = random_tensor(rng, at.pattern(), p);
        auto w = random_matrix(rng, p, 2);
        auto want = tpgc_oracle(dense3_of(s), dense_of(alpha), w, 0.2, false, at.support());
        EXPECT_LE(tensor_rel_error(tpgat_forward(s, alpha, {w, 0.2, Activation::identity}), want), 1e-10);
    }
}

TEST(Blend, Cases) {
    std::mt19937_64 rng(13);
    auto a = random_graph(rng, 8, 0.4);
    auto at = renormalize(a);
    auto alpha = attention_forward(random_matrix(rng, 8, 2), a, {random_matrix(rng, 4, 1)});
    EXPECT_EQ(blend_edge_weights(at, at).values(), at.values());
    auto zero = SparseAdjacency(at.pattern(), std::vector<double>(at.nnz(), 0.0), true);
    auto half = blend_edge_weights(at, zero);
    for (std::size_t k = 0; k < at.nnz(); ++k) EXPECT_DOUBLE_EQ(half.values()[k], 0.5 * at.values()[k]);
    auto mix = blend_edge_weights(at, alpha);
    for (std::size_t k = 0; k < at.nnz(); ++k) EXPECT_NEAR(mix.values()[k], 0.5 * (at.values()[k] + alpha.values()[k]), 1e-15);
    auto other = renormalize(SparseAdjacency::from_undirected(8, {{0, 7, 1.0}}));
    if (!(other.support() == at.support())) EXPECT_THROW(blend_edge_weights(at, other), SupportError);
}

TEST(GcStack, ReproducesClassicTwoLayerGcn) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 5; ++t) {
        const std::size_t n = 5 + 3 * t;
        auto g = random_graph(rng, n, 0.3);
        auto at = renormalize(g);
        auto h = random_matrix(rng, n, 4);
        auto w1 = random_matrix(rng, 4, 6), w2 = random_matrix(rng, 6, 3);
        // softmax(Ã relu(Ã H W1) W2) on dense matrices
        auto dense_a = renormalize_oracle(dense_of(g));
        DenseMatrix da(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) da(i, j) = dense_a[i][j];
        auto h1 = dense_chain(da, h, w1);
        for (double& v : h1.data()) v = std::max(v, 0.0);
        auto logits = dense_chain(da, h1, w2);

        ModelConfig mc;
        mc.kind = ModelKind::gcn_only;
        mc.gc_dims = {6, 3};
        EtGnnModel model(mc, 4, 1, 0);
        model.params().value("gc.0.weight") = w1;
        model.params().value("gc.1.weight") = w2;
        auto out = etgnn_forward(model, GraphInput::from_graph(g, h));
        for (std::size_t i = 0; i < n; ++i) {
            double z = 0.0;
            for (std::size_t c = 0; c < 3; ++c) z += std::exp(logits(i, c));
            for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out(i, c), std::exp(logits(i, c)) / z, 1e-12);
        }
    }
}

TEST(Features, ConcatSingleNodeAndZero) {
    auto a = SparseAdjacency::from_entries(1, {}, true);
    auto at = renormalize(a);
    const GCLayer reducer{DenseMatrix{{1.0, -2.0}}, Activation::identity};
    auto s = build_concat_features(DenseMatrix{{3.0}}, at, reducer);
    ASSERT_EQ(s.slots(), 1u);
    EXPECT_EQ(std::vector<double>(s.slot(0).begin(), s.slot(0).end()), (std::vector<double>{3.0, -6.0, 3.0, -6.0}));

    std::mt19937_64 rng(1);
    auto p3 = renormalize(path3());
    auto z = build_concat_features(DenseMatrix(3, 4), p3, {random_matrix(rng, 4, 2), Activation::relu});
    for (double v : z.values()) EXPECT_EQ(v, 0.0);
}

TEST(Features, ConcatAndSubtractLoopOracle) {
    std::mt19937_64 rng(15);
    auto at = renormalize(path3());
    auto h = random_matrix(rng, 3, 4);
    const GCLayer reducer{random_matrix(rng, 4, 2), Activation::relu};
    auto reduced = gc_forward(h, at, reducer);
    auto cat = build_concat_features(h, at, reducer);
    auto sub = build_subtract_features(h, at, reducer);
    EXPECT_EQ(cat.p(), 4u);
    EXPECT_EQ(sub.p(), 2u);
    EXPECT_TRUE(cat.support() == at.support());
    for (std::size_t k = 0; k < cat.slots(); ++k) {
        const auto i = at.support().row_of(k), j = at.support().col_of(k);
        for (std::size_t f = 0; f < 2; ++f) {
            EXPECT_DOUBLE_EQ(cat.slot(k)[f], reduced(i, f));
            EXPECT_DOUBLE_EQ(cat.slot(k)[2 + f], reduced(j, f));
            EXPECT_DOUBLE_EQ(sub.slot(k)[f], reduced(i, f) - reduced(j, f));
            if (i == j) EXPECT_EQ(sub.slot(k)[f], 0.0);
        }
    }
    EXPECT_NO_THROW(cat.validate());
    EXPECT_THROW(build_concat_features(DenseMatrix(3, 5), at, reducer), DimensionError);
}

TEST(Features, SubtractConstantRowsIsZero) {
    auto at = renormalize(SparseAdjacency::from_undirected(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}}));
    DenseMatrix h(4, 2, 0.7);
    // on a regular graph Ã maps constant rows to constant rows
    auto s = build_subtract_features(h, at, {DenseMatrix{{1.0, 0.5}, {-1.0, 2.0}}, Activation::identity});
    for (double v : s.values()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Features, StackedGraphs) {
    std::mt19937_64 rng(16);
    auto g1 = random_graph(rng, 9, 0.3, true);
    auto g2 = random_graph(rng, 9, 0.3, true);
    auto sup = union_support({g1, g2});
    auto s = build_stacked_graph_features({g1, g2}, sup);
    EXPECT_EQ(s.p(), 2u);
    EXPECT_NO_THROW(s.validate());
    for (std::size_t k = 0; k < s.slots(); ++k) {
        const auto i = sup->row_of(k), j = sup->col_of(k);
        EXPECT_EQ(s.slot(k)[0], g1.at(i, j));
        EXPECT_EQ(s.slot(k)[1], g2.at(i, j));
    }
    auto one = build_stacked_graph_features({g1}, union_support({g1}));
    for (std::size_t k = 0; k < one.slots(); ++k) EXPECT_EQ(one.slot(k)[0], g1.at(one.support().row_of(k), one.support().col_of(k)));
    auto three = build_stacked_graph_features({g1, g1, g1}, union_support({g1}));
    for (std::size_t k = 0; k < three.slots(); ++k) {
        EXPECT_EQ(three.slot(k)[0], three.slot(k)[1]);
        EXPECT_EQ(three.slot(k)[1], three.slot(k)[2]);
    }
    EXPECT_THROW(build_stacked_graph_features({g1, random_graph(rng, 8, 0.3)}, sup), DimensionError);
}
