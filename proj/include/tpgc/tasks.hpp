#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tpgc/autodiff.hpp"
#include "tpgc/error.hpp"
#include "tpgc/graph.hpp"
#include "tpgc/metrics.hpp"
#include "tpgc/model.hpp"
#include "tpgc/ops.hpp"
#include "tpgc/random.hpp"
#include "tpgc/splits.hpp"
#include "tpgc/train.hpp"

namespace tpgc {

struct LossReport {
    double loss = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
};

/// Mean −log p(label) over the mask, with argmax hit counts.
inline LossReport cross_entropy_masked(const DenseMatrix& predictions, const std::vector<int>& labels,
                                       const std::vector<Index>& mask) {
    ad::Tape tape;
    LossReport r;
    r.loss = ad::cross_entropy_masked(tape, ad::constant(predictions), labels, mask)->value;
    r.total = mask.size();
    r.correct = static_cast<std::size_t>(std::llround(accuracy(predictions, labels, mask) * static_cast<double>(mask.size())));
    return r;
}

/// Binary cross-entropy of a dense reconstruction Â against `target` over the
/// given positive and negative pairs; probabilities are clamped to [1e-7, 1 − 1e-7].
inline LossReport bce_link_loss(const DenseMatrix& reconstructed, const SparseAdjacency& target,
                                const std::vector<NodePair>& positives, const std::vector<NodePair>& negatives) {
    if (positives.empty() && negatives.empty()) throw InvalidArgument("bce_link_loss: empty sample sets");
    constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
    LossReport r;
    for (const auto* set : {&positives, &negatives}) {
        for (const auto& [i, j] : *set) {
            if (i >= reconstructed.rows() || j >= reconstructed.cols()) throw InvalidArgument("bce_link_loss: pair out of range");
            const double p = std::clamp(reconstructed(i, j), lo, hi);
            const bool y = target.at(i, j) > 0.0;
            r.loss -= y ? std::log(p) : std::log(1.0 - p);
            r.correct += (p >= 0.5) == y;
            ++r.total;
        }
    }
    r.loss /= static_cast<double>(r.total);
    return r;
}

/// Inner-product decoder: Â_ij = sigmoid(Z_i · Z_j) for each requested pair.
inline std::vector<double> link_prediction_forward(const DenseMatrix& z, const std::vector<NodePair>& pairs) {
    ad::Tape tape;
    const auto logits = ad::pair_scores(tape, ad::constant(z), pairs)->value;
    std::vector<double> out(pairs.size());
    for (std::size_t t = 0; t < pairs.size(); ++t) out[t] = ad::sigmoid(logits(t, 0));
    return out;
}

/// Dense reconstruction sigmoid(Z Zᵀ); desk scale only.
inline DenseMatrix reconstruct_dense(const DenseMatrix& z) {
    DenseMatrix a = matmul_nt(z, z);
    for (double& v : a.data()) v = ad::sigmoid(v);
    return a;
}

/// Weighted homophily of a learned graph, NaN when it carries no off-diagonal weight.
inline double learned_homophily(const SparseAdjacency& learned, const std::vector<int>& labels) {
    try {
        return weighted_homophily(learned, labels);
    } catch (const InvalidArgument&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

// ---------------------------------------------------------------------------
// Node classification (single graph or multi-view)

struct NodeClassResult {
    double test_accuracy = 0.0;
    double val_accuracy = 0.0;
    double homophily_init = std::numeric_limits<double>::quiet_NaN();
    double homophily_best = std::numeric_limits<double>::quiet_NaN();
    TrainResult train;
};

/// Trains `model` on `input` with cross-entropy over the training split.
inline NodeClassResult train_node_classifier(EtGnnModel& model, const GraphInput& input, const std::vector<int>& labels,
                                             const Splits& splits, const TrainConfig& tc) {
    if (splits.train.empty() || splits.val.empty()) throw InvalidArgument("node classification needs train and val nodes");
    auto loss_fn = [&](ad::Tape& tape, std::size_t) {
        auto fwd = model.forward(tape, input);
        return ad::cross_entropy_masked(tape, fwd.output, labels, splits.train);
    };
    auto evaluate = [&]() {
        ad::Tape tape;
        auto fwd = model.forward(tape, input);
        EvalResult ev;
        ev.loss = ad::cross_entropy_masked(tape, fwd.output, labels, splits.val)->value;
        ev.metric = accuracy(fwd.output->value, labels, splits.val);
        if (fwd.learned_graph) ev.homophily = learned_homophily((*fwd.learned_graph)->value, labels);
        return ev;
    };
    NodeClassResult r;
    r.train = train_loop(model.params(), loss_fn, evaluate, tc);
    r.homophily_init = r.train.initial.homophily;
    r.homophily_best = r.train.best.homophily;
    r.val_accuracy = r.train.best.metric;
    const auto pred = etgnn_forward(model, input);
    r.test_accuracy = splits.test.empty() ? std::numeric_limits<double>::quiet_NaN() : accuracy(pred, labels, splits.test);
    return r;
}

/// Metrics of an already-trained classifier (no training).
inline NodeClassResult evaluate_node_classifier(const EtGnnModel& model, const GraphInput& input,
                                                const std::vector<int>& labels, const Splits& splits) {
    ad::Tape tape;
    auto fwd = model.forward(tape, input);
    const auto& pred = fwd.output->value;
    NodeClassResult r;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.test_accuracy = splits.test.empty() ? nan : accuracy(pred, labels, splits.test);
    r.val_accuracy = splits.val.empty() ? nan : accuracy(pred, labels, splits.val);
    if (fwd.learned_graph) r.homophily_best = learned_homophily((*fwd.learned_graph)->value, labels);
    return r;
}

inline ModelConfig with_output_dim(ModelConfig mc, std::size_t out) {
    if (mc.gc_dims.empty()) mc.gc_dims.push_back(out);
    else mc.gc_dims.back() = out;
    return mc;
}

inline NodeClassResult run_node_classification(const LabeledGraph& g, const ModelConfig& mc, const TrainConfig& tc,
                                               std::uint64_t seed) {
    g.validate();
    auto input = GraphInput::from_graph(g.adjacency, g.features);
    EtGnnModel model(with_output_dim(mc, static_cast<std::size_t>(g.num_classes())), g.features.cols(), 1, seed);
    return train_node_classifier(model, input, g.labels, g.splits, tc);
}

/// Multi-view graph: one node set, several adjacency matrices.
struct MultiViewGraph {
    std::vector<SparseAdjacency> views;
    DenseMatrix features;
    std::vector<int> labels;
    Splits splits;

    int num_classes() const noexcept {
        int c = 0;
        for (int l : labels) c = std::max(c, l + 1);
        return c;
    }
};

/// `num_views` independent SBM samples over the same blocks; features from the first sample.
inline MultiViewGraph sbm_views(const std::vector<std::size_t>& block_sizes, std::size_t num_views, double p_in,
                                double p_out, std::uint64_t seed) {
    if (num_views == 0) throw InvalidArgument("sbm_views: need at least one view");
    MultiViewGraph mv;
    for (std::size_t v = 0; v < num_views; ++v) {
        auto g = sbm_generate(block_sizes, p_in, p_out, derive_seed(seed, v));
        if (v == 0) {
            mv.features = std::move(g.features);
            mv.labels = std::move(g.labels);
        }
        mv.views.push_back(std::move(g.adjacency));
    }
    return mv;
}

inline NodeClassResult run_multi_graph(const MultiViewGraph& mv, const ModelConfig& mc, const TrainConfig& tc,
                                       std::uint64_t seed) {
    auto input = GraphInput::from_views(mv.views, mv.features);
    ModelConfig cfg = with_output_dim(mc, static_cast<std::size_t>(mv.num_classes()));
    cfg.recipe.kind = EdgeFeatureKind::stack_graphs;
    EtGnnModel model(cfg, mv.features.cols(), mv.views.size(), seed);
    return train_node_classifier(model, input, mv.labels, mv.splits, tc);
}

// ---------------------------------------------------------------------------
// Link prediction

struct LinkPredResult {
    RankingMetrics test;
    RankingMetrics val;
    TrainResult train;
};

inline std::vector<ScoredLabel> score_pairs(const DenseMatrix& z, const std::vector<NodePair>& pos,
                                            const std::vector<NodePair>& neg) {
    std::vector<ScoredLabel> out;
    const auto sp = link_prediction_forward(z, pos);
    const auto sn = link_prediction_forward(z, neg);
    for (double s : sp) out.push_back({s, 1});
    for (double s : sn) out.push_back({s, 0});
    return out;
}

/// Link-prediction variant of a model config: identity output, embeddings of width gc_dims.back().
inline ModelConfig link_model_config(ModelConfig mc) {
    mc.output_activation = Activation::identity;
    return mc;
}

inline LinkPredResult evaluate_link_predictor(const EtGnnModel& model, const GraphInput& input, const LinkSplit& split) {
    const auto z = etgnn_forward(model, input);
    LinkPredResult r;
    if (!split.val_pos.empty()) r.val = auc_ap(score_pairs(z, split.val_pos, split.val_neg));
    if (!split.test_pos.empty()) r.test = auc_ap(score_pairs(z, split.test_pos, split.test_neg));
    return r;
}

/// BCE on all training edges plus an equal number of training-graph non-edges
/// resampled every epoch; early stopping on validation pairs.
inline LinkPredResult train_link_predictor(EtGnnModel& model, const GraphInput& input, const LinkSplit& split,
                                           const TrainConfig& tc, std::uint64_t seed) {
    const auto train_pos = undirected_edges(split.train);
    if (train_pos.empty()) throw InvalidArgument("link prediction: training graph has no edges");
    if (split.val_pos.empty()) throw InvalidArgument("link prediction: validation set is empty");

    auto pair_loss = [](ad::Tape& tape, const ad::Var<DenseMatrix>& z, const std::vector<NodePair>& pos,
                        const std::vector<NodePair>& neg) {
        std::vector<NodePair> pairs = pos;
        pairs.insert(pairs.end(), neg.begin(), neg.end());
        std::vector<double> targets(pos.size(), 1.0);
        targets.resize(pairs.size(), 0.0);
        return ad::bce_with_logits(tape, ad::pair_scores(tape, z, pairs), targets);
    };
    auto loss_fn = [&](ad::Tape& tape, std::size_t epoch) {
        Rng rng(derive_seed(seed, 1000003 + epoch));
        const auto neg = sample_non_edges(split.train, train_pos.size(), rng);
        auto fwd = model.forward(tape, input);
        return pair_loss(tape, fwd.output, train_pos, neg);
    };
    auto evaluate = [&]() {
        ad::Tape tape;
        auto fwd = model.forward(tape, input);
        EvalResult ev;
        ev.loss = pair_loss(tape, fwd.output, split.val_pos, split.val_neg)->value;
        ev.metric = auc_ap(score_pairs(fwd.output->value, split.val_pos, split.val_neg)).auc;
        return ev;
    };
    auto train = train_loop(model.params(), loss_fn, evaluate, tc);
    LinkPredResult r = evaluate_link_predictor(model, input, split);
    r.train = std::move(train);
    return r;
}

inline LinkPredResult run_link_prediction(const DenseMatrix& features, const LinkSplit& split, const ModelConfig& mc,
                                          const TrainConfig& tc, std::uint64_t seed) {
    auto input = GraphInput::from_graph(split.train, features);
    EtGnnModel model(link_model_config(mc), features.cols(), 1, seed);
    return train_link_predictor(model, input, split, tc, seed);
}

}  // namespace tpgc
