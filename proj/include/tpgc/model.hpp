#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tpgc/autodiff.hpp"
#include "tpgc/edge_tensor.hpp"
#include "tpgc/error.hpp"
#include "tpgc/features.hpp"
#include "tpgc/graph.hpp"
#include "tpgc/layers.hpp"
#include "tpgc/ops.hpp"
#include "tpgc/optim.hpp"
#include "tpgc/random.hpp"

namespace tpgc {

enum class ModelKind { et_gcn, et_gat, gcn_only };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::et_gat: return "et_gat";
        case ModelKind::gcn_only: return "gcn_only";
        default: return "et_gcn";
    }
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "et_gcn") return ModelKind::et_gcn;
    if (s == "et_gat") return ModelKind::et_gat;
    if (s == "gcn_only") return ModelKind::gcn_only;
    throw InvalidArgument("unknown model '" + s + "' (expected et_gcn|et_gat|gcn_only)");
}

/// Which matrix drives the sample-mode products of the edge stack.
enum class EdgeWeights { renormalized, attention, blend };

inline std::string to_string(EdgeWeights w) {
    switch (w) {
        case EdgeWeights::attention: return "alpha";
        case EdgeWeights::blend: return "blend";
        default: return "a_tilde";
    }
}

inline EdgeWeights parse_edge_weights(const std::string& s) {
    if (s == "a_tilde") return EdgeWeights::renormalized;
    if (s == "alpha") return EdgeWeights::attention;
    if (s == "blend") return EdgeWeights::blend;
    throw InvalidArgument("unknown edge_weights '" + s + "' (expected a_tilde|alpha|blend)");
}

inline std::string to_string(ad::SignMode m) { return m == ad::SignMode::absolute ? "abs" : "clamp"; }

inline ad::SignMode parse_sign_mode(const std::string& s) {
    if (s == "clamp") return ad::SignMode::clamp;
    if (s == "abs") return ad::SignMode::absolute;
    throw InvalidArgument("unknown sign_mode '" + s + "' (expected clamp|abs)");
}

struct ModelConfig {
    ModelKind kind = ModelKind::et_gcn;
    EdgeFeatureRecipe recipe{};
    std::vector<std::size_t> tpgc_dims{8, 1};
    std::vector<std::size_t> gc_dims{32, 2};
    double epsilon = 0.2;
    Activation edge_hidden_activation = Activation::relu;
    Activation edge_output_activation = Activation::identity;
    Activation reducer_activation = Activation::relu;
    Activation gc_hidden_activation = Activation::relu;
    Activation output_activation = Activation::softmax_rows;
    ad::SignMode sign_mode = ad::SignMode::clamp;
    /// Only consulted for et_gat; et_gcn always uses Ã.
    EdgeWeights gat_edge_weights = EdgeWeights::attention;
    double leaky_slope = kAttentionLeakySlope;
    /// Clamp mode only: draw the last edge layer's weight from |Glorot| so the
    /// initial learned graph is nonnegative. Ignored under abs, which never zeroes
    /// a random-sign init and trains worse with the all-positive one.
    bool nonnegative_edge_init = true;
};

/// Everything a forward pass needs from the data, prepared once.
struct GraphInput {
    SparseAdjacency a_tilde;                        // renormalized input graph (support includes diagonal)
    DenseMatrix features;                           // n×d
    std::optional<EdgeFeatureTensor> stacked_edges;  // multi-graph recipe only

    static GraphInput from_graph(const SparseAdjacency& a, DenseMatrix features) {
        GraphInput in{renormalize(a), std::move(features), std::nullopt};
        if (in.features.rows() != in.a_tilde.n()) throw DimensionError("GraphInput: feature rows != n");
        return in;
    }

    /// Multi-view input: edge features stacked over the union support, propagation on
    /// the renormalized binary union graph.
    static GraphInput from_views(const std::vector<SparseAdjacency>& views, DenseMatrix features) {
        auto companion = union_binary_graph(views);
        GraphInput in{renormalize(companion), std::move(features), std::nullopt};
        in.stacked_edges = build_stacked_graph_features(views, in.a_tilde.pattern());
        if (in.features.rows() != in.a_tilde.n()) throw DimensionError("GraphInput: feature rows != n");
        return in;
    }
};

struct ForwardResult {
    ad::Var<DenseMatrix> output;
    /// Symmetric nonnegative learned edge weights before renormalization (edge models only).
    std::optional<ad::Var<SparseAdjacency>> learned_graph;
    /// Graph consumed by the node stack.
    ad::Var<SparseAdjacency> node_graph;
};

/// Edge stack (TPGC or TPGAT layers) followed by a GC node stack running on the
/// learned weighted graph; `gcn_only` skips the edge stack and runs GC on Ã.
class EtGnnModel {
public:
    EtGnnModel(ModelConfig config, std::size_t input_dim, std::size_t num_views, std::uint64_t seed)
        : config_(std::move(config)), input_dim_(input_dim), num_views_(num_views) {
        validate();
        std::uint64_t tag = 0;
        auto init = [&](const std::string& name, std::size_t r, std::size_t c) {
            params_.add(name, glorot_init(r, c, derive_seed(seed, tag++)));
        };
        if (has_edge_stack()) {
            if (config_.recipe.kind != EdgeFeatureKind::stack_graphs) init("reducer.weight", input_dim_, config_.recipe.reduce_dim);
            if (config_.kind == ModelKind::et_gat) init("attention.theta", 2 * input_dim_, 1);
            std::size_t width = config_.recipe.edge_dim(num_views_);
            for (std::size_t l = 0; l < config_.tpgc_dims.size(); ++l) {
                init("tpgc." + std::to_string(l) + ".weight", width, config_.tpgc_dims[l]);
                width = config_.tpgc_dims[l];
            }
            if (config_.nonnegative_edge_init && config_.sign_mode == ad::SignMode::clamp) {
                // With a random-sign last layer the clamp can zero every edge at step 0,
                // and clamped edges receive no gradient.
                const auto name = "tpgc." + std::to_string(config_.tpgc_dims.size() - 1) + ".weight";
                DenseMatrix w = params_.value(name);
                for (double& v : w.data()) v = std::abs(v);
                params_.var(name)->value = std::move(w);
            }
        }
        std::size_t width = input_dim_;
        for (std::size_t l = 0; l < config_.gc_dims.size(); ++l) {
            init("gc." + std::to_string(l) + ".weight", width, config_.gc_dims[l]);
            width = config_.gc_dims[l];
        }
    }

    const ModelConfig& config() const noexcept { return config_; }
    ParamTape& params() noexcept { return params_; }
    const ParamTape& params() const noexcept { return params_; }
    bool has_edge_stack() const noexcept { return config_.kind != ModelKind::gcn_only; }
    std::size_t output_dim() const noexcept { return config_.gc_dims.back(); }

    ForwardResult forward(ad::Tape& tape, const GraphInput& input) const {
        if (input.features.cols() != input_dim_) {
            throw DimensionError("EtGnnModel: expected " + std::to_string(input_dim_) + " input features, got " +
                                 std::to_string(input.features.cols()));
        }
        auto h = ad::constant(input.features);
        auto a_tilde = ad::constant(input.a_tilde);
        ForwardResult res;
        res.node_graph = a_tilde;

        if (has_edge_stack()) {
            ad::Var<EdgeFeatureTensor> s;
            if (config_.recipe.kind == EdgeFeatureKind::stack_graphs) {
                if (!input.stacked_edges) throw InvalidArgument("EtGnnModel: stacked recipe requires multi-view input");
                s = ad::constant(*input.stacked_edges);
            } else {
                s = ad::build_pair_features(tape, config_.recipe.kind, h, a_tilde, params_.var("reducer.weight"),
                                            config_.reducer_activation);
            }

            ad::Var<SparseAdjacency> prop = a_tilde;
            if (config_.kind == ModelKind::et_gat) {
                // One attention map per forward pass, scored on the input features.
                auto alpha = ad::attention(tape, h, input.a_tilde.pattern(), params_.var("attention.theta"),
                                           config_.leaky_slope);
                if (config_.gat_edge_weights == EdgeWeights::attention) prop = alpha;
                else if (config_.gat_edge_weights == EdgeWeights::blend) prop = ad::blend(tape, a_tilde, alpha);
            }

            for (std::size_t l = 0; l < config_.tpgc_dims.size(); ++l) {
                const bool last = l + 1 == config_.tpgc_dims.size();
                s = ad::tpgc_forward(tape, s, prop, params_.var("tpgc." + std::to_string(l) + ".weight"), config_.epsilon,
                                     last ? config_.edge_output_activation : config_.edge_hidden_activation);
            }
            auto collapsed = ad::collapse_to_weighted_graph(tape, s);
            auto learned = ad::symmetrize_nonnegative(tape, collapsed, config_.sign_mode);
            res.learned_graph = learned;
            res.node_graph = ad::renormalize(tape, learned);
        }

        auto z = h;
        for (std::size_t l = 0; l < config_.gc_dims.size(); ++l) {
            const bool last = l + 1 == config_.gc_dims.size();
            z = ad::gc_forward(tape, z, res.node_graph, params_.var("gc." + std::to_string(l) + ".weight"),
                               last ? config_.output_activation : config_.gc_hidden_activation);
        }
        res.output = z;
        return res;
    }

private:
    void validate() const {
        if (input_dim_ == 0) throw InvalidArgument("EtGnnModel: input dimension must be positive");
        if (config_.gc_dims.empty()) throw InvalidArgument("EtGnnModel: at least one GC layer is required");
        if (has_edge_stack()) {
            if (config_.tpgc_dims.empty()) throw InvalidArgument("EtGnnModel: edge stack needs at least one layer");
            if (config_.tpgc_dims.back() != 1) throw DimensionError("EtGnnModel: last edge layer must output 1 channel");
            if (config_.epsilon < 0.0) throw InvalidArgument("EtGnnModel: epsilon must be nonnegative");
            if (config_.recipe.kind == EdgeFeatureKind::stack_graphs && num_views_ == 0) {
                throw InvalidArgument("EtGnnModel: stacked recipe needs at least one view");
            }
        }
        for (auto d : config_.gc_dims)
            if (d == 0) throw InvalidArgument("EtGnnModel: zero-width GC layer");
        for (auto d : config_.tpgc_dims)
            if (d == 0) throw InvalidArgument("EtGnnModel: zero-width edge layer");
    }

    ModelConfig config_;
    std::size_t input_dim_;
    std::size_t num_views_;
    ParamTape params_;
};

/// Inference-only forward.
inline DenseMatrix etgnn_forward(const EtGnnModel& model, const GraphInput& input) {
    ad::Tape tape;
    return model.forward(tape, input).output->value;
}

}  // namespace tpgc
