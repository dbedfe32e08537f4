#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tpgc/autodiff.hpp"
#include "tpgc/dense.hpp"
#include "tpgc/error.hpp"
#include "tpgc/random.hpp"

namespace tpgc {

/// Uniform samples in ±sqrt(6 / (rows + cols)).
inline DenseMatrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (rows == 0 || cols == 0) throw InvalidArgument("glorot_init: dimensions must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Rng rng(seed);
    DenseMatrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
    return m;
}

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Named trainable parameters. Each parameter is a persistent leaf node, so
/// gradients from any number of tapes accumulate directly into it.
class ParamTape {
public:
    struct Slot {
        ad::Var<DenseMatrix> node;
        DenseMatrix m;
        DenseMatrix v;
    };

    const ad::Var<DenseMatrix>& add(const std::string& name, DenseMatrix init) {
        if (params_.count(name)) throw InvalidArgument("ParamTape: duplicate parameter '" + name + "'");
        Slot s{ad::leaf(std::move(init)), {}, {}};
        s.m = zeros_like(s.node->value);
        s.v = zeros_like(s.node->value);
        order_.push_back(name);
        return params_.emplace(name, std::move(s)).first->second.node;
    }

    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    const ad::Var<DenseMatrix>& var(const std::string& name) const { return slot(name).node; }
    DenseMatrix& value(const std::string& name) { return slot(name).node->value; }
    const DenseMatrix& value(const std::string& name) const { return slot(name).node->value; }

    /// Accumulated gradient (zeros if nothing has flowed in yet).
    DenseMatrix grad(const std::string& name) const {
        const auto& n = slot(name).node;
        return n->has_grad() ? n->grad_storage : zeros_like(n->value);
    }

    const std::vector<std::string>& names() const noexcept { return order_; }
    std::uint64_t step_count() const noexcept { return step_; }

    void zero_grad() {
        for (auto& [_, s] : params_) s.node->zero_grad();
    }

    using Snapshot = std::map<std::string, DenseMatrix>;

    Snapshot snapshot() const {
        Snapshot out;
        for (const auto& [name, s] : params_) out.emplace(name, s.node->value);
        return out;
    }

    void restore(const Snapshot& snap) {
        for (const auto& [name, m] : snap) {
            auto& dst = slot(name).node->value;
            if (!dst.same_shape(m)) throw DimensionError("ParamTape::restore: shape mismatch for '" + name + "'");
            dst = m;
        }
    }

    /// Standard bias-corrected Adam update; gradients are zeroed afterwards.
    void adam_step(double learning_rate, const AdamConfig& cfg = {}) {
        for (const auto& name : order_) {
            const auto& n = params_.at(name).node;
            if (n->has_grad() && !all_finite(n->grad_storage.data())) {
                throw NumericError("adam_step: non-finite gradient in parameter '" + name + "'");
            }
        }
        ++step_;
        const double t = static_cast<double>(step_);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        for (auto& [name, s] : params_) {
            auto& w = s.node->value.data();
            if (!s.node->has_grad()) {
                // Zero gradient: moments decay, parameter moves only by residual momentum.
                for (std::size_t i = 0; i < w.size(); ++i) {
                    s.m.data()[i] *= cfg.beta1;
                    s.v.data()[i] *= cfg.beta2;
                    w[i] -= learning_rate * (s.m.data()[i] / c1) / (std::sqrt(s.v.data()[i] / c2) + cfg.eps);
                }
                continue;
            }
            const auto& g = s.node->grad_storage.data();
            for (std::size_t i = 0; i < w.size(); ++i) {
                double& m = s.m.data()[i];
                double& v = s.v.data()[i];
                m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[i];
                v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[i] * g[i];
                w[i] -= learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
            }
        }
        zero_grad();
    }

private:
    Slot& slot(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw InvalidArgument("ParamTape: unknown parameter '" + name + "'");
        return it->second;
    }
    const Slot& slot(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw InvalidArgument("ParamTape: unknown parameter '" + name + "'");
        return it->second;
    }

    std::map<std::string, Slot> params_;
    std::vector<std::string> order_;
    std::uint64_t step_ = 0;
};

/// Free-function form of ParamTape::adam_step.
inline void adam_step(ParamTape& tape, double learning_rate, const AdamConfig& cfg = {}) {
    tape.adam_step(learning_rate, cfg);
}

}  // namespace tpgc
