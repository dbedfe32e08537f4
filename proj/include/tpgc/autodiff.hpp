#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tpgc/dense.hpp"
#include "tpgc/edge_tensor.hpp"
#include "tpgc/error.hpp"
#include "tpgc/graph.hpp"

namespace tpgc::ad {

inline double zeros_like(double) { return 0.0; }
inline SparseAdjacency zeros_like(const SparseAdjacency& a) {
    return SparseAdjacency(a.pattern(), std::vector<double>(a.nnz(), 0.0));
}
using tpgc::zeros_like;

/// A value in the recorded computation plus its adjoint. The adjoint is
/// allocated lazily with the value's shape.
template <class T>
struct Node {
    T value;
    bool requires_grad = false;
    bool grad_ready = false;
    T grad_storage{};

    explicit Node(T v, bool rg = false) : value(std::move(v)), requires_grad(rg) {}

    T& grad() {
        if (!grad_ready) {
            grad_storage = zeros_like(value);
            grad_ready = true;
        }
        return grad_storage;
    }
    bool has_grad() const noexcept { return grad_ready; }
    void zero_grad() { grad_ready = false; grad_storage = T{}; }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
Var<T> constant(T v) {
    return std::make_shared<Node<T>>(std::move(v), false);
}

template <class T>
Var<T> leaf(T v) {
    return std::make_shared<Node<T>>(std::move(v), true);
}

/// Records backward closures of named forward ops in execution order and
/// replays them in reverse. One tape per forward pass.
class Tape {
public:
    struct Record {
        std::string op;
        std::function<void()> backward;
    };

    void record(std::string op, std::function<void()> backward) {
        records_.push_back({std::move(op), std::move(backward)});
    }

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    std::vector<std::string> op_names() const {
        std::vector<std::string> out;
        for (const auto& r : records_) out.push_back(r.op);
        return out;
    }

    /// Smallest |x| seen at any non-differentiable point (ReLU, clamp) during
    /// the recorded forward; finite-difference checks use it to stay clear of kinks.
    void note_kink_distance(double d) noexcept { kink_margin_ = std::min(kink_margin_, d); }
    double kink_margin() const noexcept { return kink_margin_; }

    /// Seeds d(loss)/d(loss) = 1 and runs all recorded adjoints in reverse.
    void backward(const Var<double>& loss) {
        if (records_.empty()) throw InvalidArgument("backward: no recorded forward pass");
        if (!loss->requires_grad) {
            // Loss independent of every parameter: all gradients stay zero.
            records_.clear();
            return;
        }
        loss->grad() += 1.0;
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backward();
        records_.clear();
    }

private:
    std::vector<Record> records_;
    double kink_margin_ = std::numeric_limits<double>::infinity();
};

template <class... Ts>
bool any_requires_grad(const Var<Ts>&... vs) {
    return (vs->requires_grad || ...);
}

}  // namespace tpgc::ad
