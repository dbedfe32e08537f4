#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tpgc/autodiff.hpp"
#include "tpgc/error.hpp"
#include "tpgc/optim.hpp"

namespace tpgc {

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t max_epochs = 10000;
    /// Stop once validation loss has not improved for this many consecutive
    /// epochs (0 behaves like 1).
    std::size_t patience = 100;
};

struct EvalResult {
    double loss = 0.0;
    double metric = 0.0;
    double homophily = std::numeric_limits<double>::quiet_NaN();
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_metric = 0.0;
    double homophily = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    EvalResult initial;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;  // 0 means the initial parameters were never beaten
    EvalResult best;
    ParamTape::Snapshot best_params;
};

/// Raised when a loss or gradient turns non-finite. The parameter tape has
/// already been restored to the best snapshot seen so far.
class DivergenceError : public NumericError {
public:
    DivergenceError(std::size_t epoch, const std::string& what)
        : NumericError("diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

using LossFn = std::function<ad::Var<double>(ad::Tape&, std::size_t epoch)>;
using EvalFn = std::function<EvalResult()>;

/// Full-batch Adam with early stopping on validation loss. On return the
/// parameters hold the best-validation snapshot.
inline TrainResult train_loop(ParamTape& params, const LossFn& loss_fn, const EvalFn& evaluate, const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("train_loop: learning rate must be positive");
    TrainResult res;
    params.zero_grad();
    res.initial = evaluate();
    res.best = res.initial;
    res.best_params = params.snapshot();
    const std::size_t patience = std::max<std::size_t>(cfg.patience, 1);
    std::size_t stale = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        ad::Tape tape;
        auto loss = loss_fn(tape, epoch);
        const double train_loss = loss->value;
        try {
            if (!std::isfinite(train_loss)) throw NumericError("training loss is " + std::to_string(train_loss));
            tape.backward(loss);
            params.adam_step(cfg.learning_rate);
        } catch (const NumericError& e) {
            params.zero_grad();
            params.restore(res.best_params);
            throw DivergenceError(epoch, e.what());
        }
        const EvalResult ev = evaluate();
        if (!std::isfinite(ev.loss)) {
            params.restore(res.best_params);
            throw DivergenceError(epoch, "validation loss is " + std::to_string(ev.loss));
        }
        res.history.push_back({epoch, train_loss, ev.loss, ev.metric, ev.homophily});
        if (ev.loss < res.best.loss) {
            res.best = ev;
            res.best_epoch = epoch;
            res.best_params = params.snapshot();
            stale = 0;
        } else if (++stale >= patience) {
            break;
        }
    }
    params.restore(res.best_params);
    return res;
}

}  // namespace tpgc
