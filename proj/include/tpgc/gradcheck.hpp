#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tpgc/autodiff.hpp"
#include "tpgc/optim.hpp"

namespace tpgc {

struct GradCheckOptions {
    double step = 1e-5;
    double rel_tol = 1e-4;
    double abs_floor = 1e-7;
};

struct GradCheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> worst;  // one per parameter, largest relative error
    std::size_t checked = 0;
    std::size_t failures = 0;
    double max_abs_err = 0.0;
    double kink_margin = std::numeric_limits<double>::infinity();

    bool passed() const noexcept { return failures == 0; }
};

inline bool gradient_agrees(double analytic, double numeric, const GradCheckOptions& o) {
    const double diff = std::abs(analytic - numeric);
    return diff <= o.abs_floor || diff <= o.rel_tol * std::max(std::abs(analytic), std::abs(numeric));
}

/// Relative error, or 0 when the difference sits within the absolute floor.
inline double significance(const GradCheckEntry& e, const GradCheckOptions& o) {
    return e.abs_err <= o.abs_floor ? 0.0 : e.rel_err;
}

using ScalarFn = std::function<ad::Var<double>(ad::Tape&)>;

/// Compares reverse-mode gradients of every parameter entry with central
/// differences of the same scalar function.
inline GradCheckReport check_gradients(ParamTape& params, const ScalarFn& fn, const GradCheckOptions& opt = {}) {
    GradCheckReport rep;
    params.zero_grad();
    {
        ad::Tape tape;
        auto loss = fn(tape);
        rep.kink_margin = tape.kink_margin();
        tape.backward(loss);
    }
    auto eval = [&] {
        ad::Tape tape;
        return fn(tape)->value;
    };
    for (const auto& name : params.names()) {
        const DenseMatrix analytic = params.grad(name);
        auto& value = params.var(name)->value;
        GradCheckEntry worst{name};
        for (std::size_t k = 0; k < value.data().size(); ++k) {
            double& x = value.data()[k];
            const double saved = x;
            x = saved + opt.step;
            const double up = eval();
            x = saved - opt.step;
            const double down = eval();
            x = saved;
            GradCheckEntry e{name, k, analytic.data()[k], (up - down) / (2.0 * opt.step)};
            e.abs_err = std::abs(e.analytic - e.numeric);
            const double scale = std::max(std::abs(e.analytic), std::abs(e.numeric));
            e.rel_err = scale > 0.0 ? e.abs_err / scale : 0.0;
            e.pass = gradient_agrees(e.analytic, e.numeric, opt);
            ++rep.checked;
            rep.max_abs_err = std::max(rep.max_abs_err, e.abs_err);
            if (!e.pass) ++rep.failures;
            // failures rank above passes, then by relative error; entries inside the
            // absolute floor rank lowest since their relative error is noise
            if (k == 0 || (!e.pass && worst.pass) || (e.pass == worst.pass && significance(e, opt) > significance(worst, opt))) worst = e;
        }
        rep.worst.push_back(worst);
    }
    params.zero_grad();
    return rep;
}

}  // namespace tpgc
