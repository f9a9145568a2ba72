#include "hypobench/autodiff/adam.hpp"

#include <cmath>
#include <limits>

#include "hypobench/common/errors.hpp"

namespace hypobench::ad {

void adam_step(std::vector<Tensor>& params, AdamState& state) {
    if (state.first_moment.empty()) {
        for (const Tensor& p : params) {
            state.first_moment.emplace_back(p.numel(), 0.0);
            state.second_moment.emplace_back(p.numel(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw ContractError("adam_step: parameter list changed size between steps");
    }
    if (state.step == std::numeric_limits<std::uint64_t>::max()) throw NumericError("adam_step: step counter overflow");
    ++state.step;

    const auto& cfg = state.config;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    if (!(correction1 > 0.0) || !(correction2 > 0.0)) throw NumericError("adam_step: degenerate bias correction");

    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = params[k];
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        if (m.size() != p.numel()) throw ContractError("adam_step: parameter shape changed between steps");
        auto grad = p.grad();
        auto value = p.mutable_values();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad.empty() ? 0.0 : grad[i];
            if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

void zero_grads(std::vector<Tensor>& params) {
    for (Tensor& p : params) p.zero_grad();
}

}  // namespace hypobench::ad
