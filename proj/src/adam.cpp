#include "hyperrx/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace hyperrx {

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr) {
    if (!param.same_shape(grad) || !param.same_shape(state.first_moment))
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step_count += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < param.numel(); ++i) {
        const double g = grad[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double m_hat = m / corr1;
        const double v_hat = v / corr2;
        param[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

}  // namespace hyperrx
