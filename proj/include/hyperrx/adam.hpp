#pragma once

#include <vector>

#include "hyperrx/tape.hpp"
#include "hyperrx/tensor.hpp"

namespace hyperrx {

// First/second moment accumulators for one parameter tensor.
struct AdamState {
    Tensor first_moment;
    Tensor second_moment;
    long long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(const std::vector<std::size_t>& shape)
        : first_moment(Tensor::zeros(shape)), second_moment(Tensor::zeros(shape)) {}
};

// Standard bias-corrected Adam update, in place.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr);

// Convenience wrapper for training loops that rebuild a tape per step:
// attach the parameter tensors once, then per step register them as leaves
// and call step() after backward.
class AdamTrainer {
public:
    explicit AdamTrainer(double lr) : lr_(lr) {}

    void attach(Tensor* param) {
        params_.push_back(param);
        states_.emplace_back(param->shape());
    }

    // leaves[i] must be the tape leaf created from *params_[i] this step.
    void step(const Tape& tape, std::span<const Var> leaves) {
        for (std::size_t i = 0; i < params_.size(); ++i)
            adam_step(*params_[i], tape.grad(leaves[i]), states_[i], lr_);
    }

    double learning_rate() const { return lr_; }

private:
    double lr_;
    std::vector<Tensor*> params_;
    std::vector<AdamState> states_;
};

}  // namespace hyperrx
