#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cdslice/autodiff/tensor.hpp"

namespace cdslice::training {

/// Smooth L1 (Huber) loss of one residual:
///   0.5 (y - y_hat)^2              if |y - y_hat| < beta
///   beta (|y - y_hat| - 0.5 beta)  otherwise
inline double smooth_l1(double y, double y_hat, double beta) {
    const double d = std::abs(y - y_hat);
    return d < beta ? 0.5 * d * d : beta * (d - 0.5 * beta);
}

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <class T>
struct OptimizerState {
    std::vector<ad::Tensor<T>> first_moment;
    std::vector<ad::Tensor<T>> second_moment;
    std::uint64_t step = 0;

    /// Zero moments matching the shapes of `params`.
    static OptimizerState for_parameters(std::span<ad::Parameter<T>* const> params);
};

/// One Adam update with bias correction and a constant learning rate:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
/// Throws NumericError naming the section if any gradient is not finite.
template <class T>
void adam_step(std::span<ad::Parameter<T>* const> params, OptimizerState<T>& state, const AdamConfig& config);

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <class T>
double clip_grad_norm(std::span<ad::Parameter<T>* const> params, double max_norm);

}  // namespace cdslice::training
