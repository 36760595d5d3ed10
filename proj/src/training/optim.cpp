#include "cdslice/training/optim.hpp"

#include "cdslice/error.hpp"

namespace cdslice::training {

template <class T>
OptimizerState<T> OptimizerState<T>::for_parameters(std::span<ad::Parameter<T>* const> params) {
    OptimizerState<T> s;
    for (const auto* p : params) {
        s.first_moment.emplace_back(p->value.shape());
        s.second_moment.emplace_back(p->value.shape());
    }
    return s;
}

template <class T>
void adam_step(std::span<ad::Parameter<T>* const> params, OptimizerState<T>& state, const AdamConfig& config) {
    if (state.first_moment.size() != params.size())
        throw DimensionError("adam_step: optimizer state has " + std::to_string(state.first_moment.size()) +
                             " sections for " + std::to_string(params.size()) + " parameters");
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto* p = params[k];
        if (p->grad.size() != p->value.size() || state.first_moment[k].size() != p->value.size())
            throw DimensionError("adam_step: shape mismatch in " + p->name);
        for (T g : p->grad.values())
            if (!std::isfinite(static_cast<double>(g))) throw NumericError("adam_step: non-finite gradient in " + p->name);
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
    const T correction1 = static_cast<T>(1.0 - std::pow(config.beta1, t));
    const T correction2 = static_cast<T>(1.0 - std::pow(config.beta2, t));
    const T lr = static_cast<T>(config.learning_rate), eps = static_cast<T>(config.epsilon);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto* p = params[k];
        T* m = state.first_moment[k].data();
        T* v = state.second_moment[k].data();
        T* theta = p->value.data();
        const T* g = p->grad.data();
        for (std::size_t i = 0; i < p->size(); ++i) {
            m[i] = b1 * m[i] + (T{1} - b1) * g[i];
            v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
            const T m_hat = m[i] / correction1;
            const T v_hat = v[i] / correction2;
            theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

template <class T>
double clip_grad_norm(std::span<ad::Parameter<T>* const> params, double max_norm) {
    double sq = 0.0;
    for (const auto* p : params)
        for (T g : p->grad.values()) sq += static_cast<double>(g) * static_cast<double>(g);
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const T scale = static_cast<T>(max_norm / norm);
        for (auto* p : params)
            for (T& g : p->grad.values()) g *= scale;
    }
    return norm;
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void adam_step(std::span<ad::Parameter<float>* const>, OptimizerState<float>&, const AdamConfig&);
template void adam_step(std::span<ad::Parameter<double>* const>, OptimizerState<double>&, const AdamConfig&);
template double clip_grad_norm(std::span<ad::Parameter<float>* const>, double);
template double clip_grad_norm(std::span<ad::Parameter<double>* const>, double);

}  // namespace cdslice::training
