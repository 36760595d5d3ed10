#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cdslice/autodiff/tensor.hpp"
#include "cdslice/model/config.hpp"

namespace cdslice::model {

template <class T>
struct Linear {
    ad::Parameter<T> weight;  // [out, in]
    ad::Parameter<T> bias;    // [out]
};

template <class T>
struct PointNet2DParams {
    std::vector<Linear<T>> layers;
};

/// Gate blocks are stacked in the order (input, forget, candidate, output).
template <class T>
struct LstmDirectionParams {
    ad::Parameter<T> w_ih;                 // [4h, in]
    ad::Parameter<T> w_hh;                 // [4h, h]
    ad::Parameter<T> b_ih;                 // [4h]
    std::optional<ad::Parameter<T>> b_hh;  // [4h], absent in single-bias mode
};

template <class T>
struct BiLSTMParams {
    /// layers[l][0] runs front to rear, layers[l][1] rear to front.
    std::vector<std::array<LstmDirectionParams<T>, 2>> layers;
};

template <class T>
struct RegressorParams {
    std::vector<Linear<T>> layers;
};

inline constexpr const char* kParamsVersion = "cdpm-1";

template <class T>
struct ModelParams {
    ModelConfig config;
    std::string version = kParamsVersion;
    PointNet2DParams<T> pointnet;
    BiLSTMParams<T> lstm;
    RegressorParams<T> regressor;

    /// Zero-valued parameters with the shapes implied by `config`.
    static ModelParams zeros(const ModelConfig& config);
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization seeded by
    /// config.init_seed.
    static ModelParams initialize(const ModelConfig& config);

    /// Every trainable tensor in a fixed order (pointnet, lstm, regressor).
    std::vector<ad::Parameter<T>*> parameters();
    std::vector<const ad::Parameter<T>*> parameters() const;

    void zero_grad();

    template <class U>
    ModelParams<U> cast() const;
};

template <class T>
std::size_t count_parameters(const ModelParams<T>& params) {
    std::size_t n = 0;
    for (const auto* p : params.parameters()) n += p->size();
    return n;
}

template <class T>
template <class U>
ModelParams<U> ModelParams<T>::cast() const {
    ModelParams<U> out = ModelParams<U>::zeros(config);
    out.version = version;
    auto dst = out.parameters();
    auto src = parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<U>();
    return out;
}

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;
extern template struct ModelParams<long double>;

}  // namespace cdslice::model
