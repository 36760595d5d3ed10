#include "cdslice/model/params.hpp"

#include <cmath>

#include "cdslice/rng.hpp"

namespace cdslice::model {
namespace {

template <class T>
Linear<T> make_linear(const std::string& prefix, std::size_t in, std::size_t out) {
    return {ad::Parameter<T>(prefix + ".weight", {out, in}), ad::Parameter<T>(prefix + ".bias", {out})};
}

template <class T>
void fill_uniform(ad::Parameter<T>& p, double fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (auto& v : p.value.values()) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

template <class T>
ModelParams<T> ModelParams<T>::zeros(const ModelConfig& config) {
    config.validate();
    ModelParams<T> m;
    m.config = config;
    std::size_t in = 2;
    for (std::size_t i = 0; i < config.pointnet_channels.size(); ++i) {
        m.pointnet.layers.push_back(make_linear<T>("pointnet." + std::to_string(i), in, config.pointnet_channels[i]));
        in = config.pointnet_channels[i];
    }
    const std::size_t h = config.hidden;
    std::size_t layer_in = config.embedding_dim();
    for (std::size_t l = 0; l < config.lstm_layers; ++l) {
        std::array<LstmDirectionParams<T>, 2> dirs;
        for (std::size_t d = 0; d < 2; ++d) {
            const std::string prefix = "lstm.l" + std::to_string(l) + (d == 0 ? ".fwd" : ".bwd");
            dirs[d].w_ih = ad::Parameter<T>(prefix + ".w_ih", {4 * h, layer_in});
            dirs[d].w_hh = ad::Parameter<T>(prefix + ".w_hh", {4 * h, h});
            dirs[d].b_ih = ad::Parameter<T>(prefix + ".b_ih", {4 * h});
            if (config.lstm_two_biases) dirs[d].b_hh = ad::Parameter<T>(prefix + ".b_hh", {4 * h});
        }
        m.lstm.layers.push_back(std::move(dirs));
        layer_in = 2 * h;
    }
    in = 2 * h;
    for (std::size_t i = 0; i < config.head_widths.size(); ++i) {
        m.regressor.layers.push_back(make_linear<T>("regressor." + std::to_string(i), in, config.head_widths[i]));
        in = config.head_widths[i];
    }
    m.regressor.layers.push_back(make_linear<T>("regressor." + std::to_string(config.head_widths.size()), in, 1));
    return m;
}

template <class T>
ModelParams<T> ModelParams<T>::initialize(const ModelConfig& config) {
    ModelParams<T> m = zeros(config);
    Rng rng(config.init_seed);
    for (auto& layer : m.pointnet.layers) {
        const double fan_in = static_cast<double>(layer.weight.value.cols());
        fill_uniform(layer.weight, fan_in, rng);
        fill_uniform(layer.bias, fan_in, rng);
    }
    const double h = static_cast<double>(config.hidden);
    for (auto& dirs : m.lstm.layers) {
        for (auto& d : dirs) {
            fill_uniform(d.w_ih, static_cast<double>(d.w_ih.value.cols()), rng);
            fill_uniform(d.w_hh, h, rng);
            fill_uniform(d.b_ih, h, rng);
            if (d.b_hh) fill_uniform(*d.b_hh, h, rng);
        }
    }
    for (auto& layer : m.regressor.layers) {
        const double fan_in = static_cast<double>(layer.weight.value.cols());
        fill_uniform(layer.weight, fan_in, rng);
        fill_uniform(layer.bias, fan_in, rng);
    }
    return m;
}

template <class T>
std::vector<ad::Parameter<T>*> ModelParams<T>::parameters() {
    std::vector<ad::Parameter<T>*> out;
    for (auto& l : pointnet.layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    for (auto& dirs : lstm.layers) {
        for (auto& d : dirs) {
            out.push_back(&d.w_ih);
            out.push_back(&d.w_hh);
            out.push_back(&d.b_ih);
            if (d.b_hh) out.push_back(&*d.b_hh);
        }
    }
    for (auto& l : regressor.layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

template <class T>
std::vector<const ad::Parameter<T>*> ModelParams<T>::parameters() const {
    auto mut = const_cast<ModelParams<T>*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

template <class T>
void ModelParams<T>::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template struct ModelParams<long double>;

}  // namespace cdslice::model
