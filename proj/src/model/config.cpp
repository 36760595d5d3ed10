#include "cdslice/model/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cdslice/error.hpp"

namespace cdslice::model {

void ModelConfig::validate() const {
    slicing.validate();
    if (pointnet_channels.empty()) throw ParameterError("pointnet_channels must not be empty");
    for (auto c : pointnet_channels)
        if (c == 0) throw ParameterError("pointnet channel widths must be positive");
    if (hidden == 0) throw ParameterError("hidden must be positive");
    if (lstm_layers == 0) throw ParameterError("lstm_layers must be positive");
    for (auto w : head_widths)
        if (w == 0) throw ParameterError("head widths must be positive");
    for (double r : {lstm_dropout, head_dropout})
        if (!(r >= 0.0 && r < 1.0)) throw ParameterError(fmt::format("dropout rate {} outside [0, 1)", r));
}

std::string ModelConfig::describe() const {
    return fmt::format("S={} M_max={} pool_padding={} pointnet=2->{} hidden={} layers={} two_biases={} head={}->{}->1 "
                       "dropout=({}, {})",
                       slicing.slices, slicing.max_points, slicing.pool_padding, fmt::join(pointnet_channels, "->"),
                       hidden, lstm_layers, lstm_two_biases, 2 * hidden, fmt::join(head_widths, "->"), lstm_dropout,
                       head_dropout);
}

bool ModelConfig::same_architecture(const ModelConfig& other) const {
    ModelConfig a = *this;
    a.init_seed = other.init_seed;
    return a == other;
}

ModelConfig scaled_widths(ModelConfig config, std::size_t divisor) {
    auto scale = [divisor](std::size_t w) { return std::max<std::size_t>(1, w / divisor); };
    for (auto& c : config.pointnet_channels) c = scale(c);
    config.hidden = scale(config.hidden);
    for (auto& w : config.head_widths) w = scale(w);
    return config;
}

std::size_t count_parameters(const ModelConfig& config) {
    std::size_t total = 0;
    std::size_t in = 2;
    for (auto c : config.pointnet_channels) {
        total += c * in + c;
        in = c;
    }
    const std::size_t h = config.hidden, gates = 4 * h;
    std::size_t layer_in = config.embedding_dim();
    for (std::size_t l = 0; l < config.lstm_layers; ++l) {
        const std::size_t per_dir = gates * layer_in + gates * h + gates * (config.lstm_two_biases ? 2 : 1);
        total += 2 * per_dir;
        layer_in = 2 * h;
    }
    in = 2 * h;
    for (auto w : config.head_widths) {
        total += w * in + w;
        in = w;
    }
    total += in + 1;
    return total;
}

}  // namespace cdslice::model
