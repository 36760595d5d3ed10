#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cdslice/geometry/slicing.hpp"

namespace cdslice::model {

/// Architecture of the slice-sequence Cd predictor. Defaults are the
/// full-size model: PointNet2D 2->32->64->256, two bidirectional LSTM layers
/// with 256 hidden units, head 512->256->64->1.
struct ModelConfig {
    geometry::SliceConfig slicing;
    /// Output widths of the shared per-point layers; the input width is 2.
    std::vector<std::size_t> pointnet_channels{32, 64, 256};
    std::size_t hidden = 256;
    std::size_t lstm_layers = 2;
    /// Separate input and recurrent bias vectors per LSTM direction.
    bool lstm_two_biases = true;
    /// Hidden widths of the regression head; input is 2 * hidden, output 1.
    std::vector<std::size_t> head_widths{256, 64};
    double lstm_dropout = 0.2;
    double head_dropout = 0.3;
    std::uint64_t init_seed = 0;

    std::size_t embedding_dim() const { return pointnet_channels.back(); }

    void validate() const;
    /// One-line summary used in mismatch messages.
    std::string describe() const;
    /// Equality of everything but the initialization seed.
    bool same_architecture(const ModelConfig& other) const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Every width divided by `divisor` (at least 1), slice settings unchanged.
ModelConfig scaled_widths(ModelConfig config, std::size_t divisor);

/// Closed-form trainable scalar count for a configuration.
std::size_t count_parameters(const ModelConfig& config);

}  // namespace cdslice::model
