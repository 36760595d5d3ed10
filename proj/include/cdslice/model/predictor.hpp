#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdslice/autodiff/ops.hpp"
#include "cdslice/geometry/slicing.hpp"
#include "cdslice/model/params.hpp"
#include "cdslice/rng.hpp"

namespace cdslice::model {

// Parameters attached to one tape. Trainable binding routes gradients into
// the parameters; frozen binding references the values without copying.

template <class T>
struct BoundLinear {
    ad::Var<T> weight;
    ad::Var<T> bias;
};

template <class T>
struct BoundLstmDirection {
    ad::Var<T> w_ih;
    ad::Var<T> w_hh;
    ad::Var<T> b_ih;
    ad::Var<T> b_hh;  // zero constant in single-bias mode
};

template <class T>
struct BoundModel {
    std::vector<BoundLinear<T>> pointnet;
    std::vector<std::array<BoundLstmDirection<T>, 2>> lstm;
    std::vector<BoundLinear<T>> regressor;
    const ModelConfig* config = nullptr;
};

template <class T>
BoundModel<T> bind_trainable(ad::Tape<T>& tape, ModelParams<T>& params);

template <class T>
BoundModel<T> bind_frozen(ad::Tape<T>& tape, const ModelParams<T>& params);

/// Shared per-point affine+ReLU chain applied to points[P, 2] -> [P, d_e].
template <class T>
ad::Var<T> pointnet_features(ad::Var<T> points, std::span<const BoundLinear<T>> layers);

/// One slice (max_points x 2 values, row-major) with its mask -> [d_e].
/// Rows with mask 0 are excluded from the pool unless `pool_padding`.
template <class T>
ad::Var<T> encode_slice(ad::Tape<T>& tape, std::span<const double> slice_points, std::span<const std::uint8_t> mask,
                        std::span<const BoundLinear<T>> layers, bool pool_padding);

template <class T>
struct LstmState {
    ad::Var<T> h;
    ad::Var<T> c;
};

/// Standard LSTM update with gates split in (i, f, g, o) order from
/// W_ih x + b_ih + W_hh h_prev + b_hh:
///   c = f * c_prev + i * g,  h = o * tanh(c).
template <class T>
LstmState<T> lstm_cell(ad::Var<T> x, ad::Var<T> h_prev, ad::Var<T> c_prev, const BoundLstmDirection<T>& dir);

/// Same as lstm_cell, but takes the already projected W_ih x + b_ih.
template <class T>
LstmState<T> lstm_step(ad::Var<T> x_projected, ad::Var<T> h_prev, ad::Var<T> c_prev,
                       const BoundLstmDirection<T>& dir);

/// Bidirectional multi-layer LSTM over time-major embeddings [S * batch, d]
/// (row t * batch + b). Returns [batch, 2h]: the last layer's forward state
/// after step S joined with its backward state after step 1. Dropout
/// `inter_layer_dropout` is applied between layers in training only.
template <class T>
ad::Var<T> encode_sequence(ad::Var<T> embeddings, std::size_t batch,
                           std::span<const std::array<BoundLstmDirection<T>, 2>> layers, double inter_layer_dropout,
                           bool training, Rng& rng);

/// Regression head [batch, 2h] -> [batch, 1]: affine+ReLU layers with
/// dropout after the first activation, then a final affine.
template <class T>
ad::Var<T> regress(ad::Var<T> car_embedding, std::span<const BoundLinear<T>> layers, double dropout_rate,
                   bool training, Rng& rng);

/// Full forward pass of a batch of slice tensors -> [batch, 1].
template <class T>
ad::Var<T> forward(ad::Tape<T>& tape, const BoundModel<T>& model, std::span<const geometry::SliceTensor* const> batch,
                   bool training, Rng& rng);

/// Inference-path prediction for one sample. Encodes slices in chunks on
/// short-lived tapes so memory stays bounded for large max_points.
template <class T>
T predict(const geometry::SliceTensor& slices, const ModelParams<T>& params, bool training, Rng& rng);

template <class T>
T predict(const geometry::SliceTensor& slices, const ModelParams<T>& params);

/// delta[i] = predict(slices with slice i emptied) - predict(slices).
template <class T>
std::vector<double> slice_sensitivity(const geometry::SliceTensor& slices, const ModelParams<T>& params);

/// Throws DimensionError if the tensor's slice count differs from the model's.
void check_compatible(const geometry::SliceTensor& slices, const ModelConfig& config);

}  // namespace cdslice::model
