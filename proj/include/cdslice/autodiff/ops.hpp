#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdslice/autodiff/tape.hpp"
#include "cdslice/rng.hpp"

namespace cdslice::ad {

/// input[..., in] * weight[out, in]^T + bias[out], broadcast over leading dims.
template <class T>
Var<T> affine(Var<T> input, Var<T> weight, Var<T> bias);

template <class T>
Var<T> add(Var<T> a, Var<T> b);

/// Elementwise product.
template <class T>
Var<T> mul(Var<T> a, Var<T> b);

/// max(0, v); the subgradient at 0 is 0.
template <class T>
Var<T> relu(Var<T> input);

template <class T>
Var<T> sigmoid(Var<T> input);

template <class T>
Var<T> tanh_act(Var<T> input);

/// Channelwise max over the rows of input[M, d] whose mask entry is 1.
/// An all-zero mask yields the zero vector. Ties route the gradient to the
/// lowest row index.
template <class T>
Var<T> masked_max_pool(Var<T> input, std::span<const std::uint8_t> mask);

/// Channelwise max over contiguous row segments: segment s covers rows
/// [offsets[s], offsets[s+1]). Output is [offsets.size() - 1, d]; empty
/// segments give zero rows.
template <class T>
Var<T> segment_max_pool(Var<T> input, std::span<const std::size_t> offsets);

/// Concatenation along `axis` of tensors whose other dims agree.
template <class T>
Var<T> concat(std::span<const Var<T>> parts, std::size_t axis);

template <class T>
Var<T> concat(Var<T> a, Var<T> b, std::size_t axis) {
    const Var<T> parts[2] = {a, b};
    return concat<T>(std::span<const Var<T>>(parts, 2), axis);
}

/// Sub-range [begin, begin + length) along `axis`.
template <class T>
Var<T> slice(Var<T> input, std::size_t axis, std::size_t begin, std::size_t length);

/// Inverted dropout: in training, zero each element with probability `rate`
/// and scale survivors by 1 / (1 - rate). Identity otherwise.
template <class T>
Var<T> dropout(Var<T> input, double rate, bool training, Rng& rng);

/// Sum of all elements, shape (1,).
template <class T>
Var<T> sum(Var<T> input);

/// Mean Smooth L1 loss between predictions (any shape with one value per
/// sample) and fixed targets, shape (1,):
///   0.5 d^2 if |d| < beta, else beta (|d| - 0.5 beta).
template <class T>
Var<T> smooth_l1_loss(Var<T> predictions, std::span<const T> targets, double beta);

}  // namespace cdslice::ad
