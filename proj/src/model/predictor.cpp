#include "cdslice/model/predictor.hpp"

#include <algorithm>

namespace cdslice::model {

using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

template <class T, class Bind>
BoundModel<T> bind_with(ad::Tape<T>& tape, const ModelConfig& config, Bind bind, const PointNet2DParams<T>& pn,
                        const BiLSTMParams<T>& lstm, const RegressorParams<T>& head) {
    BoundModel<T> m;
    m.config = &config;
    for (const auto& l : pn.layers) m.pointnet.push_back({bind(l.weight), bind(l.bias)});
    for (const auto& dirs : lstm.layers) {
        std::array<BoundLstmDirection<T>, 2> bound;
        for (std::size_t d = 0; d < 2; ++d) {
            const auto& p = dirs[d];
            bound[d].w_ih = bind(p.w_ih);
            bound[d].w_hh = bind(p.w_hh);
            bound[d].b_ih = bind(p.b_ih);
            bound[d].b_hh = p.b_hh ? bind(*p.b_hh) : tape.constant(Tensor<T>(ad::Shape{p.b_ih.size()}));
        }
        m.lstm.push_back(bound);
    }
    for (const auto& l : head.layers) m.regressor.push_back({bind(l.weight), bind(l.bias)});
    return m;
}

/// Time-major gather of the pooled rows of every (slice, sample) pair.
template <class T>
std::pair<Tensor<T>, std::vector<std::size_t>> gather_points(std::span<const geometry::SliceTensor* const> batch,
                                                              std::size_t first_slice, std::size_t last_slice,
                                                              bool pool_padding) {
    std::vector<std::size_t> offsets{0};
    for (std::size_t t = first_slice; t < last_slice; ++t)
        for (const auto* st : batch) offsets.push_back(offsets.back() + (pool_padding ? st->max_points : st->counts[t]));
    Tensor<T> pts(ad::Shape{offsets.back(), 2});
    std::size_t row = 0;
    for (std::size_t t = first_slice; t < last_slice; ++t) {
        for (const auto* st : batch) {
            const std::size_t n = pool_padding ? st->max_points : st->counts[t];
            const auto src = st->slice_data(t);
            for (std::size_t j = 0; j < 2 * n; ++j) pts[row * 2 + j] = static_cast<T>(src[j]);
            row += n;
        }
    }
    return {std::move(pts), std::move(offsets)};
}

}  // namespace

void check_compatible(const geometry::SliceTensor& slices, const ModelConfig& config) {
    if (slices.slices != config.slicing.slices)
        throw DimensionError("slice tensor has " + std::to_string(slices.slices) + " slices, model expects " +
                             std::to_string(config.slicing.slices));
}

template <class T>
BoundModel<T> bind_trainable(Tape<T>& tape, ModelParams<T>& params) {
    return bind_with<T>(
        tape, params.config, [&](const ad::Parameter<T>& p) { return tape.parameter(const_cast<ad::Parameter<T>&>(p)); },
        params.pointnet, params.lstm, params.regressor);
}

template <class T>
BoundModel<T> bind_frozen(Tape<T>& tape, const ModelParams<T>& params) {
    return bind_with<T>(
        tape, params.config, [&](const ad::Parameter<T>& p) { return tape.constant_ref(p.value); }, params.pointnet,
        params.lstm, params.regressor);
}

template <class T>
Var<T> pointnet_features(Var<T> points, std::span<const BoundLinear<T>> layers) {
    Var<T> x = points;
    for (const auto& l : layers) x = ad::relu(ad::affine(x, l.weight, l.bias));
    return x;
}

template <class T>
Var<T> encode_slice(Tape<T>& tape, std::span<const double> slice_points, std::span<const std::uint8_t> mask,
                    std::span<const BoundLinear<T>> layers, bool pool_padding) {
    const std::size_t m = mask.size();
    if (slice_points.size() != 2 * m)
        throw DimensionError("encode_slice: " + std::to_string(slice_points.size()) + " coordinates for mask of " +
                             std::to_string(m));
    Tensor<T> pts(ad::Shape{m, 2});
    for (std::size_t i = 0; i < 2 * m; ++i) pts[i] = static_cast<T>(slice_points[i]);
    Var<T> features = pointnet_features(tape.constant(std::move(pts)), layers);
    if (pool_padding) {
        const std::vector<std::uint8_t> all(m, 1);
        return ad::masked_max_pool(features, std::span<const std::uint8_t>(all));
    }
    return ad::masked_max_pool(features, mask);
}

template <class T>
LstmState<T> lstm_step(Var<T> x_projected, Var<T> h_prev, Var<T> c_prev, const BoundLstmDirection<T>& dir) {
    const std::size_t h = h_prev.shape().back();
    Var<T> gates = ad::add(x_projected, ad::affine(h_prev, dir.w_hh, dir.b_hh));
    Var<T> i = ad::sigmoid(ad::slice(gates, 1, 0, h));
    Var<T> f = ad::sigmoid(ad::slice(gates, 1, h, h));
    Var<T> g = ad::tanh_act(ad::slice(gates, 1, 2 * h, h));
    Var<T> o = ad::sigmoid(ad::slice(gates, 1, 3 * h, h));
    Var<T> c = ad::add(ad::mul(f, c_prev), ad::mul(i, g));
    Var<T> hn = ad::mul(o, ad::tanh_act(c));
    return {hn, c};
}

template <class T>
LstmState<T> lstm_cell(Var<T> x, Var<T> h_prev, Var<T> c_prev, const BoundLstmDirection<T>& dir) {
    return lstm_step(ad::affine(x, dir.w_ih, dir.b_ih), h_prev, c_prev, dir);
}

template <class T>
Var<T> encode_sequence(Var<T> embeddings, std::size_t batch, std::span<const std::array<BoundLstmDirection<T>, 2>> layers,
                       double inter_layer_dropout, bool training, Rng& rng) {
    Tape<T>& tape = *embeddings.tape;
    const std::size_t total = embeddings.shape().front();
    if (batch == 0 || total % batch != 0 || total == 0)
        throw DimensionError("encode_sequence: " + std::to_string(total) + " rows do not form batches of " +
                             std::to_string(batch));
    const std::size_t steps = total / batch;
    Var<T> layer_in = embeddings;
    Var<T> final_states[2];
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const bool last = l + 1 == layers.size();
        std::vector<Var<T>> outputs[2];
        for (std::size_t d = 0; d < 2; ++d) {
            const auto& dir = layers[l][d];
            const std::size_t h = dir.w_hh.shape().back();
            Var<T> projected = ad::affine(layer_in, dir.w_ih, dir.b_ih);
            LstmState<T> state{tape.constant(Tensor<T>(ad::Shape{batch, h})),
                               tape.constant(Tensor<T>(ad::Shape{batch, h}))};
            if (!last) outputs[d].resize(steps);
            for (std::size_t k = 0; k < steps; ++k) {
                const std::size_t t = d == 0 ? k : steps - 1 - k;
                state = lstm_step(ad::slice(projected, 0, t * batch, batch), state.h, state.c, dir);
                if (!last) outputs[d][t] = state.h;
            }
            final_states[d] = state.h;
        }
        if (!last) {
            Var<T> fwd = ad::concat<T>(std::span<const Var<T>>(outputs[0]), 0);
            Var<T> bwd = ad::concat<T>(std::span<const Var<T>>(outputs[1]), 0);
            layer_in = ad::dropout(ad::concat(fwd, bwd, 1), inter_layer_dropout, training, rng);
        }
    }
    return ad::concat(final_states[0], final_states[1], 1);
}

template <class T>
Var<T> regress(Var<T> car_embedding, std::span<const BoundLinear<T>> layers, double dropout_rate, bool training,
               Rng& rng) {
    Var<T> x = car_embedding;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        x = ad::affine(x, layers[i].weight, layers[i].bias);
        if (i + 1 == layers.size()) break;
        x = ad::relu(x);
        if (i == 0) x = ad::dropout(x, dropout_rate, training, rng);
    }
    return x;
}

template <class T>
Var<T> forward(Tape<T>& tape, const BoundModel<T>& model, std::span<const geometry::SliceTensor* const> batch,
               bool training, Rng& rng) {
    const ModelConfig& cfg = *model.config;
    if (batch.empty()) throw DimensionError("forward: empty batch");
    for (const auto* st : batch) check_compatible(*st, cfg);
    const std::size_t S = cfg.slicing.slices;
    auto [pts, offsets] = gather_points<T>(batch, 0, S, cfg.slicing.pool_padding);
    Var<T> features = pointnet_features(tape.constant(std::move(pts)), std::span<const BoundLinear<T>>(model.pointnet));
    Var<T> embeddings = ad::segment_max_pool(features, std::span<const std::size_t>(offsets));
    Var<T> car = encode_sequence<T>(embeddings, batch.size(), model.lstm, cfg.lstm_dropout, training, rng);
    return regress<T>(car, model.regressor, cfg.head_dropout, training, rng);
}

template <class T>
T predict(const geometry::SliceTensor& slices, const ModelParams<T>& params, bool training, Rng& rng) {
    const ModelConfig& cfg = params.config;
    check_compatible(slices, cfg);
    const std::size_t S = cfg.slicing.slices, d = cfg.embedding_dim();
    const geometry::SliceTensor* batch[1] = {&slices};
    Tensor<T> embeddings(ad::Shape{S, d});
    constexpr std::size_t kChunk = 8;
    for (std::size_t t0 = 0; t0 < S; t0 += kChunk) {
        const std::size_t t1 = std::min(S, t0 + kChunk);
        Tape<T> tape(false);
        BoundModel<T> bound;
        for (const auto& l : params.pointnet.layers)
            bound.pointnet.push_back({tape.constant_ref(l.weight.value), tape.constant_ref(l.bias.value)});
        auto [pts, offsets] = gather_points<T>(batch, t0, t1, cfg.slicing.pool_padding);
        Var<T> features = pointnet_features(tape.constant(std::move(pts)), std::span<const BoundLinear<T>>(bound.pointnet));
        const Tensor<T>& pooled = ad::segment_max_pool(features, std::span<const std::size_t>(offsets)).value();
        std::copy(pooled.values().begin(), pooled.values().end(), embeddings.row(t0));
    }
    Tape<T> tape(false);
    BoundModel<T> bound = bind_frozen(tape, params);
    Var<T> car = encode_sequence<T>(tape.constant(std::move(embeddings)), 1, bound.lstm, cfg.lstm_dropout, training, rng);
    return regress<T>(car, bound.regressor, cfg.head_dropout, training, rng).value()[0];
}

template <class T>
T predict(const geometry::SliceTensor& slices, const ModelParams<T>& params) {
    Rng unused(0);
    return predict(slices, params, false, unused);
}

template <class T>
std::vector<double> slice_sensitivity(const geometry::SliceTensor& slices, const ModelParams<T>& params) {
    const double base = static_cast<double>(predict(slices, params));
    std::vector<double> deltas(slices.slices, 0.0);
    geometry::SliceTensor occluded = slices;
    for (std::size_t i = 0; i < slices.slices; ++i) {
        if (slices.counts[i] == 0) continue;  // already empty
        occluded.clear_slice(i);
        deltas[i] = static_cast<double>(predict(occluded, params)) - base;
        // restore slice i
        std::copy_n(slices.mask.begin() + static_cast<std::ptrdiff_t>(i * slices.max_points), slices.max_points,
                    occluded.mask.begin() + static_cast<std::ptrdiff_t>(i * slices.max_points));
        std::copy_n(slices.data.begin() + static_cast<std::ptrdiff_t>(i * slices.max_points * 2),
                    slices.max_points * 2, occluded.data.begin() + static_cast<std::ptrdiff_t>(i * slices.max_points * 2));
        occluded.counts[i] = slices.counts[i];
    }
    return deltas;
}

#define CDSLICE_INSTANTIATE_PREDICTOR(T)                                                                            \
    template BoundModel<T> bind_trainable(Tape<T>&, ModelParams<T>&);                                              \
    template BoundModel<T> bind_frozen(Tape<T>&, const ModelParams<T>&);                                           \
    template Var<T> pointnet_features(Var<T>, std::span<const BoundLinear<T>>);                                    \
    template Var<T> encode_slice(Tape<T>&, std::span<const double>, std::span<const std::uint8_t>,                 \
                                 std::span<const BoundLinear<T>>, bool);                                           \
    template LstmState<T> lstm_step(Var<T>, Var<T>, Var<T>, const BoundLstmDirection<T>&);                         \
    template LstmState<T> lstm_cell(Var<T>, Var<T>, Var<T>, const BoundLstmDirection<T>&);                         \
    template Var<T> encode_sequence(Var<T>, std::size_t, std::span<const std::array<BoundLstmDirection<T>, 2>>,    \
                                    double, bool, Rng&);                                                           \
    template Var<T> regress(Var<T>, std::span<const BoundLinear<T>>, double, bool, Rng&);                          \
    template Var<T> forward(Tape<T>&, const BoundModel<T>&, std::span<const geometry::SliceTensor* const>, bool,   \
                            Rng&);                                                                                 \
    template T predict(const geometry::SliceTensor&, const ModelParams<T>&, bool, Rng&);                           \
    template T predict(const geometry::SliceTensor&, const ModelParams<T>&);                                       \
    template std::vector<double> slice_sensitivity(const geometry::SliceTensor&, const ModelParams<T>&);

CDSLICE_INSTANTIATE_PREDICTOR(float)
CDSLICE_INSTANTIATE_PREDICTOR(double)
CDSLICE_INSTANTIATE_PREDICTOR(long double)

}  // namespace cdslice::model
