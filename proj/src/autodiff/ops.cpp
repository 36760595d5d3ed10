#include "cdslice/autodiff/ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cdslice/autodiff/kernels.hpp"

namespace cdslice::ad {
namespace {

template <class T>
void require_same_tape(Var<T> a, Var<T> b) {
    if (a.tape != b.tape) throw Error("operands recorded on different tapes");
}

template <class T>
void require_same_shape(const char* op, Var<T> a, Var<T> b) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                             " differ");
}

template <class T, class Fn, class Deriv>
Var<T> unary(Var<T> input, Fn fn, Deriv deriv_from_output_and_input) {
    Tape<T>& tape = *input.tape;
    const Tensor<T>& x = input.value();
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = fn(x[i]);
    const std::size_t xid = input.id;
    return tape.push(std::move(y), {xid}, [xid, deriv_from_output_and_input](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        const Tensor<T>& yv = t.value(self);
        const Tensor<T>& xv = t.value(xid);
        Tensor<T>& gx = t.grad(xid);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * deriv_from_output_and_input(yv[i], xv[i]);
    });
}

struct AxisSplit {
    std::size_t outer = 1;
    std::size_t inner = 1;  // elements per unit step along the axis
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

}  // namespace

template <class T>
Var<T> affine(Var<T> input, Var<T> weight, Var<T> bias) {
    require_same_tape(input, weight);
    require_same_tape(input, bias);
    Tape<T>& tape = *input.tape;
    const Tensor<T>& x = input.value();
    const Tensor<T>& w = weight.value();
    const Tensor<T>& b = bias.value();
    if (w.shape().size() != 2 || x.shape().empty() || x.cols() != w.shape()[1] || b.size() != w.shape()[0]) {
        throw DimensionError("affine: input " + shape_str(x.shape()) + " incompatible with weight " +
                             shape_str(w.shape()) + " and bias " + shape_str(b.shape()));
    }
    const std::size_t in = w.shape()[1], out = w.shape()[0], rows = x.rows();
    Shape yshape = x.shape();
    yshape.back() = out;
    Tensor<T> y(yshape);
    kernels::affine_forward(x.data(), rows, in, tape.transposed(weight.id).data(), b.data(), out, y.data());

    const std::size_t xid = input.id, wid = weight.id, bid = bias.id;
    return tape.push(std::move(y), {xid, wid, bid}, [=](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        if (t.requires_grad(xid))
            kernels::affine_backward_input(gy.data(), rows, out, t.value(wid).data(), in, t.grad(xid).data());
        T* dw = t.requires_grad(wid) ? t.grad(wid).data() : nullptr;
        T* db = t.requires_grad(bid) ? t.grad(bid).data() : nullptr;
        if (dw || db) kernels::affine_backward_params(gy.data(), t.value(xid).data(), rows, in, out, dw, db);
    });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
    require_same_tape(a, b);
    require_same_shape("add", a, b);
    const Tensor<T>& av = a.value();
    const Tensor<T>& bv = b.value();
    Tensor<T> y(av.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
    const std::size_t aid = a.id, bid = b.id;
    return a.tape->push(std::move(y), {aid, bid}, [aid, bid](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        for (std::size_t id : {aid, bid}) {
            if (!t.requires_grad(id)) continue;
            Tensor<T>& g = t.grad(id);
            for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
        }
    });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
    require_same_tape(a, b);
    require_same_shape("mul", a, b);
    const Tensor<T>& av = a.value();
    const Tensor<T>& bv = b.value();
    Tensor<T> y(av.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
    const std::size_t aid = a.id, bid = b.id;
    return a.tape->push(std::move(y), {aid, bid}, [aid, bid](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        if (t.requires_grad(aid)) {
            const Tensor<T>& bv = t.value(bid);
            Tensor<T>& ga = t.grad(aid);
            for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
        }
        if (t.requires_grad(bid)) {
            const Tensor<T>& av = t.value(aid);
            Tensor<T>& gb = t.grad(bid);
            for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
        }
    });
}

template <class T>
Var<T> relu(Var<T> input) {
    if (KinkProbe* probe = input.tape->probe) {
        for (T v : input.value().values()) {
            probe->decisions.push_back(v > T{0} ? 1u : 0u);
            probe->min_relu_margin = std::min(probe->min_relu_margin, static_cast<double>(std::abs(v)));
        }
    }
    return unary(
        input, [](T v) { return v > T{0} ? v : T{0}; }, [](T, T x) { return x > T{0} ? T{1} : T{0}; });
}

template <class T>
Var<T> sigmoid(Var<T> input) {
    return unary(
        input,
        [](T v) {
            if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
            const T e = std::exp(v);
            return e / (T{1} + e);
        },
        [](T y, T) { return y * (T{1} - y); });
}

template <class T>
Var<T> tanh_act(Var<T> input) {
    return unary(
        input, [](T v) { return std::tanh(v); }, [](T y, T) { return T{1} - y * y; });
}

template <class T>
Var<T> masked_max_pool(Var<T> input, std::span<const std::uint8_t> mask) {
    const Tensor<T>& x = input.value();
    if (x.shape().size() != 2)
        throw DimensionError("masked_max_pool: expected a rank-2 input, got " + shape_str(x.shape()));
    const std::size_t m = x.shape()[0], d = x.shape()[1];
    if (mask.size() != m)
        throw DimensionError("masked_max_pool: mask length " + std::to_string(mask.size()) + " for input " +
                             shape_str(x.shape()));
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    Tensor<T> y(Shape{d});
    std::vector<std::size_t> argmax(d, kNone);
    for (std::size_t r = 0; r < m; ++r) {
        if (!mask[r]) continue;
        const T* xr = x.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            if (argmax[c] == kNone || xr[c] > y[c]) {
                y[c] = xr[c];
                argmax[c] = r;
            }
        }
    }
    if (KinkProbe* probe = input.tape->probe)
        for (auto a : argmax) probe->decisions.push_back(static_cast<std::uint32_t>(a));
    const std::size_t xid = input.id;
    return input.tape->push(std::move(y), {xid}, [xid, d, argmax = std::move(argmax)](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        Tensor<T>& gx = t.grad(xid);
        for (std::size_t c = 0; c < d; ++c)
            if (argmax[c] != kNone) gx[argmax[c] * d + c] += gy[c];
    });
}

template <class T>
Var<T> segment_max_pool(Var<T> input, std::span<const std::size_t> offsets) {
    const Tensor<T>& x = input.value();
    if (x.shape().size() != 2)
        throw DimensionError("segment_max_pool: expected a rank-2 input, got " + shape_str(x.shape()));
    if (offsets.empty() || offsets.back() > x.shape()[0])
        throw DimensionError("segment_max_pool: offsets do not fit input " + shape_str(x.shape()));
    const std::size_t d = x.shape()[1], segments = offsets.size() - 1;
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    Tensor<T> y(Shape{segments, d});
    std::vector<std::size_t> argmax(segments * d, kNone);
    for (std::size_t s = 0; s < segments; ++s) {
        if (offsets[s + 1] < offsets[s]) throw DimensionError("segment_max_pool: offsets must be non-decreasing");
        T* ys = y.row(s);
        std::size_t* as = argmax.data() + s * d;
        for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
            const T* xr = x.row(r);
            for (std::size_t c = 0; c < d; ++c) {
                if (as[c] == kNone || xr[c] > ys[c]) {
                    ys[c] = xr[c];
                    as[c] = r;
                }
            }
        }
    }
    if (KinkProbe* probe = input.tape->probe)
        for (auto a : argmax) probe->decisions.push_back(static_cast<std::uint32_t>(a));
    const std::size_t xid = input.id;
    return input.tape->push(std::move(y), {xid}, [xid, d, argmax = std::move(argmax)](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        Tensor<T>& gx = t.grad(xid);
        for (std::size_t i = 0; i < argmax.size(); ++i)
            if (argmax[i] != kNone) gx[argmax[i] * d + i % d] += gy[i];
    });
}

template <class T>
Var<T> concat(std::span<const Var<T>> parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat: no operands");
    const Shape& first = parts[0].shape();
    if (axis >= first.size()) throw DimensionError("concat: axis out of range for shape " + shape_str(first));
    Shape out_shape = first;
    out_shape[axis] = 0;
    std::vector<std::size_t> ids, widths;
    for (const auto& p : parts) {
        require_same_tape(parts[0], p);
        const Shape& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
        if (!ok) throw DimensionError("concat: shapes " + shape_str(first) + " and " + shape_str(s) + " differ off-axis");
        out_shape[axis] += s[axis];
        ids.push_back(p.id);
        widths.push_back(split_at(s, axis).inner * s[axis]);
    }
    const AxisSplit split = split_at(out_shape, axis);
    const std::size_t row = split.inner * out_shape[axis];
    Tensor<T> y(out_shape);
    std::size_t col = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor<T>& v = parts[k].value();
        for (std::size_t o = 0; o < split.outer; ++o)
            std::copy_n(v.data() + o * widths[k], widths[k], y.data() + o * row + col);
        col += widths[k];
    }
    const std::size_t outer = split.outer;
    Tape<T>& tape = *parts[0].tape;
    return tape.push(std::move(y), ids, [ids, widths, outer, row](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        std::size_t col = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (t.requires_grad(ids[k])) {
                Tensor<T>& g = t.grad(ids[k]);
                for (std::size_t o = 0; o < outer; ++o) {
                    const T* src = gy.data() + o * row + col;
                    T* dst = g.data() + o * widths[k];
                    for (std::size_t i = 0; i < widths[k]; ++i) dst[i] += src[i];
                }
            }
            col += widths[k];
        }
    });
}

template <class T>
Var<T> slice(Var<T> input, std::size_t axis, std::size_t begin, std::size_t length) {
    const Tensor<T>& x = input.value();
    const Shape& xs = x.shape();
    if (axis >= xs.size() || begin + length > xs[axis])
        throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(begin + length) +
                             ") on axis " + std::to_string(axis) + " of shape " + shape_str(xs));
    const AxisSplit split = split_at(xs, axis);
    Shape ys = xs;
    ys[axis] = length;
    Tensor<T> y(ys);
    const std::size_t in_row = xs[axis] * split.inner, out_row = length * split.inner, off = begin * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o)
        std::copy_n(x.data() + o * in_row + off, out_row, y.data() + o * out_row);
    const std::size_t xid = input.id, outer = split.outer;
    return input.tape->push(std::move(y), {xid}, [=](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        Tensor<T>& gx = t.grad(xid);
        for (std::size_t o = 0; o < outer; ++o) {
            const T* src = gy.data() + o * out_row;
            T* dst = gx.data() + o * in_row + off;
            for (std::size_t i = 0; i < out_row; ++i) dst[i] += src[i];
        }
    });
}

template <class T>
Var<T> dropout(Var<T> input, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return input;
    const Tensor<T>& x = input.value();
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    Tensor<T> factor(x.shape());
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        factor[i] = rng.uniform() < rate ? T{0} : keep_scale;
        y[i] = x[i] * factor[i];
    }
    const std::size_t xid = input.id;
    return input.tape->push(std::move(y), {xid}, [xid, factor = std::move(factor)](Tape<T>& t, std::size_t self) {
        const Tensor<T>& gy = t.grad(self);
        Tensor<T>& gx = t.grad(xid);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * factor[i];
    });
}

template <class T>
Var<T> sum(Var<T> input) {
    const Tensor<T>& x = input.value();
    T total{0};
    for (T v : x.values()) total += v;
    const std::size_t xid = input.id;
    return input.tape->push(Tensor<T>::scalar(total), {xid}, [xid](Tape<T>& t, std::size_t self) {
        const T g = t.grad(self)[0];
        for (T& v : t.grad(xid).values()) v += g;
    });
}

template <class T>
Var<T> smooth_l1_loss(Var<T> predictions, std::span<const T> targets, double beta) {
    if (!(beta > 0.0)) throw ParameterError("smooth_l1_loss: beta must be positive");
    const Tensor<T>& p = predictions.value();
    if (p.size() != targets.size() || p.size() == 0)
        throw DimensionError("smooth_l1_loss: " + std::to_string(p.size()) + " predictions for " +
                             std::to_string(targets.size()) + " targets");
    const T b = static_cast<T>(beta);
    const std::size_t n = p.size();
    std::vector<T> slope(n);
    T total{0};
    for (std::size_t i = 0; i < n; ++i) {
        const T d = p[i] - targets[i];
        const T ad = std::abs(d);
        if (ad < b) {
            total += T{0.5} * d * d;
            slope[i] = d;
        } else {
            total += b * (ad - T{0.5} * b);
            slope[i] = d > T{0} ? b : -b;
        }
    }
    const T inv_n = T{1} / static_cast<T>(n);
    const std::size_t pid = predictions.id;
    return predictions.tape->push(Tensor<T>::scalar(total * inv_n), {pid},
                                  [pid, inv_n, slope = std::move(slope)](Tape<T>& t, std::size_t self) {
                                      const T g = t.grad(self)[0] * inv_n;
                                      Tensor<T>& gp = t.grad(pid);
                                      for (std::size_t i = 0; i < slope.size(); ++i) gp[i] += g * slope[i];
                                  });
}

#define CDSLICE_INSTANTIATE_OPS(T)                                                               \
    template Var<T> affine(Var<T>, Var<T>, Var<T>);                                              \
    template Var<T> add(Var<T>, Var<T>);                                                         \
    template Var<T> mul(Var<T>, Var<T>);                                                         \
    template Var<T> relu(Var<T>);                                                                \
    template Var<T> sigmoid(Var<T>);                                                             \
    template Var<T> tanh_act(Var<T>);                                                            \
    template Var<T> masked_max_pool(Var<T>, std::span<const std::uint8_t>);                      \
    template Var<T> segment_max_pool(Var<T>, std::span<const std::size_t>);                      \
    template Var<T> concat(std::span<const Var<T>>, std::size_t);                                \
    template Var<T> slice(Var<T>, std::size_t, std::size_t, std::size_t);                        \
    template Var<T> dropout(Var<T>, double, bool, Rng&);                                         \
    template Var<T> sum(Var<T>);                                                                 \
    template Var<T> smooth_l1_loss(Var<T>, std::span<const T>, double);

CDSLICE_INSTANTIATE_OPS(float)
CDSLICE_INSTANTIATE_OPS(double)
CDSLICE_INSTANTIATE_OPS(long double)

}  // namespace cdslice::ad
