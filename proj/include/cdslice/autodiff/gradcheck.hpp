#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cdslice/autodiff/tape.hpp"

namespace cdslice::ad {

struct GradCheckOptions {
    double epsilon = 1e-5;
    double tolerance = 1e-4;
    /// Denominator floor of the relative error, so that gradients that are
    /// zero up to rounding are compared absolutely.
    double relative_floor = 1e-8;
};

struct GradCheckSection {
    std::string name;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckSection> sections;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;
    /// Smallest |pre-activation| seen by any ReLU at the unperturbed point.
    double min_relu_margin = 0.0;
    bool passed = false;
};

/// Builds a scalar loss on the given tape. Parameters must be bound with
/// tape.parameter() so that backward() accumulates into their gradients.
template <class T>
using LossBuilder = std::function<Var<T>(Tape<T>&)>;

/// Compares reverse-mode gradients of `loss` with respect to every
/// coordinate of `params` against central differences
/// (f(x + eps) - f(x - eps)) / (2 eps). A coordinate is skipped as a kink
/// when either probe changes any ReLU sign or max-pool argmax relative to
/// the unperturbed evaluation. Throws NumericError on non-finite values.
template <class T>
GradCheckReport check_gradients(const LossBuilder<T>& loss, std::span<Parameter<T>* const> params,
                                const GradCheckOptions& options = {});

/// As above, but the central differences are taken on `reference`, a copy of
/// the loss in precision R over `reference_params` (same order and shapes,
/// same values). The reverse-mode gradients still come from `loss`.
template <class T, class R>
GradCheckReport check_gradients(const LossBuilder<T>& loss, std::span<Parameter<T>* const> params,
                                const LossBuilder<R>& reference, std::span<Parameter<R>* const> reference_params,
                                const GradCheckOptions& options = {});

}  // namespace cdslice::ad
