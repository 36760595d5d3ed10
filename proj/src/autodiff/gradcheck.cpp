#include "cdslice/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cdslice::ad {
namespace {

template <class T>
T evaluate(const LossBuilder<T>& loss, KinkProbe& probe) {
    Tape<T> tape(false);
    probe.clear();
    tape.probe = &probe;
    const T v = loss(tape).value()[0];
    if (!std::isfinite(static_cast<double>(v))) throw NumericError("check_gradients: loss is not finite");
    return v;
}

}  // namespace

template <class T, class R>
GradCheckReport check_gradients(const LossBuilder<T>& loss, std::span<Parameter<T>* const> params,
                                const LossBuilder<R>& reference, std::span<Parameter<R>* const> reference_params,
                                const GradCheckOptions& options) {
    if (reference_params.size() != params.size())
        throw ParameterError("check_gradients: reference parameter list does not match");
    for (std::size_t k = 0; k < params.size(); ++k)
        if (reference_params[k]->value.shape() != params[k]->value.shape())
            throw ParameterError("check_gradients: reference shape mismatch for " + params[k]->name);
    for (auto* p : params) p->zero_grad();
    KinkProbe base;
    {
        Tape<T> tape(true);
        tape.probe = &base;
        Var<T> root = loss(tape);
        if (!std::isfinite(static_cast<double>(root.value()[0])))
            throw NumericError("check_gradients: loss is not finite");
        tape.backward(root);
    }

    GradCheckReport report;
    report.min_relu_margin = base.min_relu_margin;
    KinkProbe reference_base;
    evaluate(reference, reference_base);
    const R eps = static_cast<R>(options.epsilon);
    KinkProbe plus, minus;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter<T>* p = params[k];
        Parameter<R>* q = reference_params[k];
        GradCheckSection section;
        section.name = p->name;
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double analytic = static_cast<double>(p->grad[i]);
            if (!std::isfinite(analytic)) throw NumericError("check_gradients: non-finite gradient in " + p->name);
            const R saved = q->value[i];
            q->value[i] = saved + eps;
            const R f_plus = evaluate(reference, plus);
            q->value[i] = saved - eps;
            const R f_minus = evaluate(reference, minus);
            q->value[i] = saved;
            if (plus.decisions != base.decisions || minus.decisions != base.decisions ||
                reference_base.decisions != base.decisions) {
                ++section.skipped_kinks;
                continue;
            }
            const double numeric = static_cast<double>((f_plus - f_minus) / (2 * eps));
            const double abs_err = std::abs(analytic - numeric);
            const double denom = std::max({std::abs(analytic), std::abs(numeric), options.relative_floor});
            section.max_rel_error = std::max(section.max_rel_error, abs_err / denom);
            section.max_abs_error = std::max(section.max_abs_error, abs_err);
            ++section.checked;
        }
        report.max_rel_error = std::max(report.max_rel_error, section.max_rel_error);
        report.checked += section.checked;
        report.skipped_kinks += section.skipped_kinks;
        report.sections.push_back(std::move(section));
    }
    report.passed = report.max_rel_error <= options.tolerance;
    return report;
}

template <class T>
GradCheckReport check_gradients(const LossBuilder<T>& loss, std::span<Parameter<T>* const> params,
                                const GradCheckOptions& options) {
    return check_gradients<T, T>(loss, params, loss, params, options);
}

template GradCheckReport check_gradients<float>(const LossBuilder<float>&, std::span<Parameter<float>* const>,
                                                const GradCheckOptions&);
template GradCheckReport check_gradients<double>(const LossBuilder<double>&, std::span<Parameter<double>* const>,
                                                 const GradCheckOptions&);
template GradCheckReport check_gradients<double, long double>(const LossBuilder<double>&,
                                                              std::span<Parameter<double>* const>,
                                                              const LossBuilder<long double>&,
                                                              std::span<Parameter<long double>* const>,
                                                              const GradCheckOptions&);

}  // namespace cdslice::ad
