#include "cdslice/training/model_gradcheck.hpp"

#include "cdslice/dataio/synthetic.hpp"
#include "cdslice/error.hpp"
#include "cdslice/model/predictor.hpp"
#include "cdslice/training/trainer.hpp"

namespace cdslice::training {

model::ModelConfig tiny_model_config() {
    model::ModelConfig c;
    c.slicing.slices = 4;
    c.slicing.max_points = 8;
    c.slicing.overflow = geometry::OverflowPolicy::subsample;
    c.pointnet_channels = {4, 8, 16};
    c.hidden = 8;
    c.head_widths = {8, 4};
    return c;
}

ad::GradCheckReport check_model_gradients(const model::ModelConfig& config, std::size_t samples, std::uint64_t seed,
                                          const ad::GradCheckOptions& options, double beta) {
    if (samples == 0) throw ParameterError("gradient check needs at least one sample");
    dataio::SpecRanges ranges;
    // About three quarters of capacity per slice.
    ranges.points = std::max<std::size_t>(1, config.slicing.slices * config.slicing.max_points * 3 / 4);
    geometry::SliceConfig slicing = config.slicing;
    slicing.overflow = geometry::OverflowPolicy::subsample;
    std::vector<geometry::SliceTensor> tensors;
    std::vector<double> labels;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto body = dataio::generate_synthetic_body(dataio::sample_spec(ranges, seed, i));
        tensors.push_back(geometry::slice_point_cloud(body.cloud, slicing));
        labels.push_back(body.cd);
    }
    std::vector<const geometry::SliceTensor*> batch;
    for (const auto& t : tensors) batch.push_back(&t);

    model::ModelConfig init = config;
    init.init_seed = seed;
    auto params = model::ModelParams<double>::initialize(init);
    auto sections = params.parameters();
    ad::LossBuilder<double> loss = [&](ad::Tape<double>& tape) {
        auto bound = model::bind_trainable(tape, params);
        Rng unused(0);
        auto preds = model::forward<double>(tape, bound, batch, false, unused);
        return ad::smooth_l1_loss(preds, std::span<const double>(labels), beta);
    };
    auto reference_params = params.cast<long double>();
    auto reference_sections = reference_params.parameters();
    const std::vector<long double> reference_labels(labels.begin(), labels.end());
    ad::LossBuilder<long double> reference = [&](ad::Tape<long double>& tape) {
        auto bound = model::bind_trainable(tape, reference_params);
        Rng unused(0);
        auto preds = model::forward<long double>(tape, bound, batch, false, unused);
        return ad::smooth_l1_loss(preds, std::span<const long double>(reference_labels), beta);
    };
    return ad::check_gradients<double, long double>(
        loss, std::span<ad::Parameter<double>* const>(sections), reference,
        std::span<ad::Parameter<long double>* const>(reference_sections), options);
}

}  // namespace cdslice::training
