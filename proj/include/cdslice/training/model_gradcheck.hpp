#pragma once

#include <cstddef>
#include <cstdint>

#include "cdslice/autodiff/gradcheck.hpp"
#include "cdslice/model/config.hpp"

namespace cdslice::training {

/// S=4, M_max=8, PointNet 2->4->8->16, hidden 8, head 16->8->4->1.
model::ModelConfig tiny_model_config();

/// Finite-difference check of the full forward pass plus Smooth L1 loss
/// (64-bit, dropout off) with respect to every parameter, on `samples`
/// small synthetic bodies. The differences are evaluated in long double.
ad::GradCheckReport check_model_gradients(const model::ModelConfig& config, std::size_t samples, std::uint64_t seed,
                                          const ad::GradCheckOptions& options = {}, double beta = 1.0);

}  // namespace cdslice::training
