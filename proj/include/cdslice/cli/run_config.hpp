#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "cdslice/dataio/synthetic.hpp"
#include "cdslice/model/config.hpp"
#include "cdslice/training/trainer.hpp"

namespace cdslice::cli {

enum class Precision { f32, f64 };

/// Fully resolved settings of one command invocation. Built from the
/// defaults, then a JSON config file, then command-line flags.
struct RunConfig {
    std::string command;

    // slicing
    std::size_t slices = 80;
    /// Unset means "scan the dataset".
    std::optional<std::size_t> max_points;
    bool pool_padding = false;
    geometry::NormalizationMode normalization = geometry::NormalizationMode::none;
    geometry::OverflowPolicy overflow = geometry::OverflowPolicy::strict;

    // model
    model::ModelConfig model;  // slicing fields are filled from the above
    std::size_t width_divisor = 1;

    training::TrainConfig train;
    dataio::SpecRanges synth;
    std::size_t n_bodies = 100;

    // paths
    std::string manifest;
    std::string cache_dir;
    std::string out_dir;
    std::string checkpoint;
    std::string cloud;
    std::string resume;
    std::string train_log;
    std::string eval_csv;
    std::string split = "test";

    double histogram_bin_width = 0.005;
    double gradcheck_epsilon = 1e-5;
    double gradcheck_tolerance = 1e-4;

    Precision precision = Precision::f32;
    std::size_t threads = 1;
    std::uint64_t seed = 0;
    bool json = false;

    /// Model configuration for the given slice capacity.
    model::ModelConfig model_config(std::size_t max_points) const;
    geometry::SliceConfig slice_config(std::size_t max_points) const;
    void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& config);

/// Applies the keys present in `j` on top of `config`. Unknown keys raise
/// InputError so typos in config files do not pass silently.
void apply_json(RunConfig& config, const nlohmann::json& j);

std::string_view precision_name(Precision p);
Precision parse_precision(std::string_view s);
std::string_view normalization_name(geometry::NormalizationMode m);
geometry::NormalizationMode parse_normalization(std::string_view s);
std::string_view overflow_name(geometry::OverflowPolicy p);
geometry::OverflowPolicy parse_overflow(std::string_view s);

}  // namespace cdslice::cli
