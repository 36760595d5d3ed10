#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdslice/dataio/manifest.hpp"
#include "cdslice/geometry/slicing.hpp"
#include "cdslice/training/trainer.hpp"

namespace cdslice::dataio {

struct SplitStats {
    std::size_t count = 0;
    double cd_min = 0.0;
    double cd_mean = 0.0;
    double cd_max = 0.0;
};

struct DatasetStats {
    std::map<Split, SplitStats> splits;  // always holds all three splits
    std::size_t slices = 0;
    std::size_t max_points = 0;  // over every cloud in the manifest
    std::size_t total_points = 0;

    std::string to_json() const;
    std::string to_text() const;
};

/// Per-split label summaries and the dataset-wide slice capacity for
/// `slices` bins. Loads every cloud.
DatasetStats dataset_stats(const Manifest& manifest, std::size_t slices, std::size_t threads = 1);

/// Cache file name of a sample.
std::filesystem::path cache_path(const std::filesystem::path& cache_dir, const std::string& id);

/// Slices each row's cloud (or reads its cache file when `cache_dir` is set
/// and holds one for the same slice count). Cached tensors narrower than
/// config.max_points are padded; wider ones raise ConfigMismatchError.
std::vector<training::Sample> load_samples(const Manifest& manifest, const std::vector<ManifestRow>& rows,
                                           const geometry::SliceConfig& config,
                                           const std::optional<std::filesystem::path>& cache_dir = std::nullopt,
                                           std::size_t threads = 1);

}  // namespace cdslice::dataio
