#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdslice/geometry/point_cloud.hpp"

namespace cdslice::geometry {

/// What to do when a bin holds more than `max_points` points.
enum class OverflowPolicy {
    strict,     ///< raise CapacityError
    subsample,  ///< keep a uniform stride of the bin's points, log a warning
};

struct SliceConfig {
    std::size_t slices = 80;
    std::size_t max_points = 6500;
    /// Pool over padded rows as well as real points (ablation only).
    bool pool_padding = false;
    NormalizationMode normalization = NormalizationMode::none;
    OverflowPolicy overflow = OverflowPolicy::strict;

    void validate() const;
    friend bool operator==(const SliceConfig&, const SliceConfig&) = default;
};

/// Padded stack of (y, z) slices, front to rear. Real points fill the
/// leading mask entries of each row; padded entries are exactly zero.
struct SliceTensor {
    std::size_t slices = 0;
    std::size_t max_points = 0;
    std::vector<double> data;          // slices * max_points * 2
    std::vector<std::uint8_t> mask;    // slices * max_points
    std::vector<std::uint32_t> counts; // slices
    std::string source_id;

    SliceTensor() = default;
    SliceTensor(std::size_t s, std::size_t m)
        : slices(s), max_points(m), data(s * m * 2, 0.0), mask(s * m, 0), counts(s, 0) {}

    double y(std::size_t slice, std::size_t j) const { return data[(slice * max_points + j) * 2]; }
    double z(std::size_t slice, std::size_t j) const { return data[(slice * max_points + j) * 2 + 1]; }
    std::span<const std::uint8_t> mask_row(std::size_t slice) const {
        return {mask.data() + slice * max_points, max_points};
    }
    std::span<const double> slice_data(std::size_t slice) const {
        return {data.data() + slice * max_points * 2, max_points * 2};
    }
    std::size_t total_points() const;

    /// Zeroes slice i (mask, counts and data).
    void clear_slice(std::size_t i);
    /// Copy widened to `new_max` columns by appending padding.
    SliceTensor padded_to(std::size_t new_max) const;

    /// Throws FormatError if the mask/count/padding invariants are violated.
    void check_invariants() const;

    friend bool operator==(const SliceTensor&, const SliceTensor&) = default;
};

/// Bin index of relative streamwise position `rel` = x - x_min for bins of
/// width `width`: the i with i*w <= rel < (i+1)*w, clamped into [0, slices).
std::size_t bin_index(double rel, double width, std::size_t slices);

/// Number of points that fall into each of `slices` equal bins.
std::vector<std::size_t> bin_populations(const PointCloud3D& cloud, std::size_t slices);

/// Applies the configured normalization, then bins points by x into
/// config.slices equal-width bins over the cloud's own x-range and projects
/// each point to (y, z), keeping input order within a bin.
SliceTensor slice_point_cloud(const PointCloud3D& cloud, const SliceConfig& config);

/// Largest bin population over all clouds; deterministic in input order.
std::size_t scan_max_points(std::span<const PointCloud3D> clouds, std::size_t slices);

/// All masked-in (y, z) points, slice by slice.
std::vector<std::pair<double, double>> reconstruct_points(const SliceTensor& slices);

// Cache format: magic "SLCT0001", u32 slices, u32 max_points, u32 id length
// + id bytes, slices * u32 counts, slices * max_points * 2 float32 data, then
// the mask as packed bits (LSB first, rows concatenated, zero-padded to a
// whole byte). All integers little-endian.
void save_slice_tensor(const SliceTensor& slices, const std::filesystem::path& path);
SliceTensor load_slice_tensor(const std::filesystem::path& path);

}  // namespace cdslice::geometry
