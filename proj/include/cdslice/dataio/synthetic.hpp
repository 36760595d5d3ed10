#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include "cdslice/dataio/manifest.hpp"
#include "cdslice/geometry/point_cloud.hpp"

namespace cdslice::dataio {

/// Parametric streamlined body along x in [0, length]. The cross-section at
/// station u = x / length is the superellipse |y/a|^m + |z/b|^m = 1 with
/// a = half_width * r(u), b = half_height * r(u) and profile
///   nose (s = u / nose_fraction):              r = sqrt(1 - (1 - s)^2)
///   midbody:                                   r = 1
///   tail (s = (u - 1 + tail_fraction) / tail_fraction):  r = (1 - s)^tail_exponent
/// Defaults are car-sized, in meters.
struct SyntheticBodySpec {
    double length = 4.5;
    double nose_fraction = 0.2;
    double tail_fraction = 0.3;
    double half_width = 0.99;
    double half_height = 0.675;
    double tail_exponent = 2.0;
    double superellipse_exponent = 2.5;
    std::size_t points = 2048;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const SyntheticBodySpec&, const SyntheticBodySpec&) = default;
};

/// Uniform sampling ranges for build_synthetic_dataset.
struct SpecRanges {
    std::pair<double, double> length{4.3, 4.7};
    std::pair<double, double> nose_fraction{0.10, 0.25};
    std::pair<double, double> tail_fraction{0.20, 0.40};
    std::pair<double, double> half_width{0.81, 1.17};
    std::pair<double, double> half_height{0.54, 0.81};
    std::pair<double, double> tail_exponent{1.0, 3.0};
    std::pair<double, double> superellipse_exponent{2.0, 4.0};
    std::size_t points = 2048;

    void validate() const;
};

// Label constants of the analytic drag proxy.
inline constexpr double kCdBase = 0.20;
inline constexpr double kCdFrontal = 0.50;
inline constexpr double kCdTaper = 0.15;

/// Area of |y/a|^m + |z/b|^m <= 1: 4 a b Gamma(1 + 1/m)^2 / Gamma(1 + 2/m).
double superellipse_area(double a, double b, double m);

/// Profile factor r(u) for u in [0, 1].
double profile_scale(const SyntheticBodySpec& spec, double u);

/// Cross-section area A(u).
double section_area(const SyntheticBodySpec& spec, double u);

/// Mean of (dA/du)^2 over the tail with A measured in units of L^2, in
/// closed form. Invariant to uniform scaling of the body.
double tail_taper_term(const SyntheticBodySpec& spec);

/// cd = 0.20 + 0.50 * a0 b0 / L^2 + 0.15 * tail_taper_term.
double cd_proxy(const SyntheticBodySpec& spec);

struct SyntheticBody {
    geometry::PointCloud3D cloud;
    double cd = 0.0;
};

/// Surface samples at stratified stations u_i = (i + U_i) / N with a uniform
/// angle per station, seeded by spec.seed.
SyntheticBody generate_synthetic_body(const SyntheticBodySpec& spec, const std::string& source_id = {});

/// Spec number `index` of a dataset drawn from `ranges` with `seed`.
SyntheticBodySpec sample_spec(const SpecRanges& ranges, std::uint64_t seed, std::size_t index);

std::string spec_json(const SyntheticBodySpec& spec, double cd);

/// Writes clouds/<id>.pcld, clouds/<id>.json and manifest.csv under
/// `out_dir`. Split: floor(15%) validation, floor(15%) test, rest training,
/// assigned by a seeded shuffle.
Manifest build_synthetic_dataset(std::size_t n_bodies, const SpecRanges& ranges, std::uint64_t seed,
                                 const std::filesystem::path& out_dir, std::size_t threads = 1);

}  // namespace cdslice::dataio
