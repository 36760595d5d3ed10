#include "cdslice/dataio/synthetic.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <numeric>
#include "json.hpp"

#include "cdslice/binary_io.hpp"
#include "cdslice/error.hpp"
#include "cdslice/parallel.hpp"
#include "cdslice/rng.hpp"

namespace cdslice::dataio {
namespace {

void check_range(const std::pair<double, double>& r, const char* name) {
    if (!(std::isfinite(r.first) && std::isfinite(r.second) && r.first <= r.second))
        throw ParameterError(fmt::format("range '{}' must be finite with lo <= hi", name));
}

/// sgn(t) |t|^e
double signed_pow(double t, double e) { return std::copysign(std::pow(std::abs(t), e), t); }

}  // namespace

void SyntheticBodySpec::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(std::isfinite(v) && v > 0.0)) throw ParameterError(fmt::format("{} must be positive, got {}", name, v));
    };
    positive(length, "length");
    positive(half_width, "half_width");
    positive(half_height, "half_height");
    positive(tail_exponent, "tail_exponent");
    positive(superellipse_exponent, "superellipse_exponent");
    if (!(nose_fraction > 0.0 && nose_fraction < 1.0)) throw ParameterError("nose_fraction must be in (0, 1)");
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw ParameterError("tail_fraction must be in (0, 1)");
    if (!(nose_fraction + tail_fraction < 1.0)) throw ParameterError("nose_fraction + tail_fraction must be < 1");
    if (points == 0) throw ParameterError("points must be positive");
}

void SpecRanges::validate() const {
    check_range(length, "length");
    check_range(nose_fraction, "nose_fraction");
    check_range(tail_fraction, "tail_fraction");
    check_range(half_width, "half_width");
    check_range(half_height, "half_height");
    check_range(tail_exponent, "tail_exponent");
    check_range(superellipse_exponent, "superellipse_exponent");
    // Every spec inside the box must be valid; checking the extreme corner is enough.
    SyntheticBodySpec worst{length.first,        nose_fraction.second, tail_fraction.second, half_width.first,
                            half_height.first,   tail_exponent.first,  superellipse_exponent.first, points, 0};
    worst.validate();
    if (!(nose_fraction.first > 0.0 && tail_fraction.first > 0.0)) throw ParameterError("fractions must be positive");
}

double superellipse_area(double a, double b, double m) {
    const double g1 = std::tgamma(1.0 + 1.0 / m);
    return 4.0 * a * b * g1 * g1 / std::tgamma(1.0 + 2.0 / m);
}

double profile_scale(const SyntheticBodySpec& spec, double u) {
    u = std::clamp(u, 0.0, 1.0);
    if (u < spec.nose_fraction) {
        const double s = u / spec.nose_fraction;
        return std::sqrt(std::max(0.0, 1.0 - (1.0 - s) * (1.0 - s)));
    }
    const double tail_start = 1.0 - spec.tail_fraction;
    if (u <= tail_start) return 1.0;
    const double s = (u - tail_start) / spec.tail_fraction;
    return std::pow(std::max(0.0, 1.0 - s), spec.tail_exponent);
}

double section_area(const SyntheticBodySpec& spec, double u) {
    const double r = profile_scale(spec, u);
    return superellipse_area(spec.half_width * r, spec.half_height * r, spec.superellipse_exponent);
}

double tail_taper_term(const SyntheticBodySpec& spec) {
    // With areas in units of L^2, A = K (1 - s)^(2p) on the tail,
    // dA/du = -K 2p (1 - s)^(2p - 1) / t_f, and the mean over s in [0, 1] of
    // (1 - s)^(4p - 2) is 1 / (4p - 1).
    const double K = superellipse_area(spec.half_width, spec.half_height, spec.superellipse_exponent) /
                     (spec.length * spec.length);
    const double p = spec.tail_exponent;
    const double slope = K * 2.0 * p / spec.tail_fraction;
    return slope * slope / (4.0 * p - 1.0);
}

double cd_proxy(const SyntheticBodySpec& spec) {
    spec.validate();
    if (!(spec.tail_exponent > 0.25)) throw ParameterError("tail_exponent must exceed 0.25 for a finite taper term");
    const double frontal = spec.half_width * spec.half_height / (spec.length * spec.length);
    return kCdBase + kCdFrontal * frontal + kCdTaper * tail_taper_term(spec);
}

SyntheticBody generate_synthetic_body(const SyntheticBodySpec& spec, const std::string& source_id) {
    spec.validate();
    SyntheticBody body;
    body.cd = cd_proxy(spec);
    body.cloud.source_id = source_id;
    body.cloud.points.reserve(spec.points);
    Rng rng(spec.seed);
    const double e = 2.0 / spec.superellipse_exponent;
    const double n = static_cast<double>(spec.points);
    for (std::size_t i = 0; i < spec.points; ++i) {
        const double u = (static_cast<double>(i) + rng.uniform()) / n;
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = profile_scale(spec, u);
        const double y = spec.half_width * r * signed_pow(std::cos(theta), e);
        const double z = spec.half_height * r * signed_pow(std::sin(theta), e);
        body.cloud.points.push_back({u * spec.length, y, z});
    }
    return body;
}

SyntheticBodySpec sample_spec(const SpecRanges& ranges, std::uint64_t seed, std::size_t index) {
    Rng rng = Rng::derived({seed, static_cast<std::uint64_t>(index)});
    auto draw = [&](const std::pair<double, double>& r) { return rng.uniform(r.first, r.second); };
    SyntheticBodySpec s;
    s.length = draw(ranges.length);
    s.nose_fraction = draw(ranges.nose_fraction);
    s.tail_fraction = draw(ranges.tail_fraction);
    s.half_width = draw(ranges.half_width);
    s.half_height = draw(ranges.half_height);
    s.tail_exponent = draw(ranges.tail_exponent);
    s.superellipse_exponent = draw(ranges.superellipse_exponent);
    s.points = ranges.points;
    s.seed = rng.next_u64();
    return s;
}

std::string spec_json(const SyntheticBodySpec& spec, double cd) {
    nlohmann::ordered_json j;
    j["length"] = spec.length;
    j["nose_fraction"] = spec.nose_fraction;
    j["tail_fraction"] = spec.tail_fraction;
    j["half_width"] = spec.half_width;
    j["half_height"] = spec.half_height;
    j["tail_exponent"] = spec.tail_exponent;
    j["superellipse_exponent"] = spec.superellipse_exponent;
    j["points"] = spec.points;
    j["seed"] = spec.seed;
    j["cd"] = cd;
    return j.dump(2) + "\n";
}

Manifest build_synthetic_dataset(std::size_t n_bodies, const SpecRanges& ranges, std::uint64_t seed,
                                 const std::filesystem::path& out_dir, std::size_t threads) {
    if (n_bodies < 3) throw ParameterError("build_synthetic_dataset needs at least 3 bodies");
    ranges.validate();
    const auto cloud_dir = out_dir / "clouds";
    std::error_code ec;
    std::filesystem::create_directories(cloud_dir, ec);
    if (ec) throw InputError(fmt::format("cannot create {}: {}", cloud_dir.string(), ec.message()));

    std::vector<std::size_t> order(n_bodies);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng = Rng::derived({seed, 0x73706c6974ULL});
    split_rng.shuffle(order);
    const std::size_t n_val = n_bodies * 15 / 100, n_test = n_bodies * 15 / 100;
    std::vector<Split> splits(n_bodies, Split::train);
    for (std::size_t k = 0; k < n_val; ++k) splits[order[k]] = Split::val;
    for (std::size_t k = n_val; k < n_val + n_test; ++k) splits[order[k]] = Split::test;

    Manifest m;
    m.base_dir = out_dir;
    m.rows.resize(n_bodies);
    auto errors = parallel_for(n_bodies, threads, [&](std::size_t i) {
        const std::string id = fmt::format("body_{:05d}", i);
        const SyntheticBodySpec spec = sample_spec(ranges, seed, i);
        const SyntheticBody body = generate_synthetic_body(spec, id);
        geometry::save_binary_cloud(body.cloud, cloud_dir / (id + ".pcld"));
        io::write_text_file(cloud_dir / (id + ".json"), spec_json(spec, body.cd));
        m.rows[i] = ManifestRow{id, std::filesystem::path("clouds") / (id + ".pcld"), body.cd, splits[i]};
    });
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    write_manifest(m, out_dir / "manifest.csv");
    return m;
}

}  // namespace cdslice::dataio
