#include "cdslice/geometry/slicing.hpp"

#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>

#include "cdslice/binary_io.hpp"
#include "cdslice/error.hpp"

namespace cdslice::geometry {
namespace {

constexpr std::string_view kSliceMagic = "SLCT0001";

struct XRange {
    double lo;
    double width;
};

XRange x_range(const PointCloud3D& cloud, std::size_t slices) {
    double lo = cloud.points.front().x, hi = lo;
    for (const auto& p : cloud.points) {
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
    }
    return {lo, (hi - lo) / static_cast<double>(slices)};
}

}  // namespace

void SliceConfig::validate() const {
    if (slices < 1) throw ParameterError("slice count must be at least 1");
    if (max_points < 1) throw ParameterError("max_points must be at least 1");
}

std::size_t SliceTensor::total_points() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

void SliceTensor::clear_slice(std::size_t i) {
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(i * max_points), max_points, std::uint8_t{0});
    std::fill_n(data.begin() + static_cast<std::ptrdiff_t>(i * max_points * 2), max_points * 2, 0.0);
    counts[i] = 0;
}

SliceTensor SliceTensor::padded_to(std::size_t new_max) const {
    if (new_max < max_points) throw DimensionError("padded_to cannot shrink a slice tensor");
    SliceTensor out(slices, new_max);
    out.source_id = source_id;
    out.counts = counts;
    for (std::size_t s = 0; s < slices; ++s) {
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(s * max_points * 2), max_points * 2,
                    out.data.begin() + static_cast<std::ptrdiff_t>(s * new_max * 2));
        std::copy_n(mask.begin() + static_cast<std::ptrdiff_t>(s * max_points), max_points,
                    out.mask.begin() + static_cast<std::ptrdiff_t>(s * new_max));
    }
    return out;
}

void SliceTensor::check_invariants() const {
    if (data.size() != slices * max_points * 2 || mask.size() != slices * max_points || counts.size() != slices)
        throw FormatError("slice tensor buffers do not match shape");
    for (std::size_t s = 0; s < slices; ++s) {
        if (counts[s] > max_points) throw FormatError("slice " + std::to_string(s) + " count exceeds capacity");
        for (std::size_t j = 0; j < max_points; ++j) {
            const bool real = j < counts[s];
            if (mask[s * max_points + j] != (real ? 1 : 0))
                throw FormatError("slice " + std::to_string(s) + " mask disagrees with its count");
            if (!real && (y(s, j) != 0.0 || z(s, j) != 0.0))
                throw FormatError("slice " + std::to_string(s) + " has non-zero padding");
        }
    }
}

std::size_t bin_index(double rel, double width, std::size_t slices) {
    const double q = std::floor(rel / width);
    std::size_t i = q <= 0.0 ? 0 : std::min(static_cast<std::size_t>(q), slices - 1);
    // floor(rel / w) can land one bin off the interval test near edges.
    while (i > 0 && rel < static_cast<double>(i) * width) --i;
    while (i + 1 < slices && rel >= static_cast<double>(i + 1) * width) ++i;
    return i;
}

std::vector<std::size_t> bin_populations(const PointCloud3D& cloud, std::size_t slices) {
    validate(cloud);
    if (slices < 1) throw ParameterError("slice count must be at least 1");
    const XRange r = x_range(cloud, slices);
    std::vector<std::size_t> pop(slices, 0);
    for (const auto& p : cloud.points) ++pop[bin_index(p.x - r.lo, r.width, slices)];
    return pop;
}

SliceTensor slice_point_cloud(const PointCloud3D& input, const SliceConfig& config) {
    config.validate();
    validate(input);
    const PointCloud3D normalized = config.normalization == NormalizationMode::none
                                        ? PointCloud3D{}
                                        : normalize_cloud(input, config.normalization);
    const PointCloud3D& cloud = config.normalization == NormalizationMode::none ? input : normalized;

    const std::size_t S = config.slices, M = config.max_points;
    const XRange r = x_range(cloud, S);
    std::vector<std::vector<std::uint32_t>> members(S);
    for (std::size_t k = 0; k < cloud.points.size(); ++k)
        members[bin_index(cloud.points[k].x - r.lo, r.width, S)].push_back(static_cast<std::uint32_t>(k));

    SliceTensor out(S, M);
    out.source_id = cloud.source_id;
    for (std::size_t s = 0; s < S; ++s) {
        auto& idx = members[s];
        if (idx.size() > M) {
            if (config.overflow == OverflowPolicy::strict)
                throw CapacityError("cloud '" + cloud.source_id + "': slice " + std::to_string(s) + " holds " +
                                    std::to_string(idx.size()) + " points, capacity is " + std::to_string(M));
            spdlog::warn("cloud '{}': slice {} holds {} points, keeping a uniform stride of {}", cloud.source_id, s,
                         idx.size(), M);
            std::vector<std::uint32_t> kept(M);
            for (std::size_t j = 0; j < M; ++j) kept[j] = idx[j * idx.size() / M];
            idx = std::move(kept);
        }
        out.counts[s] = static_cast<std::uint32_t>(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const Point3& p = cloud.points[idx[j]];
            out.data[(s * M + j) * 2] = p.y;
            out.data[(s * M + j) * 2 + 1] = p.z;
            out.mask[s * M + j] = 1;
        }
    }
    return out;
}

std::size_t scan_max_points(std::span<const PointCloud3D> clouds, std::size_t slices) {
    if (clouds.empty()) throw InputError("scan_max_points: no clouds given");
    std::size_t best = 0;
    for (const auto& c : clouds) {
        const auto pop = bin_populations(c, slices);
        best = std::max(best, *std::max_element(pop.begin(), pop.end()));
    }
    return best;
}

std::vector<std::pair<double, double>> reconstruct_points(const SliceTensor& slices) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(slices.total_points());
    for (std::size_t s = 0; s < slices.slices; ++s)
        for (std::size_t j = 0; j < slices.max_points; ++j)
            if (slices.mask[s * slices.max_points + j]) pts.emplace_back(slices.y(s, j), slices.z(s, j));
    return pts;
}

void save_slice_tensor(const SliceTensor& st, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.bytes(kSliceMagic);
    w.u32(static_cast<std::uint32_t>(st.slices));
    w.u32(static_cast<std::uint32_t>(st.max_points));
    w.str(st.source_id);
    for (auto c : st.counts) w.u32(c);
    for (double v : st.data) w.f32(static_cast<float>(v));
    std::uint8_t byte = 0;
    int bit = 0;
    for (auto m : st.mask) {
        if (m) byte |= static_cast<std::uint8_t>(1u << bit);
        if (++bit == 8) {
            w.u8(byte);
            byte = 0;
            bit = 0;
        }
    }
    if (bit) w.u8(byte);
    w.save(path);
}

SliceTensor load_slice_tensor(const std::filesystem::path& path) {
    auto in = io::ByteReader::from_file(path);
    in.expect_magic(kSliceMagic);
    const std::size_t S = in.u32();
    const std::size_t M = in.u32();
    if (S == 0 || M == 0) in.fail("zero slice dimension");
    const std::size_t payload = S * 4 + S * M * 8 + (S * M + 7) / 8;
    std::string id = in.str();
    if (in.remaining() != payload)
        in.fail("payload is " + std::to_string(in.remaining()) + " bytes, expected " + std::to_string(payload));
    SliceTensor st(S, M);
    st.source_id = std::move(id);
    for (auto& c : st.counts) c = in.u32();
    for (auto& v : st.data) v = in.f32();
    for (std::size_t i = 0; i < st.mask.size(); i += 8) {
        const std::uint8_t byte = in.u8();
        for (std::size_t b = 0; b < 8 && i + b < st.mask.size(); ++b) st.mask[i + b] = (byte >> b) & 1u;
    }
    try {
        st.check_invariants();
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return st;
}

}  // namespace cdslice::geometry
