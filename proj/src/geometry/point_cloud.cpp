#include "cdslice/geometry/point_cloud.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <sstream>

#include "cdslice/binary_io.hpp"
#include "cdslice/error.hpp"

namespace cdslice::geometry {
namespace {

constexpr std::string_view kCloudMagic = "PCLD0001";

bool parse_double(std::string_view token, double& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace

void validate(const PointCloud3D& cloud) {
    if (cloud.points.empty()) throw GeometryError("point cloud '" + cloud.source_id + "' is empty");
    double lo = cloud.points.front().x, hi = lo;
    for (const auto& p : cloud.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw GeometryError("point cloud '" + cloud.source_id + "' has a non-finite coordinate");
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
    }
    if (!(hi > lo)) throw GeometryError("point cloud '" + cloud.source_id + "' has a degenerate x-range");
}

PointCloud3D normalize_cloud(const PointCloud3D& cloud, NormalizationMode mode) {
    if (mode == NormalizationMode::none) return cloud;
    validate(cloud);
    double cx = 0, cy = 0, cz = 0, lo = cloud.points.front().x, hi = lo;
    for (const auto& p : cloud.points) {
        cx += p.x;
        cy += p.y;
        cz += p.z;
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
    }
    const double n = static_cast<double>(cloud.points.size());
    cx /= n;
    cy /= n;
    cz /= n;
    const double scale = 1.0 / (hi - lo);
    PointCloud3D out;
    out.source_id = cloud.source_id;
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points) out.points.push_back({(p.x - cx) * scale, (p.y - cy) * scale, (p.z - cz) * scale});
    return out;
}

PointCloud3D parse_text_cloud(const std::string& text, const std::string& source_id) {
    PointCloud3D cloud;
    cloud.source_id = source_id;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream fields(line);
        std::string tok;
        std::vector<double> values;
        while (fields >> tok) {
            double v;
            if (!parse_double(tok, v))
                throw InputError(fmt::format("{}: line {}: '{}' is not a number", source_id, line_no, tok));
            values.push_back(v);
        }
        if (values.empty()) continue;
        if (values.size() != 3)
            throw InputError(fmt::format("{}: line {}: expected 3 coordinates, found {}", source_id, line_no,
                                         values.size()));
        cloud.points.push_back({values[0], values[1], values[2]});
    }
    return cloud;
}

PointCloud3D load_point_cloud(const std::filesystem::path& path) {
    std::vector<char> bytes = io::read_file_bytes(path);
    const std::string id = path.stem().string();
    if (bytes.size() >= kCloudMagic.size() && std::string_view(bytes.data(), kCloudMagic.size()) == kCloudMagic) {
        io::ByteReader in(std::move(bytes), path.string());
        in.expect_magic(kCloudMagic);
        const std::uint64_t n = in.u64();
        if (n > in.remaining() / 12) in.fail("point count " + std::to_string(n) + " exceeds file size");
        PointCloud3D cloud;
        cloud.source_id = id;
        cloud.points.resize(n);
        for (auto& p : cloud.points) {
            p.x = in.f32();
            p.y = in.f32();
            p.z = in.f32();
        }
        if (in.remaining() != 0) in.fail("trailing bytes after point data");
        return cloud;
    }
    return parse_text_cloud(std::string(bytes.begin(), bytes.end()), id);
}

void save_text_cloud(const PointCloud3D& cloud, const std::filesystem::path& path) {
    std::string out = "# x y z\n";
    for (const auto& p : cloud.points) out += fmt::format("{} {} {}\n", p.x, p.y, p.z);
    io::write_text_file(path, out);
}

void save_binary_cloud(const PointCloud3D& cloud, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.bytes(kCloudMagic);
    w.u64(cloud.points.size());
    for (const auto& p : cloud.points) {
        w.f32(static_cast<float>(p.x));
        w.f32(static_cast<float>(p.y));
        w.f32(static_cast<float>(p.z));
    }
    w.save(path);
}

}  // namespace cdslice::geometry
