#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cdslice/cli/cli.hpp"
#include "cdslice/geometry/point_cloud.hpp"
#include "cdslice/model/config.hpp"
#include "cdslice/rng.hpp"

namespace cdslice::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
        path_ = std::filesystem::temp_directory_path() / ("cdslice_" + tag + "_" + std::to_string(rng.next_u64()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline geometry::PointCloud3D random_cloud(Rng& rng, std::size_t n, double x_lo = -1.0, double x_hi = 1.0) {
    geometry::PointCloud3D c;
    c.source_id = "random";
    for (std::size_t i = 0; i < n; ++i) c.points.push_back({rng.uniform(x_lo, x_hi), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    c.points.front().x = x_lo;
    c.points.back().x = x_hi;
    return c;
}

/// Small but complete model for fast property tests.
inline model::ModelConfig small_config(std::size_t slices = 5, std::size_t max_points = 12) {
    model::ModelConfig c;
    c.slicing.slices = slices;
    c.slicing.max_points = max_points;
    c.pointnet_channels = {6, 8, 10};
    c.hidden = 7;
    c.head_widths = {9, 5};
    c.init_seed = 11;
    return c;
}

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

inline CliResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "cdslice");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliResult r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

}  // namespace cdslice::test
