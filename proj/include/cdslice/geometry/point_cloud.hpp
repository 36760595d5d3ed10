#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cdslice::geometry {

/// x is streamwise (front to rear), y lateral, z vertical.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Point3&, const Point3&) = default;
};

struct PointCloud3D {
    std::vector<Point3> points;
    std::string source_id;
};

/// Throws GeometryError unless the cloud is non-empty, finite and has a
/// positive streamwise extent.
void validate(const PointCloud3D& cloud);

enum class NormalizationMode { none, per_car_center_scale };

/// `per_car_center_scale` moves the centroid to the origin and scales all
/// three axes by one factor so that the x-extent becomes 1.
PointCloud3D normalize_cloud(const PointCloud3D& cloud, NormalizationMode mode);

// Point-cloud files. Text: one "x y z" triple per line, '#' starts a
// comment. Binary: magic "PCLD0001", u64 point count, then count * 3
// little-endian float32 values.

/// Reads either format, detected by the binary magic. source_id is the file stem.
PointCloud3D load_point_cloud(const std::filesystem::path& path);
PointCloud3D parse_text_cloud(const std::string& text, const std::string& source_id = {});
void save_text_cloud(const PointCloud3D& cloud, const std::filesystem::path& path);
void save_binary_cloud(const PointCloud3D& cloud, const std::filesystem::path& path);

}  // namespace cdslice::geometry
