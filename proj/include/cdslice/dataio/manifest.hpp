#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdslice::dataio {

enum class Split { train, val, test };

std::string_view split_name(Split split);
/// "train", "val" or "test"; anything else raises InputError.
Split parse_split(std::string_view token);

struct ManifestRow {
    std::string id;
    std::filesystem::path path;  // as written in the file
    double cd = 0.0;
    Split split = Split::train;

    friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct Manifest {
    std::vector<ManifestRow> rows;
    /// Directory relative paths are resolved against.
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const ManifestRow& row) const;
    std::vector<ManifestRow> split(Split s) const;
    std::size_t count(Split s) const;
};

/// CSV with header "id,path,cd,split". Errors carry the line number.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});

/// Parses the file and, when `check_paths`, requires every cloud to exist.
Manifest load_manifest(const std::filesystem::path& path, bool check_paths = true);

std::string manifest_csv(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace cdslice::dataio
