#include "cdslice/dataio/manifest.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <set>
#include <sstream>

#include "cdslice/binary_io.hpp"
#include "cdslice/error.hpp"

namespace cdslice::dataio {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::string_view split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view token) {
    if (token == "train") return Split::train;
    if (token == "val") return Split::val;
    if (token == "test") return Split::test;
    throw InputError("unknown split '" + std::string(token) + "' (expected train, val or test)");
}

std::filesystem::path Manifest::resolve(const ManifestRow& row) const {
    return row.path.is_absolute() ? row.path : base_dir / row.path;
}

std::vector<ManifestRow> Manifest::split(Split s) const {
    std::vector<ManifestRow> out;
    for (const auto& r : rows)
        if (r.split == s) out.push_back(r);
    return out;
}

std::size_t Manifest::count(Split s) const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.split == s;
    return n;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
    Manifest m;
    m.base_dir = base_dir;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv(line);
        if (!header_seen) {
            if (f != std::vector<std::string>{"id", "path", "cd", "split"})
                throw InputError(fmt::format("manifest line {}: expected header 'id,path,cd,split'", line_no));
            header_seen = true;
            continue;
        }
        if (f.size() != 4)
            throw InputError(fmt::format("manifest line {}: expected 4 fields, got {}", line_no, f.size()));
        ManifestRow row;
        row.id = f[0];
        if (row.id.empty()) throw InputError(fmt::format("manifest line {}: empty id", line_no));
        row.path = f[1];
        const char* first = f[2].data();
        const char* last = f[2].data() + f[2].size();
        auto [ptr, ec] = std::from_chars(first, last, row.cd);
        if (f[2].empty() || ec != std::errc() || ptr != last || !std::isfinite(row.cd))
            throw InputError(fmt::format("manifest line {}: cd '{}' is not a finite number", line_no, f[2]));
        try {
            row.split = parse_split(f[3]);
        } catch (const InputError& e) {
            throw InputError(fmt::format("manifest line {}: {}", line_no, e.what()));
        }
        if (!ids.insert(row.id).second)
            throw InputError(fmt::format("manifest line {}: duplicate id '{}'", line_no, row.id));
        m.rows.push_back(std::move(row));
    }
    if (!header_seen) throw InputError("manifest is empty (no header)");
    return m;
}

Manifest load_manifest(const std::filesystem::path& path, bool check_paths) {
    Manifest m = parse_manifest(io::read_text_file(path), path.parent_path());
    if (check_paths) {
        for (const auto& r : m.rows)
            if (!std::filesystem::exists(m.resolve(r)))
                throw InputError(fmt::format("{}: sample '{}' points to missing file {}", path.string(), r.id,
                                             m.resolve(r).string()));
    }
    return m;
}

std::string manifest_csv(const Manifest& manifest) {
    std::string out = "id,path,cd,split\n";
    for (const auto& r : manifest.rows)
        out += fmt::format("{},{},{},{}\n", r.id, r.path.generic_string(), r.cd, split_name(r.split));
    return out;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    io::write_text_file(path, manifest_csv(manifest));
}

}  // namespace cdslice::dataio
