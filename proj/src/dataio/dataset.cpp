#include "cdslice/dataio/dataset.hpp"

#include <algorithm>
#include <fmt/format.h>
#include "json.hpp"

#include "cdslice/error.hpp"
#include "cdslice/parallel.hpp"

namespace cdslice::dataio {
namespace {

void rethrow_first(std::vector<std::exception_ptr>& errors) {
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

std::string DatasetStats::to_json() const {
    nlohmann::ordered_json j;
    j["slices"] = slices;
    j["max_points"] = max_points;
    j["total_points"] = total_points;
    for (const auto& [split, s] : splits) {
        nlohmann::ordered_json js;
        js["count"] = s.count;
        if (s.count > 0) {
            js["cd_min"] = s.cd_min;
            js["cd_mean"] = s.cd_mean;
            js["cd_max"] = s.cd_max;
        }
        j["splits"][std::string(split_name(split))] = js;
    }
    return j.dump(2) + "\n";
}

std::string DatasetStats::to_text() const {
    std::string out = fmt::format("M_max (S={}): {}\ntotal points: {}\n", slices, max_points, total_points);
    for (const auto& [split, s] : splits) {
        if (s.count == 0)
            out += fmt::format("{:<5} count=0\n", split_name(split));
        else
            out += fmt::format("{:<5} count={} cd min={:.6f} mean={:.6f} max={:.6f}\n", split_name(split), s.count,
                               s.cd_min, s.cd_mean, s.cd_max);
    }
    return out;
}

DatasetStats dataset_stats(const Manifest& manifest, std::size_t slices, std::size_t threads) {
    if (slices == 0) throw ParameterError("slices must be positive");
    DatasetStats st;
    st.slices = slices;
    for (Split s : {Split::train, Split::val, Split::test}) st.splits[s] = {};
    for (const auto& r : manifest.rows) {
        auto& s = st.splits[r.split];
        if (s.count == 0) {
            s.cd_min = s.cd_max = r.cd;
        } else {
            s.cd_min = std::min(s.cd_min, r.cd);
            s.cd_max = std::max(s.cd_max, r.cd);
        }
        s.cd_mean += r.cd;
        ++s.count;
    }
    for (auto& [_, s] : st.splits)
        if (s.count) s.cd_mean /= static_cast<double>(s.count);

    std::vector<std::size_t> maxima(manifest.rows.size(), 0), totals(manifest.rows.size(), 0);
    auto errors = parallel_for(manifest.rows.size(), threads, [&](std::size_t i) {
        auto cloud = geometry::load_point_cloud(manifest.resolve(manifest.rows[i]));
        cloud.source_id = manifest.rows[i].id;
        const auto pops = geometry::bin_populations(cloud, slices);
        maxima[i] = *std::max_element(pops.begin(), pops.end());
        totals[i] = cloud.points.size();
    });
    rethrow_first(errors);
    for (std::size_t i = 0; i < maxima.size(); ++i) {
        st.max_points = std::max(st.max_points, maxima[i]);
        st.total_points += totals[i];
    }
    return st;
}

std::filesystem::path cache_path(const std::filesystem::path& cache_dir, const std::string& id) {
    return cache_dir / (id + ".slct");
}

std::vector<training::Sample> load_samples(const Manifest& manifest, const std::vector<ManifestRow>& rows,
                                           const geometry::SliceConfig& config,
                                           const std::optional<std::filesystem::path>& cache_dir,
                                           std::size_t threads) {
    config.validate();
    std::vector<training::Sample> out(rows.size());
    auto errors = parallel_for(rows.size(), threads, [&](std::size_t i) {
        const auto& row = rows[i];
        training::Sample s;
        s.id = row.id;
        s.label = row.cd;
        std::optional<geometry::SliceTensor> cached;
        if (cache_dir) {
            const auto p = cache_path(*cache_dir, row.id);
            if (std::filesystem::exists(p)) {
                auto t = geometry::load_slice_tensor(p);
                if (t.slices == config.slices) {
                    if (t.max_points > config.max_points)
                        throw ConfigMismatchError(fmt::format("cache {} has max_points {} but the model allows {}",
                                                              p.string(), t.max_points, config.max_points));
                    cached = t.max_points == config.max_points ? std::move(t) : t.padded_to(config.max_points);
                }
            }
        }
        if (cached) {
            s.slices = std::move(*cached);
        } else {
            auto cloud = geometry::load_point_cloud(manifest.resolve(row));
            cloud.source_id = row.id;
            s.slices = geometry::slice_point_cloud(cloud, config);
        }
        out[i] = std::move(s);
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const ConfigMismatchError& e) {
            throw ConfigMismatchError(fmt::format("sample '{}': {}", rows[i].id, e.what()));
        } catch (const Error& e) {
            throw InputError(fmt::format("sample '{}': {}", rows[i].id, e.what()));
        }
    }
    return out;
}

}  // namespace cdslice::dataio
