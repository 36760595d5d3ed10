#include "cdslice/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include "json.hpp"

#include "cdslice/error.hpp"

namespace cdslice::metrics {

MetricsReport compute_metrics(std::span<const double> truths, std::span<const double> predictions,
                              double histogram_bin_width) {
    if (truths.size() != predictions.size())
        throw InputError(fmt::format("compute_metrics: {} truths but {} predictions", truths.size(), predictions.size()));
    if (truths.empty()) throw InputError("compute_metrics: no samples");
    const std::size_t n = truths.size();
    MetricsReport r;
    r.n = n;
    double mean = 0.0;
    for (double y : truths) mean += y;
    mean /= static_cast<double>(n);

    double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
    std::vector<double> residuals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = predictions[i] - truths[i];
        residuals[i] = e;
        ss_res += e * e;
        abs_sum += std::abs(e);
        r.max_ae = std::max(r.max_ae, std::abs(e));
        ss_tot += (truths[i] - mean) * (truths[i] - mean);
        r.per_sample.emplace_back(truths[i], predictions[i]);
    }
    r.mse = ss_res / static_cast<double>(n);
    r.mae = abs_sum / static_cast<double>(n);
    if (ss_tot > 0.0) r.r_squared = 1.0 - ss_res / ss_tot;
    r.error_histogram = residual_histogram(residuals, histogram_bin_width);
    return r;
}

Histogram residual_histogram(std::span<const double> residuals, double bin_width) {
    if (!(bin_width > 0.0)) throw ParameterError("histogram bin width must be positive");
    Histogram h;
    h.bin_width = bin_width;
    if (residuals.empty()) return h;
    const auto [lo_it, hi_it] = std::minmax_element(residuals.begin(), residuals.end());
    const long first = static_cast<long>(std::floor(*lo_it / bin_width));
    const long last = static_cast<long>(std::floor(*hi_it / bin_width));
    const std::size_t bins = static_cast<std::size_t>(last - first + 1);
    h.counts.assign(bins, 0);
    for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(static_cast<double>(first + static_cast<long>(i)) * bin_width);
    for (double e : residuals) {
        long b = static_cast<long>(std::floor(e / bin_width)) - first;
        b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

std::string to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["mse"] = report.mse;
    j["mae"] = report.mae;
    j["r_squared"] = report.r_squared ? nlohmann::ordered_json(*report.r_squared) : nlohmann::ordered_json(nullptr);
    j["max_ae"] = report.max_ae;
    j["n"] = report.n;
    return j.dump(2) + "\n";
}

std::string per_sample_csv(const MetricsReport& report, std::span<const std::string> ids) {
    std::string out = "id,true,predicted,error\n";
    for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
        const auto [t, p] = report.per_sample[i];
        const std::string id = i < ids.size() ? ids[i] : std::to_string(i);
        out += fmt::format("{},{},{},{}\n", id, t, p, p - t);
    }
    return out;
}

std::string histogram_csv(const Histogram& h) {
    std::string out = "bin_start,bin_end,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) out += fmt::format("{},{},{}\n", h.edges[i], h.edges[i + 1], h.counts[i]);
    return out;
}

}  // namespace cdslice::metrics
