#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cdslice::metrics {

/// Counts of residuals (predicted - true) in bins [edges[i], edges[i+1]).
struct Histogram {
    double bin_width = 0.0;
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};

struct MetricsReport {
    double mse = 0.0;
    double mae = 0.0;
    /// Empty when the truths have zero variance.
    std::optional<double> r_squared;
    double max_ae = 0.0;
    std::size_t n = 0;
    std::vector<std::pair<double, double>> per_sample;  // (true, predicted)
    Histogram error_histogram;
};

inline constexpr double kDefaultHistogramBinWidth = 0.005;

/// MSE, MAE, R^2 = 1 - SS_res / SS_tot (about the truth mean) and the
/// maximum absolute residual, plus a residual histogram.
MetricsReport compute_metrics(std::span<const double> truths, std::span<const double> predictions,
                              double histogram_bin_width = kDefaultHistogramBinWidth);

Histogram residual_histogram(std::span<const double> residuals, double bin_width);

/// {"mse", "mae", "r_squared", "max_ae", "n"}; r_squared is null when undefined.
std::string to_json(const MetricsReport& report);

/// Header "id,true,predicted,error"; `ids` may be empty (row index is used).
std::string per_sample_csv(const MetricsReport& report, std::span<const std::string> ids = {});

/// Header "bin_start,bin_end,count".
std::string histogram_csv(const Histogram& histogram);

}  // namespace cdslice::metrics
