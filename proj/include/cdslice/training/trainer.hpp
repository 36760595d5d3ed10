#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdslice/geometry/slicing.hpp"
#include "cdslice/metrics/metrics.hpp"
#include "cdslice/model/params.hpp"
#include "cdslice/training/optim.hpp"

namespace cdslice::training {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 4;
    std::size_t epochs = 100;
    /// Smooth L1 transition point.
    double beta = 1.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    /// best.cdpm and final.cdpm are written here when non-empty.
    std::filesystem::path checkpoint_dir;
    /// Global gradient-norm clipping; off unless set.
    std::optional<double> clip_grad_norm;
    /// Fill the `seconds` column; switch off for byte-comparable logs.
    bool record_wall_clock = true;

    void validate() const;
    AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_epsilon}; }
};

/// One labelled, already sliced sample.
struct Sample {
    std::string id;
    geometry::SliceTensor slices;
    double label = 0.0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_mse = 0.0;
    double val_mae = 0.0;
    std::optional<double> val_r2;
    double val_maxae = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    /// Epoch number with the highest validation R^2 (first on ties); empty
    /// when no epoch has a defined R^2.
    std::optional<std::size_t> best_epoch;

    /// Columns: epoch,train_loss,val_mse,val_mae,val_r2,val_maxae,seconds.
    /// An undefined R^2 is written as "nan".
    std::string to_csv() const;
    static TrainLog from_csv(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static TrainLog load(const std::filesystem::path& path);
};

/// Highest defined R^2 in `records`, first on ties.
std::optional<std::size_t> best_epoch_of(std::span<const EpochRecord> records);

template <class T>
struct TrainResult {
    model::ModelParams<T> best;
    model::ModelParams<T> last;
    TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the mean Smooth L1 loss with validation after every
/// epoch. Returns the parameters of the best validation epoch (the final
/// ones if R^2 was never defined, the initial ones if epochs == 0).
template <class T>
TrainResult<T> train(std::span<const Sample> train_split, std::span<const Sample> val_split,
                     model::ModelParams<T> params, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Inference over a split (dropout off) followed by compute_metrics.
template <class T>
metrics::MetricsReport evaluate(std::span<const Sample> split, const model::ModelParams<T>& params);

template <class T>
std::vector<double> predict_all(std::span<const Sample> split, const model::ModelParams<T>& params);

}  // namespace cdslice::training
