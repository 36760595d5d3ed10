#include "cdslice/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <sstream>

#include "cdslice/binary_io.hpp"
#include "cdslice/error.hpp"
#include "cdslice/model/checkpoint.hpp"
#include "cdslice/model/predictor.hpp"

namespace cdslice::training {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
    if (batch_size == 0) throw ParameterError("batch_size must be positive");
    if (!(beta > 0.0)) throw ParameterError("beta must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ParameterError("adam_beta1 must be in (0, 1)");
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ParameterError("adam_beta2 must be in (0, 1)");
    if (!(adam_epsilon > 0.0)) throw ParameterError("adam_epsilon must be positive");
    if (clip_grad_norm && !(*clip_grad_norm > 0.0)) throw ParameterError("clip_grad_norm must be positive");
}

std::optional<std::size_t> best_epoch_of(std::span<const EpochRecord> records) {
    std::optional<std::size_t> best;
    double best_r2 = 0.0;
    for (const auto& r : records) {
        if (!r.val_r2) continue;
        if (!best || *r.val_r2 > best_r2) {
            best = r.epoch;
            best_r2 = *r.val_r2;
        }
    }
    return best;
}

std::string TrainLog::to_csv() const {
    std::string out = "epoch,train_loss,val_mse,val_mae,val_r2,val_maxae,seconds\n";
    for (const auto& r : epochs) {
        out += fmt::format("{},{},{},{},{},{},{}\n", r.epoch, r.train_loss, r.val_mse, r.val_mae,
                           r.val_r2 ? fmt::format("{}", *r.val_r2) : std::string("nan"), r.val_maxae, r.seconds);
    }
    return out;
}

TrainLog TrainLog::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    TrainLog log;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line.rfind("epoch,", 0) != 0) throw InputError("train log: missing header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 7) throw InputError(fmt::format("train log line {}: expected 7 fields, got {}", line_no, f.size()));
        try {
            EpochRecord r;
            r.epoch = std::stoul(f[0]);
            r.train_loss = std::stod(f[1]);
            r.val_mse = std::stod(f[2]);
            r.val_mae = std::stod(f[3]);
            if (f[4] != "nan") r.val_r2 = std::stod(f[4]);
            r.val_maxae = std::stod(f[5]);
            r.seconds = std::stod(f[6]);
            log.epochs.push_back(r);
        } catch (const std::logic_error&) {
            throw InputError(fmt::format("train log line {}: bad number", line_no));
        }
    }
    log.best_epoch = best_epoch_of(log.epochs);
    return log;
}

void TrainLog::save(const std::filesystem::path& path) const { io::write_text_file(path, to_csv()); }

TrainLog TrainLog::load(const std::filesystem::path& path) { return from_csv(io::read_text_file(path)); }

template <class T>
std::vector<double> predict_all(std::span<const Sample> split, const model::ModelParams<T>& params) {
    std::vector<double> out;
    out.reserve(split.size());
    for (const auto& s : split) out.push_back(static_cast<double>(model::predict(s.slices, params)));
    return out;
}

template <class T>
metrics::MetricsReport evaluate(std::span<const Sample> split, const model::ModelParams<T>& params) {
    if (split.empty()) throw InputError("evaluate: empty split");
    std::vector<double> truths;
    for (const auto& s : split) truths.push_back(s.label);
    const auto preds = predict_all(split, params);
    return metrics::compute_metrics(truths, preds);
}

template <class T>
TrainResult<T> train(std::span<const Sample> train_split, std::span<const Sample> val_split,
                     model::ModelParams<T> params, const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (train_split.empty()) throw InputError("train: empty training split");
    if (val_split.empty()) throw InputError("train: empty validation split");
    for (const auto& s : train_split) model::check_compatible(s.slices, params.config);
    for (const auto& s : val_split) model::check_compatible(s.slices, params.config);
    if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

    TrainResult<T> result{params, params, {}};
    auto sections = params.parameters();
    auto state = OptimizerState<T>::for_parameters(sections);
    const AdamConfig adam = config.adam();
    std::optional<double> best_r2;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::size_t> order(train_split.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = Rng::derived({config.seed, epoch});
        shuffle_rng.shuffle(order);
        Rng dropout_rng = Rng::derived({config.seed, epoch, 1});

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch_size) {
            const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
            std::vector<const geometry::SliceTensor*> batch;
            std::vector<T> targets;
            for (std::size_t k = b0; k < b1; ++k) {
                batch.push_back(&train_split[order[k]].slices);
                targets.push_back(static_cast<T>(train_split[order[k]].label));
            }
            params.zero_grad();
            ad::Tape<T> tape;
            auto bound = model::bind_trainable(tape, params);
            auto preds = model::forward<T>(tape, bound, batch, true, dropout_rng);
            auto loss = ad::smooth_l1_loss(preds, std::span<const T>(targets), config.beta);
            const double loss_value = static_cast<double>(loss.value()[0]);
            if (!std::isfinite(loss_value))
                throw NumericError(fmt::format("non-finite loss at epoch {} batch {}", epoch, batches + 1));
            tape.backward(loss);
            if (config.clip_grad_norm) clip_grad_norm(std::span<ad::Parameter<T>* const>(sections), *config.clip_grad_norm);
            try {
                adam_step(std::span<ad::Parameter<T>* const>(sections), state, adam);
            } catch (const NumericError& e) {
                throw NumericError(fmt::format("epoch {} batch {}: {}", epoch, batches + 1, e.what()));
            }
            loss_sum += loss_value;
            ++batches;
        }

        const auto report = evaluate(val_split, params);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(batches);
        rec.val_mse = report.mse;
        rec.val_mae = report.mae;
        rec.val_r2 = report.r_squared;
        rec.val_maxae = report.max_ae;
        if (config.record_wall_clock)
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.epochs.push_back(rec);

        if (rec.val_r2 && (!best_r2 || *rec.val_r2 > *best_r2)) {
            best_r2 = rec.val_r2;
            result.log.best_epoch = epoch;
            result.best = params;
            if (!config.checkpoint_dir.empty()) model::save_params(params, config.checkpoint_dir / "best.cdpm");
        }
        if (on_epoch) on_epoch(rec);
    }
    params.zero_grad();
    if (config.epochs > 0 && !best_r2) result.best = params;
    result.last = std::move(params);
    if (!config.checkpoint_dir.empty()) {
        model::save_params(result.last, config.checkpoint_dir / "final.cdpm");
        if (!best_r2) model::save_params(result.best, config.checkpoint_dir / "best.cdpm");
    }
    return result;
}

#define CDSLICE_INSTANTIATE_TRAINER(T)                                                                           \
    template std::vector<double> predict_all(std::span<const Sample>, const model::ModelParams<T>&);            \
    template metrics::MetricsReport evaluate(std::span<const Sample>, const model::ModelParams<T>&);            \
    template TrainResult<T> train(std::span<const Sample>, std::span<const Sample>, model::ModelParams<T>,      \
                                  const TrainConfig&, const EpochCallback&);

CDSLICE_INSTANTIATE_TRAINER(float)
CDSLICE_INSTANTIATE_TRAINER(double)

}  // namespace cdslice::training
