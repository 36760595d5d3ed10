#include "cdslice/cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdslice/binary_io.hpp"
#include "cdslice/cli/run_config.hpp"
#include "cdslice/cli/svg.hpp"
#include "cdslice/dataio/dataset.hpp"
#include "cdslice/dataio/manifest.hpp"
#include "cdslice/dataio/synthetic.hpp"
#include "cdslice/error.hpp"
#include "cdslice/model/checkpoint.hpp"
#include "cdslice/model/predictor.hpp"
#include "cdslice/parallel.hpp"
#include "cdslice/training/model_gradcheck.hpp"
#include "cdslice/training/trainer.hpp"

namespace cdslice::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

/// Command-line values that override the merged configuration only when given.
class Overrides {
public:
    template <class V>
    CLI::Option* option(CLI::App* app, const std::string& name, const std::string& help,
                        std::function<void(RunConfig&, const V&)> apply) {
        auto value = std::make_shared<V>();
        CLI::Option* o = app->add_option(name, *value, help);
        items_.push_back({o, [value, apply](RunConfig& c) { apply(c, *value); }});
        return o;
    }

    CLI::Option* flag(CLI::App* app, const std::string& name, const std::string& help,
                      std::function<void(RunConfig&)> apply) {
        CLI::Option* o = app->add_flag(name, help);
        items_.push_back({o, std::move(apply)});
        return o;
    }

    void apply(RunConfig& c) const {
        for (const auto& [o, f] : items_)
            if (o->count() > 0) f(c);
    }

private:
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> items_;
};

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw InputError(std::string("missing required option ") + flag);
}

void archive(const RunConfig& cfg, const fs::path& dir) {
    if (dir.empty()) return;
    fs::create_directories(dir);
    io::write_text_file(dir / "run_config.json", to_json(cfg).dump(2) + "\n");
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw InputError(fmt::format("cannot create directory {}: {}", dir, ec.message()));
    return p;
}

std::optional<fs::path> cache_of(const RunConfig& cfg) {
    if (cfg.cache_dir.empty()) return std::nullopt;
    return fs::path(cfg.cache_dir);
}

std::size_t resolve_max_points(const RunConfig& cfg, const dataio::Manifest& manifest, std::ostream& out) {
    if (cfg.max_points) return *cfg.max_points;
    const auto stats = dataio::dataset_stats(manifest, cfg.slices, cfg.threads);
    if (!cfg.json) out << fmt::format("scanned M_max = {} for S = {}\n", stats.max_points, cfg.slices);
    return std::max<std::size_t>(stats.max_points, 1);
}

// ---------------------------------------------------------------- scan

int cmd_scan(const RunConfig& cfg, std::ostream& out) {
    require(cfg.manifest, "--manifest");
    const auto manifest = dataio::load_manifest(cfg.manifest);
    const auto stats = dataio::dataset_stats(manifest, cfg.slices, cfg.threads);
    out << (cfg.json ? stats.to_json() : stats.to_text());
    archive(cfg, cfg.out_dir);
    return 0;
}

// ---------------------------------------------------------------- preprocess

int cmd_preprocess(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    require(cfg.manifest, "--manifest");
    require(cfg.cache_dir, "--out (or CDSLICE_CACHE_DIR)");
    const auto manifest = dataio::load_manifest(cfg.manifest);
    const std::size_t m = resolve_max_points(cfg, manifest, out);
    const auto slicing = cfg.slice_config(m);
    const fs::path dir = ensure_dir(cfg.cache_dir);
    auto errors = parallel_for(manifest.rows.size(), cfg.threads, [&](std::size_t i) {
        const auto& row = manifest.rows[i];
        auto cloud = geometry::load_point_cloud(manifest.resolve(row));
        cloud.source_id = row.id;
        geometry::save_slice_tensor(geometry::slice_point_cloud(cloud, slicing), dataio::cache_path(dir, row.id));
    });
    std::vector<std::pair<std::string, std::string>> failures;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            failures.emplace_back(manifest.rows[i].id, e.what());
        }
    }
    RunConfig archived = cfg;
    archived.max_points = m;
    archive(archived, dir);
    const std::size_t written = manifest.rows.size() - failures.size();
    if (cfg.json) {
        ordered_json j;
        j["cache_dir"] = dir.string();
        j["written"] = written;
        j["shape"] = {cfg.slices, m, 2};
        j["failed"] = ordered_json::array();
        for (const auto& [id, msg] : failures) j["failed"].push_back({{"id", id}, {"error", msg}});
        out << j.dump(2) << "\n";
    } else {
        out << fmt::format("wrote {} slice tensors of shape ({}, {}, 2) to {}\n", written, cfg.slices, m, dir.string());
    }
    if (!failures.empty()) {
        err << fmt::format("{} sample(s) failed:\n", failures.size());
        for (const auto& [id, msg] : failures) err << fmt::format("  {}: {}\n", id, msg);
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------- train

template <class T>
int cmd_train(RunConfig cfg, std::ostream& out) {
    require(cfg.manifest, "--manifest");
    require(cfg.out_dir, "--out");
    const auto manifest = dataio::load_manifest(cfg.manifest);
    std::optional<model::ModelConfig> resumed;
    if (!cfg.resume.empty()) {
        resumed = model::load_checkpoint_config(cfg.resume);
        if (!cfg.max_points) cfg.max_points = resumed->slicing.max_points;
    }
    const std::size_t m = resolve_max_points(cfg, manifest, out);
    cfg.max_points = m;
    const model::ModelConfig mc = cfg.model_config(m);
    mc.validate();

    model::ModelParams<T> params =
        resumed ? model::load_params<T>(cfg.resume, mc) : model::ModelParams<T>::initialize(mc);
    const auto train_rows = manifest.split(dataio::Split::train);
    const auto val_rows = manifest.split(dataio::Split::val);
    if (train_rows.empty()) throw InputError("manifest has no training samples");
    if (val_rows.empty()) throw InputError("manifest has no validation samples");
    const auto train_set = dataio::load_samples(manifest, train_rows, mc.slicing, cache_of(cfg), cfg.threads);
    const auto val_set = dataio::load_samples(manifest, val_rows, mc.slicing, cache_of(cfg), cfg.threads);

    const fs::path dir = ensure_dir(cfg.out_dir);
    archive(cfg, dir);
    training::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.checkpoint_dir = dir;
    if (!cfg.json)
        out << fmt::format("training {} parameters on {} samples, validating on {}\n", model::count_parameters(params),
                           train_set.size(), val_set.size());
    auto progress = [&](const training::EpochRecord& r) {
        if (cfg.json) return;
        out << fmt::format("epoch {:>4}  loss {:.6e}  val_mae {:.6e}  val_r2 {}\n", r.epoch, r.train_loss, r.val_mae,
                           r.val_r2 ? fmt::format("{:.6f}", *r.val_r2) : std::string("undefined"));
        out.flush();
    };
    const auto result = training::train<T>(train_set, val_set, std::move(params), tc, progress);
    result.log.save(dir / "train_log.csv");

    ordered_json j;
    j["epochs"] = result.log.epochs.size();
    j["best_epoch"] = result.log.best_epoch ? ordered_json(*result.log.best_epoch) : ordered_json(nullptr);
    if (result.log.best_epoch) j["best_val_r2"] = *result.log.epochs[*result.log.best_epoch - 1].val_r2;
    j["best_checkpoint"] = (dir / "best.cdpm").string();
    j["final_checkpoint"] = (dir / "final.cdpm").string();
    j["train_log"] = (dir / "train_log.csv").string();
    if (cfg.json)
        out << j.dump(2) << "\n";
    else
        out << fmt::format("best epoch {}; checkpoints in {}\n",
                           result.log.best_epoch ? std::to_string(*result.log.best_epoch) : std::string("n/a"),
                           dir.string());
    return 0;
}

// ---------------------------------------------------------------- eval

template <class T>
int cmd_eval(const RunConfig& cfg, std::ostream& out) {
    require(cfg.checkpoint, "--checkpoint");
    require(cfg.manifest, "--manifest");
    require(cfg.out_dir, "--out");
    const auto params = model::load_params<T>(cfg.checkpoint);
    const auto manifest = dataio::load_manifest(cfg.manifest);
    const auto rows = manifest.split(dataio::parse_split(cfg.split));
    if (rows.empty()) throw InputError("split '" + cfg.split + "' is empty");
    const auto samples = dataio::load_samples(manifest, rows, params.config.slicing, cache_of(cfg), cfg.threads);
    std::vector<double> truths;
    std::vector<std::string> ids;
    for (const auto& s : samples) {
        truths.push_back(s.label);
        ids.push_back(s.id);
    }
    const auto preds = training::predict_all<T>(samples, params);
    const auto report = metrics::compute_metrics(truths, preds, cfg.histogram_bin_width);
    const fs::path dir = ensure_dir(cfg.out_dir);
    io::write_text_file(dir / "metrics.json", metrics::to_json(report));
    io::write_text_file(dir / "predictions.csv", metrics::per_sample_csv(report, ids));
    io::write_text_file(dir / "error_hist.csv", metrics::histogram_csv(report.error_histogram));
    archive(cfg, dir);
    if (cfg.json) {
        out << metrics::to_json(report);
    } else {
        out << fmt::format("split {} (n={}): MSE {:.6e}  MAE {:.6e}  R2 {}  MaxAE {:.6e}\n", cfg.split, report.n,
                           report.mse, report.mae,
                           report.r_squared ? fmt::format("{:.6f}", *report.r_squared) : std::string("undefined"),
                           report.max_ae);
    }
    return 0;
}

// ---------------------------------------------------------------- predict / sensitivity

geometry::SliceConfig inference_slicing(const model::ModelConfig& mc) {
    geometry::SliceConfig s = mc.slicing;
    s.overflow = geometry::OverflowPolicy::subsample;
    return s;
}

template <class T>
int cmd_predict(const RunConfig& cfg, std::ostream& out) {
    require(cfg.checkpoint, "--checkpoint");
    require(cfg.cloud, "--cloud");
    const auto params = model::load_params<T>(cfg.checkpoint);
    const auto cloud = geometry::load_point_cloud(cfg.cloud);
    auto t0 = Clock::now();
    const auto slices = geometry::slice_point_cloud(cloud, inference_slicing(params.config));
    const double slicing_ms = ms_since(t0);
    t0 = Clock::now();
    const double cd = static_cast<double>(model::predict(slices, params));
    const double forward_ms = ms_since(t0);
    if (cfg.json) {
        ordered_json j;
        j["cd"] = cd;
        j["points"] = cloud.points.size();
        j["shape"] = {slices.slices, slices.max_points, 2};
        j["slicing_ms"] = slicing_ms;
        j["forward_ms"] = forward_ms;
        out << j.dump(2) << "\n";
    } else {
        out << fmt::format("cd: {:.8f}\n", cd);
        out << fmt::format("slicing latency: {:.3f} ms\n", slicing_ms);
        out << fmt::format("forward latency: {:.3f} ms\n", forward_ms);
    }
    archive(cfg, cfg.out_dir);
    return 0;
}

template <class T>
int cmd_sensitivity(const RunConfig& cfg, std::ostream& out) {
    require(cfg.checkpoint, "--checkpoint");
    require(cfg.cloud, "--cloud");
    require(cfg.out_dir, "--out");
    const auto params = model::load_params<T>(cfg.checkpoint);
    const auto slicing = inference_slicing(params.config);
    const auto raw = geometry::load_point_cloud(cfg.cloud);
    const auto slices = geometry::slice_point_cloud(raw, slicing);
    const auto cloud = geometry::normalize_cloud(raw, slicing.normalization);
    const double base = static_cast<double>(model::predict(slices, params));
    const auto deltas = model::slice_sensitivity(slices, params);

    double lo = cloud.points.front().x, hi = lo;
    for (const auto& p : cloud.points) lo = std::min(lo, p.x), hi = std::max(hi, p.x);
    const double w = (hi - lo) / static_cast<double>(slices.slices);
    std::string csv = "slice,x_start,x_end,points,delta_cd\n";
    std::vector<double> edges, values;
    for (std::size_t i = 0; i < slices.slices; ++i) {
        csv += fmt::format("{},{},{},{},{}\n", i, lo + w * static_cast<double>(i), lo + w * static_cast<double>(i + 1),
                           slices.counts[i], deltas[i]);
        edges.push_back(static_cast<double>(i));
        values.push_back(deltas[i]);
    }
    edges.push_back(static_cast<double>(slices.slices));
    const fs::path dir = ensure_dir(cfg.out_dir);
    io::write_text_file(dir / "sensitivity.csv", csv);
    io::write_text_file(dir / "sensitivity.svg",
                        svg::bar_chart({"Slice occlusion sensitivity", "slice index (front to rear)", "delta Cd"}, edges,
                                       values));
    archive(cfg, dir);
    std::size_t top = 0;
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (std::abs(deltas[i]) > std::abs(deltas[top])) top = i;
    if (cfg.json) {
        ordered_json j;
        j["cd"] = base;
        j["slices"] = slices.slices;
        j["max_abs_delta_slice"] = top;
        j["deltas"] = deltas;
        out << j.dump(2) << "\n";
    } else {
        out << fmt::format("cd: {:.8f}\nlargest |delta| at slice {} ({:+.3e})\nwrote {}\n", base, top, deltas[top],
                           (dir / "sensitivity.csv").string());
    }
    return 0;
}

// ---------------------------------------------------------------- report

struct EvalRows {
    std::vector<double> truth, pred;
};

EvalRows read_eval_csv(const fs::path& path) {
    std::istringstream in(io::read_text_file(path));
    std::string line;
    EvalRows rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "id,true,predicted,error") throw InputError(path.string() + ": expected header id,true,predicted,error");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 4) throw InputError(fmt::format("{} line {}: expected 4 fields", path.string(), line_no));
        try {
            rows.truth.push_back(std::stod(f[1]));
            rows.pred.push_back(std::stod(f[2]));
        } catch (const std::logic_error&) {
            throw InputError(fmt::format("{} line {}: bad number", path.string(), line_no));
        }
    }
    return rows;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
    require(cfg.out_dir, "--out");
    if (cfg.train_log.empty() && cfg.eval_csv.empty())
        throw InputError("report needs --train-log and/or --eval-csv");
    const fs::path dir = ensure_dir(cfg.out_dir);
    std::vector<std::string> written;
    auto write = [&](const std::string& name, const std::string& body) {
        io::write_text_file(dir / name, body);
        written.push_back((dir / name).string());
    };
    if (!cfg.train_log.empty()) {
        const auto log = training::TrainLog::load(cfg.train_log);
        svg::Series loss{"train loss", {}, {}}, r2{"validation R2", {}, {}};
        for (const auto& e : log.epochs) {
            loss.x.push_back(static_cast<double>(e.epoch));
            loss.y.push_back(e.train_loss);
            r2.x.push_back(static_cast<double>(e.epoch));
            r2.y.push_back(e.val_r2.value_or(std::numeric_limits<double>::quiet_NaN()));
        }
        write("loss_curve.svg", svg::line_chart({"Training loss", "epoch", "mean Smooth L1 loss"}, {loss}));
        std::string title = "Validation R2";
        if (log.best_epoch) title += fmt::format(" (best at epoch {})", *log.best_epoch);
        write("val_r2.svg", svg::line_chart({title, "epoch", "R2"}, {r2}));
    }
    if (!cfg.eval_csv.empty()) {
        const auto rows = read_eval_csv(cfg.eval_csv);
        if (rows.truth.empty()) throw InputError(cfg.eval_csv + ": no samples");
        write("scatter.svg", svg::scatter_chart({"Predicted vs true Cd", "true Cd", "predicted Cd"}, rows.truth,
                                                rows.pred, true));
        std::vector<double> residuals;
        for (std::size_t i = 0; i < rows.truth.size(); ++i) residuals.push_back(rows.pred[i] - rows.truth[i]);
        const auto h = metrics::residual_histogram(residuals, cfg.histogram_bin_width);
        std::vector<double> counts(h.counts.begin(), h.counts.end());
        write("error_hist.svg",
              svg::bar_chart({fmt::format("Prediction error (bin width {})", cfg.histogram_bin_width),
                              "predicted - true Cd", "count"},
                             h.edges, counts));
        write("error_hist.csv", metrics::histogram_csv(h));
    }
    archive(cfg, dir);
    if (cfg.json) {
        out << ordered_json{{"written", written}}.dump(2) << "\n";
    } else {
        for (const auto& w : written) out << "wrote " << w << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
    require(cfg.out_dir, "--out");
    const fs::path dir = ensure_dir(cfg.out_dir);
    const auto manifest = dataio::build_synthetic_dataset(cfg.n_bodies, cfg.synth, cfg.seed, dir, cfg.threads);
    archive(cfg, dir);
    double lo = manifest.rows.front().cd, hi = lo, mean = 0.0;
    for (const auto& r : manifest.rows) {
        lo = std::min(lo, r.cd);
        hi = std::max(hi, r.cd);
        mean += r.cd;
    }
    mean /= static_cast<double>(manifest.rows.size());
    double var = 0.0;
    for (const auto& r : manifest.rows) var += (r.cd - mean) * (r.cd - mean);
    var /= static_cast<double>(manifest.rows.size());
    ordered_json j;
    j["manifest"] = (dir / "manifest.csv").string();
    j["bodies"] = manifest.rows.size();
    j["train"] = manifest.count(dataio::Split::train);
    j["val"] = manifest.count(dataio::Split::val);
    j["test"] = manifest.count(dataio::Split::test);
    j["cd_min"] = lo;
    j["cd_mean"] = mean;
    j["cd_max"] = hi;
    j["cd_variance"] = var;
    if (cfg.json)
        out << j.dump(2) << "\n";
    else
        out << fmt::format("wrote {} bodies ({} train / {} val / {} test) to {}\ncd range [{:.5f}, {:.5f}], mean {:.5f}\n",
                           manifest.rows.size(), j["train"].get<std::size_t>(), j["val"].get<std::size_t>(),
                           j["test"].get<std::size_t>(), dir.string(), lo, hi, mean);
    return 0;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
    ad::GradCheckOptions opt;
    opt.epsilon = cfg.gradcheck_epsilon;
    opt.tolerance = cfg.gradcheck_tolerance;
    const auto mc = training::tiny_model_config();
    const auto report = training::check_model_gradients(mc, 2, cfg.seed, opt);
    if (cfg.json) {
        ordered_json j;
        j["passed"] = report.passed;
        j["tolerance"] = opt.tolerance;
        j["epsilon"] = opt.epsilon;
        j["max_rel_error"] = report.max_rel_error;
        j["checked"] = report.checked;
        j["skipped_kinks"] = report.skipped_kinks;
        for (const auto& s : report.sections)
            j["sections"].push_back({{"name", s.name},
                                     {"checked", s.checked},
                                     {"skipped_kinks", s.skipped_kinks},
                                     {"max_rel_error", s.max_rel_error},
                                     {"max_abs_error", s.max_abs_error}});
        out << j.dump(2) << "\n";
    } else {
        out << fmt::format("gradient check: {} (64-bit, eps {}, tolerance {})\n", mc.describe(), opt.epsilon,
                           opt.tolerance);
        out << fmt::format("{:<28} {:>8} {:>8} {:>14} {:>14}\n", "section", "checked", "kinks", "max_rel_error",
                           "max_abs_error");
        for (const auto& s : report.sections)
            out << fmt::format("{:<28} {:>8} {:>8} {:>14.3e} {:>14.3e}\n", s.name, s.checked, s.skipped_kinks,
                               s.max_rel_error, s.max_abs_error);
        out << fmt::format("overall max relative error {:.3e} over {} coordinates ({} skipped at kinks): {}\n",
                           report.max_rel_error, report.checked, report.skipped_kinks, report.passed ? "PASS" : "FAIL");
    }
    archive(cfg, cfg.out_dir);
    return report.passed ? 0 : 1;
}

template <class F>
int by_precision(const RunConfig& cfg, F&& f) {
    return cfg.precision == Precision::f32 ? f(float{}) : f(double{});
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Slice-sequence drag coefficient surrogate: slicing, training, evaluation and reporting"};
    app.name("cdslice");
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file (defaults < file < flags)");
    Overrides ov;
    ov.flag(&app, "--json", "machine-readable JSON output", [](RunConfig& c) { c.json = true; });
    ov.option<std::uint64_t>(&app, "--seed", "seed for initialization, shuffling and synthesis",
                             [](RunConfig& c, const std::uint64_t& v) { c.seed = v; });
    ov.option<std::size_t>(&app, "--threads", "workers for preprocess, synth and loading",
                           [](RunConfig& c, const std::size_t& v) { c.threads = v; });
    ov.option<std::string>(&app, "--precision", "f32 or f64",
                           [](RunConfig& c, const std::string& v) { c.precision = parse_precision(v); });

    auto str_opt = [&](CLI::App* sub, const std::string& name, const std::string& help, std::string RunConfig::*field) {
        ov.option<std::string>(sub, name, help, [field](RunConfig& c, const std::string& v) { c.*field = v; });
    };
    auto slicing_opts = [&](CLI::App* sub) {
        ov.option<std::size_t>(sub, "--slices", "number of slices S", [](RunConfig& c, const std::size_t& v) { c.slices = v; });
        ov.option<std::size_t>(sub, "--max-points", "slice capacity M_max (scanned when omitted)",
                               [](RunConfig& c, const std::size_t& v) { c.max_points = v; });
        ov.option<std::string>(sub, "--normalization", "none or per_car_center_scale",
                               [](RunConfig& c, const std::string& v) { c.normalization = parse_normalization(v); });
        ov.option<std::string>(sub, "--overflow", "strict or subsample",
                               [](RunConfig& c, const std::string& v) { c.overflow = parse_overflow(v); });
    };

    auto* scan = app.add_subcommand("scan", "print M_max and per-split statistics of a manifest");
    str_opt(scan, "--manifest", "manifest CSV", &RunConfig::manifest);
    str_opt(scan, "--out", "directory for run_config.json", &RunConfig::out_dir);
    ov.option<std::size_t>(scan, "--slices", "number of slices S", [](RunConfig& c, const std::size_t& v) { c.slices = v; });

    auto* pre = app.add_subcommand("preprocess", "slice every cloud of a manifest into the cache");
    str_opt(pre, "--manifest", "manifest CSV", &RunConfig::manifest);
    str_opt(pre, "--out", "cache directory", &RunConfig::cache_dir);
    slicing_opts(pre);

    auto* train = app.add_subcommand("train", "train a model on a manifest");
    str_opt(train, "--manifest", "manifest CSV", &RunConfig::manifest);
    str_opt(train, "--out", "output directory for checkpoints and the log", &RunConfig::out_dir);
    str_opt(train, "--cache", "slice-tensor cache directory", &RunConfig::cache_dir);
    str_opt(train, "--resume", "checkpoint to continue from", &RunConfig::resume);
    slicing_opts(train);
    ov.flag(train, "--pool-padding", "pool over padded rows too", [](RunConfig& c) { c.pool_padding = true; });
    ov.option<std::size_t>(train, "--width-divisor", "divide every layer width",
                           [](RunConfig& c, const std::size_t& v) { c.width_divisor = v; });
    ov.option<std::size_t>(train, "--epochs", "epochs", [](RunConfig& c, const std::size_t& v) { c.train.epochs = v; });
    ov.option<double>(train, "--lr", "learning rate", [](RunConfig& c, const double& v) { c.train.learning_rate = v; });
    ov.option<std::size_t>(train, "--batch-size", "mini-batch size",
                           [](RunConfig& c, const std::size_t& v) { c.train.batch_size = v; });
    ov.option<double>(train, "--beta", "Smooth L1 beta", [](RunConfig& c, const double& v) { c.train.beta = v; });
    ov.option<double>(train, "--clip-grad-norm", "clip the global gradient norm",
                      [](RunConfig& c, const double& v) { c.train.clip_grad_norm = v; });
    ov.flag(train, "--no-wall-clock", "write 0 in the seconds column", [](RunConfig& c) { c.train.record_wall_clock = false; });

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    str_opt(eval, "--checkpoint", "model checkpoint", &RunConfig::checkpoint);
    str_opt(eval, "--manifest", "manifest CSV", &RunConfig::manifest);
    str_opt(eval, "--split", "train, val or test", &RunConfig::split);
    str_opt(eval, "--out", "output directory", &RunConfig::out_dir);
    str_opt(eval, "--cache", "slice-tensor cache directory", &RunConfig::cache_dir);
    ov.option<double>(eval, "--bin-width", "residual histogram bin width",
                      [](RunConfig& c, const double& v) { c.histogram_bin_width = v; });

    auto* predict = app.add_subcommand("predict", "predict Cd of one point cloud and report latency");
    str_opt(predict, "--checkpoint", "model checkpoint", &RunConfig::checkpoint);
    str_opt(predict, "--cloud", "point-cloud file", &RunConfig::cloud);
    str_opt(predict, "--out", "directory for run_config.json", &RunConfig::out_dir);

    auto* sens = app.add_subcommand("sensitivity", "per-slice occlusion sensitivity of one cloud");
    str_opt(sens, "--checkpoint", "model checkpoint", &RunConfig::checkpoint);
    str_opt(sens, "--cloud", "point-cloud file", &RunConfig::cloud);
    str_opt(sens, "--out", "output directory", &RunConfig::out_dir);

    auto* report = app.add_subcommand("report", "render training and evaluation plots as SVG");
    str_opt(report, "--train-log", "train_log.csv from train", &RunConfig::train_log);
    str_opt(report, "--eval-csv", "predictions.csv from eval", &RunConfig::eval_csv);
    str_opt(report, "--out", "output directory", &RunConfig::out_dir);
    ov.option<double>(report, "--bin-width", "error histogram bin width",
                      [](RunConfig& c, const double& v) { c.histogram_bin_width = v; });

    auto* synth = app.add_subcommand("synth", "generate a synthetic body dataset");
    ov.option<std::size_t>(synth, "--n-bodies", "number of bodies", [](RunConfig& c, const std::size_t& v) { c.n_bodies = v; });
    ov.option<std::size_t>(synth, "--points-per-body", "surface samples per body",
                           [](RunConfig& c, const std::size_t& v) { c.synth.points = v; });
    str_opt(synth, "--out", "output directory", &RunConfig::out_dir);

    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the tiny model's gradients");
    ov.option<double>(grad, "--epsilon", "central-difference step", [](RunConfig& c, const double& v) { c.gradcheck_epsilon = v; });
    ov.option<double>(grad, "--tolerance", "maximum relative error",
                      [](RunConfig& c, const double& v) { c.gradcheck_tolerance = v; });
    str_opt(grad, "--out", "directory for run_config.json", &RunConfig::out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    auto previous = spdlog::default_logger();
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("cdslice", sink);
    logger->set_pattern("%l: %v");
    spdlog::set_default_logger(logger);
    struct Restore {
        std::shared_ptr<spdlog::logger> logger;
        ~Restore() { spdlog::set_default_logger(logger); }
    } restore{previous};

    try {
        RunConfig cfg;
        cfg.command = app.get_subcommands().front()->get_name();
        if (!config_path.empty()) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(io::read_text_file(config_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw InputError(config_path + ": " + e.what());
            }
            apply_json(cfg, j);
            cfg.command = app.get_subcommands().front()->get_name();
        }
        if (const char* env = std::getenv("CDSLICE_CACHE_DIR"); env && *env) cfg.cache_dir = env;
        ov.apply(cfg);
        cfg.validate();

        const std::string& cmd = cfg.command;
        if (cmd == "scan") return cmd_scan(cfg, out);
        if (cmd == "preprocess") return cmd_preprocess(cfg, out, err);
        if (cmd == "train") return by_precision(cfg, [&](auto t) { return cmd_train<decltype(t)>(cfg, out); });
        if (cmd == "eval") return by_precision(cfg, [&](auto t) { return cmd_eval<decltype(t)>(cfg, out); });
        if (cmd == "predict") return by_precision(cfg, [&](auto t) { return cmd_predict<decltype(t)>(cfg, out); });
        if (cmd == "sensitivity")
            return by_precision(cfg, [&](auto t) { return cmd_sensitivity<decltype(t)>(cfg, out); });
        if (cmd == "report") return cmd_report(cfg, out);
        if (cmd == "synth") return cmd_synth(cfg, out);
        if (cmd == "gradcheck") return cmd_gradcheck(cfg, out);
        throw InputError("unknown command " + cmd);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cdslice::cli
