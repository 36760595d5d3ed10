#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdslice/autodiff/ops.hpp"
#include "cdslice/binary_io.hpp"
#include "cdslice/dataio/dataset.hpp"
#include "cdslice/dataio/synthetic.hpp"
#include "cdslice/error.hpp"
#include "cdslice/metrics/metrics.hpp"
#include "cdslice/model/checkpoint.hpp"
#include "cdslice/model/predictor.hpp"
#include "cdslice/rng.hpp"
#include "cdslice/training/model_gradcheck.hpp"
#include "cdslice/training/optim.hpp"
#include "cdslice/training/trainer.hpp"

namespace fs = std::filesystem;
using namespace cdslice;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

/// Scratch directory removed on destruction unless CDSLICE_KEEP_WORK is set.
class WorkDir {
public:
    explicit WorkDir(const std::string& tag) {
        Rng rng(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
        path_ = fs::temp_directory_path() / fmt::format("cdslice_accept_{}_{:x}", tag, rng.next_u64());
        fs::create_directories(path_);
    }
    ~WorkDir() {
        if (std::getenv("CDSLICE_KEEP_WORK")) return;
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    WorkDir(const WorkDir&) = delete;
    WorkDir& operator=(const WorkDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

/// Runs the cdslice executable with `args`, capturing stdout and stderr to files in `dir`.
int run_tool(const std::string& args, const fs::path& dir, const std::string& tag) {
    const fs::path out = dir / (tag + ".out"), err = dir / (tag + ".err");
    const std::string cmd = fmt::format("{} {} >{} 2>{}", quote(CDSLICE_TOOL_PATH), args, quote(out), quote(err));
    const int status = std::system(cmd.c_str());
    if (status != 0)
        std::cerr << fmt::format("command failed ({}): {}\n{}", status, cmd, io::read_text_file(err));
    return status;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> values_of(ad::Var<double> v) {
    auto s = v.value().values();
    return {s.begin(), s.end()};
}

geometry::SliceTensor random_slices(Rng& rng, std::size_t s, std::size_t m) {
    geometry::SliceTensor t(s, m);
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t n = rng.below(m + 1);
        t.counts[i] = static_cast<std::uint32_t>(n);
        for (std::size_t j = 0; j < n; ++j) {
            t.mask[i * m + j] = 1;
            t.data[(i * m + j) * 2] = rng.uniform(-0.3, 0.3);
            t.data[(i * m + j) * 2 + 1] = rng.uniform(-0.2, 0.2);
        }
    }
    return t;
}

std::vector<training::Sample> slice_bodies(const std::vector<dataio::SyntheticBody>& bodies,
                                           const geometry::SliceConfig& config) {
    std::vector<training::Sample> out;
    for (const auto& b : bodies) {
        training::Sample s;
        s.id = b.cloud.source_id;
        s.label = b.cd;
        s.slices = geometry::slice_point_cloud(b.cloud, config);
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------- 1

Outcome parameter_count() {
    const model::ModelConfig config;
    const std::size_t closed = model::count_parameters(config);
    const std::size_t materialized = model::count_parameters(model::ModelParams<float>::zeros(config));
    return {closed == 2796321 && materialized == 2796321,
            fmt::format("closed form {}, materialized {}, expected 2796321", closed, materialized)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_check() {
    ad::GradCheckOptions opt;
    opt.epsilon = 1e-5;
    opt.tolerance = 1e-4;
    const auto config = training::tiny_model_config();
    const auto report = training::check_model_gradients(config, 2, 0, opt);
    std::string worst;
    double worst_err = -1.0;
    for (const auto& s : report.sections)
        if (s.max_rel_error > worst_err) worst_err = s.max_rel_error, worst = s.name;
    return {report.passed && report.checked > 0,
            fmt::format("{} coordinates checked, {} skipped at kinks, max relative error {:.3e} ({}), tolerance {}",
                        report.checked, report.skipped_kinks, report.max_rel_error, worst, opt.tolerance)};
}

// ---------------------------------------------------------------- 3

Outcome invariance_suite() {
    Rng rng(3);
    model::ModelConfig config;
    config.slicing.slices = 8;
    config.slicing.max_points = 24;
    config.init_seed = 3;
    const auto params = model::ModelParams<double>::initialize(config);
    const auto params32 = params.cast<float>();
    std::size_t predict_failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = random_slices(rng, 8, 24);
        const double base = model::predict(t, params);
        const float base32 = model::predict(t, params32);
        auto shuffled = t;
        for (std::size_t s = 0; s < t.slices; ++s) {
            std::vector<std::size_t> perm(t.counts[s]);
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            for (std::size_t j = 0; j < perm.size(); ++j) {
                shuffled.data[(s * 24 + j) * 2] = t.y(s, perm[j]);
                shuffled.data[(s * 24 + j) * 2 + 1] = t.z(s, perm[j]);
            }
        }
        const auto padded = shuffled.padded_to(24 + 1 + rng.below(40));
        const bool ok = model::predict(shuffled, params) == base && model::predict(padded, params) == base &&
                        model::predict(shuffled, params32) == base32 && model::predict(padded, params32) == base32;
        if (!ok) ++predict_failures;
    }

    std::size_t pool_failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 2 + rng.below(40), d = 1 + rng.below(16);
        ad::Tensor<double> x({m, d});
        for (auto& v : x.values()) v = rng.uniform(-10, 10);
        std::vector<std::uint8_t> a(m, 0), b(m, 0), u(m, 0);
        a[rng.below(m)] = 1;
        b[rng.below(m)] = 1;
        for (std::size_t i = 0; i < m; ++i) {
            a[i] |= rng.below(2);
            b[i] |= rng.below(2);
            u[i] = a[i] | b[i];
        }
        ad::Tape<double> tape(false);
        const auto xv = tape.constant(x);
        const auto pa = values_of(ad::masked_max_pool(xv, std::span<const std::uint8_t>(a)));
        const auto pb = values_of(ad::masked_max_pool(xv, std::span<const std::uint8_t>(b)));
        const auto pu = values_of(ad::masked_max_pool(xv, std::span<const std::uint8_t>(u)));
        for (std::size_t c = 0; c < d; ++c)
            if (pu[c] != std::max(pa[c], pb[c])) {
                ++pool_failures;
                break;
            }
    }

    std::size_t embed_failures = 0;
    auto embed = [&](const std::vector<double>& pts) {
        ad::Tape<double> tape(false);
        auto bound = model::bind_frozen(tape, params);
        const std::vector<std::uint8_t> mask(pts.size() / 2, 1);
        return values_of(model::encode_slice<double>(tape, pts, mask, bound.pointnet, false));
    };
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> a, b;
        for (std::size_t i = 0, n = 1 + rng.below(12); i < 2 * n; ++i) a.push_back(rng.uniform(-0.5, 0.5));
        for (std::size_t i = 0, n = 1 + rng.below(12); i < 2 * n; ++i) b.push_back(rng.uniform(-0.5, 0.5));
        std::vector<double> u = a;
        u.insert(u.end(), b.begin(), b.end());
        const auto ea = embed(a), eb = embed(b), eu = embed(u);
        for (std::size_t c = 0; c < eu.size(); ++c)
            if (eu[c] != std::max(ea[c], eb[c])) {
                ++embed_failures;
                break;
            }
    }
    return {predict_failures == 0 && pool_failures == 0 && embed_failures == 0,
            fmt::format("predict permutation/padding mismatches {}/100, masked_max_pool union-max mismatches {}/1000, "
                        "PointNet embedding union-max mismatches {}/1000",
                        predict_failures, pool_failures, embed_failures)};
}

// ---------------------------------------------------------------- 4

std::size_t scan_bin(double x, double lo, double hi, std::size_t s) {
    const double w = (hi - lo) / static_cast<double>(s);
    for (std::size_t i = 0; i + 1 < s; ++i)
        if (x - lo >= static_cast<double>(i) * w && x - lo < static_cast<double>(i + 1) * w) return i;
    return s - 1;
}

Outcome slicing_oracle() {
    Rng rng(4);
    std::size_t bin_failures = 0, multiset_failures = 0, points = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t s = 1 + rng.below(80), n = 2 + rng.below(2000);
        geometry::PointCloud3D c;
        const double x0 = rng.uniform(-3, 3), len = rng.uniform(0.05, 6);
        for (std::size_t i = 0; i < n; ++i)
            c.points.push_back({x0 + len * rng.uniform(0, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        // Exact bin edges and duplicated coordinates.
        for (std::size_t k = 0; k < 5; ++k) c.points[rng.below(n)].x = c.points[rng.below(n)].x;
        double lo = c.points[0].x, hi = lo;
        for (const auto& p : c.points) lo = std::min(lo, p.x), hi = std::max(hi, p.x);
        if (!(hi > lo)) continue;

        std::vector<std::vector<std::size_t>> expected(s);
        for (std::size_t k = 0; k < c.points.size(); ++k) expected[scan_bin(c.points[k].x, lo, hi, s)].push_back(k);
        std::size_t capacity = 1;
        for (const auto& e : expected) capacity = std::max(capacity, e.size());
        geometry::SliceConfig config;
        config.slices = s;
        config.max_points = capacity;
        const auto t = geometry::slice_point_cloud(c, config);
        t.check_invariants();
        bool ok = true;
        for (std::size_t b = 0; b < s && ok; ++b) {
            if (t.counts[b] != expected[b].size()) ok = false;
            for (std::size_t j = 0; ok && j < expected[b].size(); ++j)
                ok = t.y(b, j) == c.points[expected[b][j]].y && t.z(b, j) == c.points[expected[b][j]].z;
        }
        if (!ok) ++bin_failures;

        auto back = geometry::reconstruct_points(t);
        std::vector<std::pair<double, double>> proj;
        for (const auto& p : c.points) proj.emplace_back(p.y, p.z);
        std::sort(back.begin(), back.end());
        std::sort(proj.begin(), proj.end());
        if (back != proj) ++multiset_failures;
        points += n;
    }
    return {bin_failures == 0 && multiset_failures == 0,
            fmt::format("200 clouds ({} points): bin assignment mismatches {}, round-trip multiset mismatches {}", points,
                        bin_failures, multiset_failures)};
}

// ---------------------------------------------------------------- 5

Outcome loss_metric_oracles() {
    const double d[] = {0.0, 0.5, 1.0, 2.0}, expected[] = {0.0, 0.125, 0.5, 1.5};
    bool losses = true;
    std::string got;
    for (int i = 0; i < 4; ++i) {
        const double v = training::smooth_l1(0.0, d[i], 1.0);
        const double w = training::smooth_l1(d[i], 0.0, 1.0);
        ad::Tape<double> tape(false);
        ad::Tensor<double> pred({1, 1});
        pred.values()[0] = d[i];
        const double label = 0.0;
        const double taped =
            ad::smooth_l1_loss(tape.constant(pred), std::span<const double>(&label, 1), 1.0).value().values()[0];
        losses = losses && v == expected[i] && w == expected[i] && taped == expected[i];
        got += fmt::format("{}{}", i ? ", " : "", v);
    }
    const auto r = metrics::compute_metrics(std::vector<double>{0.3, 0.5}, std::vector<double>{0.4, 0.5});
    const bool hand = std::abs(r.mse - 0.005) <= 1e-12 && std::abs(r.mae - 0.05) <= 1e-12 &&
                      std::abs(r.max_ae - 0.1) <= 1e-12 && r.r_squared && std::abs(*r.r_squared - 0.5) <= 1e-12;
    return {losses && hand, fmt::format("Smooth L1 at |d| = 0, 0.5, 1, 2: {}; hand case MSE {:.17g} MAE {:.17g} MaxAE "
                                        "{:.17g} R2 {:.17g}",
                                        got, r.mse, r.mae, r.max_ae, r.r_squared.value_or(NAN))};
}

// ---------------------------------------------------------------- 6

Outcome learning_capability() {
    const std::size_t bodies = 32;
    dataio::SpecRanges ranges;
    ranges.points = 896;
    std::vector<dataio::SyntheticBody> generated;
    for (std::size_t i = 0; i < bodies; ++i)
        generated.push_back(dataio::generate_synthetic_body(dataio::sample_spec(ranges, 6, i), fmt::format("b{}", i)));

    model::ModelConfig config = model::scaled_widths(model::ModelConfig{}, 4);
    config.slicing.slices = 16;
    config.slicing.max_points = 64;
    config.init_seed = 6;
    config.lstm_dropout = 0.0;
    config.head_dropout = 0.0;
    const auto samples = slice_bodies(generated, config.slicing);

    training::TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 2;
    tc.epochs = 500;
    tc.seed = 6;
    tc.record_wall_clock = false;
    // Validating on the training split itself yields the dropout-free training MAE per epoch.
    auto run = [&] {
        return training::train<float>(samples, samples, model::ModelParams<float>::initialize(config), tc);
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto first = run();
    const double first_s = seconds_since(t0);
    std::optional<std::size_t> reached;
    double best_mae = INFINITY;
    for (const auto& e : first.log.epochs) {
        best_mae = std::min(best_mae, e.val_mae);
        if (!reached && e.val_mae < 1e-3) reached = e.epoch;
    }
    const auto second = run();
    const bool deterministic = first.log.to_csv() == second.log.to_csv() &&
                               model::serialize_params(first.best) == model::serialize_params(second.best);
    return {reached.has_value() && deterministic,
            fmt::format("{} parameters, no dropout, batch 2; training MAE < 1e-3 first at epoch {}; lowest training MAE {:.3e}; repeat run "
                        "identical: {}; {:.0f} s per run",
                        model::count_parameters(config), reached ? std::to_string(*reached) : std::string("never"),
                        best_mae, deterministic ? "yes" : "no", first_s)};
}

// ---------------------------------------------------------------- 7

struct TaperSensitivity {
    double tail_mean = 0.0;
    double other_mean = 0.0;
};

TaperSensitivity rear_taper_sensitivity(const dataio::Manifest& manifest, const std::vector<dataio::ManifestRow>& rows,
                                        const std::vector<training::Sample>& samples,
                                        const model::ModelParams<float>& params, const fs::path& dir) {
    TaperSensitivity out;
    double tail_n = 0.0, other_n = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto spec = nlohmann::json::parse(
            io::read_text_file(dir / manifest.rows.front().path.parent_path() / (rows[k].id + ".json")));
        const double tail_start = 1.0 - spec["tail_fraction"].get<double>();
        const auto deltas = model::slice_sensitivity(samples[k].slices, params);
        const std::size_t s = deltas.size();
        for (std::size_t i = 0; i < s; ++i) {
            const double centre = (static_cast<double>(i) + 0.5) / static_cast<double>(s);
            if (centre >= tail_start) {
                out.tail_mean += std::abs(deltas[i]);
                tail_n += 1.0;
            } else {
                out.other_mean += std::abs(deltas[i]);
                other_n += 1.0;
            }
        }
    }
    out.tail_mean /= tail_n;
    out.other_mean /= other_n;
    return out;
}

Outcome desk_scale_generalization() {
    WorkDir work("c7");
    const std::size_t threads = 1;
    const auto manifest = dataio::build_synthetic_dataset(500, dataio::SpecRanges{}, 7, work.path(), threads);
    const auto stats = dataio::dataset_stats(manifest, 80, threads);
    model::ModelConfig config;
    config.slicing.max_points = stats.max_points;
    config.init_seed = 7;
    const auto train_rows = manifest.split(dataio::Split::train);
    const auto val_rows = manifest.split(dataio::Split::val);
    const auto test_rows = manifest.split(dataio::Split::test);
    const auto train_set = dataio::load_samples(manifest, train_rows, config.slicing, std::nullopt, threads);
    const auto val_set = dataio::load_samples(manifest, val_rows, config.slicing, std::nullopt, threads);
    const auto test_set = dataio::load_samples(manifest, test_rows, config.slicing, std::nullopt, threads);

    training::TrainConfig tc;
    tc.epochs = 100;
    tc.seed = 7;
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = training::train<float>(train_set, val_set, model::ModelParams<float>::initialize(config), tc,
                                               [&](const training::EpochRecord& r) {
                                                   std::cerr << fmt::format(
                                                       "criterion 7: epoch {:>3} loss {:.4e} val_mae {:.4e} val_r2 {}\n",
                                                       r.epoch, r.train_loss, r.val_mae,
                                                       r.val_r2 ? fmt::format("{:.4f}", *r.val_r2) : "undefined");
                                               });
    const double train_s = seconds_since(t0);
    const auto report = training::evaluate<float>(test_set, result.best);
    const double r2 = report.r_squared.value_or(-INFINITY);

    const auto taper = rear_taper_sensitivity(manifest, test_rows, test_set, result.best, work.path());
    std::cout << fmt::format("criterion 7 (supplementary, rear-taper sensitivity): {} (mean |delta Cd| over tail "
                             "slices {:.3e}, over other slices {:.3e}, {} test bodies)\n",
                             taper.tail_mean > taper.other_mean ? "PASS" : "FAIL", taper.tail_mean, taper.other_mean,
                             test_set.size());
    return {r2 > 0.9, fmt::format("test R2 {:.4f} (n={}, MAE {:.3e}, best epoch {}), M_max {}, {} train / {} val, "
                                  "{:.0f} s training",
                                  r2, report.n, report.mae, result.log.best_epoch.value_or(0), stats.max_points,
                                  train_set.size(), val_set.size(), train_s)};
}

// ---------------------------------------------------------------- 8

Outcome table_metrics_reconstruction() {
    const double mse = 6.50e-5, mae = 6.046e-3, max_ae = 4.50e-2, r2 = 0.9528;
    const std::size_t n = 1000, na = 500, nb = 499;
    // One residual at max_ae; the rest take two magnitudes a, b solving
    //   na a + nb b = n mae - max_ae,  na a^2 + nb b^2 = n mse - max_ae^2.
    const double s1 = n * mae - max_ae, s2 = n * mse - max_ae * max_ae;
    const double qa = static_cast<double>(na) * nb + static_cast<double>(nb) * nb;
    const double qb = -2.0 * s1 * nb;
    const double qc = s1 * s1 - static_cast<double>(na) * s2;
    const double b = (-qb + std::sqrt(qb * qb - 4 * qa * qc)) / (2 * qa);
    const double a = (s1 - nb * b) / na;
    if (!(a > 0 && b > 0 && a < max_ae && b < max_ae)) return {false, fmt::format("no valid construction: a={} b={}", a, b)};

    // Truths alternate around 0.3 with the spread that gives the target R^2.
    const double ss_tot = n * mse / (1.0 - r2);
    const double spread = std::sqrt(ss_tot / n);
    std::vector<double> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
        truth[i] = 0.3 + (i % 2 ? spread : -spread);
        const double mag = i == 0 ? max_ae : (i <= na ? a : b);
        const double sign = (i / 2) % 2 ? -1.0 : 1.0;
        pred[i] = truth[i] + sign * mag;
    }
    const auto report = metrics::compute_metrics(truth, pred);
    const auto j = nlohmann::json::parse(metrics::to_json(report));
    const bool ok = std::abs(j["mse"].get<double>() - mse) <= 1e-9 && std::abs(j["mae"].get<double>() - mae) <= 1e-9 &&
                    std::abs(j["max_ae"].get<double>() - max_ae) <= 1e-9 && j["r_squared"].is_number() &&
                    std::abs(j["r_squared"].get<double>() - r2) <= 1e-9 && j["n"] == n;
    return {ok, fmt::format("recovered MSE {:.6e}, MAE {:.6e}, MaxAE {:.6e}, R2 {:.10f} from n={} constructed pairs",
                            report.mse, report.mae, report.max_ae, report.r_squared.value_or(NAN), n)};
}

// ---------------------------------------------------------------- 9

Outcome end_to_end_determinism() {
    WorkDir work("c9");
    auto pipeline = [&](const std::string& tag) -> bool {
        const fs::path root = work.path() / tag;
        const fs::path data = root / "data", cache = root / "cache", run = root / "run", eval = root / "eval";
        return run_tool(fmt::format("--seed 9 synth --n-bodies 60 --points-per-body 512 --out {}", quote(data)), root.parent_path(),
                        tag + "_synth") == 0 &&
               run_tool(fmt::format("preprocess --manifest {} --out {} --slices 16", quote(data / "manifest.csv"),
                                    quote(cache)),
                        root.parent_path(), tag + "_pre") == 0 &&
               run_tool(fmt::format("--seed 9 train --manifest {} --cache {} --out {} --slices 16 --width-divisor 4 "
                                    "--epochs 20 --lr 1e-3 --no-wall-clock",
                                    quote(data / "manifest.csv"), quote(cache), quote(run)),
                        root.parent_path(), tag + "_train") == 0 &&
               run_tool(fmt::format("eval --checkpoint {} --manifest {} --cache {} --out {}", quote(run / "best.cdpm"),
                                    quote(data / "manifest.csv"), quote(cache), quote(eval)),
                        root.parent_path(), tag + "_eval") == 0;
    };
    if (!pipeline("a") || !pipeline("b")) return {false, "a pipeline command failed"};
    const fs::path a = work.path() / "a", b = work.path() / "b";
    const auto log_a = io::read_text_file(a / "run" / "train_log.csv");
    const bool log_same = log_a == io::read_text_file(b / "run" / "train_log.csv");
    const bool best_same = io::read_text_file(a / "run" / "best.cdpm") == io::read_text_file(b / "run" / "best.cdpm");
    const bool final_same = io::read_text_file(a / "run" / "final.cdpm") == io::read_text_file(b / "run" / "final.cdpm");
    const bool metrics_same =
        io::read_text_file(a / "eval" / "metrics.json") == io::read_text_file(b / "eval" / "metrics.json");
    const auto lines = std::count(log_a.begin(), log_a.end(), '\n');
    return {log_same && best_same && final_same && metrics_same,
            fmt::format("train_log.csv identical: {} ({} lines), best.cdpm identical: {} ({} bytes), final.cdpm "
                        "identical: {}, metrics.json identical: {}",
                        log_same, lines, best_same, fs::file_size(a / "run" / "best.cdpm"), final_same, metrics_same)};
}

// ---------------------------------------------------------------- 10

Outcome latency_report() {
    WorkDir work("c10");
    const model::ModelConfig config;
    const fs::path ckpt = work.path() / "default.cdpm", cloud = work.path() / "body.pcld";
    model::save_params(model::ModelParams<float>::initialize(config), ckpt);
    dataio::SyntheticBodySpec spec;
    spec.points = 50000;
    geometry::save_binary_cloud(dataio::generate_synthetic_body(spec, "body").cloud, cloud);

    if (run_tool(fmt::format("predict --checkpoint {} --cloud {}", quote(ckpt), quote(cloud)), work.path(), "text") != 0)
        return {false, "predict failed"};
    if (run_tool(fmt::format("--json predict --checkpoint {} --cloud {}", quote(ckpt), quote(cloud)), work.path(), "json") != 0)
        return {false, "predict --json failed"};
    const auto text = io::read_text_file(work.path() / "text.out");
    std::smatch slicing, forward;
    const std::regex slicing_re(R"(slicing latency: ([0-9.]+) ms)"), forward_re(R"(forward latency: ([0-9.]+) ms)");
    const bool lines = std::regex_search(text, slicing, slicing_re) && std::regex_search(text, forward, forward_re);
    const auto j = nlohmann::json::parse(io::read_text_file(work.path() / "json.out"));
    const bool shape = j["shape"] == nlohmann::json::array({80, 6500, 2});
    const bool finite = std::isfinite(j["cd"].get<double>());
    return {lines && shape && finite,
            fmt::format("slicing {} ms, forward {} ms (text output); tensor shape {}; cd {:.6f}; {} points",
                        lines ? slicing[1].str() : "?", lines ? forward[1].str() : "?", j["shape"].dump(),
                        j["cd"].get<double>(), j["points"].get<std::size_t>())};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
    static const std::vector<std::pair<std::string, std::function<Outcome()>>> list{
        {"parameter count", parameter_count},
        {"gradient correctness", gradient_check},
        {"invariance suite", invariance_suite},
        {"slicing oracle", slicing_oracle},
        {"loss and metric oracles", loss_metric_oracles},
        {"learning capability", learning_capability},
        {"desk-scale generalization", desk_scale_generalization},
        {"published metric reconstruction", table_metrics_reconstruction},
        {"end-to-end determinism", end_to_end_determinism},
        {"latency report", latency_report},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks; one PASS/FAIL line per criterion"};
    std::vector<int> selected;
    app.add_option("--criterion", selected, "criterion number(s) 1-10; all when omitted")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);
    if (selected.empty()) {
        selected.resize(criteria().size());
        std::iota(selected.begin(), selected.end(), 1);
    }
    int failures = 0;
    for (int id : selected) {
        const auto& [name, check] = criteria()[static_cast<std::size_t>(id - 1)];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << fmt::format("criterion {}: {} {} ({}; {:.1f} s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail,
                                 seconds_since(t0));
        std::cout.flush();
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
