#include <algorithm>
#include <filesystem>

#include <fmt/format.h>

#include "doctest.h"
#include "json.hpp"

#include "cdslice/binary_io.hpp"
#include "cdslice/dataio/dataset.hpp"
#include "cdslice/dataio/manifest.hpp"
#include "cdslice/model/checkpoint.hpp"
#include "helpers.hpp"

using namespace cdslice;
using cdslice::test::run_cli;
using cdslice::test::TempDir;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSmallModel{"--slices", "6", "--width-divisor", "16", "--batch-size", "4"};

/// Synthesizes a small dataset into `dir` and returns its manifest path.
std::string synth(const fs::path& dir, std::size_t n = 20, std::uint64_t seed = 3) {
    const auto r = run_cli({"--seed", std::to_string(seed), "synth", "--n-bodies", std::to_string(n),
                            "--points-per-body", "200", "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return (dir / "manifest.csv").string();
}

test::CliResult train(const std::string& manifest, const fs::path& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"--seed", "5", "train", "--manifest", manifest, "--out", out.string(),
                                  "--epochs", "3", "--no-wall-clock"};
    args.insert(args.end(), kSmallModel.begin(), kSmallModel.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
}

std::vector<std::string> dir_listing(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("scan prints the library M_max and valid JSON") {
    TempDir tmp("cli_scan");
    const auto manifest = synth(tmp / "data");
    const auto expected = dataio::dataset_stats(dataio::load_manifest(manifest), 6);
    const auto text = run_cli({"scan", "--manifest", manifest, "--slices", "6"});
    CHECK(text.code == 0);
    CHECK(text.out.find(fmt::format("M_max (S=6): {}", expected.max_points)) != std::string::npos);

    const auto js = run_cli({"--json", "scan", "--manifest", manifest, "--slices", "6"});
    REQUIRE(js.code == 0);
    const auto j = nlohmann::json::parse(js.out);
    CHECK(j["max_points"] == expected.max_points);
    CHECK(j["splits"]["train"]["count"] == 14);
}

TEST_CASE("missing files and bad usage give nonzero exits with messages on stderr") {
    TempDir tmp("cli_missing");
    const auto r = run_cli({"scan", "--manifest", (tmp / "nope.csv").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("nope.csv") != std::string::npos);
    CHECK(run_cli({}).code != 0);
    CHECK(run_cli({"frobnicate"}).code != 0);
    CHECK(run_cli({"scan"}).err.find("--manifest") != std::string::npos);
    CHECK(run_cli({"--precision", "f16", "gradcheck"}).code != 0);
}

TEST_CASE("synth writes a 70/15/15 manifest deterministically") {
    TempDir tmp("cli_synth");
    const auto r = run_cli({"--json", "--seed", "9", "synth", "--n-bodies", "100", "--points-per-body", "64", "--out",
                            (tmp / "a").string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["bodies"] == 100);
    CHECK(j["train"] == 70);
    CHECK(j["val"] == 15);
    CHECK(j["test"] == 15);
    CHECK(j["cd_variance"].get<double>() > 0.0);
    const auto m = dataio::load_manifest(tmp / "a" / "manifest.csv");
    CHECK(m.rows.size() == 100);

    REQUIRE(run_cli({"--seed", "9", "--threads", "3", "synth", "--n-bodies", "100", "--points-per-body", "64", "--out",
                     (tmp / "b").string()})
                .code == 0);
    CHECK(io::read_text_file(tmp / "a" / "manifest.csv") == io::read_text_file(tmp / "b" / "manifest.csv"));
    for (const auto& row : m.rows)
        CHECK(io::read_text_file(m.resolve(row)) == io::read_text_file(tmp / "b" / row.path));
}

TEST_CASE("preprocess is idempotent and reports overflowing samples by id") {
    TempDir tmp("cli_pre");
    const auto manifest = synth(tmp / "data", 10);
    const auto cache = tmp / "cache";
    const auto first = run_cli({"--json", "preprocess", "--manifest", manifest, "--out", cache.string(), "--slices", "6"});
    REQUIRE_MESSAGE(first.code == 0, first.err);
    const auto j = nlohmann::json::parse(first.out);
    CHECK(j["written"] == 10);
    std::map<std::string, std::string> before;
    for (const auto& e : fs::directory_iterator(cache)) before[e.path().filename().string()] = io::read_text_file(e.path());
    CHECK(before.size() == 11);  // 10 tensors and run_config.json
    CHECK(before.count("run_config.json") == 1);

    REQUIRE(run_cli({"preprocess", "--manifest", manifest, "--out", cache.string(), "--slices", "6"}).code == 0);
    for (const auto& [name, bytes] : before) CHECK(io::read_text_file(cache / name) == bytes);

    const auto overflow = run_cli(
        {"preprocess", "--manifest", manifest, "--out", (tmp / "small").string(), "--slices", "6", "--max-points", "3"});
    CHECK(overflow.code != 0);
    const auto m = dataio::load_manifest(manifest);
    for (const auto& row : m.rows) CHECK(overflow.err.find(row.id + ":") != std::string::npos);
    CHECK(overflow.err.find("10 sample(s) failed") != std::string::npos);

    const auto sub = run_cli({"preprocess", "--manifest", manifest, "--out", (tmp / "sub").string(), "--slices", "6",
                              "--max-points", "3", "--overflow", "subsample"});
    CHECK(sub.code == 0);
}

TEST_CASE("CDSLICE_CACHE_DIR overrides the cache location") {
    TempDir tmp("cli_env");
    const auto manifest = synth(tmp / "data", 10);
    const auto cache = tmp / "env_cache";
    ::setenv("CDSLICE_CACHE_DIR", cache.string().c_str(), 1);
    const auto r = run_cli({"preprocess", "--manifest", manifest, "--slices", "6"});
    ::unsetenv("CDSLICE_CACHE_DIR");
    CHECK(r.code == 0);
    CHECK(fs::exists(cache / "run_config.json"));
}

TEST_CASE("train writes checkpoints, is deterministic and refuses mismatched resumes") {
    TempDir tmp("cli_train");
    const auto manifest = synth(tmp / "data");
    const auto a = train(manifest, tmp / "a");
    REQUIRE_MESSAGE(a.code == 0, a.err);
    CHECK(dir_listing(tmp / "a") ==
          std::vector<std::string>{"best.cdpm", "final.cdpm", "run_config.json", "train_log.csv"});
    CHECK(count_lines(io::read_text_file(tmp / "a" / "train_log.csv")) == 4);

    REQUIRE(train(manifest, tmp / "b").code == 0);
    CHECK(io::read_text_file(tmp / "a" / "train_log.csv") == io::read_text_file(tmp / "b" / "train_log.csv"));
    CHECK(io::read_text_file(tmp / "a" / "best.cdpm") == io::read_text_file(tmp / "b" / "best.cdpm"));

    const auto resumed = train(manifest, tmp / "c", {"--resume", (tmp / "a" / "final.cdpm").string()});
    CHECK_MESSAGE(resumed.code == 0, resumed.err);

    const auto refused = run_cli({"--seed", "5", "train", "--manifest", manifest, "--out", (tmp / "d").string(), "--slices",
                                  "6", "--width-divisor", "8", "--resume", (tmp / "a" / "final.cdpm").string()});
    CHECK(refused.code != 0);
    CHECK_MESSAGE(refused.err.find("does not match") != std::string::npos, refused.err);
    CHECK(!fs::exists(tmp / "d" / "final.cdpm"));

    const auto cfg = nlohmann::json::parse(io::read_text_file(tmp / "a" / "run_config.json"));
    CHECK(cfg["command"] == "train");
    CHECK(cfg["seed"] == 5);
    CHECK(cfg["slicing"]["slices"] == 6);
    CHECK(cfg["slicing"]["max_points"].is_number());
    CHECK(cfg["train"]["record_wall_clock"] == false);
}

TEST_CASE("eval, predict, sensitivity and report on a trained checkpoint") {
    TempDir tmp("cli_eval");
    const auto manifest = synth(tmp / "data");
    REQUIRE(train(manifest, tmp / "run").code == 0);
    const auto ckpt = (tmp / "run" / "best.cdpm").string();

    SUBCASE("eval JSON keys and split selection") {
        const auto r = run_cli({"--json", "eval", "--checkpoint", ckpt, "--manifest", manifest, "--split", "val", "--out",
                                (tmp / "eval").string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto j = nlohmann::json::parse(r.out);
        std::vector<std::string> keys;
        for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
        std::sort(keys.begin(), keys.end());
        CHECK(keys == std::vector<std::string>{"mae", "max_ae", "mse", "n", "r_squared"});
        CHECK(j["n"] == 3);
        const auto csv = io::read_text_file(tmp / "eval" / "predictions.csv");
        CHECK(count_lines(csv) == 4);
        for (const auto& row : dataio::load_manifest(manifest).split(dataio::Split::val))
            CHECK(csv.find("\n" + row.id + ",") != std::string::npos);
        CHECK(fs::exists(tmp / "eval" / "metrics.json"));
        CHECK(fs::exists(tmp / "eval" / "run_config.json"));
        CHECK(run_cli({"eval", "--checkpoint", ckpt, "--manifest", manifest, "--split", "bogus", "--out",
                       (tmp / "e2").string()})
                  .code != 0);
    }

    SUBCASE("predict prints Cd and separate latencies") {
        const auto cloud = dataio::load_manifest(manifest).rows.front();
        const auto path = (tmp / "data" / cloud.path).string();
        const auto r1 = run_cli({"predict", "--checkpoint", ckpt, "--cloud", path});
        REQUIRE_MESSAGE(r1.code == 0, r1.err);
        CHECK(r1.out.find("slicing latency:") != std::string::npos);
        CHECK(r1.out.find("forward latency:") != std::string::npos);
        CHECK(r1.out.find(" ms\n") != std::string::npos);
        const auto j1 = nlohmann::json::parse(run_cli({"--json", "predict", "--checkpoint", ckpt, "--cloud", path}).out);
        const auto j2 = nlohmann::json::parse(run_cli({"--json", "predict", "--checkpoint", ckpt, "--cloud", path}).out);
        CHECK(j1["cd"] == j2["cd"]);
        CHECK(j1.contains("slicing_ms"));
        CHECK(j1.contains("forward_ms"));

        io::write_text_file(tmp / "bad.xyz", "0 0 0\n1 2\n");
        CHECK(run_cli({"predict", "--checkpoint", ckpt, "--cloud", (tmp / "bad.xyz").string()}).code != 0);
    }

    SUBCASE("sensitivity writes S rows and a chart") {
        const auto row = dataio::load_manifest(manifest).rows.front();
        const auto r = run_cli({"sensitivity", "--checkpoint", ckpt, "--cloud", (tmp / "data" / row.path).string(),
                                "--out", (tmp / "sens").string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto csv = io::read_text_file(tmp / "sens" / "sensitivity.csv");
        CHECK(count_lines(csv) == 7);
        CHECK(csv.rfind("slice,x_start,x_end,points,delta_cd\n", 0) == 0);
        CHECK(io::read_text_file(tmp / "sens" / "sensitivity.svg").find("<svg") != std::string::npos);
    }

    SUBCASE("report renders four SVGs with the identity line") {
        REQUIRE(run_cli({"eval", "--checkpoint", ckpt, "--manifest", manifest, "--out", (tmp / "eval").string()}).code == 0);
        const auto r = run_cli({"report", "--train-log", (tmp / "run" / "train_log.csv").string(), "--eval-csv",
                                (tmp / "eval" / "predictions.csv").string(), "--out", (tmp / "plots").string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        for (const char* name : {"loss_curve.svg", "val_r2.svg", "scatter.svg", "error_hist.svg"}) {
            const auto svg = io::read_text_file(tmp / "plots" / name);
            CHECK(svg.rfind("<svg", 0) == 0);
            CHECK(svg.find("</svg>") != std::string::npos);
        }
        CHECK(io::read_text_file(tmp / "plots" / "scatter.svg").find("class=\"identity\"") != std::string::npos);
        CHECK(io::read_text_file(tmp / "plots" / "error_hist.svg").find("bin width 0.005") != std::string::npos);
        CHECK(run_cli({"report", "--out", (tmp / "p2").string()}).code != 0);
    }
}

TEST_CASE("gradcheck passes and lists every section") {
    const auto r = run_cli({"gradcheck"});
    CHECK_MESSAGE(r.code == 0, r.out);
    CHECK(r.out.find("PASS") != std::string::npos);
    const auto j = nlohmann::json::parse(run_cli({"--json", "gradcheck"}).out);
    CHECK(j["passed"] == true);
    CHECK(j["sections"].size() >= 5);
    for (const auto& s : j["sections"]) CHECK(s["max_rel_error"].get<double>() <= 1e-4);
    CHECK(run_cli({"gradcheck", "--tolerance", "1e-30"}).code != 0);
}

TEST_CASE("config precedence is defaults < file < flags and unknown keys are rejected") {
    TempDir tmp("cli_config");
    io::write_text_file(tmp / "cfg.json", R"({"seed": 4, "slicing": {"slices": 9}, "gradcheck": {"tolerance": 0.001}})");
    REQUIRE(run_cli({"--config", (tmp / "cfg.json").string(), "gradcheck", "--out", (tmp / "a").string()}).code == 0);
    auto j = nlohmann::json::parse(io::read_text_file(tmp / "a" / "run_config.json"));
    CHECK(j["seed"] == 4);
    CHECK(j["slicing"]["slices"] == 9);
    CHECK(j["gradcheck"]["tolerance"] == 0.001);
    CHECK(j["gradcheck"]["epsilon"] == 1e-5);

    REQUIRE(run_cli({"--config", (tmp / "cfg.json").string(), "--seed", "6", "gradcheck", "--tolerance", "0.01", "--out",
                     (tmp / "b").string()})
                .code == 0);
    j = nlohmann::json::parse(io::read_text_file(tmp / "b" / "run_config.json"));
    CHECK(j["seed"] == 6);
    CHECK(j["gradcheck"]["tolerance"] == 0.01);
    CHECK(j["slicing"]["slices"] == 9);

    io::write_text_file(tmp / "typo.json", R"({"slicing": {"slicse": 9}})");
    const auto typo = run_cli({"--config", (tmp / "typo.json").string(), "gradcheck"});
    CHECK(typo.code != 0);
    CHECK(typo.err.find("slicse") != std::string::npos);
    io::write_text_file(tmp / "broken.json", "{");
    CHECK(run_cli({"--config", (tmp / "broken.json").string(), "gradcheck"}).code != 0);

    // An archived config reproduces itself.
    REQUIRE(run_cli({"--config", (tmp / "b" / "run_config.json").string(), "gradcheck", "--out", (tmp / "c").string()})
                .code == 0);
    auto b = nlohmann::json::parse(io::read_text_file(tmp / "b" / "run_config.json"));
    auto c = nlohmann::json::parse(io::read_text_file(tmp / "c" / "run_config.json"));
    CHECK(c["paths"]["out_dir"] == (tmp / "c").string());
    b["paths"].erase("out_dir");
    c["paths"].erase("out_dir");
    CHECK(b == c);
}
