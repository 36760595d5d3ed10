#include "cdslice/cli/run_config.hpp"

#include <fmt/format.h>
#include <functional>
#include <map>

#include "cdslice/error.hpp"

namespace cdslice::cli {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view precision_name(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view s) {
    if (s == "f32") return Precision::f32;
    if (s == "f64") return Precision::f64;
    throw InputError("precision must be f32 or f64, got '" + std::string(s) + "'");
}

std::string_view normalization_name(geometry::NormalizationMode m) {
    return m == geometry::NormalizationMode::none ? "none" : "per_car_center_scale";
}

geometry::NormalizationMode parse_normalization(std::string_view s) {
    if (s == "none") return geometry::NormalizationMode::none;
    if (s == "per_car_center_scale") return geometry::NormalizationMode::per_car_center_scale;
    throw InputError("normalization must be none or per_car_center_scale, got '" + std::string(s) + "'");
}

std::string_view overflow_name(geometry::OverflowPolicy p) {
    return p == geometry::OverflowPolicy::strict ? "strict" : "subsample";
}

geometry::OverflowPolicy parse_overflow(std::string_view s) {
    if (s == "strict") return geometry::OverflowPolicy::strict;
    if (s == "subsample") return geometry::OverflowPolicy::subsample;
    throw InputError("overflow must be strict or subsample, got '" + std::string(s) + "'");
}

geometry::SliceConfig RunConfig::slice_config(std::size_t m) const {
    geometry::SliceConfig c;
    c.slices = slices;
    c.max_points = m;
    c.pool_padding = pool_padding;
    c.normalization = normalization;
    c.overflow = overflow;
    return c;
}

model::ModelConfig RunConfig::model_config(std::size_t m) const {
    model::ModelConfig c = model::scaled_widths(model, width_divisor);
    c.slicing = slice_config(m);
    c.init_seed = seed;
    return c;
}

void RunConfig::validate() const {
    if (slices == 0) throw ParameterError("slices must be positive");
    if (max_points && *max_points == 0) throw ParameterError("max_points must be positive");
    if (width_divisor == 0) throw ParameterError("width_divisor must be positive");
    if (threads == 0) throw ParameterError("threads must be positive");
    if (!(histogram_bin_width > 0.0)) throw ParameterError("histogram_bin_width must be positive");
    model_config(max_points.value_or(1)).validate();
    training::TrainConfig t = train;
    t.validate();
    synth.validate();
}

namespace {

ordered_json range_json(const std::pair<double, double>& r) { return ordered_json::array({r.first, r.second}); }

std::pair<double, double> parse_range(const json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InputError("config key '" + key + "' must be a [lo, hi] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <class T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw InputError(fmt::format("config key '{}' has the wrong type ({})", key, j.dump()));
    }
}

using Setter = std::function<void(RunConfig&, const json&, const std::string&)>;

template <class T, class Field>
Setter field(Field f) {
    return [f](RunConfig& c, const json& j, const std::string& key) { f(c) = get_as<T>(j, key); };
}

void apply_section(RunConfig& c, const json& j, const std::string& section,
                   const std::map<std::string, Setter>& setters) {
    if (!j.is_object()) throw InputError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        const auto it = setters.find(key);
        const std::string full = section.empty() ? key : section + "." + key;
        if (it == setters.end()) throw InputError("unknown config key '" + full + "'");
        it->second(c, value, full);
    }
}

}  // namespace

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["command"] = c.command;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["precision"] = precision_name(c.precision);

    auto& s = j["slicing"];
    s["slices"] = c.slices;
    s["max_points"] = c.max_points ? ordered_json(*c.max_points) : ordered_json(nullptr);
    s["pool_padding"] = c.pool_padding;
    s["normalization"] = normalization_name(c.normalization);
    s["overflow"] = overflow_name(c.overflow);

    auto& m = j["model"];
    m["pointnet_channels"] = c.model.pointnet_channels;
    m["hidden"] = c.model.hidden;
    m["lstm_layers"] = c.model.lstm_layers;
    m["lstm_two_biases"] = c.model.lstm_two_biases;
    m["head_widths"] = c.model.head_widths;
    m["lstm_dropout"] = c.model.lstm_dropout;
    m["head_dropout"] = c.model.head_dropout;
    m["width_divisor"] = c.width_divisor;

    auto& t = j["train"];
    t["learning_rate"] = c.train.learning_rate;
    t["batch_size"] = c.train.batch_size;
    t["epochs"] = c.train.epochs;
    t["beta"] = c.train.beta;
    t["adam_beta1"] = c.train.adam_beta1;
    t["adam_beta2"] = c.train.adam_beta2;
    t["adam_epsilon"] = c.train.adam_epsilon;
    t["clip_grad_norm"] = c.train.clip_grad_norm ? ordered_json(*c.train.clip_grad_norm) : ordered_json(nullptr);
    t["record_wall_clock"] = c.train.record_wall_clock;

    auto& y = j["synth"];
    y["n_bodies"] = c.n_bodies;
    y["points_per_body"] = c.synth.points;
    y["length"] = range_json(c.synth.length);
    y["nose_fraction"] = range_json(c.synth.nose_fraction);
    y["tail_fraction"] = range_json(c.synth.tail_fraction);
    y["half_width"] = range_json(c.synth.half_width);
    y["half_height"] = range_json(c.synth.half_height);
    y["tail_exponent"] = range_json(c.synth.tail_exponent);
    y["superellipse_exponent"] = range_json(c.synth.superellipse_exponent);

    auto& p = j["paths"];
    p["manifest"] = c.manifest;
    p["cache_dir"] = c.cache_dir;
    p["out_dir"] = c.out_dir;
    p["checkpoint"] = c.checkpoint;
    p["cloud"] = c.cloud;
    p["resume"] = c.resume;
    p["train_log"] = c.train_log;
    p["eval_csv"] = c.eval_csv;

    j["eval"]["split"] = c.split;
    j["eval"]["histogram_bin_width"] = c.histogram_bin_width;
    j["gradcheck"]["epsilon"] = c.gradcheck_epsilon;
    j["gradcheck"]["tolerance"] = c.gradcheck_tolerance;
    return j;
}

void apply_json(RunConfig& config, const json& j) {
    using Sizes = std::vector<std::size_t>;
    const std::map<std::string, Setter> slicing{
        {"slices", field<std::size_t>([](RunConfig& c) -> auto& { return c.slices; })},
        {"max_points",
         [](RunConfig& c, const json& v, const std::string& k) {
             if (v.is_null())
                 c.max_points.reset();
             else
                 c.max_points = get_as<std::size_t>(v, k);
         }},
        {"pool_padding", field<bool>([](RunConfig& c) -> auto& { return c.pool_padding; })},
        {"normalization",
         [](RunConfig& c, const json& v, const std::string& k) {
             c.normalization = parse_normalization(get_as<std::string>(v, k));
         }},
        {"overflow",
         [](RunConfig& c, const json& v, const std::string& k) { c.overflow = parse_overflow(get_as<std::string>(v, k)); }},
    };
    const std::map<std::string, Setter> model{
        {"pointnet_channels", field<Sizes>([](RunConfig& c) -> auto& { return c.model.pointnet_channels; })},
        {"hidden", field<std::size_t>([](RunConfig& c) -> auto& { return c.model.hidden; })},
        {"lstm_layers", field<std::size_t>([](RunConfig& c) -> auto& { return c.model.lstm_layers; })},
        {"lstm_two_biases", field<bool>([](RunConfig& c) -> auto& { return c.model.lstm_two_biases; })},
        {"head_widths", field<Sizes>([](RunConfig& c) -> auto& { return c.model.head_widths; })},
        {"lstm_dropout", field<double>([](RunConfig& c) -> auto& { return c.model.lstm_dropout; })},
        {"head_dropout", field<double>([](RunConfig& c) -> auto& { return c.model.head_dropout; })},
        {"width_divisor", field<std::size_t>([](RunConfig& c) -> auto& { return c.width_divisor; })},
    };
    const std::map<std::string, Setter> train{
        {"learning_rate", field<double>([](RunConfig& c) -> auto& { return c.train.learning_rate; })},
        {"batch_size", field<std::size_t>([](RunConfig& c) -> auto& { return c.train.batch_size; })},
        {"epochs", field<std::size_t>([](RunConfig& c) -> auto& { return c.train.epochs; })},
        {"beta", field<double>([](RunConfig& c) -> auto& { return c.train.beta; })},
        {"adam_beta1", field<double>([](RunConfig& c) -> auto& { return c.train.adam_beta1; })},
        {"adam_beta2", field<double>([](RunConfig& c) -> auto& { return c.train.adam_beta2; })},
        {"adam_epsilon", field<double>([](RunConfig& c) -> auto& { return c.train.adam_epsilon; })},
        {"clip_grad_norm",
         [](RunConfig& c, const json& v, const std::string& k) {
             if (v.is_null())
                 c.train.clip_grad_norm.reset();
             else
                 c.train.clip_grad_norm = get_as<double>(v, k);
         }},
        {"record_wall_clock", field<bool>([](RunConfig& c) -> auto& { return c.train.record_wall_clock; })},
    };
    auto range = [](std::pair<double, double> dataio::SpecRanges::*member) -> Setter {
        return [member](RunConfig& c, const json& v, const std::string& k) { c.synth.*member = parse_range(v, k); };
    };
    const std::map<std::string, Setter> synth{
        {"n_bodies", field<std::size_t>([](RunConfig& c) -> auto& { return c.n_bodies; })},
        {"points_per_body", field<std::size_t>([](RunConfig& c) -> auto& { return c.synth.points; })},
        {"length", range(&dataio::SpecRanges::length)},
        {"nose_fraction", range(&dataio::SpecRanges::nose_fraction)},
        {"tail_fraction", range(&dataio::SpecRanges::tail_fraction)},
        {"half_width", range(&dataio::SpecRanges::half_width)},
        {"half_height", range(&dataio::SpecRanges::half_height)},
        {"tail_exponent", range(&dataio::SpecRanges::tail_exponent)},
        {"superellipse_exponent", range(&dataio::SpecRanges::superellipse_exponent)},
    };
    const std::map<std::string, Setter> paths{
        {"manifest", field<std::string>([](RunConfig& c) -> auto& { return c.manifest; })},
        {"cache_dir", field<std::string>([](RunConfig& c) -> auto& { return c.cache_dir; })},
        {"out_dir", field<std::string>([](RunConfig& c) -> auto& { return c.out_dir; })},
        {"checkpoint", field<std::string>([](RunConfig& c) -> auto& { return c.checkpoint; })},
        {"cloud", field<std::string>([](RunConfig& c) -> auto& { return c.cloud; })},
        {"resume", field<std::string>([](RunConfig& c) -> auto& { return c.resume; })},
        {"train_log", field<std::string>([](RunConfig& c) -> auto& { return c.train_log; })},
        {"eval_csv", field<std::string>([](RunConfig& c) -> auto& { return c.eval_csv; })},
    };
    const std::map<std::string, Setter> eval{
        {"split", field<std::string>([](RunConfig& c) -> auto& { return c.split; })},
        {"histogram_bin_width", field<double>([](RunConfig& c) -> auto& { return c.histogram_bin_width; })},
    };
    const std::map<std::string, Setter> gradcheck{
        {"epsilon", field<double>([](RunConfig& c) -> auto& { return c.gradcheck_epsilon; })},
        {"tolerance", field<double>([](RunConfig& c) -> auto& { return c.gradcheck_tolerance; })},
    };
    auto sub = [](const std::map<std::string, Setter>& setters, std::string name) -> Setter {
        return [setters, name](RunConfig& c, const json& v, const std::string&) { apply_section(c, v, name, setters); };
    };
    const std::map<std::string, Setter> top{
        {"command", [](RunConfig&, const json&, const std::string&) {}},
        {"seed", field<std::uint64_t>([](RunConfig& c) -> auto& { return c.seed; })},
        {"threads", field<std::size_t>([](RunConfig& c) -> auto& { return c.threads; })},
        {"precision",
         [](RunConfig& c, const json& v, const std::string& k) { c.precision = parse_precision(get_as<std::string>(v, k)); }},
        {"slicing", sub(slicing, "slicing")},
        {"model", sub(model, "model")},
        {"train", sub(train, "train")},
        {"synth", sub(synth, "synth")},
        {"paths", sub(paths, "paths")},
        {"eval", sub(eval, "eval")},
        {"gradcheck", sub(gradcheck, "gradcheck")},
    };
    apply_section(config, j, "", top);
}

}  // namespace cdslice::cli
