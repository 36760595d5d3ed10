#include "cdslice/model/checkpoint.hpp"

#include "cdslice/binary_io.hpp"
#include "cdslice/error.hpp"

namespace cdslice::model {
namespace {

constexpr std::string_view kMagic = "CDPM0001";

void write_config(io::ByteWriter& w, const ModelConfig& c) {
    w.u64(c.slicing.slices);
    w.u64(c.slicing.max_points);
    w.u8(c.slicing.pool_padding ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(c.slicing.normalization));
    w.u8(static_cast<std::uint8_t>(c.slicing.overflow));
    w.u32(static_cast<std::uint32_t>(c.pointnet_channels.size()));
    for (auto ch : c.pointnet_channels) w.u64(ch);
    w.u64(c.hidden);
    w.u64(c.lstm_layers);
    w.u8(c.lstm_two_biases ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(c.head_widths.size()));
    for (auto hw : c.head_widths) w.u64(hw);
    w.f64(c.lstm_dropout);
    w.f64(c.head_dropout);
    w.u64(c.init_seed);
}

std::uint8_t read_flag(io::ByteReader& in, std::uint8_t max_value, const char* what) {
    const std::size_t at = in.offset();
    const std::uint8_t v = in.u8();
    if (v > max_value) in.fail(std::string("invalid ") + what + " value " + std::to_string(v), at);
    return v;
}

std::vector<std::size_t> read_widths(io::ByteReader& in) {
    const std::size_t at = in.offset();
    const std::uint32_t n = in.u32();
    if (n > 64) in.fail("implausible layer count " + std::to_string(n), at);
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = in.u64();
    return v;
}

ModelConfig read_config(io::ByteReader& in) {
    const std::size_t at = in.offset();
    ModelConfig c;
    c.slicing.slices = in.u64();
    c.slicing.max_points = in.u64();
    c.slicing.pool_padding = read_flag(in, 1, "pool_padding") != 0;
    c.slicing.normalization = static_cast<geometry::NormalizationMode>(read_flag(in, 1, "normalization"));
    c.slicing.overflow = static_cast<geometry::OverflowPolicy>(read_flag(in, 1, "overflow"));
    c.pointnet_channels = read_widths(in);
    c.hidden = in.u64();
    c.lstm_layers = in.u64();
    c.lstm_two_biases = read_flag(in, 1, "two_biases") != 0;
    c.head_widths = read_widths(in);
    c.lstm_dropout = in.f64();
    c.head_dropout = in.f64();
    c.init_seed = in.u64();
    try {
        c.validate();
    } catch (const Error& e) {
        in.fail(std::string("invalid config block: ") + e.what(), at);
    }
    return c;
}

template <class T>
ModelParams<T> read_params(io::ByteReader& in) {
    in.expect_magic(kMagic);
    const ModelConfig config = read_config(in);
    if (count_parameters(config) > in.remaining() / 4)
        in.fail("config declares " + std::to_string(count_parameters(config)) + " parameters, more than the file holds");
    ModelParams<T> params = ModelParams<T>::zeros(config);
    auto sections = params.parameters();
    const std::size_t at = in.offset();
    const std::uint32_t n = in.u32();
    if (n != sections.size())
        in.fail("expected " + std::to_string(sections.size()) + " sections, found " + std::to_string(n), at);
    for (auto* p : sections) {
        const std::size_t name_at = in.offset();
        const std::string name = in.str(4096);
        if (name != p->name) in.fail("expected section '" + p->name + "', found '" + name + "'", name_at);
        const std::size_t count_at = in.offset();
        const std::uint64_t count = in.u64();
        if (count != p->size())
            in.fail("section '" + name + "' has " + std::to_string(count) + " values, expected " +
                        std::to_string(p->size()),
                    count_at);
        for (auto& v : p->value.values()) v = static_cast<T>(in.f32());
    }
    if (in.remaining() != 0) in.fail("trailing bytes after last section");
    return params;
}

}  // namespace

template <class T>
std::vector<char> serialize_params(const ModelParams<T>& params) {
    io::ByteWriter w;
    w.bytes(kMagic);
    write_config(w, params.config);
    const auto sections = params.parameters();
    w.u32(static_cast<std::uint32_t>(sections.size()));
    for (const auto* p : sections) {
        w.str(p->name);
        w.u64(p->size());
        for (T v : p->value.values()) w.f32(static_cast<float>(v));
    }
    return w.buffer();
}

template <class T>
void save_params(const ModelParams<T>& params, const std::filesystem::path& path) {
    const auto bytes = serialize_params(params);
    io::write_text_file(path, std::string_view(bytes.data(), bytes.size()));
}

template <class T>
ModelParams<T> load_params(const std::filesystem::path& path) {
    auto in = io::ByteReader::from_file(path);
    return read_params<T>(in);
}

template <class T>
ModelParams<T> load_params(const std::filesystem::path& path, const ModelConfig& expected) {
    const ModelConfig found = load_checkpoint_config(path);
    if (!found.same_architecture(expected))
        throw ConfigMismatchError(path.string() + ": checkpoint config [" + found.describe() +
                                  "] does not match expected [" + expected.describe() + "]");
    return load_params<T>(path);
}

ModelConfig load_checkpoint_config(const std::filesystem::path& path) {
    auto in = io::ByteReader::from_file(path);
    in.expect_magic(kMagic);
    return read_config(in);
}

template std::vector<char> serialize_params(const ModelParams<float>&);
template std::vector<char> serialize_params(const ModelParams<double>&);
template void save_params(const ModelParams<float>&, const std::filesystem::path&);
template void save_params(const ModelParams<double>&, const std::filesystem::path&);
template ModelParams<float> load_params(const std::filesystem::path&);
template ModelParams<double> load_params(const std::filesystem::path&);
template ModelParams<float> load_params(const std::filesystem::path&, const ModelConfig&);
template ModelParams<double> load_params(const std::filesystem::path&, const ModelConfig&);

}  // namespace cdslice::model
