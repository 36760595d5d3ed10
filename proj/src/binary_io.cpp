#include "cdslice/binary_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace cdslice::io {

std::vector<char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw InputError("write failed for " + path.string());
}

void ByteWriter::save(const std::filesystem::path& path) const {
    write_text_file(path, std::string_view(buf_.data(), buf_.size()));
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
    return ByteReader(read_file_bytes(path), path.string());
}

}  // namespace cdslice::io
