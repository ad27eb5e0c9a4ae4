#include "qrd/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qrd {

namespace {
constexpr char kMagic[4] = {'Q', 'R', 'D', 'M'};
static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

std::string fmt17(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace

void ModelBlob::set(const std::string& key, double value) { header[key] = fmt17(value); }
void ModelBlob::set(const std::string& key, std::uint64_t value) {
    header[key] = std::to_string(value);
}

const std::string& ModelBlob::get(const std::string& key) const {
    auto it = header.find(key);
    if (it == header.end()) throw format_error("model header missing key: " + key);
    return it->second;
}

double ModelBlob::get_double(const std::string& key) const {
    const std::string& s = get(key);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw format_error("model header key '" + key + "' is not numeric: '" + s + "'");
    }
    if (pos != s.size())
        throw format_error("model header key '" + key + "' is not numeric: '" + s + "'");
    return v;
}

std::uint64_t ModelBlob::get_u64(const std::string& key) const {
    const std::string& s = get(key);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw format_error("model header key '" + key + "' is not an integer: '" + s + "'");
    return std::stoull(s);
}

void write_model_file(const ModelBlob& blob, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw io_error("cannot open for writing: " + path);
    os.write(kMagic, 4);
    const std::uint32_t version = kModelFormatVersion;
    os.write(reinterpret_cast<const char*>(&version), sizeof(version));
    std::string header;
    for (const auto& [k, v] : blob.header) header += k + " = " + v + "\n";
    const std::uint32_t header_len = static_cast<std::uint32_t>(header.size());
    os.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    os.write(header.data(), header_len);
    const std::uint64_t count = blob.payload.size();
    os.write(reinterpret_cast<const char*>(&count), sizeof(count));
    os.write(reinterpret_cast<const char*>(blob.payload.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (!os) throw io_error("write failure: " + path);
}

ModelBlob read_model_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open for reading: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw format_error("not a QRDM model file: " + path);
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!is) throw corruption_error("model file truncated in version field");
    if (version != kModelFormatVersion)
        throw version_error("unsupported model format version " + std::to_string(version));
    std::uint32_t header_len = 0;
    is.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!is) throw corruption_error("model file truncated in header length");
    std::string header(header_len, '\0');
    is.read(header.data(), header_len);
    if (!is) throw corruption_error("model file truncated in header");

    ModelBlob blob;
    std::istringstream hs(header);
    std::string line;
    while (std::getline(hs, line)) {
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw corruption_error("model header line lacks '=': " + line);
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            return s.substr(b, e - b + 1);
        };
        blob.header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!is) throw corruption_error("model file truncated in payload count");
    blob.payload.resize(count);
    is.read(reinterpret_cast<char*>(blob.payload.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw corruption_error("model file truncated in payload");
    is.peek();
    if (!is.eof()) throw corruption_error("model file has trailing bytes");
    return blob;
}

}  // namespace qrd
