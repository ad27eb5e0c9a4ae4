#pragma once

#include "qrd/core.hpp"

#include <map>
#include <string>
#include <vector>

namespace qrd {

// Model container: magic "QRDM" | version u32 | header_len u32 | header text
// (key = value lines, includes "model = <type>") | count u64 | count f64
// little-endian payload values. Scalars live in the header at full precision;
// bulk arrays in the payload.
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelBlob {
    std::map<std::string, std::string> header;
    std::vector<double> payload;

    void set(const std::string& key, const std::string& value) { header[key] = value; }
    void set(const std::string& key, double value);
    void set(const std::string& key, std::uint64_t value);
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
};

void write_model_file(const ModelBlob& blob, const std::string& path);
ModelBlob read_model_file(const std::string& path);

}  // namespace qrd
