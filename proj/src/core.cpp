#include "qrd/core.hpp"
#include "qrd/rng.hpp"

#include <cmath>
#include <sstream>

namespace qrd {

std::vector<real_t> IQTrace::interleaved() const {
    std::vector<real_t> out;
    out.reserve(2 * samples.size());
    for (const complex_t& z : samples) {
        out.push_back(z.real());
        out.push_back(z.imag());
    }
    return out;
}

void Manifest::set(const std::string& key, const std::string& value) {
    if (key.empty() || key.find('=') != std::string::npos || key.find('\n') != std::string::npos)
        throw argument_error("manifest key must be non-empty and free of '=' and newlines: '" + key + "'");
    if (value.find('\n') != std::string::npos)
        throw argument_error("manifest value must not contain newlines (key '" + key + "')");
    entries_[key] = value;
}

void Manifest::set(const std::string& key, double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    set(key, os.str());
}

void Manifest::set(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}

bool Manifest::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& Manifest::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw argument_error("manifest key not present: '" + key + "'");
    return it->second;
}

std::string Manifest::get_or(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double Manifest::get_double(const std::string& key) const {
    const std::string& s = get(key);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw format_error("manifest value for '" + key + "' is not numeric: '" + s + "'");
    }
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size())
        throw format_error("manifest value for '" + key + "' is not numeric: '" + s + "'");
    return v;
}

std::string Manifest::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

Manifest Manifest::parse(const std::string& text) {
    Manifest m;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        std::size_t b = s.find_first_not_of(" \t\r");
        std::size_t e = s.find_last_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        return s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw format_error("manifest line " + std::to_string(lineno) + " has no '=': '" + t + "'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw format_error("manifest line " + std::to_string(lineno) + " has an empty key");
        m.entries_[key] = value;
    }
    return m;
}

std::uint32_t checked_num_configurations(std::uint16_t num_qubits) {
    if (num_qubits == 0) throw argument_error("num_qubits must be >= 1");
    if (num_qubits > 20) throw argument_error("num_qubits too large: " + std::to_string(num_qubits));
    return 1u << num_qubits;
}

void ShotDataset::validate() const {
    checked_num_configurations(num_qubits);
    if (grid.num_samples == 0) throw validation_error("dataset grid has zero samples");
    if (!(grid.sample_period_ns > 0.0)) throw validation_error("dataset sample period must be positive");
    if (traces.size() != labels.size())
        throw validation_error("trace/label count mismatch: " + std::to_string(traces.size()) +
                               " vs " + std::to_string(labels.size()));
    const std::uint32_t configs = num_configurations();
    for (std::size_t i = 0; i < traces.size(); ++i) {
        if (!(traces[i].grid == grid))
            throw validation_error("shot " + std::to_string(i) + " grid differs from dataset grid");
        if (traces[i].samples.size() != grid.num_samples)
            throw validation_error("shot " + std::to_string(i) + " has wrong sample count");
        if (labels[i].num_qubits != num_qubits)
            throw validation_error("shot " + std::to_string(i) + " label qubit count mismatch");
        if (labels[i].bits >= configs)
            throw validation_error("shot " + std::to_string(i) + " label out of range");
        for (const complex_t& z : traces[i].samples)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw validation_error("shot " + std::to_string(i) + " contains non-finite samples");
    }
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace qrd
