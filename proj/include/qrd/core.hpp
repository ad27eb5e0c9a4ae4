#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrd {

using real_t = double;
using complex_t = std::complex<double>;

// Error taxonomy. Everything derives from qrd::error so callers can catch
// broadly; tests assert the specific type.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct io_error : error { using error::error; };
struct format_error : error { using error::error; };
struct corruption_error : error { using error::error; };
struct version_error : format_error { using format_error::format_error; };
struct argument_error : error { using error::error; };
struct validation_error : error { using error::error; };
struct training_error : error { using error::error; };
struct degenerate_error : error { using error::error; };
struct fit_error : error { using error::error; };
struct numeric_error : error { using error::error; };

// Uniform acquisition grid shared by every shot in a dataset.
struct SampleGrid {
    double sample_period_ns = 0.0;
    std::uint32_t num_samples = 0;

    double measurement_time_ns() const { return sample_period_ns * num_samples; }
    double time_ns(std::uint32_t n) const { return sample_period_ns * n; }
    // Time in microseconds; frequencies are carried in MHz so phase = 2*pi*f*t_us.
    double time_us(std::uint32_t n) const { return sample_period_ns * n * 1e-3; }

    bool operator==(const SampleGrid&) const = default;
};

// Prepared multi-qubit configuration. Bit i set means qubit i received a
// pi pulse. Valid bits lie in [0, 2^num_qubits).
struct PreparedLabel {
    std::uint32_t bits = 0;
    std::uint16_t num_qubits = 0;

    bool bit(std::uint16_t qubit) const { return (bits >> qubit) & 1u; }
    bool operator==(const PreparedLabel&) const = default;
};

// One acquired shot: complex baseband samples on a grid.
struct IQTrace {
    SampleGrid grid;
    std::vector<complex_t> samples;

    // Interleaved [I0, Q0, I1, Q1, ...] view used as the raw feature vector.
    std::vector<real_t> interleaved() const;

    bool operator==(const IQTrace&) const = default;
};

// Ordered key/value manifest serialized as "key = value" lines.
class Manifest {
  public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, std::uint64_t value);
    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;

    std::string serialize() const;
    static Manifest parse(const std::string& text);

    const std::map<std::string, std::string>& entries() const { return entries_; }
    bool operator==(const Manifest&) const = default;

  private:
    std::map<std::string, std::string> entries_;
};

// A labelled collection of shots on a common grid.
struct ShotDataset {
    SampleGrid grid;
    std::uint16_t num_qubits = 0;
    std::vector<IQTrace> traces;
    std::vector<PreparedLabel> labels;
    Manifest manifest;

    std::size_t size() const { return traces.size(); }
    std::uint32_t num_configurations() const { return 1u << num_qubits; }
    void validate() const;

    bool operator==(const ShotDataset&) const = default;
};

std::uint32_t checked_num_configurations(std::uint16_t num_qubits);

// 64-bit FNV-1a, used for config digests recorded in manifests.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace qrd
