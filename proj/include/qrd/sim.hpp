#pragma once

#include "qrd/core.hpp"

#include <string>
#include <vector>

namespace qrd {

struct QubitSimParams {
    double t1_us = 20.0;
    double thermal_excitation_prob = 0.0;
    double pi_pulse_fidelity = 1.0;
    double leakage_prob = 0.0;
};

struct ResonatorSimParams {
    double if_frequency_mhz = 0.0;
    double dispersive_phase_rad = 0.5;  // full ground-to-excited phase swing
    double ring_up_rate_per_us = 13.5;
    double amplitude = 1.0;
};

// State-dependent phase pull: phase_rad[i][j] is added to resonator i's
// phase while qubit j is excited. Diagonal must stay zero (a qubit's own
// dispersive shift already lives in ResonatorSimParams).
struct CrosstalkModel {
    std::vector<std::vector<double>> phase_rad;

    static CrosstalkModel zero(std::size_t n);
    // Pull falling off as a Lorentzian in tone separation:
    // scale / (1 + (df/hwhm)^2).
    static CrosstalkModel lorentzian(const std::vector<double>& tone_mhz, double hwhm_mhz,
                                     double scale);
};

struct SimConfig {
    SampleGrid grid{2.0, 250};
    double noise_sigma = 0.3;
    std::uint64_t seed = 1;
    std::vector<QubitSimParams> qubits;
    std::vector<ResonatorSimParams> resonators;
    CrosstalkModel crosstalk;
    double crosstalk_scale = 0.0;  // informational: knob used to build the matrix

    std::uint16_t num_qubits() const { return static_cast<std::uint16_t>(qubits.size()); }
    void validate() const;
    // Mean ring-up rate mapped to a tone-width half-width in MHz (rate/pi).
    double mean_linewidth_mhz() const;
};

// Qubit levels: 0 ground, 1 excited, 2 leaked.
struct ShotRealization {
    std::vector<std::uint8_t> initial_level;
    std::vector<double> decay_time_us;  // +inf when no jump happens
};

// Deterministic in (config, label, shot_index): every (shot, qubit) pair and
// the noise draw its own RNG substream, so one qubit's branches never shift
// another's randomness.
IQTrace generate_shot(const SimConfig& config, PreparedLabel label, std::uint64_t shot_index,
                      ShotRealization* realization = nullptr);

// 2^N * shots_per_label shots in label-major order. Samples are quantized to
// f32 at the source so in-memory data always equals its serialized form.
ShotDataset generate_dataset(const SimConfig& config, std::uint64_t shots_per_label,
                             unsigned threads = 1);

// Noise level that makes the ideal (decay-free, crosstalk-free) matched-filter
// separation of qubit_index hit the requested Fisher criterion.
double calibrate_noise_for_fisher(const SimConfig& config, std::uint16_t qubit_index,
                                  double target_fisher);

std::string serialize_sim_config(const SimConfig& config);
SimConfig parse_sim_config(const std::string& text);
SimConfig read_sim_config_file(const std::string& path);
void write_sim_config_file(const SimConfig& config, const std::string& path);

}  // namespace qrd
