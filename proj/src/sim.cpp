#include "qrd/sim.hpp"
#include "qrd/rng.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace qrd {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

CrosstalkModel CrosstalkModel::zero(std::size_t n) {
    CrosstalkModel m;
    m.phase_rad.assign(n, std::vector<double>(n, 0.0));
    return m;
}

CrosstalkModel CrosstalkModel::lorentzian(const std::vector<double>& tone_mhz, double hwhm_mhz,
                                          double scale) {
    if (!(hwhm_mhz > 0.0)) throw argument_error("crosstalk half-width must be positive");
    CrosstalkModel m = zero(tone_mhz.size());
    for (std::size_t i = 0; i < tone_mhz.size(); ++i)
        for (std::size_t j = 0; j < tone_mhz.size(); ++j) {
            if (i == j) continue;
            const double df = (tone_mhz[i] - tone_mhz[j]) / hwhm_mhz;
            m.phase_rad[i][j] = scale / (1.0 + df * df);
        }
    return m;
}

void SimConfig::validate() const {
    checked_num_configurations(num_qubits());
    if (qubits.size() != resonators.size())
        throw validation_error("qubit and resonator counts differ");
    if (grid.num_samples == 0) throw validation_error("num_samples must be >= 1");
    if (!(grid.sample_period_ns > 0.0)) throw validation_error("sample period must be positive");
    if (!(noise_sigma >= 0.0)) throw validation_error("noise sigma must be non-negative");
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        const auto& q = qubits[i];
        if (!(q.t1_us > 0.0)) throw validation_error("qubit " + std::to_string(i) + ": t1 must be positive");
        for (double p : {q.thermal_excitation_prob, q.leakage_prob})
            if (!(p >= 0.0 && p <= 1.0))
                throw validation_error("qubit " + std::to_string(i) + ": probability out of [0,1]");
        if (!(q.pi_pulse_fidelity >= 0.0 && q.pi_pulse_fidelity <= 1.0))
            throw validation_error("qubit " + std::to_string(i) + ": pi fidelity out of [0,1]");
        const auto& r = resonators[i];
        if (!(r.ring_up_rate_per_us > 0.0))
            throw validation_error("resonator " + std::to_string(i) + ": ring-up rate must be positive");
        if (!(r.amplitude >= 0.0))
            throw validation_error("resonator " + std::to_string(i) + ": amplitude must be non-negative");
        if (!std::isfinite(r.dispersive_phase_rad) || !std::isfinite(r.if_frequency_mhz))
            throw validation_error("resonator " + std::to_string(i) + ": non-finite parameter");
    }
    if (crosstalk.phase_rad.size() != qubits.size())
        throw validation_error("crosstalk matrix size mismatch");
    for (std::size_t i = 0; i < crosstalk.phase_rad.size(); ++i) {
        if (crosstalk.phase_rad[i].size() != qubits.size())
            throw validation_error("crosstalk matrix is not square");
        if (crosstalk.phase_rad[i][i] != 0.0)
            throw validation_error("crosstalk diagonal must be zero (row " + std::to_string(i) + ")");
    }
}

double SimConfig::mean_linewidth_mhz() const {
    double acc = 0.0;
    for (const auto& r : resonators) acc += r.ring_up_rate_per_us;
    return acc / (resonators.empty() ? 1.0 : static_cast<double>(resonators.size())) /
           3.14159265358979323846;
}

namespace {

// Phase of resonator i while its qubit sits in `level`.
double own_phase(const ResonatorSimParams& r, std::uint8_t level) {
    switch (level) {
        case 0: return -0.5 * r.dispersive_phase_rad;
        case 1: return +0.5 * r.dispersive_phase_rad;
        default: return r.dispersive_phase_rad;  // leaked: twice the excited offset
    }
}

struct QubitTimeline {
    std::uint8_t initial = 0;
    double decay_us = kInf;

    std::uint8_t level_at(double t_us) const {
        if (initial == 0) return 0;
        return t_us < decay_us ? initial : 0;
    }
};

QubitTimeline realize_qubit(const QubitSimParams& q, bool pulsed, Rng& rng) {
    QubitTimeline tl;
    if (pulsed) {
        tl.initial = rng.next_double() < q.pi_pulse_fidelity ? 1 : 0;
        if (tl.initial == 1 && q.leakage_prob > 0.0 && rng.next_double() < q.leakage_prob)
            tl.initial = 2;
    } else {
        if (q.thermal_excitation_prob > 0.0 && rng.next_double() < q.thermal_excitation_prob)
            tl.initial = 1;
    }
    if (tl.initial != 0) tl.decay_us = -q.t1_us * std::log(1.0 - rng.next_double());
    return tl;
}

std::uint64_t shot_stream_seed(const SimConfig& config, std::uint64_t shot_index) {
    std::uint64_t sm = config.seed;
    std::uint64_t base = splitmix64_next(sm);
    std::uint64_t sm2 = base ^ shot_index;
    return splitmix64_next(sm2);
}

}  // namespace

IQTrace generate_shot(const SimConfig& config, PreparedLabel label, std::uint64_t shot_index,
                      ShotRealization* realization) {
    config.validate();
    const std::uint16_t n_q = config.num_qubits();
    if (label.num_qubits != n_q || label.bits >= (1u << n_q))
        throw argument_error("label does not match simulator configuration");

    const std::uint64_t shot_seed = shot_stream_seed(config, shot_index);
    std::vector<QubitTimeline> timelines(n_q);
    for (std::uint16_t q = 0; q < n_q; ++q) {
        Rng rng = Rng::substream(shot_seed, q);
        timelines[q] = realize_qubit(config.qubits[q], label.bit(q), rng);
    }
    if (realization) {
        realization->initial_level.resize(n_q);
        realization->decay_time_us.resize(n_q);
        for (std::uint16_t q = 0; q < n_q; ++q) {
            realization->initial_level[q] = timelines[q].initial;
            realization->decay_time_us[q] = timelines[q].decay_us;
        }
    }

    Rng noise = Rng::substream(shot_seed, n_q);
    IQTrace trace;
    trace.grid = config.grid;
    trace.samples.resize(config.grid.num_samples);
    std::vector<std::uint8_t> level(n_q);
    for (std::uint32_t n = 0; n < config.grid.num_samples; ++n) {
        const double t = config.grid.time_us(n);
        for (std::uint16_t q = 0; q < n_q; ++q) level[q] = timelines[q].level_at(t);
        complex_t z = 0.0;
        for (std::uint16_t i = 0; i < n_q; ++i) {
            const auto& r = config.resonators[i];
            const double envelope = 1.0 - std::exp(-r.ring_up_rate_per_us * t);
            double phase = kTwoPi * r.if_frequency_mhz * t + own_phase(r, level[i]);
            for (std::uint16_t j = 0; j < n_q; ++j)
                if (level[j] != 0) phase += config.crosstalk.phase_rad[i][j];
            z += r.amplitude * envelope * complex_t(std::cos(phase), std::sin(phase));
        }
        if (config.noise_sigma > 0.0) {
            z += config.noise_sigma * complex_t(noise.next_gaussian(), noise.next_gaussian());
        }
        // ADC-style quantization: the in-memory dataset matches its f32
        // serialization bit for bit. volatile keeps gcc at -O3 from eliding
        // the narrowing when it fuses the two lanes into one vector op.
        volatile float quantized_i = static_cast<float>(z.real());
        volatile float quantized_q = static_cast<float>(z.imag());
        trace.samples[n] = complex_t(quantized_i, quantized_q);
    }
    return trace;
}

ShotDataset generate_dataset(const SimConfig& config, std::uint64_t shots_per_label,
                             unsigned threads) {
    config.validate();
    if (shots_per_label == 0) throw argument_error("shots_per_label must be >= 1");
    const std::uint32_t configs = checked_num_configurations(config.num_qubits());
    const std::uint64_t total = static_cast<std::uint64_t>(configs) * shots_per_label;
    if (total > (1ull << 31)) throw argument_error("total shot count overflows sane limits");

    ShotDataset ds;
    ds.grid = config.grid;
    ds.num_qubits = config.num_qubits();
    ds.traces.resize(total);
    ds.labels.resize(total);

    auto worker = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t s = begin; s < end; ++s) {
            const std::uint32_t label_bits = static_cast<std::uint32_t>(s / shots_per_label);
            PreparedLabel label{label_bits, ds.num_qubits};
            ds.labels[s] = label;
            ds.traces[s] = generate_shot(config, label, s);
        }
    };
    if (threads <= 1 || total < 256) {
        worker(0, total);
    } else {
        const unsigned n_threads = std::min<unsigned>(threads, 64);
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (total + n_threads - 1) / n_threads;
        for (unsigned t = 0; t < n_threads; ++t) {
            const std::uint64_t b = t * chunk;
            const std::uint64_t e = std::min(total, b + chunk);
            if (b >= e) break;
            pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }

    Manifest& m = ds.manifest;
    m.set("format", std::string("qrd-shot-dataset"));
    m.set("normalization", std::string("none"));
    m.set("sim.seed", static_cast<std::uint64_t>(config.seed));
    m.set("sim.digest", static_cast<std::uint64_t>(fnv1a64(serialize_sim_config(config))));
    m.set("sim.shots_per_label", static_cast<std::uint64_t>(shots_per_label));
    m.set("sim.noise_sigma", config.noise_sigma);
    m.set("sim.crosstalk_scale", config.crosstalk_scale);
    for (std::uint16_t i = 0; i < config.num_qubits(); ++i) {
        const std::string p = "sim.qubit." + std::to_string(i) + ".";
        m.set(p + "t1_us", config.qubits[i].t1_us);
        m.set(p + "thermal_excitation_prob", config.qubits[i].thermal_excitation_prob);
        m.set(p + "pi_pulse_fidelity", config.qubits[i].pi_pulse_fidelity);
        m.set("sim.resonator." + std::to_string(i) + ".if_mhz", config.resonators[i].if_frequency_mhz);
    }
    ds.validate();
    return ds;
}

double calibrate_noise_for_fisher(const SimConfig& config, std::uint16_t qubit_index,
                                  double target_fisher) {
    config.validate();
    if (qubit_index >= config.num_qubits()) throw argument_error("qubit index out of range");
    if (!(target_fisher > 0.0)) throw argument_error("target Fisher criterion must be positive");
    const auto& r = config.resonators[qubit_index];
    const double half_swing = 2.0 * r.amplitude * std::abs(std::sin(0.5 * r.dispersive_phase_rad));
    if (!(half_swing > 0.0))
        throw degenerate_error("qubit has no dispersive separation; cannot calibrate noise");
    double sum_env_sq = 0.0;
    for (std::uint32_t n = 0; n < config.grid.num_samples; ++n) {
        const double env = 1.0 - std::exp(-r.ring_up_rate_per_us * config.grid.time_us(n));
        sum_env_sq += env * env;
    }
    return std::sqrt(half_swing * half_swing * sum_env_sq / target_fisher);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string serialize_sim_config(const SimConfig& config) {
    std::ostringstream os;
    os << "[readout]\n";
    os << "num_qubits = " << config.qubits.size() << "\n";
    os << "num_samples = " << config.grid.num_samples << "\n";
    os << "sample_period_ns = " << fmt(config.grid.sample_period_ns) << "\n";
    os << "noise_sigma = " << fmt(config.noise_sigma) << "\n";
    os << "seed = " << config.seed << "\n";
    os << "crosstalk_scale = " << fmt(config.crosstalk_scale) << "\n";
    for (std::size_t i = 0; i < config.qubits.size(); ++i) {
        const auto& q = config.qubits[i];
        os << "\n[qubit " << i << "]\n";
        os << "t1_us = " << fmt(q.t1_us) << "\n";
        os << "thermal_excitation_prob = " << fmt(q.thermal_excitation_prob) << "\n";
        os << "pi_pulse_fidelity = " << fmt(q.pi_pulse_fidelity) << "\n";
        os << "leakage_prob = " << fmt(q.leakage_prob) << "\n";
    }
    for (std::size_t i = 0; i < config.resonators.size(); ++i) {
        const auto& r = config.resonators[i];
        os << "\n[resonator " << i << "]\n";
        os << "if_mhz = " << fmt(r.if_frequency_mhz) << "\n";
        os << "dispersive_phase_rad = " << fmt(r.dispersive_phase_rad) << "\n";
        os << "ring_up_rate_per_us = " << fmt(r.ring_up_rate_per_us) << "\n";
        os << "amplitude = " << fmt(r.amplitude) << "\n";
    }
    bool any_explicit = false;
    for (std::size_t i = 0; i < config.crosstalk.phase_rad.size() && !any_explicit; ++i)
        for (std::size_t j = 0; j < config.crosstalk.phase_rad.size() && !any_explicit; ++j)
            if (i != j && config.crosstalk.phase_rad[i][j] != 0.0) any_explicit = true;
    if (any_explicit) {
        os << "\n[crosstalk]\n";
        for (std::size_t i = 0; i < config.crosstalk.phase_rad.size(); ++i)
            for (std::size_t j = 0; j < config.crosstalk.phase_rad.size(); ++j)
                if (i != j && config.crosstalk.phase_rad[i][j] != 0.0)
                    os << "phase_" << i << "_" << j << " = " << fmt(config.crosstalk.phase_rad[i][j])
                       << "\n";
    }
    return os.str();
}

namespace {

struct IniSection {
    std::string name;
    std::map<std::string, std::string> kv;
};

std::vector<IniSection> parse_ini(const std::string& text) {
    std::vector<IniSection> sections;
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
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw format_error("config line " + std::to_string(lineno) + ": unterminated section");
            sections.push_back(IniSection{trim(t.substr(1, t.size() - 2)), {}});
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw format_error("config line " + std::to_string(lineno) + ": expected key = value");
        if (sections.empty())
            throw format_error("config line " + std::to_string(lineno) + ": key before any section");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw format_error("config line " + std::to_string(lineno) + ": empty key or value");
        sections.back().kv[key] = value;
    }
    return sections;
}

double to_double(const std::string& v, const std::string& what) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw format_error(what + ": not a number: '" + v + "'");
    }
    if (pos != v.size()) throw format_error(what + ": not a number: '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& v, const std::string& what) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw format_error(what + ": not a non-negative integer: '" + v + "'");
    return std::stoull(v);
}

}  // namespace

SimConfig parse_sim_config(const std::string& text) {
    auto sections = parse_ini(text);
    SimConfig config;
    config.crosstalk.phase_rad.clear();
    std::size_t declared_qubits = 0;
    bool have_readout = false;
    std::map<std::pair<std::size_t, std::size_t>, double> explicit_xt;

    for (const auto& sec : sections) {
        std::istringstream name(sec.name);
        std::string kind;
        name >> kind;
        if (kind == "readout") {
            have_readout = true;
            for (const auto& [k, v] : sec.kv) {
                if (k == "num_qubits") declared_qubits = to_u64(v, k);
                else if (k == "num_samples") config.grid.num_samples = static_cast<std::uint32_t>(to_u64(v, k));
                else if (k == "sample_period_ns") config.grid.sample_period_ns = to_double(v, k);
                else if (k == "noise_sigma") config.noise_sigma = to_double(v, k);
                else if (k == "seed") config.seed = to_u64(v, k);
                else if (k == "crosstalk_scale") config.crosstalk_scale = to_double(v, k);
                else throw format_error("unknown [readout] key: " + k);
            }
        } else if (kind == "qubit" || kind == "resonator") {
            std::size_t idx = 0;
            if (!(name >> idx)) throw format_error("section [" + sec.name + "] needs an index");
            if (kind == "qubit") {
                if (config.qubits.size() <= idx) config.qubits.resize(idx + 1);
                QubitSimParams& q = config.qubits[idx];
                for (const auto& [k, v] : sec.kv) {
                    if (k == "t1_us") q.t1_us = to_double(v, k);
                    else if (k == "thermal_excitation_prob") q.thermal_excitation_prob = to_double(v, k);
                    else if (k == "pi_pulse_fidelity") q.pi_pulse_fidelity = to_double(v, k);
                    else if (k == "leakage_prob") q.leakage_prob = to_double(v, k);
                    else throw format_error("unknown [qubit] key: " + k);
                }
            } else {
                if (config.resonators.size() <= idx) config.resonators.resize(idx + 1);
                ResonatorSimParams& r = config.resonators[idx];
                for (const auto& [k, v] : sec.kv) {
                    if (k == "if_mhz") r.if_frequency_mhz = to_double(v, k);
                    else if (k == "dispersive_phase_rad") r.dispersive_phase_rad = to_double(v, k);
                    else if (k == "ring_up_rate_per_us") r.ring_up_rate_per_us = to_double(v, k);
                    else if (k == "amplitude") r.amplitude = to_double(v, k);
                    else throw format_error("unknown [resonator] key: " + k);
                }
            }
        } else if (kind == "crosstalk") {
            for (const auto& [k, v] : sec.kv) {
                if (k.rfind("phase_", 0) != 0) throw format_error("unknown [crosstalk] key: " + k);
                std::size_t us = k.find('_', 6);
                if (us == std::string::npos) throw format_error("bad crosstalk key: " + k);
                std::size_t i = to_u64(k.substr(6, us - 6), k);
                std::size_t j = to_u64(k.substr(us + 1), k);
                explicit_xt[{i, j}] = to_double(v, k);
            }
        } else {
            throw format_error("unknown config section: [" + sec.name + "]");
        }
    }
    if (!have_readout) throw format_error("config is missing the [readout] section");
    if (declared_qubits == 0) throw format_error("num_qubits must be declared and positive");
    if (config.qubits.size() != declared_qubits || config.resonators.size() != declared_qubits)
        throw format_error("config declares " + std::to_string(declared_qubits) +
                           " qubits but defines " + std::to_string(config.qubits.size()) +
                           " qubit and " + std::to_string(config.resonators.size()) +
                           " resonator sections");

    if (!explicit_xt.empty()) {
        config.crosstalk = CrosstalkModel::zero(declared_qubits);
        for (const auto& [ij, v] : explicit_xt) {
            if (ij.first >= declared_qubits || ij.second >= declared_qubits)
                throw format_error("crosstalk index out of range");
            if (ij.first == ij.second && v != 0.0)
                throw format_error("crosstalk diagonal must be zero");
            config.crosstalk.phase_rad[ij.first][ij.second] = v;
        }
    } else if (config.crosstalk_scale != 0.0) {
        std::vector<double> tones;
        for (const auto& r : config.resonators) tones.push_back(r.if_frequency_mhz);
        config.crosstalk =
            CrosstalkModel::lorentzian(tones, config.mean_linewidth_mhz(), config.crosstalk_scale);
    } else {
        config.crosstalk = CrosstalkModel::zero(declared_qubits);
    }
    config.validate();
    return config;
}

SimConfig read_sim_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open config: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_sim_config(buf.str());
}

void write_sim_config_file(const SimConfig& config, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw io_error("cannot open config for writing: " + path);
    os << serialize_sim_config(config);
    if (!os) throw io_error("write failure: " + path);
}

}  // namespace qrd
