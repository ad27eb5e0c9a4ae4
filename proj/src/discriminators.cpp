#include "qrd/discriminators.hpp"
#include "qrd/model_io.hpp"
#include "qrd/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace qrd {

std::string to_string(SpectatorPolicy policy) {
    return policy == SpectatorPolicy::GroundOnly ? "ground" : "all";
}

SpectatorPolicy spectator_policy_from_string(const std::string& name) {
    if (name == "ground") return SpectatorPolicy::GroundOnly;
    if (name == "all") return SpectatorPolicy::AllConfigs;
    throw argument_error("unknown spectator policy: '" + name + "' (expected 'ground' or 'all')");
}

std::vector<std::size_t> admissible_shots(const ShotDataset& ds, std::uint16_t qubit,
                                          SpectatorPolicy policy) {
    if (qubit >= ds.num_qubits) throw argument_error("qubit index out of range");
    std::vector<std::size_t> idx;
    idx.reserve(ds.size());
    const std::uint32_t spectator_mask = (ds.num_configurations() - 1) & ~(1u << qubit);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (policy == SpectatorPolicy::GroundOnly && (ds.labels[i].bits & spectator_mask)) continue;
        idx.push_back(i);
    }
    return idx;
}

// ---------------------------------------------------------------------------
// Feature builders

namespace {

std::vector<complex_t> oscillator_table(const SampleGrid& grid, double tone_mhz) {
    std::vector<complex_t> osc(grid.num_samples);
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (std::uint32_t n = 0; n < grid.num_samples; ++n) {
        const double phase = -kTwoPi * tone_mhz * grid.time_us(n);
        osc[n] = complex_t(std::cos(phase), std::sin(phase));
    }
    return osc;
}

void append_demod(const IQTrace& trace, const std::vector<complex_t>& osc,
                  std::vector<double>& out) {
    for (std::size_t n = 0; n < trace.samples.size(); ++n) {
        const complex_t z = trace.samples[n] * osc[n];
        out.push_back(z.real());
        out.push_back(z.imag());
    }
}

}  // namespace

std::vector<double> demodulated_features(const IQTrace& trace, double tone_mhz) {
    std::vector<double> out;
    out.reserve(2 * trace.samples.size());
    append_demod(trace, oscillator_table(trace.grid, tone_mhz), out);
    return out;
}

std::vector<double> stacked_features(const IQTrace& trace, const std::vector<double>& tones_mhz) {
    std::vector<double> out;
    out.reserve(2 * trace.samples.size() * tones_mhz.size());
    for (double tone : tones_mhz) append_demod(trace, oscillator_table(trace.grid, tone), out);
    return out;
}

// ---------------------------------------------------------------------------
// Threshold sweep

std::pair<double, double> optimize_threshold(const std::vector<double>& projections,
                                             const std::vector<char>& is_excited) {
    if (projections.size() != is_excited.size()) throw argument_error("length mismatch");
    const std::size_t n = projections.size();
    std::size_t n1 = 0;
    for (char e : is_excited) n1 += e ? 1 : 0;
    const std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) throw degenerate_error("threshold sweep needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return projections[a] < projections[b];
    });

    // Walking the sorted projections from below: k points lie below the
    // candidate midpoint, of which c1 are excited (correct) and c0 ground
    // (wrong). Shots at or above the threshold read as ground.
    double best_f = -1.0, best_t = 0.0;
    std::size_t c0 = 0, c1 = 0;
    for (std::size_t k = 1; k < n; ++k) {
        (is_excited[order[k - 1]] ? c1 : c0) += 1;
        const double lo = projections[order[k - 1]];
        const double hi = projections[order[k]];
        if (!(lo < hi)) continue;  // midpoint would not separate these points
        const double p0_given_pi = static_cast<double>(n1 - c1) / static_cast<double>(n1);
        const double p1_given_ground = static_cast<double>(c0) / static_cast<double>(n0);
        const double f = 1.0 - 0.5 * (p0_given_pi + p1_given_ground);
        if (f > best_f) {
            best_f = f;
            best_t = 0.5 * (lo + hi);
        }
    }
    if (best_f < 0.0) {
        // All projections equal: nothing separates, assign everything ground.
        return {projections.front(), 1.0 - 0.5 * (static_cast<double>(n1) / n1)};
    }
    return {best_t, best_f};
}

// ---------------------------------------------------------------------------
// Matched filter

namespace {

struct WindowLattice {
    std::vector<std::uint32_t> bounds;  // 0, step, 2 step, ..., M
};

WindowLattice make_lattice(std::uint32_t num_samples, std::uint32_t step) {
    if (step == 0) throw argument_error("window step must be positive");
    WindowLattice lat;
    for (std::uint32_t b = 0; b < num_samples; b += step) lat.bounds.push_back(b);
    lat.bounds.push_back(num_samples);
    return lat;
}

}  // namespace

MFDiscriminator train_mf(const ShotDataset& train, const std::vector<double>& tones_mhz,
                         const MFTrainOptions& options) {
    train.validate();
    if (tones_mhz.size() != train.num_qubits)
        throw argument_error("need one demodulation tone per qubit");
    const std::uint32_t m = train.grid.num_samples;

    MFDiscriminator model;
    model.grid = train.grid;
    model.num_qubits = train.num_qubits;
    model.spectator_policy = options.spectator_policy;
    model.qubits.resize(train.num_qubits);

    const WindowLattice lat = make_lattice(m, options.window_step);
    const std::size_t nb = lat.bounds.size() - 1;

    for (std::uint16_t q = 0; q < train.num_qubits; ++q) {
        const auto idx = admissible_shots(train, q, options.spectator_policy);
        const auto osc = oscillator_table(train.grid, tones_mhz[q]);

        std::size_t n0 = 0, n1 = 0;
        for (std::size_t i : idx) (train.labels[i].bit(q) ? n1 : n0) += 1;
        if (n0 == 0 || n1 == 0)
            throw training_error("qubit " + std::to_string(q) +
                                 ": training data lacks one of the classes");

        // Streaming per-bin class statistics of the demodulated shots.
        std::vector<complex_t> sum0(m, 0.0), sum1(m, 0.0);
        std::vector<double> sumsq0(m, 0.0), sumsq1(m, 0.0);
        for (std::size_t i : idx) {
            const bool exc = train.labels[i].bit(q);
            auto& sum = exc ? sum1 : sum0;
            auto& sumsq = exc ? sumsq1 : sumsq0;
            const auto& tr = train.traces[i].samples;
            for (std::uint32_t n = 0; n < m; ++n) {
                const complex_t z = tr[n] * osc[n];
                sum[n] += z;
                sumsq[n] += std::norm(z);
            }
        }
        std::vector<complex_t> mean_diff(m);
        std::vector<complex_t> weights(m);
        for (std::uint32_t n = 0; n < m; ++n) {
            const complex_t mu0 = sum0[n] / static_cast<double>(n0);
            const complex_t mu1 = sum1[n] / static_cast<double>(n1);
            const double var0 = std::max(sumsq0[n] / n0 - std::norm(mu0), 0.0);
            const double var1 = std::max(sumsq1[n] / n1 - std::norm(mu1), 0.0);
            mean_diff[n] = mu0 - mu1;
            const double denom = var0 + var1;
            weights[n] = denom > 0.0 ? mean_diff[n] / denom : mean_diff[n];
        }

        // Blocked partial sums of k_n z_n allow cheap window scoring.
        std::vector<complex_t> blocks(idx.size() * nb);
        std::vector<char> excited(idx.size());
        for (std::size_t s = 0; s < idx.size(); ++s) {
            excited[s] = train.labels[idx[s]].bit(q) ? 1 : 0;
            const auto& tr = train.traces[idx[s]].samples;
            for (std::size_t b = 0; b < nb; ++b) {
                complex_t acc = 0.0;
                for (std::uint32_t n = lat.bounds[b]; n < lat.bounds[b + 1]; ++n)
                    acc += weights[n] * (tr[n] * osc[n]);
                blocks[s * nb + b] = acc;
            }
        }
        // Class means of the same block sums give the window rotation.
        std::vector<complex_t> block_diff(nb, 0.0);
        for (std::size_t b = 0; b < nb; ++b) {
            complex_t m0 = 0.0, m1 = 0.0;
            for (std::size_t s = 0; s < idx.size(); ++s)
                (excited[s] ? m1 : m0) += blocks[s * nb + b];
            block_diff[b] = m0 / static_cast<double>(n0) - m1 / static_cast<double>(n1);
        }

        double best_f = -1.0, best_threshold = 0.0;
        std::size_t best_a = 0, best_b = nb;
        complex_t best_rot = 1.0;
        std::vector<double> proj(idx.size());
        for (std::size_t a = 0; a < nb; ++a) {
            for (std::size_t b = a + 1; b <= nb; ++b) {
                complex_t diff = 0.0;
                for (std::size_t k = a; k < b; ++k) diff += block_diff[k];
                const double mag = std::abs(diff);
                const complex_t rot = mag > 0.0 ? std::conj(diff) / mag : complex_t(1.0);
                for (std::size_t s = 0; s < idx.size(); ++s) {
                    complex_t acc = 0.0;
                    for (std::size_t k = a; k < b; ++k) acc += blocks[s * nb + k];
                    proj[s] = (rot * acc).real();
                }
                auto [threshold, fidelity] = optimize_threshold(proj, excited);
                if (fidelity > best_f) {
                    best_f = fidelity;
                    best_threshold = threshold;
                    best_a = a;
                    best_b = b;
                    best_rot = rot;
                }
            }
        }

        MFDiscriminator::PerQubit& pq = model.qubits[q];
        pq.tone_mhz = tones_mhz[q];
        pq.kernel.weights = std::move(weights);
        for (auto& w : pq.kernel.weights) w *= best_rot;
        pq.kernel.window_start = lat.bounds[best_a];
        pq.kernel.window_end = lat.bounds[best_b];
        pq.threshold = best_threshold;
        pq.training_fidelity = best_f;
    }
    return model;
}

std::uint32_t predict_mf(const MFDiscriminator& model, const IQTrace& trace) {
    if (!(trace.grid == model.grid))
        throw argument_error("trace grid does not match the trained model");
    std::uint32_t bits = 0;
    for (std::uint16_t q = 0; q < model.num_qubits; ++q) {
        const auto& pq = model.qubits[q];
        const DemodulatedTrace d = demodulate(trace, pq.tone_mhz);
        const double s = apply_kernel(pq.kernel, d);
        if (s < pq.threshold) bits |= (1u << q);  // ties read as ground
    }
    return bits;
}

// ---------------------------------------------------------------------------
// Linear SVM

double LinearSVMModel::decision(const std::vector<double>& features) const {
    if (features.size() != weights.size())
        throw argument_error("feature dimension does not match the model");
    double acc = bias;
    for (std::size_t k = 0; k < weights.size(); ++k)
        acc += weights[k] * (features[k] - feature_mean[k]) / feature_scale[k];
    return acc;
}

LinearSVMModel train_linear_svm(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, const SVMTrainOptions& options) {
    const std::size_t n = features.size();
    if (n < 2) throw training_error("need at least two training samples");
    if (labels.size() != n) throw argument_error("feature/label count mismatch");
    const std::size_t d = features.front().size();
    if (d == 0) throw argument_error("empty feature vectors");
    bool seen_pos = false, seen_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (features[i].size() != d)
            throw argument_error("inconsistent feature dimension at sample " + std::to_string(i));
        if (labels[i] == 1) seen_pos = true;
        else if (labels[i] == -1) seen_neg = true;
        else throw argument_error("labels must be +1 or -1");
    }
    if (!seen_pos || !seen_neg) throw training_error("training data contains a single class");
    if (!(options.regularization_c > 0.0)) throw argument_error("C must be positive");
    if (options.epochs == 0) throw argument_error("epochs must be >= 1");

    LinearSVMModel model;
    model.regularization_c = options.regularization_c;
    model.feature_mean.assign(d, 0.0);
    model.feature_scale.assign(d, 1.0);
    for (const auto& x : features)
        for (std::size_t k = 0; k < d; ++k) model.feature_mean[k] += x[k];
    for (double& mu : model.feature_mean) mu /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& x : features)
        for (std::size_t k = 0; k < d; ++k) {
            const double c = x[k] - model.feature_mean[k];
            var[k] += c * c;
        }
    for (std::size_t k = 0; k < d; ++k) {
        const double sd = std::sqrt(var[k] / static_cast<double>(n));
        model.feature_scale[k] = sd > 0.0 ? sd : 1.0;
    }

    // Standardize once up front; the inner loop only sees z-scores.
    std::vector<double> X(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k)
            X[i * d + k] = (features[i][k] - model.feature_mean[k]) / model.feature_scale[k];

    // Pegasos with the bias as an extra regularized coordinate. The weight
    // vector is kept as scale * v to make the per-step shrink O(1).
    const double lambda = 1.0 / (static_cast<double>(n) * options.regularization_c);
    std::vector<double> v(d, 0.0);
    double vb = 0.0;
    double scale = 1.0;
    std::uint64_t t = 1;
    Rng rng(options.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::uint32_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t step = 0; step < n; ++step, ++t) {
            const std::size_t i = order[step];
            const double* x = &X[i * d];
            double dot = vb;
            for (std::size_t k = 0; k < d; ++k) dot += v[k] * x[k];
            const double margin = labels[i] * scale * dot;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            scale *= (t == 1) ? 0.0 : (1.0 - 1.0 / static_cast<double>(t));
            if (scale == 0.0) {
                // Degenerate shrink (first step): restart the representation.
                std::fill(v.begin(), v.end(), 0.0);
                vb = 0.0;
                scale = 1.0;
            }
            if (margin < 1.0) {
                const double g = eta * labels[i] / scale;
                for (std::size_t k = 0; k < d; ++k) v[k] += g * x[k];
                vb += g;
            }
            if (scale < 1e-9) {
                for (double& vk : v) vk *= scale;
                vb *= scale;
                scale = 1.0;
            }
        }
    }
    model.weights.resize(d);
    for (std::size_t k = 0; k < d; ++k) model.weights[k] = scale * v[k];
    model.bias = scale * vb;
    return model;
}

double svm_objective(const LinearSVMModel& model, const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels) {
    double norm = model.bias * model.bias;
    for (double w : model.weights) norm += w * w;
    double hinge = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i)
        hinge += std::max(0.0, 1.0 - labels[i] * model.decision(features[i]));
    return 0.5 * norm + model.regularization_c * hinge;
}

// ---------------------------------------------------------------------------
// Single-qubit linear SVMs

namespace {

// Deterministic stratified split of sample indices by group key.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::uint32_t>& groups, double val_ratio, std::uint64_t seed) {
    std::map<std::uint32_t, std::vector<std::size_t>> by_group;
    for (std::size_t i = 0; i < groups.size(); ++i) by_group[groups[i]].push_back(i);
    std::vector<std::size_t> train_idx, val_idx;
    for (auto& [g, members] : by_group) {
        Rng rng = Rng::substream(seed, g);
        rng.shuffle(members);
        const std::size_t val_count =
            static_cast<std::size_t>(std::floor(val_ratio * static_cast<double>(members.size()) + 0.5));
        for (std::size_t k = 0; k < members.size(); ++k)
            (k < val_count ? val_idx : train_idx).push_back(members[k]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    return {std::move(train_idx), std::move(val_idx)};
}

double binary_fidelity(const std::vector<char>& truth, const std::vector<char>& predicted) {
    std::size_t n0 = 0, n1 = 0, wrong0 = 0, wrong1 = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i]) {
            ++n1;
            if (!predicted[i]) ++wrong1;
        } else {
            ++n0;
            if (predicted[i]) ++wrong0;
        }
    }
    if (n0 == 0 || n1 == 0) throw degenerate_error("validation set lacks one of the classes");
    return 1.0 - 0.5 * (static_cast<double>(wrong1) / n1 + static_cast<double>(wrong0) / n0);
}

}  // namespace

SQLSVMDiscriminator train_sq_lsvm(const ShotDataset& train, const std::vector<double>& tones_mhz,
                                  const SQLSVMTrainOptions& options) {
    train.validate();
    if (tones_mhz.size() != train.num_qubits)
        throw argument_error("need one demodulation tone per qubit");
    if (options.c_grid.empty()) throw argument_error("C grid must not be empty");
    if (!(options.validation_ratio > 0.0 && options.validation_ratio < 1.0))
        throw argument_error("validation ratio must lie in (0,1)");

    SQLSVMDiscriminator model;
    model.grid = train.grid;
    model.num_qubits = train.num_qubits;
    model.spectator_policy = options.spectator_policy;
    model.qubits.resize(train.num_qubits);

    for (std::uint16_t q = 0; q < train.num_qubits; ++q) {
        const auto idx = admissible_shots(train, q, options.spectator_policy);
        const auto osc = oscillator_table(train.grid, tones_mhz[q]);
        std::vector<std::vector<double>> X;
        X.reserve(idx.size());
        std::vector<int> y;
        y.reserve(idx.size());
        std::vector<std::uint32_t> full_labels;
        full_labels.reserve(idx.size());
        for (std::size_t i : idx) {
            std::vector<double> f;
            f.reserve(2 * train.grid.num_samples);
            append_demod(train.traces[i], osc, f);
            X.push_back(std::move(f));
            y.push_back(train.labels[i].bit(q) ? 1 : -1);
            full_labels.push_back(train.labels[i].bits);
        }

        double chosen_c = options.c_grid.front();
        auto& pq = model.qubits[q];
        pq.tone_mhz = tones_mhz[q];
        if (options.c_grid.size() > 1) {
            auto [tr_idx, val_idx] =
                stratified_split(full_labels, options.validation_ratio, stream_seed(options.seed, 4096 + q));
            if (tr_idx.empty() || val_idx.empty())
                throw training_error("validation split left an empty set");
            std::vector<std::vector<double>> Xt;
            std::vector<int> yt;
            for (std::size_t i : tr_idx) {
                Xt.push_back(X[i]);
                yt.push_back(y[i]);
            }
            std::vector<char> val_truth;
            for (std::size_t i : val_idx) val_truth.push_back(y[i] > 0 ? 1 : 0);
            double best_f = -1.0;
            for (double c : options.c_grid) {
                SVMTrainOptions trial;
                trial.regularization_c = c;
                trial.epochs = options.epochs;
                trial.seed = stream_seed(options.seed, 65536 + q);
                LinearSVMModel cand = train_linear_svm(Xt, yt, trial);
                std::vector<char> pred;
                pred.reserve(val_idx.size());
                for (std::size_t i : val_idx) pred.push_back(cand.decision(X[i]) > 0.0 ? 1 : 0);
                const double f = binary_fidelity(val_truth, pred);
                pq.c_selection.emplace_back(c, f);
                if (f > best_f) {
                    best_f = f;
                    chosen_c = c;
                }
            }
        }
        SVMTrainOptions final_opts;
        final_opts.regularization_c = chosen_c;
        final_opts.epochs = options.epochs;
        final_opts.seed = stream_seed(options.seed, q);
        pq.svm = train_linear_svm(X, y, final_opts);
    }
    return model;
}

std::uint32_t predict_sq_lsvm(const SQLSVMDiscriminator& model, const IQTrace& trace) {
    if (!(trace.grid == model.grid))
        throw argument_error("trace grid does not match the trained model");
    std::uint32_t bits = 0;
    for (std::uint16_t q = 0; q < model.num_qubits; ++q) {
        const auto f = demodulated_features(trace, model.qubits[q].tone_mhz);
        if (model.qubits[q].svm.decision(f) > 0.0) bits |= (1u << q);
    }
    return bits;
}

// ---------------------------------------------------------------------------
// Multi-qubit one-vs-all SVMs

MQLSVMDiscriminator train_mq_lsvm(const ShotDataset& train, const std::vector<double>& tones_mhz,
                                  const MQLSVMTrainOptions& options) {
    train.validate();
    if (tones_mhz.size() != train.num_qubits)
        throw argument_error("need one demodulation tone per qubit");
    const std::uint32_t classes = train.num_configurations();
    std::vector<std::uint64_t> per_class(classes, 0);
    for (const auto& lbl : train.labels) ++per_class[lbl.bits];
    for (std::uint32_t c = 0; c < classes; ++c)
        if (per_class[c] == 0)
            throw training_error("configuration " + std::to_string(c) +
                                 " is absent from the training data");

    std::vector<std::vector<double>> X;
    X.reserve(train.size());
    for (const auto& tr : train.traces) X.push_back(stacked_features(tr, tones_mhz));

    MQLSVMDiscriminator model;
    model.grid = train.grid;
    model.num_qubits = train.num_qubits;
    model.tones_mhz = tones_mhz;
    model.per_class.resize(classes);

    // One shared seed keeps the sample order identical across the one-vs-all
    // trainers, which makes complementary problems exactly mirrored.
    const std::uint64_t class_seed = stream_seed(options.seed, 0xA11);
    auto train_class = [&](std::uint32_t c) {
        std::vector<int> y(train.size());
        for (std::size_t i = 0; i < train.size(); ++i)
            y[i] = train.labels[i].bits == c ? 1 : -1;
        SVMTrainOptions sopt;
        sopt.regularization_c = options.regularization_c;
        sopt.epochs = options.epochs;
        sopt.seed = class_seed;
        model.per_class[c] = train_linear_svm(X, y, sopt);
    };
    if (options.threads <= 1 || classes < 2) {
        for (std::uint32_t c = 0; c < classes; ++c) train_class(c);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::uint32_t> next{0};
        const unsigned n_threads = std::min<unsigned>(options.threads, classes);
        for (unsigned t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    const std::uint32_t c = next.fetch_add(1);
                    if (c >= classes) return;
                    train_class(c);
                }
            });
        for (auto& th : pool) th.join();
    }
    return model;
}

std::uint32_t predict_mq_lsvm(const MQLSVMDiscriminator& model, const IQTrace& trace) {
    if (!(trace.grid == model.grid))
        throw argument_error("trace grid does not match the trained model");
    const auto f = stacked_features(trace, model.tones_mhz);
    std::uint32_t best = 0;
    double best_score = model.per_class.front().decision(f);
    for (std::uint32_t c = 1; c < model.per_class.size(); ++c) {
        const double s = model.per_class[c].decision(f);
        if (s > best_score) {  // strict: ties keep the smaller label
            best_score = s;
            best = c;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_grid(ModelBlob& blob, const SampleGrid& grid, std::uint16_t num_qubits) {
    blob.set("num_qubits", static_cast<std::uint64_t>(num_qubits));
    blob.set("num_samples", static_cast<std::uint64_t>(grid.num_samples));
    blob.set("sample_period_ns", grid.sample_period_ns);
}

SampleGrid grid_from(const ModelBlob& blob) {
    SampleGrid g;
    g.num_samples = static_cast<std::uint32_t>(blob.get_u64("num_samples"));
    g.sample_period_ns = blob.get_double("sample_period_ns");
    return g;
}

class PayloadReader {
  public:
    explicit PayloadReader(const std::vector<double>& payload) : payload_(payload) {}
    double scalar() {
        check(1);
        return payload_[pos_++];
    }
    std::vector<double> block(std::size_t count) {
        check(count);
        std::vector<double> out(payload_.begin() + pos_, payload_.begin() + pos_ + count);
        pos_ += count;
        return out;
    }
    void finish() const {
        if (pos_ != payload_.size())
            throw corruption_error("model payload has " + std::to_string(payload_.size() - pos_) +
                                   " unread values");
    }

  private:
    void check(std::size_t count) const {
        if (pos_ + count > payload_.size()) throw corruption_error("model payload too short");
    }
    const std::vector<double>& payload_;
    std::size_t pos_ = 0;
};

void put_svm(ModelBlob& blob, const LinearSVMModel& svm) {
    blob.payload.insert(blob.payload.end(), svm.feature_mean.begin(), svm.feature_mean.end());
    blob.payload.insert(blob.payload.end(), svm.feature_scale.begin(), svm.feature_scale.end());
    blob.payload.insert(blob.payload.end(), svm.weights.begin(), svm.weights.end());
    blob.payload.push_back(svm.bias);
}

LinearSVMModel take_svm(PayloadReader& reader, std::size_t dim, double c) {
    LinearSVMModel svm;
    svm.regularization_c = c;
    svm.feature_mean = reader.block(dim);
    svm.feature_scale = reader.block(dim);
    svm.weights = reader.block(dim);
    svm.bias = reader.scalar();
    return svm;
}

}  // namespace

void save_mf(const MFDiscriminator& model, const std::string& path) {
    ModelBlob blob;
    blob.set("model", std::string("mf"));
    put_grid(blob, model.grid, model.num_qubits);
    blob.set("spectator_policy", to_string(model.spectator_policy));
    for (std::uint16_t q = 0; q < model.num_qubits; ++q) {
        const auto& pq = model.qubits[q];
        const std::string p = "qubit." + std::to_string(q) + ".";
        blob.set(p + "tone_mhz", pq.tone_mhz);
        blob.set(p + "threshold", pq.threshold);
        blob.set(p + "window_start", static_cast<std::uint64_t>(pq.kernel.window_start));
        blob.set(p + "window_end", static_cast<std::uint64_t>(pq.kernel.window_end));
        blob.set(p + "training_fidelity", pq.training_fidelity);
        for (const complex_t& w : pq.kernel.weights) {
            blob.payload.push_back(w.real());
            blob.payload.push_back(w.imag());
        }
    }
    write_model_file(blob, path);
}

MFDiscriminator load_mf(const std::string& path) {
    ModelBlob blob = read_model_file(path);
    if (blob.get("model") != "mf") throw format_error("model file is not a matched filter");
    MFDiscriminator model;
    model.grid = grid_from(blob);
    model.num_qubits = static_cast<std::uint16_t>(blob.get_u64("num_qubits"));
    model.spectator_policy = spectator_policy_from_string(blob.get("spectator_policy"));
    model.qubits.resize(model.num_qubits);
    PayloadReader reader(blob.payload);
    for (std::uint16_t q = 0; q < model.num_qubits; ++q) {
        auto& pq = model.qubits[q];
        const std::string p = "qubit." + std::to_string(q) + ".";
        pq.tone_mhz = blob.get_double(p + "tone_mhz");
        pq.threshold = blob.get_double(p + "threshold");
        pq.kernel.window_start = static_cast<std::uint32_t>(blob.get_u64(p + "window_start"));
        pq.kernel.window_end = static_cast<std::uint32_t>(blob.get_u64(p + "window_end"));
        pq.training_fidelity = blob.get_double(p + "training_fidelity");
        const auto flat = reader.block(2 * static_cast<std::size_t>(model.grid.num_samples));
        pq.kernel.weights.resize(model.grid.num_samples);
        for (std::uint32_t n = 0; n < model.grid.num_samples; ++n)
            pq.kernel.weights[n] = complex_t(flat[2 * n], flat[2 * n + 1]);
        if (pq.kernel.window_end > model.grid.num_samples ||
            pq.kernel.window_start >= pq.kernel.window_end)
            throw corruption_error("matched-filter window is inconsistent");
    }
    reader.finish();
    return model;
}

void save_sq_lsvm(const SQLSVMDiscriminator& model, const std::string& path) {
    ModelBlob blob;
    blob.set("model", std::string("sq-lsvm"));
    put_grid(blob, model.grid, model.num_qubits);
    blob.set("spectator_policy", to_string(model.spectator_policy));
    for (std::uint16_t q = 0; q < model.num_qubits; ++q) {
        const auto& pq = model.qubits[q];
        const std::string p = "qubit." + std::to_string(q) + ".";
        blob.set(p + "tone_mhz", pq.tone_mhz);
        blob.set(p + "regularization_c", pq.svm.regularization_c);
        std::ostringstream sel;
        sel.precision(17);
        for (std::size_t k = 0; k < pq.c_selection.size(); ++k) {
            if (k) sel << ";";
            sel << pq.c_selection[k].first << ":" << pq.c_selection[k].second;
        }
        blob.set(p + "c_selection", sel.str());
        put_svm(blob, pq.svm);
    }
    write_model_file(blob, path);
}

SQLSVMDiscriminator load_sq_lsvm(const std::string& path) {
    ModelBlob blob = read_model_file(path);
    if (blob.get("model") != "sq-lsvm") throw format_error("model file is not a per-qubit SVM");
    SQLSVMDiscriminator model;
    model.grid = grid_from(blob);
    model.num_qubits = static_cast<std::uint16_t>(blob.get_u64("num_qubits"));
    model.spectator_policy = spectator_policy_from_string(blob.get("spectator_policy"));
    model.qubits.resize(model.num_qubits);
    const std::size_t dim = 2 * static_cast<std::size_t>(model.grid.num_samples);
    PayloadReader reader(blob.payload);
    for (std::uint16_t q = 0; q < model.num_qubits; ++q) {
        auto& pq = model.qubits[q];
        const std::string p = "qubit." + std::to_string(q) + ".";
        pq.tone_mhz = blob.get_double(p + "tone_mhz");
        const double c = blob.get_double(p + "regularization_c");
        const std::string sel = blob.get(p + "c_selection");
        std::istringstream ss(sel);
        std::string item;
        while (std::getline(ss, item, ';')) {
            if (item.empty()) continue;
            const std::size_t colon = item.find(':');
            if (colon == std::string::npos) throw corruption_error("bad c_selection entry: " + item);
            pq.c_selection.emplace_back(std::stod(item.substr(0, colon)),
                                        std::stod(item.substr(colon + 1)));
        }
        pq.svm = take_svm(reader, dim, c);
    }
    reader.finish();
    return model;
}

void save_mq_lsvm(const MQLSVMDiscriminator& model, const std::string& path) {
    ModelBlob blob;
    blob.set("model", std::string("mq-lsvm"));
    put_grid(blob, model.grid, model.num_qubits);
    std::ostringstream tones;
    tones.precision(17);
    for (std::size_t i = 0; i < model.tones_mhz.size(); ++i) {
        if (i) tones << ",";
        tones << model.tones_mhz[i];
    }
    blob.set("tones_mhz", tones.str());
    blob.set("regularization_c", model.per_class.front().regularization_c);
    for (const auto& svm : model.per_class) put_svm(blob, svm);
    write_model_file(blob, path);
}

MQLSVMDiscriminator load_mq_lsvm(const std::string& path) {
    ModelBlob blob = read_model_file(path);
    if (blob.get("model") != "mq-lsvm") throw format_error("model file is not a one-vs-all SVM");
    MQLSVMDiscriminator model;
    model.grid = grid_from(blob);
    model.num_qubits = static_cast<std::uint16_t>(blob.get_u64("num_qubits"));
    std::istringstream ts(blob.get("tones_mhz"));
    std::string item;
    while (std::getline(ts, item, ',')) model.tones_mhz.push_back(std::stod(item));
    if (model.tones_mhz.size() != model.num_qubits)
        throw corruption_error("tone list does not match qubit count");
    const double c = blob.get_double("regularization_c");
    const std::uint32_t classes = checked_num_configurations(model.num_qubits);
    const std::size_t dim =
        2 * static_cast<std::size_t>(model.grid.num_samples) * model.num_qubits;
    PayloadReader reader(blob.payload);
    for (std::uint32_t cls = 0; cls < classes; ++cls)
        model.per_class.push_back(take_svm(reader, dim, c));
    reader.finish();
    return model;
}

}  // namespace qrd
