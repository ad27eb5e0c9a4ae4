#pragma once

#include "qrd/core.hpp"
#include "qrd/dsp.hpp"

#include <string>
#include <vector>

namespace qrd {

enum class SpectatorPolicy { GroundOnly, AllConfigs };
std::string to_string(SpectatorPolicy policy);
SpectatorPolicy spectator_policy_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Matched filter + threshold

struct MFDiscriminator {
    struct PerQubit {
        double tone_mhz = 0.0;
        FilterKernel kernel;
        double threshold = 0.0;
        double training_fidelity = 0.0;
    };
    SampleGrid grid;
    std::uint16_t num_qubits = 0;
    SpectatorPolicy spectator_policy = SpectatorPolicy::GroundOnly;
    std::vector<PerQubit> qubits;
};

struct MFTrainOptions {
    SpectatorPolicy spectator_policy = SpectatorPolicy::GroundOnly;
    std::uint32_t window_step = 25;  // lattice pitch of the window grid search
};

MFDiscriminator train_mf(const ShotDataset& train, const std::vector<double>& tones_mhz,
                         const MFTrainOptions& options = {});
// Bit i is read excited when its projection falls strictly below threshold
// (the ground class sits on the high side; ties go to ground).
std::uint32_t predict_mf(const MFDiscriminator& model, const IQTrace& trace);

// Best Eq-style fidelity threshold over midpoints of the sorted projections.
// Returns {threshold, fidelity}. projections/is_excited must be parallel.
std::pair<double, double> optimize_threshold(const std::vector<double>& projections,
                                             const std::vector<char>& is_excited);

// ---------------------------------------------------------------------------
// Linear soft-margin SVM (primal subgradient, Pegasos step schedule)

struct LinearSVMModel {
    std::vector<double> weights;  // acts on standardized features
    double bias = 0.0;
    double regularization_c = 1.0;
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;

    double decision(const std::vector<double>& features) const;
};

struct SVMTrainOptions {
    double regularization_c = 1.0;
    std::uint32_t epochs = 200;
    std::uint64_t seed = 1;
};

// labels: +1 / -1. Throws training_error when only one class is present.
LinearSVMModel train_linear_svm(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, const SVMTrainOptions& options);

// Objective (1/2)(||w||^2 + b^2) + C sum_i hinge, on standardized features.
double svm_objective(const LinearSVMModel& model, const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Per-qubit linear SVMs on demodulated traces

struct SQLSVMDiscriminator {
    struct PerQubit {
        double tone_mhz = 0.0;
        LinearSVMModel svm;  // decision > 0 reads the qubit as excited
        std::vector<std::pair<double, double>> c_selection;  // (C, validation fidelity)
    };
    SampleGrid grid;
    std::uint16_t num_qubits = 0;
    SpectatorPolicy spectator_policy = SpectatorPolicy::AllConfigs;
    std::vector<PerQubit> qubits;
};

struct SQLSVMTrainOptions {
    SpectatorPolicy spectator_policy = SpectatorPolicy::AllConfigs;
    std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0};
    double validation_ratio = 0.35;
    std::uint32_t epochs = 200;
    std::uint64_t seed = 1;
};

SQLSVMDiscriminator train_sq_lsvm(const ShotDataset& train, const std::vector<double>& tones_mhz,
                                  const SQLSVMTrainOptions& options = {});
std::uint32_t predict_sq_lsvm(const SQLSVMDiscriminator& model, const IQTrace& trace);

// ---------------------------------------------------------------------------
// One-vs-all linear SVMs over stacked demodulated traces

struct MQLSVMDiscriminator {
    SampleGrid grid;
    std::uint16_t num_qubits = 0;
    std::vector<double> tones_mhz;
    std::vector<LinearSVMModel> per_class;  // 2^N classifiers, argmax wins
};

struct MQLSVMTrainOptions {
    double regularization_c = 1.0;
    std::uint32_t epochs = 200;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

MQLSVMDiscriminator train_mq_lsvm(const ShotDataset& train, const std::vector<double>& tones_mhz,
                                  const MQLSVMTrainOptions& options = {});
// Ties resolve toward the smaller label.
std::uint32_t predict_mq_lsvm(const MQLSVMDiscriminator& model, const IQTrace& trace);

// ---------------------------------------------------------------------------
// Shared feature builders

std::vector<double> demodulated_features(const IQTrace& trace, double tone_mhz);
std::vector<double> stacked_features(const IQTrace& trace, const std::vector<double>& tones_mhz);

// Shots admissible for `qubit` under a spectator policy (indices into ds).
std::vector<std::size_t> admissible_shots(const ShotDataset& ds, std::uint16_t qubit,
                                          SpectatorPolicy policy);

// ---------------------------------------------------------------------------
// Serialization

void save_mf(const MFDiscriminator& model, const std::string& path);
MFDiscriminator load_mf(const std::string& path);
void save_sq_lsvm(const SQLSVMDiscriminator& model, const std::string& path);
SQLSVMDiscriminator load_sq_lsvm(const std::string& path);
void save_mq_lsvm(const MQLSVMDiscriminator& model, const std::string& path);
MQLSVMDiscriminator load_mq_lsvm(const std::string& path);

}  // namespace qrd
