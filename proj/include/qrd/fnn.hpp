#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qrd/core.hpp"

namespace qrd {

// Scaled exponential linear unit and its derivative.
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
double selu(double z);
double selu_derivative(double z);

struct FnnArchitecture {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t output_dim = 0;
};

// Hidden widths proportional to the input dimension, never below 16 units.
std::vector<std::size_t> scaled_hidden_layers(std::size_t input_dim);

// Dense parameters; layer l maps activations through weights[l] * a + biases[l].
struct FnnParams {
    std::vector<Eigen::MatrixXd> weights;  // rows = fan-out, cols = fan-in
    std::vector<Eigen::VectorXd> biases;

    std::size_t num_layers() const { return weights.size(); }
    FnnArchitecture architecture() const;
};

FnnParams init_fnn_params(const FnnArchitecture& arch, std::uint64_t seed);

// Inputs are column-per-sample matrices of standardized features.
Eigen::MatrixXd fnn_probabilities(const FnnParams& params, const Eigen::MatrixXd& inputs);
std::vector<std::uint32_t> fnn_predict_labels(const FnnParams& params,
                                              const Eigen::MatrixXd& inputs);
double fnn_loss(const FnnParams& params, const Eigen::MatrixXd& inputs,
                const std::vector<std::uint32_t>& labels);
double fnn_loss_and_gradients(const FnnParams& params, const Eigen::MatrixXd& inputs,
                              const std::vector<std::uint32_t>& labels, FnnParams& gradients);

struct FnnTrainLogEntry {
    std::uint32_t epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double validation_gm = 0.0;
    double learning_rate = 0.0;
};

struct FnnTrainOptions {
    std::uint32_t max_epochs = 200;
    std::size_t batch_size = 1024;
    double learning_rate = 1e-3;
    double lr_decay = 0.5;
    double min_learning_rate = 1e-5;
    std::uint32_t plateau_patience = 20;
    double min_delta = 1e-4;
    double validation_ratio = 0.35;
    std::uint64_t seed = 1;
    std::function<void(const FnnTrainLogEntry&)> on_epoch;
};

struct FNNDiscriminator {
    SampleGrid grid;
    std::uint16_t num_qubits = 0;
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;
    FnnParams params;
    std::vector<FnnTrainLogEntry> history;  // in-memory only, not serialized
};

// Trains on raw interleaved I/Q samples against the full joint configuration.
FNNDiscriminator train_fnn(const ShotDataset& train, const FnnTrainOptions& options = {});

std::uint32_t predict_fnn(const FNNDiscriminator& model, const IQTrace& trace);
std::vector<std::uint32_t> predict_fnn_batch(const FNNDiscriminator& model,
                                             const ShotDataset& ds);

void save_fnn(const FNNDiscriminator& model, const std::string& path);
FNNDiscriminator load_fnn(const std::string& path);

}  // namespace qrd
