#include "qrd/fnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "qrd/metrics.hpp"
#include "qrd/model_io.hpp"
#include "qrd/rng.hpp"

namespace qrd {

double selu(double z) {
    return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z);
}

double selu_derivative(double z) {
    return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
}

std::vector<std::size_t> scaled_hidden_layers(std::size_t input_dim) {
    if (input_dim == 0) throw argument_error("input dimension must be positive");
    std::vector<std::size_t> widths;
    for (double base : {1000.0, 500.0, 250.0}) {
        const auto w = static_cast<std::size_t>(
            std::llround(base * static_cast<double>(input_dim) / 1000.0));
        widths.push_back(std::max<std::size_t>(w, 16));
    }
    return widths;
}

FnnArchitecture FnnParams::architecture() const {
    FnnArchitecture arch;
    if (weights.empty()) return arch;
    arch.input_dim = static_cast<std::size_t>(weights.front().cols());
    for (std::size_t l = 0; l + 1 < weights.size(); ++l)
        arch.hidden.push_back(static_cast<std::size_t>(weights[l].rows()));
    arch.output_dim = static_cast<std::size_t>(weights.back().rows());
    return arch;
}

FnnParams init_fnn_params(const FnnArchitecture& arch, std::uint64_t seed) {
    if (arch.input_dim == 0 || arch.output_dim == 0)
        throw argument_error("network needs nonzero input and output dimensions");
    std::vector<std::size_t> dims;
    dims.push_back(arch.input_dim);
    for (std::size_t h : arch.hidden) {
        if (h == 0) throw argument_error("hidden layer width must be positive");
        dims.push_back(h);
    }
    dims.push_back(arch.output_dim);

    FnnParams params;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = dims[l];
        const std::size_t fan_out = dims[l + 1];
        Rng rng = Rng::substream(seed, l);
        const double sd = std::sqrt(1.0 / static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = sd * rng.next_gaussian();
        params.weights.push_back(std::move(w));
        params.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out)));
    }
    return params;
}

namespace {

void check_inputs(const FnnParams& params, const Eigen::MatrixXd& inputs) {
    if (params.weights.empty()) throw argument_error("uninitialized network");
    if (inputs.rows() != params.weights.front().cols())
        throw argument_error("input dimension does not match the network");
}

// Forward pass keeping pre-activations for backprop. activations[0] is the
// input; logits land in zs.back() without a nonlinearity.
struct ForwardPass {
    std::vector<Eigen::MatrixXd> activations;
    std::vector<Eigen::MatrixXd> zs;
};

ForwardPass forward(const FnnParams& params, const Eigen::MatrixXd& inputs) {
    ForwardPass fp;
    fp.activations.push_back(inputs);
    const std::size_t L = params.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z = params.weights[l] * fp.activations.back();
        z.colwise() += params.biases[l];
        if (!z.allFinite())
            throw numeric_error("non-finite activation in layer " + std::to_string(l));
        if (l + 1 < L) {
            Eigen::MatrixXd a = z.unaryExpr([](double v) { return selu(v); });
            fp.zs.push_back(std::move(z));
            fp.activations.push_back(std::move(a));
        } else {
            fp.zs.push_back(std::move(z));
        }
    }
    return fp;
}

// Mean cross entropy via log-sum-exp; fills softmax probabilities in place.
double cross_entropy(const Eigen::MatrixXd& logits, const std::vector<std::uint32_t>& labels,
                     Eigen::MatrixXd* probabilities) {
    const auto n = logits.cols();
    if (static_cast<std::size_t>(n) != labels.size())
        throw argument_error("label count does not match the batch");
    double total = 0.0;
    if (probabilities) probabilities->resize(logits.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[i] >= static_cast<std::uint32_t>(logits.rows()))
            throw argument_error("label out of range for the output layer");
        const double m = logits.col(i).maxCoeff();
        const Eigen::ArrayXd e = (logits.col(i).array() - m).exp();
        const double sum = e.sum();
        total += std::log(sum) + m - logits(labels[i], i);
        if (probabilities) probabilities->col(i) = e / sum;
    }
    return total / static_cast<double>(n);
}

}  // namespace

Eigen::MatrixXd fnn_probabilities(const FnnParams& params, const Eigen::MatrixXd& inputs) {
    check_inputs(params, inputs);
    ForwardPass fp = forward(params, inputs);
    const Eigen::MatrixXd& logits = fp.zs.back();
    Eigen::MatrixXd probs(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
        const double m = logits.col(i).maxCoeff();
        const Eigen::ArrayXd e = (logits.col(i).array() - m).exp();
        probs.col(i) = e / e.sum();
    }
    return probs;
}

std::vector<std::uint32_t> fnn_predict_labels(const FnnParams& params,
                                              const Eigen::MatrixXd& inputs) {
    check_inputs(params, inputs);
    ForwardPass fp = forward(params, inputs);
    const Eigen::MatrixXd& logits = fp.zs.back();
    std::vector<std::uint32_t> out(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
        Eigen::Index best = 0;
        logits.col(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
    }
    return out;
}

double fnn_loss(const FnnParams& params, const Eigen::MatrixXd& inputs,
                const std::vector<std::uint32_t>& labels) {
    check_inputs(params, inputs);
    ForwardPass fp = forward(params, inputs);
    return cross_entropy(fp.zs.back(), labels, nullptr);
}

double fnn_loss_and_gradients(const FnnParams& params, const Eigen::MatrixXd& inputs,
                              const std::vector<std::uint32_t>& labels, FnnParams& gradients) {
    check_inputs(params, inputs);
    const std::size_t L = params.num_layers();
    ForwardPass fp = forward(params, inputs);

    Eigen::MatrixXd probs;
    const double loss = cross_entropy(fp.zs.back(), labels, &probs);

    gradients.weights.resize(L);
    gradients.biases.resize(L);

    const double inv_n = 1.0 / static_cast<double>(inputs.cols());
    Eigen::MatrixXd delta = probs;
    for (Eigen::Index i = 0; i < delta.cols(); ++i) delta(labels[i], i) -= 1.0;
    delta *= inv_n;

    for (std::size_t l = L; l-- > 0;) {
        gradients.weights[l].noalias() = delta * fp.activations[l].transpose();
        gradients.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd upstream = params.weights[l].transpose() * delta;
            delta = upstream.cwiseProduct(
                fp.zs[l - 1].unaryExpr([](double v) { return selu_derivative(v); }));
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    std::uint64_t step = 0;

    explicit AdamState(const FnnParams& params) {
        for (const auto& w : params.weights) {
            mw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
            vw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        }
        for (const auto& b : params.biases) {
            mb.push_back(Eigen::VectorXd::Zero(b.size()));
            vb.push_back(Eigen::VectorXd::Zero(b.size()));
        }
    }

    void update(FnnParams& params, const FnnParams& grads, double lr) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++step;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
        for (std::size_t l = 0; l < params.weights.size(); ++l) {
            mw[l] = b1 * mw[l] + (1.0 - b1) * grads.weights[l];
            vw[l] = b2 * vw[l] + (1.0 - b2) * grads.weights[l].cwiseProduct(grads.weights[l]);
            params.weights[l].array() -=
                lr * (mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + eps);
            mb[l] = b1 * mb[l] + (1.0 - b1) * grads.biases[l];
            vb[l] = b2 * vb[l] + (1.0 - b2) * grads.biases[l].cwiseProduct(grads.biases[l]);
            params.biases[l].array() -=
                lr * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + eps);
        }
    }
};

double validation_gm(const std::vector<std::uint32_t>& truth,
                     const std::vector<std::uint32_t>& predicted, std::uint16_t num_qubits) {
    ConfusionMatrix cm(num_qubits);
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
    return geometric_mean_fidelity(per_qubit_fidelities(cm));
}

}  // namespace

FNNDiscriminator train_fnn(const ShotDataset& train, const FnnTrainOptions& options) {
    train.validate();
    if (train.size() < 4) throw training_error("too few shots to train a network");
    if (!(options.validation_ratio > 0.0 && options.validation_ratio < 1.0))
        throw argument_error("validation ratio must lie in (0,1)");
    if (options.batch_size == 0) throw argument_error("batch size must be positive");
    const std::uint32_t classes = train.num_configurations();

    const std::size_t d = 2 * static_cast<std::size_t>(train.grid.num_samples);
    const std::size_t n = train.size();

    FNNDiscriminator model;
    model.grid = train.grid;
    model.num_qubits = train.num_qubits;
    model.feature_mean.assign(d, 0.0);
    model.feature_scale.assign(d, 1.0);

    // Standardization statistics come from the complete training input.
    Eigen::MatrixXd X(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& samples = train.traces[i].samples;
        for (std::size_t s = 0; s < samples.size(); ++s) {
            X(static_cast<Eigen::Index>(2 * s), static_cast<Eigen::Index>(i)) = samples[s].real();
            X(static_cast<Eigen::Index>(2 * s + 1), static_cast<Eigen::Index>(i)) =
                samples[s].imag();
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        const double mu = X.row(static_cast<Eigen::Index>(k)).mean();
        const double var =
            X.row(static_cast<Eigen::Index>(k)).array().square().mean() - mu * mu;
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        model.feature_mean[k] = mu;
        model.feature_scale[k] = sd;
        X.row(static_cast<Eigen::Index>(k)) =
            (X.row(static_cast<Eigen::Index>(k)).array() - mu) / sd;
    }

    // Deterministic stratified split by prepared configuration.
    std::map<std::uint32_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < n; ++i) by_label[train.labels[i].bits].push_back(i);
    std::vector<std::size_t> train_idx, val_idx;
    for (auto& [label, members] : by_label) {
        Rng rng = Rng::substream(stream_seed(options.seed, 4096), label);
        rng.shuffle(members);
        const auto val_count = static_cast<std::size_t>(std::floor(
            options.validation_ratio * static_cast<double>(members.size()) + 0.5));
        if (val_count == 0 || val_count == members.size())
            throw training_error("configuration " + std::to_string(label) +
                                 " cannot fill both training and validation splits");
        for (std::size_t k = 0; k < members.size(); ++k)
            (k < val_count ? val_idx : train_idx).push_back(members[k]);
    }
    if (by_label.size() != classes)
        throw training_error("training data must contain every prepared configuration");
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    auto gather = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& out,
                      std::vector<std::uint32_t>& labels) {
        out.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(idx.size()));
        labels.resize(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out.col(static_cast<Eigen::Index>(k)) = X.col(static_cast<Eigen::Index>(idx[k]));
            labels[k] = train.labels[idx[k]].bits;
        }
    };
    Eigen::MatrixXd Xtr, Xval;
    std::vector<std::uint32_t> ytr, yval;
    gather(train_idx, Xtr, ytr);
    gather(val_idx, Xval, yval);
    X.resize(0, 0);

    FnnArchitecture arch;
    arch.input_dim = d;
    arch.hidden = scaled_hidden_layers(d);
    arch.output_dim = classes;
    FnnParams params = init_fnn_params(arch, stream_seed(options.seed, 1));
    AdamState adam(params);
    FnnParams grads;

    const std::size_t n_train = train_idx.size();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(stream_seed(options.seed, 2));

    double lr = options.learning_rate;
    double best_val_loss = std::numeric_limits<double>::infinity();
    double best_gm = -1.0;
    FnnParams best_params = params;
    std::uint32_t stall = 0;

    Eigen::MatrixXd batch;
    std::vector<std::uint32_t> batch_labels;
    for (std::uint32_t epoch = 0; epoch < options.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n_train; start += options.batch_size) {
            const std::size_t count = std::min(options.batch_size, n_train - start);
            batch.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(count));
            batch_labels.resize(count);
            for (std::size_t k = 0; k < count; ++k) {
                batch.col(static_cast<Eigen::Index>(k)) =
                    Xtr.col(static_cast<Eigen::Index>(order[start + k]));
                batch_labels[k] = ytr[order[start + k]];
            }
            const double batch_loss = fnn_loss_and_gradients(params, batch, batch_labels, grads);
            if (!std::isfinite(batch_loss))
                throw numeric_error("training loss became non-finite at epoch " +
                                    std::to_string(epoch));
            loss_sum += batch_loss * static_cast<double>(count);
            adam.update(params, grads, lr);
        }
        const double train_loss = loss_sum / static_cast<double>(n_train);

        ForwardPass val_fp = forward(params, Xval);
        const double val_loss = cross_entropy(val_fp.zs.back(), yval, nullptr);
        if (!std::isfinite(val_loss))
            throw numeric_error("validation loss became non-finite at epoch " +
                                std::to_string(epoch));
        std::vector<std::uint32_t> val_pred(yval.size());
        for (Eigen::Index i = 0; i < val_fp.zs.back().cols(); ++i) {
            Eigen::Index best = 0;
            val_fp.zs.back().col(i).maxCoeff(&best);
            val_pred[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
        }
        const double gm = validation_gm(yval, val_pred, train.num_qubits);

        FnnTrainLogEntry entry;
        entry.epoch = epoch;
        entry.train_loss = train_loss;
        entry.validation_loss = val_loss;
        entry.validation_gm = gm;
        entry.learning_rate = lr;
        model.history.push_back(entry);
        if (options.on_epoch) options.on_epoch(entry);

        if (gm > best_gm) {
            best_gm = gm;
            best_params = params;
        }
        if (val_loss < best_val_loss - options.min_delta) {
            best_val_loss = val_loss;
            stall = 0;
        } else if (++stall >= options.plateau_patience) {
            if (lr > options.min_learning_rate) {
                lr = std::max(lr * options.lr_decay, options.min_learning_rate);
                stall = 0;
            } else {
                break;  // learning rate already at the floor and still stalled
            }
        }
    }

    model.params = std::move(best_params);
    return model;
}

// ---------------------------------------------------------------------------
// Prediction

namespace {

Eigen::VectorXd standardized_features(const FNNDiscriminator& model, const IQTrace& trace) {
    const std::size_t d = model.feature_mean.size();
    Eigen::VectorXd f(static_cast<Eigen::Index>(d));
    for (std::size_t s = 0; s < trace.samples.size(); ++s) {
        f(static_cast<Eigen::Index>(2 * s)) =
            (trace.samples[s].real() - model.feature_mean[2 * s]) / model.feature_scale[2 * s];
        f(static_cast<Eigen::Index>(2 * s + 1)) =
            (trace.samples[s].imag() - model.feature_mean[2 * s + 1]) /
            model.feature_scale[2 * s + 1];
    }
    return f;
}

}  // namespace

std::uint32_t predict_fnn(const FNNDiscriminator& model, const IQTrace& trace) {
    if (!(trace.grid == model.grid))
        throw argument_error("trace grid does not match the trained model");
    const Eigen::VectorXd f = standardized_features(model, trace);
    return fnn_predict_labels(model.params, f)[0];
}

std::vector<std::uint32_t> predict_fnn_batch(const FNNDiscriminator& model,
                                             const ShotDataset& ds) {
    if (!(ds.grid == model.grid))
        throw argument_error("dataset grid does not match the trained model");
    const std::size_t d = model.feature_mean.size();
    const std::size_t n = ds.size();
    std::vector<std::uint32_t> out;
    out.reserve(n);
    // Chunked forward passes keep peak memory modest on large test sets.
    constexpr std::size_t kChunk = 4096;
    Eigen::MatrixXd block;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t count = std::min(kChunk, n - start);
        block.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(count));
        for (std::size_t k = 0; k < count; ++k)
            block.col(static_cast<Eigen::Index>(k)) =
                standardized_features(model, ds.traces[start + k]);
        const auto labels = fnn_predict_labels(model.params, block);
        out.insert(out.end(), labels.begin(), labels.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

void save_fnn(const FNNDiscriminator& model, const std::string& path) {
    ModelBlob blob;
    blob.set("model", std::string("fnn"));
    blob.set("num_qubits", static_cast<std::uint64_t>(model.num_qubits));
    blob.set("num_samples", static_cast<std::uint64_t>(model.grid.num_samples));
    blob.set("sample_period_ns", model.grid.sample_period_ns);
    blob.set("num_layers", static_cast<std::uint64_t>(model.params.num_layers()));
    for (std::size_t l = 0; l < model.params.num_layers(); ++l) {
        const std::string p = "layer." + std::to_string(l) + ".";
        blob.set(p + "rows", static_cast<std::uint64_t>(model.params.weights[l].rows()));
        blob.set(p + "cols", static_cast<std::uint64_t>(model.params.weights[l].cols()));
    }
    blob.payload.insert(blob.payload.end(), model.feature_mean.begin(), model.feature_mean.end());
    blob.payload.insert(blob.payload.end(), model.feature_scale.begin(),
                        model.feature_scale.end());
    for (std::size_t l = 0; l < model.params.num_layers(); ++l) {
        const auto& w = model.params.weights[l];
        blob.payload.insert(blob.payload.end(), w.data(), w.data() + w.size());
        const auto& b = model.params.biases[l];
        blob.payload.insert(blob.payload.end(), b.data(), b.data() + b.size());
    }
    write_model_file(blob, path);
}

FNNDiscriminator load_fnn(const std::string& path) {
    ModelBlob blob = read_model_file(path);
    if (blob.get("model") != "fnn") throw format_error("model file is not a neural network");
    FNNDiscriminator model;
    model.num_qubits = static_cast<std::uint16_t>(blob.get_u64("num_qubits"));
    model.grid.num_samples = static_cast<std::uint32_t>(blob.get_u64("num_samples"));
    model.grid.sample_period_ns = blob.get_double("sample_period_ns");
    const std::uint64_t L = blob.get_u64("num_layers");

    const std::size_t d = 2 * static_cast<std::size_t>(model.grid.num_samples);
    std::size_t pos = 0;
    const auto take = [&](std::size_t count) {
        if (pos + count > blob.payload.size())
            throw corruption_error("model payload too short");
        const std::size_t at = pos;
        pos += count;
        return at;
    };
    std::size_t at = take(d);
    model.feature_mean.assign(blob.payload.begin() + at, blob.payload.begin() + at + d);
    at = take(d);
    model.feature_scale.assign(blob.payload.begin() + at, blob.payload.begin() + at + d);

    std::size_t expected_in = d;
    for (std::uint64_t l = 0; l < L; ++l) {
        const std::string p = "layer." + std::to_string(l) + ".";
        const auto rows = static_cast<Eigen::Index>(blob.get_u64(p + "rows"));
        const auto cols = static_cast<Eigen::Index>(blob.get_u64(p + "cols"));
        if (static_cast<std::size_t>(cols) != expected_in)
            throw corruption_error("layer " + std::to_string(l) + " shape is inconsistent");
        expected_in = static_cast<std::size_t>(rows);
        Eigen::MatrixXd w(rows, cols);
        at = take(static_cast<std::size_t>(w.size()));
        std::copy_n(blob.payload.begin() + at, w.size(), w.data());
        Eigen::VectorXd b(rows);
        at = take(static_cast<std::size_t>(rows));
        std::copy_n(blob.payload.begin() + at, rows, b.data());
        model.params.weights.push_back(std::move(w));
        model.params.biases.push_back(std::move(b));
    }
    if (pos != blob.payload.size()) throw corruption_error("model payload has trailing values");
    return model;
}

}  // namespace qrd
