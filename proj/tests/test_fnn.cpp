#include <doctest.h>

#include "qrd/fnn.hpp"
#include "qrd/model_io.hpp"
#include "qrd/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

using namespace qrd;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("qrd_fnn_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Two-qubit dataset with one clean cluster per configuration.
ShotDataset four_cluster_dataset(std::size_t per_label, double sigma, std::uint64_t seed) {
    ShotDataset ds;
    ds.grid = SampleGrid{2.0, 3};
    ds.num_qubits = 2;
    Rng rng(seed);
    for (std::uint32_t label = 0; label < 4; ++label) {
        const double cx = (label & 1) ? -2.0 : 2.0;
        const double cy = (label & 2) ? -2.0 : 2.0;
        for (std::size_t s = 0; s < per_label; ++s) {
            IQTrace tr;
            tr.grid = ds.grid;
            tr.samples = {complex_t(cx + sigma * rng.next_gaussian(), sigma * rng.next_gaussian()),
                          complex_t(sigma * rng.next_gaussian(), cy + sigma * rng.next_gaussian()),
                          complex_t(cx * 0.5, cy * 0.5)};
            ds.traces.push_back(std::move(tr));
            ds.labels.push_back(PreparedLabel{label, 2});
        }
    }
    return ds;
}

bool params_equal(const FnnParams& a, const FnnParams& b) {
    if (a.weights.size() != b.weights.size()) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        if (a.weights[l] != b.weights[l]) return false;
        if (a.biases[l] != b.biases[l]) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("fnn") {

TEST_CASE("activation values and slopes") {
    const double lambda = kSeluLambda, alpha = kSeluAlpha;
    CHECK(selu(0.0) == 0.0);
    CHECK(selu(1.0) == doctest::Approx(lambda).epsilon(1e-15));
    CHECK(selu(2.5) == doctest::Approx(2.5 * lambda).epsilon(1e-15));
    CHECK(selu(-1.0) == doctest::Approx(lambda * alpha * std::expm1(-1.0)).epsilon(1e-15));
    CHECK(selu(-30.0) == doctest::Approx(-lambda * alpha).epsilon(1e-12));  // saturation

    CHECK(selu_derivative(0.5) == lambda);
    CHECK(selu_derivative(-1.0) == doctest::Approx(lambda * alpha * std::exp(-1.0)).epsilon(1e-15));
    // slope equals value plus the saturation level on the negative side
    CHECK(selu_derivative(-2.0) == doctest::Approx(selu(-2.0) + lambda * alpha).epsilon(1e-12));
}

TEST_CASE("hidden widths scale with the input and never collapse") {
    CHECK(scaled_hidden_layers(1000) == std::vector<std::size_t>{1000, 500, 250});
    CHECK(scaled_hidden_layers(500) == std::vector<std::size_t>{500, 250, 125});
    CHECK(scaled_hidden_layers(250) == std::vector<std::size_t>{250, 125, 63});
    CHECK(scaled_hidden_layers(30) == std::vector<std::size_t>{30, 16, 16});
    CHECK(scaled_hidden_layers(1) == std::vector<std::size_t>{16, 16, 16});
    CHECK_THROWS_AS(scaled_hidden_layers(0), argument_error);
}

TEST_CASE("initialization shapes, zero biases and fan-in scaling") {
    FnnArchitecture arch{4, {5, 3}, 4};
    FnnParams params = init_fnn_params(arch, 7);
    REQUIRE(params.num_layers() == 3);
    CHECK(params.weights[0].rows() == 5);
    CHECK(params.weights[0].cols() == 4);
    CHECK(params.weights[1].rows() == 3);
    CHECK(params.weights[1].cols() == 5);
    CHECK(params.weights[2].rows() == 4);
    CHECK(params.weights[2].cols() == 3);
    for (const auto& b : params.biases) CHECK(b.isZero(0.0));

    FnnArchitecture got = params.architecture();
    CHECK(got.input_dim == 4);
    CHECK(got.hidden == std::vector<std::size_t>{5, 3});
    CHECK(got.output_dim == 4);

    // moments of a wide layer match the 1/fan_in variance
    FnnParams big = init_fnn_params(FnnArchitecture{1000, {500}, 2}, 3);
    const auto& w = big.weights[0];
    const double mean = w.mean();
    const double var = (w.array() - mean).square().mean();
    CHECK(std::abs(mean) < 2e-4);
    CHECK(var == doctest::Approx(1.0 / 1000.0).epsilon(0.02));

    // deterministic in the seed
    CHECK(params_equal(init_fnn_params(arch, 7), params));
    CHECK_FALSE(params_equal(init_fnn_params(arch, 8), params));

    CHECK_THROWS_AS(init_fnn_params(FnnArchitecture{0, {5}, 2}, 1), argument_error);
    CHECK_THROWS_AS(init_fnn_params(FnnArchitecture{4, {0}, 2}, 1), argument_error);
    CHECK_THROWS_AS(init_fnn_params(FnnArchitecture{4, {5}, 0}, 1), argument_error);
}

TEST_CASE("probability columns are simplex points and labels are their argmax") {
    FnnParams params = init_fnn_params(FnnArchitecture{3, {6}, 5}, 11);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Random(3, 9);
    Eigen::MatrixXd p = fnn_probabilities(params, inputs);
    REQUIRE(p.rows() == 5);
    REQUIRE(p.cols() == 9);
    for (int c = 0; c < p.cols(); ++c) {
        CHECK(p.col(c).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.col(c).minCoeff() >= 0.0);
    }
    auto labels = fnn_predict_labels(params, inputs);
    REQUIRE(labels.size() == 9);
    for (int c = 0; c < p.cols(); ++c) {
        Eigen::Index best;
        p.col(c).maxCoeff(&best);
        CHECK(labels[c] == static_cast<std::uint32_t>(best));
    }

    Eigen::MatrixXd wrong = Eigen::MatrixXd::Random(4, 2);
    CHECK_THROWS_AS(fnn_probabilities(params, wrong), argument_error);
}

TEST_CASE("a silent final layer scores exactly the uniform-guess loss") {
    FnnParams params = init_fnn_params(FnnArchitecture{4, {5, 3}, 4}, 13);
    params.weights.back().setZero();
    params.biases.back().setZero();
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Random(4, 12);
    std::vector<std::uint32_t> labels(12);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 4;
    CHECK(fnn_loss(params, inputs, labels) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));

    std::vector<std::uint32_t> bad(12, 4);
    CHECK_THROWS_AS(fnn_loss(params, inputs, bad), argument_error);
    CHECK_THROWS_AS(fnn_loss(params, inputs, {0, 1}), argument_error);
}

TEST_CASE("analytic gradients match central differences") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        FnnArchitecture arch{4, {5, 3}, 4};
        FnnParams params = init_fnn_params(arch, seed);
        Rng rng(seed + 100);
        Eigen::MatrixXd inputs(4, 6);
        for (int i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.next_gaussian();
        std::vector<std::uint32_t> labels(6);
        for (auto& l : labels) l = static_cast<std::uint32_t>(rng.next_below(4));

        FnnParams grads;
        const double loss = fnn_loss_and_gradients(params, inputs, labels, grads);
        CHECK(loss == doctest::Approx(fnn_loss(params, inputs, labels)).epsilon(1e-12));

        const double h = 1e-5;
        auto check_entry = [&](double& slot, double analytic) {
            const double keep = slot;
            slot = keep + h;
            const double up = fnn_loss(params, inputs, labels);
            slot = keep - h;
            const double down = fnn_loss(params, inputs, labels);
            slot = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max(std::abs(numeric) + std::abs(analytic), 1e-8);
            CHECK(std::abs(numeric - analytic) / denom < 1e-4);
        };
        for (std::size_t l = 0; l < params.num_layers(); ++l) {
            for (int i = 0; i < params.weights[l].size(); ++i)
                check_entry(params.weights[l].data()[i], grads.weights[l].data()[i]);
            for (int i = 0; i < params.biases[l].size(); ++i)
                check_entry(params.biases[l].data()[i], grads.biases[l].data()[i]);
        }
    }
}

TEST_CASE("training separates clean clusters and logs its progress") {
    ShotDataset ds = four_cluster_dataset(30, 0.1, 51);
    FnnTrainOptions opt;
    opt.max_epochs = 150;
    opt.batch_size = 32;
    opt.learning_rate = 5e-3;
    opt.seed = 4;
    std::size_t callbacks = 0;
    opt.on_epoch = [&](const FnnTrainLogEntry&) { ++callbacks; };
    FNNDiscriminator model = train_fnn(ds, opt);

    CHECK(model.num_qubits == 2);
    CHECK(model.feature_mean.size() == 6);  // interleaved raw quadratures
    REQUIRE_FALSE(model.history.empty());
    CHECK(callbacks == model.history.size());
    CHECK(model.history.front().epoch == 0);
    CHECK(model.history.back().train_loss < model.history.front().train_loss);
    for (const auto& e : model.history) {
        CHECK(e.learning_rate > 0.0);
        CHECK(std::isfinite(e.validation_loss));
    }
    double best_gm = 0.0;
    for (const auto& e : model.history) best_gm = std::max(best_gm, e.validation_gm);
    CHECK(best_gm == doctest::Approx(1.0));

    // The returned weights are the best-validation snapshot, not the final
    // epoch, so demand a high floor rather than interpolation of every shot.
    auto predictions = predict_fnn_batch(model, ds);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (predictions[i] == ds.labels[i].bits) ++correct;
    CHECK(static_cast<double>(correct) >= 0.97 * static_cast<double>(ds.size()));
}

TEST_CASE("training is reproducible for a fixed seed") {
    ShotDataset ds = four_cluster_dataset(12, 0.2, 77);
    FnnTrainOptions opt;
    opt.max_epochs = 5;
    opt.batch_size = 16;
    opt.seed = 9;
    FNNDiscriminator a = train_fnn(ds, opt);
    FNNDiscriminator b = train_fnn(ds, opt);
    CHECK(params_equal(a.params, b.params));
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].validation_loss == b.history[i].validation_loss);
    }
    CHECK(a.feature_mean == b.feature_mean);
    CHECK(a.feature_scale == b.feature_scale);
}

TEST_CASE("batched prediction agrees with one-at-a-time prediction") {
    ShotDataset ds = four_cluster_dataset(10, 0.3, 91);
    FnnTrainOptions opt;
    opt.max_epochs = 4;
    opt.batch_size = 16;
    FNNDiscriminator model = train_fnn(ds, opt);
    auto batch = predict_fnn_batch(model, ds);
    REQUIRE(batch.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(batch[i] == predict_fnn(model, ds.traces[i]));

    IQTrace wrong;
    wrong.grid = SampleGrid{4.0, 3};
    wrong.samples = ds.traces[0].samples;
    CHECK_THROWS_AS(predict_fnn(model, wrong), argument_error);
}

TEST_CASE("network models round trip through disk exactly") {
    ShotDataset ds = four_cluster_dataset(10, 0.25, 101);
    FnnTrainOptions opt;
    opt.max_epochs = 3;
    opt.batch_size = 16;
    FNNDiscriminator model = train_fnn(ds, opt);

    TempDir tmp;
    save_fnn(model, tmp.file("net.qrdm"));
    FNNDiscriminator back = load_fnn(tmp.file("net.qrdm"));
    CHECK(back.grid == model.grid);
    CHECK(back.num_qubits == model.num_qubits);
    CHECK(back.feature_mean == model.feature_mean);
    CHECK(back.feature_scale == model.feature_scale);
    CHECK(params_equal(back.params, model.params));
    CHECK(back.history.empty());  // the training log stays with the session

    auto before = predict_fnn_batch(model, ds);
    auto after = predict_fnn_batch(back, ds);
    CHECK(before == after);
}

TEST_CASE("loading rejects tampered model files") {
    ShotDataset ds = four_cluster_dataset(8, 0.25, 31);
    FnnTrainOptions opt;
    opt.max_epochs = 2;
    opt.batch_size = 16;
    FNNDiscriminator model = train_fnn(ds, opt);

    TempDir tmp;
    const std::string path = tmp.file("net.qrdm");
    save_fnn(model, path);
    const ModelBlob original = read_model_file(path);

    auto tampered = [&](auto&& mutate) {
        ModelBlob blob = original;
        mutate(blob);
        const std::string p = tmp.file("bad.qrdm");
        write_model_file(blob, p);
        return p;
    };

    CHECK_THROWS_AS(load_fnn(tampered([](ModelBlob& b) { b.set("model", std::string("mf")); })),
                    format_error);
    CHECK_THROWS_AS(load_fnn(tampered([](ModelBlob& b) { b.payload.pop_back(); })),
                    corruption_error);
    CHECK_THROWS_AS(load_fnn(tampered([](ModelBlob& b) { b.payload.push_back(0.0); })),
                    corruption_error);
    CHECK_THROWS_AS(load_fnn(tampered([](ModelBlob& b) {
                        b.set("layer.0.cols", std::uint64_t{5});
                    })),
                    corruption_error);
    CHECK_THROWS_AS(load_fnn(tmp.file("nowhere.qrdm")), io_error);
}

TEST_CASE("training rejects unusable datasets and options") {
    ShotDataset tiny = four_cluster_dataset(1, 0.1, 3);
    FnnTrainOptions opt;
    opt.max_epochs = 2;
    CHECK_THROWS_AS(train_fnn(tiny, opt), training_error);  // cannot fill both splits

    ShotDataset ds = four_cluster_dataset(8, 0.1, 5);
    ShotDataset missing = ds;
    missing.traces.erase(missing.traces.begin(), missing.traces.begin() + 8);
    missing.labels.erase(missing.labels.begin(), missing.labels.begin() + 8);
    CHECK_THROWS_AS(train_fnn(missing, opt), training_error);

    opt.validation_ratio = 0.0;
    CHECK_THROWS_AS(train_fnn(ds, opt), argument_error);
    opt.validation_ratio = 0.35;
    opt.batch_size = 0;
    CHECK_THROWS_AS(train_fnn(ds, opt), argument_error);
}

}  // TEST_SUITE
