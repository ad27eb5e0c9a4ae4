// Command line front end: simulate readout shots, train discriminators,
// evaluate fidelity metrics and run parameter sweeps.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "qrd/csv.hpp"
#include "qrd/dataset_io.hpp"
#include "qrd/harness.hpp"

namespace {

std::vector<double> parse_tone_list(const std::string& text) {
    std::vector<double> tones;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) tones.push_back(std::stod(item));
    return tones;
}

std::vector<double> resolve_tones(const qrd::ShotDataset& ds, const std::string& tones_arg) {
    if (!tones_arg.empty()) {
        auto tones = parse_tone_list(tones_arg);
        if (tones.size() != ds.num_qubits)
            throw qrd::argument_error("expected one tone per qubit");
        return tones;
    }
    return qrd::tones_from_dataset(ds);
}

void print_report(const qrd::FidelityReport& report, double joint_accuracy) {
    std::printf("joint accuracy           %.6f\n", joint_accuracy);
    std::printf("geometric mean fidelity  %.6f\n", report.geometric_mean);
    std::printf("frobenius fidelity       %.6f\n", report.frobenius);
    for (std::size_t q = 0; q < report.per_qubit.size(); ++q)
        std::printf("qubit %zu fidelity         %.6f\n", q, report.per_qubit[q]);
    for (std::size_t k = 0; k < report.mean_abs_cf_by_offset.size(); ++k)
        std::printf("mean |crossfid| offset %zu %.6f\n", k + 1, report.mean_abs_cf_by_offset[k]);
    std::printf("shots with any error     %.6f\n", report.hamming.error_fraction);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiplexed qubit readout: simulation, discriminators and metrics"};
    app.require_subcommand(1);

    // --- init-config ---------------------------------------------------
    auto* init = app.add_subcommand("init-config", "Write the benchmark simulator config");
    std::string init_out = "readout.ini";
    double init_scale = 5.0;
    std::uint64_t init_seed = 7;
    init->add_option("--out", init_out, "Output config path");
    init->add_option("--crosstalk-scale", init_scale, "Multiplier on the Lorentzian neighbor phase-pull profile");
    init->add_option("--seed", init_seed, "Simulation seed");
    init->callback([&] {
        qrd::write_sim_config_file(qrd::benchmark_sim_config(init_scale, init_seed), init_out);
        std::printf("wrote %s\n", init_out.c_str());
    });

    // --- simulate --------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Generate a labelled shot dataset");
    std::string sim_config, sim_out = "shots.qrdd";
    std::uint64_t sim_shots = 1000;
    unsigned sim_threads = 1;
    sim->add_option("--config", sim_config, "Simulator config (ini)")->required();
    sim->add_option("--shots-per-config", sim_shots, "Shots per prepared configuration");
    sim->add_option("--out", sim_out, "Output dataset path");
    sim->add_option("--threads", sim_threads, "Worker threads");
    sim->callback([&] {
        const qrd::SimConfig cfg = qrd::read_sim_config_file(sim_config);
        const qrd::ShotDataset ds = qrd::generate_dataset(cfg, sim_shots, sim_threads);
        qrd::write_dataset_file(ds, sim_out);
        std::printf("wrote %zu shots (%u configurations) to %s\n", ds.size(),
                    ds.num_configurations(), sim_out.c_str());
    });

    // --- split -----------------------------------------------------------
    auto* split = app.add_subcommand("split", "Split a dataset into train and test parts");
    std::string split_in, split_train = "train.qrdd", split_test = "test.qrdd";
    std::uint64_t split_count = 0, split_seed = 3;
    split->add_option("--dataset", split_in, "Input dataset")->required();
    split->add_option("--train-per-config", split_count, "Training shots per configuration")
        ->required();
    split->add_option("--train-out", split_train, "Training output path");
    split->add_option("--test-out", split_test, "Test output path");
    split->add_option("--seed", split_seed, "Shuffle seed");
    split->callback([&] {
        const qrd::ShotDataset ds = qrd::read_dataset_file(split_in);
        auto [train, test] = qrd::split_train_test(ds, split_count, split_seed);
        qrd::write_dataset_file(train, split_train);
        qrd::write_dataset_file(test, split_test);
        std::printf("train: %zu shots -> %s\ntest:  %zu shots -> %s\n", train.size(),
                    split_train.c_str(), test.size(), split_test.c_str());
    });

    // --- train -----------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train a discriminator on a dataset");
    std::string train_data, train_kind = "mf", train_out = "model.qrdm";
    std::string train_tones, train_spectators;
    std::uint64_t train_seed = 1;
    std::uint32_t train_epochs = 0, train_max_epochs = 0, train_window_step = 0;
    double train_c = 0.0;
    train_cmd->add_option("--dataset", train_data, "Training dataset")->required();
    train_cmd->add_option("--discriminator", train_kind, "mf | sq-lsvm | mq-lsvm | fnn");
    train_cmd->add_option("--out", train_out, "Output model path");
    train_cmd->add_option("--tones", train_tones, "Comma separated demod tones in MHz");
    train_cmd->add_option("--spectators", train_spectators,
                          "Admissible spectator configurations: ground | all");
    train_cmd->add_option("--seed", train_seed, "Training seed");
    train_cmd->add_option("--epochs", train_epochs, "SVM training epochs");
    train_cmd->add_option("--max-epochs", train_max_epochs, "Network epoch cap");
    train_cmd->add_option("--window-step", train_window_step,
                          "Matched filter window lattice step in samples");
    train_cmd->add_option("--regularization-c", train_c, "SVM regularization constant");
    train_cmd->callback([&] {
        const qrd::ShotDataset ds = qrd::read_dataset_file(train_data);
        const qrd::DiscriminatorKind kind = qrd::discriminator_kind_from_string(train_kind);
        qrd::TrainOptionsBundle bundle;
        if (kind != qrd::DiscriminatorKind::FNN) bundle.tones_mhz = resolve_tones(ds, train_tones);
        bundle.mf.window_step = train_window_step ? train_window_step : bundle.mf.window_step;
        if (!train_spectators.empty()) {
            const auto policy = qrd::spectator_policy_from_string(train_spectators);
            bundle.mf.spectator_policy = policy;
            bundle.sq.spectator_policy = policy;
        }
        bundle.sq.seed = train_seed;
        bundle.mq.seed = train_seed;
        bundle.fnn.seed = train_seed;
        if (train_epochs) {
            bundle.sq.epochs = train_epochs;
            bundle.mq.epochs = train_epochs;
        }
        if (train_max_epochs) bundle.fnn.max_epochs = train_max_epochs;
        if (train_c > 0.0) {
            bundle.mq.regularization_c = train_c;
            bundle.sq.c_grid = {train_c};
        }
        if (kind == qrd::DiscriminatorKind::FNN) {
            bundle.fnn.on_epoch = [](const qrd::FnnTrainLogEntry& e) {
                std::printf("epoch %3u  train %.4f  val %.4f  gm %.4f  lr %.2g\n", e.epoch,
                            e.train_loss, e.validation_loss, e.validation_gm, e.learning_rate);
            };
        }
        const qrd::TrainedDiscriminator model = qrd::train_discriminator(kind, ds, bundle);
        qrd::save_discriminator(model, train_out);
        std::printf("wrote %s\n", train_out.c_str());
    });

    // --- evaluate ----------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "Evaluate a trained model on a test dataset");
    std::string eval_data, eval_model, eval_confusion;
    eval->add_option("--dataset", eval_data, "Test dataset")->required();
    eval->add_option("--model", eval_model, "Trained model path")->required();
    eval->add_option("--confusion-out", eval_confusion, "Optional confusion matrix CSV");
    eval->callback([&] {
        const qrd::ShotDataset ds = qrd::read_dataset_file(eval_data);
        const qrd::TrainedDiscriminator model = qrd::load_discriminator(eval_model);
        const auto predictions = qrd::predict_all(model, ds);
        const auto cm = qrd::ConfusionMatrix::from_results(ds.labels, predictions);
        double joint = 0.0;
        for (std::uint32_t c = 0; c < cm.dim(); ++c) joint += cm.probability(c, c);
        print_report(qrd::build_fidelity_report(ds.labels, predictions), joint / cm.dim());
        if (!eval_confusion.empty()) qrd::write_confusion_csv(cm, eval_confusion);
    });

    // --- report ------------------------------------------------------------
    auto* rep = app.add_subcommand("report", "Train several families and write comparison CSVs");
    std::string rep_train, rep_test, rep_dir = "report", rep_kinds = "mf,fnn", rep_tones;
    std::uint64_t rep_seed = 1;
    rep->add_option("--train", rep_train, "Training dataset")->required();
    rep->add_option("--test", rep_test, "Test dataset")->required();
    rep->add_option("--out", rep_dir, "Output directory");
    rep->add_option("--discriminators", rep_kinds, "Comma separated family list");
    rep->add_option("--tones", rep_tones, "Comma separated demod tones in MHz");
    rep->add_option("--seed", rep_seed, "Training seed");
    rep->callback([&] {
        const qrd::ShotDataset train = qrd::read_dataset_file(rep_train);
        const qrd::ShotDataset test = qrd::read_dataset_file(rep_test);
        qrd::ReportRequest request;
        request.output_dir = rep_dir;
        std::istringstream ss(rep_kinds);
        std::string item;
        while (std::getline(ss, item, ','))
            request.kinds.push_back(qrd::discriminator_kind_from_string(item));
        bool needs_tones = false;
        for (auto k : request.kinds) needs_tones |= (k != qrd::DiscriminatorKind::FNN);
        if (needs_tones) request.options.tones_mhz = resolve_tones(train, rep_tones);
        request.options.sq.seed = rep_seed;
        request.options.mq.seed = rep_seed;
        request.options.fnn.seed = rep_seed;
        qrd::run_report(train, test, request);
        std::printf("wrote report files to %s\n", rep_dir.c_str());
    });

    // --- sweep ---------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "Fidelity sweeps over time, size or subsets");
    std::string sweep_mode, sweep_train, sweep_test, sweep_kind = "mf", sweep_out = "sweep.csv";
    std::string sweep_values, sweep_tones;
    std::uint64_t sweep_seed = 1;
    sweep->add_option("--mode", sweep_mode, "time | train-size | subset")->required();
    sweep->add_option("--train", sweep_train, "Training dataset")->required();
    sweep->add_option("--test", sweep_test, "Test dataset")->required();
    sweep->add_option("--discriminator", sweep_kind, "mf | sq-lsvm | mq-lsvm | fnn");
    sweep->add_option("--out", sweep_out, "Output CSV");
    sweep->add_option("--values", sweep_values,
                      "time: sample counts, train-size: shots per configuration, "
                      "subset: groups like 0;0,1;0,1,2");
    sweep->add_option("--tones", sweep_tones, "Comma separated demod tones in MHz");
    sweep->add_option("--seed", sweep_seed, "Training seed");
    sweep->callback([&] {
        const qrd::ShotDataset train = qrd::read_dataset_file(sweep_train);
        const qrd::ShotDataset test = qrd::read_dataset_file(sweep_test);
        const qrd::DiscriminatorKind kind = qrd::discriminator_kind_from_string(sweep_kind);
        qrd::TrainOptionsBundle bundle;
        if (kind != qrd::DiscriminatorKind::FNN)
            bundle.tones_mhz = resolve_tones(train, sweep_tones);
        else if (!sweep_tones.empty() || sweep_mode == "subset")
            bundle.tones_mhz = resolve_tones(train, sweep_tones);
        bundle.sq.seed = sweep_seed;
        bundle.mq.seed = sweep_seed;
        bundle.fnn.seed = sweep_seed;
        if (sweep_mode == "time") {
            std::vector<std::uint32_t> counts;
            std::istringstream ss(sweep_values);
            std::string item;
            while (std::getline(ss, item, ',')) counts.push_back(std::stoul(item));
            if (counts.empty()) throw qrd::argument_error("--values needs sample counts");
            const auto points = qrd::run_time_sweep(kind, train, test, counts, bundle);
            qrd::write_time_sweep_csv(points, sweep_out);
        } else if (sweep_mode == "train-size") {
            std::vector<std::size_t> sizes;
            std::istringstream ss(sweep_values);
            std::string item;
            while (std::getline(ss, item, ',')) sizes.push_back(std::stoul(item));
            if (sizes.empty()) throw qrd::argument_error("--values needs shot counts");
            const auto points = qrd::run_training_size_sweep(kind, train, test, sizes, bundle);
            qrd::write_training_size_sweep_csv(points, sweep_out);
        } else if (sweep_mode == "subset") {
            std::vector<std::vector<std::uint16_t>> subsets;
            std::istringstream groups(sweep_values);
            std::string group;
            while (std::getline(groups, group, ';')) {
                std::vector<std::uint16_t> qs;
                std::istringstream ss(group);
                std::string item;
                while (std::getline(ss, item, ','))
                    qs.push_back(static_cast<std::uint16_t>(std::stoul(item)));
                if (!qs.empty()) subsets.push_back(std::move(qs));
            }
            if (subsets.empty()) throw qrd::argument_error("--values needs qubit groups");
            const auto points = qrd::run_subset_sweep(kind, train, test, subsets, bundle);
            qrd::write_subset_sweep_csv(points, sweep_out);
        } else {
            throw qrd::argument_error("unknown sweep mode '" + sweep_mode + "'");
        }
        std::printf("wrote %s\n", sweep_out.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
