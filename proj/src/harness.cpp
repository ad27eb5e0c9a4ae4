#include "qrd/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "qrd/csv.hpp"
#include "qrd/dataset_io.hpp"
#include "qrd/model_io.hpp"

namespace qrd {

std::string to_string(DiscriminatorKind kind) {
    switch (kind) {
        case DiscriminatorKind::MatchedFilter: return "mf";
        case DiscriminatorKind::SQLSVM: return "sq-lsvm";
        case DiscriminatorKind::MQLSVM: return "mq-lsvm";
        case DiscriminatorKind::FNN: return "fnn";
    }
    throw argument_error("unknown discriminator kind");
}

DiscriminatorKind discriminator_kind_from_string(const std::string& name) {
    if (name == "mf") return DiscriminatorKind::MatchedFilter;
    if (name == "sq-lsvm") return DiscriminatorKind::SQLSVM;
    if (name == "mq-lsvm") return DiscriminatorKind::MQLSVM;
    if (name == "fnn") return DiscriminatorKind::FNN;
    throw argument_error("unknown discriminator '" + name +
                         "' (expected mf, sq-lsvm, mq-lsvm or fnn)");
}

TrainedDiscriminator train_discriminator(DiscriminatorKind kind, const ShotDataset& train,
                                         const TrainOptionsBundle& options) {
    TrainedDiscriminator model;
    model.kind = kind;
    switch (kind) {
        case DiscriminatorKind::MatchedFilter:
            model.mf = train_mf(train, options.tones_mhz, options.mf);
            break;
        case DiscriminatorKind::SQLSVM:
            model.sq = train_sq_lsvm(train, options.tones_mhz, options.sq);
            break;
        case DiscriminatorKind::MQLSVM:
            model.mq = train_mq_lsvm(train, options.tones_mhz, options.mq);
            break;
        case DiscriminatorKind::FNN:
            model.fnn = train_fnn(train, options.fnn);
            break;
    }
    return model;
}

std::vector<std::uint32_t> predict_all(const TrainedDiscriminator& model, const ShotDataset& ds) {
    std::vector<std::uint32_t> out;
    out.reserve(ds.size());
    switch (model.kind) {
        case DiscriminatorKind::MatchedFilter:
            for (const auto& tr : ds.traces) out.push_back(predict_mf(*model.mf, tr));
            break;
        case DiscriminatorKind::SQLSVM:
            for (const auto& tr : ds.traces) out.push_back(predict_sq_lsvm(*model.sq, tr));
            break;
        case DiscriminatorKind::MQLSVM:
            for (const auto& tr : ds.traces) out.push_back(predict_mq_lsvm(*model.mq, tr));
            break;
        case DiscriminatorKind::FNN:
            out = predict_fnn_batch(*model.fnn, ds);
            break;
    }
    return out;
}

ConfusionMatrix evaluate_confusion(const TrainedDiscriminator& model, const ShotDataset& test) {
    return ConfusionMatrix::from_results(test.labels, predict_all(model, test));
}

FidelityReport evaluate_report(const TrainedDiscriminator& model, const ShotDataset& test) {
    return build_fidelity_report(test.labels, predict_all(model, test));
}

void save_discriminator(const TrainedDiscriminator& model, const std::string& path) {
    switch (model.kind) {
        case DiscriminatorKind::MatchedFilter: save_mf(*model.mf, path); return;
        case DiscriminatorKind::SQLSVM: save_sq_lsvm(*model.sq, path); return;
        case DiscriminatorKind::MQLSVM: save_mq_lsvm(*model.mq, path); return;
        case DiscriminatorKind::FNN: save_fnn(*model.fnn, path); return;
    }
    throw argument_error("unknown discriminator kind");
}

TrainedDiscriminator load_discriminator(const std::string& path) {
    const ModelBlob blob = read_model_file(path);
    const std::string name = blob.get("model");
    TrainedDiscriminator model;
    model.kind = discriminator_kind_from_string(name);
    switch (model.kind) {
        case DiscriminatorKind::MatchedFilter: model.mf = load_mf(path); break;
        case DiscriminatorKind::SQLSVM: model.sq = load_sq_lsvm(path); break;
        case DiscriminatorKind::MQLSVM: model.mq = load_mq_lsvm(path); break;
        case DiscriminatorKind::FNN: model.fnn = load_fnn(path); break;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<TimeSweepPoint> run_time_sweep(DiscriminatorKind kind, const ShotDataset& train,
                                           const ShotDataset& test,
                                           const std::vector<std::uint32_t>& sample_counts,
                                           const TrainOptionsBundle& options) {
    std::vector<TimeSweepPoint> points;
    for (std::uint32_t m : sample_counts) {
        const ShotDataset tr = truncate_samples(train, m);
        const ShotDataset te = truncate_samples(test, m);
        const TrainedDiscriminator model = train_discriminator(kind, tr, options);
        const FidelityReport report = evaluate_report(model, te);
        TimeSweepPoint p;
        p.num_samples = m;
        p.readout_ns = train.grid.sample_period_ns * m;
        p.geometric_mean = report.geometric_mean;
        p.per_qubit = report.per_qubit;
        points.push_back(std::move(p));
    }
    return points;
}

std::vector<TrainingSizeSweepPoint> run_training_size_sweep(
    DiscriminatorKind kind, const ShotDataset& train, const ShotDataset& test,
    const std::vector<std::size_t>& shots_per_config, const TrainOptionsBundle& options,
    std::uint64_t subsample_seed) {
    std::vector<TrainingSizeSweepPoint> points;
    for (std::size_t count : shots_per_config) {
        const ShotDataset tr = subsample_per_label(train, count, subsample_seed);
        const TrainedDiscriminator model = train_discriminator(kind, tr, options);
        const ConfusionMatrix cm = evaluate_confusion(model, test);
        TrainingSizeSweepPoint p;
        p.shots_per_config = count;
        p.geometric_mean = geometric_mean_fidelity(per_qubit_fidelities(cm));
        double acc = 0.0;
        for (std::uint32_t c = 0; c < cm.dim(); ++c) acc += cm.probability(c, c);
        p.joint_accuracy = acc / cm.dim();
        points.push_back(p);
    }
    return points;
}

std::vector<SubsetSweepPoint> run_subset_sweep(DiscriminatorKind kind, const ShotDataset& train,
                                               const ShotDataset& test,
                                               const std::vector<std::vector<std::uint16_t>>& subsets,
                                               const TrainOptionsBundle& options) {
    std::vector<SubsetSweepPoint> points;
    for (const auto& qubits : subsets) {
        const ShotDataset tr = restrict_to_subset(train, qubits);
        const ShotDataset te = restrict_to_subset(test, qubits);
        TrainOptionsBundle sub = options;
        sub.tones_mhz.clear();
        for (std::uint16_t q : qubits) {
            if (q >= options.tones_mhz.size())
                throw argument_error("subset refers to a qubit without a tone");
            sub.tones_mhz.push_back(options.tones_mhz[q]);
        }
        const TrainedDiscriminator model = train_discriminator(kind, tr, sub);
        const ConfusionMatrix cm = evaluate_confusion(model, te);
        SubsetSweepPoint p;
        p.qubits = qubits;
        p.geometric_mean = geometric_mean_fidelity(per_qubit_fidelities(cm));
        p.frobenius = frobenius_readout_fidelity(cm);
        points.push_back(std::move(p));
    }
    return points;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

std::string label_bits(std::uint32_t bits, std::uint16_t num_qubits) {
    std::string s(num_qubits, '0');
    for (std::uint16_t q = 0; q < num_qubits; ++q)
        if (bits & (1u << q)) s[num_qubits - 1 - q] = '1';
    return s;
}

}  // namespace

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
    const auto probs = cm.probabilities();
    CsvTable table;
    table.header.push_back("prepared");
    for (std::uint32_t c = 0; c < probs.size(); ++c)
        table.header.push_back("p_" + label_bits(c, cm.num_qubits()));
    for (std::uint32_t r = 0; r < probs.size(); ++r) {
        std::vector<std::string> row;
        row.push_back(label_bits(r, cm.num_qubits()));
        for (double p : probs[r]) row.push_back(csv_number(p));
        table.rows.push_back(std::move(row));
    }
    write_csv(table, path);
}

void write_matrix_csv(const std::vector<std::vector<double>>& matrix, const std::string& path,
                      const std::string& cell_prefix) {
    CsvTable table;
    table.header.push_back("row");
    for (std::size_t c = 0; c < (matrix.empty() ? 0 : matrix.front().size()); ++c)
        table.header.push_back(cell_prefix + std::to_string(c));
    for (std::size_t r = 0; r < matrix.size(); ++r) {
        std::vector<std::string> row;
        row.push_back(std::to_string(r));
        for (double v : matrix[r]) row.push_back(csv_number(v));
        table.rows.push_back(std::move(row));
    }
    write_csv(table, path);
}

void write_per_qubit_csv(const FidelityReport& report, const std::string& path) {
    CsvTable table;
    table.header = {"qubit", "fidelity", "self_cross_fidelity"};
    for (std::size_t q = 0; q < report.per_qubit.size(); ++q) {
        table.rows.push_back({std::to_string(q), csv_number(report.per_qubit[q]),
                              csv_number(report.cross_fidelity[q][q])});
    }
    write_csv(table, path);
}

void write_offsets_csv(const FidelityReport& report, const std::string& path) {
    CsvTable table;
    table.header = {"offset", "mean_abs_cross_fidelity"};
    for (std::size_t k = 0; k < report.mean_abs_cf_by_offset.size(); ++k)
        table.rows.push_back(
            {std::to_string(k + 1), csv_number(report.mean_abs_cf_by_offset[k])});
    write_csv(table, path);
}

void write_hamming_csv(const FidelityReport& report, const std::string& path) {
    CsvTable table;
    table.header = {"hamming_weight", "probability"};
    const auto& dist = report.hamming;
    for (std::size_t w = 1; w < dist.probability.size(); ++w)
        table.rows.push_back({std::to_string(w), csv_number(dist.probability[w])});
    write_csv(table, path);
}

void write_prep_stats_csv(const std::vector<PrepStats>& stats, const std::string& path) {
    CsvTable table;
    table.header = {"qubit",   "p1_given_ground", "p2_given_ground", "p0_given_pi",
                    "f_label", "f_pi",            "f_prep",          "fisher_r",
                    "f_ach",   "f_mf_bar"};
    for (std::size_t q = 0; q < stats.size(); ++q) {
        const PrepStats& s = stats[q];
        table.rows.push_back({std::to_string(q), csv_number(s.p1_given_ground),
                              csv_number(s.p2_given_ground), csv_number(s.p0_given_pi),
                              csv_number(s.f_label), csv_number(s.f_pi), csv_number(s.f_prep),
                              csv_number(s.fisher_r), csv_number(s.f_ach),
                              csv_number(s.f_mf_bar)});
    }
    write_csv(table, path);
}

void write_training_history_csv(const std::vector<FnnTrainLogEntry>& history,
                                const std::string& path) {
    CsvTable table;
    table.header = {"epoch", "train_loss", "validation_loss", "validation_gm", "learning_rate"};
    for (const auto& e : history)
        table.rows.push_back({std::to_string(e.epoch), csv_number(e.train_loss),
                              csv_number(e.validation_loss), csv_number(e.validation_gm),
                              csv_number(e.learning_rate)});
    write_csv(table, path);
}

void write_time_sweep_csv(const std::vector<TimeSweepPoint>& points, const std::string& path) {
    CsvTable table;
    table.header = {"num_samples", "readout_ns", "geometric_mean"};
    const std::size_t nq = points.empty() ? 0 : points.front().per_qubit.size();
    for (std::size_t q = 0; q < nq; ++q) table.header.push_back("f_q" + std::to_string(q));
    for (const auto& p : points) {
        std::vector<std::string> row = {std::to_string(p.num_samples), csv_number(p.readout_ns),
                                        csv_number(p.geometric_mean)};
        for (double f : p.per_qubit) row.push_back(csv_number(f));
        table.rows.push_back(std::move(row));
    }
    write_csv(table, path);
}

void write_training_size_sweep_csv(const std::vector<TrainingSizeSweepPoint>& points,
                                   const std::string& path) {
    CsvTable table;
    table.header = {"shots_per_config", "geometric_mean", "joint_accuracy"};
    for (const auto& p : points)
        table.rows.push_back({std::to_string(p.shots_per_config), csv_number(p.geometric_mean),
                              csv_number(p.joint_accuracy)});
    write_csv(table, path);
}

void write_subset_sweep_csv(const std::vector<SubsetSweepPoint>& points, const std::string& path) {
    CsvTable table;
    table.header = {"qubits", "geometric_mean", "frobenius_fidelity"};
    for (const auto& p : points) {
        std::string qs;
        for (std::size_t k = 0; k < p.qubits.size(); ++k) {
            if (k) qs += "+";
            qs += std::to_string(p.qubits[k]);
        }
        table.rows.push_back({qs, csv_number(p.geometric_mean), csv_number(p.frobenius)});
    }
    write_csv(table, path);
}

void run_report(const ShotDataset& train, const ShotDataset& test, const ReportRequest& request) {
    if (request.kinds.empty()) throw argument_error("report needs at least one discriminator");
    std::filesystem::create_directories(request.output_dir);
    const auto file = [&](const std::string& name) {
        return (std::filesystem::path(request.output_dir) / name).string();
    };

    std::optional<FidelityReport> mf_report, fnn_report;
    std::optional<TrainedDiscriminator> mf_model;
    for (DiscriminatorKind kind : request.kinds) {
        const std::string tag = to_string(kind);
        TrainedDiscriminator model = train_discriminator(kind, train, request.options);
        const auto predictions = predict_all(model, test);
        const ConfusionMatrix cm = ConfusionMatrix::from_results(test.labels, predictions);
        const FidelityReport report = build_fidelity_report(test.labels, predictions);
        write_confusion_csv(cm, file(tag + "_confusion.csv"));
        write_per_qubit_csv(report, file(tag + "_per_qubit.csv"));
        write_matrix_csv(report.cross_fidelity, file(tag + "_cross_fidelity.csv"), "q");
        write_offsets_csv(report, file(tag + "_offsets.csv"));
        write_hamming_csv(report, file(tag + "_hamming.csv"));
        if (kind == DiscriminatorKind::FNN) {
            write_training_history_csv(model.fnn->history, file("fnn_history.csv"));
            fnn_report = report;
        }
        if (kind == DiscriminatorKind::MatchedFilter) {
            mf_report = report;
            mf_model = std::move(model);
        }
    }

    if (mf_report && fnn_report) {
        std::vector<std::vector<double>> diff = fnn_report->cross_fidelity;
        for (std::size_t i = 0; i < diff.size(); ++i)
            for (std::size_t j = 0; j < diff[i].size(); ++j)
                diff[i][j] -= mf_report->cross_fidelity[i][j];
        write_matrix_csv(diff, file("fnn_minus_mf_cross_fidelity.csv"), "q");
    }

    // Readout characterization from the filter projections on the test set.
    if (mf_model) {
        std::vector<PrepStats> stats;
        const MFDiscriminator& mf = *mf_model->mf;
        for (std::uint16_t q = 0; q < test.num_qubits; ++q) {
            std::vector<double> ground, excited;
            const auto idx = admissible_shots(test, q, SpectatorPolicy::GroundOnly);
            for (std::size_t i : idx) {
                const DemodulatedTrace d = demodulate(test.traces[i], mf.qubits[q].tone_mhz);
                const double s = apply_kernel(mf.qubits[q].kernel, d);
                (test.labels[i].bit(q) ? excited : ground).push_back(s);
            }
            stats.push_back(prep_stats_from_histograms(ground, excited));
        }
        write_prep_stats_csv(stats, file("prep_stats.csv"));
    }
}

// ---------------------------------------------------------------------------
// Benchmark system

SimConfig benchmark_sim_config(double crosstalk_scale, std::uint64_t seed) {
    SimConfig cfg;
    cfg.grid = SampleGrid{5.0, 80};
    cfg.seed = seed;
    cfg.crosstalk_scale = crosstalk_scale;

    cfg.qubits.resize(3);
    cfg.qubits[0] = QubitSimParams{40.8, 0.005, 0.99, 0.0};
    cfg.qubits[1] = QubitSimParams{3.2, 0.003, 0.98, 0.0};   // decay limited
    cfg.qubits[2] = QubitSimParams{21.4, 0.006, 0.99, 0.0};

    cfg.resonators.resize(3);
    cfg.resonators[0] = ResonatorSimParams{-65.0, 0.60, 13.48, 1.0};
    cfg.resonators[1] = ResonatorSimParams{-26.0, 0.35, 13.35, 1.0};
    cfg.resonators[2] = ResonatorSimParams{24.0, 0.55, 13.85, 1.0};

    // Noise floor pinned so the best qubit reaches a comfortable separation.
    cfg.crosstalk = CrosstalkModel::zero(3);
    cfg.noise_sigma = calibrate_noise_for_fisher(cfg, 0, 22.0);

    if (crosstalk_scale != 0.0) {
        cfg.crosstalk = CrosstalkModel::lorentzian(benchmark_tones(cfg),
                                                   cfg.mean_linewidth_mhz(), crosstalk_scale);
    }
    cfg.validate();
    return cfg;
}

std::vector<double> benchmark_tones(const SimConfig& config) {
    std::vector<double> tones;
    for (const auto& r : config.resonators) tones.push_back(r.if_frequency_mhz);
    return tones;
}

std::vector<double> tones_from_dataset(const ShotDataset& ds) {
    std::vector<double> tones;
    for (std::uint16_t q = 0; q < ds.num_qubits; ++q) {
        const std::string key = "sim.resonator." + std::to_string(q) + ".if_mhz";
        if (!ds.manifest.has(key))
            throw argument_error("dataset manifest lacks '" + key +
                                 "'; pass the demodulation tones explicitly");
        tones.push_back(ds.manifest.get_double(key));
    }
    return tones;
}

}  // namespace qrd
