#include <doctest.h>

#include "qrd/csv.hpp"
#include "qrd/dataset_io.hpp"
#include "qrd/harness.hpp"
#include "qrd/model_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace qrd;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("qrd_harness_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Small but honest system: enough separation that the filter is near perfect
// and prep statistics have clean histograms.
SimConfig small_sim_config(std::uint16_t num_qubits, double target_fisher) {
    SimConfig cfg;
    cfg.grid = SampleGrid{4.0, 16};
    cfg.seed = 33;
    cfg.qubits.resize(num_qubits);
    cfg.resonators.resize(num_qubits);
    for (std::uint16_t q = 0; q < num_qubits; ++q) {
        cfg.qubits[q] = QubitSimParams{9.0 + 2.0 * q, 0.01, 0.99, 0.0};
        cfg.resonators[q] = ResonatorSimParams{-21.0 + 42.0 * q, 0.5, 40.0, 1.0};
    }
    cfg.crosstalk = CrosstalkModel::zero(num_qubits);
    cfg.noise_sigma = calibrate_noise_for_fisher(cfg, 0, target_fisher);
    cfg.validate();
    return cfg;
}

TrainOptionsBundle quick_bundle(const SimConfig& cfg) {
    TrainOptionsBundle bundle;
    bundle.tones_mhz = benchmark_tones(cfg);
    bundle.sq.c_grid = {1.0};
    bundle.sq.epochs = 60;
    bundle.mq.epochs = 60;
    bundle.fnn.max_epochs = 10;
    bundle.fnn.batch_size = 32;
    return bundle;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("kind names round trip and reject unknowns") {
    CHECK(to_string(DiscriminatorKind::MatchedFilter) == "mf");
    CHECK(to_string(DiscriminatorKind::SQLSVM) == "sq-lsvm");
    CHECK(to_string(DiscriminatorKind::MQLSVM) == "mq-lsvm");
    CHECK(to_string(DiscriminatorKind::FNN) == "fnn");
    for (auto kind : {DiscriminatorKind::MatchedFilter, DiscriminatorKind::SQLSVM,
                      DiscriminatorKind::MQLSVM, DiscriminatorKind::FNN})
        CHECK(discriminator_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(discriminator_kind_from_string("perceptron"), argument_error);
    CHECK_THROWS_AS(discriminator_kind_from_string(""), argument_error);
}

TEST_CASE("numbers print at six significant digits and reparse") {
    CHECK(csv_number(1.0) == "1");
    CHECK(csv_number(-3.5) == "-3.5");
    CHECK(csv_number(0.123456789) == "0.123457");
    CHECK(csv_number(1234567.0) == "1.23457e+06");
    CHECK(csv_number(std::nan("")) == "nan");
    CHECK(csv_number(INFINITY) == "inf");
    CHECK(csv_number(-INFINITY) == "-inf");

    CHECK(csv_parse_number("1") == 1.0);
    CHECK(csv_parse_number("-3.5") == -3.5);
    CHECK(csv_parse_number("1.23457e+06") == 1234570.0);
    CHECK(std::isnan(csv_parse_number("nan")));
    CHECK(std::isinf(csv_parse_number("inf")));
    CHECK(csv_parse_number("-inf") < 0);

    // printing a reparsed value reproduces the text
    for (double v : {0.123456789, 1234567.0, -0.000123456789, 42.0}) {
        const std::string text = csv_number(v);
        CHECK(csv_number(csv_parse_number(text)) == text);
    }

    CHECK_THROWS_AS(csv_parse_number("abc"), format_error);
    CHECK_THROWS_AS(csv_parse_number("12x"), format_error);
    CHECK_THROWS_AS(csv_parse_number(""), format_error);
}

TEST_CASE("csv tables survive quoting round trips") {
    TempDir tmp;
    CsvTable table;
    table.header = {"name", "note"};
    table.rows = {{"plain", "nothing special"},
                  {"comma", "a,b,c"},
                  {"quote", "say \"hi\""},
                  {"both", "x,\"y\",z"},
                  {"empty", ""}};
    const std::string path = tmp.file("t.csv");
    write_csv(table, path);
    const CsvTable back = read_csv(path);
    CHECK(back.header == table.header);
    CHECK(back.rows == table.rows);

    CsvTable ragged = table;
    ragged.rows.push_back({"only one"});
    CHECK_THROWS_AS(write_csv(ragged, path), argument_error);
    CHECK_THROWS_AS(write_csv(table, tmp.file("no/such/dir.csv")), io_error);
    CHECK_THROWS_AS(read_csv(tmp.file("missing.csv")), io_error);

    {
        std::ofstream out(tmp.file("crlf.csv"));
        out << "a,b\r\n1,2\r\n";
    }
    const CsvTable crlf = read_csv(tmp.file("crlf.csv"));
    CHECK(crlf.header == std::vector<std::string>{"a", "b"});
    REQUIRE(crlf.rows.size() == 1);
    CHECK(crlf.rows[0] == std::vector<std::string>{"1", "2"});

    {
        std::ofstream out(tmp.file("ragged.csv"));
        out << "a,b\n1\n";
    }
    CHECK_THROWS_AS(read_csv(tmp.file("ragged.csv")), format_error);
    {
        std::ofstream out(tmp.file("unterminated.csv"));
        out << "a,b\n\"open,2\n";
    }
    CHECK_THROWS_AS(read_csv(tmp.file("unterminated.csv")), format_error);
    { std::ofstream out(tmp.file("empty.csv")); }
    CHECK_THROWS_AS(read_csv(tmp.file("empty.csv")), format_error);
}

TEST_CASE("benchmark system is a valid three-tone setup") {
    const SimConfig cfg = benchmark_sim_config();
    CHECK(cfg.num_qubits() == 3);
    CHECK(cfg.resonators.size() == 3);
    CHECK(cfg.noise_sigma > 0.0);
    CHECK_NOTHROW(cfg.validate());

    const auto tones = benchmark_tones(cfg);
    REQUIRE(tones.size() == 3);
    for (std::size_t q = 0; q < 3; ++q)
        CHECK(tones[q] == cfg.resonators[q].if_frequency_mhz);

    // the middle qubit relaxes much faster than its neighbours
    CHECK(cfg.qubits[1].t1_us < 0.25 * cfg.qubits[0].t1_us);
    CHECK(cfg.qubits[1].t1_us < 0.25 * cfg.qubits[2].t1_us);

    // crosstalk scales with the knob and vanishes with it
    const SimConfig quiet = benchmark_sim_config(0.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(quiet.crosstalk.phase_rad[i][j] == 0.0);
            if (i == j)
                CHECK(cfg.crosstalk.phase_rad[i][j] == 0.0);
            else
                CHECK(cfg.crosstalk.phase_rad[i][j] != 0.0);
        }
}

TEST_CASE("dataset manifests carry their demodulation tones") {
    const SimConfig cfg = small_sim_config(2, 25.0);
    const ShotDataset ds = generate_dataset(cfg, 4);
    const auto tones = tones_from_dataset(ds);
    REQUIRE(tones.size() == 2);
    CHECK(tones[0] == cfg.resonators[0].if_frequency_mhz);
    CHECK(tones[1] == cfg.resonators[1].if_frequency_mhz);

    ShotDataset anonymous = ds;
    anonymous.manifest = Manifest{};
    CHECK_THROWS_AS(tones_from_dataset(anonymous), argument_error);
}

TEST_CASE("the training dispatcher reaches every family") {
    const SimConfig cfg = small_sim_config(1, 30.0);
    const ShotDataset train = generate_dataset(cfg, 80);
    const ShotDataset test = generate_dataset(cfg, 40);
    const TrainOptionsBundle bundle = quick_bundle(cfg);

    for (auto kind : {DiscriminatorKind::MatchedFilter, DiscriminatorKind::SQLSVM,
                      DiscriminatorKind::MQLSVM, DiscriminatorKind::FNN}) {
        CAPTURE(to_string(kind));
        const TrainedDiscriminator model = train_discriminator(kind, train, bundle);
        CHECK(model.kind == kind);
        CHECK(model.mf.has_value() == (kind == DiscriminatorKind::MatchedFilter));
        CHECK(model.sq.has_value() == (kind == DiscriminatorKind::SQLSVM));
        CHECK(model.mq.has_value() == (kind == DiscriminatorKind::MQLSVM));
        CHECK(model.fnn.has_value() == (kind == DiscriminatorKind::FNN));

        const auto predictions = predict_all(model, test);
        CHECK(predictions.size() == test.size());
        const ConfusionMatrix cm = evaluate_confusion(model, test);
        CHECK(cm.dim() == 2);
        const FidelityReport report = evaluate_report(model, test);
        REQUIRE(report.per_qubit.size() == 1);
        CHECK(report.geometric_mean == report.per_qubit[0]);
        CHECK(report.geometric_mean > 0.9);  // separations this clean are easy
        CHECK(report.geometric_mean <= 1.0);
    }
}

TEST_CASE("models round trip through the common loader") {
    const SimConfig cfg = small_sim_config(1, 30.0);
    const ShotDataset train = generate_dataset(cfg, 60);
    const ShotDataset test = generate_dataset(cfg, 25);
    const TrainOptionsBundle bundle = quick_bundle(cfg);

    TempDir tmp;
    for (auto kind : {DiscriminatorKind::MatchedFilter, DiscriminatorKind::SQLSVM,
                      DiscriminatorKind::MQLSVM, DiscriminatorKind::FNN}) {
        CAPTURE(to_string(kind));
        const TrainedDiscriminator model = train_discriminator(kind, train, bundle);
        const std::string path = tmp.file(to_string(kind) + ".qrdm");
        save_discriminator(model, path);
        const TrainedDiscriminator back = load_discriminator(path);
        CHECK(back.kind == kind);
        CHECK(predict_all(back, test) == predict_all(model, test));
    }

    ModelBlob stranger;
    stranger.set("model", std::string("banana"));
    write_model_file(stranger, tmp.file("stranger.qrdm"));
    CHECK_THROWS_AS(load_discriminator(tmp.file("stranger.qrdm")), argument_error);
    CHECK_THROWS_AS(load_discriminator(tmp.file("missing.qrdm")), io_error);
}

TEST_CASE("time sweeps truncate and score") {
    const SimConfig cfg = small_sim_config(1, 8.0);
    const ShotDataset train = generate_dataset(cfg, 150);
    const ShotDataset test = generate_dataset(cfg, 150);
    TrainOptionsBundle bundle = quick_bundle(cfg);
    bundle.mf.window_step = 4;

    const std::vector<std::uint32_t> counts = {4, 16};
    const auto points =
        run_time_sweep(DiscriminatorKind::MatchedFilter, train, test, counts, bundle);
    REQUIRE(points.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(points[k].num_samples == counts[k]);
        CHECK(points[k].readout_ns == cfg.grid.sample_period_ns * counts[k]);
        REQUIRE(points[k].per_qubit.size() == 1);
        CHECK(points[k].geometric_mean == points[k].per_qubit[0]);
    }
    // integrating longer collects more signal
    CHECK(points[1].geometric_mean > points[0].geometric_mean);

    TempDir tmp;
    write_time_sweep_csv(points, tmp.file("time.csv"));
    const CsvTable table = read_csv(tmp.file("time.csv"));
    CHECK(table.header ==
          std::vector<std::string>{"num_samples", "readout_ns", "geometric_mean", "f_q0"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][0] == "4");
    CHECK(table.rows[1][0] == "16");
    CHECK(table.rows[1][2] == csv_number(points[1].geometric_mean));
}

TEST_CASE("training size sweeps subsample deterministically") {
    const SimConfig cfg = small_sim_config(1, 10.0);
    const ShotDataset train = generate_dataset(cfg, 80);
    const ShotDataset test = generate_dataset(cfg, 120);
    const TrainOptionsBundle bundle = quick_bundle(cfg);

    const std::vector<std::size_t> sizes = {20, 80};  // 80 consumes every shot
    const auto points =
        run_training_size_sweep(DiscriminatorKind::MatchedFilter, train, test, sizes, bundle);
    REQUIRE(points.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(points[k].shots_per_config == sizes[k]);
        CHECK(points[k].geometric_mean > 0.5);
        CHECK(points[k].geometric_mean <= 1.0);
        CHECK(points[k].joint_accuracy > 0.5);
        CHECK(points[k].joint_accuracy <= 1.0);
    }

    const auto again =
        run_training_size_sweep(DiscriminatorKind::MatchedFilter, train, test, sizes, bundle);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(again[k].geometric_mean == points[k].geometric_mean);
        CHECK(again[k].joint_accuracy == points[k].joint_accuracy);
    }

    TempDir tmp;
    write_training_size_sweep_csv(points, tmp.file("size.csv"));
    const CsvTable table = read_csv(tmp.file("size.csv"));
    CHECK(table.header ==
          std::vector<std::string>{"shots_per_config", "geometric_mean", "joint_accuracy"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][0] == "20");
}

TEST_CASE("subset sweeps restrict qubits and tones") {
    const SimConfig cfg = small_sim_config(2, 25.0);
    const ShotDataset train = generate_dataset(cfg, 60);
    const ShotDataset test = generate_dataset(cfg, 60);
    const TrainOptionsBundle bundle = quick_bundle(cfg);

    const std::vector<std::vector<std::uint16_t>> subsets = {{0}, {0, 1}};
    const auto points =
        run_subset_sweep(DiscriminatorKind::MatchedFilter, train, test, subsets, bundle);
    REQUIRE(points.size() == 2);
    CHECK(points[0].qubits == std::vector<std::uint16_t>{0});
    CHECK(points[1].qubits == std::vector<std::uint16_t>{0, 1});
    for (const auto& p : points) {
        CHECK(p.geometric_mean > 0.8);
        CHECK(p.geometric_mean <= 1.0);
        CHECK(p.frobenius > 0.8);
        CHECK(p.frobenius <= 1.0);
    }

    TrainOptionsBundle short_tones = bundle;
    short_tones.tones_mhz.resize(1);
    CHECK_THROWS_AS(
        run_subset_sweep(DiscriminatorKind::MatchedFilter, train, test, subsets, short_tones),
        argument_error);

    TempDir tmp;
    write_subset_sweep_csv(points, tmp.file("subset.csv"));
    const CsvTable table = read_csv(tmp.file("subset.csv"));
    CHECK(table.header ==
          std::vector<std::string>{"qubits", "geometric_mean", "frobenius_fidelity"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][0] == "0");
    CHECK(table.rows[1][0] == "0+1");
}

TEST_CASE("report tables format hand data exactly") {
    TempDir tmp;

    std::vector<PreparedLabel> prepared;
    std::vector<std::uint32_t> assigned;
    for (std::uint32_t c = 0; c < 4; ++c)
        for (std::size_t s = 0; s < 10; ++s) {
            prepared.push_back(PreparedLabel{c, 2});
            assigned.push_back(s == 0 ? (c ^ 1u) : c);  // one bit flip per row
        }
    const ConfusionMatrix cm = ConfusionMatrix::from_results(prepared, assigned);
    write_confusion_csv(cm, tmp.file("cm.csv"));
    const CsvTable cmt = read_csv(tmp.file("cm.csv"));
    CHECK(cmt.header == std::vector<std::string>{"prepared", "p_00", "p_01", "p_10", "p_11"});
    REQUIRE(cmt.rows.size() == 4);
    CHECK(cmt.rows[0][0] == "00");
    CHECK(cmt.rows[2][0] == "10");
    CHECK(cmt.rows[0][1] == csv_number(0.9));
    CHECK(cmt.rows[0][2] == csv_number(0.1));
    CHECK(cmt.rows[0][3] == csv_number(0.0));

    write_matrix_csv({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}}, tmp.file("m.csv"), "q");
    const CsvTable mt = read_csv(tmp.file("m.csv"));
    CHECK(mt.header == std::vector<std::string>{"row", "q0", "q1", "q2"});
    CHECK(mt.rows[1] == std::vector<std::string>{"1", "4", "5", "6"});

    const FidelityReport report = build_fidelity_report(prepared, assigned);
    write_per_qubit_csv(report, tmp.file("pq.csv"));
    const CsvTable pqt = read_csv(tmp.file("pq.csv"));
    CHECK(pqt.header == std::vector<std::string>{"qubit", "fidelity", "self_cross_fidelity"});
    REQUIRE(pqt.rows.size() == 2);
    CHECK(pqt.rows[0][1] == csv_number(report.per_qubit[0]));
    CHECK(pqt.rows[0][2] == csv_number(report.cross_fidelity[0][0]));

    write_offsets_csv(report, tmp.file("off.csv"));
    const CsvTable offt = read_csv(tmp.file("off.csv"));
    CHECK(offt.header == std::vector<std::string>{"offset", "mean_abs_cross_fidelity"});
    REQUIRE(offt.rows.size() == 1);
    CHECK(offt.rows[0][0] == "1");
    CHECK(offt.rows[0][1] == csv_number(report.mean_abs_cf_by_offset[0]));

    write_hamming_csv(report, tmp.file("ham.csv"));
    const CsvTable hamt = read_csv(tmp.file("ham.csv"));
    CHECK(hamt.header == std::vector<std::string>{"hamming_weight", "probability"});
    REQUIRE(hamt.rows.size() == 2);
    CHECK(hamt.rows[0][1] == csv_number(1.0));  // every error flips exactly one bit
    CHECK(hamt.rows[1][1] == csv_number(0.0));

    std::vector<FnnTrainLogEntry> history(2);
    history[0] = {0, 1.5, 1.6, 0.5, 1e-3};
    history[1] = {1, 1.0, 1.1, 0.75, 1e-3};
    write_training_history_csv(history, tmp.file("hist.csv"));
    const CsvTable ht = read_csv(tmp.file("hist.csv"));
    CHECK(ht.header == std::vector<std::string>{"epoch", "train_loss", "validation_loss",
                                                "validation_gm", "learning_rate"});
    CHECK(ht.rows[1] ==
          std::vector<std::string>{"1", "1", "1.1", "0.75", "0.001"});
}

TEST_CASE("comparison reports land on disk") {
    const SimConfig cfg = small_sim_config(1, 25.0);
    const ShotDataset train = generate_dataset(cfg, 80);
    const ShotDataset test = generate_dataset(cfg, 60);

    TempDir tmp;
    ReportRequest request;
    request.kinds = {DiscriminatorKind::MatchedFilter, DiscriminatorKind::FNN};
    request.output_dir = tmp.file("report");
    request.options = quick_bundle(cfg);
    run_report(train, test, request);

    for (const std::string tag : {"mf", "fnn"}) {
        for (const std::string suffix :
             {"_confusion.csv", "_per_qubit.csv", "_cross_fidelity.csv", "_offsets.csv",
              "_hamming.csv"}) {
            CAPTURE(tag + suffix);
            CHECK(std::filesystem::exists(tmp.file("report/" + tag + suffix)));
        }
    }
    CHECK(std::filesystem::exists(tmp.file("report/fnn_history.csv")));
    CHECK(std::filesystem::exists(tmp.file("report/fnn_minus_mf_cross_fidelity.csv")));
    CHECK(std::filesystem::exists(tmp.file("report/prep_stats.csv")));

    const CsvTable cm = read_csv(tmp.file("report/mf_confusion.csv"));
    CHECK(cm.header == std::vector<std::string>{"prepared", "p_0", "p_1"});
    REQUIRE(cm.rows.size() == 2);
    CHECK(csv_parse_number(cm.rows[0][1]) > 0.9);

    const CsvTable stats = read_csv(tmp.file("report/prep_stats.csv"));
    CHECK(stats.header.size() == 10);
    REQUIRE(stats.rows.size() == 1);
    CHECK(csv_parse_number(stats.rows[0][7]) > 5.0);  // fisher criterion of a clean qubit

    const CsvTable diff = read_csv(tmp.file("report/fnn_minus_mf_cross_fidelity.csv"));
    REQUIRE(diff.rows.size() == 1);
    CHECK(std::abs(csv_parse_number(diff.rows[0][1])) < 0.5);

    ReportRequest empty;
    empty.output_dir = tmp.file("empty_report");
    CHECK_THROWS_AS(run_report(train, test, empty), argument_error);
}

}  // TEST_SUITE
