#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrd/discriminators.hpp"
#include "qrd/fnn.hpp"
#include "qrd/metrics.hpp"
#include "qrd/sim.hpp"

namespace qrd {

enum class DiscriminatorKind { MatchedFilter, SQLSVM, MQLSVM, FNN };

std::string to_string(DiscriminatorKind kind);
DiscriminatorKind discriminator_kind_from_string(const std::string& name);

// Bundle of per-family training options plus the demodulation tones the
// classical discriminators need.
struct TrainOptionsBundle {
    std::vector<double> tones_mhz;
    MFTrainOptions mf;
    SQLSVMTrainOptions sq;
    MQLSVMTrainOptions mq;
    FnnTrainOptions fnn;
};

struct TrainedDiscriminator {
    DiscriminatorKind kind = DiscriminatorKind::MatchedFilter;
    std::optional<MFDiscriminator> mf;
    std::optional<SQLSVMDiscriminator> sq;
    std::optional<MQLSVMDiscriminator> mq;
    std::optional<FNNDiscriminator> fnn;
};

TrainedDiscriminator train_discriminator(DiscriminatorKind kind, const ShotDataset& train,
                                         const TrainOptionsBundle& options);
std::vector<std::uint32_t> predict_all(const TrainedDiscriminator& model, const ShotDataset& ds);
ConfusionMatrix evaluate_confusion(const TrainedDiscriminator& model, const ShotDataset& test);
FidelityReport evaluate_report(const TrainedDiscriminator& model, const ShotDataset& test);

void save_discriminator(const TrainedDiscriminator& model, const std::string& path);
TrainedDiscriminator load_discriminator(const std::string& path);

// --- Sweeps ---------------------------------------------------------------

struct TimeSweepPoint {
    std::uint32_t num_samples = 0;
    double readout_ns = 0.0;
    double geometric_mean = 0.0;
    std::vector<double> per_qubit;
};

std::vector<TimeSweepPoint> run_time_sweep(DiscriminatorKind kind, const ShotDataset& train,
                                           const ShotDataset& test,
                                           const std::vector<std::uint32_t>& sample_counts,
                                           const TrainOptionsBundle& options);

struct TrainingSizeSweepPoint {
    std::size_t shots_per_config = 0;
    double geometric_mean = 0.0;
    double joint_accuracy = 0.0;  // mean over configurations of P(assigned == prepared)
};

std::vector<TrainingSizeSweepPoint> run_training_size_sweep(
    DiscriminatorKind kind, const ShotDataset& train, const ShotDataset& test,
    const std::vector<std::size_t>& shots_per_config, const TrainOptionsBundle& options,
    std::uint64_t subsample_seed = 99);

struct SubsetSweepPoint {
    std::vector<std::uint16_t> qubits;
    double geometric_mean = 0.0;
    double frobenius = 0.0;
};

// Evaluates growing qubit subsets; shots whose spectators sit outside the
// subset in the ground state are kept, everything else is dropped.
std::vector<SubsetSweepPoint> run_subset_sweep(DiscriminatorKind kind, const ShotDataset& train,
                                               const ShotDataset& test,
                                               const std::vector<std::vector<std::uint16_t>>& subsets,
                                               const TrainOptionsBundle& options);

// --- Report files ----------------------------------------------------------

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path);
void write_matrix_csv(const std::vector<std::vector<double>>& matrix, const std::string& path,
                      const std::string& cell_prefix = "c");
void write_per_qubit_csv(const FidelityReport& report, const std::string& path);
void write_offsets_csv(const FidelityReport& report, const std::string& path);
void write_hamming_csv(const FidelityReport& report, const std::string& path);
void write_prep_stats_csv(const std::vector<PrepStats>& stats, const std::string& path);
void write_training_history_csv(const std::vector<FnnTrainLogEntry>& history,
                                const std::string& path);
void write_time_sweep_csv(const std::vector<TimeSweepPoint>& points, const std::string& path);
void write_training_size_sweep_csv(const std::vector<TrainingSizeSweepPoint>& points,
                                   const std::string& path);
void write_subset_sweep_csv(const std::vector<SubsetSweepPoint>& points, const std::string& path);

// Full comparison report: per-family confusion and fidelity files plus a
// matrix of cross-fidelity differences between the network and the filter.
struct ReportRequest {
    std::vector<DiscriminatorKind> kinds;
    std::string output_dir;
    TrainOptionsBundle options;
};

void run_report(const ShotDataset& train, const ShotDataset& test, const ReportRequest& request);

// --- Benchmark system -------------------------------------------------------

// Three-tone desk-scale system used by the test suites and as the default
// CLI configuration: one well separated qubit, one decay-limited qubit, one
// ordinary qubit, with overlapping readout tones.
SimConfig benchmark_sim_config(double crosstalk_scale = 5.0, std::uint64_t seed = 7);
std::vector<double> benchmark_tones(const SimConfig& config);

// Demodulation tones recorded in a dataset manifest by the simulator.
std::vector<double> tones_from_dataset(const ShotDataset& ds);

}  // namespace qrd
