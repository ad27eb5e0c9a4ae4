#pragma once

#include "qrd/core.hpp"

#include <optional>
#include <vector>

namespace qrd {

// Rows: prepared configuration, columns: assigned configuration.
class ConfusionMatrix {
  public:
    ConfusionMatrix(std::uint16_t num_qubits);
    static ConfusionMatrix from_results(const std::vector<PreparedLabel>& prepared,
                                        const std::vector<std::uint32_t>& assigned);

    void add(std::uint32_t prepared, std::uint32_t assigned, std::uint64_t count = 1);
    std::uint16_t num_qubits() const { return num_qubits_; }
    std::uint32_t dim() const { return static_cast<std::uint32_t>(row_totals_.size()); }
    std::uint64_t count(std::uint32_t prepared, std::uint32_t assigned) const;
    std::uint64_t row_total(std::uint32_t prepared) const;
    // P(assigned | prepared); throws degenerate_error on an unobserved row.
    double probability(std::uint32_t prepared, std::uint32_t assigned) const;
    std::vector<std::vector<double>> probabilities() const;

  private:
    std::uint16_t num_qubits_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> row_totals_;
};

// Per-qubit assignment fidelity 1 - [P(0_i|pi_i) + P(1_i|empty_i)]/2 where the
// conditionals weight every prepared configuration equally.
double assignment_fidelity(const ConfusionMatrix& cm, std::uint16_t qubit);
std::vector<double> per_qubit_fidelities(const ConfusionMatrix& cm);

double geometric_mean_fidelity(const std::vector<double>& fidelities);

// F^CF_ij = < 1 - [P(1_i|empty_j) + P(0_i|pi_j)] > averaged uniformly over the
// spectator configurations of all qubits other than j. Diagonal equals 2F_i-1.
std::vector<std::vector<double>> cross_fidelity_matrix(const ConfusionMatrix& cm);

// Mean |F^CF_ij| over ordered pairs i != j grouped by |i-j| = 1..N-1.
std::vector<double> mean_abs_cross_fidelity_by_offset(const std::vector<std::vector<double>>& cf);

// F_N = 1 - ||C - I||_F / sqrt(2^(N+1)) on the row-normalized matrix.
double frobenius_readout_fidelity(const std::vector<std::vector<double>>& probabilities,
                                  std::uint16_t num_qubits);
double frobenius_readout_fidelity(const ConfusionMatrix& cm);

struct HammingErrorDistribution {
    bool has_errors = false;
    std::uint64_t total_errors = 0;
    double error_fraction = 0.0;      // erroneous shots / all shots
    std::vector<double> probability;  // P(weight | any error); index = weight, [0] unused
};
HammingErrorDistribution hamming_error_distribution(const std::vector<PreparedLabel>& prepared,
                                                    const std::vector<std::uint32_t>& assigned);

struct FidelityReport {
    std::vector<double> per_qubit;
    double geometric_mean = 0.0;
    std::vector<std::vector<double>> cross_fidelity;
    std::vector<double> mean_abs_cf_by_offset;
    double frobenius = 0.0;
    HammingErrorDistribution hamming;
};
FidelityReport build_fidelity_report(const std::vector<PreparedLabel>& prepared,
                                     const std::vector<std::uint32_t>& assigned);

// Preparation-error bookkeeping for one qubit's projected histograms.
struct PrepStats {
    double p1_given_ground = 0.0;   // thermal population read as excited
    double p2_given_ground = 0.0;   // leaked population in ground preparations
    double p0_given_pi = 0.0;       // decay/failed pulse read as ground
    double p2_given_pi = 0.0;       // leaked population in excited preparations
    double f_pi = 1.0;              // known pulse fidelity (not fittable from 1D data)
    double f_label = 0.0;           // 1 - (p1|0 + p2|0 + p0|pi)/2
    double f_prep = 0.0;            // (1 + (1 - 2 p1|0) f_pi)/2
    double s0_mean = 0.0;
    double s1_mean = 0.0;
    double projected_std = 0.0;
    double fisher_r = 0.0;
    double f_ach = 0.0;
    double f_mf_bar = 0.0;          // f_label * f_ach
};

// Pure arithmetic from known probabilities.
PrepStats derive_prep_stats(double p1_given_ground, double p2_given_ground, double p0_given_pi,
                            double p2_given_pi, double f_pi, double fisher_r);

// Mixture fits of the two projected histograms: equal-variance Gaussians,
// up to 2 components for ground and 3 for excited preparations.
PrepStats prep_stats_from_histograms(const std::vector<double>& ground_projections,
                                     const std::vector<double>& excited_projections,
                                     std::optional<double> known_f_pi = std::nullopt,
                                     std::uint64_t seed = 17);

}  // namespace qrd
