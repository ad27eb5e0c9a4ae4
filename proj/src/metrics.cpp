#include "qrd/metrics.hpp"
#include "qrd/dsp.hpp"
#include "qrd/gaussian_mixture.hpp"

#include <bit>
#include <cmath>

namespace qrd {

ConfusionMatrix::ConfusionMatrix(std::uint16_t num_qubits) : num_qubits_(num_qubits) {
    const std::uint32_t d = checked_num_configurations(num_qubits);
    counts_.assign(static_cast<std::size_t>(d) * d, 0);
    row_totals_.assign(d, 0);
}

ConfusionMatrix ConfusionMatrix::from_results(const std::vector<PreparedLabel>& prepared,
                                              const std::vector<std::uint32_t>& assigned) {
    if (prepared.empty()) throw argument_error("cannot build a confusion matrix from zero shots");
    if (prepared.size() != assigned.size())
        throw argument_error("prepared/assigned length mismatch");
    ConfusionMatrix cm(prepared.front().num_qubits);
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        if (prepared[i].num_qubits != cm.num_qubits_)
            throw argument_error("inconsistent qubit count at shot " + std::to_string(i));
        cm.add(prepared[i].bits, assigned[i]);
    }
    return cm;
}

void ConfusionMatrix::add(std::uint32_t prepared, std::uint32_t assigned, std::uint64_t count) {
    const std::uint32_t d = dim();
    if (prepared >= d || assigned >= d)
        throw argument_error("configuration index out of range");
    counts_[static_cast<std::size_t>(prepared) * d + assigned] += count;
    row_totals_[prepared] += count;
}

std::uint64_t ConfusionMatrix::count(std::uint32_t prepared, std::uint32_t assigned) const {
    const std::uint32_t d = dim();
    if (prepared >= d || assigned >= d)
        throw argument_error("configuration index out of range");
    return counts_[static_cast<std::size_t>(prepared) * d + assigned];
}

std::uint64_t ConfusionMatrix::row_total(std::uint32_t prepared) const {
    if (prepared >= dim()) throw argument_error("configuration index out of range");
    return row_totals_[prepared];
}

double ConfusionMatrix::probability(std::uint32_t prepared, std::uint32_t assigned) const {
    const std::uint64_t total = row_total(prepared);
    if (total == 0)
        throw degenerate_error("prepared configuration " + std::to_string(prepared) +
                               " was never observed");
    return static_cast<double>(count(prepared, assigned)) / static_cast<double>(total);
}

std::vector<std::vector<double>> ConfusionMatrix::probabilities() const {
    const std::uint32_t d = dim();
    std::vector<std::vector<double>> p(d, std::vector<double>(d, 0.0));
    for (std::uint32_t r = 0; r < d; ++r)
        for (std::uint32_t c = 0; c < d; ++c) p[r][c] = probability(r, c);
    return p;
}

double assignment_fidelity(const ConfusionMatrix& cm, std::uint16_t qubit) {
    if (qubit >= cm.num_qubits()) throw argument_error("qubit index out of range");
    const std::uint32_t d = cm.dim();
    double p0_given_pi = 0.0, p1_given_ground = 0.0;
    std::uint32_t rows_pi = 0, rows_ground = 0;
    for (std::uint32_t row = 0; row < d; ++row) {
        double assigned_one = 0.0;
        for (std::uint32_t col = 0; col < d; ++col)
            if ((col >> qubit) & 1u) assigned_one += cm.probability(row, col);
        if ((row >> qubit) & 1u) {
            p0_given_pi += 1.0 - assigned_one;
            ++rows_pi;
        } else {
            p1_given_ground += assigned_one;
            ++rows_ground;
        }
    }
    p0_given_pi /= rows_pi;
    p1_given_ground /= rows_ground;
    return 1.0 - 0.5 * (p0_given_pi + p1_given_ground);
}

std::vector<double> per_qubit_fidelities(const ConfusionMatrix& cm) {
    std::vector<double> f(cm.num_qubits());
    for (std::uint16_t q = 0; q < cm.num_qubits(); ++q) f[q] = assignment_fidelity(cm, q);
    return f;
}

double geometric_mean_fidelity(const std::vector<double>& fidelities) {
    if (fidelities.empty()) throw argument_error("geometric mean of an empty set");
    double log_sum = 0.0;
    for (double f : fidelities) {
        if (f < 0.0) throw argument_error("fidelity below zero");
        if (f == 0.0) return 0.0;
        log_sum += std::log(f);
    }
    return std::exp(log_sum / static_cast<double>(fidelities.size()));
}

std::vector<std::vector<double>> cross_fidelity_matrix(const ConfusionMatrix& cm) {
    const std::uint16_t n = cm.num_qubits();
    const std::uint32_t d = cm.dim();
    std::vector<std::vector<double>> cf(n, std::vector<double>(n, 0.0));
    for (std::uint16_t i = 0; i < n; ++i) {
        for (std::uint16_t j = 0; j < n; ++j) {
            // Spectator configurations: all bits except j.
            double acc = 0.0;
            std::uint32_t spectators = 0;
            for (std::uint32_t row = 0; row < d; ++row) {
                if ((row >> j) & 1u) continue;  // enumerate rows with bit j = 0
                const std::uint32_t row_pi = row | (1u << j);
                double p1_given_ground = 0.0, p0_given_pi = 0.0;
                for (std::uint32_t col = 0; col < d; ++col) {
                    if ((col >> i) & 1u)
                        p1_given_ground += cm.probability(row, col);
                    else
                        p0_given_pi += cm.probability(row_pi, col);
                }
                acc += 1.0 - p1_given_ground - p0_given_pi;
                ++spectators;
            }
            cf[i][j] = acc / spectators;
        }
    }
    return cf;
}

std::vector<double> mean_abs_cross_fidelity_by_offset(const std::vector<std::vector<double>>& cf) {
    const std::size_t n = cf.size();
    for (const auto& row : cf)
        if (row.size() != n) throw argument_error("cross-fidelity matrix is not square");
    if (n < 2) return {};
    std::vector<double> mean(n - 1, 0.0);
    std::vector<std::uint32_t> count(n - 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const std::size_t offset = i > j ? i - j : j - i;
            mean[offset - 1] += std::abs(cf[i][j]);
            ++count[offset - 1];
        }
    for (std::size_t k = 0; k + 1 < n; ++k) mean[k] /= count[k];
    return mean;
}

double frobenius_readout_fidelity(const std::vector<std::vector<double>>& probabilities,
                                  std::uint16_t num_qubits) {
    const std::uint32_t d = checked_num_configurations(num_qubits);
    if (probabilities.size() != d) throw argument_error("probability matrix has wrong dimension");
    double acc = 0.0;
    for (std::uint32_t r = 0; r < d; ++r) {
        if (probabilities[r].size() != d) throw argument_error("probability matrix is not square");
        for (std::uint32_t c = 0; c < d; ++c) {
            const double target = r == c ? 1.0 : 0.0;
            const double diff = probabilities[r][c] - target;
            acc += diff * diff;
        }
    }
    return 1.0 - std::sqrt(acc) / std::sqrt(static_cast<double>(2ull * d));
}

double frobenius_readout_fidelity(const ConfusionMatrix& cm) {
    return frobenius_readout_fidelity(cm.probabilities(), cm.num_qubits());
}

HammingErrorDistribution hamming_error_distribution(const std::vector<PreparedLabel>& prepared,
                                                    const std::vector<std::uint32_t>& assigned) {
    if (prepared.empty()) throw argument_error("no shots given");
    if (prepared.size() != assigned.size()) throw argument_error("prepared/assigned length mismatch");
    const std::uint16_t n = prepared.front().num_qubits;
    HammingErrorDistribution dist;
    dist.probability.assign(n + 1, 0.0);
    std::vector<std::uint64_t> counts(n + 1, 0);
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        if (assigned[i] >> n) throw argument_error("assignment outside the label space");
        const std::uint32_t weight = std::popcount(prepared[i].bits ^ assigned[i]);
        if (weight == 0) continue;
        ++counts[weight];
        ++dist.total_errors;
    }
    dist.has_errors = dist.total_errors > 0;
    dist.error_fraction =
        static_cast<double>(dist.total_errors) / static_cast<double>(prepared.size());
    if (dist.has_errors)
        for (std::uint16_t w = 1; w <= n; ++w)
            dist.probability[w] =
                static_cast<double>(counts[w]) / static_cast<double>(dist.total_errors);
    return dist;
}

FidelityReport build_fidelity_report(const std::vector<PreparedLabel>& prepared,
                                     const std::vector<std::uint32_t>& assigned) {
    ConfusionMatrix cm = ConfusionMatrix::from_results(prepared, assigned);
    FidelityReport report;
    report.per_qubit = per_qubit_fidelities(cm);
    report.geometric_mean = geometric_mean_fidelity(report.per_qubit);
    report.cross_fidelity = cross_fidelity_matrix(cm);
    report.mean_abs_cf_by_offset = mean_abs_cross_fidelity_by_offset(report.cross_fidelity);
    report.frobenius = frobenius_readout_fidelity(cm);
    report.hamming = hamming_error_distribution(prepared, assigned);
    return report;
}

PrepStats derive_prep_stats(double p1_given_ground, double p2_given_ground, double p0_given_pi,
                            double p2_given_pi, double f_pi, double fisher_r) {
    for (double p : {p1_given_ground, p2_given_ground, p0_given_pi, p2_given_pi})
        if (!(p >= 0.0 && p <= 1.0)) throw argument_error("probability out of [0,1]");
    if (!(f_pi >= 0.0 && f_pi <= 1.0)) throw argument_error("pulse fidelity out of [0,1]");
    PrepStats st;
    st.p1_given_ground = p1_given_ground;
    st.p2_given_ground = p2_given_ground;
    st.p0_given_pi = p0_given_pi;
    st.p2_given_pi = p2_given_pi;
    st.f_pi = f_pi;
    st.f_label = 1.0 - 0.5 * (p1_given_ground + p2_given_ground + p0_given_pi);
    st.f_prep = 0.5 * (1.0 + (1.0 - 2.0 * p1_given_ground) * f_pi);
    st.fisher_r = fisher_r;
    st.f_ach = achievable_fidelity(fisher_r);
    st.f_mf_bar = st.f_label * st.f_ach;
    return st;
}

PrepStats prep_stats_from_histograms(const std::vector<double>& ground_projections,
                                     const std::vector<double>& excited_projections,
                                     std::optional<double> known_f_pi, std::uint64_t seed) {
    MixtureFitOptions opt;
    opt.seed = seed;
    GaussianMixture1D g = fit_best_mixture(ground_projections, 2, opt);
    GaussianMixture1D e = fit_best_mixture(excited_projections, 3, opt);

    // Components arrive sorted by descending mean (projection axis keeps the
    // ground class on the high side); zero-weight padding is ignored.
    auto live = [](const GaussianMixture1D& m) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < m.weights.size(); ++i)
            if (m.weights[i] > 1e-12) idx.push_back(i);
        return idx;
    };
    const auto g_live = live(g);
    const auto e_live = live(e);

    // Ground anchor: heaviest ground component.
    std::size_t g_main = g_live.front();
    for (std::size_t i : g_live)
        if (g.weights[i] > g.weights[g_main]) g_main = i;
    const double ground_center = g.means[g_main];

    PrepStats st;
    // Thermal population: every non-dominant ground component.
    for (std::size_t i : g_live)
        if (i != g_main) st.p1_given_ground += g.weights[i];
    st.p2_given_ground = 0.0;  // a 2-component ground fit cannot resolve leakage

    double excited_center;
    if (e_live.size() == 1) {
        excited_center = e.means[e_live[0]];
    } else {
        // Highest-mean component belongs to decayed shots if it sits closer
        // to the ground anchor than to the next component down the axis.
        const std::size_t top = e_live.front();
        const std::size_t next = e_live[1];
        const bool top_is_decay = std::abs(e.means[top] - ground_center) <
                                  std::abs(e.means[top] - e.means[next]);
        std::size_t excited_main;
        if (top_is_decay) {
            st.p0_given_pi = e.weights[top];
            excited_main = next;
            if (e_live.size() > 2) st.p2_given_pi = e.weights[e_live[2]];
        } else {
            excited_main = top;
            for (std::size_t k = 1; k < e_live.size(); ++k) st.p2_given_pi += e.weights[e_live[k]];
        }
        excited_center = e.means[excited_main];
    }

    st.f_pi = known_f_pi.value_or(1.0);
    st.f_label = 1.0 - 0.5 * (st.p1_given_ground + st.p2_given_ground + st.p0_given_pi);
    st.f_prep = 0.5 * (1.0 + (1.0 - 2.0 * st.p1_given_ground) * st.f_pi);
    st.s0_mean = ground_center;
    st.s1_mean = excited_center;
    const double var = 0.5 * (g.variance + e.variance);
    st.projected_std = std::sqrt(var);
    if (var > 0.0) {
        const double d = ground_center - excited_center;
        st.fisher_r = d * d / var;
    }
    st.f_ach = achievable_fidelity(st.fisher_r);
    st.f_mf_bar = st.f_label * st.f_ach;
    return st;
}

}  // namespace qrd
