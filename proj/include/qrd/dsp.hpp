#pragma once

#include "qrd/core.hpp"

#include <vector>

namespace qrd {

// Trace after digital down-conversion at one resonator tone.
struct DemodulatedTrace {
    SampleGrid grid;
    double tone_mhz = 0.0;
    std::vector<complex_t> samples;
};

// Per-bin complex weights applied over [window_start, window_end).
struct FilterKernel {
    std::vector<complex_t> weights;
    std::uint32_t window_start = 0;
    std::uint32_t window_end = 0;

    std::uint32_t window_length() const { return window_end - window_start; }
};

// Summary of two projected classes (ground first).
struct ClassStats {
    double mean0 = 0.0;
    double mean1 = 0.0;
    double variance = 0.0;  // pooled (mean of the per-class variances)
};

// z[n] * exp(-i 2 pi f t_n), t_n = n * sample_period. Frequencies in MHz,
// time in us, so the phase argument is 2*pi*f_mhz*t_us.
DemodulatedTrace demodulate(const IQTrace& trace, double tone_mhz);

// Mean of samples over [start, end).
complex_t boxcar(const DemodulatedTrace& trace, std::uint32_t start, std::uint32_t end);

// Per-bin two-class statistics of demodulated shots.
struct BinStats {
    std::vector<complex_t> mean0, mean1;
    std::vector<double> var0, var1;  // complex variance E|z-mu|^2 per bin
};
BinStats per_bin_stats(const std::vector<DemodulatedTrace>& class0,
                       const std::vector<DemodulatedTrace>& class1);

// Weight-per-bin estimate k_n = (mean0_n - mean1_n) / (var0_n + var1_n),
// rotated by a global phase so the projected class difference is real and
// positive (ground class lands on the high side). Full-range window.
FilterKernel estimate_matched_filter(const std::vector<DemodulatedTrace>& class0,
                                     const std::vector<DemodulatedTrace>& class1);

// Projection to the discriminating axis: Re( sum_n k_n z_n ) over the window.
double apply_kernel(const FilterKernel& kernel, const DemodulatedTrace& trace);

// Separation-to-variance ratio of two projected ensembles:
// R = (mean0 - mean1)^2 / pooled variance.
double fisher_criterion(const std::vector<double>& s0, const std::vector<double>& s1);
ClassStats projected_class_stats(const std::vector<double>& s0, const std::vector<double>& s1);

// Gaussian two-class bound F = 1/2 (1 + erf(sqrt(R/8))).
double achievable_fidelity(double fisher_r);

}  // namespace qrd
