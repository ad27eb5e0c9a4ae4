#include "qrd/dsp.hpp"

#include <cmath>

namespace qrd {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

DemodulatedTrace demodulate(const IQTrace& trace, double tone_mhz) {
    if (trace.samples.size() != trace.grid.num_samples)
        throw argument_error("trace sample count does not match its grid");
    DemodulatedTrace out;
    out.grid = trace.grid;
    out.tone_mhz = tone_mhz;
    out.samples.resize(trace.samples.size());
    for (std::uint32_t n = 0; n < trace.samples.size(); ++n) {
        const double phase = -kTwoPi * tone_mhz * trace.grid.time_us(n);
        out.samples[n] = trace.samples[n] * complex_t(std::cos(phase), std::sin(phase));
    }
    return out;
}

complex_t boxcar(const DemodulatedTrace& trace, std::uint32_t start, std::uint32_t end) {
    if (start >= end) throw argument_error("boxcar window is empty");
    if (end > trace.samples.size()) throw argument_error("boxcar window exceeds trace length");
    complex_t acc = 0.0;
    for (std::uint32_t n = start; n < end; ++n) acc += trace.samples[n];
    return acc / static_cast<double>(end - start);
}

BinStats per_bin_stats(const std::vector<DemodulatedTrace>& class0,
                       const std::vector<DemodulatedTrace>& class1) {
    if (class0.empty() || class1.empty())
        throw degenerate_error("matched-filter estimation needs shots of both classes");
    const std::size_t m = class0.front().samples.size();
    for (const auto& set : {&class0, &class1})
        for (const auto& tr : *set)
            if (tr.samples.size() != m)
                throw argument_error("demodulated shots have inconsistent lengths");

    BinStats st;
    st.mean0.assign(m, complex_t(0.0));
    st.mean1.assign(m, complex_t(0.0));
    st.var0.assign(m, 0.0);
    st.var1.assign(m, 0.0);
    for (const auto& tr : class0)
        for (std::size_t n = 0; n < m; ++n) st.mean0[n] += tr.samples[n];
    for (const auto& tr : class1)
        for (std::size_t n = 0; n < m; ++n) st.mean1[n] += tr.samples[n];
    for (std::size_t n = 0; n < m; ++n) {
        st.mean0[n] /= static_cast<double>(class0.size());
        st.mean1[n] /= static_cast<double>(class1.size());
    }
    for (const auto& tr : class0)
        for (std::size_t n = 0; n < m; ++n) st.var0[n] += std::norm(tr.samples[n] - st.mean0[n]);
    for (const auto& tr : class1)
        for (std::size_t n = 0; n < m; ++n) st.var1[n] += std::norm(tr.samples[n] - st.mean1[n]);
    for (std::size_t n = 0; n < m; ++n) {
        st.var0[n] /= static_cast<double>(class0.size());
        st.var1[n] /= static_cast<double>(class1.size());
    }
    return st;
}

FilterKernel estimate_matched_filter(const std::vector<DemodulatedTrace>& class0,
                                     const std::vector<DemodulatedTrace>& class1) {
    BinStats st = per_bin_stats(class0, class1);
    const std::size_t m = st.mean0.size();
    FilterKernel kernel;
    kernel.weights.resize(m);
    kernel.window_start = 0;
    kernel.window_end = static_cast<std::uint32_t>(m);

    double denom_floor = 0.0;
    for (std::size_t n = 0; n < m; ++n) denom_floor += st.var0[n] + st.var1[n];
    if (!(denom_floor > 0.0)) {
        // Noiseless classes: fall back to unit-variance weighting so the
        // direction is still the mean difference.
        for (std::size_t n = 0; n < m; ++n) kernel.weights[n] = st.mean0[n] - st.mean1[n];
    } else {
        for (std::size_t n = 0; n < m; ++n) {
            const double denom = st.var0[n] + st.var1[n];
            if (!(denom > 0.0))
                throw degenerate_error("zero variance in bin " + std::to_string(n) +
                                       " with noisy neighbours; cannot weight");
            kernel.weights[n] = (st.mean0[n] - st.mean1[n]) / denom;
        }
    }

    // Global rotation: align the projected class difference with the real
    // axis, ground class on the high side.
    complex_t diff = 0.0;
    for (std::size_t n = 0; n < m; ++n)
        diff += kernel.weights[n] * (st.mean0[n] - st.mean1[n]);
    const double mag = std::abs(diff);
    if (mag > 0.0) {
        const complex_t rot = std::conj(diff) / mag;
        for (auto& w : kernel.weights) w *= rot;
    }
    return kernel;
}

double apply_kernel(const FilterKernel& kernel, const DemodulatedTrace& trace) {
    if (kernel.window_end > trace.samples.size() || kernel.window_end > kernel.weights.size())
        throw argument_error("kernel window exceeds trace length");
    if (kernel.window_start >= kernel.window_end) throw argument_error("kernel window is empty");
    double acc = 0.0;
    for (std::uint32_t n = kernel.window_start; n < kernel.window_end; ++n)
        acc += (kernel.weights[n] * trace.samples[n]).real();
    return acc;
}

ClassStats projected_class_stats(const std::vector<double>& s0, const std::vector<double>& s1) {
    if (s0.size() < 2 || s1.size() < 2)
        throw degenerate_error("need at least two projections per class");
    ClassStats st;
    for (double v : s0) st.mean0 += v;
    for (double v : s1) st.mean1 += v;
    st.mean0 /= static_cast<double>(s0.size());
    st.mean1 /= static_cast<double>(s1.size());
    double v0 = 0.0, v1 = 0.0;
    for (double v : s0) v0 += (v - st.mean0) * (v - st.mean0);
    for (double v : s1) v1 += (v - st.mean1) * (v - st.mean1);
    v0 /= static_cast<double>(s0.size());
    v1 /= static_cast<double>(s1.size());
    st.variance = 0.5 * (v0 + v1);
    return st;
}

double fisher_criterion(const std::vector<double>& s0, const std::vector<double>& s1) {
    ClassStats st = projected_class_stats(s0, s1);
    if (!(st.variance > 0.0)) throw degenerate_error("zero pooled variance in Fisher criterion");
    const double d = st.mean0 - st.mean1;
    return d * d / st.variance;
}

double achievable_fidelity(double fisher_r) {
    if (fisher_r < 0.0) throw argument_error("Fisher criterion must be non-negative");
    return 0.5 * (1.0 + std::erf(std::sqrt(fisher_r / 8.0)));
}

}  // namespace qrd
