#include "qrd/gaussian_mixture.hpp"
#include "qrd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qrd {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double overall_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return var / static_cast<double>(v.size());
}

std::vector<double> kmeanspp_centers(const std::vector<double>& v, std::uint32_t k, Rng& rng) {
    std::vector<double> centers;
    centers.reserve(k);
    centers.push_back(v[rng.next_below(v.size())]);
    std::vector<double> d2(v.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) best = std::min(best, (v[i] - c) * (v[i] - c));
            d2[i] = best;
            total += best;
        }
        if (!(total > 0.0)) {
            // All points sit on existing centers; duplicate one.
            centers.push_back(centers.front());
            continue;
        }
        double u = rng.next_double() * total;
        std::size_t pick = v.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc += d2[i];
            if (u <= acc) {
                pick = i;
                break;
            }
        }
        centers.push_back(v[pick]);
    }
    return centers;
}

struct EmResult {
    GaussianMixture1D model;
    bool converged = false;
};

EmResult run_em(const std::vector<double>& v, std::vector<double> means, double var0,
                std::uint32_t max_iter, double tol) {
    const std::size_t n = v.size();
    const std::uint32_t k = static_cast<std::uint32_t>(means.size());
    std::vector<double> weights(k, 1.0 / k);
    double var = std::max(var0, 1e-300);
    std::vector<double> resp(n * k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    EmResult out;

    for (std::uint32_t iter = 0; iter < max_iter; ++iter) {
        // E step in log space for stability.
        double ll = 0.0;
        const double log_norm = -0.5 * (kLogTwoPi + std::log(var));
        for (std::size_t i = 0; i < n; ++i) {
            double max_term = -std::numeric_limits<double>::infinity();
            for (std::uint32_t c = 0; c < k; ++c) {
                const double d = v[i] - means[c];
                const double term =
                    (weights[c] > 0.0 ? std::log(weights[c]) : -1e300) + log_norm - 0.5 * d * d / var;
                resp[i * k + c] = term;
                max_term = std::max(max_term, term);
            }
            double sum = 0.0;
            for (std::uint32_t c = 0; c < k; ++c) sum += std::exp(resp[i * k + c] - max_term);
            const double log_sum = max_term + std::log(sum);
            ll += log_sum;
            for (std::uint32_t c = 0; c < k; ++c)
                resp[i * k + c] = std::exp(resp[i * k + c] - log_sum);
        }
        // M step.
        double new_var = 0.0;
        for (std::uint32_t c = 0; c < k; ++c) {
            double wsum = 0.0, msum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                wsum += resp[i * k + c];
                msum += resp[i * k + c] * v[i];
            }
            weights[c] = wsum / static_cast<double>(n);
            if (wsum > 0.0) means[c] = msum / wsum;
        }
        for (std::uint32_t c = 0; c < k; ++c)
            for (std::size_t i = 0; i < n; ++i) {
                const double d = v[i] - means[c];
                new_var += resp[i * k + c] * d * d;
            }
        var = std::max(new_var / static_cast<double>(n), 1e-300);

        const double per_sample = ll / static_cast<double>(n);
        const double prev_per_sample = prev_ll / static_cast<double>(n);
        if (std::abs(per_sample - prev_per_sample) < tol * (1.0 + std::abs(per_sample))) {
            out.converged = true;
            prev_ll = ll;
            break;
        }
        prev_ll = ll;
    }
    out.model.weights = std::move(weights);
    out.model.means = std::move(means);
    out.model.variance = var;
    out.model.log_likelihood = prev_ll;
    return out;
}

}  // namespace

GaussianMixture1D fit_gaussian_mixture(const std::vector<double>& values, std::uint32_t components,
                                       const MixtureFitOptions& options) {
    if (components == 0) throw argument_error("mixture needs at least one component");
    if (values.size() < 2 * components)
        throw degenerate_error("too few samples (" + std::to_string(values.size()) +
                               ") for a " + std::to_string(components) + "-component fit");
    for (double x : values)
        if (!std::isfinite(x)) throw argument_error("mixture input contains non-finite values");

    const double var0 = std::max(overall_variance(values), 1e-300);
    GaussianMixture1D best;
    bool any_converged = false, have_any = false;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::uint32_t r = 0; r < options.restarts; ++r) {
        Rng rng = Rng::substream(options.seed, r);
        auto centers = kmeanspp_centers(values, components, rng);
        EmResult res = run_em(values, std::move(centers), var0, options.max_iterations,
                              options.tolerance);
        res.model.converged = res.converged;
        // A converged restart always beats a stalled one; otherwise higher
        // log-likelihood wins.
        const bool better = !have_any || (res.converged && !any_converged) ||
                            (res.converged == any_converged && res.model.log_likelihood > best_ll);
        if (better) {
            best_ll = res.model.log_likelihood;
            best = std::move(res.model);
            have_any = true;
            any_converged = any_converged || best.converged;
        }
    }
    if (!any_converged && options.require_convergence)
        throw fit_error("EM failed to converge within " + std::to_string(options.max_iterations) +
                        " iterations in all " + std::to_string(options.restarts) + " restarts");
    // Canonical order: descending mean.
    std::vector<std::size_t> order(best.weights.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return best.means[a] > best.means[b]; });
    GaussianMixture1D sorted = best;
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted.weights[i] = best.weights[order[i]];
        sorted.means[i] = best.means[order[i]];
    }
    return sorted;
}

GaussianMixture1D fit_best_mixture(const std::vector<double>& values, std::uint32_t max_components,
                                   const MixtureFitOptions& options) {
    if (max_components == 0) throw argument_error("mixture needs at least one component");
    GaussianMixture1D best;
    double best_bic = std::numeric_limits<double>::infinity();
    const double log_n = std::log(static_cast<double>(values.size()));
    for (std::uint32_t k = 1; k <= max_components; ++k) {
        if (values.size() < 2 * k) break;
        GaussianMixture1D m = fit_gaussian_mixture(values, k, options);
        const double bic = -2.0 * m.log_likelihood + 2.0 * k * log_n;
        if (bic < best_bic) {
            best_bic = bic;
            best = std::move(m);
        }
    }
    if (best.weights.empty()) throw degenerate_error("no mixture size admissible for sample count");
    // Pad to max_components with zero-weight components so callers see a
    // stable shape; padded means duplicate the last real one.
    while (best.weights.size() < max_components) {
        best.weights.push_back(0.0);
        best.means.push_back(best.means.back());
    }
    return best;
}

}  // namespace qrd
