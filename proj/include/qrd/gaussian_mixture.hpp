#pragma once

#include "qrd/core.hpp"

#include <vector>

namespace qrd {

// One-dimensional Gaussian mixture with a variance shared by all components.
struct GaussianMixture1D {
    std::vector<double> weights;
    std::vector<double> means;
    double variance = 0.0;
    double log_likelihood = 0.0;
    bool converged = false;
    std::uint32_t components() const { return static_cast<std::uint32_t>(weights.size()); }
};

struct MixtureFitOptions {
    std::uint32_t restarts = 20;
    std::uint32_t max_iterations = 500;
    // Relative change of the per-sample log-likelihood that counts as converged.
    double tolerance = 1e-9;
    std::uint64_t seed = 17;
    // When set, all restarts stalling at max_iterations raises fit_error
    // instead of returning the best model found with converged = false.
    bool require_convergence = false;
};

// EM with k-means++ seeding; best log-likelihood over restarts wins,
// preferring restarts that actually converged.
GaussianMixture1D fit_gaussian_mixture(const std::vector<double>& values, std::uint32_t components,
                                       const MixtureFitOptions& options = {});

// Fits K = 1..max_components and keeps the lowest-BIC model; components a
// simpler model explains away come back with weight zero, which is what makes
// single-population data report "no second component" instead of an arbitrary
// split between two identical Gaussians.
GaussianMixture1D fit_best_mixture(const std::vector<double>& values, std::uint32_t max_components,
                                   const MixtureFitOptions& options = {});

}  // namespace qrd
