#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "foldsimplex/data.hpp"
#include "foldsimplex/estimation.hpp"
#include "foldsimplex/model.hpp"

namespace foldsimplex {

/// (#{boot >= observed} + 1) / (B + 1).
double bootstrap_p_value(double observed, const std::vector<double>& boot);

/// Type-1 sample quantile: the ceil(B q)-th order statistic (q in (0, 1]).
double quantile_type1(std::vector<double> values, double q);

enum class BootstrapStatistic {
    alpha,              ///< compare alpha_b with alpha_obs
    likelihood_ratio,   ///< compare 2 (l(alpha_hat) - l(0)) across replicates
};

struct BootstrapOptions {
    /// Grid searched by each replicate before Brent refinement.
    std::vector<double> grid = local_alpha_grid(0.0, 1.0, 0.1);
    /// When positive, replicates search center +/- this (step `local_step`) first
    /// and fall back to `grid` if the maximum sits on the local edge.
    double local_half_width = 0.0;
    double local_step = 0.1;
    int max_retries = 3;
    EmOptions em;
};

struct BootstrapTestResult {
    BootstrapStatistic statistic = BootstrapStatistic::alpha;
    double alpha_obs = 0.0;
    std::vector<double> alpha_boot;
    double lr_obs = 0.0;                ///< 2 (l(alpha_obs) - l(0)) on the data
    std::vector<double> lr_boot;        ///< empty in alpha mode
    double p_value = 1.0;
    int redraws = 0;                    ///< replicates redrawn after a failed refit
};

/**
 * Bootstrap test of alpha = 0. The data are mapped by
 * z_{alpha_obs} and sent back with the alpha = 0 inverse, rows are resampled
 * B times and alpha is re-estimated on each resample.
 */
BootstrapTestResult bootstrap_test_alpha(const DataMatrix& data, int B, std::uint64_t seed,
                                         BootstrapStatistic statistic = BootstrapStatistic::alpha,
                                         const BootstrapOptions& options = {});

struct BootstrapInterval {
    double alpha_obs = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    std::vector<double> alpha_boot;
    int redraws = 0;
};

/// Local search around alpha_obs; resamples of the data stay close to it.
BootstrapOptions bootstrap_ci_defaults();

/// Percentile interval from B row resamples of the data.
BootstrapInterval bootstrap_ci_alpha(const DataMatrix& data, int B, double level, std::uint64_t seed,
                                     const BootstrapOptions& options = bootstrap_ci_defaults());

struct CurvatureInterval {
    double alpha_hat = 0.0;
    double second_derivative = 0.0;
    double se = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
};

/// alpha_hat +/- z se with se = (-l'')^{-1/2}, l'' by central differences of step h.
CurvatureInterval curvature_ci(const std::function<double(double)>& profile, double alpha_hat, double level,
                               double h);

/// Tighter EM tolerance than the default so the finite differences are not noise.
EmOptions curvature_em_defaults();

CurvatureInterval curvature_ci_alpha(const DataMatrix& data, double level, double h = 1e-2,
                                     const EmOptions& options = curvature_em_defaults());

struct OutsideProbability {
    double total = 0.0;
    Vector per_component;       ///< length D
    std::int64_t draws = 0;
};

/**
 * Monte-Carlo mass of N(mu, Sigma) outside the alpha-region. Each outside draw
 * is charged to the part with the smallest 1 + alpha (H^T y)_i (lowest index on ties).
 */
OutsideProbability outside_probability(const FoldedNormalParams& theta, std::int64_t draws, std::uint64_t seed);

} // namespace foldsimplex
