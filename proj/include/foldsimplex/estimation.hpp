#pragma once

#include <optional>
#include <vector>

#include "foldsimplex/data.hpp"
#include "foldsimplex/model.hpp"

namespace foldsimplex {

struct EmOptions {
    /// Stop when successive log-likelihoods differ by less than this.
    double tol = 1e-6;
    int max_iter = 500;
    /// Start from these parameters instead of the y1 moments.
    std::optional<FoldedNormalParams> start;
};

struct FitResult {
    FoldedNormalParams params;
    Vector responsibilities;          ///< t_i, posterior weight of the inside branch
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;        ///< log-likelihood after initialisation and each iteration
};

/**
 * EM for the alpha-folded normal at fixed alpha != 0.
 *
 * Each row is mapped to y1 = z_alpha(x) and y2 = y1 / w*^2. The start uses the
 * moments of y1, t_i = k0 / (k0 + k1) and p = mean(t). Each iteration then
 * sets t_i = p k0 / (p k0 + (1-p) k1) and p = mean(t), and refits mu and Sigma
 * as t-weighted moments of y1 and (1-t)-weighted moments of y2, over n.
 * The objective is sum_i log(p k0(x_i) + (1-p) k1(x_i)).
 */
FitResult em_fit(const DataMatrix& data, double alpha, const EmOptions& options = {});

/// Closed-form logistic-normal fit (alpha = 0) on isometric log-ratio coordinates.
FitResult loglik_alpha0(const DataMatrix& data);

/// em_fit, or loglik_alpha0 when alpha == 0.
FitResult fit_at(const DataMatrix& data, double alpha, const EmOptions& options = {});

double profile_loglik(const DataMatrix& data, double alpha, const EmOptions& options = {});

struct ProfilePoint {
    double alpha;
    double log_likelihood;
};

struct AlphaSearchResult {
    double best_alpha = 0.0;
    FitResult best_fit;
    std::vector<ProfilePoint> profile;   ///< sorted by alpha
};

/// -1, -0.95, ..., 1 (41 points, exact 0 included).
std::vector<double> default_alpha_grid();

/// Points center + k*step within [center - half_width, center + half_width], clipped to [-1, 1].
std::vector<double> local_alpha_grid(double center, double half_width, double step);

/// Interval width at which the Brent refinement stops.
inline constexpr double alpha_refine_tolerance = 1e-4;

/**
 * Profile maximisation over alpha: evaluate the grid, then (if `refine`)
 * run Brent's method on the bracket around the best grid point.
 *
 * Each alpha is also refitted from its neighbours' estimates, and the higher
 * log-likelihood is kept. This stops fits stuck at p = 1 from shaping the profile.
 */
AlphaSearchResult fit_alpha(const DataMatrix& data, const std::vector<double>& grid, bool refine = true,
                            const EmOptions& options = {});

} // namespace foldsimplex
