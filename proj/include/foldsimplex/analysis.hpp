#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "foldsimplex/estimation.hpp"
#include "foldsimplex/model.hpp"

namespace foldsimplex {

/// The fitted Euclidean mean carried back to the simplex (fold, or clr^{-1}(H^T mu) at alpha = 0).
Composition frechet_mean(const FitResult& fit);

struct PcaResult {
    Vector eigenvalues;                 ///< of H^T Sigma H, descending (D values, last ~0)
    Matrix eigenvectors;                ///< D x D, columns match eigenvalues
    std::vector<Vector> grid;           ///< t values of each curve
    std::vector<Matrix> curves;         ///< per component, points x D on the simplex
};

/// Eigen analysis of H^T Sigma H with curves mu + t H v_k, t over +/- 3 sqrt(lambda_k).
PcaResult simplex_pca(const FitResult& fit, int n_components, int points = 61);

/// Foerstner distance sqrt(sum log^2 lambda_i(A B^{-1})).
double covariance_distance(const Matrix& A, const Matrix& B);

double mean_distance(const Vector& a, const Vector& b);

/// Density evaluated on the grid: p k0 + (1-p) k1, or k0 + k1.
enum class GridDensity { mixture, fold };

struct ContourGrid {
    int resolution = 0;
    std::vector<std::array<int, 3>> index;  ///< (i, j, k), i + j + k = resolution
    Matrix nodes;                           ///< barycentric coordinates, one row per node
    Vector log_density;                     ///< NaN on the boundary

    /// Row of node (i, j); -1 outside the triangle.
    int node(int i, int j) const;
};

/// Barycentric grid over the 2-simplex. Needs D = 3 and 10 <= resolution <= 10^4.
ContourGrid contour_grid(const FoldedNormalParams& theta, int resolution, GridDensity density = GridDensity::mixture);

/// Modes of the grid: superlevel components living longer than `persistence` in log-density.
int count_modes(const ContourGrid& grid, double persistence = 0.01);

/// Interior nodes strictly above all defined lattice neighbours.
int count_local_maxima(const ContourGrid& grid);

/// Trapezoidal mass over the grid triangles (boundary nodes count as 0).
double grid_mass(const ContourGrid& grid);

struct StudyConfig {
    std::vector<double> alphas;
    std::vector<double> kappas;
    std::vector<int> ns;
    int replications = 1;
    Vector base_mu;
    Matrix base_sigma;
    std::uint64_t seed = 0;

    bool estimate_alpha = false;                    ///< also run fit_alpha per replicate
    std::vector<double> alpha_grid = default_alpha_grid();
    std::int64_t truth_draws = 1000000;             ///< MC draws for the true p of each (alpha, kappa)
    EmOptions em;

    void validate() const;
};

struct StudyCell {
    double alpha = 0.0;
    double kappa = 0.0;
    int n = 0;
    double true_p = 1.0;
    int completed = 0;
    int failures = 0;
    int nonmonotone_traces = 0;
    double mean_mu_error = 0.0;
    double mean_sigma_error = 0.0;
    double mean_p_error = 0.0;
    double mean_alpha_bias = 0.0;       ///< NaN unless alpha was estimated
    double mean_abs_alpha_error = 0.0;  ///< NaN unless alpha was estimated
};

struct StudyReport {
    std::vector<StudyCell> cells;   ///< alpha-major, then kappa, then n
};

StudyReport recovery_study(const StudyConfig& config);

void write_study_csv(std::ostream& out, const StudyReport& report);
std::string study_json(const StudyReport& report);

} // namespace foldsimplex
