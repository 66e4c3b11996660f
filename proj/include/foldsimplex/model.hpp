#pragma once

/**
 * @file model.hpp
 * @brief The alpha-folded multivariate normal on the simplex.
 *
 * With Y ~ N(mu, Sigma) on R^{D-1}, X = fold(Y) has the two branch kernels
 *
 *   k0(x) = |J0(x)| N(z_alpha(x); mu, Sigma)
 *   k1(x) = |J0(x)| |w*(x)|^{-2(D-1)} N(z_alpha(x) / w*(x)^2; mu, Sigma)
 *
 * The law of X is k0 + k1 (fold_log_density). The fitted model mixes the
 * kernels with a free weight p: p k0 + (1-p) k1 (log_density); this is the
 * form maximised by em_fit. At p equal to the N(mu, Sigma) mass of the
 * alpha-region it still differs from k0 + k1 unless that mass is 0 or 1.
 */

#include <cstdint>
#include <vector>

#include "foldsimplex/data.hpp"
#include "foldsimplex/geometry.hpp"

namespace foldsimplex {

struct FoldedNormalParams {
    double alpha = 0.0;
    double p = 1.0;
    Vector mu;
    Matrix sigma;

    int dim() const { return static_cast<int>(mu.size()); }
    int parts() const { return dim() + 1; }

    /// Throws unless alpha in [-1,1], p in [0,1] (p = 1 when alpha = 0),
    /// sigma symmetric within 1e-10 and Cholesky-decomposable.
    void validate() const;
};

FoldedNormalParams make_params(double alpha, double p, Vector mu, Matrix sigma);

/// N(mu, Sigma) log-density through the Cholesky factor of Sigma.
class NormalKernel {
public:
    NormalKernel(Vector mu, const Matrix& sigma);

    int dim() const { return static_cast<int>(mu_.size()); }
    const Vector& mean() const { return mu_; }
    const Matrix& lower() const { return lower_; }

    double log_pdf(const Vector& y) const;
    /// log-density of each row of `rows`.
    Vector log_pdf_rows(const Matrix& rows) const;

private:
    Vector mu_;
    Matrix lower_;
    double log_norm_ = 0.0;
};

/// Branch kernels with their Jacobians, without mixing weights.
struct BranchLogDensities {
    double log_f0;
    double log_f1;
};

BranchLogDensities branch_log_densities(const Composition& x, const FoldedNormalParams& theta);

/// log(p k0 + (1-p) k1); the logistic normal when alpha = 0.
double log_density(const Composition& x, const FoldedNormalParams& theta);

/// log(k0 + k1): the law of fold(Y). Ignores theta.p.
double fold_log_density(const Composition& x, const FoldedNormalParams& theta);

/// N(ilr(x); mu, Sigma) - sum log x_i - log(D)/2.
double logistic_normal_log_density(const Composition& x, const Vector& mu, const Matrix& sigma);

struct SampleResult {
    DataMatrix data;
    std::vector<FoldBranch> branches;
};

/// Draws n compositions; p is not used (it is induced by mu, Sigma, alpha).
SampleResult sample_with_branches(const FoldedNormalParams& theta, int n, std::uint64_t seed);
DataMatrix sample(const FoldedNormalParams& theta, int n, std::uint64_t seed);

} // namespace foldsimplex
