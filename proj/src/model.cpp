#include "foldsimplex/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "foldsimplex/error.hpp"
#include "foldsimplex/random.hpp"

namespace foldsimplex {

namespace {

double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) {
        return b;
    }
    if (b == -std::numeric_limits<double>::infinity()) {
        return a;
    }
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

} // namespace

void FoldedNormalParams::validate() const {
    if (mu.size() < 1) {
        raise(ErrorKind::invalid_dimension, "mu must have at least one entry");
    }
    if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
        raise(ErrorKind::invalid_dimension, "sigma must be (D-1) x (D-1)");
    }
    if (!(alpha >= -1.0 && alpha <= 1.0)) {
        raise(ErrorKind::invalid_argument, "alpha must lie in [-1, 1]");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        raise(ErrorKind::invalid_argument, "p must lie in [0, 1]");
    }
    if (alpha == 0.0 && p != 1.0) {
        raise(ErrorKind::invalid_argument, "p must be 1 when alpha = 0");
    }
    if (!mu.allFinite() || !sigma.allFinite()) {
        raise(ErrorKind::invalid_argument, "parameters must be finite");
    }
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        raise(ErrorKind::not_positive_definite, "sigma is not symmetric");
    }
    if (sigma.llt().info() != Eigen::Success) {
        raise(ErrorKind::not_positive_definite, "sigma is not positive definite");
    }
}

FoldedNormalParams make_params(double alpha, double p, Vector mu, Matrix sigma) {
    FoldedNormalParams theta{alpha, p, std::move(mu), std::move(sigma)};
    theta.validate();
    return theta;
}

NormalKernel::NormalKernel(Vector mu, const Matrix& sigma) : mu_(std::move(mu)) {
    Eigen::LLT<Matrix> llt(sigma);
    if (sigma.rows() != mu_.size() || llt.info() != Eigen::Success) {
        raise(ErrorKind::not_positive_definite, "covariance is not positive definite");
    }
    lower_ = llt.matrixL();
    const double d = static_cast<double>(mu_.size());
    log_norm_ = -0.5 * d * std::log(2.0 * std::numbers::pi) - lower_.diagonal().array().log().sum();
}

double NormalKernel::log_pdf(const Vector& y) const {
    const Vector z = lower_.triangularView<Eigen::Lower>().solve(y - mu_);
    return log_norm_ - 0.5 * z.squaredNorm();
}

Vector NormalKernel::log_pdf_rows(const Matrix& rows) const {
    Matrix centred = (rows.rowwise() - mu_.transpose()).transpose();
    lower_.triangularView<Eigen::Lower>().solveInPlace(centred);
    return (log_norm_ - 0.5 * centred.colwise().squaredNorm().array()).matrix().transpose();
}

BranchLogDensities branch_log_densities(const Composition& x, const FoldedNormalParams& theta) {
    if (theta.alpha == 0.0) {
        raise(ErrorKind::invalid_argument, "branch densities require alpha != 0");
    }
    if (x.size() != theta.parts()) {
        raise(ErrorKind::invalid_dimension, "composition and parameters disagree on D");
    }
    const NormalKernel kernel(theta.mu, theta.sigma);
    const BranchCoordinates bc = branch_coordinates(x.parts().transpose(), theta.alpha);
    const double log_f0 = bc.log_jacobian_inside[0] + kernel.log_pdf(bc.inside.row(0).transpose());
    double log_f1 = -std::numeric_limits<double>::infinity();
    if (std::isfinite(bc.log_jacobian_folded[0])) {
        log_f1 = bc.log_jacobian_folded[0] + kernel.log_pdf(bc.folded.row(0).transpose());
    }
    return {log_f0, log_f1};
}

double log_density(const Composition& x, const FoldedNormalParams& theta) {
    if (theta.alpha == 0.0) {
        return logistic_normal_log_density(x, theta.mu, theta.sigma);
    }
    const BranchLogDensities b = branch_log_densities(x, theta);
    if (theta.p == 1.0) {
        return b.log_f0;
    }
    if (theta.p == 0.0) {
        return b.log_f1;
    }
    return log_add(std::log(theta.p) + b.log_f0, std::log1p(-theta.p) + b.log_f1);
}

double fold_log_density(const Composition& x, const FoldedNormalParams& theta) {
    if (theta.alpha == 0.0) {
        return logistic_normal_log_density(x, theta.mu, theta.sigma);
    }
    const BranchLogDensities b = branch_log_densities(x, theta);
    return log_add(b.log_f0, b.log_f1);
}

double logistic_normal_log_density(const Composition& x, const Vector& mu, const Matrix& sigma) {
    if (x.size() != mu.size() + 1) {
        raise(ErrorKind::invalid_dimension, "composition and parameters disagree on D");
    }
    const NormalKernel kernel(mu, sigma);
    return kernel.log_pdf(z_alpha(x, 0.0).values()) + log_jacobian_g0(x, 0.0);
}

SampleResult sample_with_branches(const FoldedNormalParams& theta, int n, std::uint64_t seed) {
    theta.validate();
    if (n < 1) {
        raise(ErrorKind::invalid_argument, "sample size must be at least 1");
    }
    const NormalKernel kernel(theta.mu, theta.sigma);
    const HelmertSubmatrix H(theta.parts());
    Rng rng(seed);
    Vector z(theta.dim());

    Matrix rows(n, theta.parts());
    std::vector<FoldBranch> branches(n, FoldBranch::inside);
    for (int i = 0; i < n; ++i) {
        fill_standard_normal(rng, z);
        const Vector y = theta.mu + kernel.lower() * z;
        if (theta.alpha == 0.0) {
            rows.row(i) = clr_inverse(ZeroSumVector(H.backward(y))).parts().transpose();
            continue;
        }
        FoldResult folded = fold(EuclideanPoint(y), theta.alpha);
        rows.row(i) = folded.composition.parts().transpose();
        branches[i] = folded.branch;
    }
    return {DataMatrix(std::move(rows)), std::move(branches)};
}

DataMatrix sample(const FoldedNormalParams& theta, int n, std::uint64_t seed) {
    return sample_with_branches(theta, n, seed).data;
}

} // namespace foldsimplex
