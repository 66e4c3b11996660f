#pragma once

/**
 * @file geometry.hpp
 * @brief Maps between the open simplex, the zero-sum hyperplane and R^{D-1}.
 *
 * A composition x with D parts is sent to the zero-sum hyperplane by the
 * centred log-ratio (clr) or by the power map w_alpha, and from there to
 * R^{D-1} by the Helmert sub-matrix. Points of R^{D-1} that have no
 * pre-image under z_alpha are folded back onto the simplex.
 */

#include <Eigen/Dense>

namespace foldsimplex {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point on the open simplex: strictly positive parts that sum to one.
class Composition {
public:
    /// Closes `parts` to unit sum. Throws on D < 2 or a non-positive part.
    explicit Composition(Vector parts);

    static Composition barycenter(int parts);

    int size() const { return static_cast<int>(parts_.size()); }
    const Vector& parts() const { return parts_; }
    double operator[](int i) const { return parts_[i]; }

private:
    Vector parts_;
};

/// A vector of D reals with zero sum (clr and w_alpha images).
class ZeroSumVector {
public:
    explicit ZeroSumVector(Vector values);

    int size() const { return static_cast<int>(values_.size()); }
    const Vector& values() const { return values_; }
    double operator[](int i) const { return values_[i]; }

private:
    Vector values_;
};

/// A finite point of R^{D-1}.
class EuclideanPoint {
public:
    explicit EuclideanPoint(Vector values);

    int size() const { return static_cast<int>(values_.size()); }
    const Vector& values() const { return values_; }
    double operator[](int i) const { return values_[i]; }

private:
    Vector values_;
};

/// Rows 1..D-1 of the D x D Helmert matrix.
class HelmertSubmatrix {
public:
    explicit HelmertSubmatrix(int parts);

    int parts() const { return static_cast<int>(matrix_.cols()); }
    const Matrix& matrix() const { return matrix_; }

    /// H w for a zero-sum w.
    Vector forward(const Vector& w) const { return matrix_ * w; }
    /// H^T y; always sums to zero.
    Vector backward(const Vector& y) const { return matrix_.transpose() * y; }

private:
    Matrix matrix_;
};

HelmertSubmatrix helmert_submatrix(int parts);

enum class FoldBranch { inside, folded };

const char* to_string(FoldBranch branch);

struct FoldResult {
    Composition composition;
    FoldBranch branch;
};

ZeroSumVector clr(const Composition& x);
Composition clr_inverse(const ZeroSumVector& w);

/// u_i = x_i^alpha / sum_j x_j^alpha.
Composition alpha_power(const Composition& x, double alpha);

/// (D u_alpha(x) - 1) / alpha. alpha = 0 is rejected; use clr.
ZeroSumVector w_alpha(const Composition& x, double alpha);

/// Inverse of w_alpha; requires 1 + alpha m_i > 0 for every part.
Composition w_alpha_inverse(const ZeroSumVector& m, double alpha);

/// H w_alpha(x), or the isometric log-ratio H clr(x) when alpha = 0.
EuclideanPoint z_alpha(const Composition& x, double alpha);

/// Inverse of z_alpha on its image. Throws out_of_region outside it.
Composition z_alpha_inverse(const EuclideanPoint& y, double alpha);

/// True iff alpha = 0 or min_i (1 + alpha (H^T y)_i) > 0.
bool in_alpha_region(const EuclideanPoint& y, double alpha);

/// The fold scale w* = min_i (alpha w_i(x)) = min_i (D u_i - 1), in (-1, 0].
double fold_scale(const Composition& x, double alpha);

/**
 * Maps any point of R^{D-1} onto the simplex.
 *
 * Points inside the image of z_alpha are inverted directly. Points outside
 * are rescaled by 1/q*^2 with q* = min_i (alpha (H^T y)_i) before inversion.
 */
FoldResult fold(const EuclideanPoint& y, double alpha);

/// Inverse of fold on the chosen branch: z_alpha(x), or z_alpha(x) / w*^2.
EuclideanPoint unfold(const Composition& x, double alpha, FoldBranch branch);

/**
 * log |J0| for x -> z_alpha(x) with respect to Lebesgue measure on the first
 * D-1 parts: (D - 1/2) log D + sum_i [(alpha-1) log x_i - log sum_j x_j^alpha].
 * Valid for alpha = 0, where it is the isometric log-ratio Jacobian.
 */
double log_jacobian_g0(const Composition& x, double alpha);

/// -2(D-1) log|w*|, the extra factor contributed by the fold rescaling.
double log_fold_jacobian_factor(double fold_scale, int parts);

/// Total log-Jacobian of x -> z_alpha(x) / w*^2 (folded branch).
double log_jacobian_g1(const Composition& x, double alpha);

/**
 * Per-row quantities for a batch of compositions (one row each) at a fixed
 * alpha != 0, as used by the EM iterations and density evaluation.
 */
struct BranchCoordinates {
    Matrix inside;                ///< n x (D-1), rows z_alpha(x_i)
    Matrix folded;                ///< n x (D-1), rows z_alpha(x_i) / w*_i^2
    Vector log_jacobian_inside;   ///< log |J0|
    Vector log_jacobian_folded;   ///< log |J0| - 2(D-1) log |w*|; -inf when w* = 0
    Vector fold_scale;            ///< w*_i
};

BranchCoordinates branch_coordinates(const Matrix& rows, double alpha);

/// Isometric log-ratio coordinates H clr(x_i) for each row.
Matrix ilr_rows(const Matrix& rows);

} // namespace foldsimplex
