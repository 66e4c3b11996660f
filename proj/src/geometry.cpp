#include "foldsimplex/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "foldsimplex/error.hpp"

namespace foldsimplex {

namespace {

constexpr double singular_fold_floor = 1e-12;

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        raise(ErrorKind::invalid_argument, std::string(what) + " has non-finite entries");
    }
}

void require_nonzero_alpha(double alpha, const char* op) {
    if (alpha == 0.0) {
        raise(ErrorKind::invalid_argument, std::string(op) + " requires alpha != 0");
    }
}

/*
 * Power-map terms in a form that stays accurate as alpha -> 0. With
 * c = clr(x) and e_i = expm1(alpha c_i), E = sum e_i:
 *   alpha w_i          = (D e_i - E) / (D + E)
 *   log sum_j x_j^alpha = alpha mean(log x) + log(D + E)
 */
struct PowerTerms {
    Vector scaled;      // alpha * w_alpha(x), i.e. D u_i - 1
    double log_norm;    // log(D + E)
};

PowerTerms power_terms(const Vector& centred_logs, double alpha) {
    const double D = static_cast<double>(centred_logs.size());
    Vector e = (alpha * centred_logs).unaryExpr([](double v) { return std::expm1(v); });
    const double E = e.sum();
    return {(D * e.array() - E).matrix() / (D + E), std::log(D + E)};
}

Vector centred_logs(const Vector& parts) {
    Vector l = parts.array().log().matrix();
    return l.array() - l.mean();
}

Vector softmax(const Vector& logits) {
    Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
    return e / e.sum();
}

Vector invert_power(const Vector& m, double alpha) {
    const Vector g = (1.0 + alpha * m.array()).matrix();
    if (!(g.minCoeff() > 0.0)) {
        raise(ErrorKind::out_of_region,
              "1 + alpha m_i <= 0: point lies outside the image of the alpha-transformation");
    }
    Vector logits = (alpha * m).unaryExpr([](double v) { return std::log1p(v); }) / alpha;
    return softmax(logits);
}

} // namespace

Composition::Composition(Vector parts) : parts_(std::move(parts)) {
    if (parts_.size() < 2) {
        raise(ErrorKind::invalid_dimension, "a composition needs at least 2 parts");
    }
    require_finite(parts_, "composition");
    if (!(parts_.minCoeff() > 0.0)) {
        raise(ErrorKind::zero_component,
              "composition parts must be strictly positive (zero values are not supported)");
    }
    parts_ /= parts_.sum();
}

Composition Composition::barycenter(int parts) {
    if (parts < 2) {
        raise(ErrorKind::invalid_dimension, "a composition needs at least 2 parts");
    }
    return Composition(Vector::Constant(parts, 1.0));
}

ZeroSumVector::ZeroSumVector(Vector values) : values_(std::move(values)) {
    require_finite(values_, "zero-sum vector");
    const double scale = std::max(1.0, values_.cwiseAbs().sum());
    if (std::abs(values_.sum()) > 1e-10 * scale) {
        raise(ErrorKind::invalid_argument, "vector does not sum to zero");
    }
}

EuclideanPoint::EuclideanPoint(Vector values) : values_(std::move(values)) {
    require_finite(values_, "Euclidean point");
}

HelmertSubmatrix::HelmertSubmatrix(int parts) {
    if (parts < 2) {
        raise(ErrorKind::invalid_dimension, "Helmert sub-matrix needs D >= 2");
    }
    matrix_ = Matrix::Zero(parts - 1, parts);
    for (int i = 1; i < parts; ++i) {
        const double r = 1.0 / std::sqrt(static_cast<double>(i) * (i + 1));
        matrix_.row(i - 1).head(i).setConstant(r);
        matrix_(i - 1, i) = -i * r;
    }
}

HelmertSubmatrix helmert_submatrix(int parts) {
    return HelmertSubmatrix(parts);
}

const char* to_string(FoldBranch branch) {
    return branch == FoldBranch::inside ? "inside" : "folded";
}

ZeroSumVector clr(const Composition& x) {
    return ZeroSumVector(centred_logs(x.parts()));
}

Composition clr_inverse(const ZeroSumVector& w) {
    return Composition(softmax(w.values()));
}

Composition alpha_power(const Composition& x, double alpha) {
    // exp(alpha c_i) normalised; the geometric-mean factor cancels.
    return Composition(softmax(alpha * centred_logs(x.parts())));
}

ZeroSumVector w_alpha(const Composition& x, double alpha) {
    require_nonzero_alpha(alpha, "w_alpha");
    return ZeroSumVector(power_terms(centred_logs(x.parts()), alpha).scaled / alpha);
}

Composition w_alpha_inverse(const ZeroSumVector& m, double alpha) {
    require_nonzero_alpha(alpha, "w_alpha_inverse");
    return Composition(invert_power(m.values(), alpha));
}

EuclideanPoint z_alpha(const Composition& x, double alpha) {
    const HelmertSubmatrix H(x.size());
    if (alpha == 0.0) {
        return EuclideanPoint(H.forward(clr(x).values()));
    }
    return EuclideanPoint(H.forward(w_alpha(x, alpha).values()));
}

Composition z_alpha_inverse(const EuclideanPoint& y, double alpha) {
    const HelmertSubmatrix H(y.size() + 1);
    const Vector w = H.backward(y.values());
    if (alpha == 0.0) {
        return Composition(softmax(w));
    }
    return Composition(invert_power(w, alpha));
}

bool in_alpha_region(const EuclideanPoint& y, double alpha) {
    if (alpha == 0.0) {
        return true;
    }
    const HelmertSubmatrix H(y.size() + 1);
    return (1.0 + alpha * H.backward(y.values()).array()).minCoeff() > 0.0;
}

double fold_scale(const Composition& x, double alpha) {
    return power_terms(centred_logs(x.parts()), alpha).scaled.minCoeff();
}

FoldResult fold(const EuclideanPoint& y, double alpha) {
    require_nonzero_alpha(alpha, "fold");
    const HelmertSubmatrix H(y.size() + 1);
    const Vector w = H.backward(y.values());
    const double q = (alpha * w).minCoeff();
    if (1.0 + q > 0.0) {
        return {Composition(invert_power(w, alpha)), FoldBranch::inside};
    }
    // q <= -1 here, so the rescaled point has min_i (1 + alpha m_i) = 1 + 1/q >= 0.
    const Vector m = w / (q * q);
    if (!((1.0 + alpha * m.array()).minCoeff() > 0.0)) {
        raise(ErrorKind::fold_failure, "folded point lies on the simplex boundary");
    }
    return {Composition(invert_power(m, alpha)), FoldBranch::folded};
}

EuclideanPoint unfold(const Composition& x, double alpha, FoldBranch branch) {
    require_nonzero_alpha(alpha, "unfold");
    const EuclideanPoint z = z_alpha(x, alpha);
    if (branch == FoldBranch::inside) {
        return z;
    }
    const double s = fold_scale(x, alpha);
    if (std::abs(s) < singular_fold_floor) {
        raise(ErrorKind::singular_fold, "fold scale w* is zero (composition at the barycentre)");
    }
    return EuclideanPoint(z.values() / (s * s));
}

double log_jacobian_g0(const Composition& x, double alpha) {
    const double D = x.size();
    const Vector l = x.parts().array().log().matrix();
    const PowerTerms terms = power_terms((l.array() - l.mean()).matrix(), alpha);
    // (alpha-1) sum log x - D (alpha mean(log x) + log(D+E)) = -sum log x - D log(D+E)
    return (D - 0.5) * std::log(D) - l.sum() - D * terms.log_norm;
}

double log_fold_jacobian_factor(double fold_scale, int parts) {
    if (std::abs(fold_scale) < singular_fold_floor) {
        raise(ErrorKind::singular_fold, "fold scale w* is zero");
    }
    return -2.0 * (parts - 1) * std::log(std::abs(fold_scale));
}

double log_jacobian_g1(const Composition& x, double alpha) {
    require_nonzero_alpha(alpha, "log_jacobian_g1");
    return log_jacobian_g0(x, alpha) + log_fold_jacobian_factor(fold_scale(x, alpha), x.size());
}

BranchCoordinates branch_coordinates(const Matrix& rows, double alpha) {
    require_nonzero_alpha(alpha, "branch_coordinates");
    const Eigen::Index n = rows.rows();
    const int D = static_cast<int>(rows.cols());
    const HelmertSubmatrix H(D);
    const double log_D_term = (D - 0.5) * std::log(static_cast<double>(D));

    Matrix w(n, D);
    BranchCoordinates out;
    out.log_jacobian_inside.resize(n);
    out.log_jacobian_folded.resize(n);
    out.fold_scale.resize(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector l = rows.row(i).transpose().array().log().matrix();
        const PowerTerms terms = power_terms((l.array() - l.mean()).matrix(), alpha);
        w.row(i) = terms.scaled.transpose() / alpha;
        out.fold_scale[i] = terms.scaled.minCoeff();
        out.log_jacobian_inside[i] = log_D_term - l.sum() - D * terms.log_norm;
    }

    out.inside = w * H.matrix().transpose();
    out.folded = out.inside;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = out.fold_scale[i];
        if (std::abs(s) < singular_fold_floor) {
            // Barycentre: the folded pre-image is at infinity and carries no density.
            out.log_jacobian_folded[i] = -std::numeric_limits<double>::infinity();
            continue;
        }
        out.folded.row(i) /= s * s;
        out.log_jacobian_folded[i] = out.log_jacobian_inside[i] - 2.0 * (D - 1) * std::log(std::abs(s));
    }
    return out;
}

Matrix ilr_rows(const Matrix& rows) {
    const HelmertSubmatrix H(static_cast<int>(rows.cols()));
    Matrix c = rows.array().log().matrix();
    c.colwise() -= c.rowwise().mean();
    return c * H.matrix().transpose();
}

} // namespace foldsimplex
