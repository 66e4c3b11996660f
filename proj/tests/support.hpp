#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "foldsimplex/data.hpp"
#include "foldsimplex/geometry.hpp"

namespace testsupport {

using foldsimplex::Composition;
using foldsimplex::DataMatrix;
using foldsimplex::Vector;

inline DataMatrix arctic_lake() {
    foldsimplex::DatasetOptions options;
    options.normalize = true;
    return foldsimplex::read_dataset_file(std::string(FOLDSIMPLEX_DATA_DIR) + "/arctic_lake.csv", options);
}

inline double dirichlet_log_pdf(const Vector& x, const Vector& a) {
    double out = std::lgamma(a.sum());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out += (a[i] - 1.0) * std::log(x[i]) - std::lgamma(a[i]);
    }
    return out;
}

/// Method-of-moments Dirichlet parameters for the rows of `sample`.
inline Vector dirichlet_moments(const DataMatrix& sample) {
    const Vector m = sample.values().colwise().mean().transpose();
    const Vector v = (sample.values().rowwise() - m.transpose()).array().square().colwise().mean().transpose();
    double precision = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        precision += m[i] * (1.0 - m[i]) / v[i] - 1.0;
    }
    precision /= static_cast<double>(m.size());
    return m * std::max(precision, 0.5);
}

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

/**
 * Importance-sampling integral over the open simplex (Lebesgue measure on the
 * first D-1 parts) of exp(log_f). The proposal is an equal mixture of
 * Dirichlet(1), Dirichlet(0.5) and Dirichlet(shape).
 */
inline Estimate integrate_simplex(const std::function<double(const Composition&)>& log_f, const Vector& shape,
                                  int draws, std::uint64_t seed) {
    const auto D = shape.size();
    const std::array<Vector, 3> components{Vector::Ones(D), Vector::Constant(D, 0.5), shape};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, 2);
    double sum = 0.0;
    double sum_sq = 0.0;
    Vector x(D);
    for (int t = 0; t < draws; ++t) {
        const Vector& a = components[static_cast<std::size_t>(pick(rng))];
        for (Eigen::Index i = 0; i < D; ++i) {
            x[i] = std::gamma_distribution<double>(a[i], 1.0)(rng);
        }
        x /= x.sum();
        if (!(x.minCoeff() > 0.0)) {
            continue;  // underflow at the boundary; the integrand has no mass there
        }
        double q = 0.0;
        for (const Vector& c : components) {
            q += std::exp(dirichlet_log_pdf(x, c)) / 3.0;
        }
        const double w = std::exp(log_f(Composition(x))) / q;
        sum += w;
        sum_sq += w * w;
    }
    Estimate e;
    e.mean = sum / draws;
    e.se = std::sqrt(std::max(sum_sq / draws - e.mean * e.mean, 0.0) / draws);
    return e;
}

} // namespace testsupport
