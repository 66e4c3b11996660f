#include "foldsimplex/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/tools/minima.hpp>

#include "foldsimplex/error.hpp"
#include "foldsimplex/parallel.hpp"

namespace foldsimplex {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == neg_inf) {
        return b;
    }
    if (b == neg_inf) {
        return a;
    }
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double mixture_loglik(const Vector& k0, const Vector& k1, double p) {
    double total = 0.0;
    if (p == 1.0) {
        return k0.sum();
    }
    if (p == 0.0) {
        return k1.sum();
    }
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    for (Eigen::Index i = 0; i < k0.size(); ++i) {
        total += log_add(lp + k0[i], lq + k1[i]);
    }
    return total;
}

// Posterior weight of the inside branch under mixing weight p.
Vector posterior_inside(const Vector& k0, const Vector& k1, double p) {
    Vector t(k0.size());
    if (p == 1.0 || p == 0.0) {
        t.setConstant(p);
        return t;
    }
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    for (Eigen::Index i = 0; i < k0.size(); ++i) {
        const double a = lp + k0[i];
        t[i] = std::exp(a - log_add(a, lq + k1[i]));
    }
    return t;
}

NormalKernel covariance_kernel(const Vector& mu, const Matrix& sigma) {
    try {
        return NormalKernel(mu, sigma);
    } catch (const Error&) {
        raise(ErrorKind::degenerate_covariance, "covariance update is singular");
    }
}

struct BranchKernels {
    Vector k0;
    Vector k1;
};

BranchKernels evaluate_kernels(const BranchCoordinates& bc, const NormalKernel& kernel) {
    BranchKernels out{bc.log_jacobian_inside + kernel.log_pdf_rows(bc.inside),
                      bc.log_jacobian_folded + kernel.log_pdf_rows(bc.folded)};
    for (Eigen::Index i = 0; i < out.k1.size(); ++i) {
        if (bc.log_jacobian_folded[i] == neg_inf) {
            out.k1[i] = neg_inf;
        }
    }
    return out;
}

// EM at `alpha` started from another alpha's fit. The default start can put
// every row on the inside branch (t = 1), after which p = 1 is a fixed point.
// A neighbour's parameters with p < 1 escape that trap.
bool improve_from(const DataMatrix& data, double alpha, const FitResult& from, const EmOptions& options,
                  FitResult& current) {
    if (alpha == 0.0 || from.params.alpha == 0.0) {
        return false;
    }
    EmOptions warm = options;
    warm.start = from.params;
    warm.start->alpha = alpha;
    try {
        FitResult candidate = em_fit(data, alpha, warm);
        if (candidate.log_likelihood > current.log_likelihood + 1e-9 * std::max(1.0, std::abs(current.log_likelihood))) {
            current = std::move(candidate);
            return true;
        }
    } catch (const Error&) {
    }
    return false;
}

} // namespace

FitResult em_fit(const DataMatrix& data, double alpha, const EmOptions& options) {
    if (alpha == 0.0) {
        raise(ErrorKind::invalid_argument, "em_fit requires alpha != 0; use loglik_alpha0");
    }
    if (!(options.tol > 0.0)) {
        raise(ErrorKind::invalid_argument, "tolerance must be positive");
    }
    const int n = data.rows();
    const int d = data.parts() - 1;
    if (n < 1) {
        raise(ErrorKind::invalid_argument, "no data");
    }
    const BranchCoordinates bc = branch_coordinates(data.values(), alpha);

    Vector mu;
    Matrix sigma;
    double p = 1.0;
    if (options.start) {
        if (options.start->dim() != d) {
            raise(ErrorKind::invalid_dimension, "start parameters have the wrong dimension");
        }
        mu = options.start->mu;
        sigma = options.start->sigma;
        p = options.start->p;
    } else {
        mu = bc.inside.colwise().mean().transpose();
        const Matrix centred = bc.inside.rowwise() - mu.transpose();
        sigma = centred.transpose() * centred / n;
    }

    BranchKernels k = evaluate_kernels(bc, covariance_kernel(mu, sigma));
    Vector t;
    if (!options.start) {
        t = posterior_inside(k.k0, k.k1, 0.5);
        p = t.mean();
    } else {
        t = posterior_inside(k.k0, k.k1, p);
    }

    FitResult fit;
    double loglik = mixture_loglik(k.k0, k.k1, p);
    if (!std::isfinite(loglik)) {
        raise(ErrorKind::numeric_failure, "initial log-likelihood is not finite");
    }
    fit.trace.push_back(loglik);

    int iter = 0;
    bool converged = false;
    while (iter < options.max_iter) {
        ++iter;
        t = posterior_inside(k.k0, k.k1, p);
        p = t.mean();
        const Vector s = (1.0 - t.array()).matrix();

        mu = (bc.inside.transpose() * t + bc.folded.transpose() * s) / n;
        const Matrix r1 = bc.inside.rowwise() - mu.transpose();
        const Matrix r2 = bc.folded.rowwise() - mu.transpose();
        sigma = (r1.transpose() * (r1.array().colwise() * t.array()).matrix() +
                 r2.transpose() * (r2.array().colwise() * s.array()).matrix()) /
                n;
        sigma = 0.5 * (sigma + sigma.transpose());

        k = evaluate_kernels(bc, covariance_kernel(mu, sigma));
        const double next = mixture_loglik(k.k0, k.k1, p);
        if (!std::isfinite(next)) {
            raise(ErrorKind::numeric_failure, "log-likelihood is not finite");
        }
        fit.trace.push_back(next);
        const double change = std::abs(next - loglik);
        loglik = next;
        if (change < options.tol) {
            converged = true;
            break;
        }
    }

    fit.params = FoldedNormalParams{alpha, p, mu, sigma};
    fit.responsibilities = t;
    fit.log_likelihood = loglik;
    fit.iterations = iter;
    fit.converged = converged;
    return fit;
}

FitResult loglik_alpha0(const DataMatrix& data) {
    const int n = data.rows();
    const int d = data.parts() - 1;
    if (n <= d) {
        raise(ErrorKind::degenerate_covariance, "need more than D-1 observations for a covariance estimate");
    }
    const Matrix y = ilr_rows(data.values());
    const Vector mu = y.colwise().mean().transpose();
    const Matrix centred = y.rowwise() - mu.transpose();
    Matrix sigma = centred.transpose() * centred / n;
    sigma = 0.5 * (sigma + sigma.transpose());

    const NormalKernel kernel = covariance_kernel(mu, sigma);
    const double D = data.parts();
    const double log_jacobian =
        -0.5 * std::log(D) * n - data.values().array().log().sum();

    FitResult fit;
    fit.params = FoldedNormalParams{0.0, 1.0, mu, sigma};
    fit.responsibilities = Vector::Ones(n);
    fit.log_likelihood = kernel.log_pdf_rows(y).sum() + log_jacobian;
    if (!std::isfinite(fit.log_likelihood)) {
        raise(ErrorKind::numeric_failure, "log-likelihood is not finite");
    }
    fit.iterations = 0;
    fit.converged = true;
    fit.trace = {fit.log_likelihood};
    return fit;
}

FitResult fit_at(const DataMatrix& data, double alpha, const EmOptions& options) {
    return alpha == 0.0 ? loglik_alpha0(data) : em_fit(data, alpha, options);
}

double profile_loglik(const DataMatrix& data, double alpha, const EmOptions& options) {
    return fit_at(data, alpha, options).log_likelihood;
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int i = -20; i <= 20; ++i) {
        grid.push_back(i / 20.0);
    }
    return grid;
}

std::vector<double> local_alpha_grid(double center, double half_width, double step) {
    if (!(step > 0.0) || !(half_width >= 0.0)) {
        raise(ErrorKind::invalid_argument, "grid step must be positive");
    }
    std::vector<double> grid;
    const int k = static_cast<int>(std::floor(half_width / step + 1e-9));
    for (int i = -k; i <= k; ++i) {
        const double a = center + i * step;
        if (a >= -1.0 && a <= 1.0) {
            grid.push_back(a);
        }
    }
    if (grid.empty()) {
        grid.push_back(std::clamp(center, -1.0, 1.0));
    }
    return grid;
}

AlphaSearchResult fit_alpha(const DataMatrix& data, const std::vector<double>& grid, bool refine,
                            const EmOptions& options) {
    if (grid.empty()) {
        raise(ErrorKind::invalid_argument, "alpha grid is empty");
    }
    std::vector<double> alphas = grid;
    for (double a : alphas) {
        if (!(a >= -1.0 && a <= 1.0)) {
            raise(ErrorKind::invalid_argument, "alpha grid must lie in [-1, 1]");
        }
    }
    std::sort(alphas.begin(), alphas.end());
    alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

    std::vector<FitResult> fits(alphas.size());
    parallel_for(alphas.size(), [&](std::size_t i) { fits[i] = fit_at(data, alphas[i], options); });

    // Sweep warm starts along the grid in both directions until nothing improves.
    for (int round = 0; round < 3; ++round) {
        bool changed = false;
        for (std::size_t i = 1; i < fits.size(); ++i) {
            changed = improve_from(data, alphas[i], fits[i - 1], options, fits[i]) || changed;
        }
        for (std::size_t i = fits.size() - 1; i-- > 0;) {
            changed = improve_from(data, alphas[i], fits[i + 1], options, fits[i]) || changed;
        }
        if (!changed) {
            break;
        }
    }

    std::map<double, FitResult> evaluated;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        evaluated.emplace(alphas[i], std::move(fits[i]));
    }

    auto best_of = [&]() {
        auto best = evaluated.begin();
        for (auto it = evaluated.begin(); it != evaluated.end(); ++it) {
            if (it->second.log_likelihood > best->second.log_likelihood) {
                best = it;
            }
        }
        return best;
    };

    if (refine && alphas.size() > 1) {
        const auto grid_best = std::max_element(alphas.begin(), alphas.end(), [&](double a, double b) {
            return evaluated.at(a).log_likelihood < evaluated.at(b).log_likelihood;
        });
        const std::size_t i = static_cast<std::size_t>(grid_best - alphas.begin());
        const double lo = alphas[i == 0 ? 0 : i - 1];
        const double hi = alphas[std::min(i + 1, alphas.size() - 1)];

        auto negative_profile = [&](double a) {
            auto found = evaluated.find(a);
            if (found == evaluated.end()) {
                FitResult fit = fit_at(data, a, options);
                auto above = evaluated.lower_bound(a);
                auto nearest = above;
                if (above == evaluated.end() ||
                    (above != evaluated.begin() && a - std::prev(above)->first < above->first - a)) {
                    nearest = std::prev(above);
                }
                improve_from(data, a, nearest->second, options, fit);
                found = evaluated.emplace(a, std::move(fit)).first;
            }
            return -found->second.log_likelihood;
        };
        // 17 bits: stopping bracket below 1e-4 across [-1, 1].
        std::uintmax_t max_iter = 100;
        boost::math::tools::brent_find_minima(negative_profile, lo, hi, 17, max_iter);
    }

    const auto best = best_of();
    AlphaSearchResult result;
    result.best_alpha = best->first;
    result.best_fit = best->second;
    for (const auto& [a, f] : evaluated) {
        result.profile.push_back({a, f.log_likelihood});
    }
    return result;
}

} // namespace foldsimplex
