#include "foldsimplex/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "foldsimplex/error.hpp"
#include "foldsimplex/parallel.hpp"
#include "foldsimplex/random.hpp"

namespace foldsimplex {

namespace {

DataMatrix resample_rows(const DataMatrix& data, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> pick(0, data.rows() - 1);
    std::vector<int> idx(static_cast<std::size_t>(data.rows()));
    for (int& i : idx) {
        i = pick(rng);
    }
    return data.select(idx);
}

// alpha_hat on a resample, searching near `center` first when asked to.
FitResult replicate_fit(const DataMatrix& data, double center, const BootstrapOptions& options) {
    if (options.local_half_width > 0.0) {
        const std::vector<double> local = local_alpha_grid(center, options.local_half_width, options.local_step);
        AlphaSearchResult r = fit_alpha(data, local, true, options.em);
        const auto on_grid = [&](double a) { return std::find(local.begin(), local.end(), a) != local.end(); };
        double grid_best = local.front();
        double grid_best_l = -std::numeric_limits<double>::infinity();
        for (const ProfilePoint& pt : r.profile) {
            if (on_grid(pt.alpha) && pt.log_likelihood > grid_best_l) {
                grid_best = pt.alpha;
                grid_best_l = pt.log_likelihood;
            }
        }
        const bool low_edge = grid_best == local.front() && local.front() > -1.0;
        const bool high_edge = grid_best == local.back() && local.back() < 1.0;
        if (!low_edge && !high_edge) {
            return std::move(r.best_fit);
        }
    }
    return fit_alpha(data, options.grid, true, options.em).best_fit;
}

struct Replicate {
    double alpha = 0.0;
    double lr = 0.0;
    int redraws = 0;
};

template <typename Body>
std::vector<Replicate> run_replicates(int B, std::uint64_t seed, int max_retries, Body body) {
    std::vector<Replicate> out(static_cast<std::size_t>(B));
    parallel_for(out.size(), [&](std::size_t b) {
        for (int attempt = 0;; ++attempt) {
            try {
                out[b] = body(derive_seed(derive_seed(seed, b), static_cast<std::uint64_t>(attempt)));
                out[b].redraws = attempt;
                return;
            } catch (const Error& e) {
                if (attempt >= max_retries) {
                    raise(ErrorKind::numeric_failure,
                          "bootstrap replicate " + std::to_string(b) + " failed after retries: " + e.what());
                }
            }
        }
    });
    return out;
}

} // namespace

double bootstrap_p_value(double observed, const std::vector<double>& boot) {
    if (boot.empty()) {
        raise(ErrorKind::invalid_argument, "no bootstrap replicates");
    }
    const auto exceed = std::count_if(boot.begin(), boot.end(), [&](double v) { return v >= observed; });
    return (static_cast<double>(exceed) + 1.0) / (static_cast<double>(boot.size()) + 1.0);
}

double quantile_type1(std::vector<double> values, double q) {
    if (values.empty()) {
        raise(ErrorKind::invalid_argument, "quantile of an empty sample");
    }
    if (!(q > 0.0 && q <= 1.0)) {
        raise(ErrorKind::invalid_argument, "quantile level must lie in (0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    auto k = static_cast<std::size_t>(std::ceil(n * q - 1e-9));
    k = std::clamp<std::size_t>(k, 1, values.size());
    return values[k - 1];
}

BootstrapTestResult bootstrap_test_alpha(const DataMatrix& data, int B, std::uint64_t seed,
                                         BootstrapStatistic statistic, const BootstrapOptions& options) {
    if (B < 19) {
        raise(ErrorKind::invalid_argument, "bootstrap test needs B >= 19");
    }
    const AlphaSearchResult observed = fit_alpha(data, default_alpha_grid(), true, options.em);

    BootstrapTestResult result;
    result.statistic = statistic;
    result.alpha_obs = observed.best_alpha;
    result.lr_obs = 2.0 * (observed.best_fit.log_likelihood - loglik_alpha0(data).log_likelihood);

    // Null data: z_{alpha_obs} coordinates read back as ilr coordinates.
    Matrix null_rows(data.rows(), data.parts());
    const HelmertSubmatrix H(data.parts());
    for (int i = 0; i < data.rows(); ++i) {
        const EuclideanPoint y = z_alpha(data.composition(i), result.alpha_obs);
        null_rows.row(i) = clr_inverse(ZeroSumVector(H.backward(y.values()))).parts().transpose();
    }
    const DataMatrix null_data(std::move(null_rows), data.names(), data.row_ids());

    const bool lr_mode = statistic == BootstrapStatistic::likelihood_ratio;
    const auto reps = run_replicates(B, seed, options.max_retries, [&](std::uint64_t s) {
        const DataMatrix resample = resample_rows(null_data, s);
        const FitResult fit = replicate_fit(resample, 0.0, options);
        Replicate r;
        r.alpha = fit.params.alpha;
        if (lr_mode) {
            r.lr = 2.0 * (fit.log_likelihood - loglik_alpha0(resample).log_likelihood);
        }
        return r;
    });

    for (const Replicate& r : reps) {
        result.alpha_boot.push_back(r.alpha);
        if (lr_mode) {
            result.lr_boot.push_back(r.lr);
        }
        result.redraws += r.redraws;
    }
    result.p_value = lr_mode ? bootstrap_p_value(result.lr_obs, result.lr_boot)
                             : bootstrap_p_value(result.alpha_obs, result.alpha_boot);
    return result;
}

BootstrapOptions bootstrap_ci_defaults() {
    BootstrapOptions options;
    options.local_half_width = 0.3;
    options.local_step = 0.1;
    return options;
}

BootstrapInterval bootstrap_ci_alpha(const DataMatrix& data, int B, double level, std::uint64_t seed,
                                     const BootstrapOptions& options) {
    if (B < 199) {
        raise(ErrorKind::invalid_argument, "bootstrap interval needs B >= 199");
    }
    if (!(level > 0.0 && level < 1.0)) {
        raise(ErrorKind::invalid_argument, "level must lie in (0, 1)");
    }
    BootstrapInterval result;
    result.level = level;
    result.alpha_obs = fit_alpha(data, default_alpha_grid(), true, options.em).best_alpha;

    const auto reps = run_replicates(B, seed, options.max_retries, [&](std::uint64_t s) {
        Replicate r;
        r.alpha = replicate_fit(resample_rows(data, s), result.alpha_obs, options).params.alpha;
        return r;
    });
    for (const Replicate& r : reps) {
        result.alpha_boot.push_back(r.alpha);
        result.redraws += r.redraws;
    }
    const double tail = 0.5 * (1.0 - level);
    result.lower = quantile_type1(result.alpha_boot, tail);
    result.upper = quantile_type1(result.alpha_boot, 1.0 - tail);
    return result;
}

CurvatureInterval curvature_ci(const std::function<double(double)>& profile, double alpha_hat, double level,
                               double h) {
    if (!(h > 0.0)) {
        raise(ErrorKind::invalid_argument, "step h must be positive");
    }
    if (!(level > 0.0 && level < 1.0)) {
        raise(ErrorKind::invalid_argument, "level must lie in (0, 1)");
    }
    const double f0 = profile(alpha_hat);
    const double fp = profile(alpha_hat + h);
    const double fm = profile(alpha_hat - h);
    CurvatureInterval out;
    out.alpha_hat = alpha_hat;
    out.level = level;
    out.second_derivative = (fp - 2.0 * f0 + fm) / (h * h);
    if (!(out.second_derivative < 0.0)) {
        raise(ErrorKind::non_concave_profile, "profile log-likelihood is not concave at alpha_hat");
    }
    out.se = 1.0 / std::sqrt(-out.second_derivative);
    const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
    out.lower = alpha_hat - z * out.se;
    out.upper = alpha_hat + z * out.se;
    return out;
}

EmOptions curvature_em_defaults() {
    EmOptions options;
    options.tol = 1e-10;
    options.max_iter = 5000;
    return options;
}

CurvatureInterval curvature_ci_alpha(const DataMatrix& data, double level, double h, const EmOptions& options) {
    const AlphaSearchResult search = fit_alpha(data, default_alpha_grid(), true, options);
    const double a = search.best_alpha;
    if (a - h < -1.0 || a + h > 1.0) {
        raise(ErrorKind::invalid_argument, "alpha_hat is too close to the boundary of [-1, 1] for step h");
    }
    return curvature_ci(
        [&](double x) { return x == a ? search.best_fit.log_likelihood : profile_loglik(data, x, options); }, a,
        level, h);
}

OutsideProbability outside_probability(const FoldedNormalParams& theta, std::int64_t draws, std::uint64_t seed) {
    theta.validate();
    if (theta.alpha == 0.0) {
        raise(ErrorKind::invalid_argument, "no mass leaves the simplex when alpha = 0");
    }
    if (draws < 10000) {
        raise(ErrorKind::invalid_argument, "outside probability needs at least 10^4 draws");
    }
    const int d = theta.dim();
    const int D = theta.parts();
    const NormalKernel kernel(theta.mu, theta.sigma);
    const Matrix Lt = kernel.lower().transpose();
    const Matrix H = helmert_submatrix(D).matrix();

    constexpr std::int64_t chunk = 1 << 16;
    const auto chunks = static_cast<std::size_t>((draws + chunk - 1) / chunk);
    std::vector<std::vector<std::int64_t>> counts(chunks, std::vector<std::int64_t>(D, 0));

    parallel_for(chunks, [&](std::size_t c) {
        const std::int64_t m = std::min<std::int64_t>(chunk, draws - static_cast<std::int64_t>(c) * chunk);
        Rng rng(derive_seed(seed, c));
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix Z(m, d);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (int j = 0; j < d; ++j) {
                Z(i, j) = normal(rng);
            }
        }
        const Matrix Y = (Z * Lt).rowwise() + theta.mu.transpose();
        const Matrix S = ((Y * H) * theta.alpha).array() + 1.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            Eigen::Index argmin = 0;
            const double lowest = S.row(i).minCoeff(&argmin);
            if (!(lowest > 0.0)) {
                ++counts[c][static_cast<std::size_t>(argmin)];
            }
        }
    });

    OutsideProbability out;
    out.draws = draws;
    out.per_component = Vector::Zero(D);
    std::int64_t outside = 0;
    for (int k = 0; k < D; ++k) {
        std::int64_t n_k = 0;
        for (const auto& cc : counts) {
            n_k += cc[static_cast<std::size_t>(k)];
        }
        outside += n_k;
        out.per_component[k] = static_cast<double>(n_k) / static_cast<double>(draws);
    }
    out.total = static_cast<double>(outside) / static_cast<double>(draws);
    return out;
}

} // namespace foldsimplex
