#include "foldsimplex/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "foldsimplex/error.hpp"
#include "foldsimplex/inference.hpp"
#include "foldsimplex/parallel.hpp"
#include "foldsimplex/random.hpp"

namespace foldsimplex {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

void require_converged(const FitResult& fit, const char* what) {
    if (!fit.converged) {
        raise(ErrorKind::invalid_argument, std::string(what) + " needs a converged fit");
    }
}

Composition to_simplex(const Vector& y, double alpha, const HelmertSubmatrix& H) {
    if (alpha == 0.0) {
        return clr_inverse(ZeroSumVector(H.backward(y)));
    }
    return fold(EuclideanPoint(y), alpha).composition;
}

double log_add(double a, double b) {
    if (std::isinf(a) && a < 0) {
        return b;
    }
    if (std::isinf(b) && b < 0) {
        return a;
    }
    return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
}

// Union-find with path halving.
struct Components {
    std::vector<int> parent;
    explicit Components(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    }
};

constexpr std::array<std::array<int, 2>, 6> lattice_steps{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}}};

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "";
    }
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.10g", v);
    return buffer;
}

} // namespace

Composition frechet_mean(const FitResult& fit) {
    require_converged(fit, "frechet_mean");
    return to_simplex(fit.params.mu, fit.params.alpha, HelmertSubmatrix(fit.params.parts()));
}

PcaResult simplex_pca(const FitResult& fit, int n_components, int points) {
    require_converged(fit, "simplex_pca");
    const int D = fit.params.parts();
    if (n_components < 1 || n_components > D - 1) {
        raise(ErrorKind::invalid_argument, "number of components must lie in [1, D-1]");
    }
    if (points < 2) {
        raise(ErrorKind::invalid_argument, "curves need at least 2 points");
    }
    const HelmertSubmatrix H(D);
    const Matrix clr_cov = H.matrix().transpose() * fit.params.sigma * H.matrix();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(clr_cov);

    PcaResult out;
    out.eigenvalues = eig.eigenvalues().reverse();
    out.eigenvectors = eig.eigenvectors().rowwise().reverse();
    for (int k = 0; k < n_components; ++k) {
        const double spread = 3.0 * std::sqrt(std::max(out.eigenvalues[k], 0.0));
        const Vector direction = H.forward(out.eigenvectors.col(k));
        Vector t = Vector::LinSpaced(points, -spread, spread);
        Matrix curve(points, D);
        for (int i = 0; i < points; ++i) {
            curve.row(i) = to_simplex(fit.params.mu + t[i] * direction, fit.params.alpha, H).parts().transpose();
        }
        out.grid.push_back(std::move(t));
        out.curves.push_back(std::move(curve));
    }
    return out;
}

double covariance_distance(const Matrix& A, const Matrix& B) {
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows()) {
        raise(ErrorKind::invalid_dimension, "covariance matrices must be square and of equal size");
    }
    if (A.llt().info() != Eigen::Success || B.llt().info() != Eigen::Success) {
        raise(ErrorKind::not_positive_definite, "covariance matrices must be positive definite");
    }
    const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(A, B, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
        raise(ErrorKind::numeric_failure, "generalised eigenvalues are not positive");
    }
    return std::sqrt(eig.eigenvalues().array().log().square().sum());
}

double mean_distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        raise(ErrorKind::invalid_dimension, "vectors differ in length");
    }
    return (a - b).norm();
}

int ContourGrid::node(int i, int j) const {
    if (i < 0 || j < 0 || i + j > resolution) {
        return -1;
    }
    return i * (resolution + 1) - i * (i - 1) / 2 + j;
}

ContourGrid contour_grid(const FoldedNormalParams& theta, int resolution, GridDensity density) {
    theta.validate();
    if (theta.parts() != 3) {
        raise(ErrorKind::invalid_dimension, "contour grids need D = 3");
    }
    if (resolution < 10 || resolution > 10000) {
        raise(ErrorKind::invalid_argument, "resolution must lie in [10, 10000]");
    }
    // Nodes closer than this to an edge are left undefined.
    constexpr double margin = 1e-4;

    ContourGrid grid;
    grid.resolution = resolution;
    const double h = 1.0 / resolution;
    for (int i = 0; i <= resolution; ++i) {
        for (int j = 0; i + j <= resolution; ++j) {
            grid.index.push_back({i, j, resolution - i - j});
        }
    }
    const auto count = static_cast<Eigen::Index>(grid.index.size());
    grid.nodes.resize(count, 3);
    grid.log_density = Vector::Constant(count, nan_value);

    std::vector<Eigen::Index> interior;
    for (Eigen::Index r = 0; r < count; ++r) {
        const auto& ijk = grid.index[static_cast<std::size_t>(r)];
        grid.nodes.row(r) << ijk[0] * h, ijk[1] * h, ijk[2] * h;
        if (grid.nodes.row(r).minCoeff() >= margin) {
            interior.push_back(r);
        }
    }
    Matrix rows(static_cast<Eigen::Index>(interior.size()), 3);
    for (std::size_t r = 0; r < interior.size(); ++r) {
        rows.row(static_cast<Eigen::Index>(r)) = grid.nodes.row(interior[r]);
    }

    const NormalKernel kernel(theta.mu, theta.sigma);
    Vector values(rows.rows());
    if (theta.alpha == 0.0) {
        const Vector jac = -0.5 * std::log(3.0) - rows.array().log().rowwise().sum();
        values = kernel.log_pdf_rows(ilr_rows(rows)) + jac;
    } else {
        const BranchCoordinates bc = branch_coordinates(rows, theta.alpha);
        const Vector k0 = bc.log_jacobian_inside + kernel.log_pdf_rows(bc.inside);
        const Vector k1 = bc.log_jacobian_folded + kernel.log_pdf_rows(bc.folded);
        const bool mix = density == GridDensity::mixture;
        const double lp = mix ? std::log(theta.p) : 0.0;
        const double lq = mix ? std::log1p(-theta.p) : 0.0;
        for (Eigen::Index r = 0; r < values.size(); ++r) {
            const double b1 = std::isfinite(bc.log_jacobian_folded[r]) ? lq + k1[r]
                                                                        : -std::numeric_limits<double>::infinity();
            values[r] = log_add(lp + k0[r], b1);
        }
    }
    for (std::size_t r = 0; r < interior.size(); ++r) {
        grid.log_density[interior[r]] = values[static_cast<Eigen::Index>(r)];
    }
    return grid;
}

int count_modes(const ContourGrid& grid, double persistence) {
    std::vector<int> order;
    for (int r = 0; r < grid.log_density.size(); ++r) {
        if (!std::isnan(grid.log_density[r])) {
            order.push_back(r);
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return grid.log_density[a] > grid.log_density[b]; });

    Components uf(static_cast<std::size_t>(grid.log_density.size()));
    std::vector<char> added(static_cast<std::size_t>(grid.log_density.size()), 0);
    std::vector<double> birth(static_cast<std::size_t>(grid.log_density.size()), 0.0);
    int modes = 0;
    for (int v : order) {
        const double level = grid.log_density[v];
        added[v] = 1;
        birth[v] = level;
        const auto& ijk = grid.index[static_cast<std::size_t>(v)];
        for (const auto& step : lattice_steps) {
            const int u = grid.node(ijk[0] + step[0], ijk[1] + step[1]);
            if (u < 0 || !added[u]) {
                continue;
            }
            int ru = uf.find(u);
            int rv = uf.find(v);
            if (ru == rv) {
                continue;
            }
            // The younger component dies here.
            if (birth[ru] < birth[rv]) {
                std::swap(ru, rv);
            }
            if (birth[rv] - level > persistence) {
                ++modes;
            }
            uf.parent[rv] = ru;
        }
    }
    for (int v : order) {
        if (uf.find(v) == v) {
            ++modes;
        }
    }
    return modes;
}

int count_local_maxima(const ContourGrid& grid) {
    int count = 0;
    for (int r = 0; r < grid.log_density.size(); ++r) {
        const double v = grid.log_density[r];
        if (std::isnan(v)) {
            continue;
        }
        const auto& ijk = grid.index[static_cast<std::size_t>(r)];
        bool peak = true;
        for (const auto& step : lattice_steps) {
            const int u = grid.node(ijk[0] + step[0], ijk[1] + step[1]);
            if (u >= 0 && !std::isnan(grid.log_density[u]) && !(v > grid.log_density[u])) {
                peak = false;
                break;
            }
        }
        count += peak ? 1 : 0;
    }
    return count;
}

double grid_mass(const ContourGrid& grid) {
    const int res = grid.resolution;
    auto value = [&](int i, int j) {
        const double l = grid.log_density[grid.node(i, j)];
        return std::isnan(l) ? 0.0 : std::exp(l);
    };
    const double area = 0.5 / (static_cast<double>(res) * res);
    double mass = 0.0;
    for (int i = 0; i < res; ++i) {
        for (int j = 0; i + j < res; ++j) {
            mass += area * (value(i, j) + value(i + 1, j) + value(i, j + 1)) / 3.0;
            if (i + j < res - 1) {
                mass += area * (value(i + 1, j) + value(i, j + 1) + value(i + 1, j + 1)) / 3.0;
            }
        }
    }
    return mass;
}

void StudyConfig::validate() const {
    if (alphas.empty() || kappas.empty() || ns.empty()) {
        raise(ErrorKind::invalid_argument, "study needs alphas, kappas and sample sizes");
    }
    if (replications < 1) {
        raise(ErrorKind::invalid_argument, "replications must be at least 1");
    }
    for (double k : kappas) {
        if (!(k > 0.0)) {
            raise(ErrorKind::invalid_argument, "kappa must be positive");
        }
    }
    for (double a : alphas) {
        if (!(a >= -1.0 && a <= 1.0)) {
            raise(ErrorKind::invalid_argument, "alpha must lie in [-1, 1]");
        }
    }
    for (int n : ns) {
        if (n <= base_mu.size()) {
            raise(ErrorKind::invalid_argument, "sample sizes must exceed D-1");
        }
    }
    make_params(0.0, 1.0, base_mu, base_sigma);
}

StudyReport recovery_study(const StudyConfig& config) {
    config.validate();
    const std::size_t na = config.alphas.size();
    const std::size_t nk = config.kappas.size();
    const std::size_t nn = config.ns.size();
    const auto reps = static_cast<std::size_t>(config.replications);

    // True p per (alpha, kappa).
    std::vector<double> true_p(na * nk, 1.0);
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t k = 0; k < nk; ++k) {
            const double alpha = config.alphas[a];
            if (alpha == 0.0) {
                continue;
            }
            const FoldedNormalParams theta{alpha, 1.0, config.base_mu, config.kappas[k] * config.base_sigma};
            const std::uint64_t stream = (std::uint64_t{1} << 40) + a * nk + k;
            true_p[a * nk + k] =
                1.0 - outside_probability(theta, config.truth_draws, derive_seed(config.seed, stream)).total;
        }
    }

    struct Outcome {
        bool ok = false;
        bool monotone = true;
        double mu_error = 0.0;
        double sigma_error = 0.0;
        double p_error = 0.0;
        double alpha_bias = nan_value;
    };
    const std::size_t jobs = na * nk * nn * reps;
    std::vector<Outcome> outcomes(jobs);
    parallel_for(jobs, [&](std::size_t job) {
        const std::size_t cell = job / reps;
        const std::size_t a = cell / (nk * nn);
        const std::size_t k = (cell / nn) % nk;
        const std::size_t s = cell % nn;
        const double alpha = config.alphas[a];
        const FoldedNormalParams truth{alpha, true_p[a * nk + k], config.base_mu,
                                       config.kappas[k] * config.base_sigma};
        Outcome& o = outcomes[job];
        try {
            const DataMatrix data = sample(truth, config.ns[s], derive_seed(config.seed, job));
            const FitResult fit = fit_at(data, alpha, config.em);
            for (std::size_t t = 1; t < fit.trace.size(); ++t) {
                if (fit.trace[t] < fit.trace[t - 1] - 1e-9 * std::max(1.0, std::abs(fit.trace[t - 1]))) {
                    o.monotone = false;
                }
            }
            o.mu_error = mean_distance(fit.params.mu, truth.mu);
            o.sigma_error = covariance_distance(fit.params.sigma, truth.sigma);
            o.p_error = std::abs(fit.params.p - truth.p);
            if (config.estimate_alpha) {
                o.alpha_bias = fit_alpha(data, config.alpha_grid, true, config.em).best_alpha - alpha;
            }
            o.ok = std::isfinite(o.mu_error) && std::isfinite(o.sigma_error) && std::isfinite(o.p_error);
        } catch (const Error&) {
            o.ok = false;
        }
    });

    StudyReport report;
    for (std::size_t cell = 0; cell < na * nk * nn; ++cell) {
        const std::size_t a = cell / (nk * nn);
        const std::size_t k = (cell / nn) % nk;
        StudyCell c;
        c.alpha = config.alphas[a];
        c.kappa = config.kappas[k];
        c.n = config.ns[cell % nn];
        c.true_p = true_p[a * nk + k];
        double bias = 0.0;
        double abs_bias = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const Outcome& o = outcomes[cell * reps + r];
            if (!o.ok) {
                ++c.failures;
                continue;
            }
            ++c.completed;
            c.nonmonotone_traces += o.monotone ? 0 : 1;
            c.mean_mu_error += o.mu_error;
            c.mean_sigma_error += o.sigma_error;
            c.mean_p_error += o.p_error;
            bias += o.alpha_bias;
            abs_bias += std::abs(o.alpha_bias);
        }
        if (c.completed > 0) {
            c.mean_mu_error /= c.completed;
            c.mean_sigma_error /= c.completed;
            c.mean_p_error /= c.completed;
        }
        c.mean_alpha_bias = config.estimate_alpha && c.completed > 0 ? bias / c.completed : nan_value;
        c.mean_abs_alpha_error = config.estimate_alpha && c.completed > 0 ? abs_bias / c.completed : nan_value;
        report.cells.push_back(c);
    }
    return report;
}

void write_study_csv(std::ostream& out, const StudyReport& report) {
    out << "alpha,kappa,n,true_p,completed,failures,nonmonotone_traces,mean_mu_error,mean_sigma_error,"
           "mean_p_error,mean_alpha_bias,mean_abs_alpha_error\n";
    for (const StudyCell& c : report.cells) {
        out << format_number(c.alpha) << ',' << format_number(c.kappa) << ',' << c.n << ','
            << format_number(c.true_p) << ',' << c.completed << ',' << c.failures << ',' << c.nonmonotone_traces
            << ',' << format_number(c.mean_mu_error) << ',' << format_number(c.mean_sigma_error) << ','
            << format_number(c.mean_p_error) << ',' << format_number(c.mean_alpha_bias) << ','
            << format_number(c.mean_abs_alpha_error) << '\n';
    }
}

std::string study_json(const StudyReport& report) {
    auto number = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    nlohmann::json cells = nlohmann::json::array();
    for (const StudyCell& c : report.cells) {
        cells.push_back({{"alpha", c.alpha},
                         {"kappa", c.kappa},
                         {"n", c.n},
                         {"true_p", c.true_p},
                         {"completed", c.completed},
                         {"failures", c.failures},
                         {"nonmonotone_traces", c.nonmonotone_traces},
                         {"mean_mu_error", c.mean_mu_error},
                         {"mean_sigma_error", c.mean_sigma_error},
                         {"mean_p_error", c.mean_p_error},
                         {"mean_alpha_bias", number(c.mean_alpha_bias)},
                         {"mean_abs_alpha_error", number(c.mean_abs_alpha_error)}});
    }
    return nlohmann::json{{"cells", cells}}.dump(2);
}

} // namespace foldsimplex
