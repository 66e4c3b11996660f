#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "foldsimplex/analysis.hpp"
#include "foldsimplex/error.hpp"
#include "foldsimplex/inference.hpp"
#include "foldsimplex/presets.hpp"
#include "support.hpp"

using namespace foldsimplex;

namespace {

Matrix random_spd(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> normal;
    Matrix A(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            A(i, j) = normal(rng);
        }
    }
    return A * A.transpose() + 0.1 * Matrix::Identity(d, d);
}

FoldedNormalParams contour_params(const Matrix& sigma) {
    FoldedNormalParams theta = make_params(1.0, 1.0, presets::contour_mu(), sigma);
    theta.p = 1.0 - outside_probability(theta, 1000000, 1).total;
    return theta;
}

} // namespace

TEST_CASE("Foerstner distance is a metric") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix A = random_spd(rng, 4);
        const Matrix B = random_spd(rng, 4);
        const Matrix C = random_spd(rng, 4);
        CHECK(covariance_distance(A, A) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(covariance_distance(A, B) == doctest::Approx(covariance_distance(B, A)).epsilon(1e-10));
        CHECK(covariance_distance(A, C) <= covariance_distance(A, B) + covariance_distance(B, C) + 1e-10);
    }
    const Matrix I = Matrix::Identity(3, 3);
    CHECK(covariance_distance(2.5 * I, I) == doctest::Approx(std::sqrt(3.0) * std::log(2.5)));
    Matrix singular = I;
    singular(2, 2) = 0.0;
    CHECK_THROWS_AS(covariance_distance(I, singular), Error);
    CHECK_THROWS_AS(covariance_distance(I, Matrix::Identity(2, 2)), Error);
}

TEST_CASE("Euclidean mean distance") {
    Vector a(2), b(2);
    a << 0, 0;
    b << 3, 4;
    CHECK(mean_distance(a, b) == doctest::Approx(5.0));
    CHECK(mean_distance(a, a) == 0.0);
    CHECK_THROWS_AS(mean_distance(a, Vector::Zero(3)), Error);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        Vector x(5), y(5), z(5);
        for (int i = 0; i < 5; ++i) {
            x[i] = normal(rng);
            y[i] = normal(rng);
            z[i] = normal(rng);
        }
        CHECK(mean_distance(x, z) <= mean_distance(x, y) + mean_distance(y, z) + 1e-12);
    }
}

TEST_CASE("alpha-means") {
    // Tight cluster: nothing is folded, so the alpha = 1 fit is the sample mean of the rows.
    Vector centre(3);
    centre << 0.3, 0.3, 0.4;
    const Vector mu = z_alpha(Composition(centre), 1.0).values();
    const DataMatrix data = sample(make_params(1.0, 1.0, mu, 1e-4 * Matrix::Identity(2, 2)), 300, 4);
    const FitResult fit = em_fit(data, 1.0);
    CHECK(fit.params.p == 1.0);
    const Vector arithmetic = data.values().colwise().mean().transpose();
    CHECK((frechet_mean(fit).parts() - arithmetic).cwiseAbs().maxCoeff() < 1e-9);

    const DataMatrix arctic = testsupport::arctic_lake();
    Vector geometric = arctic.values().array().log().colwise().mean().exp().transpose();
    geometric /= geometric.sum();
    CHECK((frechet_mean(loglik_alpha0(arctic)).parts() - geometric).cwiseAbs().maxCoeff() < 1e-12);

    FitResult unconverged = fit;
    unconverged.converged = false;
    CHECK_THROWS_AS(frechet_mean(unconverged), Error);
}

TEST_CASE("simplex PCA eigenvalues are those of Sigma plus a zero") {
    const DataMatrix arctic = testsupport::arctic_lake();
    for (double alpha : {0.0, 0.362, 1.0}) {
        const FitResult fit = fit_at(arctic, alpha);
        const PcaResult pca = simplex_pca(fit, 2);
        const Eigen::SelfAdjointEigenSolver<Matrix> direct(fit.params.sigma);
        CHECK(pca.eigenvalues.size() == 3);
        CHECK(pca.eigenvalues[0] == doctest::Approx(direct.eigenvalues()[1]));
        CHECK(pca.eigenvalues[1] == doctest::Approx(direct.eigenvalues()[0]));
        CHECK(std::abs(pca.eigenvalues[2]) < 1e-12);
        const Vector null = pca.eigenvectors.col(2);
        CHECK(std::abs(std::abs(null.sum()) - std::sqrt(3.0)) < 1e-9);

        CHECK(pca.curves.size() == 2);
        CHECK(pca.curves[0].rows() == 61);
        CHECK((pca.curves[0].rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        CHECK((pca.curves[0].row(30).transpose() - frechet_mean(fit).parts()).norm() < 1e-12);
        CHECK(pca.grid[0][60] == doctest::Approx(3.0 * std::sqrt(pca.eigenvalues[0])));
    }
    CHECK_THROWS_AS(simplex_pca(fit_at(arctic, 0.5), 3), Error);
}

TEST_CASE("contour grid layout and validation") {
    const FoldedNormalParams theta = contour_params(presets::contour_sigma_narrow());
    const ContourGrid g = contour_grid(theta, 20);
    CHECK(g.index.size() == 21 * 22 / 2);
    int undefined = 0;
    for (Eigen::Index r = 0; r < g.log_density.size(); ++r) {
        undefined += std::isnan(g.log_density[r]) ? 1 : 0;
    }
    CHECK(undefined == 3 * 20);
    const int r = g.node(4, 7);
    CHECK(g.index[static_cast<std::size_t>(r)] == std::array<int, 3>{4, 7, 9});
    CHECK(g.node(15, 6) == -1);
    Vector x(3);
    x << 0.2, 0.35, 0.45;
    CHECK(g.log_density[r] == doctest::Approx(log_density(Composition(x), theta)));

    CHECK_THROWS_AS(contour_grid(theta, 9), Error);
    const FoldedNormalParams d5 = make_params(0.5, 1.0, presets::study_mu_positive(), presets::study_sigma());
    try {
        contour_grid(d5, 50);
        FAIL("expected invalid_dimension");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_dimension);
    }
}

TEST_CASE("contour modes and grid mass") {
    const FoldedNormalParams narrow = contour_params(presets::contour_sigma_narrow());
    const FoldedNormalParams wide = contour_params(presets::contour_sigma_wide());
    for (GridDensity density : {GridDensity::mixture, GridDensity::fold}) {
        CHECK(count_modes(contour_grid(narrow, 200, density)) == 1);
        CHECK(count_modes(contour_grid(wide, 200, density)) >= 2);
    }
    CHECK(count_local_maxima(contour_grid(wide, 200)) >= 2);
    CHECK(grid_mass(contour_grid(narrow, 200, GridDensity::fold)) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(grid_mass(contour_grid(wide, 200, GridDensity::fold)) == doctest::Approx(1.0).epsilon(0.02));
    const double p = narrow.p;
    CHECK(grid_mass(contour_grid(narrow, 200)) == doctest::Approx(p * p + (1 - p) * (1 - p)).epsilon(0.02));

    const FoldedNormalParams logistic = make_params(0.0, 1.0, presets::contour_mu(), presets::contour_sigma_narrow());
    CHECK(grid_mass(contour_grid(logistic, 300)) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("mode counting on a hand-built grid") {
    ContourGrid g;
    g.resolution = 10;
    for (int i = 0; i <= 10; ++i) {
        for (int j = 0; i + j <= 10; ++j) {
            g.index.push_back({i, j, 10 - i - j});
        }
    }
    g.log_density = Vector::Constant(static_cast<Eigen::Index>(g.index.size()), 0.0);
    g.log_density[g.node(2, 3)] = 1.0;
    g.log_density[g.node(6, 2)] = 0.5;
    g.log_density[g.node(3, 5)] = 0.005;  // below the persistence threshold
    CHECK(count_local_maxima(g) == 3);
    CHECK(count_modes(g) == 2);
    CHECK(count_modes(g, 0.0) == 3);
}

TEST_CASE("recovery study is deterministic and well-formed") {
    StudyConfig cfg;
    cfg.alphas = {0.5};
    cfg.kappas = {1.0, 3.0};
    cfg.ns = {100, 300};
    cfg.replications = 4;
    cfg.base_mu = presets::study_mu_positive();
    cfg.base_sigma = presets::study_sigma();
    cfg.seed = 17;
    cfg.truth_draws = 100000;
    cfg.estimate_alpha = true;
    const StudyReport a = recovery_study(cfg);
    const StudyReport b = recovery_study(cfg);
    REQUIRE(a.cells.size() == 4);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        const StudyCell& c = a.cells[i];
        CHECK(c.mean_mu_error == b.cells[i].mean_mu_error);
        CHECK(c.mean_alpha_bias == b.cells[i].mean_alpha_bias);
        CHECK(c.completed + c.failures == 4);
        CHECK(c.mean_mu_error >= 0.0);
        CHECK(c.mean_sigma_error >= 0.0);
        CHECK(c.mean_p_error >= 0.0);
        CHECK(std::isfinite(c.mean_abs_alpha_error));
        CHECK(c.nonmonotone_traces == 0);
    }
    CHECK(a.cells[0].kappa == 1.0);
    CHECK(a.cells[1].n == 300);
    CHECK(a.cells[2].true_p < a.cells[0].true_p);

    std::ostringstream csv;
    write_study_csv(csv, a);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(text.rfind("alpha,kappa,n,", 0) == 0);
    const auto parsed = nlohmann::json::parse(study_json(a));
    CHECK(parsed["cells"].size() == 4);

    StudyConfig bad = cfg;
    bad.kappas = {0.0};
    CHECK_THROWS_AS(recovery_study(bad), Error);
    bad = cfg;
    bad.replications = 0;
    CHECK_THROWS_AS(recovery_study(bad), Error);
}
