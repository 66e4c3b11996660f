#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "foldsimplex/analysis.hpp"
#include "foldsimplex/error.hpp"
#include "foldsimplex/inference.hpp"
#include "foldsimplex/model.hpp"
#include "foldsimplex/presets.hpp"
#include "support.hpp"

using namespace foldsimplex;

namespace {

FoldedNormalParams params(double alpha, double p, const Vector& mu, const Matrix& sigma) {
    return make_params(alpha, p, mu, sigma);
}

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

} // namespace

TEST_CASE("normal kernel matches the closed form") {
    Matrix s(2, 2);
    s << 2.0, 0.0, 0.0, 0.5;
    const NormalKernel k(vec2(1.0, -1.0), s);
    const double expected = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(1.0) - 0.5 * (0.25 / 2.0 + 1.0 / 0.5);
    CHECK(k.log_pdf(vec2(1.5, 0.0)) == doctest::Approx(expected));
    Matrix rows(2, 2);
    rows << 1.5, 0.0, 1.0, -1.0;
    CHECK(k.log_pdf_rows(rows)[0] == doctest::Approx(expected));

    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(NormalKernel(vec2(0, 0), bad), Error);
}

TEST_CASE("parameter validation") {
    const Matrix s = presets::contour_sigma_narrow();
    CHECK_THROWS_AS(make_params(1.5, 1.0, vec2(0, 0), s), Error);
    CHECK_THROWS_AS(make_params(0.5, -0.1, vec2(0, 0), s), Error);
    CHECK_THROWS_AS(make_params(0.0, 0.5, vec2(0, 0), s), Error);
    Matrix asym = s;
    asym(0, 1) += 1e-3;
    CHECK_THROWS_AS(make_params(0.5, 1.0, vec2(0, 0), asym), Error);
    CHECK_NOTHROW(make_params(0.0, 1.0, vec2(0, 0), s));
}

TEST_CASE("density pieces are consistent") {
    const FoldedNormalParams theta = params(1.0, 0.8, presets::contour_mu(), presets::contour_sigma_wide());
    Vector xv(3);
    xv << 0.2, 0.5, 0.3;
    const Composition x(xv);
    const BranchLogDensities b = branch_log_densities(x, theta);
    CHECK(log_density(x, theta) == doctest::Approx(std::log(0.8 * std::exp(b.log_f0) + 0.2 * std::exp(b.log_f1))));
    CHECK(fold_log_density(x, theta) == doctest::Approx(std::log(std::exp(b.log_f0) + std::exp(b.log_f1))));
    FoldedNormalParams one = theta;
    one.p = 1.0;
    CHECK(log_density(x, one) == doctest::Approx(b.log_f0));

    // alpha -> 0: the inside branch becomes the logistic normal and the folded branch vanishes.
    const FoldedNormalParams small = params(1e-6, 1.0, vec2(0.2, -0.1), presets::contour_sigma_narrow());
    const FoldedNormalParams zero = params(0.0, 1.0, vec2(0.2, -0.1), presets::contour_sigma_narrow());
    CHECK(fold_log_density(x, small) == doctest::Approx(log_density(x, zero)).epsilon(1e-5));
    CHECK(log_density(x, zero) == doctest::Approx(logistic_normal_log_density(x, zero.mu, zero.sigma)));
}

TEST_CASE("the fold density integrates to one") {
    struct Setting {
        double alpha;
        Vector mu;
        Matrix sigma;
    };
    const std::array<Setting, 4> settings{{
        {1.0, presets::contour_mu(), presets::contour_sigma_narrow()},
        {1.0, presets::contour_mu(), presets::contour_sigma_wide()},
        {-0.5, vec2(0.4, -0.3), presets::contour_sigma_narrow()},
        {0.0, vec2(0.4, -0.3), presets::contour_sigma_narrow()},
    }};
    std::uint64_t seed = 1;
    for (const Setting& s : settings) {
        const FoldedNormalParams theta = params(s.alpha, 1.0, s.mu, s.sigma);
        const Vector shape = testsupport::dirichlet_moments(sample(theta, 20000, seed));
        const auto e = testsupport::integrate_simplex(
            [&](const Composition& x) { return fold_log_density(x, theta); }, shape, 200000, ++seed);
        CAPTURE(s.alpha);
        CAPTURE(e.se);
        CHECK(e.mean == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("the p-weighted mixture integrates to p pA + (1-p)(1-pA)") {
    const FoldedNormalParams base = params(1.0, 1.0, presets::contour_mu(), presets::contour_sigma_wide());
    const double pA = 1.0 - outside_probability(base, 2000000, 5).total;
    const Vector shape = testsupport::dirichlet_moments(sample(base, 20000, 6));
    for (double p : {0.3, 0.9}) {
        FoldedNormalParams theta = base;
        theta.p = p;
        const auto e = testsupport::integrate_simplex([&](const Composition& x) { return log_density(x, theta); },
                                                      shape, 200000, 7);
        CHECK(e.mean == doctest::Approx(p * pA + (1.0 - p) * (1.0 - pA)).epsilon(0.01));
    }
}

TEST_CASE("sampler matches the fold density (chi-square over grid cells)") {
    const FoldedNormalParams theta = params(1.0, 1.0, presets::contour_mu(), presets::contour_sigma_wide());
    constexpr int res = 8;
    constexpr int fine = 24;
    constexpr int n = 200000;

    // Cell id of a point: up-triangles then down-triangles of the res-grid.
    auto cell_of = [](double x1, double x2) {
        const double u = x1 * res;
        const double v = x2 * res;
        const int i = std::min(static_cast<int>(u), res - 1);
        const int j = std::min(static_cast<int>(v), res - 1 - i);
        const bool down = (u - i) + (v - j) > 1.0;
        return (i * res + j) * 2 + (down ? 1 : 0);
    };

    std::vector<double> expected(2 * res * res, 0.0);
    const double h = 1.0 / (res * fine);
    const double area = 0.5 * h * h;
    for (int a = 0; a < res * fine; ++a) {
        for (int b = 0; a + b < res * fine; ++b) {
            for (int down = 0; down < 2; ++down) {
                if (down && a + b + 2 > res * fine) {
                    continue;
                }
                const double x1 = (a + (down ? 2.0 : 1.0) / 3.0) * h;
                const double x2 = (b + (down ? 2.0 : 1.0) / 3.0) * h;
                Vector x(3);
                x << x1, x2, 1.0 - x1 - x2;
                expected[static_cast<std::size_t>(cell_of(x1, x2))] +=
                    area * std::exp(fold_log_density(Composition(x), theta));
            }
        }
    }
    std::vector<double> observed(expected.size(), 0.0);
    const DataMatrix draws = sample(theta, n, 11);
    for (int r = 0; r < n; ++r) {
        observed[static_cast<std::size_t>(cell_of(draws.values()(r, 0), draws.values()(r, 1)))] += 1.0;
    }
    double chi2 = 0.0;
    int cells = 0;
    for (std::size_t c = 0; c < expected.size(); ++c) {
        const double e = expected[c] * n;
        if (e < 5.0) {
            continue;
        }
        chi2 += (observed[c] - e) * (observed[c] - e) / e;
        ++cells;
    }
    const double limit = boost::math::quantile(boost::math::chi_squared_distribution<double>(cells - 1), 0.999);
    CAPTURE(cells);
    CHECK(chi2 < limit);
}

TEST_CASE("sampling is reproducible and tags branches by region") {
    const FoldedNormalParams theta = params(1.0, 1.0, presets::contour_mu(), presets::contour_sigma_narrow());
    const SampleResult a = sample_with_branches(theta, 50000, 42);
    const SampleResult b = sample_with_branches(theta, 50000, 42);
    CHECK(a.data.values() == b.data.values());
    CHECK((a.data.values().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    const auto folded = std::count(a.branches.begin(), a.branches.end(), FoldBranch::folded);
    CHECK(static_cast<double>(folded) / 50000 == doctest::Approx(0.15).epsilon(0.05));
    CHECK_THROWS_AS(sample(theta, 0, 1), Error);

    const FoldedNormalParams zero = params(0.0, 1.0, vec2(0.1, 0.2), presets::contour_sigma_narrow());
    const SampleResult z = sample_with_branches(zero, 2000, 3);
    CHECK(std::count(z.branches.begin(), z.branches.end(), FoldBranch::folded) == 0);
    const Vector ilr_mean = ilr_rows(z.data.values()).colwise().mean().transpose();
    CHECK((ilr_mean - zero.mu).norm() < 0.1);
}
