#include "doctest.h"

#include "prnf/density.hpp"
#include "prnf/error.hpp"
#include "prnf/linalg.hpp"
#include "prnf/rng.hpp"

#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace prnf;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double gauss_logpdf(double y, double mean, double sd) {
    const double z = (y - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * kLog2Pi;
}

// Sample covariance (denominator n) of draws stored row-wise.
Matrix sample_cov(const Matrix& draws) {
    std::vector<double> mean, sd;
    column_mean_std(draws, mean, sd);
    const int dim = draws.cols();
    Matrix c(dim, dim);
    for (int r = 0; r < draws.rows(); ++r)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                c(i, j) += (draws(r, i) - mean[static_cast<std::size_t>(i)]) *
                           (draws(r, j) - mean[static_cast<std::size_t>(j)]);
    for (std::size_t k = 0; k < c.size(); ++k) c.data()[k] /= draws.rows();
    return c;
}

Matrix draw_many(const NoiseSpec& spec, const std::vector<double>& f, long n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix out(static_cast<int>(n), spec.dim);
    for (long i = 0; i < n; ++i) noise_sample_into(spec, Matrix(), f, rng, out.row_ptr(static_cast<int>(i)));
    return out;
}

} // namespace

TEST_CASE("gaussian noise log density matches the scalar formula") {
    NoiseSpec homo = noise_gaussian(0.15);
    CHECK(noise_logpdf(homo, {0.4}, {0.55}) == doctest::Approx(gauss_logpdf(0.55, 0.4, 0.15)).epsilon(1e-14));

    NoiseSpec hetero = noise_gaussian(0.2, ScaleMode::Heteroscedastic);
    CHECK(noise_logpdf(hetero, {0.5}, {0.45}) == doctest::Approx(gauss_logpdf(0.45, 0.5, 0.1)).epsilon(1e-14));
    CHECK_THROWS_AS((void)noise_logpdf(hetero, {0.0}, {0.0}), DegenerateDensityError);

    NoiseSpec iso3 = noise_gaussian(std::sqrt(0.1), ScaleMode::Homoscedastic, 3);
    std::vector<double> f = {1.0, -2.0, 0.5}, y = {1.2, -2.2, 0.4};
    double want = 0.0;
    for (int j = 0; j < 3; ++j) want += gauss_logpdf(y[static_cast<std::size_t>(j)], f[static_cast<std::size_t>(j)], std::sqrt(0.1));
    CHECK(noise_logpdf(iso3, f, y) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("laplace noise log density matches the scalar formula") {
    NoiseSpec homo = noise_laplace(0.1);
    const double want = -std::log(2.0 * 0.1) - std::fabs(0.55 - 0.4) / 0.1;
    CHECK(noise_logpdf(homo, {0.4}, {0.55}) == doctest::Approx(want).epsilon(1e-14));
    NoiseSpec hetero = noise_laplace(0.15, ScaleMode::Heteroscedastic);
    const double b = 0.15 * 0.8;
    CHECK(noise_logpdf(hetero, {-0.8}, {-0.7}) ==
          doctest::Approx(-std::log(2.0 * b) - 0.1 / b).epsilon(1e-12));
}

TEST_CASE("two-component mixture log density is a symmetric log-sum-exp") {
    NoiseSpec mix = noise_mixture2(2, 0.1, 0.1);
    std::vector<double> f = {0.3, -0.4}, y = {0.35, -0.5};
    auto comp = [&](double sign) {
        double lp = 0.0;
        for (int j = 0; j < 2; ++j)
            lp += gauss_logpdf(y[static_cast<std::size_t>(j)],
                               f[static_cast<std::size_t>(j)] + sign * 0.1, std::sqrt(0.1));
        return lp;
    };
    const double want = std::log(0.5 * std::exp(comp(1.0)) + 0.5 * std::exp(comp(-1.0)));
    CHECK(noise_logpdf(mix, f, y) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("correlated gaussian log density matches an explicit 2x2 inverse") {
    Matrix sigma = Matrix::from({{2.0, 0.5}, {0.5, 1.0}});
    NoiseSpec spec = noise_correlated(sigma);
    std::vector<double> f = {1.0, 2.0}, y = {1.6, 1.7};
    const double det = 2.0 * 1.0 - 0.25;
    const double r0 = 0.6, r1 = -0.3;
    const double quad = (1.0 * r0 * r0 - 2 * 0.5 * r0 * r1 + 2.0 * r1 * r1) / det;
    const double want = -0.5 * quad - 0.5 * (2.0 * kLog2Pi + std::log(det));
    CHECK(noise_logpdf(spec, f, y) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sigma construction is seeded, symmetric and positive definite") {
    Matrix s1 = correlated_sigma(5, 7);
    Matrix s2 = correlated_sigma(5, 7);
    CHECK(s1 == s2);
    Matrix s3 = correlated_sigma(5, 8);
    CHECK_FALSE(s1 == s3);
    for (int i = 0; i < 5; ++i) {
        CHECK(s1(i, i) >= 0.05);
        for (int j = 0; j < 5; ++j) CHECK(s1(i, j) == doctest::Approx(s1(j, i)).epsilon(1e-15));
    }
    CHECK_NOTHROW((void)cholesky(s1));

    // Straight-line rebuild of the documented B·Bᵀ/s + 0.05·I construction.
    Rng rng(7);
    Matrix b(5, 5);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 5; ++k) acc += b(i, k) * b(j, k);
            const double want = acc / 5.0 + (i == j ? 0.05 : 0.0);
            CHECK(s1(i, j) == doctest::Approx(want).epsilon(1e-14));
        }
}

TEST_CASE("noise draws reproduce their analytic moments") {
    const long n = 100000;

    NoiseSpec gauss = noise_gaussian(0.15);
    Matrix d = draw_many(gauss, {0.4}, n, 1);
    std::vector<double> mean, sd;
    column_mean_std(d, mean, sd);
    CHECK(std::fabs(mean[0] - 0.4) < 0.005);
    CHECK(sd[0] == doctest::Approx(0.15).epsilon(0.02));

    NoiseSpec lap = noise_laplace(0.1);
    d = draw_many(lap, {-1.0}, n, 2);
    column_mean_std(d, mean, sd);
    CHECK(std::fabs(mean[0] + 1.0) < 0.004);
    CHECK(sd[0] == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(0.03));

    NoiseSpec mix = noise_mixture2(2, 0.1, 0.1);
    d = draw_many(mix, {0.2, -0.3}, n, 3);
    Matrix cov = sample_cov(d);
    column_mean_std(d, mean, sd);
    CHECK(std::fabs(mean[0] - 0.2) < 0.01);
    CHECK(std::fabs(mean[1] + 0.3) < 0.01);
    CHECK(cov(0, 0) == doctest::Approx(0.11).epsilon(0.05));
    CHECK(std::fabs(cov(0, 1) - 0.01) < 0.004);

    NoiseSpec corr = noise_correlated_seeded(3, 5);
    std::vector<double> f3 = {0.0, 1.0, -1.0};
    d = draw_many(corr, f3, n, 4);
    cov = sample_cov(d);
    Matrix want_cov = noise_cov(corr, f3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::fabs(cov(i, j) - want_cov(i, j)) < 0.03);

    // Heteroscedastic zero of f: the draw collapses to f exactly.
    NoiseSpec hz = noise_gaussian(0.2, ScaleMode::Heteroscedastic);
    std::vector<double> out = noise_sample(hz, {0.0}, 9);
    CHECK(out[0] == 0.0);
    CHECK(noise_std(hz, {0.0})[0] == 0.0);
}

TEST_CASE("analytic std and cov helpers agree across families") {
    NoiseSpec lap = noise_laplace(0.1);
    CHECK(noise_std(lap, {0.3})[0] == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(noise_cov(lap, {0.3})(0, 0) == doctest::Approx(0.02).epsilon(1e-15));

    NoiseSpec mix = noise_mixture2(2, 0.1, 0.1);
    Matrix c = noise_cov(mix, {0.0, 0.0});
    CHECK(c(0, 0) == doctest::Approx(0.11).epsilon(1e-15));
    CHECK(c(0, 1) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(noise_std(mix, {0.0, 0.0})[0] == doctest::Approx(std::sqrt(0.11)).epsilon(1e-15));
}

TEST_CASE("scott bandwidth follows the rule and degenerates loudly") {
    Matrix samples = Matrix::from({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}});
    KdeModel kde = kde_fit(samples, BandwidthRule::Scott);
    const double want = std::sqrt(2.0) * std::pow(5.0, -1.0 / 5.0);
    CHECK(kde.bandwidth[0] == doctest::Approx(want).epsilon(1e-14));

    Matrix two_col = Matrix::from({{0.0, 7.0}, {1.0, 7.0}, {2.0, 7.0}});
    CHECK_THROWS_AS((void)kde_fit(two_col, BandwidthRule::Scott), DegenerateDensityError);
    CHECK_THROWS_AS((void)kde_fit(Matrix::from({{1.0}}), BandwidthRule::Scott), Error);
    CHECK_THROWS_AS((void)kde_fit(samples, BandwidthRule::Fixed, {0.0}), DegenerateDensityError);
    KdeModel fixed = kde_fit(samples, BandwidthRule::Fixed, {0.5});
    CHECK(fixed.bandwidth[0] == 0.5);
}

TEST_CASE("kde log density equals the direct kernel average and floors far out") {
    Matrix samples = Matrix::from({{0.0, 1.0}, {0.5, -0.2}, {-1.0, 0.3}, {0.2, 0.0}});
    KdeModel kde = kde_fit(samples, BandwidthRule::Fixed, {0.4, 0.7});
    const double pt[2] = {0.1, 0.2};
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        double kern = 1.0;
        for (int j = 0; j < 2; ++j) {
            const double z = (pt[j] - samples(k, j)) / kde.bandwidth[static_cast<std::size_t>(j)];
            kern *= std::exp(-0.5 * z * z) /
                    (kde.bandwidth[static_cast<std::size_t>(j)] * std::sqrt(2.0 * std::numbers::pi));
        }
        acc += kern;
    }
    CHECK(kde_logpdf(kde, pt) == doctest::Approx(std::log(acc / 4.0)).epsilon(1e-12));

    const double far[2] = {1e6, -1e6};
    CHECK(kde_logpdf(kde, far) == -745.0);
}

TEST_CASE("grid spec midpoints and step") {
    GridSpec g = GridSpec::linear(0.0, 1.0, 4);
    CHECK(g.step(0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.point(0, 0) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(g.point(0, 3) == doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("riemann KL reproduces gaussian closed forms") {
    GridSpec grid = GridSpec::linear(-12.0, 13.0, 100000);
    auto p = [](double y) { return gauss_logpdf(y, 0.0, 1.0); };
    auto q_shift = [](double y) { return gauss_logpdf(y, 1.0, 1.0); };
    auto q_wide = [](double y) { return gauss_logpdf(y, 0.0, 2.0); };
    CHECK(kl_riemann_1d(p, q_shift, grid) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(kl_riemann_1d(p, q_wide, grid) ==
          doctest::Approx(std::log(2.0) - 3.0 / 8.0).epsilon(1e-6));
    CHECK(kl_riemann_1d(p, p, grid) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("riemann KL treats p = 0 as zero and floors q") {
    GridSpec grid = GridSpec::linear(-1.0, 1.0, 1000);
    auto p = [](double y) { return y < 0 ? -std::numeric_limits<double>::infinity() : 0.0; };
    auto q = [](double y) { return y < 0 ? 0.0 : -std::numeric_limits<double>::infinity(); };
    const double kl = kl_riemann_1d(p, q, grid);
    CHECK(std::isfinite(kl));
    CHECK(kl > 100.0); // q floored at 1e-300 where p lives
}

TEST_CASE("closed-form gaussian KL matches a straight-line evaluation") {
    std::vector<double> m1 = {0.5, -0.2}, m2 = {0.0, 0.0};
    Matrix c1 = Matrix::from({{2.0, 0.3}, {0.3, 1.0}});
    Matrix c2 = Matrix::identity(2);
    const double det1 = 2.0 * 1.0 - 0.09;
    const double tr = 2.0 + 1.0; // Σ2 = I
    const double quad = 0.5 * 0.5 + 0.2 * 0.2;
    const double want = 0.5 * (tr + quad - 2.0 + std::log(1.0 / det1));
    CHECK(kl_gaussian_closed(m1, c1, m2, c2) == doctest::Approx(want).epsilon(1e-12));
    CHECK(kl_gaussian_closed(m1, c1, m1, c1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    // 1-D special case agrees with quadrature.
    GridSpec grid = GridSpec::linear(-14.0, 14.0, 100000);
    Matrix v1 = Matrix::from({{1.44}}), v2 = Matrix::from({{1.0}});
    auto p = [](double y) { return gauss_logpdf(y, 0.3, 1.2); };
    auto q = [](double y) { return gauss_logpdf(y, 0.0, 1.0); };
    CHECK(kl_gaussian_closed({0.3}, v1, {0.0}, v2) ==
          doctest::Approx(kl_riemann_1d(p, q, grid)).epsilon(1e-6));
}

TEST_CASE("monte carlo KL agrees with the closed form within its own error bar") {
    auto p_log = [](const double* y) { return gauss_logpdf(*y, 0.0, 1.0); };
    auto q_log = [](const double* y) { return gauss_logpdf(*y, 0.7, 1.3); };
    auto p_draw = [](Rng& rng, double* out) { *out = rng.normal(); };
    McEstimate mc = kl_monte_carlo(p_log, q_log, p_draw, 1, 200000, 17);
    const double want = kl_gaussian_closed({0.0}, Matrix::from({{1.0}}), {0.7}, Matrix::from({{1.69}}));
    CHECK(mc.std_error > 0.0);
    CHECK(mc.std_error < 0.01);
    CHECK(std::fabs(mc.value - want) < 4.0 * mc.std_error);

    McEstimate again = kl_monte_carlo(p_log, q_log, p_draw, 1, 200000, 17);
    CHECK(mc.value == again.value); // seeded determinism
}
